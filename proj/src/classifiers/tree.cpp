#include "ewm/models.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ewm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Weighted Gini impurity (up to the constant factor 2) of a binary node.
inline double impurity(double n, double positives) {
  return n > 0 ? positives * (n - positives) / n : 0.0;
}

// Grows a tree over sample positions 0..m-1 (rows may repeat, as in a
// bootstrap). Each feature keeps its positions presorted by value; a node owns
// the same range [begin, end) in every order, and splitting stably partitions
// each order so that children stay sorted.
class Grower {
 public:
  Grower(const Matrix& X, const Labels& y, const std::vector<Index>& rows, const TreeOptions& opt,
         std::mt19937_64* rng, std::vector<TreeNode>& nodes)
      : opt_(opt), rng_(rng), nodes_(nodes) {
    m_ = static_cast<Index>(rows.size());
    g_ = X.cols();
    total_ = static_cast<double>(m_);
    values_.resize(m_, g_);
    label_.resize(static_cast<std::size_t>(m_));
    for (Index p = 0; p < m_; ++p) {
      values_.row(p) = X.row(rows[static_cast<std::size_t>(p)]);
      label_[static_cast<std::size_t>(p)] = y[rows[static_cast<std::size_t>(p)]] != 0 ? 1 : 0;
    }
    order_.resize(static_cast<std::size_t>(m_ * g_));
    std::vector<std::pair<double, int>> keyed(static_cast<std::size_t>(m_));
    for (Index f = 0; f < g_; ++f) {
      for (Index p = 0; p < m_; ++p) keyed[static_cast<std::size_t>(p)] = {values_(p, f), static_cast<int>(p)};
      std::sort(keyed.begin(), keyed.end());
      for (Index p = 0; p < m_; ++p) order_[static_cast<std::size_t>(f * m_ + p)] = keyed[static_cast<std::size_t>(p)].second;
    }
    goes_left_.resize(static_cast<std::size_t>(m_));
    buffer_.resize(static_cast<std::size_t>(m_));
    features_.resize(static_cast<std::size_t>(g_));
    std::iota(features_.begin(), features_.end(), Index{0});
  }

  int build(Index begin, Index end) {
    const Index n = end - begin;
    Index pos = 0;
    const int* base = &order_[static_cast<std::size_t>(begin)];
    for (Index i = 0; i < n; ++i) pos += label_[static_cast<std::size_t>(base[i])];
    TreeNode node;
    node.count = n;
    node.prob = n > 0 ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;
    node.risk = static_cast<double>(n) * node.prob * (1 - node.prob) / total_;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (pos == 0 || pos == n || n < 2 * opt_.min_leaf) return id;

    const double parent = impurity(static_cast<double>(n), static_cast<double>(pos));
    double best = parent - 1e-12;
    Index best_feature = -1;
    double best_threshold = 0;
    for (Index f : candidate_features()) {
      const int* ord = &order_[static_cast<std::size_t>(f * m_ + begin)];
      double left_pos = 0;
      for (Index i = 0; i + 1 < n; ++i) {
        left_pos += label_[static_cast<std::size_t>(ord[i])];
        const Index nl = i + 1, nr = n - nl;
        if (nl < opt_.min_leaf) continue;
        if (nr < opt_.min_leaf) break;
        const double lo = values_(ord[i], f);
        const double hi = values_(ord[i + 1], f);
        if (!(lo < hi)) continue;
        const double score = impurity(static_cast<double>(nl), left_pos) +
                             impurity(static_cast<double>(nr), static_cast<double>(pos) - left_pos);
        if (score < best) {
          best = score;
          best_feature = f;
          best_threshold = lo + (hi - lo) / 2;
        }
      }
    }
    if (best_feature < 0) return id;

    Index nl = 0;
    for (Index i = 0; i < n; ++i) {
      const int p = base[i];
      const bool left = values_(p, best_feature) <= best_threshold;
      goes_left_[static_cast<std::size_t>(p)] = left;
      nl += left;
    }
    for (Index f = 0; f < g_; ++f) {
      int* ord = &order_[static_cast<std::size_t>(f * m_ + begin)];
      Index l = 0, r = nl;
      for (Index i = 0; i < n; ++i) {
        const int p = ord[i];
        buffer_[static_cast<std::size_t>(goes_left_[static_cast<std::size_t>(p)] ? l++ : r++)] = p;
      }
      std::copy(buffer_.begin(), buffer_.begin() + n, ord);
    }
    nodes_[static_cast<std::size_t>(id)].feature = static_cast<int>(best_feature);
    nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int left = build(begin, begin + nl);
    nodes_[static_cast<std::size_t>(id)].left = left;
    const int right = build(begin + nl, end);
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  Index size() const { return m_; }

 private:
  const std::vector<Index>& candidate_features() {
    sampled_ = features_;
    if (opt_.mtry <= 0 || opt_.mtry >= g_ || rng_ == nullptr) return sampled_;
    for (Index i = 0; i < opt_.mtry; ++i) {
      std::uniform_int_distribution<Index> pick(i, g_ - 1);
      std::swap(sampled_[static_cast<std::size_t>(i)], sampled_[static_cast<std::size_t>(pick(*rng_))]);
    }
    sampled_.resize(static_cast<std::size_t>(opt_.mtry));
    return sampled_;
  }

  const TreeOptions& opt_;
  std::mt19937_64* rng_;
  std::vector<TreeNode>& nodes_;
  Index m_ = 0, g_ = 0;
  double total_ = 1;
  Matrix values_;
  std::vector<int> label_;
  std::vector<int> order_;
  std::vector<char> goes_left_;
  std::vector<int> buffer_;
  std::vector<Index> features_, sampled_;
};

// Complexity level at which each internal node is collapsed by weakest-link
// pruning; +inf for leaves. Children are stored after their parents.
std::vector<double> collapse_alphas(const std::vector<TreeNode>& nodes) {
  const std::size_t m = nodes.size();
  std::vector<double> alpha(m, kInf);
  std::vector<char> collapsed(m, 0);
  std::vector<double> subtree_risk(m);
  std::vector<double> leaves(m);
  while (true) {
    for (std::size_t k = m; k-- > 0;) {
      const TreeNode& t = nodes[k];
      if (t.leaf() || collapsed[k]) {
        subtree_risk[k] = t.risk;
        leaves[k] = 1;
      } else {
        const auto l = static_cast<std::size_t>(t.left), r = static_cast<std::size_t>(t.right);
        subtree_risk[k] = subtree_risk[l] + subtree_risk[r];
        leaves[k] = leaves[l] + leaves[r];
      }
    }
    // Active internal nodes are reachable from the root through uncollapsed nodes.
    double weakest = kInf;
    std::vector<std::size_t> stack{0};
    std::vector<std::size_t> active;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      const TreeNode& t = nodes[k];
      if (t.leaf() || collapsed[k]) continue;
      active.push_back(k);
      weakest = std::min(weakest, (t.risk - subtree_risk[k]) / (leaves[k] - 1));
      stack.push_back(static_cast<std::size_t>(t.left));
      stack.push_back(static_cast<std::size_t>(t.right));
    }
    if (active.empty()) break;
    const double level = std::max(0.0, weakest);
    const double cut = weakest + 1e-12 * std::max(1.0, std::abs(weakest));
    for (std::size_t k : active) {
      const TreeNode& t = nodes[k];
      if ((t.risk - subtree_risk[k]) / (leaves[k] - 1) <= cut) {
        collapsed[k] = 1;
        alpha[k] = level;
      }
    }
    // Descendants of freshly collapsed nodes disappear at the same level.
    for (std::size_t k = 0; k < m; ++k) {
      if (nodes[k].leaf() || !collapsed[k]) continue;
      for (int c : {nodes[k].left, nodes[k].right})
        if (!nodes[static_cast<std::size_t>(c)].leaf() && !collapsed[static_cast<std::size_t>(c)]) {
          collapsed[static_cast<std::size_t>(c)] = 1;
          alpha[static_cast<std::size_t>(c)] = alpha[k];
        }
    }
  }
  return alpha;
}

double predict_at(const std::vector<TreeNode>& nodes, const std::vector<double>& alpha,
                  const Eigen::Ref<const Eigen::RowVectorXd>& x, double level) {
  std::size_t k = 0;
  while (!nodes[k].leaf() && alpha[k] > level)
    k = static_cast<std::size_t>(x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left
                                                                           : nodes[k].right);
  return nodes[k].prob;
}

}  // namespace

ClassificationTree ClassificationTree::grow(const Matrix& X, const Labels& y,
                                            const std::vector<Index>& rows,
                                            const TreeOptions& options, std::mt19937_64* rng) {
  if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
  if (options.min_leaf < 1) throw ConfigError("tree min_leaf must be >= 1");
  ClassificationTree tree;
  Grower grower(X, y, rows, options, rng, tree.nodes_);
  grower.build(0, grower.size());
  return tree;
}

double ClassificationTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  std::size_t k = 0;
  while (!nodes_[k].leaf())
    k = static_cast<std::size_t>(x[nodes_[k].feature] <= nodes_[k].threshold ? nodes_[k].left
                                                                             : nodes_[k].right);
  return nodes_[k].prob;
}

Vector ClassificationTree::predict(const Matrix& X) const {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
  return out;
}

Index ClassificationTree::leaf_count() const {
  return std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& t) { return t.leaf(); });
}

std::vector<double> ClassificationTree::pruning_sequence() const {
  std::vector<double> seq{0.0};
  for (double a : collapse_alphas(nodes_))
    if (a < kInf) seq.push_back(a);
  std::sort(seq.begin(), seq.end());
  seq.erase(std::unique(seq.begin(), seq.end()), seq.end());
  return seq;
}

ClassificationTree ClassificationTree::pruned(double alpha) const {
  const std::vector<double> collapse = collapse_alphas(nodes_);
  ClassificationTree out;
  // Copy reachable nodes in preorder, turning collapsed nodes into leaves.
  std::vector<std::pair<std::size_t, int>> stack{{0, -1}};
  std::vector<std::pair<int, bool>> parent_link;
  while (!stack.empty()) {
    const auto [k, parent] = stack.back();
    stack.pop_back();
    TreeNode t = nodes_[k];
    const bool cut = !t.leaf() && collapse[k] <= alpha;
    const int id = static_cast<int>(out.nodes_.size());
    if (parent >= 0) {
      auto& p = out.nodes_[static_cast<std::size_t>(parent)];
      (p.left < 0 ? p.left : p.right) = id;
    }
    const int left = t.left, right = t.right;
    if (cut || t.leaf()) {
      t.feature = -1;
      t.left = t.right = -1;
      out.nodes_.push_back(t);
      continue;
    }
    t.left = t.right = -1;
    out.nodes_.push_back(t);
    // Right pushed first so that the left child is visited (and linked) first.
    stack.push_back({static_cast<std::size_t>(right), id});
    stack.push_back({static_cast<std::size_t>(left), id});
  }
  return out;
}

ClassificationTree ClassificationTree::fit_pruned(const Matrix& X, const Labels& y, int min_leaf,
                                                  int folds, std::uint64_t seed) {
  const Index n = X.rows();
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  const TreeOptions opt{min_leaf, 0};
  const ClassificationTree full = grow(X, y, all, opt);
  const std::vector<double> seq = full.pruning_sequence();
  if (seq.size() == 1) return full;

  // Geometric midpoints of the complexity intervals; the last one prunes to the root.
  std::vector<double> levels;
  for (std::size_t k = 0; k + 1 < seq.size(); ++k) levels.push_back(std::sqrt(seq[k] * seq[k + 1]));
  levels.push_back(kInf);

  // Stratified fold labels.
  const int k_folds = static_cast<int>(std::min<Index>(folds, n));
  std::mt19937_64 rng(mix_seed(seed, 0x7265ULL));
  std::vector<int> fold(static_cast<std::size_t>(n));
  int next = 0;
  for (int cls : {1, 0}) {
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i)
      if ((y[i] != 0) == (cls == 1)) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    for (Index i : members) fold[static_cast<std::size_t>(i)] = next++ % k_folds;
  }

  std::vector<double> cv_error(levels.size(), 0.0);
  for (int f = 0; f < k_folds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    if (train.empty() || test.empty()) continue;
    const ClassificationTree t = grow(X, y, train, opt);
    const std::vector<double> collapse = collapse_alphas(t.nodes_);
    for (std::size_t k = 0; k < levels.size(); ++k)
      for (Index i : test) {
        const double e = (y[i] != 0 ? 1.0 : 0.0) - predict_at(t.nodes_, collapse, X.row(i), levels[k]);
        cv_error[k] += e * e;
      }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < levels.size(); ++k)
    if (cv_error[k] <= cv_error[best]) best = k;
  return full.pruned(levels[best]);
}

RandomForestModel RandomForestModel::fit(const Matrix& X, const Labels& y, int trees, int mtry,
                                         int min_leaf, std::uint64_t seed) {
  if (trees < 1) throw ConfigError("random forest needs at least one tree");
  RandomForestModel m;
  m.trees_.reserve(static_cast<std::size_t>(trees));
  const TreeOptions opt{min_leaf, mtry};
  for (int t = 0; t < trees; ++t) {
    std::mt19937_64 rng = tree_rng(seed, t);
    const std::vector<Index> rows = bootstrap_rows(rng, X.rows());
    m.trees_.push_back(ClassificationTree::grow(X, y, rows, opt, &rng));
  }
  return m;
}

std::mt19937_64 RandomForestModel::tree_rng(std::uint64_t seed, int t) {
  return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(t)));
}

Vector RandomForestModel::predict(const Matrix& X) const {
  Vector out = Vector::Zero(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    double s = 0;
    for (const auto& t : trees_) s += t.predict_row(X.row(i));
    out[i] = s / static_cast<double>(trees_.size());
  }
  return out;
}

std::vector<Index> bootstrap_rows(std::mt19937_64& rng, Index n) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = pick(rng);
  return rows;
}

}  // namespace ewm
