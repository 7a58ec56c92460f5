#include "ewm/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ewm {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string num(double v) { return format_number(v); }
std::string num(std::int64_t v) { return std::to_string(v); }

bool numeric_cell(const std::string& s, double& v) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

double parse_cell(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v;
  if (!numeric_cell(s, v)) throw DataError("expected a number, got '" + s + "'");
  return v;
}

std::vector<std::string> evaluation_cells(const EvaluationResult& r) {
  return {num(r.ur), num(r.ua), num(r.auc), num(r.tau_star), num(r.t1), num(r.t2),
          num(r.counts.tp), num(r.counts.fp), num(r.counts.fn), num(r.counts.tn)};
}

}  // namespace

void write_csv(std::ostream& out, const Table& t, const std::string& stamp) {
  if (!stamp.empty()) out << "# " << stamp << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

Table read_csv_table(std::istream& in) {
  Table t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (header) {
      t.header = std::move(cells);
      header = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

std::string render_text(const Table& t, int digits) {
  std::vector<std::vector<std::string>> cells{t.header};
  for (const auto& r : t.rows) {
    std::vector<std::string> out;
    for (const auto& c : r) {
      double v;
      if (numeric_cell(c, v) && c.find_first_of(".eE") != std::string::npos) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", digits, v);
        out.emplace_back(buf);
      } else {
        out.push_back(c);
      }
    }
    cells.push_back(std::move(out));
  }
  std::vector<std::size_t> width(t.header.size(), 0);
  // Width in code points so that the middle dot aligns.
  auto length = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
    return n;
  };
  for (const auto& r : cells)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], length(r[i]));
  std::ostringstream out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& r = cells[k];
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) {
      const std::size_t pad = width[i] - length(r[i]);
      if (i) out << "  ";
      if (i == 0) out << r[i] << std::string(pad, ' ');
      else out << std::string(pad, ' ') << r[i];
    }
    out << '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
    }
  }
  return out.str();
}

Table ranking_table(const RaceResult& race) {
  Table t;
  t.header = {"rank", "method", "kind", "ur", "ua", "auc", "tau_star", "t1", "t2",
              "tp", "fp", "fn", "tn", "in_sample_ur", "status"};
  std::vector<std::size_t> order(race.outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = race.outcomes[a];
    const auto& y = race.outcomes[b];
    if (x.failed != y.failed) return !x.failed;
    return !x.failed && x.result.ur > y.result.ur;
  });
  int rank = 0;
  for (std::size_t k : order) {
    const MethodOutcome& o = race.outcomes[k];
    std::vector<std::string> row{o.failed ? "-" : std::to_string(++rank), o.name,
                                 o.aggregate ? "aggregate" : "method"};
    if (o.failed) {
      for (int i = 0; i < 11; ++i) row.emplace_back("");
      row.push_back("failed: " + o.error);
    } else {
      for (auto& c : evaluation_cells(o.result)) row.push_back(std::move(c));
      row.push_back(num(o.in_sample_ur));
      row.emplace_back(o.warnings.empty() ? "ok" : "ok (" + std::to_string(o.warnings.size()) + " warnings)");
    }
    // Commas never appear inside cells.
    for (auto& c : row) std::replace(c.begin(), c.end(), ',', ';');
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table predictions_table(const RaceResult& race, const std::vector<PanelObservation>* obs) {
  Table t;
  t.header = {"method", "obs", "country", "quarter", "slot", "prob", "tau", "signal", "label", "usable"};
  for (const MethodOutcome& o : race.outcomes) {
    if (o.failed) continue;
    for (const Prediction& p : o.predictions) {
      const PanelObservation* ob = obs ? &(*obs)[p.obs] : nullptr;
      t.rows.push_back({o.name, std::to_string(p.obs), ob ? ob->country : "", ob ? ob->quarter.str() : "",
                        std::to_string(p.slot), num(p.prob), num(p.tau), std::to_string(p.signal),
                        std::to_string(p.label), p.usable ? "1" : "0"});
    }
  }
  return t;
}

Table robust_table(const RobustResult& r) {
  Table t;
  t.header = {"rank", "method", "kind", "ur_mean", "ur_se", "ur_ci_lo", "ur_ci_hi", "ur_t_star",
              "first_lower_ur", "auc_mean", "auc_se", "auc_ci_lo", "auc_ci_hi", "auc_t_star",
              "first_lower_auc", "replicates", "failed_replicates", "status"};
  std::vector<std::size_t> order(r.methods.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = r.methods[a];
    const auto& y = r.methods[b];
    if (x.failed != y.failed) return !x.failed;
    return !x.failed && x.ur.mean > y.ur.mean;
  });
  int rank = 0;
  for (std::size_t k : order) {
    const MethodRobustness& m = r.methods[k];
    std::vector<std::string> row{m.failed ? "-" : std::to_string(++rank), m.name,
                                 m.aggregate ? "aggregate" : "method"};
    if (m.failed) {
      for (int i = 0; i < 12; ++i) row.emplace_back("");
      row.push_back(std::to_string(m.failed_replicates));
      row.push_back("failed: " + m.error);
    } else {
      for (const ResampleSummary* s : {&m.ur, &m.auc}) {
        row.push_back(num(s->mean));
        row.push_back(num(s->se));
        row.push_back(num(s->ci_lo));
        row.push_back(num(s->ci_hi));
        row.push_back(num(s->t_star));
        row.push_back(s == &m.ur ? m.first_lower_ur : m.first_lower_auc);
      }
      row.push_back(std::to_string(m.ur.replicates));
      row.push_back(std::to_string(m.failed_replicates));
      row.emplace_back("ok");
    }
    for (auto& c : row) std::replace(c.begin(), c.end(), ',', ';');
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table significance_table(const SignificanceMatrix& m) {
  Table t;
  t.header.push_back(m.measure);
  for (const auto& n : m.names) t.header.push_back(n);
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    std::vector<std::string> row{m.names[i]};
    for (std::size_t j = 0; j < m.names.size(); ++j) row.push_back(to_symbol(m.cells[i][j]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table replicate_table(const RobustResult& r, bool auc) {
  Table t;
  t.header.push_back("replicate");
  std::vector<const MethodRobustness*> cols;
  for (const auto& m : r.methods)
    if (!m.failed && m.failed_replicates == 0) {
      t.header.push_back(m.name);
      cols.push_back(&m);
    }
  for (Index s = 0; s < r.replicates; ++s) {
    std::vector<std::string> row{std::to_string(s)};
    for (const auto* m : cols)
      row.push_back(num((auc ? m->auc_replicates : m->ur_replicates)[static_cast<std::size_t>(s)]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table significance_filter_table(const RobustResult& r, const Preference& pref) {
  Table t;
  t.header = {"method", "full_ur", "full_auc", "significant_ur", "significant_auc",
              "significant_share", "status"};
  for (const auto& m : r.methods) {
    if (m.bands.empty()) continue;
    std::vector<std::string> row{m.name};
    std::size_t usable = 0, significant = 0;
    for (const auto& b : m.bands)
      if (b.usable) {
        ++usable;
        significant += b.flag != Verdict::not_significant;
      }
    std::string status = "ok";
    try {
      const EvaluationResult full = band_evaluation(m.bands, pref);
      row.push_back(num(full.ur));
      row.push_back(num(full.auc));
    } catch (const Error& e) {
      row.insert(row.end(), {"", ""});
      status = e.what();
    }
    try {
      const EvaluationResult sig = significant_only_evaluation(m.bands, pref);
      row.push_back(num(sig.ur));
      row.push_back(num(sig.auc));
    } catch (const Error& e) {
      row.insert(row.end(), {"", ""});
      status = e.what();
    }
    row.push_back(num(usable ? static_cast<double>(significant) / static_cast<double>(usable) : 0.0));
    row.push_back(status);
    t.rows.push_back(std::move(row));
  }
  return t;
}

SignificanceMatrix significance_from_table(const Table& robust, const std::string& measure, double alpha) {
  auto column = [&](const std::string& name) {
    const auto it = std::find(robust.header.begin(), robust.header.end(), name);
    if (it == robust.header.end()) throw DataError("robust table lacks column " + name);
    return static_cast<std::size_t>(it - robust.header.begin());
  };
  const std::size_t name_col = column("method"), status_col = column("status");
  const std::size_t mean_col = column(measure + "_mean"), se_col = column(measure + "_se"),
                    t_col = column(measure + "_t_star");
  std::vector<std::string> names;
  std::vector<ResampleSummary> summaries;
  for (const auto& row : robust.rows) {
    if (row.size() <= status_col || row[status_col] != "ok") continue;
    ResampleSummary s;
    s.mean = parse_cell(row[mean_col]);
    s.se = parse_cell(row[se_col]);
    s.t_star = parse_cell(row[t_col]);
    s.alpha = alpha;
    names.push_back(row[name_col]);
    summaries.push_back(s);
  }
  return significance_matrix(names, summaries, measure, alpha);
}

std::vector<CountryBand> group_bands(const std::vector<BandPoint>& bands,
                                     const std::vector<PanelObservation>& obs) {
  std::map<std::string, CountryBand> by_country;
  for (const BandPoint& b : bands) {
    const PanelObservation& o = obs[b.obs];
    CountryBand& c = by_country[o.country];
    c.country = o.country;
    c.points.push_back(&b);
  }
  std::vector<CountryBand> out;
  for (auto& [name, c] : by_country) {
    std::stable_sort(c.points.begin(), c.points.end(), [&](const BandPoint* a, const BandPoint* b) {
      return obs[a->obs].quarter < obs[b->obs].quarter;
    });
    for (const BandPoint* p : c.points) c.quarters.push_back(obs[p->obs].quarter);
    out.push_back(std::move(c));
  }
  return out;
}

Table band_table(const CountryBand& band) {
  Table t;
  t.header = {"quarter", "p_mean", "p_lo", "p_hi", "tau_mean", "tau_lo", "tau_hi", "flag", "label", "usable"};
  for (std::size_t i = 0; i < band.points.size(); ++i) {
    const BandPoint& b = *band.points[i];
    const char* flag = b.flag == Verdict::greater ? "above" : b.flag == Verdict::less ? "below" : "insignificant";
    t.rows.push_back({band.quarters[i].str(), num(b.prob.mean), num(b.prob.ci_lo), num(b.prob.ci_hi),
                      num(b.tau.mean), num(b.tau.ci_lo), num(b.tau.ci_hi), flag,
                      std::to_string(b.label), b.usable ? "1" : "0"});
  }
  return t;
}

std::string band_svg(const CountryBand& band, const std::string& method, const std::string& stamp) {
  const double W = 820, H = 320, left = 50, right = 20, top = 30, bottom = 40;
  const double pw = W - left - right, ph = H - top - bottom;
  const std::size_t n = band.points.size();
  const int first = n ? band.quarters.front().index() : 0;
  const int last = n ? band.quarters.back().index() : 1;
  const double span = std::max(1, last - first);
  auto x = [&](std::size_t i) { return left + pw * (band.quarters[i].index() - first) / span; };
  auto y = [&](double v) { return top + ph * (1 - std::clamp(v, 0.0, 1.0)); };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  if (!stamp.empty()) s << "<!-- " << stamp << " -->\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << band.country
    << ": " << method << "</text>\n";
  // Pre-crisis quarters shaded.
  const double step = pw / span;
  for (std::size_t i = 0; i < n; ++i)
    if (band.points[i]->label == 1 && band.points[i]->usable)
      s << "<rect x=\"" << fmt(x(i) - step / 2) << "\" y=\"" << top << "\" width=\"" << fmt(step)
        << "\" height=\"" << ph << "\" fill=\"#eeeeee\"/>\n";
  for (double g : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    s << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << fmt(y(g)) << "\" y2=\"" << fmt(y(g))
      << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << fmt(y(g) + 4)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << fmt(g) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i)
    if (band.quarters[i].quarter() == 1 && band.quarters[i].year() % 2 == 0)
      s << "<text x=\"" << fmt(x(i)) << "\" y=\"" << H - bottom + 16
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << band.quarters[i].year()
        << "</text>\n";
  auto tube = [&](auto lo, auto hi, const char* color) {
    if (n == 0) return;
    s << "<polygon fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < n; ++i) s << fmt(x(i)) << ',' << fmt(y(hi(i))) << ' ';
    for (std::size_t i = n; i-- > 0;) s << fmt(x(i)) << ',' << fmt(y(lo(i))) << ' ';
    s << "\"/>\n";
  };
  auto line = [&](auto v, const char* color, const char* dash) {
    if (n == 0) return;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << dash << " points=\"";
    for (std::size_t i = 0; i < n; ++i) s << fmt(x(i)) << ',' << fmt(y(v(i))) << ' ';
    s << "\"/>\n";
  };
  const auto& P = band.points;
  tube([&](std::size_t i) { return P[i]->tau.ci_lo; }, [&](std::size_t i) { return P[i]->tau.ci_hi; }, "#d62728");
  tube([&](std::size_t i) { return P[i]->prob.ci_lo; }, [&](std::size_t i) { return P[i]->prob.ci_hi; }, "#1f77b4");
  line([&](std::size_t i) { return P[i]->tau.mean; }, "#d62728", " stroke-dasharray=\"4 3\"");
  line([&](std::size_t i) { return P[i]->prob.mean; }, "#1f77b4", "");
  for (std::size_t i = 0; i < n; ++i)
    if (P[i]->flag == Verdict::not_significant)
      s << "<circle cx=\"" << fmt(x(i)) << "\" cy=\"" << fmt(y(P[i]->prob.mean))
        << "\" r=\"3\" fill=\"white\" stroke=\"#1f77b4\"/>\n";
  s << "<text x=\"" << left + pw - 4 << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"11\" "
       "text-anchor=\"end\"><tspan fill=\"#1f77b4\">probability</tspan>  <tspan fill=\"#d62728\">threshold</tspan>"
       "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace ewm
