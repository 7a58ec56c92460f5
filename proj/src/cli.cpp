#include "ewm/cli.hpp"

#include "ewm/parallel.hpp"
#include "ewm/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace ewm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = {"synth", "ingest", "gridsearch", "race-cv",
                                                 "race-recursive", "robust-cv", "robust-recursive",
                                                 "bands", "report"};
  return names;
}

std::string stamp(const RunConfig& cfg, const std::string& command) {
  return "ewm " + command + " config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed);
}

// Collects artifacts for one command and writes them in a fixed order.
class ArtifactWriter {
 public:
  ArtifactWriter(const RunConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)), dir_(artifact_dir(cfg, command_)) {
    fs::create_directories(dir_);
  }

  void text(const std::string& name, const std::string& content) {
    const fs::path path = fs::path(dir_) / name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    files_.push_back(name);
  }

  void csv(const std::string& name, const Table& t) {
    std::ostringstream s;
    write_csv(s, t, stamp(cfg_, command_));
    text(name, s.str());
  }

  void finish(json manifest, std::ostream& out) {
    json cfg = to_json(cfg_);
    cfg["config_hash"] = config_hash(cfg_);
    text("config.json", cfg.dump(2) + "\n");
    manifest["command"] = command_;
    manifest["config_hash"] = config_hash(cfg_);
    manifest["seed"] = cfg_.seed;
    manifest["alpha"] = cfg_.alpha;
    manifest["mu"] = cfg_.mu;
    files_.push_back("manifest.json");
    manifest["artifacts"] = files_;
    std::ofstream m(fs::path(dir_) / "manifest.json", std::ios::binary);
    m << manifest.dump(2) << "\n";
    out << "wrote " << dir_ << "\n";
  }

  const std::string& dir() const { return dir_; }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::string dir_;
  std::vector<std::string> files_;
};

json data_summary(const PreparedData& d) {
  return {{"countries", d.panel.series.size()},
          {"indicators", d.panel.indicators},
          {"observations", d.observations.size()},
          {"estimation_rows", d.sample.size()},
          {"pre_crisis_rows", d.sample.y.sum()},
          {"events", d.events.size()}};
}

std::string header_line(const RunConfig& cfg, const std::string& what) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s  (mu=%s, alpha=%s, folds=%d, replicates=%ld, seed=%llu, config_hash=%s)\n",
                what.c_str(), format_number(cfg.mu).c_str(), format_number(cfg.alpha).c_str(), cfg.folds,
                static_cast<long>(cfg.replicates), static_cast<unsigned long long>(cfg.seed),
                config_hash(cfg).c_str());
  return buf;
}

int workers_of(const RunConfig& cfg) { return cfg.workers > 0 ? cfg.workers : default_workers(); }

json race_warnings(const RaceResult& race) {
  json w = race.warnings;
  for (const auto& o : race.outcomes)
    for (const auto& msg : o.warnings) w.push_back(o.name + ": " + msg);
  return w;
}

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const SynthPanel sp = synth_panel(cfg.synth);
  ArtifactWriter w(cfg, "synth");
  std::ostringstream panel, events;
  write_panel_csv(panel, sp.panel);
  write_events_csv(events, sp.events);
  w.text("panel.csv", "# " + stamp(cfg, "synth") + "\n" + panel.str());
  w.text("events.csv", "# " + stamp(cfg, "synth") + "\n" + events.str());
  json kinds = json::object();
  for (std::size_t j = 0; j < sp.panel.indicators.size(); ++j)
    kinds[sp.panel.indicators[j]] = to_string(sp.panel.kinds[j]);
  w.finish({{"indicator_kinds", kinds}, {"loadings", sp.loadings}}, out);
}

void cmd_ingest(const RunConfig& cfg, const PreparedData& d, std::ostream& out) {
  ArtifactWriter w(cfg, "ingest");
  std::ostringstream obs;
  write_observations_csv(obs, d.observations, d.panel.indicators);
  w.text("observations.csv", "# " + stamp(cfg, "ingest") + "\n" + obs.str());
  w.finish({{"data", data_summary(d)}}, out);
  out << "observations " << d.observations.size() << ", estimation rows " << d.sample.size()
      << ", pre-crisis rows " << d.sample.y.sum() << "\n";
}

void cmd_gridsearch(const RunConfig& cfg, const PreparedData& d, std::ostream& out) {
  const Preference pref(cfg.mu);
  ArtifactWriter w(cfg, "gridsearch");
  Table t;
  t.header = {"method", "point", "params", "ur", "status"};
  json best = json::array();
  for (const MethodEntry& m : cfg.methods) {
    if (m.grid.empty()) continue;
    const GridSearchResult r = grid_search(m.spec, m.grid, d.sample, pref, cfg.folds, cfg.seed, workers_of(cfg));
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      std::string params = r.points[i].spec.describe();
      std::replace(params.begin(), params.end(), ',', ';');
      std::string status = r.points[i].failed ? "failed: " + r.points[i].error : "ok";
      std::replace(status.begin(), status.end(), ',', ';');
      t.rows.push_back({m.spec.label(), std::to_string(i), params,
                        r.points[i].failed ? "" : format_number(r.points[i].ur), status});
    }
    best.push_back({{"family", to_string(r.best.family())},
                    {"label", m.spec.label()},
                    {"params", r.best.params()},
                    {"seed", r.best.seed()}});
    out << m.spec.label() << ": best " << r.best.describe() << "\n";
  }
  if (t.rows.empty()) throw ConfigError("no method in the config defines a grid");
  w.csv("gridsearch.csv", t);
  w.text("best_methods.json", best.dump(2) + "\n");
  w.finish({{"data", data_summary(d)}, {"folds", cfg.folds}}, out);
}

void emit_race(const RunConfig& cfg, const PreparedData& d, const RaceResult& race,
               const std::string& command, const std::string& title, std::ostream& out) {
  ArtifactWriter w(cfg, command);
  const Table ranking = ranking_table(race);
  w.csv("ranking.csv", ranking);
  const std::string text = header_line(cfg, title) + render_text(ranking);
  w.text("ranking.txt", text);
  w.csv("predictions.csv", predictions_table(race, &d.observations));
  json manifest = {{"data", data_summary(d)}, {"warnings", race_warnings(race)}};
  if (race.folds) {
    Table folds;
    folds.header = {"obs", "country", "quarter", "fold"};
    for (std::size_t r = 0; r < race.folds->fold.size(); ++r) {
      const PanelObservation& o = d.observations[d.sample.source[r]];
      folds.rows.push_back({std::to_string(d.sample.source[r]), o.country, o.quarter.str(),
                            std::to_string(race.folds->fold[r])});
    }
    w.csv("folds.csv", folds);
    manifest["fold_seed"] = race.folds->seed;
  }
  w.finish(manifest, out);
  out << text;
}

void emit_robust(const RunConfig& cfg, const PreparedData& d, const RobustResult& r,
                 const std::string& command, const std::string& title, std::ostream& out) {
  const Preference pref(cfg.mu);
  ArtifactWriter w(cfg, command);
  const Table ranking = robust_table(r);
  std::string text = header_line(cfg, title) + render_text(ranking);
  w.csv("robust_ranking.csv", ranking);
  w.csv("significance_ur.csv", significance_table(r.ur_matrix));
  w.csv("significance_auc.csv", significance_table(r.auc_matrix));
  w.csv("replicates_ur.csv", replicate_table(r, false));
  w.csv("replicates_auc.csv", replicate_table(r, true));
  text += "\nSignificance of Ur differences (row vs column, alpha=" + format_number(cfg.alpha) + ")\n" +
          render_text(significance_table(r.ur_matrix));
  json manifest = {{"data", data_summary(d)}, {"replicates", r.replicates}};
  json failures = json::object();
  for (const auto& m : r.methods)
    if (m.failed_replicates > 0) failures[m.name] = {{"failed_replicates", m.failed_replicates}, {"error", m.error}};
  manifest["replicate_failures"] = failures;
  const Table filter = significance_filter_table(r, pref);
  w.csv("significant_only.csv", filter);
  text += "\nFull-sample versus significant-only evaluation\n" + render_text(filter);
  const MethodRobustness* chosen = nullptr;
  for (const auto& m : r.methods)
    if (m.name == cfg.band_method && !m.bands.empty()) chosen = &m;
  if (chosen == nullptr)
    for (const auto& m : r.methods)
      if (!m.bands.empty()) {
        chosen = &m;
        break;
      }
  if (chosen != nullptr) {
    manifest["band_method"] = chosen->name;
    for (const CountryBand& c : group_bands(chosen->bands, d.observations)) {
      w.csv("bands/" + c.country + ".csv", band_table(c));
      w.text("bands/" + c.country + ".svg", band_svg(c, chosen->name, stamp(cfg, command)));
    }
  }
  w.text("robust.txt", text);
  w.finish(manifest, out);
  out << text;
}

// (row, column) -> verdict symbol, independent of the method order.
std::map<std::pair<std::string, std::string>, std::string> cells_by_name(const Table& matrix) {
  std::map<std::pair<std::string, std::string>, std::string> cells;
  for (const auto& row : matrix.rows)
    for (std::size_t j = 1; j < row.size() && j < matrix.header.size(); ++j)
      cells[{row[0], matrix.header[j]}] = row[j];
  return cells;
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
  bool any = false;
  for (const std::string& command : commands()) {
    if (command == "report") continue;
    const fs::path dir = artifact_dir(cfg, command);
    if (!fs::is_directory(dir)) continue;
    any = true;
    std::vector<fs::path> csvs;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
    std::sort(csvs.begin(), csvs.end());
    std::ostringstream text;
    text << "== " << command << " (" << dir.string() << ")  " << stamp(cfg, "report") << "\n";
    for (const fs::path& p : csvs) {
      if (p.parent_path().filename() == "bands" || p.filename() == "predictions.csv" ||
          p.filename() == "observations.csv" || p.filename() == "panel.csv" ||
          p.filename().string().rfind("replicates_", 0) == 0 || p.filename() == "folds.csv")
        continue;
      std::ifstream in(p);
      text << "\n" << p.filename().string() << "\n" << render_text(read_csv_table(in));
    }
    const fs::path robust = dir / "robust_ranking.csv";
    if (fs::exists(robust)) {
      std::ifstream in(robust);
      const Table table = read_csv_table(in);
      for (const std::string measure : {"ur", "auc"}) {
        std::ifstream stored_in(dir / ("significance_" + measure + ".csv"));
        const Table stored = read_csv_table(stored_in);
        const Table rebuilt = significance_table(significance_from_table(table, measure, cfg.alpha));
        if (cells_by_name(stored) != cells_by_name(rebuilt))
          throw NumericError("stored " + measure + " significance matrix disagrees with its summaries in " +
                             dir.string());
        text << "\n" << measure << " significance matrix verified against stored summaries\n";
      }
    }
    std::ofstream(dir / "report.txt", std::ios::binary) << text.str();
    out << text.str();
  }
  if (!any) throw DataError("no artifacts found for config hash " + config_hash(cfg));
}

int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& out) {
  if (command == "synth") {
    cmd_synth(cfg, out);
    return kExitOk;
  }
  if (command == "report") {
    cmd_report(cfg, out);
    return kExitOk;
  }
  const PreparedData d = prepare_data(cfg);
  const Preference pref(cfg.mu);
  const std::vector<MethodSpec> methods = cfg.method_specs();
  if (command == "ingest") {
    cmd_ingest(cfg, d, out);
  } else if (command == "gridsearch") {
    cmd_gridsearch(cfg, d, out);
  } else if (command == "race-cv") {
    const RaceResult race = kfold_race(methods, cfg.aggregates, d.sample, pref, cfg.folds, cfg.seed, workers_of(cfg));
    emit_race(cfg, d, race, command, std::to_string(cfg.folds) + "-fold cross-validated horse race", out);
  } else if (command == "race-recursive") {
    const RaceResult race = recursive_race(methods, cfg.aggregates, d.observations, pref, cfg.recursive, workers_of(cfg));
    emit_race(cfg, d, race, command, "Recursive real-time horse race from " + cfg.recursive.start.str(), out);
  } else if (command == "robust-cv") {
    ResampleOptions opt{cfg.replicates, cfg.alpha, cfg.seed, workers_of(cfg), true};
    const RobustResult r = repeated_cv_performance(methods, cfg.aggregates, d.sample, pref, cfg.folds, opt);
    emit_robust(cfg, d, r, command, "Repeated cross-validation", out);
  } else if (command == "robust-recursive" || command == "bands") {
    ResampleOptions opt{cfg.replicates, cfg.alpha, cfg.seed, workers_of(cfg), true};
    const RobustResult r = bootstrap_recursive(methods, cfg.aggregates, d.observations, pref, cfg.recursive, opt);
    emit_robust(cfg, d, r, command, "Bootstrapped recursive estimation", out);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return kExitOk;
}

std::string json_escape_record(const std::string& kind, const std::string& message, int code) {
  return json({{"status", "error"}, {"kind", kind}, {"message", message}, {"exit_code", code}}).dump();
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData d;
  if (cfg.panel_path.empty()) {
    SynthPanel sp = synth_panel(cfg.synth);
    d.panel = std::move(sp.panel);
    d.events = std::move(sp.events);
  } else {
    if (cfg.events_path.empty()) throw ConfigError("data.events is required with data.panel");
    d.panel = read_panel_csv(cfg.panel_path);
    d.events = read_events_csv(cfg.events_path);
  }
  for (const auto& [name, kind] : cfg.indicator_kinds) {
    const auto it = std::find(d.panel.indicators.begin(), d.panel.indicators.end(), name);
    if (it == d.panel.indicators.end()) throw ConfigError("indicator_kinds names unknown column '" + name + "'");
    d.panel.kinds[static_cast<std::size_t>(it - d.panel.indicators.begin())] = kind;
  }
  if (!cfg.transforms.empty()) d.panel = apply_pipeline(d.panel, cfg.transforms);
  if (cfg.apply_lags) d.panel = apply_publication_lags(d.panel, cfg.accounting_lag, cfg.market_lag);
  d.events = merge_events(d.events);
  d.observations = label_and_filter(d.panel, d.events, cfg.horizon, cfg.post_crisis);
  d.sample = estimation_sample(d.observations);
  if (d.sample.size() == 0) throw DataError("no complete usable observations after filtering");
  if (!has_both_classes(d.sample.y)) throw DataError("estimation sample lacks pre-crisis or tranquil observations");
  return d;
}

std::string artifact_dir(const RunConfig& cfg, const std::string& command) {
  return (fs::path(cfg.output) / (command + "-" + config_hash(cfg))).string();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Early-warning horse races for banking crises"};
  std::string command, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, folds;
  std::optional<double> alpha, mu;
  std::optional<Index> replicates;
  app.add_option("command", command, "synth | ingest | gridsearch | race-cv | race-recursive | robust-cv | "
                                     "robust-recursive | bands | report")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Base seed");
  app.add_option("--workers", workers, "Worker threads (default: EWM_WORKERS or all cores)");
  app.add_option("--out", out_dir, "Output root directory");
  app.add_option("--alpha", alpha, "Significance level");
  app.add_option("--mu", mu, "Preference between missed crises and false alarms");
  app.add_option("--folds", folds, "Cross-validation folds");
  app.add_option("--replicates", replicates, "Resampling replicates");

  std::vector<std::string> argv_store{"ewm"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json_escape_record("config", e.what(), kExitConfig) << "\n";
    return kExitConfig;
  }

  try {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
    }
    if (seed) j["seed"] = *seed;
    if (workers) j["workers"] = *workers;
    if (!out_dir.empty()) j["output"] = out_dir;
    if (alpha) j["alpha"] = *alpha;
    if (mu) j["mu"] = *mu;
    if (folds) j["folds"] = *folds;
    if (replicates) j["replicates"] = *replicates;
    const RunConfig cfg = parse_config(j);
    return dispatch(command, cfg, out);
  } catch (const ConfigError& e) {
    err << json_escape_record("config", e.what(), kExitConfig) << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << json_escape_record("data", e.what(), kExitData) << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << json_escape_record("numeric", e.what(), kExitNumeric) << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << json_escape_record("data", e.what(), kExitData) << "\n";
    return kExitData;
  }
}

}  // namespace ewm
