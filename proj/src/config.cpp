#include "ewm/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace ewm {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T read(const json& j, const std::string& key, const T& fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + key + "' in " + where + " has the wrong type");
  }
}

Quarter read_quarter(const json& j, const std::string& key, Quarter fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return Quarter::parse(j.at(key).get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError("key '" + key + "' in " + where + ": " + e.what());
  }
}

MethodEntry parse_method(const json& j, std::uint64_t default_seed, std::size_t index) {
  const std::string where = "methods[" + std::to_string(index) + "]";
  if (j.is_string()) return {MethodSpec(parse_family(j.get<std::string>()), {}, default_seed), {}};
  reject_unknown(j, {"family", "params", "seed", "label", "grid"}, where);
  MethodEntry e{MethodSpec(parse_family(read<std::string>(j, "family", "", where)), {},
                           read<std::uint64_t>(j, "seed", default_seed, where)),
                {}};
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError(where + ".params must be an object");
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
      if (!it.value().is_number()) throw ConfigError(where + ".params." + it.key() + " must be a number");
      e.spec.set(it.key(), it.value().get<double>());
    }
  }
  if (j.contains("label")) e.spec.set_label(read<std::string>(j, "label", "", where));
  if (j.contains("grid")) {
    if (!j["grid"].is_array()) throw ConfigError(where + ".grid must be a list of axes");
    for (const auto& axis : j["grid"]) {
      reject_unknown(axis, {"param", "values"}, where + ".grid");
      GridAxis a{read<std::string>(axis, "param", "", where + ".grid"),
                 read<std::vector<double>>(axis, "values", {}, where + ".grid")};
      if (a.values.empty()) throw ConfigError(where + ".grid axis '" + a.param + "' has no values");
      for (double v : a.values) MethodSpec(e.spec).set(a.param, v);
      e.grid.push_back(std::move(a));
    }
  }
  return e;
}

AggregateSpec parse_aggregate(const json& j) {
  if (j.is_string()) return {parse_aggregate_kind(j.get<std::string>()), WeightMeasure::ur};
  reject_unknown(j, {"kind", "weight"}, "aggregates");
  return {parse_aggregate_kind(read<std::string>(j, "kind", "", "aggregates")),
          parse_weight_measure(read<std::string>(j, "weight", "ur", "aggregates"))};
}

}  // namespace

void RunConfig::validate() const {
  horizon.validate();
  if (post_crisis < 0) throw ConfigError("post_crisis must be non-negative");
  if (!(mu >= 0 && mu <= 1)) throw ConfigError("mu must lie in [0, 1]");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (replicates < 2) throw ConfigError("replicates must be at least 2");
  if (!(alpha > 0 && alpha < 1)) throw ConfigError("alpha must lie in (0, 1)");
  if (accounting_lag < 0 || market_lag < 0) throw ConfigError("publication lags must be non-negative");
  if (recursive.qda_delay < 0) throw ConfigError("recursive.qda_delay must be non-negative");
  if (recursive.end && *recursive.end < recursive.start)
    throw ConfigError("recursive.end precedes recursive.start");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (workers < 0) throw ConfigError("workers must be non-negative");
  std::set<std::string> outputs;
  for (const auto& t : transforms)
    if (t.output.empty() || t.source.empty() || !outputs.insert(t.output).second)
      throw ConfigError("transform steps need a unique output and a source");
}

std::vector<MethodSpec> RunConfig::method_specs() const {
  std::vector<MethodSpec> out;
  for (const auto& m : methods) out.push_back(m.spec);
  return labeled(out);
}

RunConfig parse_config(const json& j) {
  // Saved configs carry their hash for reference; it is always recomputed.
  reject_unknown(j, {"data", "indicator_kinds", "transforms", "lags", "horizon", "post_crisis", "mu",
                     "folds", "replicates", "alpha", "recursive", "methods", "aggregates",
                     "band_method", "seed", "workers", "output", "synth", "config_hash"},
                 "config");
  RunConfig c;
  c.seed = read<std::uint64_t>(j, "seed", c.seed, "config");
  if (j.contains("data")) {
    reject_unknown(j["data"], {"panel", "events"}, "data");
    c.panel_path = read<std::string>(j["data"], "panel", "", "data");
    c.events_path = read<std::string>(j["data"], "events", "", "data");
  }
  if (j.contains("indicator_kinds")) {
    if (!j["indicator_kinds"].is_object()) throw ConfigError("indicator_kinds must be an object");
    for (auto it = j["indicator_kinds"].begin(); it != j["indicator_kinds"].end(); ++it)
      c.indicator_kinds[it.key()] = parse_indicator_kind(it.value().get<std::string>());
  }
  if (j.contains("transforms")) {
    if (!j["transforms"].is_array()) throw ConfigError("transforms must be a list");
    for (const auto& t : j["transforms"]) {
      reject_unknown(t, {"output", "source", "denominator", "kind", "hp_lambda", "lag"}, "transforms");
      TransformStep s;
      s.output = read<std::string>(t, "output", "", "transforms");
      s.source = read<std::string>(t, "source", "", "transforms");
      s.denominator = read<std::string>(t, "denominator", "", "transforms");
      s.spec.kind = parse_transform_kind(read<std::string>(t, "kind", "level", "transforms"));
      s.spec.hp_lambda = read<double>(t, "hp_lambda", s.spec.hp_lambda, "transforms");
      s.lag_kind = parse_indicator_kind(read<std::string>(t, "lag", "accounting", "transforms"));
      if (s.spec.kind == TransformKind::ratio && s.denominator.empty())
        throw ConfigError("ratio transform '" + s.output + "' needs a denominator");
      c.transforms.push_back(std::move(s));
    }
  }
  if (j.contains("lags")) {
    reject_unknown(j["lags"], {"apply", "accounting", "market"}, "lags");
    c.apply_lags = read<bool>(j["lags"], "apply", c.apply_lags, "lags");
    c.accounting_lag = read<int>(j["lags"], "accounting", c.accounting_lag, "lags");
    c.market_lag = read<int>(j["lags"], "market", c.market_lag, "lags");
  }
  if (j.contains("horizon")) {
    reject_unknown(j["horizon"], {"lo", "hi"}, "horizon");
    c.horizon.lo = read<int>(j["horizon"], "lo", c.horizon.lo, "horizon");
    c.horizon.hi = read<int>(j["horizon"], "hi", c.horizon.hi, "horizon");
  }
  c.post_crisis = read<int>(j, "post_crisis", c.post_crisis, "config");
  c.mu = read<double>(j, "mu", c.mu, "config");
  c.folds = read<int>(j, "folds", c.folds, "config");
  c.replicates = read<Index>(j, "replicates", c.replicates, "config");
  c.alpha = read<double>(j, "alpha", c.alpha, "config");
  if (j.contains("recursive")) {
    const json& r = j["recursive"];
    reject_unknown(r, {"start", "end", "qda_delay"}, "recursive");
    c.recursive.start = read_quarter(r, "start", c.recursive.start, "recursive");
    if (r.contains("end") && !r["end"].is_null())
      c.recursive.end = read_quarter(r, "end", c.recursive.start, "recursive");
    c.recursive.qda_delay = read<int>(r, "qda_delay", c.recursive.qda_delay, "recursive");
  }
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) throw ConfigError("methods must be a list");
    for (std::size_t i = 0; i < j["methods"].size(); ++i)
      c.methods.push_back(parse_method(j["methods"][i], c.seed, i));
  } else {
    for (Family f : all_families()) c.methods.push_back({MethodSpec::benchmark(f, c.seed), {}});
  }
  if (j.contains("aggregates")) {
    if (!j["aggregates"].is_array()) throw ConfigError("aggregates must be a list");
    for (const auto& a : j["aggregates"]) c.aggregates.push_back(parse_aggregate(a));
  } else {
    c.aggregates = {{AggregateKind::best_of}, {AggregateKind::vote}, {AggregateKind::mean},
                    {AggregateKind::weighted_mean}};
  }
  c.band_method = read<std::string>(j, "band_method", c.band_method, "config");
  c.workers = read<int>(j, "workers", c.workers, "config");
  c.output = read<std::string>(j, "output", c.output, "config");
  if (j.contains("synth")) {
    const json& s = j["synth"];
    reject_unknown(s, {"seed", "countries", "quarters", "first", "events", "signal_strength",
                       "indicators", "persistence", "crisis_length_min", "crisis_length_max"},
                   "synth");
    SynthOptions& o = c.synth;
    o.seed = read<std::uint64_t>(s, "seed", c.seed, "synth");
    o.countries = read<int>(s, "countries", o.countries, "synth");
    o.quarters = read<int>(s, "quarters", o.quarters, "synth");
    o.first = read_quarter(s, "first", o.first, "synth");
    o.events = read<int>(s, "events", o.events, "synth");
    o.signal_strength = read<double>(s, "signal_strength", o.signal_strength, "synth");
    o.indicators = read<int>(s, "indicators", o.indicators, "synth");
    o.persistence = read<double>(s, "persistence", o.persistence, "synth");
    o.crisis_length_min = read<int>(s, "crisis_length_min", o.crisis_length_min, "synth");
    o.crisis_length_max = read<int>(s, "crisis_length_max", o.crisis_length_max, "synth");
  } else {
    c.synth.seed = c.seed;
  }
  c.synth.horizon = c.horizon;
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["data"] = {{"panel", c.panel_path}, {"events", c.events_path}};
  j["indicator_kinds"] = json::object();
  for (const auto& [name, kind] : c.indicator_kinds) j["indicator_kinds"][name] = to_string(kind);
  j["transforms"] = json::array();
  for (const auto& t : c.transforms)
    j["transforms"].push_back({{"output", t.output},
                               {"source", t.source},
                               {"denominator", t.denominator},
                               {"kind", to_string(t.spec.kind)},
                               {"hp_lambda", t.spec.hp_lambda},
                               {"lag", to_string(t.lag_kind)}});
  j["lags"] = {{"apply", c.apply_lags}, {"accounting", c.accounting_lag}, {"market", c.market_lag}};
  j["horizon"] = {{"lo", c.horizon.lo}, {"hi", c.horizon.hi}};
  j["post_crisis"] = c.post_crisis;
  j["mu"] = c.mu;
  j["folds"] = c.folds;
  j["replicates"] = c.replicates;
  j["alpha"] = c.alpha;
  j["recursive"] = {{"start", c.recursive.start.str()},
                    {"end", c.recursive.end ? json(c.recursive.end->str()) : json(nullptr)},
                    {"qda_delay", c.recursive.qda_delay}};
  j["methods"] = json::array();
  for (const auto& m : c.methods) {
    json e = {{"family", to_string(m.spec.family())},
              {"params", m.spec.params()},
              {"seed", m.spec.seed()},
              {"label", m.spec.label()}};
    e["grid"] = json::array();
    for (const auto& a : m.grid) e["grid"].push_back({{"param", a.param}, {"values", a.values}});
    j["methods"].push_back(std::move(e));
  }
  j["aggregates"] = json::array();
  for (const auto& a : c.aggregates)
    j["aggregates"].push_back({{"kind", to_string(a.kind)}, {"weight", to_string(a.weight_measure)}});
  j["band_method"] = c.band_method;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output"] = c.output;
  const SynthOptions& o = c.synth;
  j["synth"] = {{"seed", o.seed},
                {"countries", o.countries},
                {"quarters", o.quarters},
                {"first", o.first.str()},
                {"events", o.events},
                {"signal_strength", o.signal_strength},
                {"indicators", o.indicators},
                {"persistence", o.persistence},
                {"crisis_length_min", o.crisis_length_min},
                {"crisis_length_max", o.crisis_length_max}};
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  // Execution settings do not change results.
  j.erase("workers");
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ewm
