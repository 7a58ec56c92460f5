#include "ewm/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace ewm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("ewm_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

json small_config(const TempDir& tmp) {
  return {{"synth", {{"countries", 6}, {"events", 8}}},
          {"methods", {"logit", "lda", "knn"}},
          {"folds", 5},
          {"replicates", 10},
          {"workers", 1},
          {"output", (tmp.path / "out").string()}};
}

fs::path config_file(const TempDir& tmp, const json& j, const std::string& name = "config.json") {
  const fs::path p = tmp.path / name;
  write(p, j.dump(2));
  return p;
}

fs::path only_dir(const fs::path& root, const std::string& command) {
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && e.path().filename().string().rfind(command + "-", 0) == 0) return e.path();
  FAIL("no artifact directory for " << command);
  return {};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream l(line);
    std::string cell;
    while (std::getline(l, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run_process(const std::string& args, std::string& err) {
  const std::string err_path = (fs::temp_directory_path() / ("ewm_cli_err_" + std::to_string(::getpid()))).string();
  const int status = std::system((std::string(EWM_CLI_PATH) + " " + args + " > /dev/null 2> " + err_path).c_str());
  err = slurp(err_path);
  fs::remove(err_path);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("race-cv writes a ranking of methods and aggregates") {
  TempDir tmp;
  const fs::path cfg = config_file(tmp, small_config(tmp));
  const Run r = run({"race-cv", "--config", cfg.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const fs::path dir = only_dir(tmp.path / "out", "race-cv");
  const auto rows = csv_rows(slurp(dir / "ranking.csv"));
  REQUIRE(rows.size() == 8);
  CHECK(rows[0][1] == "method");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][0] == std::to_string(i));
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["command"] == "race-cv");
  CHECK(manifest["seed"] == 1);
  CHECK(fs::exists(dir / "predictions.csv"));
  CHECK(fs::exists(dir / "folds.csv"));
  CHECK(r.out.find("weighted_mean") != std::string::npos);
}

TEST_CASE("robust-cv reports standard errors and a significance matrix") {
  TempDir tmp;
  const fs::path cfg = config_file(tmp, small_config(tmp));
  const Run r = run({"robust-cv", "--config", cfg.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const fs::path dir = only_dir(tmp.path / "out", "robust-cv");
  const auto ranking = csv_rows(slurp(dir / "robust_ranking.csv"));
  const auto& header = ranking[0];
  for (const char* col : {"ur_mean", "ur_se", "ur_ci_lo", "ur_ci_hi", "ur_t_star", "auc_se", "first_lower_ur"})
    CHECK(std::find(header.begin(), header.end(), col) != header.end());
  const auto matrix = csv_rows(slurp(dir / "significance_ur.csv"));
  REQUIRE(matrix.size() == 8);
  for (std::size_t i = 1; i < matrix.size(); ++i) {
    REQUIRE(matrix[i].size() == 8);
    for (std::size_t j = 1; j < 8; ++j) {
      const std::string& a = matrix[i][j];
      const std::string& b = matrix[j][i];
      CHECK((a == ">") == (b == "<"));
    }
  }
  const auto reps = csv_rows(slurp(dir / "replicates_ur.csv"));
  CHECK(reps.size() == 11);
}

TEST_CASE("reruns reproduce every artifact byte for byte") {
  TempDir tmp;
  const fs::path cfg = config_file(tmp, small_config(tmp));
  for (const char* command : {"race-cv", "robust-cv", "robust-recursive"}) {
    CAPTURE(command);
    REQUIRE(run({command, "--config", cfg.string(), "--replicates", "4"}).code == 0);
    const fs::path dir = only_dir(tmp.path / "out", command);
    const auto first = snapshot(dir);
    fs::remove_all(dir);
    REQUIRE(run({command, "--config", cfg.string(), "--replicates", "4"}).code == 0);
    CHECK(snapshot(dir) == first);
  }
}

TEST_CASE("seed and parameter overrides change the artifact directory") {
  TempDir tmp;
  const fs::path cfg = config_file(tmp, small_config(tmp));
  REQUIRE(run({"race-cv", "--config", cfg.string()}).code == 0);
  REQUIRE(run({"race-cv", "--config", cfg.string(), "--seed", "2"}).code == 0);
  REQUIRE(run({"race-cv", "--config", cfg.string(), "--mu", "0.5"}).code == 0);
  int dirs = 0;
  for (const auto& e : fs::directory_iterator(tmp.path / "out")) dirs += e.is_directory();
  CHECK(dirs == 3);
}

TEST_CASE("every artifact embeds the config hash and seed") {
  TempDir tmp;
  json j = small_config(tmp);
  j["seed"] = 17;
  const fs::path cfg = config_file(tmp, j);
  for (const char* command : {"synth", "ingest", "race-cv", "race-recursive", "robust-cv", "bands"})
    REQUIRE_MESSAGE(run({command, "--config", cfg.string(), "--replicates", "3"}).code == 0, command);
  REQUIRE(run({"report", "--config", cfg.string(), "--replicates", "3"}).code == 0);
  int checked = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp.path / "out")) {
    if (!e.is_regular_file()) continue;
    const std::string dir = e.path().parent_path().filename() == "bands"
                                ? e.path().parent_path().parent_path().filename().string()
                                : e.path().parent_path().filename().string();
    const std::string hash = dir.substr(dir.rfind('-') + 1);
    const std::string text = slurp(e.path());
    CAPTURE(e.path().string());
    CHECK(text.find(hash) != std::string::npos);
    const bool seeded = text.find("seed=17") != std::string::npos || text.find("\"seed\": 17") != std::string::npos;
    CHECK(seeded);
    ++checked;
  }
  CHECK(checked > 30);
}

TEST_CASE("saved configs and synthetic CSVs are valid inputs") {
  TempDir tmp;
  const fs::path cfg = config_file(tmp, small_config(tmp));
  REQUIRE(run({"synth", "--config", cfg.string()}).code == 0);
  const fs::path synth = only_dir(tmp.path / "out", "synth");
  json j = json::parse(slurp(synth / "config.json"));
  j["data"] = {{"panel", (synth / "panel.csv").string()}, {"events", (synth / "events.csv").string()}};
  j["indicator_kinds"] = json::parse(slurp(synth / "manifest.json"))["indicator_kinds"];
  const fs::path from_files = config_file(tmp, j, "from_files.json");
  const Run a = run({"race-cv", "--config", from_files.string()});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const Run b = run({"race-cv", "--config", cfg.string()});
  REQUIRE(b.code == 0);
  const auto ra = csv_rows(slurp(only_dir(tmp.path / "out", "race-cv") / "ranking.csv"));
  CHECK(ra.size() == 8);
}

TEST_CASE("input files are never modified") {
  TempDir tmp;
  const fs::path cfg = config_file(tmp, small_config(tmp));
  REQUIRE(run({"synth", "--config", cfg.string()}).code == 0);
  const fs::path synth = only_dir(tmp.path / "out", "synth");
  fs::create_directories(tmp.path / "in");
  fs::copy_file(synth / "panel.csv", tmp.path / "in" / "panel.csv");
  fs::copy_file(synth / "events.csv", tmp.path / "in" / "events.csv");
  json j = small_config(tmp);
  j["data"] = {{"panel", (tmp.path / "in" / "panel.csv").string()},
               {"events", (tmp.path / "in" / "events.csv").string()}};
  const fs::path file_cfg = config_file(tmp, j, "files.json");
  const auto before = snapshot(tmp.path / "in");
  const std::string cfg_before = slurp(file_cfg);
  for (const char* command : {"ingest", "race-cv", "robust-cv"})
    REQUIRE(run({command, "--config", file_cfg.string(), "--replicates", "3"}).code == 0);
  CHECK(snapshot(tmp.path / "in") == before);
  CHECK(slurp(file_cfg) == cfg_before);
}

TEST_CASE("report re-derives significance from the stored summaries") {
  TempDir tmp;
  const fs::path cfg = config_file(tmp, small_config(tmp));
  CHECK(run({"report", "--config", cfg.string()}).code == kExitData);
  REQUIRE(run({"robust-cv", "--config", cfg.string()}).code == 0);
  const Run ok = run({"report", "--config", cfg.string()});
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  CHECK(ok.out.find("ur significance matrix verified") != std::string::npos);

  const fs::path matrix = only_dir(tmp.path / "out", "robust-cv") / "significance_ur.csv";
  std::string text = slurp(matrix);
  const auto rows = csv_rows(text);
  // Flip one off-diagonal verdict.
  const std::string cell = rows[1][2];
  const std::string flipped = cell == ">" ? "<" : ">";
  const std::string old_row = rows[1][0] + "," + rows[1][1] + "," + cell;
  const auto at = text.find(old_row);
  REQUIRE(at != std::string::npos);
  text.replace(at, old_row.size(), rows[1][0] + "," + rows[1][1] + "," + flipped);
  write(matrix, text);
  const Run bad = run({"report", "--config", cfg.string()});
  CHECK(bad.code == kExitNumeric);
  CHECK(json::parse(bad.err)["kind"] == "numeric");
}

TEST_CASE("errors map to exit codes with a machine-readable record") {
  TempDir tmp;
  write(tmp.path / "panel.csv",
        "country,quarter,a,b\nAA,2000Q1,1,2\nAA,2000Q2,oops,2\n");
  write(tmp.path / "events.csv", "country,start,end\nAA,2000Q2,2000Q3\n");
  json j = small_config(tmp);
  j["data"] = {{"panel", (tmp.path / "panel.csv").string()}, {"events", (tmp.path / "events.csv").string()}};
  const fs::path bad_csv = config_file(tmp, j, "bad_csv.json");

  std::string err;
  CHECK(run_process("race-cv --config " + bad_csv.string(), err) == 3);
  json record = json::parse(err);
  CHECK(record["status"] == "error");
  CHECK(record["exit_code"] == 3);
  CHECK(record["kind"] == "data");
  CHECK(record["message"].get<std::string>().find("line 3") != std::string::npos);

  json unknown = small_config(tmp);
  unknown["methods"] = {"logit", "deep_forest"};
  CHECK(run_process("race-cv --config " + config_file(tmp, unknown, "unknown.json").string(), err) == 2);
  record = json::parse(err);
  CHECK(record["kind"] == "config");
  CHECK(record["message"].get<std::string>().find("deep_forest") != std::string::npos);

  CHECK(run_process("race-cv --config " + (tmp.path / "missing.json").string(), err) == 2);
  CHECK(run_process("tournament", err) == 2);
  const fs::path good = config_file(tmp, small_config(tmp), "good.json");
  CHECK(run({"race-cv", "--config", good.string(), "--alpha", "1.5"}).code == kExitConfig);
  CHECK(run({"race-cv", "--config", good.string(), "--folds", "1"}).code == kExitConfig);
  CHECK(fs::exists(EWM_CLI_PATH));
}
