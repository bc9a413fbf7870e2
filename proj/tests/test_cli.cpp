#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ddcd/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "ddcd_cli_test";

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + kWork.string() + "' && " + env + " '" DDCD_CLI "' " + args +
                          " > out.txt 2> err.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

struct Workdir {
  Workdir() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Workdir, "gen writes data, truth, sidecar and manifest") {
  REQUIRE(run("gen --d 20 --family er --degree 4 --mech linear --n 1000 --seed 7 --out a") == 0);
  for (const char* f : {"X.csv", "gt.tsv", "gt.json", "gen.manifest.json"}) CHECK(fs::exists(kWork / "a" / f));
  REQUIRE(run("gen --d 20 --family er --degree 4 --mech linear --n 1000 --seed 7 --out b") == 0);
  CHECK(slurp(kWork / "a/X.csv") == slurp(kWork / "b/X.csv"));

  const auto m = ddcd::read_json_file((kWork / "a/gen.manifest.json").string());
  CHECK(m["command"] == "gen");
  CHECK(m["seed"] == 7);
  CHECK(m.contains("build_id"));
  CHECK(m.contains("started_utc"));
  CHECK(m["outputs"].size() == 3);

  REQUIRE(run("gen --d 5 --degree 2 --mech cos --n 50 --out c") == 0);
  CHECK(ddcd::read_json_file((kWork / "c/gt.json").string())["sem"]["mechanism"] == "cos");
}

TEST_CASE_FIXTURE(Workdir, "bad flags are usage errors") {
  CHECK(run("gen --d notanumber") == 2);
  CHECK(run("gen --family tree") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("") == 2);
  CHECK(run("fit --data missing.csv") == 2);
}

TEST_CASE_FIXTURE(Workdir, "fit writes a dense W and history") {
  REQUIRE(run("gen --d 6 --degree 2 --n 300 --seed 1 --out g") == 0);
  REQUIRE(run("fit --data g/X.csv --out f") == 0);
  CHECK(line_count(kWork / "f/W.tsv") == 6);
  const auto W = ddcd::read_adjacency_tsv((kWork / "f/W.tsv").string());
  CHECK(W.size() == 36);
  CHECK(fs::exists(kWork / "f/history.csv"));
  CHECK(fs::exists(kWork / "f/fit.manifest.json"));

  REQUIRE(run("eval --pred f/W.tsv --truth g/gt.tsv --omega 0.3") == 0);
  const auto rep = ddcd::Json::parse(slurp(kWork / "out.txt"));
  CHECK(rep["shd"] == rep["shd_reversed"].get<int>() + rep["shd_extra"].get<int>() + rep["shd_missing"].get<int>());

  REQUIRE(run("h --input g/gt.tsv") == 0);
  CHECK(slurp(kWork / "out.txt") == "0\n");
}

TEST_CASE_FIXTURE(Workdir, "fit reruns are identical and the seed flag wins") {
  REQUIRE(run("gen --d 5 --degree 2 --n 200 --seed 2 --out g") == 0);
  std::ofstream(kWork / "c.json") << R"({"n_iter": 300, "seed": 1})";
  REQUIRE(run("fit --data g/X.csv --config c.json --out a") == 0);
  REQUIRE(run("fit --data g/X.csv --config c.json --out b") == 0);
  CHECK(slurp(kWork / "a/W.tsv") == slurp(kWork / "b/W.tsv"));
  REQUIRE(run("fit --data g/X.csv --config c.json --out e", "DDCD_SEED=4") == 0);
  REQUIRE(run("fit --data g/X.csv --config c.json --seed 4 --out s") == 0);
  CHECK(slurp(kWork / "e/W.tsv") == slurp(kWork / "s/W.tsv"));
  CHECK(slurp(kWork / "a/W.tsv") != slurp(kWork / "s/W.tsv"));
  CHECK(ddcd::read_json_file((kWork / "e/fit.manifest.json").string())["seed"] == 4);
}

TEST_CASE_FIXTURE(Workdir, "smooth and nonlinear fits write their curves") {
  REQUIRE(run("gen --d 4 --degree 1 --n 200 --out g") == 0);
  std::ofstream(kWork / "c.json") << R"({"n_iter": 100})";
  REQUIRE(run("fit --data g/X.csv --model smooth --config c.json --format edges --out s") == 0);
  CHECK(line_count(kWork / "s/normalizer_curve.csv") == 202);
  CHECK(slurp(kWork / "s/W.tsv").rfind("# nodes 4", 0) == 0);
  REQUIRE(run("fit --data g/X.csv --model nonlinear --config c.json --out n") == 0);
  CHECK(fs::exists(kWork / "n/encoder_curve.csv"));
  CHECK(fs::exists(kWork / "n/decoder_curve.csv"));
}

TEST_CASE_FIXTURE(Workdir, "ragged CSV exits 2 with the line number") {
  std::ofstream(kWork / "bad.csv") << "a,b\n1,2\n3,4\n5\n";
  CHECK(run("fit --data bad.csv") == 2);
  CHECK(slurp(kWork / "err.txt").find("line 4") != std::string::npos);
}

TEST_CASE_FIXTURE(Workdir, "diverging fit exits 3") {
  REQUIRE(run("gen --d 4 --degree 1 --n 100 --out g") == 0);
  std::ofstream(kWork / "c.json") << R"({"n_iter": 200, "learning_rate": 1e200, "lambda_dag_max": 1e300})";
  CHECK(run("fit --data g/X.csv --config c.json --out f") == 3);
  CHECK_FALSE(slurp(kWork / "err.txt").empty());
}

TEST_CASE_FIXTURE(Workdir, "bench grid, aggregate and resume") {
  std::ofstream(kWork / "grid.json") << R"({
    "graphs": [{"d": 5, "degree": 2}, {"d": 5, "family": "sf", "degree": 1}],
    "sems": [{"mechanism": "linear", "n": 100}],
    "models": ["linear", "smooth"],
    "seeds": [0, 1, 2],
    "config": {"n_iter": 100}
  })";
  REQUIRE(run("bench --grid grid.json --out b --workers 2") == 0);
  CHECK(line_count(kWork / "b/rows.csv") == 1 + 12);
  CHECK(line_count(kWork / "b/aggregate.csv") == 1 + 4);
  CHECK(fs::exists(kWork / "b/bench.manifest.json"));

  // Drop the last five rows, then resume: only those are recomputed.
  std::ifstream in(kWork / "b/rows.csv");
  std::string line, kept;
  for (int i = 0; i < 8 && std::getline(in, line); ++i) kept += line + "\n";
  in.close();
  std::ofstream(kWork / "b/rows.csv") << kept;
  REQUIRE(run("bench --grid grid.json --out b --resume") == 0);
  CHECK(line_count(kWork / "b/rows.csv") == 13);
  CHECK(ddcd::read_json_file((kWork / "b/bench.manifest.json").string())["rows"] == 12);
  const auto rows = ddcd::read_bench_rows((kWork / "b/rows.csv").string());
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK((rows[i - 1].cell < rows[i].cell || (rows[i - 1].cell == rows[i].cell && rows[i - 1].seed < rows[i].seed)));
}

TEST_CASE_FIXTURE(Workdir, "a sweep where every run fails exits 1") {
  std::ofstream(kWork / "grid.json") << R"({
    "graphs": [{"d": 4, "degree": 1}],
    "sems": [{"n": 50}], "models": ["linear"], "seeds": [0, 1],
    "config": {"n_iter": 200, "learning_rate": 1e200, "lambda_dag_max": 1e300}
  })";
  CHECK(run("bench --grid grid.json --out b") == 1);
}

TEST_CASE_FIXTURE(Workdir, "config prints resolved defaults") {
  REQUIRE(run("config --default --model smooth") == 0);
  const auto j = ddcd::Json::parse(slurp(kWork / "out.txt"));
  CHECK(j["threshold"] == 0.1);
  REQUIRE(run("config", "DDCD_SEED=12") == 0);
  CHECK(ddcd::Json::parse(slurp(kWork / "out.txt"))["seed"] == 12);
  CHECK(run("config", "DDCD_SEED=abc") == 2);
}
