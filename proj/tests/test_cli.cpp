#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "altplan_cli.hpp"

namespace fs = std::filesystem;
using namespace altplan;

namespace {

const std::string kSource = ALTPLAN_SOURCE_DIR;
std::string scenario(const std::string& name) { return kSource + "/scenarios/" + name; }

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("altplan_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Tiny budget so the full pipeline runs in well under a second.
const std::vector<std::string> kSmoke = {"--generations", "1", "--population", "4",
                                         "--search-n-sim", "10", "--report-n-sim", "20",
                                         "--replicates", "2"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("fit: malformed input exits 2 with a line number") {
  const auto dir = fresh_dir("fit_bad");
  spit(dir / "empty.csv", "");
  auto r = run({"--out-dir", dir.string(), "fit", "--data", (dir / "empty.csv").string()});
  CHECK(r.code == cli::kExitInput);

  spit(dir / "bad.csv", "stress,time,status\n0.5,10,1\n0.5,abc,0\n");
  r = run({"--out-dir", dir.string(), "fit", "--data", (dir / "bad.csv").string()});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err.find("line 3") != std::string::npos);

  r = run({"--out-dir", dir.string(), "fit", "--data", (dir / "missing.csv").string()});
  CHECK(r.code == cli::kExitInput);
}

TEST_CASE("fit: single-stress data exits 3") {
  const auto dir = fresh_dir("fit_single");
  std::string csv = "stress,time,status\n";
  for (int i = 1; i <= 20; ++i) csv += "0.5," + std::to_string(10 * i) + ",1\n";
  spit(dir / "one.csv", csv);
  const auto r = run({"--out-dir", dir.string(), "fit", "--data", (dir / "one.csv").string()});
  CHECK(r.code == cli::kExitStatistical);
}

TEST_CASE("fit: case-study preliminary data selects the quadratic") {
  const auto dir = fresh_dir("fit_case");
  const auto r = run({"--out-dir", dir.string(), "fit", "--data", scenario("case_study_prelim.csv")});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(fs::exists(dir / "resolved-config.cfg"));
  CHECK(fs::exists(dir / "aic_table.csv"));

  KeyValueConfig sel;
  sel.parse_file((dir / "selected-scenario.cfg").string());
  CHECK(sel.require("scenario", "basis") == "poly:2");
  const auto beta = sel.get_doubles("scenario", "beta");
  REQUIRE(beta.size() == 3);
  // Synthetic data drawn from (30.310, -10.108, 0.858; 0.2418) with 161 units.
  CHECK(beta[0] == Catch::Approx(30.310).epsilon(0.05));
  CHECK(beta[1] == Catch::Approx(-10.108).epsilon(0.05));
  CHECK(beta[2] == Catch::Approx(0.858).epsilon(0.10));
  CHECK(sel.get_double("scenario", "sigma") == Catch::Approx(0.2418).epsilon(0.15));

  const auto aic = slurp(dir / "aic_table.csv");
  CHECK(aic.rfind("# altplan ", 0) == 0);
  CHECK(aic.find("\nmodel,n_params,") != std::string::npos);
}

TEST_CASE("optimize: smoke run emits a valid plan") {
  const auto dir = fresh_dir("opt_smoke");
  const auto r = run(with({"--config", scenario("linear.cfg"), "--out-dir", dir.string(), "optimize",
                           "--fixed-n", "2", "--variable-n", "0"},
                          kSmoke));
  REQUIRE(r.code == cli::kExitOk);
  for (const char* f : {"resolved-config.cfg", "plan_report.csv", "trace.csv", "plan_table.txt",
                        "best_plan.cfg"}) {
    CHECK(fs::exists(dir / f));
  }
  KeyValueConfig best;
  best.parse_file((dir / "best_plan.cfg").string());
  const TestPlan plan = plan_from_config(best);
  CHECK(plan.total_units() == 100);
  CHECK(plan.levels() == 2);
  for (double s : plan.stresses) {
    CHECK(s >= 0.1);
    CHECK(s <= 0.9);
  }
}

TEST_CASE("optimize: fixed 2..6 plus variable 6 gives six rows") {
  const auto dir = fresh_dir("opt_rows");
  const auto r = run(with({"--config", scenario("linear.cfg"), "--out-dir", dir.string(), "optimize",
                           "--fixed-n", "2..6", "--variable-n", "6"},
                          kSmoke));
  REQUIRE(r.code == cli::kExitOk);
  std::istringstream csv(slurp(dir / "plan_report.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(csv, line)) {
    if (!line.empty() && line[0] != '#' && line.rfind("label,", 0) != 0) rows.push_back(line);
  }
  CHECK(rows.size() == 6);
}

TEST_CASE("optimize: invalid bounds or granularity exit 2") {
  const auto dir = fresh_dir("opt_bad");
  spit(dir / "bounds.cfg", "[scenario]\nstress_min = 0.9\nstress_max = 0.1\n");
  auto r = run(with({"--config", scenario("linear.cfg"), "--config", (dir / "bounds.cfg").string(),
                     "--out-dir", dir.string(), "optimize"},
                    kSmoke));
  CHECK(r.code == cli::kExitInput);

  r = run(with({"--config", scenario("linear.cfg"), "--out-dir", dir.string(), "optimize",
                "--granularity", "0.5"},
               kSmoke));
  CHECK(r.code == cli::kExitInput);

  r = run(with({"--config", scenario("linear.cfg"), "--out-dir", dir.string(), "optimize",
                "--variable-n", "1"},
               kSmoke));
  CHECK(r.code == cli::kExitInput);

  r = run({"--out-dir", dir.string(), "optimize", "--no-such-flag"});
  CHECK(r.code == cli::kExitInput);
}

TEST_CASE("optimize: identical resolved configs give byte-identical CSVs") {
  const auto a = fresh_dir("repro_a");
  const auto b = fresh_dir("repro_b");
  const auto c = fresh_dir("repro_c");
  auto args = [&](const fs::path& dir, std::vector<std::string> head) {
    head.insert(head.end(), {"--out-dir", dir.string(), "optimize", "--fixed-n", "2",
                             "--variable-n", "3"});
    return with(head, kSmoke);
  };
  REQUIRE(run(args(a, {"--config", scenario("linear.cfg"), "--threads", "1"})).code == 0);
  // Re-run from the first run's resolved config alone, with a different worker count.
  REQUIRE(run(args(b, {"--config", (a / "resolved-config.cfg").string(), "--threads", "3"})).code ==
          0);
  for (const char* f : {"plan_report.csv", "trace.csv", "plan_table.txt", "best_plan.cfg"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "resolved-config.cfg") == slurp(b / "resolved-config.cfg"));

  REQUIRE(run(args(c, {"--config", scenario("linear.cfg"), "--seed", "99"})).code == 0);
  CHECK(slurp(a / "plan_report.csv") != slurp(c / "plan_report.csv"));
}

TEST_CASE("compare: optimum as its own variant has zero difference") {
  const auto dir = fresh_dir("cmp_self");
  spit(dir / "variants.csv", "variant,stresses,allocations\nself,0.2;0.9,82;18\n");
  const auto r = run({"--config", scenario("linear.cfg"), "--out-dir", dir.string(), "compare",
                      "--plan", scenario("linear_plan.cfg"), "--variants",
                      (dir / "variants.csv").string(), "--report-n-sim", "50", "--search-n-sim",
                      "10", "--replicates", "3", "--crn"});
  REQUIRE(r.code == cli::kExitOk);
  const auto csv = slurp(dir / "comparison.csv");
  const auto at = csv.find("\nself,");
  REQUIRE(at != std::string::npos);
  const auto row = text::split(std::string_view(csv).substr(at + 1, csv.find('\n', at + 1) - at - 1), ',');
  REQUIRE(row.size() == 9);
  CHECK(row[5] == "0");  // difference
  CHECK(row[7] == "1");  // equivalent
  CHECK(row[8] == "0");
}

TEST_CASE("compare: mismatched totals exit 2") {
  const auto dir = fresh_dir("cmp_bad");
  spit(dir / "variants.csv", "variant,stresses,allocations\nbig,0.2;0.9,90;20\n");
  const auto r = run({"--config", scenario("linear.cfg"), "--out-dir", dir.string(), "compare",
                      "--plan", scenario("linear_plan.cfg"), "--variants",
                      (dir / "variants.csv").string()});
  CHECK(r.code == cli::kExitInput);
}

TEST_CASE("simulate: output round-trips through fit") {
  const auto dir = fresh_dir("sim");
  auto r = run({"--config", scenario("case_study.cfg"), "--out-dir", dir.string(), "simulate",
                "--plan", scenario("case_study_prelim_plan.cfg")});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(fs::exists(dir / "resolved-config.cfg"));

  const auto data = read_dataset_csv((dir / "dataset.csv").string());
  CHECK(data.size() == 161);

  std::istringstream summary(slurp(dir / "simulate_summary.csv"));
  std::string line;
  std::getline(summary, line);
  CHECK(line.rfind("# altplan ", 0) == 0);
  std::getline(summary, line);
  CHECK(line == "stress,units,failures,empirical_censoring,expected_censoring");
  int levels = 0;
  while (std::getline(summary, line)) ++levels;
  CHECK(levels == 7);

  const auto fit_dir = dir / "fit";
  r = run({"--out-dir", fit_dir.string(), "fit", "--data", (dir / "dataset.csv").string(), "--model",
           "poly:2"});
  CHECK(r.code == cli::kExitOk);
  CHECK(fs::exists(fit_dir / "selected-scenario.cfg"));
}
