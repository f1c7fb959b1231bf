// Command-line front end: fit, optimize, compare, simulate.
//
// Exit codes: 0 success, 2 input or configuration error, 3 no convergent
// fit, 1 anything else.
#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "altplan/altplan.hpp"

namespace altplan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitStatistical = 3;

namespace fs = std::filesystem;

struct GlobalOptions {
  std::vector<std::string> configs;
  std::optional<long long> seed;
  std::optional<std::size_t> threads;
  std::string out_dir = ".";
};

struct SearchOverrides {
  std::optional<std::string> fixed_n;
  std::optional<long long> variable_n;
  std::optional<long long> generations;
  std::optional<long long> population;
  std::optional<double> de_f;
  std::optional<double> de_cr;
  std::optional<double> granularity;
  std::optional<long long> search_n_sim;
  std::optional<long long> report_n_sim;
  std::optional<long long> replicates;
  bool crn = false;
};

inline KeyValueConfig load_configs(const GlobalOptions& g) {
  KeyValueConfig cfg;
  for (const auto& path : g.configs) cfg.parse_file(path);
  if (g.seed) cfg.set("run", "seed", std::to_string(*g.seed));
  return cfg;
}

inline std::size_t thread_count(const GlobalOptions& g) {
  return g.threads && *g.threads > 0 ? *g.threads : default_thread_count();
}

inline std::uint64_t seed_of(const KeyValueConfig& cfg) {
  return static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
}

inline std::ofstream open_output(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  const fs::path path = fs::path(g.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_resolved(const GlobalOptions& g, const KeyValueConfig& cfg) {
  auto out = open_output(g, "resolved-config.cfg");
  out << "# " << provenance_comment(seed_of(cfg)) << '\n';
  cfg.write(out);
}

inline void apply_search_overrides(KeyValueConfig& cfg, const SearchOverrides& o) {
  if (o.fixed_n) cfg.set("optimize", "fixed_n", *o.fixed_n);
  if (o.variable_n) cfg.set("optimize", "variable_n", std::to_string(*o.variable_n));
  if (o.generations) cfg.set("search", "generations", std::to_string(*o.generations));
  if (o.population) cfg.set("search", "population", std::to_string(*o.population));
  if (o.de_f) cfg.set("search", "de_f", text::format_double(*o.de_f));
  if (o.de_cr) cfg.set("search", "de_cr", text::format_double(*o.de_cr));
  if (o.granularity) cfg.set("search", "granularity", text::format_double(*o.granularity));
  if (o.search_n_sim) cfg.set("search", "search_n_sim", std::to_string(*o.search_n_sim));
  if (o.report_n_sim) cfg.set("search", "report_n_sim", std::to_string(*o.report_n_sim));
  if (o.replicates) cfg.set("search", "report_replicates", std::to_string(*o.replicates));
  if (o.crn) cfg.set("search", "crn", "true");
}

inline void reject_negative(const SearchOverrides& o) {
  for (const auto& v : {o.variable_n, o.generations, o.population, o.search_n_sim,
                        o.report_n_sim, o.replicates}) {
    if (v && *v < 0) throw std::invalid_argument("count options must be non-negative");
  }
}

// ---------------------------------------------------------------------------

inline int cmd_fit(const GlobalOptions& g, const std::string& data_path,
                   std::vector<std::string> models, std::ostream& out) {
  KeyValueConfig cfg = load_configs(g);
  const CensoredDataset data = read_dataset_csv(data_path);
  if (models.empty() && cfg.has("fit", "models")) {
    for (auto m : text::split(cfg.require("fit", "models"), ',')) models.emplace_back(m);
  }
  if (models.empty()) models = {"identity", "poly:2", "log"};

  std::vector<LifeStressModel> candidates;
  for (const auto& m : models) candidates.emplace_back(StressBasis::parse(m));
  cfg.set("fit", "data", data_path);
  cfg.set("fit", "models", text::join(models, ',', [](const std::string& s) { return s; }));
  cfg.set("run", "seed", std::to_string(seed_of(cfg)));
  write_resolved(g, cfg);

  const PreliminaryFit pf = fit_preliminary(data, candidates);
  {
    auto csv = open_output(g, "aic_table.csv");
    write_aic_csv(csv, pf, seed_of(cfg));
  }
  {
    KeyValueConfig stub;
    const auto& best = pf.best;
    stub.set("scenario", "basis", candidates[pf.selected].basis().name());
    stub.set("scenario", "beta", format_doubles(best.params.beta, ','));
    stub.set("scenario", "sigma", text::format_double(best.params.sigma));
    auto file = open_output(g, "selected-scenario.cfg");
    file << "# " << provenance_comment(seed_of(cfg)) << '\n';
    file << "# lowest AIC among: " << cfg.require("fit", "models") << '\n';
    file << "# add design_stress, stress_min, stress_max, total_units and duration before "
            "running optimize\n";
    stub.write(file);
  }

  char buf[160];
  out << "model        k   log-lik        AIC          sigma     beta\n";
  for (std::size_t i = 0; i < pf.table.size(); ++i) {
    const auto& row = pf.table[i];
    if (row.fit) {
      std::snprintf(buf, sizeof buf, "%-12s %-3zu %-14.4f %-12.4f %-9.4f ",
                    row.model.basis().name().c_str(), row.fit->n_params,
                    row.fit->log_likelihood_at_optimum, row.fit->aic, row.fit->params.sigma);
      out << buf << format_doubles(row.fit->params.beta, ' ');
    } else {
      std::snprintf(buf, sizeof buf, "%-12s failed: %s", row.model.basis().name().c_str(),
                    row.error.c_str());
      out << buf;
    }
    out << (i == pf.selected ? "   <- selected" : "") << '\n';
  }
  return kExitOk;
}

inline int cmd_optimize(const GlobalOptions& g, const SearchOverrides& o, std::ostream& out) {
  reject_negative(o);
  KeyValueConfig cfg = load_configs(g);
  apply_search_overrides(cfg, o);
  StudyConfig study = study_from_config(cfg);
  study.threads = thread_count(g);
  store_study(cfg, study);

  std::vector<std::size_t> fixed;
  const std::string fixed_spec = cfg.has("optimize", "fixed_n") ? cfg.require("optimize", "fixed_n") : "2..6";
  if (!fixed_spec.empty() && fixed_spec != "none") fixed = parse_count_list(fixed_spec);
  const long long variable = cfg.get_int("optimize", "variable_n", 6);
  if (variable == 1 || variable < 0) throw std::invalid_argument("variable_n must be 0 or >= 2");
  cfg.set("optimize", "fixed_n", fixed_spec);
  cfg.set("optimize", "variable_n", std::to_string(variable));
  for (std::size_t n : fixed) study.encoding(StressCountMode::Fixed, n).validate(study.model);
  if (variable > 0) {
    study.encoding(StressCountMode::Variable, static_cast<std::size_t>(variable)).validate(study.model);
  }
  write_resolved(g, cfg);

  std::vector<PlanReport> reports = run_fixed_n_study(study, fixed);
  if (variable > 0) reports.push_back(run_variable_n_study(study, static_cast<std::size_t>(variable)));

  const std::uint64_t seed = study.master_seed;
  {
    auto csv = open_output(g, "plan_report.csv");
    write_plan_report_csv(csv, reports, seed);
  }
  {
    auto csv = open_output(g, "trace.csv");
    write_trace_csv(csv, reports, seed);
  }
  std::ostringstream table;
  render_plan_table(table, reports, 10.0 * study.granularity);
  {
    auto txt = open_output(g, "plan_table.txt");
    txt << table.str();
  }
  if (!reports.empty()) {
    const auto best = std::min_element(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
      return a.mean_rmse < b.mean_rmse;
    });
    KeyValueConfig plan_cfg;
    store_plan(plan_cfg, best->plan);
    auto file = open_output(g, "best_plan.cfg");
    file << "# " << provenance_comment(seed) << '\n';
    file << "# lowest mean RMSE: N = " << best->label << '\n';
    plan_cfg.write(file);
  }
  out << table.str();
  return kExitOk;
}

inline std::vector<std::pair<std::string, TestPlan>> read_variants_csv(const std::string& path,
                                                                       const TestPlan& reference) {
  std::ifstream in(path);
  if (!in) throw DataFormatError(0, "cannot open variants file " + path);
  std::vector<std::pair<std::string, TestPlan>> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto f = text::split(body, ',');
    if (!header) {
      if (f.size() != 3 || f[0] != "variant" || f[1] != "stresses" || f[2] != "allocations") {
        throw DataFormatError(lineno, "expected header 'variant,stresses,allocations'");
      }
      header = true;
      continue;
    }
    if (f.size() != 3) throw DataFormatError(lineno, "expected 3 fields");
    TestPlan plan;
    plan.duration = reference.duration;
    plan.design_stress = reference.design_stress;
    for (auto s : text::split(f[1], ';')) {
      const auto v = text::parse_double(s);
      if (!v) throw DataFormatError(lineno, "bad stress value");
      plan.stresses.push_back(*v);
    }
    for (auto a : text::split(f[2], ';')) {
      const auto v = text::parse_int(a);
      if (!v) throw DataFormatError(lineno, "bad allocation value");
      plan.allocations.push_back(static_cast<int>(*v));
    }
    try {
      plan.validate();
    } catch (const std::invalid_argument& e) {
      throw DataFormatError(lineno, e.what());
    }
    out.emplace_back(std::string(f[0]), std::move(plan));
  }
  if (out.empty()) throw DataFormatError(0, "variants file lists no plans");
  return out;
}

inline TestPlan load_plan(const GlobalOptions& g, const KeyValueConfig& cfg,
                          const std::string& plan_path) {
  if (plan_path.empty()) return plan_from_config(cfg);
  KeyValueConfig pc;
  pc.parse_file(plan_path);
  (void)g;
  return plan_from_config(pc);
}

inline int cmd_compare(const GlobalOptions& g, const SearchOverrides& o,
                       const std::string& plan_path, const std::string& variants_path,
                       std::ostream& out) {
  reject_negative(o);
  KeyValueConfig cfg = load_configs(g);
  apply_search_overrides(cfg, o);
  StudyConfig study = study_from_config(cfg);
  study.threads = thread_count(g);
  const TestPlan plan = load_plan(g, cfg, plan_path);
  const auto variants = read_variants_csv(variants_path, plan);
  store_study(cfg, study);
  store_plan(cfg, plan);
  cfg.set("compare", "variants", variants_path);
  write_resolved(g, cfg);

  const Comparison cmp = compare_neighborhood(plan, variants, study);
  {
    auto csv = open_output(g, "comparison.csv");
    write_comparison_csv(csv, cmp, study.master_seed);
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "reference: mean RMSE %.1f (SE %.1f)\n", cmp.reference_mean,
                cmp.reference_se);
  out << buf;
  for (const auto& r : cmp.rows) {
    std::snprintf(buf, sizeof buf, "%-8s %-24s mean %10.1f  SE %8.1f  diff %+9.1f  %s\n",
                  r.id.c_str(), format_ints(r.plan.allocations, '/').c_str(), r.mean_rmse,
                  r.std_error, r.difference,
                  r.equivalent ? "equivalent" : (r.worse ? "worse" : "better"));
    out << buf;
  }
  return kExitOk;
}

inline int cmd_simulate(const GlobalOptions& g, const std::string& plan_path, std::ostream& out) {
  KeyValueConfig cfg = load_configs(g);
  StudyConfig study = study_from_config(cfg);
  const TestPlan plan = load_plan(g, cfg, plan_path);
  store_study(cfg, study);
  store_plan(cfg, plan);
  write_resolved(g, cfg);

  const Scenario scenario = study.scenario(1);
  RandomStream stream = RandomStream(study.master_seed).fork(4);
  const CensoredDataset data = generate_dataset(plan, scenario, stream);
  {
    auto csv = open_output(g, "dataset.csv");
    write_dataset_csv(csv, data, provenance_comment(study.master_seed));
  }
  const auto expected = expected_censoring(plan, scenario);
  auto csv = open_output(g, "simulate_summary.csv");
  csv << "# " << provenance_comment(study.master_seed) << '\n';
  csv << "stress,units,failures,empirical_censoring,expected_censoring\n";
  out << "stress        units  failures  censored  expected\n";
  std::size_t offset = 0;
  char buf[160];
  for (std::size_t j = 0; j < plan.levels(); ++j) {
    const auto units = static_cast<std::size_t>(plan.allocations[j]);
    std::size_t failures = 0;
    for (std::size_t k = 0; k < units; ++k) failures += data.observations[offset + k].observed ? 1 : 0;
    offset += units;
    const double empirical = 1.0 - static_cast<double>(failures) / static_cast<double>(units);
    csv << text::format_double(plan.stresses[j]) << ',' << units << ',' << failures << ','
        << text::format_double(empirical) << ',' << text::format_double(expected[j]) << '\n';
    std::snprintf(buf, sizeof buf, "%-13.6g %-6zu %-9zu %-9.3f %-9.3f\n", plan.stresses[j], units,
                  failures, empirical, expected[j]);
    out << buf;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Optimal constant-stress accelerated life test plans"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  GlobalOptions g;
  long long seed = 0;
  std::size_t threads = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master random seed");
  auto* thread_opt = app.add_option("--threads", threads, "Worker threads (default: all cores)");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option("--config", g.configs, "Config file(s); later files override earlier ones");

  SearchOverrides so;
  auto add_search_flags = [&](CLI::App* cmd) {
    cmd->add_option("--generations", so.generations, "DE generations");
    cmd->add_option("--population", so.population, "DE population size (0: 10 x genotype length)");
    cmd->add_option("--de-f", so.de_f, "DE differential weight F");
    cmd->add_option("--de-cr", so.de_cr, "DE crossover rate CR");
    cmd->add_option("--granularity", so.granularity, "Minimum gap between stresses");
    cmd->add_option("--search-n-sim", so.search_n_sim, "Replicates per objective evaluation");
    cmd->add_option("--report-n-sim", so.report_n_sim, "Replicates per reporting evaluation");
    cmd->add_option("--replicates", so.replicates, "RMSE evaluations behind mean and SE");
    cmd->add_flag("--crn", so.crn, "Common random numbers during the search");
  };

  std::string data_path;
  std::vector<std::string> models;
  auto* fit = app.add_subcommand("fit", "Fit candidate life-stress models and select by AIC");
  fit->add_option("--data", data_path, "CSV with columns stress,time,status")->required();
  fit->add_option("--model", models, "Candidate basis: identity, reciprocal, log, sqrt, poly:<d>");

  auto* opt = app.add_subcommand("optimize", "Search optimal test plans");
  add_search_flags(opt);
  opt->add_option("--fixed-n", so.fixed_n, "Stress counts, e.g. 2..6 or 2,3 (none to skip)");
  opt->add_option("--variable-n", so.variable_n, "N_max for the variable-N search (0 to skip)");

  std::string plan_path, variants_path;
  auto* cmp = app.add_subcommand("compare", "Compare a plan with alternative allocations");
  add_search_flags(cmp);
  cmp->add_option("--plan", plan_path, "Config file with a [plan] section (default: --config)");
  cmp->add_option("--variants", variants_path, "CSV with columns variant,stresses,allocations")
      ->required();

  auto* sim = app.add_subcommand("simulate", "Generate one dataset under a plan");
  sim->add_option("--plan", plan_path, "Config file with a [plan] section (default: --config)");

  std::vector<std::string> argv_store{"altplan"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (seed_opt->count() > 0) g.seed = seed;
  if (thread_opt->count() > 0) g.threads = threads;

  try {
    if (*fit) return cmd_fit(g, data_path, models, out);
    if (*opt) return cmd_optimize(g, so, out);
    if (*cmp) return cmd_compare(g, so, plan_path, variants_path, out);
    if (*sim) return cmd_simulate(g, plan_path, out);
  } catch (const DataFormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kExitStatistical;
  } catch (const StudyError& e) {
    err << "error: " << e.what() << '\n';
    return kExitStatistical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitInput;
}

}  // namespace altplan::cli
