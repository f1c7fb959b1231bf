// Study orchestration: preliminary fitting with AIC selection, fixed-N and
// variable-N plan searches with replicate-based reporting, and CRN
// comparison of alternative plans.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "altplan/deopt.hpp"
#include "altplan/lifestress.hpp"
#include "altplan/parallel.hpp"
#include "altplan/random.hpp"
#include "altplan/simulator.hpp"
#include "altplan/weibull_aft.hpp"

namespace altplan {

class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Preliminary fit

struct CandidateFit {
  LifeStressModel model;
  std::optional<FittedModel> fit;  // empty when fitting threw
  std::string error;               // why fit is empty or unconverged
};

struct PreliminaryFit {
  std::size_t selected = 0;
  FittedModel best;
  std::vector<CandidateFit> table;
};

/// Fits every candidate and selects the converged fit with the smallest AIC,
/// ties going to fewer parameters.
inline PreliminaryFit fit_preliminary(const CensoredDataset& data,
                                      const std::vector<LifeStressModel>& candidates,
                                      const FitOptions& opts = {}) {
  if (candidates.empty()) throw std::invalid_argument("fit_preliminary: no candidate models");
  PreliminaryFit out;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CandidateFit row{candidates[i], std::nullopt, {}};
    try {
      row.fit = fit_mle(data, candidates[i], std::nullopt, opts);
      if (!row.fit->converged) row.error = "did not converge";
    } catch (const FitError& e) {
      row.error = e.what();
    }
    if (row.fit && row.fit->converged) {
      const auto& f = *row.fit;
      if (!best) {
        best = i;
      } else {
        const auto& b = *out.table[*best].fit;
        if (f.aic < b.aic || (f.aic == b.aic && f.n_params < b.n_params)) best = i;
      }
    }
    out.table.push_back(std::move(row));
  }
  if (!best) throw StudyError("no candidate model produced a converged fit");
  out.selected = *best;
  out.best = *out.table[*best].fit;
  return out;
}

// ---------------------------------------------------------------------------
// Duration calibration

/// Test duration t_e with R(t_e | reference_stress) = target_censoring,
/// found by bisection on log t.
inline double calibrate_duration(const LifeStressModel& model, const AftParams& params,
                                 double reference_stress, double target_censoring) {
  if (!(target_censoring > 0.0 && target_censoring < 1.0)) {
    throw std::invalid_argument("calibrate_duration: target censoring must lie in (0, 1)");
  }
  params.validate(model);
  const double mu = model.location(params.beta, reference_stress);
  auto survival = [&](double log_t) { return reliability(std::exp(log_t), reference_stress, model, params); };
  double lo = mu - 10.0 * params.sigma;
  double hi = mu + 10.0 * params.sigma;
  while (survival(lo) < target_censoring) lo -= 10.0 * params.sigma;
  while (survival(hi) > target_censoring) hi += 10.0 * params.sigma;
  for (int iter = 0; iter < 400 && hi - lo > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (survival(mid) > target_censoring) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Studies

struct StudyConfig {
  LifeStressModel model;
  AftParams true_params;
  double design_stress = 0.0;
  StressInterval bounds{0.0, 1.0};
  int total_units = 100;
  double duration = std::numeric_limits<double>::infinity();
  double granularity = 1e-5;
  DeConfig de{};
  std::size_t search_n_sim = 200;
  std::size_t report_n_sim = 1000;
  std::size_t report_replicates = 100;
  std::uint64_t master_seed = 1;
  bool common_random_numbers = false;  // search objective reuses one stream
  std::size_t threads = 1;
  FitOptions fit{};

  Scenario scenario(std::size_t n_sim) const {
    return Scenario(model, true_params, design_stress, n_sim);
  }

  PlanEncoding encoding(StressCountMode mode, std::size_t n) const {
    return {mode, n, bounds, granularity, total_units, duration, design_stress};
  }

  void validate() const {
    true_params.validate(model);
    if (search_n_sim == 0 || report_n_sim == 0 || report_replicates == 0) {
      throw std::invalid_argument("study: n_sim and replicate counts must be positive");
    }
    if (report_n_sim < search_n_sim) {
      throw std::invalid_argument("study: report_n_sim must be >= search_n_sim");
    }
    encoding(StressCountMode::Fixed, 2).validate(model);
  }
};

struct PlanReport {
  std::string label;  // "N" or "N*" for variable mode
  TestPlan plan;
  double min_rmse = 0.0;   // best fitness found by the search
  double mean_rmse = 0.0;  // over report replicates
  double std_error = 0.0;
  std::size_t n_fit_failures = 0;
  std::vector<double> replicate_rmse;
  std::vector<GenerationRecord> generation_trace;
  std::size_t evaluations = 0;
};

namespace streams {
inline constexpr std::uint64_t kFixedStudy = 1;
inline constexpr std::uint64_t kVariableStudy = 2;
inline constexpr std::uint64_t kComparison = 3;
inline constexpr std::uint64_t kSearch = 0;
inline constexpr std::uint64_t kReport = 1;
inline constexpr std::uint64_t kCommon = 7;
}  // namespace streams

struct ReplicateSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_fit_failures = 0;
  std::vector<double> values;
};

/// `replicates` RMSE evaluations of one plan, replicate r on root.fork(r).
inline ReplicateSummary evaluate_replicates(const TestPlan& plan, const Scenario& scenario,
                                            const RandomStream& root, std::size_t replicates,
                                            std::size_t threads, const FitOptions& fit = {}) {
  ReplicateSummary out;
  out.values.assign(replicates, 0.0);
  std::vector<std::size_t> failures(replicates, 0);
  SimulationOptions sim;
  sim.fit = fit;
  parallel_for(replicates, threads, [&](std::size_t r) {
    const auto est = evaluate_rmse(plan, scenario, root.fork(r), sim);
    out.values[r] = est.rmse;
    failures[r] = est.n_fit_failures;
  });
  const double n = static_cast<double>(replicates);
  out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : out.values) ss += (v - out.mean) * (v - out.mean);
  out.std_error = replicates > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  out.n_fit_failures = std::accumulate(failures.begin(), failures.end(), std::size_t{0});
  return out;
}

namespace detail {

inline PlanReport run_study(const StudyConfig& config, const PlanEncoding& encoding,
                            const RandomStream& study_stream) {
  encoding.validate(config.model);
  const Scenario search_scenario = config.scenario(config.search_n_sim);
  const RandomStream search_stream = study_stream.fork(streams::kSearch);
  const RandomStream common = search_stream.fork(streams::kCommon);
  SimulationOptions sim;
  sim.fit = config.fit;
  auto objective = [&](const TestPlan& plan, const RandomStream& eval_stream) {
    return evaluate_rmse(plan, search_scenario,
                         config.common_random_numbers ? common : eval_stream, sim);
  };
  auto search = optimize(objective, encoding, config.de, search_stream, config.threads);

  PlanReport report;
  report.label = encoding.label();
  report.plan = search.best_plan;
  report.min_rmse = search.best_estimate.rmse;
  report.generation_trace = std::move(search.trace);
  report.evaluations = search.evaluations;

  auto summary = evaluate_replicates(report.plan, config.scenario(config.report_n_sim),
                                     study_stream.fork(streams::kReport),
                                     config.report_replicates, config.threads, config.fit);
  report.mean_rmse = summary.mean;
  report.std_error = summary.std_error;
  report.n_fit_failures = summary.n_fit_failures;
  report.replicate_rmse = std::move(summary.values);
  return report;
}

}  // namespace detail

/// One optimized plan per N, each re-evaluated on streams the search never
/// touched. Reports come back in the order of n_values.
inline std::vector<PlanReport> run_fixed_n_study(const StudyConfig& config,
                                                 const std::vector<std::size_t>& n_values) {
  config.validate();
  const RandomStream master(config.master_seed);
  std::vector<PlanReport> out;
  for (std::size_t n : n_values) {
    out.push_back(detail::run_study(config, config.encoding(StressCountMode::Fixed, n),
                                    master.fork(streams::kFixedStudy).fork(n)));
  }
  return out;
}

inline PlanReport run_variable_n_study(const StudyConfig& config, std::size_t n_max) {
  config.validate();
  const RandomStream master(config.master_seed);
  return detail::run_study(config, config.encoding(StressCountMode::Variable, n_max),
                           master.fork(streams::kVariableStudy).fork(n_max));
}

// ---------------------------------------------------------------------------
// Neighbourhood comparison

struct ComparisonRow {
  std::string id;
  TestPlan plan;
  double mean_rmse = 0.0;
  double std_error = 0.0;
  double difference = 0.0;  // mean_rmse minus the reference plan's
  double pooled_se = 0.0;
  bool equivalent = false;  // |difference| <= 2 pooled SE
  bool worse = false;       // difference > 2 pooled SE
};

struct Comparison {
  double reference_mean = 0.0;
  double reference_se = 0.0;
  std::vector<ComparisonRow> rows;
};

inline constexpr double kEquivalenceSeMultiple = 2.0;

/// Evaluates the reference plan and every variant on the same replicate
/// streams (common random numbers) and flags variants statistically
/// indistinguishable from the reference.
inline Comparison compare_neighborhood(const TestPlan& plan,
                                       const std::vector<std::pair<std::string, TestPlan>>& variants,
                                       const StudyConfig& config) {
  config.validate();
  plan.validate();
  for (const auto& [id, v] : variants) {
    v.validate();
    if (v.total_units() != plan.total_units()) {
      throw std::invalid_argument("variant '" + id + "' has " + std::to_string(v.total_units()) +
                                  " units, reference has " + std::to_string(plan.total_units()));
    }
  }
  const Scenario scenario = config.scenario(config.report_n_sim);
  const RandomStream root = RandomStream(config.master_seed).fork(streams::kComparison);
  const auto ref = evaluate_replicates(plan, scenario, root, config.report_replicates,
                                       config.threads, config.fit);
  Comparison out;
  out.reference_mean = ref.mean;
  out.reference_se = ref.std_error;
  for (const auto& [id, v] : variants) {
    const auto s = v == plan ? ref
                             : evaluate_replicates(v, scenario, root, config.report_replicates,
                                                   config.threads, config.fit);
    ComparisonRow row;
    row.id = id;
    row.plan = v;
    row.mean_rmse = s.mean;
    row.std_error = s.std_error;
    row.difference = s.mean - ref.mean;
    row.pooled_se = std::sqrt(s.std_error * s.std_error + ref.std_error * ref.std_error);
    row.equivalent = std::abs(row.difference) <= kEquivalenceSeMultiple * row.pooled_se;
    row.worse = row.difference > kEquivalenceSeMultiple * row.pooled_se;
    out.rows.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Display helpers

/// Merges consecutive stresses closer than `tolerance` (allocations summed,
/// stress set to the allocation-weighted mean).
inline TestPlan merge_close_stresses(const TestPlan& plan, double tolerance) {
  TestPlan out = plan;
  out.stresses.clear();
  out.allocations.clear();
  double weighted = 0.0;
  int units = 0;
  double last = 0.0;
  for (std::size_t j = 0; j < plan.levels(); ++j) {
    if (j > 0 && plan.stresses[j] - last >= tolerance) {
      out.stresses.push_back(weighted / units);
      out.allocations.push_back(units);
      weighted = 0.0;
      units = 0;
    }
    weighted += plan.stresses[j] * plan.allocations[j];
    units += plan.allocations[j];
    last = plan.stresses[j];
  }
  if (units > 0) {
    out.stresses.push_back(weighted / units);
    out.allocations.push_back(units);
  }
  return out;
}

/// Levels of a merged plan holding at least `min_units` units.
inline TestPlan dominant_levels(const TestPlan& plan, double merge_tolerance, int min_units = 5) {
  const TestPlan merged = merge_close_stresses(plan, merge_tolerance);
  TestPlan out = merged;
  out.stresses.clear();
  out.allocations.clear();
  for (std::size_t j = 0; j < merged.levels(); ++j) {
    if (merged.allocations[j] >= min_units) {
      out.stresses.push_back(merged.stresses[j]);
      out.allocations.push_back(merged.allocations[j]);
    }
  }
  return out;
}

/// Whether two replicate means differ by at most `multiple` pooled SEs.
inline bool indistinguishable(double mean_a, double se_a, double mean_b, double se_b,
                              double multiple) {
  return std::abs(mean_a - mean_b) <= multiple * std::sqrt(se_a * se_a + se_b * se_b);
}

}  // namespace altplan
