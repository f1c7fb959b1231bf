// Type-I censored data generation under a test plan and the Monte Carlo
// estimate of the RMSE of the fitted design-stress median.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "altplan/lifestress.hpp"
#include "altplan/parallel.hpp"
#include "altplan/random.hpp"
#include "altplan/weibull_aft.hpp"

namespace altplan {

/// Constant-stress test plan: units allocations[j] held at stresses[j] until
/// failure or `duration`, whichever comes first.
struct TestPlan {
  std::vector<double> stresses;
  std::vector<int> allocations;
  double duration = std::numeric_limits<double>::infinity();
  double design_stress = 0.0;

  std::size_t levels() const { return stresses.size(); }

  int total_units() const { return std::accumulate(allocations.begin(), allocations.end(), 0); }

  /// Checks the plan invariants. `granularity` is the minimum gap between
  /// consecutive stresses.
  void validate(double granularity = 0.0) const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid plan: " + what); };
    if (stresses.size() != allocations.size()) fail("stress and allocation counts differ");
    if (stresses.size() < 2) fail("needs at least 2 stress levels");
    for (std::size_t j = 0; j < stresses.size(); ++j) {
      if (!std::isfinite(stresses[j])) fail("non-finite stress");
      if (allocations[j] < 1) fail("every stress needs at least one unit");
      if (j > 0 && !(stresses[j] > stresses[j - 1])) fail("stresses must be strictly increasing");
      if (j > 0 && stresses[j] - stresses[j - 1] < granularity * (1.0 - 1e-9)) {
        fail("stress gap below granularity");
      }
    }
    if (!(duration > 0.0)) fail("duration must be positive");
    if (!(design_stress < stresses.front())) fail("design stress must lie below the lowest test stress");
  }

  friend bool operator==(const TestPlan&, const TestPlan&) = default;
};

class Scenario {
 public:
  Scenario(LifeStressModel model, AftParams true_params, double design_stress, std::size_t n_sim)
      : model_(std::move(model)),
        params_(std::move(true_params)),
        design_stress_(design_stress),
        n_sim_(n_sim) {
    params_.validate(model_);
    if (n_sim_ == 0) throw std::invalid_argument("scenario: n_sim must be positive");
    q_true_ = median(design_stress_, model_, params_);
  }

  const LifeStressModel& model() const { return model_; }
  const AftParams& true_params() const { return params_; }
  double design_stress() const { return design_stress_; }
  std::size_t n_sim() const { return n_sim_; }
  /// Median lifetime at the design stress under the true parameters.
  double q_true() const { return q_true_; }

  Scenario with_n_sim(std::size_t n_sim) const {
    return Scenario(model_, params_, design_stress_, n_sim);
  }

 private:
  LifeStressModel model_;
  AftParams params_;
  double design_stress_;
  std::size_t n_sim_;
  double q_true_ = 0.0;
};

struct RmseEstimate {
  double rmse = std::numeric_limits<double>::infinity();
  double bias = 0.0;  // mean of (Q_hat - Q)
  std::size_t n_sim = 0;
  std::size_t n_fit_failures = 0;
  std::optional<std::vector<double>> replicate_errors;
};

inline double fitness_value(const RmseEstimate& e) { return e.rmse; }

inline CensoredDataset generate_dataset(const TestPlan& plan, const Scenario& scenario,
                                        RandomStream& stream) {
  CensoredDataset data;
  data.observations.reserve(static_cast<std::size_t>(std::max(0, plan.total_units())));
  const auto& model = scenario.model();
  const auto& params = scenario.true_params();
  for (std::size_t j = 0; j < plan.levels(); ++j) {
    const double s = plan.stresses[j];
    const double mu = model.location(params.beta, s);
    for (int k = 0; k < plan.allocations[j]; ++k) {
      // Inverse transform: exp(mu + sigma log(-log(1 - u)))
      const double t = std::exp(mu + params.sigma * std::log(-std::log1p(-stream.uniform())));
      const bool failed = t <= plan.duration;
      data.observations.push_back({s, failed ? t : plan.duration, failed});
    }
  }
  return data;
}

/// Analytic probability that a unit at each plan stress survives to the end
/// of the test, R(duration | S_j).
inline std::vector<double> expected_censoring(const TestPlan& plan, const Scenario& scenario) {
  std::vector<double> out;
  out.reserve(plan.levels());
  for (double s : plan.stresses) {
    out.push_back(std::isinf(plan.duration)
                      ? 0.0
                      : reliability(plan.duration, s, scenario.model(), scenario.true_params()));
  }
  return out;
}

struct SimulationOptions {
  std::size_t threads = 1;
  bool store_errors = false;
  int max_attempts = 3;
  FitOptions fit{};
};

struct ReplicateOutcome {
  double q_hat = 0.0;
  bool fit_failed = false;
};

/// One replicate of the objective: simulate, fit, predict. A replicate whose
/// fit throws or does not converge is regenerated from the next sub-stream;
/// after max_attempts the prediction of the initial least-squares fit of the
/// last dataset is used and the replicate is flagged.
inline ReplicateOutcome simulate_replicate(const TestPlan& plan, const Scenario& scenario,
                                           const RandomStream& replicate_stream,
                                           const SimulationOptions& opts = {}) {
  const auto& model = scenario.model();
  CensoredDataset last;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    RandomStream stream = replicate_stream.fork(static_cast<std::uint64_t>(attempt));
    last = generate_dataset(plan, scenario, stream);
    try {
      const FittedModel fit = fit_mle(last, model, std::nullopt, opts.fit);
      if (fit.converged) {
        const double q = median(scenario.design_stress(), model, fit.params);
        if (std::isfinite(q)) return {q, false};
      }
    } catch (const FitError&) {
      // regenerate
    }
  }
  const AftParams init = initial_estimate(last, model);
  double q = median(scenario.design_stress(), model, init);
  if (!std::isfinite(q)) q = std::numeric_limits<double>::max();
  return {q, true};
}

/// Monte Carlo RMSE of the design-stress median over scenario.n_sim()
/// replicates. Replicate j draws from stream.fork(j); errors are combined in
/// index order so the result does not depend on opts.threads.
inline RmseEstimate evaluate_rmse(const TestPlan& plan, const Scenario& scenario,
                                  const RandomStream& stream, const SimulationOptions& opts = {}) {
  if (std::abs(plan.design_stress - scenario.design_stress()) >
      1e-12 * (1.0 + std::abs(scenario.design_stress()))) {
    throw std::invalid_argument("plan and scenario disagree on the design stress");
  }
  for (double s : plan.stresses) scenario.model().require_in_domain(s);

  const std::size_t n = scenario.n_sim();
  std::vector<double> errors(n);
  std::vector<unsigned char> failed(n, 0);
  parallel_for(n, opts.threads, [&](std::size_t j) {
    const auto outcome = simulate_replicate(plan, scenario, stream.fork(j), opts);
    errors[j] = outcome.q_hat - scenario.q_true();
    failed[j] = outcome.fit_failed ? 1 : 0;
  });

  RmseEstimate est;
  est.n_sim = n;
  double sum_sq = 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum_sq += errors[j] * errors[j];
    sum += errors[j];
    est.n_fit_failures += failed[j];
  }
  est.rmse = std::sqrt(sum_sq / static_cast<double>(n));
  est.bias = sum / static_cast<double>(n);
  if (opts.store_errors) est.replicate_errors = std::move(errors);
  return est;
}

}  // namespace altplan
