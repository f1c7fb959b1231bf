// Differential evolution (rand/1/bin) over a normalized genotype in [0,1]^d,
// and the genotype <-> TestPlan encoding with constraint repair.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "altplan/lifestress.hpp"
#include "altplan/parallel.hpp"
#include "altplan/random.hpp"
#include "altplan/simulator.hpp"

namespace altplan {

enum class DeStrategy { Rand1Bin };

struct DeConfig {
  std::size_t population_size = 0;  // 0: ten times the genotype dimension
  double differential_weight = 0.8;
  double crossover_rate = 0.9;
  std::size_t generations = 50;
  DeStrategy strategy = DeStrategy::Rand1Bin;

  std::size_t population_for(std::size_t dim) const {
    return population_size == 0 ? 10 * dim : population_size;
  }

  void validate(std::size_t dim) const {
    if (population_for(dim) < 4) throw std::invalid_argument("DE population size must be >= 4");
    if (!(differential_weight > 0.0 && differential_weight <= 2.0)) {
      throw std::invalid_argument("DE differential weight F must lie in (0, 2]");
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
      throw std::invalid_argument("DE crossover rate CR must lie in [0, 1]");
    }
    if (generations == 0) throw std::invalid_argument("DE generations must be positive");
  }
};

inline double fitness_value(double v) { return v; }

struct GenerationRecord {
  std::size_t generation = 0;
  double best_fitness = std::numeric_limits<double>::infinity();  // best ever so far
  double population_mean = std::numeric_limits<double>::infinity();  // over finite members
  std::size_t failed_evaluations = 0;  // in this generation
};

template <class Result>
struct DeOutcome {
  std::vector<double> best_genes;
  std::optional<Result> best;
  double best_fitness = std::numeric_limits<double>::infinity();
  std::vector<GenerationRecord> trace;
  std::size_t evaluations = 0;
};

/// Minimizes fn over [0,1]^dim. fn(genes, eval_stream) returns a value with
/// an ADL-visible fitness_value(); evaluation k receives
/// stream.fork(1).fork(k), and the DE's own draws come from stream.fork(0).
/// A candidate is evaluated once; an evaluation that throws gets +inf.
/// Evaluations within a generation run on up to `threads` workers and
/// selection happens after all of them finish.
template <class Fn>
auto differential_evolution(Fn&& fn, std::size_t dim, const DeConfig& config,
                            const RandomStream& stream, std::size_t threads = 1) {
  using Result = std::decay_t<std::invoke_result_t<Fn&, std::span<const double>, const RandomStream&>>;
  config.validate(dim);
  if (dim == 0) throw std::invalid_argument("differential_evolution: empty genotype");

  const std::size_t np = config.population_for(dim);
  RandomStream rng = stream.fork(0);
  const RandomStream eval_root = stream.fork(1);

  DeOutcome<Result> out;
  std::vector<std::vector<double>> population(np, std::vector<double>(dim));
  std::vector<std::optional<Result>> results(np);
  std::vector<double> fitness(np, std::numeric_limits<double>::infinity());

  std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
  std::vector<std::optional<Result>> trial_results(np);
  std::vector<double> trial_fitness(np);

  auto evaluate = [&](std::vector<std::vector<double>>& genes,
                      std::vector<std::optional<Result>>& res, std::vector<double>& fit) {
    const std::size_t base = out.evaluations;
    parallel_for(np, threads, [&](std::size_t i) {
      try {
        res[i].emplace(fn(std::span<const double>(genes[i]), eval_root.fork(base + i)));
        const double v = fitness_value(*res[i]);
        fit[i] = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      } catch (const std::exception&) {
        res[i].reset();
        fit[i] = std::numeric_limits<double>::infinity();
      }
    });
    out.evaluations += np;
  };

  auto record = [&](std::size_t generation, const std::vector<double>& evaluated) {
    for (std::size_t i = 0; i < np; ++i) {
      if (fitness[i] < out.best_fitness) {
        out.best_fitness = fitness[i];
        out.best_genes = population[i];
        out.best = results[i];
      }
    }
    GenerationRecord rec;
    rec.generation = generation;
    rec.best_fitness = out.best_fitness;
    double sum = 0.0;
    std::size_t finite = 0;
    for (double v : fitness) {
      if (std::isfinite(v)) {
        sum += v;
        ++finite;
      }
    }
    if (finite > 0) rec.population_mean = sum / static_cast<double>(finite);
    rec.failed_evaluations = static_cast<std::size_t>(
        std::count_if(evaluated.begin(), evaluated.end(), [](double v) { return std::isinf(v); }));
    out.trace.push_back(rec);
  };

  for (auto& member : population) {
    for (auto& g : member) g = rng.uniform();
  }
  evaluate(population, results, fitness);
  if (out.best_genes.empty()) out.best_genes = population.front();
  record(0, fitness);

  const double f = config.differential_weight;
  const double cr = config.crossover_rate;
  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do { r1 = rng.uniform_index(np); } while (r1 == i);
      do { r2 = rng.uniform_index(np); } while (r2 == i || r2 == r1);
      do { r3 = rng.uniform_index(np); } while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = rng.uniform_index(dim);
      auto& trial = trials[i];
      for (std::size_t k = 0; k < dim; ++k) {
        if (k == forced || rng.uniform() < cr) {
          const double v = population[r1][k] + f * (population[r2][k] - population[r3][k]);
          trial[k] = std::clamp(v, 0.0, 1.0);
        } else {
          trial[k] = population[i][k];
        }
      }
    }
    evaluate(trials, trial_results, trial_fitness);
    for (std::size_t i = 0; i < np; ++i) {
      if (trial_fitness[i] <= fitness[i]) {
        std::swap(population[i], trials[i]);
        std::swap(results[i], trial_results[i]);
        fitness[i] = trial_fitness[i];
      }
    }
    record(gen, trial_fitness);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plan encoding

enum class StressCountMode { Fixed, Variable };

/// Maps a genotype of n_stresses stress genes followed by n_stresses
/// allocation genes onto a valid TestPlan.
struct PlanEncoding {
  StressCountMode mode = StressCountMode::Fixed;
  std::size_t n_stresses = 2;  // N in fixed mode, N_max in variable mode
  StressInterval bounds{0.0, 1.0};
  double granularity = 1e-5;
  int total_units = 100;
  double duration = std::numeric_limits<double>::infinity();
  double design_stress = 0.0;

  static PlanEncoding fixed(std::size_t n, StressInterval bounds, int total_units,
                            double duration, double design_stress, double granularity = 1e-5) {
    return {StressCountMode::Fixed, n, bounds, granularity, total_units, duration, design_stress};
  }
  static PlanEncoding variable(std::size_t n_max, StressInterval bounds, int total_units,
                               double duration, double design_stress,
                               double granularity = 1e-5) {
    return {StressCountMode::Variable, n_max, bounds, granularity, total_units, duration,
            design_stress};
  }

  int min_units_per_stress() const { return mode == StressCountMode::Fixed ? 1 : 0; }
  std::size_t dimension() const { return 2 * n_stresses; }

  std::string label() const {
    return std::to_string(n_stresses) + (mode == StressCountMode::Variable ? "*" : "");
  }

  void validate() const {
    auto fail = [](const std::string& what) {
      throw std::invalid_argument("invalid plan encoding: " + what);
    };
    if (n_stresses < 2) fail("needs at least 2 stresses");
    if (!(std::isfinite(bounds.lower) && std::isfinite(bounds.upper) && bounds.lower < bounds.upper)) {
      fail("stress bounds must be finite with lower < upper");
    }
    if (!(granularity > 0.0)) fail("granularity must be positive");
    if (static_cast<double>(n_stresses - 1) * granularity > bounds.upper - bounds.lower) {
      fail("stress range too narrow for the granularity");
    }
    const int needed = mode == StressCountMode::Fixed ? static_cast<int>(n_stresses) : 2;
    if (total_units < needed) fail("too few units for the number of stresses");
    if (!(duration > 0.0)) fail("duration must be positive");
    if (!(design_stress < bounds.lower)) fail("design stress must lie below the stress bounds");
  }

  /// Validates the encoding against a model domain.
  void validate(const LifeStressModel& model) const {
    validate();
    model.require_in_domain(bounds.lower);
    model.require_in_domain(bounds.upper);
    model.require_in_domain(design_stress);
  }
};

namespace detail {

/// Largest-remainder apportionment of `total` proportional to `weights`
/// (all weights zero: equal shares). Ties go to the lower index.
inline std::vector<int> apportion(std::span<const double> weights, int total) {
  const std::size_t n = weights.size();
  std::vector<int> out(n, 0);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> remainder(n);
  int assigned = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double quota = sum > 0.0 ? total * (weights[j] / sum) : static_cast<double>(total) / n;
    const double whole = std::floor(quota);
    out[j] = static_cast<int>(whole);
    remainder[j] = quota - whole;
    assigned += out[j];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n) {
    ++out[order[k]];
    ++assigned;
  }
  // Rounding can only overshoot by a unit or so; trim from the largest.
  while (assigned > total) {
    const auto it = std::max_element(out.begin(), out.end());
    --*it;
    --assigned;
  }
  return out;
}

/// Raises every allocation to `floor` units, taking each missing unit from
/// the currently largest allocation (lowest index on ties).
inline void apply_unit_floor(std::vector<int>& alloc, int floor) {
  for (std::size_t j = 0; j < alloc.size(); ++j) {
    while (alloc[j] < floor) {
      const auto donor = std::max_element(alloc.begin(), alloc.end());
      if (*donor <= floor) throw std::logic_error("apply_unit_floor: not enough units");
      --*donor;
      ++alloc[j];
    }
  }
}

/// In-place repair of a sorted stress vector so consecutive gaps are at
/// least `gap`, all values within [lo, hi].
inline void repair_gaps(std::vector<double>& s, double gap, double lo, double hi) {
  for (std::size_t j = 1; j < s.size(); ++j) s[j] = std::max(s[j], s[j - 1] + gap);
  if (!s.empty() && s.back() > hi) {
    s.back() = hi;
    for (std::size_t j = s.size() - 1; j-- > 0;) s[j] = std::min(s[j], s[j + 1] - gap);
  }
  if (!s.empty() && s.front() < lo) s.front() = lo;
}

}  // namespace detail

/// Throws std::logic_error when a decoded plan breaks an encoding constraint.
inline void check_decoded(const TestPlan& plan, const PlanEncoding& enc) {
  try {
    plan.validate(enc.granularity);
  } catch (const std::invalid_argument& e) {
    throw std::logic_error(std::string("decode produced an invalid plan: ") + e.what());
  }
  if (plan.total_units() != enc.total_units) throw std::logic_error("decode lost units");
  for (double s : plan.stresses) {
    if (s < enc.bounds.lower || s > enc.bounds.upper) {
      throw std::logic_error("decode produced a stress outside the bounds");
    }
  }
  if (enc.mode == StressCountMode::Fixed && plan.levels() != enc.n_stresses) {
    throw std::logic_error("decode changed the number of stresses in fixed mode");
  }
}

/// Genotype -> plan. Stress genes map affinely onto the bounds and are sorted
/// (carrying their allocation genes); allocations are apportioned by largest
/// remainder. Fixed mode floors every allocation at one unit. Variable mode
/// drops stresses left with no units, keeping the two largest allocation
/// genes with (n - 1, 1) units if fewer than two survive. Finally the
/// stresses are spread to the granularity.
inline TestPlan decode(std::span<const double> genes, const PlanEncoding& enc) {
  const std::size_t n = enc.n_stresses;
  if (genes.size() != 2 * n) throw std::invalid_argument("decode: genotype has wrong length");
  const double lo = enc.bounds.lower;
  const double hi = enc.bounds.upper;

  struct Level {
    double stress;
    double weight;
  };
  std::vector<Level> levels(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double g = std::clamp(genes[j], 0.0, 1.0);
    levels[j].stress = std::clamp(lo + g * (hi - lo), lo, hi);
    levels[j].weight = std::clamp(genes[n + j], 0.0, 1.0);
  }
  std::stable_sort(levels.begin(), levels.end(),
                   [](const Level& a, const Level& b) { return a.stress < b.stress; });

  std::vector<double> weights(n);
  for (std::size_t j = 0; j < n; ++j) weights[j] = levels[j].weight;
  std::vector<int> alloc = detail::apportion(weights, enc.total_units);

  TestPlan plan;
  plan.duration = enc.duration;
  plan.design_stress = enc.design_stress;
  if (enc.mode == StressCountMode::Fixed) {
    detail::apply_unit_floor(alloc, 1);
    for (std::size_t j = 0; j < n; ++j) plan.stresses.push_back(levels[j].stress);
    plan.allocations = std::move(alloc);
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      if (alloc[j] > 0) {
        plan.stresses.push_back(levels[j].stress);
        plan.allocations.push_back(alloc[j]);
      }
    }
    if (plan.stresses.size() < 2) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
      const std::size_t big = order[0];
      const std::size_t small = order[1];
      const std::size_t first = std::min(big, small);
      const std::size_t second = std::max(big, small);
      plan.stresses = {levels[first].stress, levels[second].stress};
      plan.allocations = {first == big ? enc.total_units - 1 : 1,
                          second == big ? enc.total_units - 1 : 1};
    }
  }
  detail::repair_gaps(plan.stresses, enc.granularity, lo, hi);
#ifdef ALTPLAN_CHECKED_DECODE
  check_decoded(plan, enc);
#endif
  return plan;
}

/// Plan -> genotype that decodes back to the same plan. Variable-mode plans
/// shorter than N_max are padded with zero-allocation genes.
inline std::vector<double> encode(const TestPlan& plan, const PlanEncoding& enc) {
  const std::size_t n = enc.n_stresses;
  if (plan.levels() > n || plan.levels() == 0 ||
      (enc.mode == StressCountMode::Fixed && plan.levels() != n)) {
    throw std::invalid_argument("encode: plan does not fit the encoding");
  }
  std::vector<double> genes(2 * n, 0.0);
  const double width = enc.bounds.upper - enc.bounds.lower;
  const double total = static_cast<double>(plan.total_units());
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = std::min(j, plan.levels() - 1);
    genes[j] = std::clamp((plan.stresses[src] - enc.bounds.lower) / width, 0.0, 1.0);
    genes[n + j] = j < plan.levels() ? plan.allocations[j] / total : 0.0;
  }
  return genes;
}

struct PlanSearchResult {
  TestPlan best_plan;
  RmseEstimate best_estimate;
  std::vector<GenerationRecord> trace;
  std::size_t evaluations = 0;
};

/// Runs DE over test plans. objective(plan, eval_stream) -> RmseEstimate.
template <class Objective>
PlanSearchResult optimize(Objective&& objective, const PlanEncoding& encoding,
                          const DeConfig& config, const RandomStream& stream,
                          std::size_t threads = 1) {
  encoding.validate();
  auto fn = [&](std::span<const double> genes, const RandomStream& eval_stream) {
    return RmseEstimate(objective(decode(genes, encoding), eval_stream));
  };
  auto outcome = differential_evolution(fn, encoding.dimension(), config, stream, threads);
  PlanSearchResult result;
  result.best_plan = decode(outcome.best_genes, encoding);
  if (outcome.best) result.best_estimate = *outcome.best;
  result.trace = std::move(outcome.trace);
  result.evaluations = outcome.evaluations;
  return result;
}

}  // namespace altplan
