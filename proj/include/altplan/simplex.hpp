// Nelder-Mead downhill simplex minimizer.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace altplan {

struct SimplexOptions {
  double relative_tolerance = 1e-8;
  std::size_t max_evaluations = 20000;
  double initial_step = 0.1;  // relative to |x0_k|, absolute when x0_k == 0
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Minimizes f over R^n starting from x0. Non-finite values are treated as +inf.
template <class Fn>
SimplexResult minimize_simplex(Fn&& f, std::vector<double> x0, const SimplexOptions& opts = {}) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("minimize_simplex: empty start point");

  SimplexResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> vertex(n + 1, x0);
  std::vector<double> value(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double step = x0[k] != 0.0 ? opts.initial_step * std::abs(x0[k]) : opts.initial_step;
    vertex[k + 1][k] += step;
  }
  for (std::size_t i = 0; i <= n; ++i) value[i] = eval(vertex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);

  auto point_along = [&](double t, std::vector<double>& out) {
    const auto& worst = vertex[order[n]];
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (worst[k] - centroid[k]);
  };

  while (result.evaluations < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });

    const auto& best = vertex[order[0]];
    double size = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        size = std::max(size, std::abs(vertex[order[i]][k] - best[k]) / (1.0 + std::abs(best[k])));
      }
    }
    const double spread = std::abs(value[order[n]] - value[order[0]]);
    if (size <= opts.relative_tolerance &&
        spread <= opts.relative_tolerance * (1.0 + std::abs(value[order[0]]))) {
      result.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += vertex[order[i]][k];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    const std::size_t worst = order[n];
    point_along(-1.0, trial);
    const double reflected = eval(trial);
    if (reflected < value[order[0]]) {
      point_along(-2.0, trial2);
      const double expanded = eval(trial2);
      if (expanded < reflected) {
        vertex[worst] = trial2;
        value[worst] = expanded;
      } else {
        vertex[worst] = trial;
        value[worst] = reflected;
      }
      continue;
    }
    if (reflected < value[order[n - 1]]) {
      vertex[worst] = trial;
      value[worst] = reflected;
      continue;
    }
    const bool outside = reflected < value[worst];
    point_along(outside ? -0.5 : 0.5, trial2);
    const double contracted = eval(trial2);
    if (contracted < (outside ? reflected : value[worst])) {
      vertex[worst] = trial2;
      value[worst] = contracted;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 1; i <= n; ++i) {
      auto& v = vertex[order[i]];
      for (std::size_t k = 0; k < n; ++k) v[k] = best[k] + 0.5 * (v[k] - best[k]);
      value[order[i]] = eval(v);
    }
  }

  const auto it = std::min_element(value.begin(), value.end());
  const auto idx = static_cast<std::size_t>(it - value.begin());
  result.x = vertex[idx];
  result.value = *it;
  return result;
}

}  // namespace altplan
