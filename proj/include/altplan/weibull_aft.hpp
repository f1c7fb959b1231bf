// Weibull accelerated-failure-time model: log T = mu(S) + sigma * eps with
// eps standard smallest-extreme-value, i.e. T ~ Weibull(shape 1/sigma,
// scale exp(mu(S))).
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "altplan/lifestress.hpp"
#include "altplan/simplex.hpp"

namespace altplan {

struct AftParams {
  std::vector<double> beta;
  double sigma = 1.0;

  void validate(const LifeStressModel& model) const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("AFT scale sigma must be positive and finite");
    }
    if (beta.size() != model.dimension()) {
      std::ostringstream msg;
      msg << "AFT coefficient vector has length " << beta.size() << ", basis "
          << model.basis().name() << " needs " << model.dimension();
      throw std::invalid_argument(msg.str());
    }
  }
};

struct CensoredObservation {
  double stress = 0.0;
  double time = 0.0;
  bool observed = true;  // false: right-censored at `time`
};

struct CensoredDataset {
  std::vector<CensoredObservation> observations;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(observations.begin(), observations.end(),
                                                  [](const auto& o) { return o.observed; }));
  }

  std::size_t distinct_stresses(bool failures_only = false) const {
    std::set<double> seen;
    for (const auto& o : observations) {
      if (!failures_only || o.observed) seen.insert(o.stress);
    }
    return seen.size();
  }
};

/// Raised when the data cannot identify the regression.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Distribution functions

/// R(t | s) = exp(-(t / exp(mu))^(1/sigma))
inline double reliability(double t, double s, const LifeStressModel& model, const AftParams& p) {
  if (!(t >= 0.0)) throw std::invalid_argument("reliability: time must be >= 0");
  const double mu = model.location(p.beta, s);
  if (t == 0.0) return 1.0;
  const double z = (std::log(t) - mu) / p.sigma;
  return std::exp(-std::exp(z));
}

inline double log_density(double t, double s, const LifeStressModel& model, const AftParams& p) {
  if (!(t > 0.0)) throw std::invalid_argument("density: time must be > 0");
  const double log_t = std::log(t);
  const double z = (log_t - model.location(p.beta, s)) / p.sigma;
  return -std::log(p.sigma) - log_t + z - std::exp(z);
}

inline double density(double t, double s, const LifeStressModel& model, const AftParams& p) {
  return std::exp(log_density(t, s, model, p));
}

/// q_tau(s) = exp(mu(s)) * (-log(1 - tau))^sigma
inline double quantile(double tau, double s, const LifeStressModel& model, const AftParams& p) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::invalid_argument("quantile: tau must lie in (0, 1)");
  }
  return std::exp(model.location(p.beta, s) + p.sigma * std::log(-std::log1p(-tau)));
}

inline double median(double s, const LifeStressModel& model, const AftParams& p) {
  return quantile(0.5, s, model, p);
}

/// Inverse-transform draw for a uniform variate u in (0, 1).
inline double sample_lifetime(double s, const LifeStressModel& model, const AftParams& p,
                              double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("sample_lifetime: u must lie in (0, 1)");
  }
  return std::exp(model.location(p.beta, s) + p.sigma * std::log(-std::log1p(-u)));
}

/// Right-censored log-likelihood: sum of log f over failures plus log R over
/// censored units.
inline double log_likelihood(const CensoredDataset& data, const LifeStressModel& model,
                             const AftParams& p) {
  p.validate(model);
  double total = 0.0;
  for (const auto& o : data.observations) {
    if (!(o.time > 0.0)) {
      throw std::invalid_argument("log_likelihood: observation time must be > 0");
    }
    if (o.observed) {
      total += log_density(o.time, o.stress, model, p);
    } else {
      const double z = (std::log(o.time) - model.location(p.beta, o.stress)) / p.sigma;
      total -= std::exp(z);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

namespace detail {

/// Column-oriented copy of a dataset for fast evaluation of the
/// log-likelihood over theta = (beta, log sigma).
class LikelihoodKernel {
 public:
  LikelihoodKernel(const CensoredDataset& data, const LifeStressModel& model)
      : n_(data.size()), p_(model.dimension()), x_(n_, p_), log_t_(n_), delta_(n_) {
    std::vector<double> row(p_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto& o = data.observations[static_cast<std::size_t>(i)];
      if (!(o.time > 0.0) || !std::isfinite(o.time)) {
        throw std::invalid_argument("observation time must be positive and finite");
      }
      model.basis_vector(o.stress, row);
      for (std::size_t k = 0; k < p_; ++k) x_(i, static_cast<Eigen::Index>(k)) = row[k];
      log_t_[i] = std::log(o.time);
      delta_[i] = o.observed ? 1.0 : 0.0;
    }
    failures_ = delta_.sum();
    sum_log_t_failures_ = (delta_.array() * log_t_.array()).sum();
  }

  /// Switches to coordinates gamma = T beta in which the design matrix has
  /// orthogonal columns of norm sqrt(n) (thin QR, X = W T). Returns T.
  Eigen::MatrixXd orthogonalize() {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x_);
    const double root_n = std::sqrt(static_cast<double>(n_));
    const auto pp = static_cast<Eigen::Index>(p_);
    Eigen::MatrixXd t = qr.matrixQR().topLeftCorner(pp, pp).triangularView<Eigen::Upper>();
    t /= root_n;
    Eigen::MatrixXd w = qr.householderQ() * Eigen::MatrixXd::Identity(n_, pp);
    x_ = w * root_n;
    return t;
  }

  std::size_t parameters() const { return p_ + 1; }
  const Eigen::MatrixXd& design() const { return x_; }
  const Eigen::VectorXd& log_times() const { return log_t_; }
  const Eigen::VectorXd& status() const { return delta_; }

  double value(const Eigen::VectorXd& theta) const {
    const auto beta = theta.head(static_cast<Eigen::Index>(p_));
    const double eta = theta[static_cast<Eigen::Index>(p_)];
    const double inv_sigma = std::exp(-eta);
    z_.noalias() = x_ * beta;
    z_ = (log_t_ - z_) * inv_sigma;
    const double ll = delta_.dot(z_) - failures_ * eta - sum_log_t_failures_ -
                      z_.array().exp().sum();
    return std::isnan(ll) ? -std::numeric_limits<double>::infinity() : ll;
  }

  /// Value, gradient and Hessian with respect to theta.
  double derivatives(const Eigen::VectorXd& theta, Eigen::VectorXd& grad,
                     Eigen::MatrixXd& hess) const {
    const auto pp = static_cast<Eigen::Index>(p_);
    const auto beta = theta.head(pp);
    const double eta = theta[pp];
    const double inv_sigma = std::exp(-eta);
    z_.noalias() = x_ * beta;
    z_ = (log_t_ - z_) * inv_sigma;
    e_ = z_.array().exp();
    a_ = e_ - delta_;

    const double ll = delta_.dot(z_) - failures_ * eta - sum_log_t_failures_ - e_.sum();

    grad.resize(pp + 1);
    grad.head(pp).noalias() = x_.transpose() * a_ * inv_sigma;
    grad[pp] = -failures_ + a_.dot(z_);

    hess.resize(pp + 1, pp + 1);
    hess.topLeftCorner(pp, pp).noalias() =
        -(inv_sigma * inv_sigma) * (x_.transpose() * e_.asDiagonal() * x_);
    w_ = a_.array() + z_.array() * e_.array();
    hess.col(pp).head(pp).noalias() = -inv_sigma * (x_.transpose() * w_);
    hess.row(pp).head(pp) = hess.col(pp).head(pp).transpose();
    hess(pp, pp) = -(z_.array().square() * e_.array() + a_.array() * z_.array()).sum();
    return std::isnan(ll) ? -std::numeric_limits<double>::infinity() : ll;
  }

 private:
  Eigen::Index n_;
  std::size_t p_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd log_t_;
  Eigen::VectorXd delta_;
  double failures_ = 0.0;
  double sum_log_t_failures_ = 0.0;
  mutable Eigen::VectorXd z_, e_, a_, w_;
};

inline Eigen::VectorXd to_theta(const AftParams& p) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(p.beta.size()) + 1);
  for (std::size_t k = 0; k < p.beta.size(); ++k) theta[static_cast<Eigen::Index>(k)] = p.beta[k];
  theta[static_cast<Eigen::Index>(p.beta.size())] = std::log(p.sigma);
  return theta;
}

inline AftParams from_theta(const Eigen::VectorXd& theta) {
  AftParams p;
  const auto pp = theta.size() - 1;
  p.beta.assign(theta.data(), theta.data() + pp);
  p.sigma = std::exp(theta[pp]);
  return p;
}

}  // namespace detail

/// Gradient of the log-likelihood with respect to (beta, log sigma).
inline std::vector<double> log_likelihood_gradient(const CensoredDataset& data,
                                                   const LifeStressModel& model,
                                                   const AftParams& p) {
  p.validate(model);
  const detail::LikelihoodKernel kernel(data, model);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  kernel.derivatives(detail::to_theta(p), grad, hess);
  return {grad.data(), grad.data() + grad.size()};
}

/// Least-squares regression of log(time) on the basis over observed failures,
/// sigma set to the residual standard deviation. Always returns usable
/// parameters, even for data the MLE cannot identify.
inline AftParams initial_estimate(const CensoredDataset& data, const LifeStressModel& model) {
  const std::size_t p = model.dimension();
  AftParams init;
  init.beta.assign(p, 0.0);
  init.sigma = 1.0;

  std::vector<const CensoredObservation*> failed;
  double max_log_t = -std::numeric_limits<double>::infinity();
  for (const auto& o : data.observations) {
    if (o.observed) failed.push_back(&o);
    if (o.time > 0.0 && std::isfinite(o.time)) max_log_t = std::max(max_log_t, std::log(o.time));
  }
  if (failed.empty()) {
    // Nothing failed: put the median just beyond the longest exposure.
    init.beta[0] = std::isfinite(max_log_t) ? max_log_t + 1.0 : 0.0;
    return init;
  }

  const auto d = static_cast<Eigen::Index>(failed.size());
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(d);
  std::vector<double> row(p);
  for (Eigen::Index i = 0; i < d; ++i) {
    model.basis_vector(failed[static_cast<std::size_t>(i)]->stress, row);
    for (std::size_t k = 0; k < p; ++k) x(i, static_cast<Eigen::Index>(k)) = row[k];
    y[i] = std::log(failed[static_cast<std::size_t>(i)]->time);
  }
  const Eigen::VectorXd beta = x.completeOrthogonalDecomposition().solve(y);
  if (!beta.allFinite()) {
    init.beta[0] = y.mean();
    return init;
  }
  const double rss = (y - x * beta).squaredNorm();
  const auto dof = d - static_cast<Eigen::Index>(p);
  init.beta.assign(beta.data(), beta.data() + beta.size());
  // A (numerically) exact fit leaves no scale information; keep sigma = 1.
  const double spread = 1e-8 * (1.0 + y.cwiseAbs().maxCoeff());
  if (dof > 0 && std::sqrt(rss / static_cast<double>(dof)) > spread) {
    init.sigma = std::sqrt(rss / static_cast<double>(dof));
  }
  return init;
}

enum class FitMethod { Newton, Simplex };

struct FitOptions {
  FitMethod method = FitMethod::Newton;
  double relative_tolerance = 1e-8;
  std::size_t max_iterations = 200;
  bool simplex_fallback = true;  // Newton only: retry with the simplex on failure
};

struct FittedModel {
  AftParams params;
  AftParams initial;
  double log_likelihood_at_optimum = 0.0;
  bool converged = false;
  std::size_t n_params = 0;
  double aic = 0.0;
  std::size_t iterations = 0;
  FitMethod method = FitMethod::Newton;
};

/// Throws FitError unless the data can identify the regression: at least
/// p + 1 failures, failures at two or more stresses, and at least p
/// distinct stresses overall.
inline void require_identifiable(const CensoredDataset& data, const LifeStressModel& model) {
  const std::size_t p = model.dimension();
  const std::size_t failures = data.failures();
  if (failures < p + 1) {
    throw FitError("need at least " + std::to_string(p + 1) + " observed failures, data has " +
                   std::to_string(failures));
  }
  if (data.distinct_stresses(true) < 2) {
    throw FitError("observed failures occur at fewer than 2 distinct stresses");
  }
  if (data.distinct_stresses() < p) {
    throw FitError("basis " + model.basis().name() + " needs at least " + std::to_string(p) +
                   " distinct stresses");
  }
}

namespace detail {

struct NewtonOutcome {
  Eigen::VectorXd theta;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

inline NewtonOutcome maximize_newton(const LikelihoodKernel& kernel, Eigen::VectorXd theta,
                                     const FitOptions& opts) {
  NewtonOutcome out;
  const auto dim = theta.size();
  Eigen::VectorXd grad(dim), step(dim), trial(dim);
  Eigen::MatrixXd hess(dim, dim), neg(dim, dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dim);

  double value = kernel.derivatives(theta, grad, hess);
  out.theta = theta;
  out.value = value;
  if (!std::isfinite(value)) return out;
  int stalled = 0;

  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    out.iterations = iter + 1;
    // Modified Newton: flip negative curvature and floor tiny eigenvalues so
    // the step is always an ascent direction.
    neg = -hess;
    eig.compute(neg);
    if (eig.info() != Eigen::Success) return out;
    const double scale = std::max(1e-12, eig.eigenvalues().cwiseAbs().maxCoeff());
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseAbs().cwiseMax(1e-10 * scale);
    step = eig.eigenvectors() *
           (eig.eigenvectors().transpose() * grad).cwiseQuotient(lambda);
    if (!step.allFinite()) return out;

    double t = 1.0;
    double trial_value = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    const double slack = 1e-13 * (1.0 + std::abs(value));
    for (int halving = 0; halving < 50; ++halving) {
      trial = theta + t * step;
      trial_value = kernel.value(trial);
      if (std::isfinite(trial_value) && trial_value >= value - slack) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }

    const double relative_step =
        ((t * step).array().abs() / (1.0 + theta.array().abs())).maxCoeff();
    if (!accepted) {
      out.converged = relative_step <= opts.relative_tolerance;
      return out;
    }
    theta = trial;
    const double previous = value;
    value = kernel.derivatives(theta, grad, hess);
    out.theta = theta;
    out.value = value;
    if (!std::isfinite(value)) return out;
    if (relative_step <= opts.relative_tolerance) {
      out.converged = true;
      return out;
    }
    // Likelihoods whose supremum lies at infinity (a level with no failures
    // can push the fit off along a flat ridge) never meet the step test;
    // accept once the objective has stopped moving.
    stalled = value - previous <= opts.relative_tolerance * 1e-2 * (1.0 + std::abs(value))
                  ? stalled + 1
                  : 0;
    if (stalled >= 3) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace detail

/// Maximizes the right-censored log-likelihood over (beta, log sigma).
/// Throws FitError for unidentifiable data; a fit that does not meet the
/// tolerance is returned with converged == false.
inline FittedModel fit_mle(const CensoredDataset& data, const LifeStressModel& model,
                           const std::optional<AftParams>& init = std::nullopt,
                           const FitOptions& opts = {}) {
  require_identifiable(data, model);
  // Optimize in orthogonalized coordinates (gamma = T beta, log sigma); raw
  // polynomial bases are badly conditioned.
  detail::LikelihoodKernel kernel(data, model);
  const Eigen::MatrixXd transform = kernel.orthogonalize();
  const auto pp = static_cast<Eigen::Index>(model.dimension());
  const auto to_external = [&](Eigen::VectorXd theta) {
    theta.head(pp) = transform.triangularView<Eigen::Upper>().solve(theta.head(pp));
    return theta;
  };

  FittedModel fit;
  fit.n_params = model.dimension() + 1;
  Eigen::VectorXd start;
  if (init) {
    fit.initial = *init;
    fit.initial.validate(model);
    start = detail::to_theta(fit.initial);
    start.head(pp) = transform * start.head(pp);
  } else {
    // Regressing on failures alone can extrapolate wildly into heavily
    // censored levels, so also try the fit with censoring ignored and a flat
    // model; keep whichever start has the highest likelihood.
    CensoredDataset as_failed = data;
    double sum = 0.0;
    for (auto& o : as_failed.observations) {
      o.observed = true;
      sum += std::log(o.time);
    }
    AftParams flat;
    flat.beta.assign(model.dimension(), 0.0);
    flat.beta[0] = sum / static_cast<double>(data.size());
    flat.sigma = 1.0;
    double start_value = -std::numeric_limits<double>::infinity();
    for (const auto& c : {initial_estimate(data, model), initial_estimate(as_failed, model), flat}) {
      Eigen::VectorXd th = detail::to_theta(c);
      th.head(pp) = transform * th.head(pp);
      const double v = kernel.value(th);
      if (start.size() == 0 || v > start_value) {
        fit.initial = c;
        start = th;
        start_value = v;
      }
    }
  }

  Eigen::VectorXd best = start;
  double best_value = kernel.value(start);
  bool converged = false;

  if (opts.method == FitMethod::Newton) {
    auto newton = detail::maximize_newton(kernel, start, opts);
    fit.iterations = newton.iterations;
    fit.method = FitMethod::Newton;
    if (std::isfinite(newton.value) && newton.value >= best_value) {
      best = newton.theta;
      best_value = newton.value;
    }
    converged = newton.converged && std::isfinite(newton.value);
  }

  if (!converged && (opts.method == FitMethod::Simplex || opts.simplex_fallback)) {
    SimplexOptions sopts;
    sopts.relative_tolerance = opts.relative_tolerance;
    sopts.max_evaluations = 400 * opts.max_iterations;
    std::vector<double> x0(best.data(), best.data() + best.size());
    Eigen::VectorXd work(best.size());
    auto neg_ll = [&](const std::vector<double>& x) {
      for (std::size_t k = 0; k < x.size(); ++k) work[static_cast<Eigen::Index>(k)] = x[k];
      return -kernel.value(work);
    };
    auto simplex = minimize_simplex(neg_ll, x0, sopts);
    if (opts.method == FitMethod::Simplex) fit.iterations = simplex.evaluations;
    fit.method = FitMethod::Simplex;
    if (std::isfinite(simplex.value) && -simplex.value >= best_value) {
      best = Eigen::Map<const Eigen::VectorXd>(simplex.x.data(),
                                               static_cast<Eigen::Index>(simplex.x.size()));
      best_value = -simplex.value;
    }
    converged = simplex.converged && std::isfinite(best_value);
  }

  best = to_external(best);
  fit.params = detail::from_theta(best);
  fit.log_likelihood_at_optimum = best_value;
  fit.converged = converged && best.allFinite();
  fit.aic = 2.0 * static_cast<double>(fit.n_params) - 2.0 * best_value;
  return fit;
}

/// Akaike information criterion of a converged fit.
inline double aic(const FittedModel& fit) {
  if (!fit.converged) throw std::invalid_argument("aic: fit did not converge");
  return 2.0 * static_cast<double>(fit.n_params) - 2.0 * fit.log_likelihood_at_optimum;
}

}  // namespace altplan
