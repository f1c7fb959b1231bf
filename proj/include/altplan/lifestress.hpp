// Life-stress relationships expressed as a basis expansion of the stress.
//
// mu(S) = beta_0 + beta_1 g_1(S) + ... where the transform set {g_k} is
// fixed by the StressBasis. Covers the log-linear reductions of the
// thermochemical (S), Arrhenius (1/S), inverse power law (log S) and
// exponential-sqrt (sqrt S) models, plus polynomials in S.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace altplan {

enum class BasisKind { Identity, Reciprocal, Log, Sqrt, Polynomial };

class StressBasis {
 public:
  constexpr StressBasis() = default;

  static constexpr StressBasis identity() { return StressBasis(BasisKind::Identity, 1); }
  static constexpr StressBasis reciprocal() { return StressBasis(BasisKind::Reciprocal, 1); }
  static constexpr StressBasis log() { return StressBasis(BasisKind::Log, 1); }
  static constexpr StressBasis sqrt() { return StressBasis(BasisKind::Sqrt, 1); }
  static StressBasis polynomial(int degree) {
    if (degree < 1) {
      throw std::invalid_argument("polynomial basis degree must be >= 1, got " +
                                  std::to_string(degree));
    }
    return StressBasis(BasisKind::Polynomial, degree);
  }

  /// Parses "identity", "reciprocal", "log", "sqrt" or "poly:<degree>".
  static StressBasis parse(std::string_view text) {
    if (text == "identity") return identity();
    if (text == "reciprocal") return reciprocal();
    if (text == "log") return log();
    if (text == "sqrt") return sqrt();
    if (text.starts_with("poly:")) {
      const std::string digits(text.substr(5));
      std::size_t used = 0;
      int degree = 0;
      try {
        degree = std::stoi(digits, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != digits.size()) {
        throw std::invalid_argument("bad polynomial degree in basis '" + std::string(text) + "'");
      }
      return polynomial(degree);
    }
    throw std::invalid_argument("unknown stress basis '" + std::string(text) + "'");
  }

  constexpr BasisKind kind() const { return kind_; }
  constexpr int degree() const { return degree_; }

  /// Number of coefficients, intercept included.
  constexpr std::size_t dimension() const {
    return kind_ == BasisKind::Polynomial ? static_cast<std::size_t>(degree_) + 1 : 2;
  }

  std::string name() const {
    switch (kind_) {
      case BasisKind::Identity: return "identity";
      case BasisKind::Reciprocal: return "reciprocal";
      case BasisKind::Log: return "log";
      case BasisKind::Sqrt: return "sqrt";
      case BasisKind::Polynomial: return "poly:" + std::to_string(degree_);
    }
    return "unknown";
  }

  /// Smallest admissible stress for the transform, and whether it is attainable.
  constexpr double natural_lower_bound() const {
    switch (kind_) {
      case BasisKind::Reciprocal:
      case BasisKind::Log: return 0.0;  // exclusive
      case BasisKind::Sqrt: return 0.0;
      default: return -std::numeric_limits<double>::infinity();
    }
  }
  constexpr bool lower_bound_exclusive() const {
    return kind_ == BasisKind::Reciprocal || kind_ == BasisKind::Log;
  }

  friend constexpr bool operator==(const StressBasis&, const StressBasis&) = default;

 private:
  constexpr StressBasis(BasisKind kind, int degree) : kind_(kind), degree_(degree) {}

  BasisKind kind_ = BasisKind::Identity;
  int degree_ = 1;
};

/// Closed interval of admissible stresses.
struct StressInterval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  constexpr bool contains(double s) const { return s >= lower && s <= upper; }
  friend constexpr bool operator==(const StressInterval&, const StressInterval&) = default;
};

class LifeStressModel {
 public:
  LifeStressModel() = default;

  /// Uses the widest domain the transform admits.
  explicit LifeStressModel(StressBasis basis) : basis_(basis) {
    domain_.lower = basis.lower_bound_exclusive() ? std::numeric_limits<double>::min()
                                                  : basis.natural_lower_bound();
  }

  LifeStressModel(StressBasis basis, StressInterval domain) : basis_(basis), domain_(domain) {
    if (!(domain.lower <= domain.upper)) {
      throw std::invalid_argument("stress domain lower bound exceeds upper bound");
    }
    const double floor = basis.natural_lower_bound();
    if (basis.lower_bound_exclusive() ? !(domain.lower > floor) : domain.lower < floor) {
      std::ostringstream msg;
      msg << "stress domain lower bound " << domain.lower << " is not admissible for basis "
          << basis.name();
      throw std::domain_error(msg.str());
    }
  }

  const StressBasis& basis() const { return basis_; }
  const StressInterval& domain() const { return domain_; }
  std::size_t dimension() const { return basis_.dimension(); }

  void require_in_domain(double s) const {
    if (!domain_.contains(s) || std::isnan(s)) {
      std::ostringstream msg;
      msg << "stress " << s << " is outside the domain [" << domain_.lower << ", "
          << domain_.upper << "] of basis " << basis_.name();
      throw std::domain_error(msg.str());
    }
  }

  /// Writes (1, g_1(s), ...) into `out`, which must have dimension() entries.
  void basis_vector(double s, std::span<double> out) const {
    require_in_domain(s);
    if (out.size() != dimension()) {
      throw std::invalid_argument("basis output span has wrong length");
    }
    out[0] = 1.0;
    switch (basis_.kind()) {
      case BasisKind::Identity: out[1] = s; break;
      case BasisKind::Reciprocal: out[1] = 1.0 / s; break;
      case BasisKind::Log: out[1] = std::log(s); break;
      case BasisKind::Sqrt: out[1] = std::sqrt(s); break;
      case BasisKind::Polynomial:
        for (std::size_t k = 1; k < out.size(); ++k) out[k] = out[k - 1] * s;
        break;
    }
  }

  std::vector<double> basis_vector(double s) const {
    std::vector<double> out(dimension());
    basis_vector(s, out);
    return out;
  }

  /// mu(s) = beta . basis_vector(s)
  double location(std::span<const double> beta, double s) const {
    if (beta.size() != dimension()) {
      std::ostringstream msg;
      msg << "coefficient vector has length " << beta.size() << " but basis " << basis_.name()
          << " needs " << dimension();
      throw std::invalid_argument(msg.str());
    }
    require_in_domain(s);
    double g = s;
    switch (basis_.kind()) {
      case BasisKind::Identity: break;
      case BasisKind::Reciprocal: g = 1.0 / s; break;
      case BasisKind::Log: g = std::log(s); break;
      case BasisKind::Sqrt: g = std::sqrt(s); break;
      case BasisKind::Polynomial: {
        // Horner
        double acc = beta.back();
        for (std::size_t k = beta.size() - 1; k-- > 0;) acc = acc * s + beta[k];
        return acc;
      }
    }
    return beta[0] + beta[1] * g;
  }

 private:
  StressBasis basis_ = StressBasis::identity();
  StressInterval domain_{};
};

}  // namespace altplan
