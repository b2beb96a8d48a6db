#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "renstab/channel.hpp"
#include "renstab/perturb.hpp"
#include "renstab/states.hpp"

namespace renstab {

// Two printed forms of the second-order bound function. They are NOT
// equal: the first term of `as_printed` carries an extra (d+r-1)^{-2x}
// relative to `canonical` (equivalently b^{2x}, since d+r-1 = 1/b). The
// canonical form is the one that reproduces the accept coefficient at x=2
// and matches the finite-difference entropy oracle; as_printed is retained
// for side-by-side comparison.
enum class FpVariant { canonical, as_printed };

namespace detail {
inline void require_interior_lambda(const DepolarizingParams& params, const char* who) {
  if (!(params.lambda > 0.0 && params.lambda < 1.0)) {
    std::ostringstream msg;
    msg << who << ": requires lambda in (0, 1), got " << params.lambda;
    throw std::domain_error(msg.str());
  }
}
}  // namespace detail

namespace detail {
// (1 - rho^{x(p-1)}) / (1 - rho^x) for rho in (0, 1), written as an expm1
// ratio of u = x ln rho; the x -> 0 confluent limit is p - 1.
inline double power_quotient_factor(double u, double p) {
  if (std::abs(u) < 1e-12) return p - 1.0;
  return std::expm1(u * (p - 1.0)) / std::expm1(u);
}
}  // namespace detail

// f_p(x) for x >= 0 and p > 1, evaluated in log space so large x underflows
// to the p/(p-1) plateau instead of overflowing; f_p(0) = -p (confluent
// limit of the power quotient).
inline double f_p(double x, const DepolarizingParams& params, double p,
                  FpVariant variant = FpVariant::canonical) {
  detail::require_interior_lambda(params, "f_p");
  if (!(x >= 0.0)) throw std::domain_error("f_p: x must be >= 0");
  if (!(p > 1.0)) throw std::domain_error("f_p: p must be > 1 (p = 1 is f_vn)");
  const int d = params.d;
  if (variant == FpVariant::canonical) {
    const double a = params.a();
    const double b = params.b();
    const double log_ba = std::log(b / a);
    // ln(a^p + (d-1) b^p), with a^p factored out
    const double log_trace_p = p * std::log(a) + std::log1p((d - 1) * std::exp(p * log_ba));
    const double factor = detail::power_quotient_factor(x * log_ba, p);
    const double first =
        factor * std::exp(x * ((p - 2.0) * std::log(a) +
                               2.0 * std::log(params.lambda) - log_trace_p));
    // a^{p-1} b + a b^{p-1} + (d-2) b^p, with a^{p-1} b factored out
    const double log_cross = (p - 1.0) * std::log(a) + std::log(b) +
                             std::log1p(std::exp((p - 2.0) * log_ba) +
                                        (d - 2) * std::exp((p - 1.0) * log_ba));
    const double second = std::exp(x * (log_cross - log_trace_p));
    return p / (1.0 - p) * (first + second - 1.0);
  }
  const double r = params.r();
  const double log_r = std::log(r);
  const double log_rp_term = p * log_r + std::log1p((d - 1) * std::exp(-p * log_r));
  const double factor = detail::power_quotient_factor(-x * log_r, p);
  const double first =
      factor * std::exp(x * ((p - 2.0) * log_r + 2.0 * std::log(r - 1.0) -
                             2.0 * std::log(d + r - 1.0) - log_rp_term));
  const double log_second_num =
      (p - 1.0) * log_r + std::log1p((r + d - 2.0) * std::exp(-(p - 1.0) * log_r));
  const double second = std::exp(x * (log_second_num - log_rp_term));
  return p / (1.0 - p) * (first + second - 1.0);
}

// p = 1 bound function:
// f(x) = x(a-b)ln(a/b) - (a-b)^{2x} (ln a^x - ln b^x)/(a^x - b^x).
// Same log-space treatment as f_p; the x -> 0 limit is -1, matching
// lim_{p -> 1} f_p(0) = -p.
inline double f_vn(double x, const DepolarizingParams& params) {
  detail::require_interior_lambda(params, "f_vn");
  if (!(x >= 0.0)) throw std::domain_error("f_vn: x must be >= 0");
  const double a = params.a();
  const double b = params.b();
  const double log_ratio = std::log(a / b);
  if (x == 0.0) return -1.0;
  // (a-b)^{2x} x ln(a/b) / (a^x - b^x), with a^x factored out of the
  // denominator: a - b = lambda, so the exponential decays for all
  // lambda in (0, 1).
  const double denom = -std::expm1(x * std::log(b / a));
  const double second = std::exp(x * (2.0 * std::log(a - b) - std::log(a))) * x * log_ratio / denom;
  return x * (a - b) * log_ratio - second;
}

// Coefficient of eps in the accept threshold:
// 2 p/(p-1) (r-1)/(r+1) (r^{p-1}-1)(2r^p + dr + d - 2)/(r^p + d - 1)^2.
// Equals f_p(2, canonical) identically.
inline double accept_coeff(const DepolarizingParams& params, double p) {
  detail::require_interior_lambda(params, "accept_coeff");
  if (!(p >= 2.0)) throw std::domain_error("accept_coeff: requires p >= 2");
  const double r = params.r();
  const int d = params.d;
  // Written with r^{-p} factored out so large p underflows gracefully
  // instead of overflowing r^p.
  const double rmp = std::pow(r, -p);
  return 2.0 * (p / (p - 1.0)) * ((r - 1.0) / (r + 1.0)) * (1.0 / r) *
         ((1.0 - r * rmp) * (2.0 + (d * r + d - 2.0) * rmp)) /
         ((1.0 + (d - 1.0) * rmp) * (1.0 + (d - 1.0) * rmp));
}

// Coefficient of eps in the reject threshold: p/(p-1). Diverges at p = 1;
// no reject threshold exists there.
inline double reject_coeff(double p) {
  if (!(p > 1.0)) throw std::domain_error("reject_coeff: p/(p-1) is undefined for p <= 1");
  return p / (p - 1.0);
}

// Worst increment min_{x in [2, x_max-1]} f(x+1) - f(x); >= -1e-12 means
// monotone on the scanned range. p = 1 scans f_vn.
inline double monotonicity_scan(const DepolarizingParams& params, double p, int x_max) {
  if (x_max < 3) throw std::invalid_argument("monotonicity_scan: x_max must be >= 3");
  double worst = std::numeric_limits<double>::infinity();
  for (int x = 2; x + 1 <= x_max; ++x) {
    const double lo = (p == 1.0) ? f_vn(x, params) : f_p(x, params, p);
    const double hi = (p == 1.0) ? f_vn(x + 1, params) : f_p(x + 1, params, p);
    worst = std::min(worst, hi - lo);
  }
  return worst;
}

// Width of the undecided band: reject_coeff(p) - accept_coeff(params, p),
// in the closed form that makes the identity manifest.
inline double gap(double p, const DepolarizingParams& params) {
  detail::require_interior_lambda(params, "gap");
  if (!(p >= 2.0)) throw std::domain_error("gap: requires p >= 2");
  const double r = params.r();
  const int d = params.d;
  const double rmp = std::pow(r, -p);
  const double inner = 2.0 * (r - 1.0) * (1.0 - r * rmp) * (2.0 + (d * r + d - 2.0) * rmp) /
                       ((r + 1.0) * r * (1.0 + (d - 1.0) * rmp) * (1.0 + (d - 1.0) * rmp));
  return (p / (p - 1.0)) * (1.0 - inner);
}

// p -> infinity limit of gap(p): (r^2 - 3r + 4)/(r(r+1)).
inline double gap_limit(const DepolarizingParams& params) {
  detail::require_interior_lambda(params, "gap_limit");
  const double r = params.r();
  return (r * r - 3.0 * r + 4.0) / (r * (r + 1.0));
}

// h(r) = r^3 - 3r^2 + (10-2d) r + (14d-10); h > 0 on r > 1 is what makes
// gap(2) exceed the large-p limit.
inline double h_poly(double r, int d) {
  if (!(r > 1.0)) throw std::domain_error("h_poly: requires r > 1");
  if (d < 2) throw std::invalid_argument("h_poly: d must be >= 2");
  return r * r * r - 3.0 * r * r + (10.0 - 2.0 * d) * r + (14.0 * d - 10.0);
}

// Stationary point of h in (1, inf); exists only for d >= 4.
inline double h_critical_point(int d) {
  if (d < 4) throw std::domain_error("h_critical_point: h' has no real root beyond 1 for d < 4");
  return 1.0 + std::sqrt(6.0 * d - 21.0) / 3.0;
}

struct HMinReport {
  double grid_min = 0.0;
  double grid_argmin = 0.0;
  std::optional<double> critical_point;
  std::optional<double> critical_value;  // h evaluated at the stationary point
};

// Minimum of h over a dense r grid in (1, r_max], plus the analytic
// stationary value for d >= 4.
inline HMinReport h_min_check(int d, double r_max = 100.0, long grid_points = 200000) {
  if (d < 2) throw std::invalid_argument("h_min_check: d must be >= 2");
  if (!(r_max > 1.0) || grid_points < 2)
    throw std::invalid_argument("h_min_check: need r_max > 1 and >= 2 grid points");
  HMinReport report;
  report.grid_min = std::numeric_limits<double>::infinity();
  const double step = (r_max - 1.0) / grid_points;
  for (long i = 1; i <= grid_points; ++i) {
    const double r = 1.0 + i * step;
    const double value = h_poly(r, d);
    if (value < report.grid_min) {
      report.grid_min = value;
      report.grid_argmin = r;
    }
  }
  if (d >= 4) {
    report.critical_point = h_critical_point(d);
    report.critical_value = h_poly(*report.critical_point, d);
  }
  return report;
}

// eps0 * sum_{k>=1} w_k f_p(k): the second-order prediction for the output
// entropy excess of sqrt(1-eps0)|0> + sqrt(eps0)|phi>, with w the weight
// decomposition of phi.
inline double predicted_excess(const WeightDecomposition& weights, double eps0,
                               const DepolarizingParams& params, double p) {
  if (!(eps0 >= 0.0)) throw std::domain_error("predicted_excess: eps0 must be >= 0");
  if (weights.w.empty() || weights.w[0] > 1e-12)
    throw std::invalid_argument("predicted_excess: weight-0 component exceeds 1e-12");
  double sum = 0.0;
  for (std::size_t k = 1; k < weights.w.size(); ++k) {
    if (weights.w[k] == 0.0) continue;
    const double fk = (p == 1.0) ? f_vn(static_cast<double>(k), params)
                                 : f_p(static_cast<double>(k), params, p);
    sum += weights.w[k] * fk;
  }
  return eps0 * sum;
}

enum class Verdict { accept, undecided, reject };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::undecided: return "undecided";
    case Verdict::reject: return "reject";
  }
  return "?";
}

// Leading-order thresholds for one parameter point. At p = 1 the reject
// coefficient diverges, so no reject threshold exists and gap is absent.
struct StabilityThresholds {
  DepolarizingParams params;
  double p;
  double accept_coefficient;
  std::optional<double> reject_coefficient;

  std::optional<double> gap_width() const {
    if (!reject_coefficient) return std::nullopt;
    return *reject_coefficient - accept_coefficient;
  }

  static StabilityThresholds compute(const DepolarizingParams& params, double p) {
    detail::require_interior_lambda(params, "StabilityThresholds");
    if (p == 1.0)
      return StabilityThresholds{params, p, f_vn(2.0, params), std::nullopt};
    if (!(p >= 2.0))
      throw std::domain_error(
          "StabilityThresholds: thresholds are established for p >= 2 or p = 1");
    return StabilityThresholds{params, p, accept_coeff(params, p), reject_coeff(p)};
  }
};

// Accept iff S < S_min + eps * accept_coeff (strict), Reject iff
// S >= S_min + eps * reject_coeff, else Undecided. Ties resolve toward
// Undecided on the accept edge and Reject on the reject edge. Thresholds
// are leading order; O(eps^{3/2}) corrections are dropped, so keep eps small.
inline Verdict classify(double s_value, double eps, const StabilityThresholds& thresholds,
                        double s_min) {
  if (!(eps > 0.0)) throw std::domain_error("classify: eps must be > 0");
  if (s_value < s_min + eps * thresholds.accept_coefficient) return Verdict::accept;
  if (thresholds.reject_coefficient &&
      s_value >= s_min + eps * (*thresholds.reject_coefficient))
    return Verdict::reject;
  return Verdict::undecided;
}

}  // namespace renstab
