#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "renstab/channel.hpp"
#include "renstab/entropy.hpp"

namespace renstab {

// C^2 scalar function with analytic derivatives. Derivatives are supplied
// in closed form so confluent divided-difference limits are exact.
struct ScalarFunction {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> ddf;
  std::string name;

  static ScalarFunction power(double p) {
    return {[p](double x) { return std::pow(x, p); },
            [p](double x) { return p * std::pow(x, p - 1.0); },
            [p](double x) { return p * (p - 1.0) * std::pow(x, p - 2.0); },
            "power-" + std::to_string(p)};
  }

  static ScalarFunction xlogx() {
    return {[](double x) { return x * std::log(x); },
            [](double x) { return std::log(x) + 1.0; },
            [](double x) { return 1.0 / x; },
            "xlogx"};
  }

  static ScalarFunction identity() {
    return {[](double x) { return x; }, [](double) { return 1.0; },
            [](double) { return 0.0; }, "identity"};
  }
};

namespace detail {
inline double confluence_threshold(double scale) {
  return tol::confluence * std::max(1.0, scale);
}
}  // namespace detail

// (f(x)-f(y))/(x-y), confluent limit f'((x+y)/2) when the gap is below
// 1e-9 * max(1, scale). Quotients of near-equal arguments lose precision
// catastrophically, hence the derivative branch.
inline double divided_diff(const ScalarFunction& fn, double x, double y, double scale = 1.0) {
  if (std::abs(x - y) <= detail::confluence_threshold(scale)) return fn.df(0.5 * (x + y));
  return (fn.f(x) - fn.f(y)) / (x - y);
}

// Fully symmetric second divided difference with confluent limits
// Delta2(x,x,z) = (f'(x) - Delta(x,z))/(x-z) and Delta2(x,x,x) = f''(x)/2.
inline double second_divided_diff(const ScalarFunction& fn, double x, double y, double z,
                                  double scale = 1.0) {
  const double tau = detail::confluence_threshold(scale);
  double lo = x, mid = y, hi = z;
  if (lo > mid) std::swap(lo, mid);
  if (mid > hi) std::swap(mid, hi);
  if (lo > mid) std::swap(lo, mid);
  if (hi - lo <= tau) return 0.5 * fn.ddf((lo + mid + hi) / 3.0);
  if (mid - lo <= tau) {
    const double m = 0.5 * (lo + mid);
    return (fn.df(m) - divided_diff(fn, m, hi, scale)) / (m - hi);
  }
  if (hi - mid <= tau) {
    const double m = 0.5 * (mid + hi);
    return (fn.df(m) - divided_diff(fn, m, lo, scale)) / (m - lo);
  }
  return (divided_diff(fn, lo, mid, scale) - divided_diff(fn, mid, hi, scale)) / (lo - hi);
}

namespace detail {
inline double spectral_range(const RealVector& diag) {
  return diag.size() ? diag.maxCoeff() - diag.minCoeff() : 0.0;
}
inline void check_lq_args(const RealVector& diag, const Matrix& b, const char* who) {
  if (b.rows() != b.cols() || b.rows() != diag.size())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}
}  // namespace detail

// First-order term of f(A + tB) for diagonal A: [L_A(B)]_ij = Delta f(p_i, p_j) b_ij.
inline Matrix apply_L(const RealVector& a_diag, const Matrix& b, const ScalarFunction& fn) {
  detail::check_lq_args(a_diag, b, "apply_L");
  const double scale = detail::spectral_range(a_diag);
  const Eigen::Index m = a_diag.size();
  Matrix out(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      out(i, j) = divided_diff(fn, a_diag[i], a_diag[j], scale) * b(i, j);
  return out;
}

// Second-order term: [Q_A(B)]_ij = sum_k Delta^2 f(p_i, p_k, p_j) b_ik b_kj.
inline Matrix apply_Q(const RealVector& a_diag, const Matrix& b, const ScalarFunction& fn) {
  detail::check_lq_args(a_diag, b, "apply_Q");
  const double scale = detail::spectral_range(a_diag);
  const Eigen::Index m = a_diag.size();
  Matrix out = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      Complex sum = 0.0;
      for (Eigen::Index k = 0; k < m; ++k)
        sum += second_divided_diff(fn, a_diag[i], a_diag[k], a_diag[j], scale) * b(i, k) * b(k, j);
      out(i, j) = sum;
    }
  return out;
}

// Tr L_A(B) = sum_j f'(p_j) b_jj.
inline double trace_L(const RealVector& a_diag, const Matrix& b, const ScalarFunction& fn) {
  detail::check_lq_args(a_diag, b, "trace_L");
  double out = 0.0;
  for (Eigen::Index j = 0; j < a_diag.size(); ++j)
    out += fn.df(a_diag[j]) * b(j, j).real();
  return out;
}

// Tr Q_A(B) = sum_ij (f'(p_i)-f'(p_j)) / (2(p_i-p_j)) b_ij b_ji, confluent
// limit f''(p)/2 on near-equal pairs.
inline double trace_Q(const RealVector& a_diag, const Matrix& b, const ScalarFunction& fn) {
  detail::check_lq_args(a_diag, b, "trace_Q");
  const double scale = detail::spectral_range(a_diag);
  const ScalarFunction derivative{fn.df, fn.ddf, nullptr, fn.name + "'"};
  double out = 0.0;
  for (Eigen::Index i = 0; i < a_diag.size(); ++i)
    for (Eigen::Index j = 0; j < a_diag.size(); ++j)
      out += 0.5 * divided_diff(derivative, a_diag[i], a_diag[j], scale) *
             (b(i, j) * b(j, i)).real();
  return out;
}

// rho(t) = rho + t gamma0 + t^2 gamma1 with rho strictly positive diagonal,
// gamma0 hollow Hermitian and gamma1 traceless Hermitian.
struct PerturbationFamily {
  RealVector rho_diag;
  Matrix gamma0;
  Matrix gamma1;

  Matrix density_at(double t) const {
    Matrix out = t * gamma0 + (t * t) * gamma1;
    out += Matrix(rho_diag.cast<Complex>().asDiagonal());
    return out;
  }
};

inline PerturbationFamily make_perturbation_family(RealVector rho_diag, Matrix gamma0,
                                                   Matrix gamma1) {
  const Eigen::Index m = rho_diag.size();
  if (gamma0.rows() != m || gamma0.cols() != m || gamma1.rows() != m || gamma1.cols() != m)
    throw std::invalid_argument("make_perturbation_family: dimension mismatch");
  if (rho_diag.minCoeff() <= 0.0)
    throw std::domain_error("make_perturbation_family: rho must be a nonsingular density matrix "
                            "(strictly positive diagonal)");
  if (std::abs(rho_diag.sum() - 1.0) > tol::trace)
    throw std::invalid_argument("make_perturbation_family: rho trace deviates from 1");
  if (!is_hermitian(gamma0) || !is_hermitian(gamma1))
    throw std::invalid_argument("make_perturbation_family: gamma0/gamma1 must be Hermitian");
  if (gamma0.diagonal().cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("make_perturbation_family: gamma0 diagonal exceeds 1e-12");
  if (std::abs(gamma1.trace()) > 1e-12)
    throw std::invalid_argument("make_perturbation_family: |Tr gamma1| exceeds 1e-12");
  return PerturbationFamily{std::move(rho_diag), std::move(gamma0), std::move(gamma1)};
}

// The family behind the stability analysis: rho = D^{(x)n}|0><0| (diagonal),
// gamma0 = D^{(x)n}(|0><phi| + |phi><0|) (hollow because phi has no weight-0
// component), gamma1 = D^{(x)n}(|phi><phi| - |0><0|) (traceless). t = sqrt(eps0).
inline PerturbationFamily stability_family(const DepolarizingParams& params,
                                           const PureState& phi_perp) {
  if (phi_perp.d != params.d || phi_perp.n != params.n)
    throw std::invalid_argument("stability_family: state dimensions do not match channel");
  if (std::abs(phi_perp.amplitudes[0]) > tol::orthogonality)
    throw std::invalid_argument("stability_family: phi must be orthogonal to |0...0>");
  const long dim = params.dim();
  StateVector zero = StateVector::Zero(dim);
  zero[0] = 1.0;
  const Matrix zero_proj = zero * zero.adjoint();
  const Matrix phi_proj = phi_perp.amplitudes * phi_perp.amplitudes.adjoint();
  const Matrix cross = zero * phi_perp.amplitudes.adjoint() +
                       phi_perp.amplitudes * zero.adjoint();

  Matrix rho = apply_depolarizing_op(params, zero_proj);
  Matrix gamma0 = apply_depolarizing_op(params, cross);
  Matrix gamma1 = apply_depolarizing_op(params, phi_proj - zero_proj);
  return make_perturbation_family(rho.diagonal().real(), std::move(gamma0), std::move(gamma1));
}

// Exact t^2 coefficient of S_p(rho(t)):
//   p != 1: (p Tr(rho^{p-1} gamma1) + Tr Q_rho(gamma0)) / ((1-p) Tr rho^p), f = x^p
//   p  = 1: -(Tr(gamma1 ln rho) + Tr Q_rho(gamma0)), f = x ln x
inline double renyi_second_order_coeff(const PerturbationFamily& family, RenyiOrder order) {
  const RealVector& rho = family.rho_diag;
  if (rho.minCoeff() <= 0.0)
    throw std::domain_error("renyi_second_order_coeff: rho must be nonsingular");
  if (order.is_von_neumann()) {
    double linear = 0.0;
    for (Eigen::Index j = 0; j < rho.size(); ++j)
      linear += std::log(rho[j]) * family.gamma1(j, j).real();
    return -(linear + trace_Q(rho, family.gamma0, ScalarFunction::xlogx()));
  }
  const double p = order.p;
  double trace_p = 0.0;
  double linear = 0.0;
  for (Eigen::Index j = 0; j < rho.size(); ++j) {
    trace_p += std::pow(rho[j], p);
    linear += std::pow(rho[j], p - 1.0) * family.gamma1(j, j).real();
  }
  const double quad = trace_Q(rho, family.gamma0, ScalarFunction::power(p));
  return (p * linear + quad) / ((1.0 - p) * trace_p);
}

struct TaylorResidual {
  bool exact = false;   // all residuals under the 1e-13 noise floor
  double slope = 0.0;   // log-log fit of residual vs t when not exact
  std::vector<double> residuals;
};

// Remainder scaling of the second-order expansion: the residual
// |S_p(rho(t)) - S_p(rho) - t^2 coeff| should shrink like t^3, slope >= 2.7
// in a log-log fit. S_p(rho(t)) is evaluated by full eigendecomposition.
inline TaylorResidual taylor_residual_check(const PerturbationFamily& family, RenyiOrder order,
                                            const std::vector<double>& t_grid) {
  if (t_grid.size() < 4)
    throw std::invalid_argument("taylor_residual_check: need at least 4 grid points");
  for (double t : t_grid)
    if (!(t > 0.0 && t <= 0.1))
      throw std::invalid_argument("taylor_residual_check: t grid must lie in (0, 0.1]");

  const double coeff = renyi_second_order_coeff(family, order);
  const double base = renyi_entropy(RealVector(family.rho_diag), order);

  TaylorResidual result;
  result.residuals.reserve(t_grid.size());
  std::vector<double> log_t, log_r;
  for (double t : t_grid) {
    const double s = renyi_entropy(eig_hermitian(family.density_at(t)).eigenvalues, order);
    const double residual = std::abs(s - base - t * t * coeff);
    result.residuals.push_back(residual);
    if (residual > 1e-13) {
      log_t.push_back(std::log(t));
      log_r.push_back(std::log(residual));
    }
  }
  if (log_t.size() < 2) {
    result.exact = true;  // below noise floor at (essentially) all points
    return result;
  }
  double mean_t = 0.0, mean_r = 0.0;
  for (std::size_t i = 0; i < log_t.size(); ++i) {
    mean_t += log_t[i];
    mean_r += log_r[i];
  }
  mean_t /= log_t.size();
  mean_r /= log_r.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < log_t.size(); ++i) {
    num += (log_t[i] - mean_t) * (log_r[i] - mean_r);
    den += (log_t[i] - mean_t) * (log_t[i] - mean_t);
  }
  result.slope = num / den;
  return result;
}

}  // namespace renstab
