#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "renstab/channel.hpp"
#include "renstab/states.hpp"

namespace renstab {

// Renyi order p > 0. Values within 1e-12 of 1 select the von Neumann
// limit; p = 1 +/- 1e-6 still takes the generic branch, so continuity in p
// is observable.
struct RenyiOrder {
  double p = 2.0;

  explicit RenyiOrder(double p_) : p(p_) {
    if (!(p > 0.0)) throw std::domain_error("RenyiOrder: p must be > 0");
  }

  bool is_von_neumann() const { return std::abs(p - 1.0) < 1e-12; }
};

// S_p = ln(sum lambda^p)/(1-p), von Neumann -sum lambda ln lambda at p=1.
// Natural logarithm throughout; eigenvalues below 1e-14 count as zero.
inline double renyi_entropy(const RealVector& spectrum, RenyiOrder order) {
  const RealVector lam = clip_spectrum(spectrum);
  if (order.is_von_neumann()) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam[i] > tol::entropy_zero) s -= lam[i] * std::log(lam[i]);
    return s;
  }
  double trace_p = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam[i] > tol::entropy_zero) trace_p += std::pow(lam[i], order.p);
  return std::log(trace_p) / (1.0 - order.p);
}

inline double renyi_entropy(const std::vector<SpectrumLine>& spectrum, RenyiOrder order) {
  if (order.is_von_neumann()) {
    double s = 0.0;
    for (const SpectrumLine& line : spectrum)
      if (line.value > tol::entropy_zero)
        s -= line.multiplicity * line.value * std::log(line.value);
    return s;
  }
  double trace_p = 0.0;
  for (const SpectrumLine& line : spectrum)
    if (line.value > tol::entropy_zero)
      trace_p += line.multiplicity * std::pow(line.value, order.p);
  return std::log(trace_p) / (1.0 - order.p);
}

inline double renyi_entropy(const DensityMatrix& rho, RenyiOrder order) {
  return renyi_entropy(eig_hermitian(rho.mat).eigenvalues, order);
}

// Minimal output entropy of D_lambda^{(x) n}, attained on product inputs:
// n/(1-p) ln(a^p + (d-1) b^p), and the matching limit at p = 1. Linear in n.
inline double min_output_renyi_closed(const DepolarizingParams& params, RenyiOrder order) {
  const double a = params.a();
  const double b = params.b();
  const int d = params.d;
  if (order.is_von_neumann()) {
    double s = -a * std::log(a);
    if (b > 0.0) s -= (d - 1) * b * std::log(b);
    return params.n * s;
  }
  const double trace_p = std::pow(a, order.p) + (d - 1) * std::pow(b, order.p);
  return params.n * std::log(trace_p) / (1.0 - order.p);
}

struct MinEntropyResult {
  double value = 0.0;
  PureState argmin;
};

namespace detail {

inline double output_entropy(const DepolarizingParams& params, const StateVector& psi,
                             RenyiOrder order) {
  const Matrix out = apply_depolarizing_op(params, psi * psi.adjoint());
  return renyi_entropy(eig_hermitian(out).eigenvalues, order);
}

// Adaptive random search on the unit sphere: propose psi + eta * g, keep
// improvements, grow eta on success and shrink it otherwise. Step sizes
// anneal to ~1e-9, which pins the value down to well below 1e-6.
inline double spherical_descent(const DepolarizingParams& params, RenyiOrder order,
                                StateVector& psi, Rng& rng, int max_iters) {
  double value = output_entropy(params, psi, order);
  double eta = 0.5;
  for (int iter = 0; iter < max_iters; ++iter) {
    StateVector candidate = psi;
    for (Eigen::Index i = 0; i < candidate.size(); ++i)
      candidate[i] += eta * rng.complex_gaussian();
    candidate /= candidate.norm();
    const double candidate_value = output_entropy(params, candidate, order);
    if (candidate_value < value) {
      psi = candidate;
      value = candidate_value;
      eta = std::min(eta * 1.4, 1.0);
    } else {
      eta *= 0.92;
    }
    if (eta < 1e-9) break;
  }
  return value;
}

}  // namespace detail

// Minimum of S_p(D_lambda^{(x)n} |psi><psi|) over all pure inputs, found by
// restarted stochastic descent. Heuristic upper bound on the true minimum;
// the argmin certificate makes misses reproducible.
inline MinEntropyResult min_output_renyi_numeric(const DepolarizingParams& params,
                                                 RenyiOrder order, int restarts = 16,
                                                 std::uint64_t seed = 0,
                                                 int max_iters = 1500) {
  if (restarts < 1)
    throw std::invalid_argument("min_output_renyi_numeric: restarts must be >= 1");
  const long dim = params.dim();
  double best_value = std::numeric_limits<double>::infinity();
  StateVector best_psi;
  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(restart));
    StateVector psi = random_unit_vector(dim, rng);
    const double value = detail::spherical_descent(params, order, psi, rng, max_iters);
    if (value < best_value) {
      best_value = value;
      best_psi = std::move(psi);
    }
  }
  return MinEntropyResult{best_value, PureState(params.d, params.n, std::move(best_psi))};
}

}  // namespace renstab
