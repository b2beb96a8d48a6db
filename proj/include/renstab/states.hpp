#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "renstab/linalg.hpp"
#include "renstab/rng.hpp"

namespace renstab {

inline long dim_pow(int d, int n) {
  long dim = 1;
  for (int i = 0; i < n; ++i) dim *= d;
  return dim;
}

// Number of nonzero d-ary symbols in the base-d expansion of a basis index.
inline int hamming_weight(long index, int d, int n) {
  int w = 0;
  for (int site = 0; site < n; ++site) {
    if (index % d != 0) ++w;
    index /= d;
  }
  return w;
}

// Unit vector in (C^d)^{tensor n}. Site 0 is the most significant digit of
// the basis index, so |x_0 x_1 ... x_{n-1}> has index sum x_i d^{n-1-i}.
struct PureState {
  int d = 2;
  int n = 1;
  StateVector amplitudes;

  PureState(int d_, int n_, StateVector amps) : d(d_), n(n_), amplitudes(std::move(amps)) {
    if (d < 2) throw std::invalid_argument("PureState: local dimension must be >= 2");
    if (n < 1) throw std::invalid_argument("PureState: site count must be >= 1");
    if (amplitudes.size() != dim_pow(d, n))
      throw std::invalid_argument("PureState: amplitude vector length must be d^n");
    const double norm2 = amplitudes.squaredNorm();
    if (std::abs(norm2 - 1.0) > 1e-12)
      throw std::invalid_argument("PureState: squared norm deviates from 1 by more than 1e-12");
  }

  long dim() const { return amplitudes.size(); }

  static PureState basis(int d, int n, long index) {
    StateVector amps = StateVector::Zero(dim_pow(d, n));
    if (index < 0 || index >= amps.size())
      throw std::invalid_argument("PureState::basis: index out of range");
    amps[index] = 1.0;
    return PureState(d, n, std::move(amps));
  }

  static PureState zero(int d, int n) { return basis(d, n, 0); }
};

struct DensityMatrix {
  int d = 2;
  int n = 1;
  Matrix mat;

  DensityMatrix(int d_, int n_, Matrix m) : d(d_), n(n_), mat(std::move(m)) {
    const long dim = dim_pow(d, n);
    if (mat.rows() != dim || mat.cols() != dim)
      throw std::invalid_argument("DensityMatrix: side must be d^n");
    if (!is_hermitian(mat))
      throw std::invalid_argument("DensityMatrix: operator is not Hermitian within tolerance");
    if (std::abs(mat.trace().real() - 1.0) > tol::trace || std::abs(mat.trace().imag()) > tol::trace)
      throw std::invalid_argument("DensityMatrix: trace deviates from 1 beyond 1e-10");
  }

  long dim() const { return mat.rows(); }

  static DensityMatrix pure(const PureState& psi) {
    return DensityMatrix(psi.d, psi.n, psi.amplitudes * psi.amplitudes.adjoint());
  }

  static DensityMatrix maximally_mixed(int d, int n) {
    const long dim = dim_pow(d, n);
    return DensityMatrix(d, n, Matrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  // Eigenvalue floor check (O(dim^3)), kept out of the constructor; power
  // and entropy paths enforce it where the spectrum is actually used.
  bool is_positive_semidefinite() const {
    return eig_hermitian(mat).eigenvalues.minCoeff() >= -tol::psd_drift;
  }
};

inline double fidelity_pure(const PureState& psi, const PureState& phi) {
  if (psi.d != phi.d || psi.n != phi.n)
    throw std::invalid_argument("fidelity_pure: dimension mismatch");
  return std::norm(psi.amplitudes.dot(phi.amplitudes));
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.d != b.d || a.n != b.n)
    throw std::invalid_argument("trace_distance: dimension mismatch");
  return trace_norm(a.mat - b.mat);
}

// Kronecker product of single-site factors, site 0 leftmost.
inline PureState tensor(const std::vector<StateVector>& factors) {
  if (factors.empty()) throw std::invalid_argument("tensor: no factors");
  const int d = static_cast<int>(factors.front().size());
  if (d < 2) throw std::invalid_argument("tensor: local dimension must be >= 2");
  StateVector acc = StateVector::Ones(1);
  for (const StateVector& f : factors) {
    if (f.size() != d)
      throw std::invalid_argument("tensor: mixed local dimensions");
    StateVector next(acc.size() * d);
    for (Eigen::Index i = 0; i < acc.size(); ++i)
      for (Eigen::Index j = 0; j < d; ++j) next[i * d + j] = acc[i] * f[j];
    acc.swap(next);
  }
  const double norm = acc.norm();
  if (norm <= 0.0) throw std::invalid_argument("tensor: zero factor");
  acc /= norm;
  return PureState(d, static_cast<int>(factors.size()), std::move(acc));
}

// Trace out one site (0-based), returning the state of the remaining n-1.
inline DensityMatrix partial_trace(const DensityMatrix& rho, int site) {
  if (site < 0 || site >= rho.n)
    throw std::out_of_range("partial_trace: site index out of range");
  if (rho.n == 1)
    throw std::invalid_argument("partial_trace: cannot trace the only site");
  const int d = rho.d;
  const long pre = dim_pow(d, site);
  const long post = dim_pow(d, rho.n - site - 1);
  const long out_dim = pre * post;
  Matrix out = Matrix::Zero(out_dim, out_dim);
  for (long ip = 0; ip < pre; ++ip)
    for (long iq = 0; iq < post; ++iq)
      for (long jp = 0; jp < pre; ++jp)
        for (long jq = 0; jq < post; ++jq) {
          Complex sum = 0.0;
          for (long s = 0; s < d; ++s)
            sum += rho.mat((ip * d + s) * post + iq, (jp * d + s) * post + jq);
          out(ip * post + iq, jp * post + jq) = sum;
        }
  return DensityMatrix(d, rho.n - 1, std::move(out));
}

enum class StateKind { haar, random_product };

inline StateVector random_unit_vector(long dim, Rng& rng) {
  StateVector v(dim);
  for (long i = 0; i < dim; ++i) v[i] = rng.complex_gaussian();
  v /= v.norm();
  return v;
}

// Haar mode: normalized i.i.d. complex Gaussian vector (unitarily
// invariant). Product mode: independent Haar factors per site.
inline PureState sample_state(StateKind kind, int d, int n, std::uint64_t seed) {
  if (d < 2 || n < 1) throw std::invalid_argument("sample_state: need d >= 2, n >= 1");
  Rng rng(seed);
  if (kind == StateKind::haar) {
    return PureState(d, n, random_unit_vector(dim_pow(d, n), rng));
  }
  std::vector<StateVector> factors;
  factors.reserve(n);
  for (int i = 0; i < n; ++i) factors.push_back(random_unit_vector(d, rng));
  return tensor(factors);
}

// sqrt(1-eps0)|0...0> + sqrt(eps0)|phi_perp>, fidelity with |0...0> exactly
// 1-eps0 by construction.
inline PureState perturbed_product(double eps0, const PureState& phi_perp) {
  if (!(eps0 >= 0.0 && eps0 <= 1.0))
    throw std::invalid_argument("perturbed_product: eps0 must lie in [0, 1]");
  if (std::abs(phi_perp.amplitudes[0]) > tol::orthogonality)
    throw std::invalid_argument(
        "perturbed_product: direction is not orthogonal to |0...0> within 1e-12");
  StateVector amps = std::sqrt(eps0) * phi_perp.amplitudes;
  amps[0] += std::sqrt(1.0 - eps0);
  const double norm = amps.norm();
  amps /= norm;
  return PureState(phi_perp.d, phi_perp.n, std::move(amps));
}

// Squared amplitude per Hamming weight class; w[k] sums |alpha_x|^2 over
// basis states x with exactly k nonzero symbols.
struct WeightDecomposition {
  std::vector<double> w;  // indexed by weight 0..n

  double total() const { return std::accumulate(w.begin(), w.end(), 0.0); }
};

inline WeightDecomposition weight_decomposition(const PureState& phi) {
  WeightDecomposition out;
  out.w.assign(static_cast<std::size_t>(phi.n) + 1, 0.0);
  for (long x = 0; x < phi.dim(); ++x)
    out.w[hamming_weight(x, phi.d, phi.n)] += std::norm(phi.amplitudes[x]);
  return out;
}

struct ProductFidelityResult {
  double value = 0.0;
  PureState argmax;
  std::vector<StateVector> factors;
};

namespace detail {

// Overlap <psi| f_0 ... f_{n-1}> with site `site` replaced by each basis
// vector; the optimal factor is the normalized conjugate of this
// environment vector.
inline StateVector site_environment(const PureState& psi,
                                    const std::vector<StateVector>& factors, int site) {
  const int d = psi.d;
  const int n = psi.n;
  StateVector env = StateVector::Zero(d);
  const long post = dim_pow(d, n - site - 1);
  for (long x = 0; x < psi.dim(); ++x) {
    Complex weight = std::conj(psi.amplitudes[x]);
    long rest = x;
    const long site_digit = (x / post) % d;
    for (int s = n - 1; s >= 0; --s) {
      const long digit = rest % d;
      rest /= d;
      if (s != site) weight *= factors[s][digit];
    }
    env[site_digit] += weight;
  }
  return env;
}

inline double alternating_product_ascent(const PureState& psi,
                                         std::vector<StateVector>& factors) {
  double value = 0.0;
  for (int sweep = 0; sweep < 200; ++sweep) {
    double previous = value;
    for (int site = 0; site < psi.n; ++site) {
      StateVector env = site_environment(psi, factors, site);
      const double norm = env.norm();
      if (norm <= 1e-300) continue;  // overlap vanished, keep current factor
      factors[site] = env.conjugate() / norm;
      value = norm * norm;
    }
    if (value - previous <= 1e-14) break;
  }
  return value;
}

}  // namespace detail

// Best squared overlap with a product state found by alternating
// single-site updates from `restarts` starting points. Restart 0 starts
// from the dominant computational basis state (itself a product state), so
// the result never falls below the largest squared amplitude; the value is
// a certified lower bound on the true maximum.
inline ProductFidelityResult max_product_fidelity(const PureState& psi, int restarts = 32,
                                                  std::uint64_t seed = 0) {
  if (restarts < 1) throw std::invalid_argument("max_product_fidelity: restarts must be >= 1");
  const int d = psi.d;
  const int n = psi.n;

  double best_value = -1.0;
  std::vector<StateVector> best_factors;

  for (int restart = 0; restart < restarts; ++restart) {
    std::vector<StateVector> factors;
    factors.reserve(n);
    if (restart == 0) {
      Eigen::Index peak = 0;
      psi.amplitudes.cwiseAbs().maxCoeff(&peak);
      long rest = peak;
      std::vector<long> digits(n);
      for (int s = n - 1; s >= 0; --s) {
        digits[s] = rest % d;
        rest /= d;
      }
      for (int s = 0; s < n; ++s) {
        StateVector f = StateVector::Zero(d);
        f[digits[s]] = 1.0;
        factors.push_back(std::move(f));
      }
    } else {
      Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(restart));
      for (int s = 0; s < n; ++s) factors.push_back(random_unit_vector(d, rng));
    }
    const double value = detail::alternating_product_ascent(psi, factors);
    if (value > best_value) {
      best_value = value;
      best_factors = factors;
    }
  }

  ProductFidelityResult result{best_value, tensor(best_factors), std::move(best_factors)};
  return result;
}

}  // namespace renstab
