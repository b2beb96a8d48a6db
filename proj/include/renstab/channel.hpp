#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "renstab/states.hpp"

namespace renstab {

// Single-qudit depolarizing map D_lambda(rho) = lambda rho + (1-lambda) I/d,
// applied independently to every site. a and b are the output eigenvalues
// of D_lambda|0><0|: a on |0>, b on each of the d-1 other levels.
struct DepolarizingParams {
  double lambda = 0.5;
  int d = 2;
  int n = 1;

  DepolarizingParams(double lambda_, int d_, int n_) : lambda(lambda_), d(d_), n(n_) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("DepolarizingParams: lambda must lie in [0, 1]");
    if (d < 2) throw std::invalid_argument("DepolarizingParams: d must be >= 2");
    if (n < 1) throw std::invalid_argument("DepolarizingParams: n must be >= 1");
  }

  double a() const { return (1.0 + (d - 1) * lambda) / d; }
  double b() const { return (1.0 - lambda) / d; }

  double r() const {
    if (lambda >= 1.0)
      throw std::domain_error("DepolarizingParams::r: undefined at lambda = 1 (b = 0)");
    return a() / b();
  }

  long dim() const { return dim_pow(d, n); }
};

namespace detail {

// One site of X -> lambda X + (1-lambda) (I/d) (x) Tr_site(X), as a linear
// map on arbitrary operators (the perturbation family needs it on
// non-density inputs).
inline Matrix depolarize_site(const Matrix& x, int d, int n, int site, double lambda) {
  const long pre = dim_pow(d, site);
  const long post = dim_pow(d, n - site - 1);
  Matrix out = lambda * x;
  const double fill = (1.0 - lambda) / d;
  for (long ip = 0; ip < pre; ++ip)
    for (long iq = 0; iq < post; ++iq)
      for (long jp = 0; jp < pre; ++jp)
        for (long jq = 0; jq < post; ++jq) {
          Complex traced = 0.0;
          for (long s = 0; s < d; ++s)
            traced += x((ip * d + s) * post + iq, (jp * d + s) * post + jq);
          const Complex add = fill * traced;
          for (long s = 0; s < d; ++s)
            out((ip * d + s) * post + iq, (jp * d + s) * post + jq) += add;
        }
  return out;
}

}  // namespace detail

// D_lambda^{(x) n} as a linear map on operators.
inline Matrix apply_depolarizing_op(const DepolarizingParams& params, const Matrix& x) {
  if (x.rows() != params.dim() || x.cols() != params.dim())
    throw std::invalid_argument("apply_depolarizing_op: operator side must be d^n");
  Matrix out = x;
  for (int site = 0; site < params.n; ++site)
    out = detail::depolarize_site(out, params.d, params.n, site, params.lambda);
  return out;
}

inline DensityMatrix apply_depolarizing(const DepolarizingParams& params,
                                        const DensityMatrix& rho) {
  if (rho.d != params.d || rho.n != params.n)
    throw std::invalid_argument("apply_depolarizing: state dimensions do not match channel");
  return DensityMatrix(params.d, params.n, apply_depolarizing_op(params, rho.mat));
}

struct SpectrumLine {
  double value = 0.0;
  long multiplicity = 0;
};

inline long binomial(int n, int k) {
  long out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

// Output spectrum of D_lambda^{(x) n} on any pure product input:
// eigenvalue a^{n-k} b^k with multiplicity C(n,k) (d-1)^k, k = 0..n.
inline std::vector<SpectrumLine> product_output_spectrum(const DepolarizingParams& params) {
  std::vector<SpectrumLine> lines;
  lines.reserve(params.n + 1);
  const double a = params.a();
  const double b = params.b();
  long degeneracy = 1;  // (d-1)^k
  for (int k = 0; k <= params.n; ++k) {
    lines.push_back({std::pow(a, params.n - k) * std::pow(b, k),
                     binomial(params.n, k) * degeneracy});
    degeneracy *= (params.d - 1);
  }
  return lines;
}

}  // namespace renstab
