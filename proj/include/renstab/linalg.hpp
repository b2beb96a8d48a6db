#pragma once

#include <Eigen/Dense>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace renstab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Shared tolerances. Stated once, reused everywhere.
namespace tol {
inline constexpr double hermiticity = 1e-10;   // relative
inline constexpr double trace = 1e-10;
inline constexpr double psd_drift = 1e-10;     // eigenvalues above -psd_drift clip to 0
inline constexpr double orthogonality = 1e-12;
inline constexpr double entropy_zero = 1e-14;  // eigenvalues below this count as 0 in entropy sums
inline constexpr double confluence = 1e-9;     // divided-difference confluent switch, relative to spectral range
}  // namespace tol

inline double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& m, double rel_tol = tol::hermiticity) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return hermiticity_defect(m) <= rel_tol * scale;
}

struct HermitianSpectrum {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // orthonormal columns, paired with eigenvalues

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
  }
};

inline HermitianSpectrum eig_hermitian(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("eig_hermitian: matrix must be square");
  if (!is_hermitian(m)) {
    std::ostringstream msg;
    msg << "eig_hermitian: symmetry violation, max |M - M^dagger| = "
        << hermiticity_defect(m) << " exceeds " << tol::hermiticity
        << " * max|entry|";
    throw std::invalid_argument(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eig_hermitian: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Eigenvalues in [-psd_drift, 0) clip to 0; anything more negative is a
// hard error rather than silent repair.
inline RealVector clip_spectrum(const RealVector& eigenvalues) {
  RealVector out = eigenvalues;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) {
      if (out[i] < -tol::psd_drift) {
        std::ostringstream msg;
        msg << "clip_spectrum: eigenvalue " << out[i] << " below -"
            << tol::psd_drift << ", operator is not positive semidefinite";
        throw std::domain_error(msg.str());
      }
      out[i] = 0.0;
    }
  }
  return out;
}

// U diag(lambda_i^p) U^dagger for Hermitian PSD input.
inline Matrix matrix_power(const Matrix& m, double p) {
  if (!(p > 0.0)) throw std::domain_error("matrix_power: exponent must be > 0");
  HermitianSpectrum spec = eig_hermitian(m);
  RealVector lam = clip_spectrum(spec.eigenvalues);
  RealVector powered(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) powered[i] = std::pow(lam[i], p);
  return spec.eigenvectors * powered.asDiagonal() * spec.eigenvectors.adjoint();
}

// Sum of singular values. For Hermitian arguments this is the sum of
// absolute eigenvalues.
inline double trace_norm(const Matrix& m) {
  if (is_hermitian(m)) {
    return eig_hermitian(m).eigenvalues.cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

}  // namespace renstab
