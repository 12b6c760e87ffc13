#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace jadce {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when an iterative solver produces non-finite iterates.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a factorization fails on supposedly well-conditioned input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline bool all_finite(const CMatrix& m) { return m.allFinite(); }

/// Row-wise Euclidean norms of a complex matrix.
inline RVector row_norms(const CMatrix& m) { return m.rowwise().norm(); }

/// (A + A^H) / 2
inline CMatrix hermitian_part(const CMatrix& a) {
  return (a + a.adjoint()) * 0.5;
}

/// Orthogonal projector onto the column span of `a` together with the
/// matching pseudo-inverse of a a^H applied to a, i.e. (a a^H)^+ a.
/// Singular values below rtol * sigma_max are treated as zero.
struct SpanProjection {
  CMatrix projector;     // L x L
  CMatrix back_map;      // L x n, (a a^H)^+ a
  CMatrix basis;         // L x rank, orthonormal columns spanning range(a)
  Index rank = 0;
};

SpanProjection span_projection(const CMatrix& a, double rtol = 1e-10);

/// Moore-Penrose pseudo-inverse with relative singular-value cutoff.
CMatrix pseudo_inverse(const CMatrix& a, double rtol = 1e-10);

/// Hermitian PSD square root via eigen-decomposition; negative eigenvalues
/// are floored at zero.
CMatrix psd_sqrt(const CMatrix& a);

/// Nearest Hermitian PSD matrix in Frobenius norm (eigenvalues floored at 0).
CMatrix nearest_psd(const CMatrix& a);

}  // namespace jadce
