#include "jadce/linalg.hpp"

#include <algorithm>

namespace jadce {

namespace {

Index effective_rank(const RVector& singular, double rtol) {
  if (singular.size() == 0) return 0;
  const double cutoff = rtol * singular(0);
  Index r = 0;
  while (r < singular.size() && singular(r) > cutoff) ++r;
  return r;
}

}  // namespace

SpanProjection span_projection(const CMatrix& a, double rtol) {
  require(a.size() > 0, "span_projection: empty matrix");
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  const Index r = sv(0) > 0.0 ? effective_rank(sv, rtol) : 0;

  SpanProjection out;
  out.rank = r;
  const CMatrix u = svd.matrixU().leftCols(r);
  const CMatrix v = svd.matrixV().leftCols(r);
  out.basis = u;
  out.projector = u * u.adjoint();
  const RVector inv_sv = sv.head(r).cwiseInverse();
  out.back_map = u * inv_sv.asDiagonal() * v.adjoint();
  if (r == 0) {
    out.basis = CMatrix::Zero(a.rows(), 0);
    out.projector = CMatrix::Zero(a.rows(), a.rows());
    out.back_map = CMatrix::Zero(a.rows(), a.cols());
  }
  return out;
}

CMatrix pseudo_inverse(const CMatrix& a, double rtol) {
  if (a.size() == 0) return CMatrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  const Index r = sv(0) > 0.0 ? effective_rank(sv, rtol) : 0;
  if (r == 0) return CMatrix::Zero(a.cols(), a.rows());
  return svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal() *
         svd.matrixU().leftCols(r).adjoint();
}

CMatrix psd_sqrt(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix nearest_psd(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  const RVector lambda = es.eigenvalues().cwiseMax(0.0);
  return hermitian_part(es.eigenvectors() * lambda.asDiagonal() *
                        es.eigenvectors().adjoint());
}

}  // namespace jadce
