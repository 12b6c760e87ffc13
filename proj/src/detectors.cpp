#include "jadce/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace jadce {

void score_rows(DetectionResult& result) { result.row_scores = row_norms(result.estimate); }

namespace {

double relative_change(const CMatrix& next, const CMatrix& prev, double reference) {
  const double diff = (next - prev).norm();
  if (reference == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / reference;
}

void require_same_rows(const CMatrix& y, const CMatrix& s, const char* who) {
  require(y.rows() == s.rows(), std::string(who) + ": Y has " + std::to_string(y.rows()) +
                                    " rows but S has " + std::to_string(s.rows()));
}

}  // namespace

// ---------------------------------------------------------------------------

DetectionResult cb_somp(const CMatrix& received, const CMatrix& pilots,
                        const SompOptions& options) {
  return cb_somp(received, pilots, options, nullptr);
}

DetectionResult cb_somp(const CMatrix& received, const CMatrix& pilots,
                        const SompOptions& options, std::vector<Index>* support_out) {
  require_same_rows(received, pilots, "cb_somp");
  require(options.tolerance > 0.0, "cb_somp: tolerance must be positive");
  const Index n = pilots.cols();
  const Index m = received.cols();
  const Index cap = std::min(pilots.rows(), n);
  const Index k_max = options.max_support > 0 ? options.max_support : cap;
  require(k_max <= cap, "cb_somp: max_support=" + std::to_string(k_max) +
                            " exceeds min(L, N)=" + std::to_string(cap));

  DetectionResult out;
  out.estimate = CMatrix::Zero(n, m);
  const double floor = 1e-10 * received.norm();
  const RVector col_norm = pilots.colwise().norm().transpose();
  std::vector<Index> support;
  CMatrix residual = received;

  if (residual.norm() <= floor) {
    out.converged = true;
    score_rows(out);
    if (support_out) support_out->clear();
    return out;
  }

  for (Index t = 1; t <= k_max; ++t) {
    const CMatrix corr = pilots.adjoint() * residual;
    Index best = -1;
    double best_score = -1.0;
    for (Index j = 0; j < n; ++j) {
      if (col_norm(j) == 0.0) continue;
      const double score = corr.row(j).cwiseAbs().sum() / col_norm(j);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0 || std::find(support.begin(), support.end(), best) != support.end()) {
      out.converged = true;  // stagnation
      break;
    }
    support.push_back(best);

    const Index k = static_cast<Index>(support.size());
    CMatrix sub(pilots.rows(), k);
    for (Index a = 0; a < k; ++a) sub.col(a) = pilots.col(support[a]);
    const CMatrix fit = pseudo_inverse(sub) * received;

    CMatrix next = CMatrix::Zero(n, m);
    for (Index a = 0; a < k; ++a) next.row(support[a]) = fit.row(a);
    residual = received - sub * fit;
    out.iterations = t;

    const double change = relative_change(next, out.estimate, next.norm());
    out.estimate = std::move(next);
    if (change < options.tolerance || residual.norm() <= floor) {
      out.converged = true;
      break;
    }
  }
  score_rows(out);
  if (support_out) *support_out = support;
  return out;
}

// ---------------------------------------------------------------------------

AdmmFactor prepare_admm(const CMatrix& pilots, const AemCalibration& calibration,
                        double rho) {
  require(rho > 0.0, "aem_admm: rho must be positive");
  require(calibration.whitening.cols() == pilots.rows(),
          "aem_admm: calibration is for L=" + std::to_string(calibration.whitening.cols()) +
              ", pilots have L=" + std::to_string(pilots.rows()));
  CMatrix whitened = calibration.whitening * pilots;  // C S
  AdmmFactor f;
  f.rho = rho;
  f.weighted_adjoint = whitened.adjoint() * calibration.whitening;
  f.woodbury = pilots.cols() > pilots.rows();
  CMatrix system = f.woodbury ? CMatrix(whitened * whitened.adjoint())
                              : CMatrix(whitened.adjoint() * whitened);
  system.diagonal().array() += rho;
  f.system.compute(hermitian_part(system));
  if (f.system.info() != Eigen::Success)
    throw NumericalError("aem_admm: factorization of S^H C^H C S + rho I failed");
  if (f.woodbury) f.whitened = std::move(whitened);
  return f;
}

CMatrix AdmmFactor::solve(const CMatrix& rhs) const {
  if (!woodbury) return system.solve(rhs);
  return (rhs - whitened.adjoint() * system.solve(whitened * rhs)) / rho;
}

CMatrix group_soft_threshold(const CMatrix& rows, double threshold) {
  CMatrix out = rows;
  for (Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (norm <= threshold || norm == 0.0)
      out.row(i).setZero();
    else
      out.row(i) *= (norm - threshold) / norm;
  }
  return out;
}

DetectionResult aem_admm(const CMatrix& back_projected, const CMatrix& pilots,
                         const AemCalibration& calibration, const AdmmOptions& options) {
  require_same_rows(back_projected, pilots, "aem_admm");
  return aem_admm(back_projected, prepare_admm(pilots, calibration, options.rho),
                  calibration, options);
}

DetectionResult aem_admm(const CMatrix& back_projected, const AdmmFactor& factor,
                         const AemCalibration& calibration, const AdmmOptions& options) {
  require(options.lambda >= 0.0, "aem_admm: lambda must be >= 0");
  require(options.rho > 0.0, "aem_admm: rho must be positive");
  require(options.tolerance > 0.0, "aem_admm: tolerance must be positive");
  require(factor.rho == options.rho, "aem_admm: factor was prepared for another rho");
  require(factor.weighted_adjoint.cols() == back_projected.rows() &&
              calibration.mismatch_mean.rows() == back_projected.rows() &&
              calibration.mismatch_mean.cols() == back_projected.cols(),
          "aem_admm: dimension mismatch between Y^, S and calibration");

  const double rho = options.rho;
  const double threshold = options.lambda / rho;
  const Index n = factor.weighted_adjoint.rows();
  const Index m = back_projected.cols();
  const CMatrix data = factor.weighted_adjoint * (back_projected + calibration.mismatch_mean);

  CMatrix x = CMatrix::Zero(n, m);
  CMatrix z = CMatrix::Zero(n, m);
  CMatrix theta = CMatrix::Zero(n, m);
  DetectionResult out;

  for (Index t = 1; t <= options.max_iter; ++t) {
    CMatrix z_next = factor.solve(rho * x - theta + data);
    x = group_soft_threshold(z_next + theta / rho, threshold);
    theta += rho * (z_next - x);

    if (!z_next.allFinite() || !theta.allFinite()) {
      std::ostringstream msg;
      msg << "aem_admm: non-finite iterate at t=" << t << " (lambda=" << options.lambda
          << ", rho=" << rho << ", |Z(t-1)|=" << z.norm() << ")";
      throw DivergenceError(msg.str());
    }
    const double z_norm = z_next.norm();
    const double primal = (x - z_next).norm();
    const double dz = relative_change(z_next, z, z.norm());
    if (options.trace) {
      options.trace->primal_residual.push_back(primal);
      options.trace->dual_residual.push_back(rho * (z_next - z).norm());
      options.trace->z_norm.push_back(z_norm);
    }
    z = std::move(z_next);
    out.iterations = t;
    const bool primal_ok = z_norm == 0.0 ? primal == 0.0 : primal / z_norm < options.tolerance;
    if (dz < options.tolerance && primal_ok) {
      out.converged = true;
      break;
    }
  }

  out.estimate = std::move(z);
  for (Index i = 0; i < n; ++i)
    if (x.row(i).squaredNorm() == 0.0) out.estimate.row(i).setZero();
  score_rows(out);
  return out;
}

double admm_objective(const CMatrix& estimate, const CMatrix& back_projected,
                      const CMatrix& pilots, const AemCalibration& calibration,
                      double lambda) {
  const CMatrix r =
      calibration.whitening *
      (pilots * estimate - (back_projected + calibration.mismatch_mean));
  return 0.5 * r.squaredNorm() + lambda * row_norms(estimate).sum();
}

// ---------------------------------------------------------------------------

namespace {

Eigen::LLT<CMatrix> marginal_covariance(const CMatrix& pilots,
                                        const AemCalibration& calibration,
                                        const RVector& gamma) {
  CMatrix cov = pilots * gamma.cwiseInverse().asDiagonal() * pilots.adjoint();
  cov += calibration.regularized_cov;
  Eigen::LLT<CMatrix> llt(hermitian_part(cov));
  if (llt.info() != Eigen::Success)
    throw NumericalError("aem_sbl: marginal covariance is not positive definite");
  return llt;
}

}  // namespace

SblPosterior sbl_posterior(const CMatrix& corrected, const CMatrix& pilots,
                           const AemCalibration& calibration, const RVector& gamma) {
  require_same_rows(corrected, pilots, "aem_sbl");
  require(gamma.size() == pilots.cols(), "aem_sbl: gamma has wrong length");
  const Index l = pilots.rows();
  const Index n = pilots.cols();
  SblPosterior post;
  if (n <= l) {
    // Sigma = (S^H Phi^-1 S + Gamma)^-1 directly
    const CMatrix weighted = pilots.adjoint() * calibration.precision;  // S^H Phi^-1
    CMatrix inv_sigma = weighted * pilots;
    inv_sigma.diagonal() += gamma.cast<Complex>();
    Eigen::LLT<CMatrix> llt(hermitian_part(inv_sigma));
    if (llt.info() != Eigen::Success)
      throw NumericalError("aem_sbl: posterior precision is not positive definite");
    const CMatrix sigma = llt.solve(CMatrix::Identity(n, n));
    post.mean = sigma * (weighted * corrected);
    post.variance = sigma.diagonal().real();
  } else {
    // Woodbury: Sigma = G^-1 - G^-1 S^H (Phi + S G^-1 S^H)^-1 S G^-1, G = Gamma
    const RVector var = gamma.cwiseInverse();
    const Eigen::LLT<CMatrix> llt = marginal_covariance(pilots, calibration, gamma);
    const CMatrix a = llt.solve(pilots);  // C_y^-1 S
    post.mean = var.asDiagonal() * (a.adjoint() * corrected);
    post.variance.resize(n);
    for (Index i = 0; i < n; ++i) {
      const double q = pilots.col(i).dot(a.col(i)).real();
      post.variance(i) = std::max(var(i) - var(i) * var(i) * q, 0.0);
    }
  }
  return post;
}

CMatrix sbl_covariance(const CMatrix& pilots, const AemCalibration& calibration,
                       const RVector& gamma) {
  CMatrix inv_sigma = pilots.adjoint() * calibration.precision * pilots;
  inv_sigma.diagonal() += gamma.cast<Complex>();
  Eigen::LLT<CMatrix> llt(hermitian_part(inv_sigma));
  if (llt.info() != Eigen::Success)
    throw NumericalError("aem_sbl: posterior precision is not positive definite");
  return hermitian_part(llt.solve(CMatrix::Identity(pilots.cols(), pilots.cols())));
}

double sbl_log_evidence(const CMatrix& corrected, const CMatrix& pilots,
                        const AemCalibration& calibration, const RVector& gamma) {
  const Eigen::LLT<CMatrix> llt = marginal_covariance(pilots, calibration, gamma);
  const double l = static_cast<double>(pilots.rows());
  const double m = static_cast<double>(corrected.cols());
  const double log_det = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  const CMatrix white = llt.matrixL().solve(corrected);
  return -m * l * std::log(std::numbers::pi) - m * log_det - white.squaredNorm();
}

DetectionResult aem_sbl(const CMatrix& back_projected, const CMatrix& pilots,
                        const AemCalibration& calibration, const SblOptions& options,
                        RVector* gamma_out) {
  require_same_rows(back_projected, pilots, "aem_sbl");
  require(options.tolerance > 0.0, "aem_sbl: tolerance must be positive");
  require(options.gamma_max > 0.0, "aem_sbl: gamma_max must be positive");
  require(calibration.mismatch_mean.rows() == back_projected.rows() &&
              calibration.mismatch_mean.cols() == back_projected.cols(),
          "aem_sbl: calibration does not match Y^ dimensions");

  const Index n = pilots.cols();
  const double m = static_cast<double>(back_projected.cols());
  const CMatrix corrected = back_projected + calibration.mismatch_mean;
  RVector gamma = RVector::Ones(n);
  DetectionResult out;
  out.estimate = CMatrix::Zero(n, back_projected.cols());

  if (corrected.norm() == 0.0) {
    // zero data: the evidence increases without bound as every gamma grows
    gamma.setConstant(options.gamma_max);
    out.converged = true;
    score_rows(out);
    if (gamma_out) *gamma_out = gamma;
    return out;
  }

  for (Index t = 1; t <= options.max_iter; ++t) {
    if (options.trace) {
      options.trace->gamma.push_back(gamma);
      if (options.trace->record_sigma_spectrum) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(sbl_covariance(pilots, calibration, gamma),
                                                  Eigen::EigenvaluesOnly);
        options.trace->min_eigenvalue.push_back(es.eigenvalues().minCoeff());
        options.trace->max_eigenvalue.push_back(es.eigenvalues().maxCoeff());
      }
    }
    SblPosterior post = sbl_posterior(corrected, pilots, calibration, gamma);
    const RVector energy = post.mean.rowwise().squaredNorm() / m;
    for (Index i = 0; i < n; ++i)
      gamma(i) = std::min(1.0 / (energy(i) + post.variance(i)), options.gamma_max);
    if (!gamma.allFinite() || !post.mean.allFinite() || (gamma.array() <= 0.0).any()) {
      std::ostringstream msg;
      msg << "aem_sbl: non-finite hyper-parameters at t=" << t
          << " (min nu=" << post.variance.minCoeff() << ")";
      throw DivergenceError(msg.str());
    }
    const double change = relative_change(post.mean, out.estimate, post.mean.norm());
    out.estimate = std::move(post.mean);
    out.iterations = t;
    if (change < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  if (options.trace) options.trace->gamma.push_back(gamma);
  score_rows(out);
  if (gamma_out) *gamma_out = gamma;
  return out;
}

// ---------------------------------------------------------------------------

BaselineKind parse_baseline(std::string_view name) {
  if (name == "somp") return BaselineKind::somp;
  if (name == "admm") return BaselineKind::admm;
  if (name == "sbl") return BaselineKind::sbl;
  throw std::invalid_argument("centralized_baseline: unknown kind '" + std::string(name) +
                              "' (expected somp, admm or sbl)");
}

DetectionResult centralized_baseline(BaselineKind kind, const CMatrix& received,
                                     const CMatrix& pilots,
                                     const BaselineOptions& options) {
  require_same_rows(received, pilots, "centralized_baseline");
  const Index l = pilots.rows();
  const Index m = received.cols();
  switch (kind) {
    case BaselineKind::somp:
      return cb_somp(received, pilots, options.somp);
    case BaselineKind::admm:
      return aem_admm(received, pilots, identity_calibration(l, m, 1.0), options.admm);
    case BaselineKind::sbl:
      return aem_sbl(received, pilots,
                     identity_calibration(l, m, std::max(options.noise_power, 1e-12)),
                     options.sbl);
  }
  throw std::invalid_argument("centralized_baseline: unknown kind");
}

}  // namespace jadce
