#include "jadce/aem_calibration.hpp"

#include <sstream>

#include "jadce/random.hpp"

namespace jadce {

CMatrix decorrelate(const CMatrix& cluster_pilots, const CMatrix& received) {
  require(cluster_pilots.rows() == received.rows(),
          "decorrelate: S_g has " + std::to_string(cluster_pilots.rows()) +
              " rows but Y has " + std::to_string(received.rows()));
  return cluster_pilots.adjoint() * received;
}

ClusterProjector::ClusterProjector(const CMatrix& cluster_pilots, double rtol)
    : pilots_(cluster_pilots), span_(span_projection(cluster_pilots, rtol)) {}

CMatrix ClusterProjector::back_project(const CMatrix& decorrelated) const {
  require(decorrelated.rows() == pilots_.cols(),
          "back_project: X~_g has " + std::to_string(decorrelated.rows()) +
              " rows for " + std::to_string(pilots_.cols()) + " pilots");
  return span_.back_map * decorrelated;
}

ClusterProjection ClusterProjector::project(const CMatrix& received) const {
  ClusterProjection out;
  out.decorrelated = decorrelate(pilots_, received);
  out.back_projected = back_project(out.decorrelated);
  out.projector = span_.projector;
  return out;
}

ClusterProjection back_project(const CMatrix& cluster_pilots,
                               const CMatrix& decorrelated, double rtol) {
  require(cluster_pilots.norm() > 0.0, "back_project: S_g is zero");
  const ClusterProjector proj(cluster_pilots, rtol);
  ClusterProjection out;
  out.decorrelated = decorrelated;
  out.back_projected = proj.back_project(decorrelated);
  out.projector = proj.projector();
  return out;
}

AemCalibration finalize_calibration(CMatrix mismatch_mean, CMatrix mismatch_cov,
                                    Index training_samples, std::uint64_t seed) {
  const Index l = mismatch_cov.rows();
  require(mismatch_cov.cols() == l && mismatch_mean.rows() == l,
          "finalize_calibration: inconsistent dimensions");
  AemCalibration c;
  c.mismatch_mean = std::move(mismatch_mean);
  c.mismatch_cov = hermitian_part(mismatch_cov);
  c.training_samples = training_samples;
  c.seed = seed;
  const double trace = c.mismatch_cov.trace().real();
  c.regularization = std::max(1e-8 * trace / static_cast<double>(l), 1e-12);
  c.regularized_cov = c.mismatch_cov;
  c.regularized_cov.diagonal().array() += c.regularization;

  Eigen::LLT<CMatrix> llt(c.regularized_cov);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(c.regularized_cov, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "calibrate: Cholesky of regularized Phi failed (trace=" << trace
        << ", delta=" << c.regularization
        << ", min eigenvalue=" << es.eigenvalues().minCoeff()
        << ", max eigenvalue=" << es.eigenvalues().maxCoeff() << ")";
    throw NumericalError(msg.str());
  }
  c.precision = hermitian_part(llt.solve(CMatrix::Identity(l, l)));
  Eigen::LLT<CMatrix> prec(c.precision);
  if (prec.info() != Eigen::Success)
    throw NumericalError("calibrate: Cholesky of Phi_reg^{-1} failed (delta=" +
                         std::to_string(c.regularization) + ")");
  // precision = L L^H, so C = L^H satisfies C^H C = precision
  c.whitening = prec.matrixU();
  return c;
}

AemCalibration identity_calibration(Index length, Index antennas, double variance) {
  require(variance > 0.0, "identity_calibration: variance must be positive");
  AemCalibration c;
  c.mismatch_mean = CMatrix::Zero(length, antennas);
  c.mismatch_cov = CMatrix::Identity(length, length) * variance;
  c.regularized_cov = c.mismatch_cov;
  c.precision = CMatrix::Identity(length, length) / variance;
  c.whitening = CMatrix::Identity(length, length) / std::sqrt(variance);
  return c;
}

namespace {

struct MismatchAccumulator {
  CMatrix sum;        // sum_i E(i)
  CMatrix sum_outer;  // sum_i E(i) E(i)^H, summed over antennas
};

AemCalibration finish(const MismatchAccumulator& acc, Index tau, Index antennas,
                      std::uint64_t seed) {
  const double t = static_cast<double>(tau);
  CMatrix mean = acc.sum / t;
  // Per-antenna unbiased covariance, averaged over antennas:
  // Phi = 1/M sum_m 1/(tau-1) (sum_i e_m e_m^H - tau mu_m mu_m^H)
  CMatrix cov = (acc.sum_outer - t * mean * mean.adjoint()) /
                (static_cast<double>(antennas) * (t - 1.0));
  return finalize_calibration(std::move(mean), std::move(cov), tau, seed);
}

std::vector<AemCalibration> train_clusters(const PilotBank& bank,
                                           const NetworkScenario& scenario,
                                           Index training_samples, std::uint64_t seed,
                                           const std::vector<Index>& clusters) {
  require(training_samples >= 2, "calibrate: tau must be >= 2");
  require(bank.devices() == scenario.devices(),
          "calibrate: pilot bank and scenario disagree on N");
  const Index l = bank.length();
  const Index m = scenario.antennas;

  std::vector<ClusterProjector> projectors;
  std::vector<MismatchAccumulator> acc(clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    projectors.emplace_back(bank.cluster_pilots(clusters[k]));
    acc[k].sum = CMatrix::Zero(l, m);
    acc[k].sum_outer = CMatrix::Zero(l, l);
  }
  for (Index i = 0; i < training_samples; ++i) {
    const ChannelRealization r = sample_realization(
        scenario, bank.pilots,
        derive_seed(seed, {stream::training, static_cast<std::uint64_t>(i)}));
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const Index g = clusters[k];
      const ClusterProjector& p = projectors[k];
      const CMatrix truth =
          p.pilots() * r.channel.middleRows(bank.cluster_offsets[g], bank.cluster_sizes[g]);
      const CMatrix err = truth - p.back_project(p.pilots().adjoint() * r.received);
      acc[k].sum += err;
      acc[k].sum_outer.noalias() += err * err.adjoint();
    }
  }
  std::vector<AemCalibration> out;
  out.reserve(clusters.size());
  for (const auto& a : acc) out.push_back(finish(a, training_samples, m, seed));
  return out;
}

}  // namespace

std::vector<AemCalibration> calibrate_all(const PilotBank& bank,
                                          const NetworkScenario& scenario,
                                          Index training_samples, std::uint64_t seed) {
  std::vector<Index> all(bank.clusters());
  for (Index g = 0; g < bank.clusters(); ++g) all[g] = g;
  return train_clusters(bank, scenario, training_samples, seed, all);
}

AemCalibration calibrate(const PilotBank& bank, Index cluster,
                         const NetworkScenario& scenario, Index training_samples,
                         std::uint64_t seed) {
  require(cluster >= 0 && cluster < bank.clusters(), "calibrate: no such cluster");
  return std::move(
      train_clusters(bank, scenario, training_samples, seed, {cluster}).front());
}

ReducedCluster reduce_cluster(const ClusterProjector& projector,
                              const AemCalibration& calibration) {
  require(calibration.length() == projector.pilots().rows(),
          "reduce_cluster: calibration and pilots disagree on L");
  const CMatrix& u = projector.basis();
  ReducedCluster out;
  out.basis = u;
  out.pilots = u.adjoint() * projector.pilots();
  out.reduce_map = u.adjoint() * projector.back_map();

  AemCalibration& c = out.calibration;
  c.mismatch_mean = u.adjoint() * calibration.mismatch_mean;
  c.mismatch_cov = hermitian_part(u.adjoint() * calibration.mismatch_cov * u);
  c.regularization = calibration.regularization;
  c.regularized_cov = c.mismatch_cov;
  c.regularized_cov.diagonal().array() += c.regularization;
  c.training_samples = calibration.training_samples;
  c.seed = calibration.seed;
  Eigen::LLT<CMatrix> llt(c.regularized_cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("reduce_cluster: reduced Phi_reg is not positive definite");
  c.precision = hermitian_part(llt.solve(CMatrix::Identity(u.cols(), u.cols())));
  Eigen::LLT<CMatrix> prec(c.precision);
  if (prec.info() != Eigen::Success)
    throw NumericalError("reduce_cluster: reduced precision is not positive definite");
  c.whitening = prec.matrixU();
  return out;
}

}  // namespace jadce
