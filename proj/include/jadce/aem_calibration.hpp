#pragma once

#include <cstdint>
#include <vector>

#include "jadce/channel_model.hpp"
#include "jadce/linalg.hpp"
#include "jadce/pilot_design.hpp"

namespace jadce {

/// X~_g = S_g^H Y
CMatrix decorrelate(const CMatrix& cluster_pilots, const CMatrix& received);

struct ClusterProjection {
  CMatrix decorrelated;    // X~_g, N_g x M
  CMatrix back_projected;  // Y^_g, L x M
  CMatrix projector;       // P_g, L x L
};

/// Precomputed (S_g S_g^H)^+ S_g and P_g for one cluster.
class ClusterProjector {
 public:
  explicit ClusterProjector(const CMatrix& cluster_pilots, double rtol = 1e-10);

  const CMatrix& pilots() const { return pilots_; }
  const CMatrix& projector() const { return span_.projector; }
  const CMatrix& basis() const { return span_.basis; }
  const CMatrix& back_map() const { return span_.back_map; }
  Index rank() const { return span_.rank; }

  /// Y^_g = (S_g S_g^H)^+ S_g X~_g
  CMatrix back_project(const CMatrix& decorrelated) const;
  ClusterProjection project(const CMatrix& received) const;

 private:
  CMatrix pilots_;
  SpanProjection span_;
};

/// One-shot form: returns Y^_g and P_g.
ClusterProjection back_project(const CMatrix& cluster_pilots,
                               const CMatrix& decorrelated, double rtol = 1e-10);

/// Learned statistics of the mismatch E_g = S_g X_g - Y^_g for one cluster.
struct AemCalibration {
  CMatrix mismatch_mean;    // Psi_g, L x M
  CMatrix mismatch_cov;     // Phi_g, L x L
  CMatrix regularized_cov;  // Phi_reg = Phi_g + delta I
  CMatrix precision;        // Phi_reg^{-1}
  CMatrix whitening;        // C_g with C_g^H C_g = Phi_reg^{-1}
  double regularization = 0.0;
  Index training_samples = 0;
  std::uint64_t seed = 0;

  Index length() const { return mismatch_cov.rows(); }
  Index antennas() const { return mismatch_mean.cols(); }
};

/// Regularize Phi, invert, and factor the precision. Throws NumericalError if
/// the Cholesky factorization fails after regularization.
AemCalibration finalize_calibration(CMatrix mismatch_mean, CMatrix mismatch_cov,
                                    Index training_samples, std::uint64_t seed);

/// Psi = 0, Phi = Phi_reg = variance * I; the uncorrected likelihood used by
/// the centralized baselines.
AemCalibration identity_calibration(Index length, Index antennas, double variance);

/// Train cluster g over tau full-network realizations (all clusters plus noise).
/// Realization i is drawn with derive_seed(seed, {training, i}).
AemCalibration calibrate(const PilotBank& bank, Index cluster,
                         const NetworkScenario& scenario, Index training_samples,
                         std::uint64_t seed);

/// All clusters from one shared set of training realizations; element g equals
/// calibrate(bank, g, scenario, tau, seed).
std::vector<AemCalibration> calibrate_all(const PilotBank& bank,
                                          const NetworkScenario& scenario,
                                          Index training_samples, std::uint64_t seed);

/// One cluster's problem in the coordinates of an orthonormal basis U_g of
/// span(S_g). Y^_g, Psi_g and S_g X all lie in that span and Phi_reg is
/// block-diagonal with respect to it, so the corrected likelihood and the
/// ADMM objective are unchanged (up to constants) in these coordinates while
/// every dense operation shrinks from L to rank(S_g) = kappa_g.
struct ReducedCluster {
  CMatrix basis;               // U_g, L x r
  CMatrix pilots;              // U_g^H S_g, r x N_g
  CMatrix reduce_map;          // U_g^H (S_g S_g^H)^+ S_g, maps X~_g to U_g^H Y^_g
  AemCalibration calibration;  // Psi and Phi_reg in U_g coordinates
};

ReducedCluster reduce_cluster(const ClusterProjector& projector,
                              const AemCalibration& calibration);

}  // namespace jadce
