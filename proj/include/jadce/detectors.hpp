#pragma once

#include <string_view>
#include <vector>

#include "jadce/aem_calibration.hpp"
#include "jadce/linalg.hpp"

namespace jadce {

struct DetectionResult {
  CMatrix estimate;   // X^, N_g x M
  RVector row_scores; // ||row n of X^||_2
  Index iterations = 0;
  double seconds = 0.0;
  bool converged = false;
};

/// Fills row_scores from estimate.
void score_rows(DetectionResult& result);

// ---------------------------------------------------------------------------
// CB-SOMP

struct SompOptions {
  double tolerance = 1e-4;
  Index max_support = 0;  // 0: min(L, N_g)
};

/// Greedy support selection by ||d_j||_1 / ||s_j||_2 with D = S^H R and
/// least-squares refit of X on the support against Y. Stops on relative change
/// of X below tolerance, residual below 1e-10 ||Y||_F, max_support selections,
/// or re-selection of a chosen index.
DetectionResult cb_somp(const CMatrix& received, const CMatrix& pilots,
                        const SompOptions& options = {});

/// Also reports the selected indices in selection order.
DetectionResult cb_somp(const CMatrix& received, const CMatrix& pilots,
                        const SompOptions& options, std::vector<Index>* support);

// ---------------------------------------------------------------------------
// AEM-ADMM

struct AdmmTrace {
  std::vector<double> primal_residual;  // ||X - Z||_F
  std::vector<double> dual_residual;    // rho ||Z(t+1) - Z(t)||_F
  std::vector<double> z_norm;
};

struct AdmmOptions {
  double lambda = 1.0;
  double rho = 1.0;
  double tolerance = 1e-4;
  Index max_iter = 2000;
  AdmmTrace* trace = nullptr;
};

/// Solver for (A^H A + rho I) V = B with A = C S, plus S^H C^H C, reusable
/// across observations for fixed (S_g, calibration, rho). When N_g > L the
/// L x L Woodbury form rho^-1 (B - A^H (rho I + A A^H)^-1 A B) is used.
struct AdmmFactor {
  CMatrix weighted_adjoint;  // S^H C^H C, N_g x L
  CMatrix whitened;          // A = C S, L x N_g (Woodbury form only)
  Eigen::LLT<CMatrix> system;
  bool woodbury = false;
  double rho = 1.0;

  CMatrix solve(const CMatrix& rhs) const;
};

AdmmFactor prepare_admm(const CMatrix& pilots, const AemCalibration& calibration,
                        double rho);

/// Row-wise group soft threshold: row * max(|row| - threshold, 0) / |row|.
CMatrix group_soft_threshold(const CMatrix& rows, double threshold);

/// min_X 1/2 ||C (S X - (Y^ + Psi))||_F^2 + lambda ||X||_{2,1} via scaled ADMM.
/// The estimate is the final Z with rows zeroed where the thresholded X is zero.
DetectionResult aem_admm(const CMatrix& back_projected, const CMatrix& pilots,
                         const AemCalibration& calibration,
                         const AdmmOptions& options = {});
DetectionResult aem_admm(const CMatrix& back_projected, const AdmmFactor& factor,
                         const AemCalibration& calibration,
                         const AdmmOptions& options = {});

/// 1/2 ||C (S X - (Y^ + Psi))||_F^2 + lambda ||X||_{2,1}
double admm_objective(const CMatrix& estimate, const CMatrix& back_projected,
                      const CMatrix& pilots, const AemCalibration& calibration,
                      double lambda);

// ---------------------------------------------------------------------------
// AEM-SBL

struct SblTrace {
  std::vector<RVector> gamma;         // gamma used by each E-step
  std::vector<double> min_eigenvalue; // of Sigma at each E-step (if requested)
  std::vector<double> max_eigenvalue;
  bool record_sigma_spectrum = false;
};

struct SblOptions {
  double tolerance = 1e-4;
  Index max_iter = 1000;
  double gamma_max = 1e12;
  SblTrace* trace = nullptr;
};

struct SblPosterior {
  CMatrix mean;      // X^, N_g x M
  RVector variance;  // nu = diag(Sigma)
};

/// E-step: Sigma = (S^H Phi^-1 S + Gamma)^-1, X^ = Sigma S^H Phi^-1 (Y^ + Psi).
SblPosterior sbl_posterior(const CMatrix& corrected, const CMatrix& pilots,
                           const AemCalibration& calibration, const RVector& gamma);

/// Full posterior covariance for diagnostics.
CMatrix sbl_covariance(const CMatrix& pilots, const AemCalibration& calibration,
                       const RVector& gamma);

/// Type-II log evidence log p(Y^ + Psi | gamma) with covariance
/// S Gamma^-1 S^H + Phi_reg, summed over antennas.
double sbl_log_evidence(const CMatrix& corrected, const CMatrix& pilots,
                        const AemCalibration& calibration, const RVector& gamma);

/// EM sparse Bayesian learning with the corrected likelihood.
/// M-step: gamma_n = 1 / (||x^_n||^2 / M + nu_n), clamped to (0, gamma_max].
DetectionResult aem_sbl(const CMatrix& back_projected, const CMatrix& pilots,
                        const AemCalibration& calibration,
                        const SblOptions& options = {}, RVector* gamma_out = nullptr);

// ---------------------------------------------------------------------------
// Centralized baselines: single cluster, uncorrected likelihood.

enum class BaselineKind { somp, admm, sbl };

BaselineKind parse_baseline(std::string_view name);

struct BaselineOptions {
  double noise_power = 1.0;
  AdmmOptions admm;
  SblOptions sbl;
  SompOptions somp;
};

/// somp: cb_somp on the full S. admm: C = I, Psi = 0, Y^ = Y.
/// sbl: Phi = sigma^2 I, Psi = 0, Y^ = Y.
DetectionResult centralized_baseline(BaselineKind kind, const CMatrix& received,
                                     const CMatrix& pilots,
                                     const BaselineOptions& options);

}  // namespace jadce
