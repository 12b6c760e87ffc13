#pragma once

#include <filesystem>
#include <vector>

#include "jadce/aem_calibration.hpp"
#include "jadce/detectors.hpp"
#include "jadce/pilot_design.hpp"

namespace jadce {

/// Pilot matrix as text: a `# L=..,G=..,kappa=a;b,N_g=c;d,s=e;f,seed=..` header
/// followed by L rows of interleaved re,im values (%.17g, round-trips exactly).
void write_pilot_bank(const PilotBank& bank, const std::filesystem::path& file);

struct PilotFile {
  CMatrix pilots;
  std::vector<Index> kappa;
  std::vector<Index> cluster_sizes;
  std::vector<Index> cardinality;
  std::uint64_t seed = 0;
};

PilotFile read_pilot_bank(const std::filesystem::path& file);

/// Little-endian binary dump of Psi, Phi, Phi_reg, C, delta, tau and seed.
void save_calibration(const AemCalibration& calibration, const std::filesystem::path& file);
AemCalibration load_calibration(const std::filesystem::path& file);

/// iteration,primal_residual,dual_residual,z_norm
void write_admm_trace(const AdmmTrace& trace, const std::filesystem::path& file);
/// iteration,log_evidence,min_gamma,max_gamma[,sigma_min_eig,sigma_max_eig]
void write_sbl_trace(const SblTrace& trace, const std::vector<double>& log_evidence,
                     const std::filesystem::path& file);

}  // namespace jadce
