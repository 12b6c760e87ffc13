#pragma once

#include <cstdint>
#include <vector>

#include "jadce/linalg.hpp"
#include "jadce/random.hpp"

namespace jadce {

enum class ChannelKind { uncorrelated, local_scattering };

struct ScenarioConfig {
  Index devices = 1000;
  Index clusters = 4;
  Index antennas = 32;
  double activity = 0.01;          // epsilon
  double snr_db = 10.0;            // per-device received SNR after power inversion
  double noise_power = 2e-13;      // W
  double cell_radius = 250.0;      // m
  double min_distance = 25.0;      // m
  ChannelKind channel = ChannelKind::uncorrelated;
  double angular_spread_deg = 10.0;
  Index paths = 6;                 // multipath clusters of the scattering model
  Index coherence_interval = 300;  // metadata only
  // Express powers in units of the noise power (sigma^2 = 1). Metrics are
  // invariant to this change of units.
  bool normalize_noise = false;
};

struct NetworkScenario {
  Index antennas = 0;
  double activity = 0.0;
  double noise_power = 0.0;  // in the scenario's units
  double physical_noise_power = 0.0;
  double snr_db = 0.0;
  ChannelKind channel = ChannelKind::uncorrelated;
  double angular_spread = 0.0;  // rad
  Index paths = 0;
  Index coherence_interval = 0;
  std::vector<Index> cluster_sizes;
  std::vector<Index> cluster_offsets;
  std::vector<double> distance;      // m
  std::vector<double> path_loss_db;  // dB
  std::vector<double> beta;          // linear path loss
  std::vector<double> power;         // transmit power, scenario units
  std::vector<double> azimuth;       // nominal angle, rad
  std::vector<CMatrix> covariance;   // Q_n (local scattering only)
  std::vector<CMatrix> covariance_root;

  Index devices() const { return static_cast<Index>(beta.size()); }
  Index clusters() const { return static_cast<Index>(cluster_sizes.size()); }
  /// Q_n; beta_n * I for uncorrelated channels.
  CMatrix covariance_of(Index n) const;
};

/// beta = -130 - 37.6 log10(d). Throws for d <= 0.
double path_loss_db(double distance_m);
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Approximate Gaussian local scattering covariance for a half-wavelength ULA:
/// [Q]_{k,m} = beta/Lp sum_i exp(j pi (k-m) sin phi_i)
///             * exp(-sigma^2/2 (pi (k-m) cos phi_i)^2),
/// with phi_i ~ U(phi - 2pi/9, phi + 2pi/9).
CMatrix local_scattering_covariance(double beta, double nominal_angle,
                                    double angular_spread, Index antennas,
                                    Index paths, std::uint64_t seed,
                                    bool project_psd = true);

CMatrix uncorrelated_covariance(double beta, Index antennas);

/// Independent Bernoulli(epsilon) draws.
std::vector<std::uint8_t> sample_activity(Index devices, double activity,
                                          std::uint64_t seed);

/// Devices uniform in the annulus [min_distance, cell_radius], uniformly split
/// into contiguous equal-size clusters, with power inversion
/// p_n = SNR * sigma^2 / beta_n.
NetworkScenario make_scenario(const ScenarioConfig& config, std::uint64_t seed);

struct ChannelRealization {
  std::vector<std::uint8_t> activity;  // alpha
  std::vector<Index> active;           // indices with alpha_n = 1
  CMatrix channel;                     // X, N x M
  CMatrix noise;                       // W, L x M
  CMatrix received;                    // Y = S X + W
};

/// Draws alpha, h_n ~ CN(0, Q_n) for active devices, W ~ CN(0, sigma^2 I), and
/// returns Y = S X + W. Activity, channel and noise use disjoint sub-streams.
ChannelRealization sample_realization(const NetworkScenario& scenario,
                                      const CMatrix& pilots, std::uint64_t seed);

}  // namespace jadce
