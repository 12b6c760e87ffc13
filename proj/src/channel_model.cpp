#include "jadce/channel_model.hpp"

#include <cmath>
#include <numbers>

namespace jadce {

CMatrix NetworkScenario::covariance_of(Index n) const {
  if (channel == ChannelKind::local_scattering) return covariance[n];
  return uncorrelated_covariance(beta[n], antennas);
}

double path_loss_db(double distance_m) {
  require(distance_m > 0.0, "path_loss_db: distance must be positive, got " +
                                std::to_string(distance_m));
  return -130.0 - 37.6 * std::log10(distance_m);
}

CMatrix local_scattering_covariance(double beta, double nominal_angle,
                                    double angular_spread, Index antennas,
                                    Index paths, std::uint64_t seed,
                                    bool project_psd) {
  require(antennas >= 1, "local_scattering_covariance: M must be >= 1");
  require(paths >= 1, "local_scattering_covariance: L_p must be >= 1");
  require(angular_spread >= 0.0,
          "local_scattering_covariance: angular spread must be >= 0");
  constexpr double pi = std::numbers::pi;
  constexpr double half_width = 2.0 * pi / 9.0;
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(nominal_angle - half_width,
                                               nominal_angle + half_width);
  std::vector<double> phi(paths);
  for (double& p : phi) p = angle(rng);

  // Toeplitz: entries depend only on k - m
  CVector first_col(antennas);
  for (Index d = 0; d < antennas; ++d) {
    Complex acc = 0.0;
    for (double p : phi) {
      const double spread = pi * static_cast<double>(d) * std::cos(p);
      acc += std::polar(std::exp(-0.5 * angular_spread * angular_spread * spread * spread),
                        pi * static_cast<double>(d) * std::sin(p));
    }
    first_col(d) = acc * (beta / static_cast<double>(paths));
  }
  first_col(0) = beta;

  CMatrix q(antennas, antennas);
  for (Index k = 0; k < antennas; ++k)
    for (Index m = 0; m < antennas; ++m)
      q(k, m) = k >= m ? first_col(k - m) : std::conj(first_col(m - k));

  if (project_psd) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < 0.0) {
      q = nearest_psd(q);
      for (Index k = 0; k < antennas; ++k) q(k, k) = beta;
    }
  }
  return q;
}

CMatrix uncorrelated_covariance(double beta, Index antennas) {
  return CMatrix::Identity(antennas, antennas) * beta;
}

std::vector<std::uint8_t> sample_activity(Index devices, double activity,
                                          std::uint64_t seed) {
  require(activity >= 0.0 && activity <= 1.0,
          "sample_activity: epsilon must lie in [0, 1]");
  Rng rng(seed);
  std::bernoulli_distribution draw(activity);
  std::vector<std::uint8_t> alpha(devices);
  for (auto& a : alpha) a = draw(rng) ? 1 : 0;
  return alpha;
}

NetworkScenario make_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  require(config.devices >= 1, "make_scenario: N must be >= 1");
  require(config.clusters >= 1 && config.clusters <= config.devices,
          "make_scenario: need 1 <= G <= N");
  require(config.antennas >= 1, "make_scenario: M must be >= 1");
  require(config.activity >= 0.0 && config.activity <= 1.0,
          "make_scenario: epsilon must lie in [0, 1]");
  require(config.noise_power >= 0.0, "make_scenario: noise power must be >= 0");
  require(config.min_distance > 0.0 && config.min_distance < config.cell_radius,
          "make_scenario: need 0 < min_distance < cell_radius");
  require(config.paths >= 1, "make_scenario: L_p must be >= 1");

  NetworkScenario sc;
  sc.antennas = config.antennas;
  sc.activity = config.activity;
  sc.physical_noise_power = config.noise_power;
  sc.noise_power = config.normalize_noise ? 1.0 : config.noise_power;
  sc.snr_db = config.snr_db;
  sc.channel = config.channel;
  sc.angular_spread = config.angular_spread_deg * std::numbers::pi / 180.0;
  sc.paths = config.paths;
  sc.coherence_interval = config.coherence_interval;

  const Index n = config.devices;
  const Index g = config.clusters;
  Index offset = 0;
  for (Index c = 0; c < g; ++c) {
    const Index size = n / g + (c < n % g ? 1 : 0);
    sc.cluster_sizes.push_back(size);
    sc.cluster_offsets.push_back(offset);
    offset += size;
  }

  const double snr = db_to_linear(config.snr_db);
  // With normalize_noise the noise floor is 1 and SNR fixes the received power.
  const double reference_noise = config.normalize_noise ? 1.0 : config.noise_power;
  Rng rng(derive_seed(seed, {stream::scenario}));
  std::uniform_real_distribution<double> area(
      config.min_distance * config.min_distance,
      config.cell_radius * config.cell_radius);
  std::uniform_real_distribution<double> azimuth(-std::numbers::pi, std::numbers::pi);

  sc.distance.resize(n);
  sc.path_loss_db.resize(n);
  sc.beta.resize(n);
  sc.power.resize(n);
  sc.azimuth.resize(n);
  for (Index i = 0; i < n; ++i) {
    sc.distance[i] = std::sqrt(area(rng));
    sc.azimuth[i] = azimuth(rng);
    sc.path_loss_db[i] = path_loss_db(sc.distance[i]);
    sc.beta[i] = db_to_linear(sc.path_loss_db[i]);
    sc.power[i] = snr * reference_noise / sc.beta[i];
  }
  if (sc.channel == ChannelKind::local_scattering) {
    sc.covariance.reserve(n);
    sc.covariance_root.reserve(n);
    for (Index i = 0; i < n; ++i) {
      sc.covariance.push_back(local_scattering_covariance(
          sc.beta[i], sc.azimuth[i], sc.angular_spread, sc.antennas, sc.paths,
          derive_seed(seed, {stream::scenario, static_cast<std::uint64_t>(i)})));
      sc.covariance_root.push_back(psd_sqrt(sc.covariance.back()));
    }
  }
  return sc;
}

ChannelRealization sample_realization(const NetworkScenario& scenario,
                                      const CMatrix& pilots, std::uint64_t seed) {
  const Index n = scenario.devices();
  const Index m = scenario.antennas;
  require(pilots.cols() == n, "sample_realization: pilot bank has " +
                                  std::to_string(pilots.cols()) +
                                  " columns for " + std::to_string(n) + " devices");
  ChannelRealization r;
  r.activity = sample_activity(n, scenario.activity, derive_seed(seed, {0}));
  for (Index i = 0; i < n; ++i)
    if (r.activity[i]) r.active.push_back(i);

  r.channel = CMatrix::Zero(n, m);
  Rng channel_rng(derive_seed(seed, {1}));
  const Index k = static_cast<Index>(r.active.size());
  CMatrix s_active(pilots.rows(), k);
  CMatrix x_active(k, m);
  for (Index a = 0; a < k; ++a) {
    const Index i = r.active[a];
    CVector w(m);
    for (Index j = 0; j < m; ++j) w(j) = complex_normal(channel_rng);
    const CVector h = scenario.channel == ChannelKind::local_scattering
                          ? CVector(scenario.covariance_root[i] * w)
                          : CVector(w * std::sqrt(scenario.beta[i]));
    x_active.row(a) = h.transpose() * std::sqrt(scenario.power[i]);
    r.channel.row(i) = x_active.row(a);
    s_active.col(a) = pilots.col(i);
  }

  Rng noise_rng(derive_seed(seed, {2}));
  r.noise = complex_normal_matrix(noise_rng, pilots.rows(), m, scenario.noise_power);
  r.received = r.noise;
  if (k > 0) r.received.noalias() += s_active * x_active;
  return r;
}

}  // namespace jadce
