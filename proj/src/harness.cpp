#include "jadce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace jadce {

namespace {

bool uses(const ExperimentConfig& c, Algorithm a) {
  return std::find(c.algorithms.begin(), c.algorithms.end(), a) != c.algorithms.end();
}

std::uint64_t u64(Index v) { return static_cast<std::uint64_t>(v); }

SblOptions sbl_options(const ExperimentConfig& c) {
  SblOptions o;
  o.tolerance = c.tolerance;
  o.max_iter = c.sbl_max_iter;
  o.gamma_max = c.gamma_max;
  return o;
}

AdmmOptions admm_options(const ExperimentConfig& c, double lambda) {
  AdmmOptions o;
  o.lambda = lambda;
  o.rho = c.rho;
  o.tolerance = c.tolerance;
  o.max_iter = c.admm_max_iter;
  return o;
}

Index somp_support(const ExperimentConfig& c, Index natural, Index cap) {
  const Index k = c.somp_max_support > 0 ? c.somp_max_support : natural;
  return std::max<Index>(1, std::min(k, cap));
}

/// Detector input for cluster g: U_g^H Y^_g in reduced coordinates, Y^_g otherwise.
CMatrix cluster_input(const Pipeline& p, Index g, const CMatrix& received) {
  const CMatrix xt = decorrelate(p.projectors[g].pilots(), received);
  if (p.config.reduced) return p.reduced[g].reduce_map * xt;
  return p.projectors[g].back_project(xt);
}

DetectionResult run_cluster(const Pipeline& p, Algorithm a, Index g, const CMatrix& received,
                            double lambda) {
  const ExperimentConfig& c = p.config;
  switch (a) {
    case Algorithm::aem_sbl: {
      const CMatrix input = cluster_input(p, g, received);
      if (c.reduced)
        return aem_sbl(input, p.reduced[g].pilots, p.reduced[g].calibration, sbl_options(c));
      return aem_sbl(input, p.projectors[g].pilots(), p.calibrations[g], sbl_options(c));
    }
    case Algorithm::aem_admm: {
      const CMatrix input = cluster_input(p, g, received);
      const AemCalibration& cal = c.reduced ? p.reduced[g].calibration : p.calibrations[g];
      return aem_admm(input, p.cluster_factors[g], cal, admm_options(c, lambda));
    }
    case Algorithm::cb_somp: {
      const CMatrix s = p.bank.cluster_pilots(g);
      SompOptions o;
      o.tolerance = c.tolerance;
      o.max_support = somp_support(c, p.bank.basis.kappa[g],
                                   std::min(p.bank.length(), p.bank.cluster_sizes[g]));
      return cb_somp(received, s, o);
    }
    default:
      throw std::invalid_argument("run_cluster: not a cluster-wise algorithm");
  }
}

void place(DetectionResult& total, const DetectionResult& part, Index offset, bool first) {
  total.estimate.middleRows(offset, part.estimate.rows()) = part.estimate;
  total.iterations = std::max(total.iterations, part.iterations);
  total.converged = (first || total.converged) && part.converged;
}

DetectionResult detect(const Pipeline& p, Algorithm a, const CMatrix& received, double lambda) {
  const ExperimentConfig& c = p.config;
  const Index n = p.bank.devices();
  const Index m = received.cols();
  if (is_clustered(a)) {
    return timed([&] {
      DetectionResult total;
      total.estimate = CMatrix::Zero(n, m);
      for (Index g = 0; g < p.bank.clusters(); ++g)
        place(total, run_cluster(p, a, g, received, lambda), p.bank.cluster_offsets[g], g == 0);
      score_rows(total);
      return total;
    });
  }
  return timed([&] {
    switch (a) {
      case Algorithm::sbl:
        return aem_sbl(received, p.bank.pilots, p.central_sbl, sbl_options(c));
      case Algorithm::admm:
        return aem_admm(received, *p.central_factor, p.central_admm, admm_options(c, lambda));
      default: {
        SompOptions o;
        o.tolerance = c.tolerance;
        const Index cap = std::min(p.bank.length(), n);
        o.max_support = somp_support(c, cap, cap);
        return cb_somp(received, p.bank.pilots, o);
      }
    }
  });
}

double lambda_of(const Pipeline& p, Algorithm a) {
  return a == Algorithm::aem_admm ? p.aem_lambda : p.central_lambda;
}

/// Picks the grid value with the lowest mean NMSE on a held-out batch.
double search_lambda(Pipeline& p, Algorithm a) {
  const ExperimentConfig& c = p.config;
  // Whitening gives the AEM residual unit variance; the centralized
  // residual keeps the noise variance.
  const double base = std::sqrt(static_cast<double>(p.scenario.antennas)) *
                      (a == Algorithm::aem_admm ? 1.0 : std::sqrt(p.scenario.noise_power));
  std::vector<ChannelRealization> batch(static_cast<std::size_t>(c.lambda_trials));
  for (Index t = 0; t < c.lambda_trials; ++t)
    batch[t] = sample_realization(
        p.scenario, p.bank.pilots,
        derive_seed(c.seed, {stream::lambda_search, u64(p.sweep_index), u64(t)}));

  double best = c.lambda_grid.front() * base;
  double best_score = std::numeric_limits<double>::infinity();
  for (double factor : c.lambda_grid) {
    const double lambda = factor * base;
    std::vector<double> err(batch.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(c.lambda_trials, c.threads, [&](Index t) {
      const auto& r = batch[t];
      if (r.active.empty()) return;
      try {
        const DetectionResult d = detect(p, a, r.received, lambda);
        err[t] = nmse(r.channel, d.estimate, r.active).value();
      } catch (const DivergenceError&) {
        err[t] = std::numeric_limits<double>::infinity();
      } catch (const NumericalError&) {
        err[t] = std::numeric_limits<double>::infinity();
      }
    });
    double sum = 0.0;
    Index used = 0;
    for (double e : err)
      if (!std::isnan(e)) {
        sum += e;
        ++used;
      }
    const double score = used ? sum / static_cast<double>(used)
                              : std::numeric_limits<double>::infinity();
    if (score < best_score) {
      best_score = score;
      best = lambda;
    }
  }
  return best;
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& task) {
  if (count <= 0) return;
  const unsigned workers =
      static_cast<unsigned>(std::min<Index>(std::max(1u, threads), count));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Pipeline build_pipeline(const ExperimentConfig& config, Index sweep_index) {
  validate(config);
  Pipeline p;
  p.config = config;
  p.sweep_index = sweep_index;
  p.scenario = make_scenario(config.scenario, config.seed);

  PilotBankConfig bc;
  bc.length = config.pilot_length;
  bc.cluster_sizes = p.scenario.cluster_sizes;
  bc.cardinality = config.cardinality;
  bc.pool_factor = config.pool_factor;
  bc.seed = derive_seed(config.seed, {stream::pilots});
  p.bank = build_pilot_bank(bc);

  const Index l = p.bank.length();
  const Index m = p.scenario.antennas;
  const bool aem = uses(config, Algorithm::aem_sbl) || uses(config, Algorithm::aem_admm);
  if (aem) {
    for (Index g = 0; g < p.bank.clusters(); ++g)
      p.projectors.emplace_back(p.bank.cluster_pilots(g));
    p.calibrations =
        calibrate_all(p.bank, p.scenario, config.training_samples,
                      derive_seed(config.seed, {stream::training, u64(sweep_index)}));
    if (config.reduced)
      for (Index g = 0; g < p.bank.clusters(); ++g)
        p.reduced.push_back(reduce_cluster(p.projectors[g], p.calibrations[g]));
    if (uses(config, Algorithm::aem_admm))
      for (Index g = 0; g < p.bank.clusters(); ++g)
        p.cluster_factors.push_back(
            config.reduced ? prepare_admm(p.reduced[g].pilots, p.reduced[g].calibration, config.rho)
                           : prepare_admm(p.projectors[g].pilots(), p.calibrations[g], config.rho));
  }
  p.central_sbl = identity_calibration(l, m, p.scenario.noise_power);
  p.central_admm = identity_calibration(l, m, 1.0);
  if (uses(config, Algorithm::admm))
    p.central_factor = prepare_admm(p.bank.pilots, p.central_admm, config.rho);

  if (config.lambda) {
    p.aem_lambda = p.central_lambda = *config.lambda;
  } else {
    if (uses(config, Algorithm::aem_admm)) p.aem_lambda = search_lambda(p, Algorithm::aem_admm);
    if (uses(config, Algorithm::admm)) p.central_lambda = search_lambda(p, Algorithm::admm);
  }
  return p;
}

DetectionResult run_detector(const Pipeline& pipeline, Algorithm algorithm,
                             const CMatrix& received) {
  require(received.rows() == pipeline.bank.length(), "run_detector: Y has wrong row count");
  return detect(pipeline, algorithm, received, lambda_of(pipeline, algorithm));
}

DetectionResult run_clusters_concurrently(const Pipeline& p, Algorithm a,
                                          const CMatrix& received, unsigned threads) {
  require(is_clustered(a), "run_clusters_concurrently: not a cluster-wise algorithm");
  require(received.rows() == p.bank.length(), "run_clusters_concurrently: Y has wrong row count");
  const double lambda = lambda_of(p, a);
  return timed([&] {
    std::vector<DetectionResult> parts(static_cast<std::size_t>(p.bank.clusters()));
    parallel_for(p.bank.clusters(), threads,
                 [&](Index g) { parts[g] = run_cluster(p, a, g, received, lambda); });
    DetectionResult total;
    total.estimate = CMatrix::Zero(p.bank.devices(), received.cols());
    for (Index g = 0; g < p.bank.clusters(); ++g)
      place(total, parts[g], p.bank.cluster_offsets[g], g == 0);
    score_rows(total);
    return total;
  });
}

ResultsTable run_experiment(const ExperimentConfig& config, const Progress& progress) {
  validate(config);
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  ResultsTable table;
  table.config_echo = config.echo();
  table.sweep_name = config.sweep_name;

  std::vector<double> values = config.sweep_values;
  if (values.empty()) {
    // A run without a sweep is a single point of the L axis.
    values = {static_cast<double>(config.pilot_length)};
    table.sweep_name = "L";
  }
  ExperimentConfig base = config;
  base.sweep_name = table.sweep_name;

  const Index n_alg = static_cast<Index>(config.algorithms.size());
  for (Index k = 0; k < static_cast<Index>(values.size()); ++k) {
    const ExperimentConfig cfg = at_sweep_point(base, values[k]);
    const std::string point = table.sweep_name + "=" + fmt_value(values[k]);
    say(point + ": calibrating");
    const Pipeline p = build_pipeline(cfg, k);
    if (!cfg.lambda && (uses(cfg, Algorithm::aem_admm) || uses(cfg, Algorithm::admm)))
      say(point + ": lambda aem_admm=" + fmt_value(p.aem_lambda) +
          " admm=" + fmt_value(p.central_lambda));

    // Null scores for the per-algorithm threshold come from a disjoint batch.
    const Index n_thr = cfg.threshold_trials > 0 ? cfg.threshold_trials : cfg.trials;
    say(point + ": thresholds over " + std::to_string(n_thr) + " trials");
    std::vector<std::vector<std::vector<double>>> null_scores(
        static_cast<std::size_t>(n_thr), std::vector<std::vector<double>>(n_alg));
    parallel_for(n_thr, cfg.threads, [&](Index t) {
      const ChannelRealization r = sample_realization(
          p.scenario, p.bank.pilots, derive_seed(cfg.seed, {stream::threshold, u64(k), u64(t)}));
      for (Index a = 0; a < n_alg; ++a) {
        try {
          const DetectionResult d = run_detector(p, cfg.algorithms[a], r.received);
          auto& out = null_scores[t][a];
          for (Index i = 0; i < d.row_scores.size(); ++i)
            if (!r.activity[i]) out.push_back(d.row_scores(i));
        } catch (const DivergenceError&) {
        } catch (const NumericalError&) {
        }
      }
    });
    std::vector<double> zeta(n_alg);
    for (Index a = 0; a < n_alg; ++a) {
      std::vector<double> pooled;
      for (const auto& trial : null_scores) pooled.insert(pooled.end(), trial[a].begin(), trial[a].end());
      const std::string name(algorithm_name(cfg.algorithms[a]));
      if (pooled.empty()) {
        zeta[a] = std::numeric_limits<double>::infinity();
        table.warnings.push_back(point + " " + name + ": no null scores, threshold set to +inf");
        continue;
      }
      const Threshold th = calibrate_threshold(std::move(pooled), cfg.target_pfa);
      zeta[a] = th.zeta;
      if (!th.reliable) table.warnings.push_back(point + " " + name + ": " + th.warning);
    }
    null_scores.clear();

    say(point + ": evaluating " + std::to_string(cfg.trials) + " trials");
    std::vector<std::vector<MetricSample>> samples(
        static_cast<std::size_t>(n_alg), std::vector<MetricSample>(cfg.trials));
    parallel_for(cfg.trials, cfg.threads, [&](Index t) {
      const ChannelRealization r = sample_realization(
          p.scenario, p.bank.pilots, derive_seed(cfg.seed, {stream::evaluation, u64(k), u64(t)}));
      for (Index a = 0; a < n_alg; ++a) {
        MetricSample& s = samples[a][t];
        s.algorithm = algorithm_name(cfg.algorithms[a]);
        s.sweep_name = table.sweep_name;
        s.sweep_value = values[k];
        s.trial = t;
        s.zeta = zeta[a];
        s.active = static_cast<Index>(r.active.size());
        try {
          const DetectionResult d = run_detector(p, cfg.algorithms[a], r.received);
          s.runtime = d.seconds;
          s.iterations = d.iterations;
          s.nmse = nmse(r.channel, d.estimate, r.active);
          const DetectionOutcome o = detect_and_pmd(r.activity, d.row_scores, zeta[a]);
          s.pmd = o.pmd;
          s.pfa = o.pfa;
          s.misses = o.misses;
          s.false_alarms = o.false_alarms;
          s.skipped = r.active.empty() ? 1 : 0;
        } catch (const DivergenceError&) {
          s.skipped = 2;
        } catch (const NumericalError&) {
          s.skipped = 2;
        }
      }
    });
    for (Index a = 0; a < n_alg; ++a) {
      Index diverged = 0;
      for (auto& s : samples[a]) {
        diverged += s.skipped == 2;
        table.rows.push_back(std::move(s));
      }
      if (diverged)
        table.warnings.push_back(point + " " + std::string(algorithm_name(cfg.algorithms[a])) +
                                 ": " + std::to_string(diverged) + " trials diverged");
    }
  }
  return table;
}

std::vector<SummaryRow> ResultsTable::summary() const {
  std::vector<SummaryRow> out;
  std::map<std::pair<double, std::string>, std::size_t> slot;
  std::vector<std::vector<double>> runtimes;
  for (const MetricSample& s : rows) {
    const auto key = std::make_pair(s.sweep_value, s.algorithm);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      SummaryRow r;
      r.algorithm = s.algorithm;
      r.sweep_name = s.sweep_name;
      r.sweep_value = s.sweep_value;
      r.zeta = s.zeta;
      out.push_back(std::move(r));
      runtimes.emplace_back();
    }
    SummaryRow& r = out[it->second];
    ++r.trials;
    if (s.skipped) ++r.skipped;
    if (s.skipped == 2) {
      ++r.diverged;
      continue;
    }
    if (s.nmse) r.nmse.add(*s.nmse);
    if (s.pmd) r.pmd.add(*s.pmd);
    if (s.pfa) r.pfa.add(*s.pfa);
    r.runtime.add(s.runtime);
    r.iterations.add(static_cast<double>(s.iterations));
    runtimes[it->second].push_back(s.runtime);
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].runtime_median = runtimes[i].empty() ? 0.0 : median(runtimes[i]);
  return out;
}

// ---------------------------------------------------------------------------

RipStats rip_diagnostic(const CMatrix& pilots, Index support, Index samples, std::uint64_t seed) {
  const Index n = pilots.cols();
  require(support >= 1 && support <= n, "rip_diagnostic: support must lie in [1, N]");
  require(samples >= 1, "rip_diagnostic: samples must be >= 1");
  RipStats out;
  out.support = support;
  out.samples = samples;
  out.min_singular = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  CMatrix sub(pilots.rows(), support);
  for (Index s = 0; s < samples; ++s) {
    for (Index j = 0; j < support; ++j) {
      std::uniform_int_distribution<Index> pick(j, n - 1);
      std::swap(idx[j], idx[pick(rng)]);
      sub.col(j) = pilots.col(idx[j]).normalized();
    }
    const RVector sv = Eigen::JacobiSVD<CMatrix>(sub).singularValues();
    // Fewer rows than columns leaves zero singular values beyond the rank.
    const double lo = support > pilots.rows() ? 0.0 : sv(sv.size() - 1);
    const double hi = sv(0);
    out.min_singular = std::min(out.min_singular, lo);
    out.max_singular = std::max(out.max_singular, hi);
    out.mean_min_singular += lo;
    out.mean_max_singular += hi;
  }
  out.mean_min_singular /= static_cast<double>(samples);
  out.mean_max_singular /= static_cast<double>(samples);
  out.delta_lower = 1.0 - out.min_singular * out.min_singular;
  out.delta_upper = out.max_singular * out.max_singular - 1.0;
  return out;
}

std::vector<CoherencePoint> coherence_sweep(const ExperimentConfig& config) {
  std::vector<CoherencePoint> out;
  for (Index l : config.coherence_lengths)
    for (Index g : config.coherence_clusters)
      for (Index n : config.coherence_devices) {
        if (g > l || g > n) continue;
        CoherencePoint pt;
        pt.length = l;
        pt.clusters = g;
        pt.devices = n;
        pt.seeds = config.coherence_seeds;
        MeanAccumulator acc;
        for (Index s = 0; s < config.coherence_seeds; ++s) {
          PilotBankConfig bc;
          bc.length = l;
          for (Index c = 0; c < g; ++c) bc.cluster_sizes.push_back(n / g + (c < n % g ? 1 : 0));
          bc.cardinality = config.cardinality;
          bc.pool_factor = config.pool_factor;
          bc.seed = derive_seed(config.seed, {stream::pilots, u64(s)});
          acc.add(mutual_coherence(build_pilot_bank(bc).pilots));
        }
        pt.mean = acc.mean();
        pt.standard_error = acc.standard_error();
        out.push_back(pt);
      }
  return out;
}

}  // namespace jadce
