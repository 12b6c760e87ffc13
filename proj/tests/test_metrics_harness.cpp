#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "jadce/harness.hpp"
#include "jadce/io.hpp"

using namespace jadce;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("jadce_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::string> lines_of(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> data_lines(const std::filesystem::path& file) {
  auto all = lines_of(file);
  all.erase(std::remove_if(all.begin(), all.end(), [](const std::string& l) { return l.rfind("#", 0) == 0; }),
            all.end());
  return all;
}

ExperimentConfig small_config() {
  ExperimentConfig c = parse_config(R"(
N = 32
G = 2
L = 16
M = 4
epsilon = 0.1
tau = 100
trials = 5
threshold_trials = 20
lambda = 0.5
)");
  return c;
}

}  // namespace

TEST_CASE("nmse examples") {
  CMatrix x(2, 2);
  x << Complex(1, 0), Complex(0, 1), Complex(2, 0), Complex(0, 0);
  const std::vector<Index> both = {0, 1};
  CHECK(*nmse(x, x, both) == doctest::Approx(0.0));
  CHECK(*nmse(x, CMatrix::Zero(2, 2), both) == doctest::Approx(1.0));

  CMatrix t(1, 2), e(1, 2);
  t << 1.0, 0.0;
  e << 0.0, 1.0;
  const std::vector<Index> one = {0};
  CHECK(*nmse(t, e, one) == doctest::Approx(2.0));
  CHECK_FALSE(nmse(t, e, std::vector<Index>{}).has_value());
}

TEST_CASE("threshold examples") {
  CHECK(calibrate_threshold(std::vector<double>(5000, 0.7), 1e-3).zeta == 0.7);

  std::vector<double> ramp(1000);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const Threshold t = calibrate_threshold(ramp, 1e-3);
  CHECK(t.zeta == 1000.0);
  CHECK(t.reliable);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> uni(100000);
  for (double& v : uni) v = u(rng);
  const double z = calibrate_threshold(uni, 1e-3).zeta;
  CHECK(z >= 0.9985);
  CHECK(z <= 0.9995);

  const Threshold few = calibrate_threshold({1.0, 2.0, 3.0}, 1e-3);
  CHECK_FALSE(few.reliable);
  CHECK_FALSE(few.warning.empty());
  CHECK_THROWS_AS(calibrate_threshold({}, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_threshold({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("detection counts") {
  const std::vector<std::uint8_t> truth = {1, 1, 1, 1, 0, 0, 0, 0};
  RVector scores(8);
  scores << 5, 4, 0.1, 0.2, 0.3, 0.0, 0.1, 0.2;
  const DetectionOutcome o = detect_and_pmd(truth, scores, 1.0);
  CHECK(*o.pmd == doctest::Approx(0.5));
  CHECK(*o.pfa == doctest::Approx(0.0));
  CHECK(o.misses == 2);

  RVector perfect(8);
  perfect << 1, 1, 1, 1, 0, 0, 0, 0;
  CHECK(*detect_and_pmd(truth, perfect, 0.5).pmd == 0.0);
  CHECK(*detect_and_pmd(truth, RVector::Zero(8), 0.5).pmd == 1.0);
  CHECK_FALSE(detect_and_pmd(std::vector<std::uint8_t>(8, 0), perfect, 0.5).pmd.has_value());
}

TEST_CASE("ROC monotonicity and transform invariance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::bernoulli_distribution b(0.3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::uint8_t> truth(50);
    RVector scores(50);
    for (Index i = 0; i < 50; ++i) {
      truth[i] = b(rng);
      scores(i) = u(rng) + truth[i];
    }
    double last_pmd = 2.0, last_pfa = -1.0;
    for (double zeta = 3.0; zeta >= 0.0; zeta -= 0.05) {
      const auto o = detect_and_pmd(truth, scores, zeta);
      if (!o.pmd || !o.pfa) continue;
      CHECK(*o.pmd <= last_pmd);
      CHECK(*o.pfa >= last_pfa);
      last_pmd = *o.pmd;
      last_pfa = *o.pfa;

      const RVector mapped = scores.array().exp() * 3.0 + 1.0;
      const auto m = detect_and_pmd(truth, mapped, std::exp(zeta) * 3.0 + 1.0);
      CHECK(m.pmd == o.pmd);
      CHECK(m.pfa == o.pfa);
    }
  }
}

TEST_CASE("timing overhead and determinism") {
  const CMatrix s = CMatrix::Identity(8, 8);
  const AemCalibration cal = identity_calibration(8, 2, 1.0);
  const CMatrix y = CMatrix::Zero(8, 2);
  auto run = [&] { return timed([&] { return aem_sbl(y, s, cal); }); };
  const DetectionResult a = run();
  const DetectionResult b = run();
  CHECK(a.seconds < 0.01);
  CHECK(a.seconds >= 0.0);
  CHECK(a.estimate == b.estimate);
}

TEST_CASE("accumulator merge is order independent") {
  MeanAccumulator all, left, right;
  for (int i = 0; i < 10; ++i) {
    all.add(i * 0.5);
    (i % 2 ? left : right).add(i * 0.5);
  }
  MeanAccumulator merged = right;
  merged.merge(left);
  CHECK(merged.count == all.count);
  CHECK(merged.mean() == doctest::Approx(all.mean()));
  CHECK(merged.standard_error() == doctest::Approx(all.standard_error()));
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

// ---------------------------------------------------------------------------

TEST_CASE("pilot bank and calibration files round-trip") {
  const auto dir = scratch("io");
  PilotBankConfig bc;
  bc.length = 16;
  bc.cluster_sizes = {11, 11};
  bc.seed = 5;
  const PilotBank bank = build_pilot_bank(bc);
  write_pilot_bank(bank, dir / "pilots.txt");
  const PilotFile pf = read_pilot_bank(dir / "pilots.txt");
  CHECK(pf.pilots == bank.pilots);
  CHECK(pf.kappa == bank.basis.kappa);
  CHECK(pf.cluster_sizes == bank.cluster_sizes);
  CHECK(pf.cardinality == bank.cardinality);
  CHECK(pf.seed == bank.seed);

  ScenarioConfig sc;
  sc.devices = 22;
  sc.clusters = 2;
  sc.antennas = 3;
  sc.normalize_noise = true;
  const NetworkScenario scen = make_scenario(sc, 1);
  const AemCalibration cal = calibrate(bank, 1, scen, 40, 9);
  save_calibration(cal, dir / "cal.bin");
  const AemCalibration back = load_calibration(dir / "cal.bin");
  CHECK(back.mismatch_mean == cal.mismatch_mean);
  CHECK(back.mismatch_cov == cal.mismatch_cov);
  CHECK(back.regularized_cov == cal.regularized_cov);
  CHECK(back.precision == cal.precision);
  CHECK(back.whitening == cal.whitening);
  CHECK(back.regularization == cal.regularization);
  CHECK(back.training_samples == 40);
  CHECK(back.seed == cal.seed);

  std::ofstream(dir / "junk.bin") << "not a calibration";
  CHECK_THROWS(load_calibration(dir / "junk.bin"));
  CHECK_THROWS(read_pilot_bank(dir / "missing.txt"));
}

TEST_CASE("trace files have the documented columns") {
  const auto dir = scratch("trace");
  AdmmTrace at;
  SblTrace st;
  st.record_sigma_spectrum = true;
  const CMatrix s = CMatrix::Identity(4, 4);
  CMatrix y = CMatrix::Zero(4, 2);
  y(1, 0) = 3.0;
  AdmmOptions ao;
  ao.lambda = 0.1;
  ao.trace = &at;
  aem_admm(y, s, identity_calibration(4, 2, 1.0), ao);
  SblOptions so;
  so.trace = &st;
  aem_sbl(y, s, identity_calibration(4, 2, 1.0), so);
  std::vector<double> ev;
  for (const auto& g : st.gamma) ev.push_back(sbl_log_evidence(y, s, identity_calibration(4, 2, 1.0), g));
  write_admm_trace(at, dir / "admm.csv");
  write_sbl_trace(st, ev, dir / "sbl.csv");
  const auto a = lines_of(dir / "admm.csv");
  const auto b = lines_of(dir / "sbl.csv");
  CHECK(a.front() == "iteration,primal_residual,dual_residual,z_norm");
  CHECK(a.size() == at.primal_residual.size() + 1);
  CHECK(b.front() == "iteration,log_evidence,min_gamma,max_gamma,sigma_min_eig,sigma_max_eig");
  CHECK(b.size() == st.gamma.size() + 1);
}

// ---------------------------------------------------------------------------

TEST_CASE("Table II defaults") {
  const ExperimentConfig c;
  CHECK(c.scenario.devices == 1000);
  CHECK(c.scenario.clusters == 4);
  CHECK(c.pilot_length == 64);
  CHECK(c.scenario.antennas == 32);
  CHECK(c.scenario.activity == 0.01);
  CHECK(c.scenario.snr_db == 10.0);
  CHECK(c.scenario.noise_power == 2e-13);
  CHECK(c.tolerance == 1e-4);
  CHECK(c.target_pfa == 1e-3);
  CHECK(c.scenario.cell_radius == 250.0);
  CHECK(c.trials >= 1);
}

TEST_CASE("config values are echoed verbatim") {
  const std::string text =
      "N = 1000\nG = 4\nL = 64\nM = 32\nepsilon = 0.01\nsnr_db = 10\n"
      "noise_power = 2e-13\ndelta = 1e-4\ntarget_pfa = 1e-3\ncell_radius = 250\n"
      "sweep = L: 16,32,64  # trailing comment\n";
  const ExperimentConfig c = parse_config(text);
  CHECK(c.scenario.noise_power == 2e-13);
  CHECK(c.sweep_values == std::vector<double>{16, 32, 64});
  const auto echo = c.echo();
  auto value = [&](const std::string& key) {
    for (const auto& [k, v] : echo)
      if (k == key) return v;
    return std::string("<missing>");
  };
  CHECK(value("noise_power") == "2e-13");
  CHECK(value("delta") == "1e-4");
  CHECK(value("target_pfa") == "1e-3");
  CHECK(value("epsilon") == "0.01");
  CHECK(value("cell_radius") == "250");
  CHECK(value("sweep") == "L: 16,32,64");
  CHECK(value("tau") == "2000");
}

TEST_CASE("config errors are reported per field") {
  try {
    parse_config("N = ten\nL = 48\nbogus = 1\ntrials = 0\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const auto& errs = e.errors();
    REQUIRE(errs.size() == 2);  // parse stage stops before cross-field checks
    CHECK(errs[0].rfind("N:", 0) == 0);
    CHECK(errs[1].rfind("bogus:", 0) == 0);
  }
  try {
    parse_config("L = 48\ntrials = 0\ntarget_pfa = 2\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors().size() == 3);
  }
  CHECK_THROWS_AS(parse_config("sweep = K: 1,2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("sweep = L: 16,24\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("algorithms = aem_sbl,lasso\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("N = 5\nN = 6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just text\n"), ConfigError);
}

TEST_CASE("reduced coordinates match the full-length formulation") {
  ExperimentConfig c = small_config();
  c.algorithms = {Algorithm::aem_sbl, Algorithm::aem_admm};
  const Pipeline reduced = build_pipeline(c, 0);
  c.reduced = false;
  const Pipeline full = build_pipeline(c, 0);
  for (Index t = 0; t < 4; ++t) {
    const auto r = sample_realization(reduced.scenario, reduced.bank.pilots, 100 + t);
    for (Algorithm a : c.algorithms) {
      const DetectionResult x = run_detector(reduced, a, r.received);
      const DetectionResult y = run_detector(full, a, r.received);
      CHECK((x.estimate - y.estimate).norm() <= 1e-6 * std::max(1.0, y.estimate.norm()));
    }
  }
}

TEST_CASE("concurrent cluster execution equals sequential") {
  ExperimentConfig c = small_config();
  c.algorithms = {Algorithm::aem_sbl, Algorithm::aem_admm, Algorithm::cb_somp};
  const Pipeline p = build_pipeline(c, 0);
  for (Index t = 0; t < 3; ++t) {
    const auto r = sample_realization(p.scenario, p.bank.pilots, 7 + t);
    for (Algorithm a : c.algorithms) {
      const DetectionResult seq = run_detector(p, a, r.received);
      const DetectionResult par = run_clusters_concurrently(p, a, r.received, 2);
      CHECK(seq.estimate == par.estimate);
      CHECK(seq.row_scores == par.row_scores);
      CHECK(seq.iterations == par.iterations);
    }
  }
}

TEST_CASE("experiment row counts, summaries and outputs") {
  ExperimentConfig c = small_config();
  c.algorithms = {Algorithm::cb_somp, Algorithm::aem_sbl};
  apply_setting(c, "sweep", "L: 8,16,32");
  const ResultsTable t = run_experiment(c);
  REQUIRE(t.rows.size() == 30);
  const auto summary = t.summary();
  REQUIRE(summary.size() == 6);

  for (const SummaryRow& r : summary) {
    CHECK(r.trials == 5);
    double sum = 0.0;
    int count = 0;
    for (const MetricSample& s : t.rows)
      if (s.algorithm == r.algorithm && s.sweep_value == r.sweep_value && s.nmse) {
        sum += *s.nmse;
        ++count;
      }
    CHECK(static_cast<int>(r.nmse.count) == count);
    if (count) CHECK(r.nmse.mean() == doctest::Approx(sum / count));
  }

  // paired trials: every algorithm saw the same realization
  for (const MetricSample& s : t.rows)
    for (const MetricSample& o : t.rows)
      if (s.sweep_value == o.sweep_value && s.trial == o.trial) CHECK(s.active == o.active);

  const auto dir = scratch("outputs");
  const auto files = emit_outputs(t, dir);
  CHECK(files.size() == 5);
  const auto rows = data_lines(dir / "results.csv");
  CHECK(rows.front() == "algorithm,sweep_name,sweep_value,trial,nmse,pmd,pfa,runtime_s,iterations,skipped");
  CHECK(rows.size() == 31);
  CHECK(data_lines(dir / "summary.csv").size() == 7);
  const auto head = lines_of(dir / "results.csv");
  CHECK(std::find(head.begin(), head.end(), "# sweep = L: 8,16,32") != head.end());
  for (const char* f : {"nmse.svg", "pmd.svg", "runtime.svg"}) CHECK(std::filesystem::exists(dir / f));
}

TEST_CASE("empty table gives header-only CSVs and no plots") {
  const auto dir = scratch("empty");
  const auto files = emit_outputs(ResultsTable{}, dir);
  CHECK(files.size() == 2);
  CHECK(data_lines(dir / "results.csv").size() == 1);
  CHECK(data_lines(dir / "summary.csv").size() == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "nmse.svg"));

  const auto blocker = scratch("blocked") / "file";
  std::ofstream(blocker) << "x";
  CHECK_THROWS(emit_outputs(ResultsTable{}, blocker / "sub"));
}

TEST_CASE("results do not depend on the thread count") {
  ExperimentConfig c = small_config();
  c.algorithms = {Algorithm::aem_sbl, Algorithm::admm, Algorithm::somp};
  c.lambda.reset();
  c.lambda_trials = 4;
  const ResultsTable a = run_experiment(c);
  c.threads = 3;
  const ResultsTable b = run_experiment(c);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].algorithm == b.rows[i].algorithm);
    CHECK(a.rows[i].trial == b.rows[i].trial);
    CHECK(a.rows[i].nmse == b.rows[i].nmse);
    CHECK(a.rows[i].pmd == b.rows[i].pmd);
    CHECK(a.rows[i].pfa == b.rows[i].pfa);
    CHECK(a.rows[i].zeta == b.rows[i].zeta);
    CHECK(a.rows[i].iterations == b.rows[i].iterations);
  }
}

TEST_CASE("RIP diagnostic") {
  const CMatrix eye = CMatrix::Identity(8, 8);
  const RipStats one = rip_diagnostic(eye, 1, 50, 1);
  CHECK(one.min_singular == doctest::Approx(1.0));
  CHECK(one.max_singular == doctest::Approx(1.0));

  PilotBankConfig bc;
  bc.length = 32;
  bc.cluster_sizes = {24, 24, 24, 24};
  bc.seed = 2;
  const PilotBank bank = build_pilot_bank(bc);
  const CMatrix s0 = bank.cluster_pilots(0);
  const RVector sv = Eigen::JacobiSVD<CMatrix>(s0.leftCols(6)).singularValues();
  const RipStats whole = rip_diagnostic(s0.leftCols(6), 6, 1, 4);
  CHECK(whole.max_singular == doctest::Approx(sv(0)));
  CHECK(whole.min_singular == doctest::Approx(sv(5)));

  const RipStats r = rip_diagnostic(s0, 4, 10000, 3);
  CHECK(r.min_singular > 0.0);
  CHECK(r.max_singular < 2.0);
  CHECK(r.mean_min_singular >= r.min_singular);
  CHECK(r.mean_max_singular <= r.max_singular);
  CHECK_THROWS_AS(rip_diagnostic(s0, 25, 10, 1), std::invalid_argument);
}

TEST_CASE("coherence sweep covers valid grid points") {
  ExperimentConfig c;
  c.coherence_lengths = {16, 32};
  c.coherence_clusters = {1, 2};
  c.coherence_devices = {40, 80};
  c.coherence_seeds = 2;
  const auto pts = coherence_sweep(c);
  CHECK(pts.size() == 8);
  for (const auto& p : pts) {
    CHECK(p.mean > 0.0);
    CHECK(p.mean <= 1.0 + 1e-12);
  }
}
