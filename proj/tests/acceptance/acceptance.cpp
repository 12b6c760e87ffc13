// Desk-scale acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "jadce/harness.hpp"
#include "oracles.hpp"

using namespace jadce;

namespace {

int failures = 0;
std::map<int, std::string> lines;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  lines[id] = std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " +
              detail;
  std::fprintf(stderr, "%s\n", lines[id].c_str());
}

template <typename... T>
std::string fmtn(const char* f, T... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

void note(const std::string& msg) { std::fprintf(stderr, "  %s\n", msg.c_str()); }

PilotBank bank_for(Index length, std::vector<Index> sizes, std::uint64_t seed) {
  PilotBankConfig bc;
  bc.length = length;
  bc.cluster_sizes = std::move(sizes);
  bc.seed = seed;
  return build_pilot_bank(bc);
}

CMatrix random_spd(Index n, Rng& rng) {
  const CMatrix a = complex_normal_matrix(rng, n, n);
  return a * a.adjoint() / static_cast<double>(n) + 0.5 * CMatrix::Identity(n, n);
}

// ---------------------------------------------------------------------------

void orthogonality() {
  double cross = 0.0, norm_dev = 0.0;
  int banks = 0;
  for (Index n : {256, 1000})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const PilotBank b = bank_for(64, {n / 4, n / 4, n / 4, n / 4}, seed);
      for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j)
          if (i != j)
            cross = std::max(cross, (b.cluster_pilots(i).adjoint() * b.cluster_pilots(j)).norm());
      norm_dev = std::max(norm_dev, (b.pilots.colwise().norm().array() - 1.0).abs().maxCoeff());
      ++banks;
    }
  report(1, cross <= 1e-10 && norm_dev <= 1e-12,
         fmtn("%d banks (L=64, G=4, N in {256,1000}): max |S_i^H S_j|_F = %.2e, "
              "max ||s||-1| = %.2e",
              banks, cross, norm_dev));
}

void toy_example() {
  const BasisMatrix b = partition_basis(hadamard_basis(8), {3, 3, 2});
  CVector z1(3), z2(3);
  z1 << 1, 0, 1;
  z2 << 0, 1, 1;
  const CVector s1 = b.block(1) * z1;
  const CVector s2 = b.block(1) * z2;
  // Printed vectors in units of (1+j). The second entry of the first one is
  // printed as -2+2j, which no real combination of B_2 can produce; -2-2j is
  // what the printed basis gives.
  const int e1[] = {2, -2, 0, 0, 0, 0, -2, 2};
  const int e2[] = {2, 0, 2, 0, -2, 0, -2, 0};
  bool exact = true;
  for (Index i = 0; i < 8; ++i) {
    exact &= s1(i) == Complex(e1[i], e1[i]);
    exact &= s2(i) == Complex(e2[i], e2[i]);
  }
  const bool printed_entry = s1(1) == Complex(-2, 2);
  report(2, exact,
         std::string("B_2 z_1 and B_2 z_2 match entry for entry") +
             (printed_entry ? "" : " (erratum: entry 2 of s_1 is -2-2j, printed as -2+2j)"));
}

void projected_noise() {
  ScenarioConfig sc;
  sc.devices = 256;
  sc.clusters = 4;
  sc.antennas = 16;
  sc.normalize_noise = true;
  const NetworkScenario scen = make_scenario(sc, 11);
  const PilotBank bank = bank_for(32, scen.cluster_sizes, 11);
  const Index tau = 2000;
  const auto cal = calibrate_all(bank, scen, tau, 12);
  const double sigma = std::sqrt(scen.noise_power);
  const double psi_bound = 4.0 * sigma * std::sqrt(32.0 * 16.0 / static_cast<double>(tau));
  double worst_phi = 0.0, worst_psi = 0.0;
  for (Index g = 0; g < bank.clusters(); ++g) {
    const CMatrix target = scen.noise_power * ClusterProjector(bank.cluster_pilots(g)).projector();
    worst_phi = std::max(worst_phi, (cal[g].mismatch_cov - target).norm() / target.norm());
    worst_psi = std::max(worst_psi, cal[g].mismatch_mean.norm());
  }
  report(3, worst_phi < 0.15 && worst_psi < psi_bound,
         fmtn("tau=2000, L=32, kappa=8, N=256, M=16: max rel |Phi-s2P|_F = %.4f (< 0.15), "
              "max |Psi|_F = %.4f (< %.4f)",
              worst_phi, worst_psi, psi_bound));
}

void convex_equivalence() {
  Rng rng(404);
  double worst = 0.0, worst_time = 0.0;
  const int instances = 20;
  for (int rep = 0; rep < instances; ++rep) {
    const CMatrix s = complex_normal_matrix(rng, 8, 4) / std::sqrt(8.0);
    const AemCalibration cal =
        finalize_calibration(complex_normal_matrix(rng, 8, 2, 0.01), random_spd(8, rng), 100, 1);
    const CMatrix yhat = complex_normal_matrix(rng, 8, 2);
    AdmmOptions opt;
    opt.lambda = 0.1;
    opt.tolerance = 1e-10;
    opt.max_iter = 100000;
    const auto t0 = std::chrono::steady_clock::now();
    const DetectionResult r = aem_admm(yhat, s, cal, opt);
    worst_time = std::max(
        worst_time, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const CMatrix a = cal.whitening * s;
    const CMatrix b = cal.whitening * (yhat + cal.mismatch_mean);
    const CMatrix ref = oracle::group_lasso_fista(a, b, 0.1);
    worst = std::max(worst, (r.estimate - ref).norm() / ref.norm());
  }
  report(4, worst <= 1e-4 && worst_time < 1.0,
         fmtn("%d instances (L=8, N_g=4, M=2, lambda=0.1) vs FISTA minimizer: max rel err %.2e, "
              "max runtime %.4f s",
              instances, worst, worst_time));
}

void evidence_monotone() {
  Rng rng(505);
  double worst_drop = 0.0, min_eig = std::numeric_limits<double>::infinity();
  int steps = 0;
  const int instances = 100;
  for (int inst = 0; inst < instances; ++inst) {
    const CMatrix s = complex_normal_matrix(rng, 16, 32) / 4.0;
    CMatrix x = CMatrix::Zero(32, 4);
    for (int k = 0; k < 3; ++k)
      x.row(static_cast<Index>(rng() % 32)) = complex_normal_matrix(rng, 1, 4, 4.0);
    // alternate between the plain and a learned (non-white, biased) likelihood
    const AemCalibration cal =
        inst % 2 ? identity_calibration(16, 4, 0.01)
                 : finalize_calibration(complex_normal_matrix(rng, 16, 4, 0.001),
                                        0.02 * random_spd(16, rng), 100, 1);
    const CMatrix y = s * x + 0.1 * complex_normal_matrix(rng, 16, 4);
    SblTrace trace;
    trace.record_sigma_spectrum = true;
    SblOptions opt;
    opt.trace = &trace;
    aem_sbl(y, s, cal, opt);
    double prev = -std::numeric_limits<double>::infinity();
    for (const RVector& g : trace.gamma) {
      const double ev = oracle::log_evidence(y + cal.mismatch_mean, s, cal.regularized_cov, g);
      worst_drop = std::max(worst_drop, prev - ev);
      prev = ev;
      ++steps;
    }
    for (double e : trace.min_eigenvalue) min_eig = std::min(min_eig, e);
  }
  report(5, worst_drop <= 1e-8 && min_eig >= 0.0,
         fmtn("%d instances (L=16, N_g=32, M=4), %d EM steps: largest evidence drop %.2e "
              "(<= 1e-8), min eig(Sigma) %.3e",
              instances, steps, std::max(worst_drop, 0.0), min_eig));
}

std::vector<Index> support_of(const RVector& scores) {
  std::vector<Index> out;
  const double top = scores.maxCoeff();
  if (top <= 0.0) return out;
  for (Index i = 0; i < scores.size(); ++i)
    if (scores(i) >= 1e-3 * top) out.push_back(i);
  return out;
}

void exact_recovery() {
  const Index l = 16, n_g = 32, m = 4, trials = 500;
  const PilotBank bank = bank_for(l, {n_g, n_g}, 66);
  std::vector<ClusterProjector> proj;
  std::vector<ReducedCluster> red;
  std::vector<AdmmFactor> factors;
  std::vector<double> rho;
  // sigma^2 = 0: the learned mismatch vanishes and only the floor
  // regularization of Phi is left.
  const AemCalibration zero =
      finalize_calibration(CMatrix::Zero(l, m), CMatrix::Zero(l, l), 100, 0);
  for (Index g = 0; g < 2; ++g) {
    proj.emplace_back(bank.cluster_pilots(g));
    red.push_back(reduce_cluster(proj[g], zero));
    const CMatrix a = red[g].calibration.whitening * red[g].pilots;
    rho.push_back((a.adjoint() * a).trace().real() / static_cast<double>(n_g));
    factors.push_back(prepare_admm(red[g].pilots, red[g].calibration, rho[g]));
  }

  Rng rng(67);
  int ok_somp = 0, ok_admm = 0, ok_sbl = 0, oracle_ok = 0;
  for (Index t = 0; t < trials; ++t) {
    const Index dev = static_cast<Index>(rng() % static_cast<std::uint64_t>(2 * n_g));
    CMatrix x = CMatrix::Zero(2 * n_g, m);
    x.row(dev) = complex_normal_matrix(rng, 1, m);
    const CMatrix y = bank.pilots * x;
    oracle_ok += oracle::best_single_column(y, bank.pilots) == dev;

    RVector somp(2 * n_g), admm(2 * n_g), sbl(2 * n_g);
    for (Index g = 0; g < 2; ++g) {
      const Index off = bank.cluster_offsets[g];
      SompOptions so;
      so.max_support = bank.basis.kappa[g];
      somp.segment(off, n_g) = cb_somp(y, bank.cluster_pilots(g), so).row_scores;

      const CMatrix input = red[g].reduce_map * decorrelate(proj[g].pilots(), y);
      sbl.segment(off, n_g) = aem_sbl(input, red[g].pilots, red[g].calibration).row_scores;

      const CMatrix a = red[g].calibration.whitening * red[g].pilots;
      const CMatrix b = red[g].calibration.whitening * input;
      const double lambda_max = (a.adjoint() * b).rowwise().norm().maxCoeff();
      AdmmOptions ao;
      ao.rho = rho[g];
      ao.lambda = 0.1 * lambda_max;
      ao.max_iter = 20000;
      admm.segment(off, n_g) =
          lambda_max > 0.0 ? aem_admm(input, factors[g], red[g].calibration, ao).row_scores
                           : RVector::Zero(n_g);
    }
    const std::vector<Index> truth = {dev};
    ok_somp += support_of(somp) == truth;
    ok_admm += support_of(admm) == truth;
    ok_sbl += support_of(sbl) == truth;
  }
  const double need = 0.99 * trials;
  report(6, ok_somp >= need && ok_admm >= need && ok_sbl >= need && oracle_ok == trials,
         fmtn("sigma^2=0, 1 active, L=16, kappa=8, N_g=32, %d trials: exact support "
              "CB-SOMP %d, AEM-ADMM %d, AEM-SBL %d, single-column LS oracle %d",
              static_cast<int>(trials), ok_somp, ok_admm, ok_sbl, oracle_ok));
}

// ---------------------------------------------------------------------------

ExperimentConfig desk_config() {
  return parse_config(R"(
N = 256
G = 4
M = 16
epsilon = 0.01
snr_db = 10
sweep = L: 16,32,64
algorithms = aem_sbl
trials = 200
threshold_trials = 50
seed = 2024
)");
}

const SummaryRow* find(const std::vector<SummaryRow>& rows, const std::string& alg, double v) {
  for (const auto& r : rows)
    if (r.algorithm == alg && r.sweep_value == v) return &r;
  return nullptr;
}

std::string masked_csv(const std::filesystem::path& file) {
  // runtime_s (8th column) is wall time and cannot repeat between runs
  std::ifstream in(file);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      std::vector<std::string> f;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) f.push_back(cell);
      if (line.back() == ',') f.emplace_back();
      if (f.size() == 10 && f[7] != "runtime_s") f[7] = "*";
      line.clear();
      for (std::size_t i = 0; i < f.size(); ++i) line += (i ? "," : "") + f[i];
    }
    out << line << '\n';
  }
  return out.str();
}

std::string read_all(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void trend_and_determinism(const std::filesystem::path& root) {
  ExperimentConfig c = desk_config();
  const auto t0 = std::chrono::steady_clock::now();
  const ResultsTable table = run_experiment(c, [](const std::string& m) { note(m); });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit_outputs(table, root / "trend_t1");
  const auto s = table.summary();

  std::string detail;
  bool nmse_dec = true, pmd_dec = true;
  double prev_nmse = std::numeric_limits<double>::infinity();
  double prev_pmd = std::numeric_limits<double>::infinity();
  for (double l : {16.0, 32.0, 64.0}) {
    const SummaryRow* r = find(s, "aem_sbl", l);
    if (!r) {
      report(7, false, "missing summary rows");
      return;
    }
    const double nm = r->nmse.mean(), pm = r->pmd.mean();
    nmse_dec &= nm < prev_nmse;
    pmd_dec &= pm < prev_pmd;
    prev_nmse = nm;
    prev_pmd = pm;
    detail += fmtn("L=%d: NMSE %.2f dB, PMD %.4f; ", static_cast<int>(l), 10 * std::log10(nm), pm);
  }

  // centralized SBL costs several times more per trial, so the paired comparison
  // runs at L=64 only; both algorithms see the same 200 realizations
  ExperimentConfig cp = c;
  cp.sweep_values = {64};
  cp.algorithms = {Algorithm::aem_sbl, Algorithm::sbl};
  const ResultsTable paired = run_experiment(cp, [](const std::string& m) { note(m); });
  emit_outputs(paired, root / "trend_paired_L64");
  const auto ps = paired.summary();
  const SummaryRow* aem = find(ps, "aem_sbl", 64.0);
  const SummaryRow* cen = find(ps, "sbl", 64.0);
  const double gap = 10 * std::log10(aem->nmse.mean()) - 10 * std::log10(cen->nmse.mean());
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail += fmtn("AEM-SBL - SBL at L=64 (paired): %+.2f dB; sweep %.0f s, total %.0f s", gap,
                 secs, total);
  if (!nmse_dec) detail += " [NMSE not strictly decreasing]";
  if (!pmd_dec) detail += " [PMD not strictly decreasing]";
  report(7, nmse_dec && pmd_dec && gap <= 3.0, detail);

  const std::string ref = masked_csv(root / "trend_t1" / "results.csv");
  std::string det = "results.csv with runtime_s masked: ";
  bool same = true;
  for (unsigned threads : {4u, 8u}) {
    ExperimentConfig ct = c;
    ct.threads = threads;
    const ResultsTable tt = run_experiment(ct);
    const auto dir = root / ("trend_t" + std::to_string(threads));
    emit_outputs(tt, dir);
    const bool eq = masked_csv(dir / "results.csv") == ref;
    same &= eq;
    det += fmtn("%u threads %s; ", threads, eq ? "identical" : "DIFFERENT");
  }
  det += fmtn("%zu rows", table.rows.size());
  report(10, same, det);
}

void pfa_calibration() {
  ExperimentConfig c = desk_config();
  c.sweep_values = {64};
  c.algorithms = {Algorithm::aem_sbl};
  c.trials = 420;
  c.threshold_trials = 420;
  c.seed = 77;
  const ResultsTable t = run_experiment(c);
  Index inactive = 0, alarms = 0;
  for (const MetricSample& s : t.rows) {
    if (s.skipped == 2) continue;
    inactive += c.scenario.devices - s.active;
    alarms += s.false_alarms;
  }
  const double pfa = static_cast<double>(alarms) / static_cast<double>(inactive);
  report(8, inactive >= 100000 && pfa >= 3e-4 && pfa <= 3e-3,
         fmtn("AEM-SBL, L=64, zeta=%.4g from a disjoint batch: %lld false alarms over %lld "
              "inactive scores, PFA = %.2e",
              t.rows.front().zeta, static_cast<long long>(alarms),
              static_cast<long long>(inactive), pfa));
}

void runtime_scaling() {
  const char* base = R"(
N = 512
L = 64
M = 16
trials = 30
threshold_trials = 5
seed = 99
)";
  ExperimentConfig c = parse_config(std::string(base) + "sweep = G: 1,2,4,8\nalgorithms = aem_sbl\n");
  const ResultsTable t = run_experiment(c, [](const std::string& m) { note(m); });
  const auto s = t.summary();
  std::string detail = "median detector time:";
  bool mono = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double g : {1.0, 2.0, 4.0, 8.0}) {
    const double med = find(s, "aem_sbl", g)->runtime_median;
    mono &= med < prev;
    prev = med;
    detail += fmtn(" G=%d %.2f ms;", static_cast<int>(g), 1e3 * med);
  }
  // centralized SBL does not depend on G; compare on a shared set of G=4 instances
  ExperimentConfig cp = parse_config(std::string(base) + "G = 4\nalgorithms = aem_sbl,sbl\n");
  const auto ps = run_experiment(cp, [](const std::string& m) { note(m); }).summary();
  const double aem4 = find(ps, "aem_sbl", 64.0)->runtime_median;
  const double cen4 = find(ps, "sbl", 64.0)->runtime_median;
  detail += fmtn(" paired G=4: AEM-SBL %.2f ms, centralized SBL %.2f ms (speed-up %.1fx)",
                 1e3 * aem4, 1e3 * cen4, cen4 / aem4);
  report(9, mono && cen4 >= 2.0 * aem4, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path root = argc > 1 ? argv[1] : "acceptance_out";
  std::filesystem::create_directories(root);
  const std::vector<std::pair<int, std::function<void()>>> suite = {
      {1, orthogonality},
      {2, toy_example},
      {3, projected_noise},
      {4, convex_equivalence},
      {5, evidence_monotone},
      {6, exact_recovery},
      {7, [&] { trend_and_determinism(root); }},
      {8, pfa_calibration},
      {9, runtime_scaling},
  };
  for (const auto& [id, run] : suite) {
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria failed\n", failures, lines.size());
  return failures == 0 ? 0 : 1;
}
