#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "jadce/harness.hpp"

using namespace jadce;

namespace {

// One line on stderr that scripts can match: "error: <kind>: <message>".
int fail(const std::string& kind, const std::string& message, int code) {
  std::string flat = message;
  for (char& c : flat)
    if (c == '\n') c = ' ';
  std::cerr << "error: " << kind << ": " << flat << '\n';
  return code;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Overrides {
  std::optional<std::string> out;
  std::optional<long long> trials;
  std::optional<unsigned long long> seed;
  std::optional<unsigned> threads;
};

ExperimentConfig load(const std::string& file, const Overrides& o) {
  ExperimentConfig c = load_config(file);
  if (o.out) apply_setting(c, "out", *o.out);
  if (o.trials) apply_setting(c, "trials", std::to_string(*o.trials));
  if (o.seed) apply_setting(c, "seed", std::to_string(*o.seed));
  if (o.threads) apply_setting(c, "threads", std::to_string(*o.threads));
  validate(c);
  return c;
}

int cmd_run(const std::string& file, const Overrides& o) {
  const ExperimentConfig c = load(file, o);
  const ResultsTable t = run_experiment(c, [](const std::string& msg) {
    std::cerr << "[jadce] " << msg << '\n';
  });
  for (const auto& w : t.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& path : emit_outputs(t, c.output_dir)) std::cout << path.string() << '\n';
  return 0;
}

int cmd_coherence(const std::string& file, const Overrides& o) {
  const ExperimentConfig c = load(file, o);
  const auto points = coherence_sweep(c);
  std::filesystem::create_directories(c.output_dir);
  const auto path = std::filesystem::path(c.output_dir) / "coherence.csv";
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("cannot write '" + path.string() + "'");
  const char* header = "L,G,N,seeds,coherence_mean,coherence_se\n";
  csv << header;
  std::cout << header;
  for (const auto& p : points) {
    const std::string row = std::to_string(p.length) + ',' + std::to_string(p.clusters) + ',' +
                            std::to_string(p.devices) + ',' + std::to_string(p.seeds) + ',' +
                            num(p.mean) + ',' + num(p.standard_error) + '\n';
    csv << row;
    std::cout << row;
  }
  return 0;
}

int cmd_rip(const std::string& file, const Overrides& o) {
  const ExperimentConfig c = load(file, o);
  const NetworkScenario sc = make_scenario(c.scenario, c.seed);
  PilotBankConfig bc;
  bc.length = c.pilot_length;
  bc.cluster_sizes = sc.cluster_sizes;
  bc.cardinality = c.cardinality;
  bc.pool_factor = c.pool_factor;
  bc.seed = derive_seed(c.seed, {stream::pilots});
  const PilotBank bank = build_pilot_bank(bc);
  std::cout << "cluster,kappa,N_g,K,samples,min_singular,max_singular,mean_min_singular,"
               "mean_max_singular,delta_lower,delta_upper\n";
  for (Index g = 0; g < bank.clusters(); ++g) {
    const RipStats r = rip_diagnostic(bank.cluster_pilots(g), c.rip_support, c.rip_samples,
                                      derive_seed(c.seed, {7, static_cast<std::uint64_t>(g)}));
    std::cout << g << ',' << bank.basis.kappa[g] << ',' << bank.cluster_sizes[g] << ','
              << r.support << ',' << r.samples << ',' << num(r.min_singular) << ','
              << num(r.max_singular) << ',' << num(r.mean_min_singular) << ','
              << num(r.mean_max_singular) << ',' << num(r.delta_lower) << ','
              << num(r.delta_upper) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustered activity detection and channel estimation experiments"};
  app.require_subcommand(1);

  std::string config;
  Overrides o;
  auto* run = app.add_subcommand("run", "Monte Carlo sweep; writes CSV tables and plots");
  run->add_option("--config", config, "key = value configuration file")->required();
  run->add_option("--out", o.out, "output directory");
  run->add_option("--trials", o.trials, "evaluation trials per sweep point");
  run->add_option("--seed", o.seed, "master seed");
  run->add_option("--threads", o.threads, "worker threads");

  auto* coh = app.add_subcommand("coherence", "mutual coherence over (L, G, N)");
  coh->add_option("--config", config)->required();
  coh->add_option("--out", o.out, "output directory");

  auto* rip = app.add_subcommand("rip", "restricted isometry diagnostic per cluster");
  rip->add_option("--config", config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*run) return cmd_run(config, o);
    if (*coh) return cmd_coherence(config, o);
    return cmd_rip(config, o);
  } catch (const ConfigError& e) {
    std::string joined;
    for (const auto& err : e.errors()) joined += (joined.empty() ? "" : "; ") + err;
    return fail("config", joined, 2);
  } catch (const std::invalid_argument& e) {
    return fail("invalid", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
}
