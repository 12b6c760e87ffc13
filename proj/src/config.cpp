#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "jadce/harness.hpp"

namespace jadce {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = "invalid configuration";
  for (const auto& e : errors) out += "; " + e;
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::string fmt(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

std::vector<Index> to_index_list(const std::string& s) {
  std::vector<Index> out;
  for (const auto& item : split(s, ',')) out.push_back(to_int(item));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
  return out;
}

std::vector<double> to_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(item));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes = {"L", "M", "snr_db", "epsilon",
                                                "N", "G", "sigma_phi_deg"};
  return axes;
}

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<Key> table = {
      {"N", [](C& c, S v) { c.scenario.devices = to_int(v); },
       [](const C& c) { return std::to_string(c.scenario.devices); }},
      {"G", [](C& c, S v) { c.scenario.clusters = to_int(v); },
       [](const C& c) { return std::to_string(c.scenario.clusters); }},
      {"L", [](C& c, S v) { c.pilot_length = to_int(v); },
       [](const C& c) { return std::to_string(c.pilot_length); }},
      {"M", [](C& c, S v) { c.scenario.antennas = to_int(v); },
       [](const C& c) { return std::to_string(c.scenario.antennas); }},
      {"epsilon", [](C& c, S v) { c.scenario.activity = to_double(v); },
       [](const C& c) { return fmt(c.scenario.activity); }},
      {"snr_db", [](C& c, S v) { c.scenario.snr_db = to_double(v); },
       [](const C& c) { return fmt(c.scenario.snr_db); }},
      {"noise_power", [](C& c, S v) { c.scenario.noise_power = to_double(v); },
       [](const C& c) { return fmt(c.scenario.noise_power); }},
      {"cell_radius", [](C& c, S v) { c.scenario.cell_radius = to_double(v); },
       [](const C& c) { return fmt(c.scenario.cell_radius); }},
      {"min_distance", [](C& c, S v) { c.scenario.min_distance = to_double(v); },
       [](const C& c) { return fmt(c.scenario.min_distance); }},
      {"bandwidth", [](C& c, S v) { c.bandwidth = to_double(v); },
       [](const C& c) { return fmt(c.bandwidth); }},
      {"T", [](C& c, S v) { c.scenario.coherence_interval = to_int(v); },
       [](const C& c) { return std::to_string(c.scenario.coherence_interval); }},
      {"channel",
       [](C& c, S v) {
         if (v == "uncorrelated")
           c.scenario.channel = ChannelKind::uncorrelated;
         else if (v == "local_scattering" || v == "correlated")
           c.scenario.channel = ChannelKind::local_scattering;
         else
           throw std::invalid_argument("expected uncorrelated or local_scattering, got '" +
                                       v + "'");
       },
       [](const C& c) {
         return std::string(c.scenario.channel == ChannelKind::uncorrelated
                                ? "uncorrelated"
                                : "local_scattering");
       }},
      {"sigma_phi_deg", [](C& c, S v) { c.scenario.angular_spread_deg = to_double(v); },
       [](const C& c) { return fmt(c.scenario.angular_spread_deg); }},
      {"paths", [](C& c, S v) { c.scenario.paths = to_int(v); },
       [](const C& c) { return std::to_string(c.scenario.paths); }},
      {"normalize_noise", [](C& c, S v) { c.scenario.normalize_noise = to_bool(v); },
       [](const C& c) { return std::string(c.scenario.normalize_noise ? "true" : "false"); }},
      {"cardinality", [](C& c, S v) { c.cardinality = to_int(v); },
       [](const C& c) { return std::to_string(c.cardinality); }},
      {"pool_factor", [](C& c, S v) { c.pool_factor = to_int(v); },
       [](const C& c) { return std::to_string(c.pool_factor); }},
      {"delta", [](C& c, S v) { c.tolerance = to_double(v); },
       [](const C& c) { return fmt(c.tolerance); }},
      {"target_pfa", [](C& c, S v) { c.target_pfa = to_double(v); },
       [](const C& c) { return fmt(c.target_pfa); }},
      {"tau", [](C& c, S v) { c.training_samples = to_int(v); },
       [](const C& c) { return std::to_string(c.training_samples); }},
      {"trials", [](C& c, S v) { c.trials = to_int(v); },
       [](const C& c) { return std::to_string(c.trials); }},
      {"threshold_trials", [](C& c, S v) { c.threshold_trials = to_int(v); },
       [](const C& c) { return std::to_string(c.threshold_trials); }},
      {"algorithms",
       [](C& c, S v) {
         c.algorithms.clear();
         for (const auto& name : split(v, ',')) c.algorithms.push_back(parse_algorithm(name));
         if (c.algorithms.empty()) throw std::invalid_argument("no algorithms listed");
       },
       [](const C& c) {
         std::string out;
         for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
           if (i) out += ',';
           out += algorithm_name(c.algorithms[i]);
         }
         return out;
       }},
      {"sweep",
       [](C& c, S v) {
         const auto colon = v.find(':');
         if (colon == std::string::npos)
           throw std::invalid_argument("expected 'axis: v1,v2,...', got '" + v + "'");
         const std::string axis = trim(v.substr(0, colon));
         const auto& axes = sweep_axes();
         if (std::find(axes.begin(), axes.end(), axis) == axes.end())
           throw std::invalid_argument("unknown sweep axis '" + axis +
                                       "' (expected L, M, snr_db, epsilon, N, G or "
                                       "sigma_phi_deg)");
         c.sweep_name = axis;
         c.sweep_values = to_double_list(v.substr(colon + 1));
       },
       [](const C& c) {
         return c.sweep_values.empty() ? std::string()
                                       : c.sweep_name + ": " + fmt_list(c.sweep_values);
       }},
      {"seed", [](C& c, S v) { c.seed = static_cast<std::uint64_t>(to_int(v)); },
       [](const C& c) { return std::to_string(c.seed); }},
      {"threads", [](C& c, S v) { c.threads = static_cast<unsigned>(to_int(v)); },
       [](const C& c) { return std::to_string(c.threads); }},
      {"out", [](C& c, S v) { c.output_dir = v; }, [](const C& c) { return c.output_dir; }},
      {"rho", [](C& c, S v) { c.rho = to_double(v); }, [](const C& c) { return fmt(c.rho); }},
      {"lambda",
       [](C& c, S v) {
         if (v == "auto")
           c.lambda.reset();
         else
           c.lambda = to_double(v);
       },
       [](const C& c) { return c.lambda ? fmt(*c.lambda) : std::string("auto"); }},
      {"lambda_grid", [](C& c, S v) { c.lambda_grid = to_double_list(v); },
       [](const C& c) { return fmt_list(c.lambda_grid); }},
      {"lambda_trials", [](C& c, S v) { c.lambda_trials = to_int(v); },
       [](const C& c) { return std::to_string(c.lambda_trials); }},
      {"admm_max_iter", [](C& c, S v) { c.admm_max_iter = to_int(v); },
       [](const C& c) { return std::to_string(c.admm_max_iter); }},
      {"sbl_max_iter", [](C& c, S v) { c.sbl_max_iter = to_int(v); },
       [](const C& c) { return std::to_string(c.sbl_max_iter); }},
      {"gamma_max", [](C& c, S v) { c.gamma_max = to_double(v); },
       [](const C& c) { return fmt(c.gamma_max); }},
      {"somp_max_support", [](C& c, S v) { c.somp_max_support = to_int(v); },
       [](const C& c) { return std::to_string(c.somp_max_support); }},
      {"reduced", [](C& c, S v) { c.reduced = to_bool(v); },
       [](const C& c) { return std::string(c.reduced ? "true" : "false"); }},
      {"coherence_L", [](C& c, S v) { c.coherence_lengths = to_index_list(v); },
       [](const C& c) { return fmt_list(c.coherence_lengths); }},
      {"coherence_G", [](C& c, S v) { c.coherence_clusters = to_index_list(v); },
       [](const C& c) { return fmt_list(c.coherence_clusters); }},
      {"coherence_N", [](C& c, S v) { c.coherence_devices = to_index_list(v); },
       [](const C& c) { return fmt_list(c.coherence_devices); }},
      {"coherence_seeds", [](C& c, S v) { c.coherence_seeds = to_int(v); },
       [](const C& c) { return std::to_string(c.coherence_seeds); }},
      {"rip_K", [](C& c, S v) { c.rip_support = to_int(v); },
       [](const C& c) { return std::to_string(c.rip_support); }},
      {"rip_samples", [](C& c, S v) { c.rip_samples = to_int(v); },
       [](const C& c) { return std::to_string(c.rip_samples); }},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const Key& k : keys())
    if (name == k.name) return &k;
  return nullptr;
}

bool is_power_of_two(Index v) {
  return v >= 1 && std::has_single_bit(static_cast<std::uint64_t>(v));
}

void check_point(const ExperimentConfig& c, const std::string& where,
                 std::vector<std::string>& errors) {
  auto err = [&](const std::string& key, const std::string& msg) {
    errors.push_back(key + ": " + msg + where);
  };
  const auto& s = c.scenario;
  if (s.devices < 1) err("N", "must be >= 1");
  if (s.clusters < 1) err("G", "must be >= 1");
  if (s.clusters > s.devices) err("G", "must not exceed N");
  if (!is_power_of_two(c.pilot_length)) err("L", "must be a power of two");
  if (s.clusters > c.pilot_length) err("G", "must not exceed L");
  if (s.antennas < 1) err("M", "must be >= 1");
  if (!(s.activity >= 0.0 && s.activity <= 1.0)) err("epsilon", "must lie in [0, 1]");
  if (s.noise_power <= 0.0) err("noise_power", "must be positive");
  if (s.angular_spread_deg < 0.0) err("sigma_phi_deg", "must be >= 0");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::invalid_argument(join_errors(errors)), errors_(std::move(errors)) {}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::aem_sbl: return "aem_sbl";
    case Algorithm::aem_admm: return "aem_admm";
    case Algorithm::cb_somp: return "cb_somp";
    case Algorithm::sbl: return "sbl";
    case Algorithm::admm: return "admm";
    case Algorithm::somp: return "somp";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::aem_sbl, Algorithm::aem_admm, Algorithm::cb_somp,
                      Algorithm::sbl, Algorithm::admm, Algorithm::somp})
    if (name == algorithm_name(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                              "' (expected aem_sbl, aem_admm, cb_somp, sbl, admm or somp)");
}

bool is_clustered(Algorithm a) {
  return a == Algorithm::aem_sbl || a == Algorithm::aem_admm || a == Algorithm::cb_somp;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::map<std::string, std::string> given(raw.begin(), raw.end());
  std::vector<std::pair<std::string, std::string>> out;
  for (const Key& k : keys()) {
    const auto it = given.find(k.name);
    std::string value = it != given.end() ? it->second : k.get(*this);
    if (std::string(k.name) == "sweep" && value.empty()) continue;
    // execution detail only; leaving it out keeps outputs identical across thread counts
    if (std::string(k.name) == "threads") continue;
    out.emplace_back(k.name, std::move(value));
  }
  return out;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError({key + ": unknown key"});
  try {
    k->set(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError({key + ": " + e.what()});
  }
  auto it = std::find_if(config.raw.begin(), config.raw.end(),
                         [&](const auto& kv) { return kv.first == key; });
  if (it != config.raw.end())
    it->second = value;
  else
    config.raw.emplace_back(key, value);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::vector<std::string> errors;
  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* k = find_key(key);
    if (!k) {
      errors.push_back(key + ": unknown key (line " + std::to_string(lineno) + ")");
      continue;
    }
    if (std::any_of(config.raw.begin(), config.raw.end(),
                    [&](const auto& kv) { return kv.first == key; })) {
      errors.push_back(key + ": given more than once (line " + std::to_string(lineno) + ")");
      continue;
    }
    try {
      k->set(config, value);
      config.raw.emplace_back(key, value);
    } catch (const std::invalid_argument& e) {
      errors.push_back(key + ": " + e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError({"config: cannot open '" + file.string() + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ExperimentConfig at_sweep_point(const ExperimentConfig& config, double value) {
  ExperimentConfig c = config;
  const std::string& a = config.sweep_name;
  const auto as_index = [&] { return static_cast<Index>(std::llround(value)); };
  if (a == "L")
    c.pilot_length = as_index();
  else if (a == "M")
    c.scenario.antennas = as_index();
  else if (a == "snr_db")
    c.scenario.snr_db = value;
  else if (a == "epsilon")
    c.scenario.activity = value;
  else if (a == "N")
    c.scenario.devices = as_index();
  else if (a == "G")
    c.scenario.clusters = as_index();
  else if (a == "sigma_phi_deg")
    c.scenario.angular_spread_deg = value;
  else
    throw ConfigError({"sweep: unknown axis '" + a + "'"});
  return c;
}

void validate(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  auto err = [&](const std::string& key, const std::string& msg) {
    errors.push_back(key + ": " + msg);
  };
  check_point(c, "", errors);
  const auto& s = c.scenario;
  if (!(s.min_distance > 0.0 && s.min_distance < s.cell_radius))
    err("min_distance", "must satisfy 0 < min_distance < cell_radius");
  if (s.paths < 1) err("paths", "must be >= 1");
  if (c.cardinality < 0) err("cardinality", "must be >= 0");
  if (c.pool_factor < 1) err("pool_factor", "must be >= 1");
  if (c.tolerance <= 0.0) err("delta", "must be positive");
  if (!(c.target_pfa > 0.0 && c.target_pfa < 1.0)) err("target_pfa", "must lie in (0, 1)");
  if (c.training_samples < 2) err("tau", "must be >= 2");
  if (c.trials < 1) err("trials", "must be >= 1");
  if (c.threshold_trials < 0) err("threshold_trials", "must be >= 0");
  if (c.algorithms.empty()) err("algorithms", "must list at least one algorithm");
  if (c.threads < 1) err("threads", "must be >= 1");
  if (c.rho <= 0.0) err("rho", "must be positive");
  if (c.lambda && *c.lambda < 0.0) err("lambda", "must be >= 0");
  for (double v : c.lambda_grid)
    if (v <= 0.0) err("lambda_grid", "entries must be positive");
  if (c.lambda_trials < 1) err("lambda_trials", "must be >= 1");
  if (c.admm_max_iter < 1) err("admm_max_iter", "must be >= 1");
  if (c.sbl_max_iter < 1) err("sbl_max_iter", "must be >= 1");
  if (c.gamma_max <= 0.0) err("gamma_max", "must be positive");
  if (c.somp_max_support < 0) err("somp_max_support", "must be >= 0");
  if (c.coherence_seeds < 1) err("coherence_seeds", "must be >= 1");
  for (Index l : c.coherence_lengths)
    if (!is_power_of_two(l)) err("coherence_L", "entries must be powers of two");
  if (c.rip_support < 1) err("rip_K", "must be >= 1");
  if (c.rip_samples < 1) err("rip_samples", "must be >= 1");

  static const std::vector<std::string> integral = {"L", "M", "N", "G"};
  const bool int_axis =
      std::find(integral.begin(), integral.end(), c.sweep_name) != integral.end();
  for (double v : c.sweep_values) {
    if (int_axis && v != std::round(v)) {
      err("sweep", "value " + fmt(v) + " must be an integer for axis " + c.sweep_name);
      continue;
    }
    check_point(at_sweep_point(c, v), " (at sweep " + c.sweep_name + "=" + fmt(v) + ")",
                errors);
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

}  // namespace jadce
