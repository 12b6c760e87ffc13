#include "jadce/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace jadce {

namespace {

std::ofstream open_out(const std::filesystem::path& file, std::ios::openmode mode = {}) {
  std::ofstream out(file, std::ios::out | mode);
  if (!out) throw std::runtime_error("cannot open '" + file.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& file, std::ios::openmode mode = {}) {
  std::ifstream in(file, std::ios::in | mode);
  if (!in) throw std::runtime_error("cannot open '" + file.string() + "' for reading");
  return in;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<Index>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<Index> split_indices(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(std::stoll(item));
  return out;
}

constexpr char kMagic[8] = {'J', 'A', 'D', 'C', 'E', 'C', 'A', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("load_calibration: truncated file");
  return v;
}

void put_matrix(std::ostream& out, const CMatrix& m) {
  put<std::int64_t>(out, m.rows());
  put<std::int64_t>(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Complex) * m.size()));
}

CMatrix get_matrix(std::istream& in) {
  const auto rows = get<std::int64_t>(in);
  const auto cols = get<std::int64_t>(in);
  if (rows < 0 || cols < 0 || rows * cols > (1LL << 32))
    throw std::runtime_error("load_calibration: corrupt matrix header");
  CMatrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(Complex) * m.size()));
  if (!in) throw std::runtime_error("load_calibration: truncated matrix");
  return m;
}

}  // namespace

void write_pilot_bank(const PilotBank& bank, const std::filesystem::path& file) {
  std::ofstream out = open_out(file);
  out << "# L=" << bank.length() << ",G=" << bank.clusters()
      << ",kappa=" << join(bank.basis.kappa) << ",N_g=" << join(bank.cluster_sizes)
      << ",s=" << join(bank.cardinality) << ",seed=" << bank.seed << '\n';
  for (Index i = 0; i < bank.pilots.rows(); ++i) {
    for (Index j = 0; j < bank.pilots.cols(); ++j) {
      if (j) out << ',';
      out << exact(bank.pilots(i, j).real()) << ',' << exact(bank.pilots(i, j).imag());
    }
    out << '\n';
  }
}

PilotFile read_pilot_bank(const std::filesystem::path& file) {
  std::ifstream in = open_in(file);
  std::string header;
  std::getline(in, header);
  if (header.rfind("# ", 0) != 0) throw std::runtime_error("read_pilot_bank: missing header");
  PilotFile pf;
  Index length = -1;
  std::stringstream hs(header.substr(2));
  std::string field;
  while (std::getline(hs, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "L") length = std::stoll(value);
    else if (key == "kappa") pf.kappa = split_indices(value);
    else if (key == "N_g") pf.cluster_sizes = split_indices(value);
    else if (key == "s") pf.cardinality = split_indices(value);
    else if (key == "seed") pf.seed = std::stoull(value);
  }
  if (length <= 0) throw std::runtime_error("read_pilot_bank: header lacks L");
  Index n = 0;
  for (Index g : pf.cluster_sizes) n += g;
  pf.pilots.resize(length, n);
  std::string line;
  for (Index i = 0; i < length; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("read_pilot_bank: expected " + std::to_string(length) + " rows");
    std::stringstream ls(line);
    std::string re, im;
    for (Index j = 0; j < n; ++j) {
      if (!std::getline(ls, re, ',') || !std::getline(ls, im, ','))
        throw std::runtime_error("read_pilot_bank: row " + std::to_string(i) + " is short");
      pf.pilots(i, j) = Complex(std::stod(re), std::stod(im));
    }
  }
  return pf;
}

void save_calibration(const AemCalibration& c, const std::filesystem::path& file) {
  std::ofstream out = open_out(file, std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  put<std::int64_t>(out, c.training_samples);
  put<std::uint64_t>(out, c.seed);
  put<double>(out, c.regularization);
  put_matrix(out, c.mismatch_mean);
  put_matrix(out, c.mismatch_cov);
  put_matrix(out, c.regularized_cov);
  put_matrix(out, c.precision);
  put_matrix(out, c.whitening);
  if (!out) throw std::runtime_error("save_calibration: write failed for '" + file.string() + "'");
}

AemCalibration load_calibration(const std::filesystem::path& file) {
  std::ifstream in = open_in(file, std::ios::binary);
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("load_calibration: '" + file.string() + "' is not a calibration file");
  AemCalibration c;
  c.training_samples = get<std::int64_t>(in);
  c.seed = get<std::uint64_t>(in);
  c.regularization = get<double>(in);
  c.mismatch_mean = get_matrix(in);
  c.mismatch_cov = get_matrix(in);
  c.regularized_cov = get_matrix(in);
  c.precision = get_matrix(in);
  c.whitening = get_matrix(in);
  return c;
}

void write_admm_trace(const AdmmTrace& trace, const std::filesystem::path& file) {
  std::ofstream out = open_out(file);
  out << "iteration,primal_residual,dual_residual,z_norm\n";
  for (std::size_t i = 0; i < trace.primal_residual.size(); ++i)
    out << i + 1 << ',' << exact(trace.primal_residual[i]) << ','
        << exact(trace.dual_residual[i]) << ',' << exact(trace.z_norm[i]) << '\n';
}

void write_sbl_trace(const SblTrace& trace, const std::vector<double>& log_evidence,
                     const std::filesystem::path& file) {
  std::ofstream out = open_out(file);
  const bool spectrum = !trace.min_eigenvalue.empty();
  out << "iteration,log_evidence,min_gamma,max_gamma";
  if (spectrum) out << ",sigma_min_eig,sigma_max_eig";
  out << '\n';
  for (std::size_t i = 0; i < trace.gamma.size(); ++i) {
    out << i << ',' << (i < log_evidence.size() ? exact(log_evidence[i]) : "") << ','
        << exact(trace.gamma[i].minCoeff()) << ',' << exact(trace.gamma[i].maxCoeff());
    if (spectrum && i < trace.min_eigenvalue.size())
      out << ',' << exact(trace.min_eigenvalue[i]) << ',' << exact(trace.max_eigenvalue[i]);
    else if (spectrum)
      out << ",,";
    out << '\n';
  }
}

}  // namespace jadce
