#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "jadce/harness.hpp"

namespace jadce {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::ofstream open_csv(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  return out;
}

void write_echo(std::ostream& out, const ResultsTable& t) {
  for (const auto& [k, v] : t.config_echo) out << "# " << k << " = " << v << '\n';
  for (const auto& w : t.warnings) out << "# warning: " << w << '\n';
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

/// Line chart with a log10 y-axis. Non-positive values cannot be drawn on
/// that axis and are left out.
void write_svg(const std::filesystem::path& file, const std::string& title,
               const std::string& x_label, const std::string& y_label,
               const std::vector<Series>& series) {
  const double w = 640, h = 420, left = 80, right = 150, top = 40, bottom = 60;
  const double pw = w - left - right, ph = h - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      if (y > 0.0) {
        ymin = std::min(ymin, std::log10(y));
        ymax = std::max(ymax, std::log10(y));
      }
    }
  if (!std::isfinite(ymin)) ymin = -1.0, ymax = 0.0;
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1.0);
  if (xmax == xmin) xmin -= 1.0, xmax += 1.0;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n"
      << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = ymin; d <= ymax + 1e-9; d += 1.0) {
    out << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(d) << "\" y2=\""
        << py(d) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e"
        << static_cast<int>(d) << "</text>\n";
  }
  std::vector<double> xs;
  for (const auto& s : series)
    for (const auto& p : s.points) xs.push_back(p.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs)
    out << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << num(x) << "</text>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">"
      << x_label << "</text>\n"
      << "<text transform=\"translate(20," << top + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << y_label << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string path;
    for (const auto& [x, y] : series[i].points) {
      if (y <= 0.0) continue;
      path += (path.empty() ? "M" : " L") + num(px(x)) + "," + num(py(std::log10(y)));
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(std::log10(y)) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
    }
    if (!path.empty())
      out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(i);
    out << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\"" << ly
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << series[i].name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace

std::vector<std::filesystem::path> emit_outputs(const ResultsTable& table,
                                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");

  std::vector<std::filesystem::path> written;
  {
    const auto file = dir / "results.csv";
    std::ofstream out = open_csv(file);
    write_echo(out, table);
    out << "algorithm,sweep_name,sweep_value,trial,nmse,pmd,pfa,runtime_s,iterations,skipped\n";
    for (const MetricSample& s : table.rows)
      out << s.algorithm << ',' << s.sweep_name << ',' << num(s.sweep_value) << ',' << s.trial
          << ',' << opt(s.nmse) << ',' << opt(s.pmd) << ',' << opt(s.pfa) << ','
          << num(s.runtime) << ',' << s.iterations << ',' << s.skipped << '\n';
    if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
    written.push_back(file);
  }

  const std::vector<SummaryRow> summary = table.summary();
  {
    const auto file = dir / "summary.csv";
    std::ofstream out = open_csv(file);
    write_echo(out, table);
    out << "algorithm,sweep_name,sweep_value,trials,skipped,diverged,zeta,nmse_mean,nmse_se,"
           "nmse_db,pmd_mean,pmd_se,pfa_mean,pfa_se,runtime_mean_s,runtime_se_s,"
           "runtime_median_s,iterations_mean\n";
    for (const SummaryRow& r : summary) {
      const bool has_nmse = r.nmse.count > 0;
      out << r.algorithm << ',' << r.sweep_name << ',' << num(r.sweep_value) << ',' << r.trials
          << ',' << r.skipped << ',' << r.diverged << ',' << num(r.zeta) << ','
          << (has_nmse ? num(r.nmse.mean()) : "") << ','
          << (has_nmse ? num(r.nmse.standard_error()) : "") << ','
          << (has_nmse ? num(10.0 * std::log10(r.nmse.mean())) : "") << ','
          << (r.pmd.count ? num(r.pmd.mean()) : "") << ','
          << (r.pmd.count ? num(r.pmd.standard_error()) : "") << ','
          << (r.pfa.count ? num(r.pfa.mean()) : "") << ','
          << (r.pfa.count ? num(r.pfa.standard_error()) : "") << ',' << num(r.runtime.mean())
          << ',' << num(r.runtime.standard_error()) << ',' << num(r.runtime_median) << ','
          << num(r.iterations.mean()) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
    written.push_back(file);
  }

  if (summary.empty()) return written;

  std::map<std::string, Series> nmse, pmd, runtime;
  std::vector<std::string> order;
  for (const SummaryRow& r : summary) {
    if (!nmse.count(r.algorithm)) order.push_back(r.algorithm);
    nmse[r.algorithm].name = pmd[r.algorithm].name = runtime[r.algorithm].name = r.algorithm;
    if (r.nmse.count) nmse[r.algorithm].points.emplace_back(r.sweep_value, r.nmse.mean());
    if (r.pmd.count) pmd[r.algorithm].points.emplace_back(r.sweep_value, r.pmd.mean());
    if (r.runtime.count) runtime[r.algorithm].points.emplace_back(r.sweep_value, r.runtime_median);
  }
  auto ordered = [&](std::map<std::string, Series>& m) {
    std::vector<Series> v;
    for (const auto& name : order) v.push_back(m[name]);
    return v;
  };
  const std::string x = table.sweep_name;
  write_svg(dir / "nmse.svg", "Channel estimation NMSE", x, "NMSE", ordered(nmse));
  write_svg(dir / "pmd.svg", "Missed detection probability", x, "PMD", ordered(pmd));
  write_svg(dir / "runtime.svg", "Median runtime per trial", x, "seconds", ordered(runtime));
  for (const char* f : {"nmse.svg", "pmd.svg", "runtime.svg"}) written.push_back(dir / f);
  return written;
}

}  // namespace jadce
