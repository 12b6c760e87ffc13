#include "jadce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jadce {

std::optional<double> nmse(const CMatrix& truth, const CMatrix& estimate,
                           std::span<const Index> active) {
  require(truth.rows() == estimate.rows() && truth.cols() == estimate.cols(),
          "nmse: truth and estimate differ in shape");
  if (active.empty()) return std::nullopt;
  double acc = 0.0;
  for (Index i : active) {
    const double energy = truth.row(i).squaredNorm();
    require(energy > 0.0, "nmse: active device " + std::to_string(i) + " has a zero channel");
    acc += (truth.row(i) - estimate.row(i)).squaredNorm() / energy;
  }
  return acc / static_cast<double>(active.size());
}

Threshold calibrate_threshold(std::vector<double> null_scores, double target_pfa) {
  require(!null_scores.empty(), "calibrate_threshold: no null scores");
  require(target_pfa > 0.0 && target_pfa < 1.0,
          "calibrate_threshold: target PFA must lie in (0, 1)");
  std::sort(null_scores.begin(), null_scores.end());
  const double q = 1.0 - target_pfa;
  const std::size_t n = null_scores.size();
  auto idx = static_cast<std::size_t>(std::ceil(static_cast<double>(n - 1) * q));
  idx = std::min(idx, n - 1);

  Threshold t;
  t.zeta = null_scores[idx];
  t.samples = n;
  if (static_cast<double>(n) < 1.0 / target_pfa) {
    t.reliable = false;
    std::ostringstream msg;
    msg << "only " << n << " null scores for target PFA " << target_pfa
        << "; quantile is unreliable";
    t.warning = msg.str();
  }
  return t;
}

DetectionOutcome detect_and_pmd(std::span<const std::uint8_t> truth,
                                const RVector& row_scores, double zeta) {
  require(static_cast<Index>(truth.size()) == row_scores.size(),
          "detect_and_pmd: activity and score lengths differ");
  DetectionOutcome out;
  out.detected.resize(truth.size());
  Index active = 0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const bool hit = row_scores(static_cast<Index>(n)) >= zeta;
    out.detected[n] = hit ? 1 : 0;
    if (truth[n]) {
      ++active;
      if (!hit) ++out.misses;
    } else if (hit) {
      ++out.false_alarms;
    }
  }
  const Index inactive = static_cast<Index>(truth.size()) - active;
  if (active > 0) out.pmd = static_cast<double>(out.misses) / static_cast<double>(active);
  if (inactive > 0)
    out.pfa = static_cast<double>(out.false_alarms) / static_cast<double>(inactive);
  return out;
}

double MeanAccumulator::standard_error() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  return std::sqrt(var / n);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace jadce
