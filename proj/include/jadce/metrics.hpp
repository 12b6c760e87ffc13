#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jadce/detectors.hpp"
#include "jadce/linalg.hpp"

namespace jadce {

/// Mean over active devices of ||x_i - x^_i||^2 / ||x_i||^2. Empty when the
/// active set is empty (the trial is skipped).
std::optional<double> nmse(const CMatrix& truth, const CMatrix& estimate,
                           std::span<const Index> active);

struct Threshold {
  double zeta = 0.0;
  std::size_t samples = 0;
  bool reliable = true;  // false when samples < 1 / target_pfa
  std::string warning;
};

/// (1 - target_pfa) empirical quantile of null scores, "higher" interpolation:
/// sorted[ceil((n - 1) q)].
Threshold calibrate_threshold(std::vector<double> null_scores, double target_pfa);

struct DetectionOutcome {
  std::vector<std::uint8_t> detected;  // alpha^
  std::optional<double> pmd;           // empty when no device is active
  std::optional<double> pfa;           // empty when every device is active
  Index misses = 0;
  Index false_alarms = 0;
};

/// alpha^_n = 1 iff score_n >= zeta.
DetectionOutcome detect_and_pmd(std::span<const std::uint8_t> truth,
                                const RVector& row_scores, double zeta);

/// Runs `run`, storing monotonic wall time in result.seconds.
template <typename Fn>
DetectionResult timed(Fn&& run) {
  const auto start = std::chrono::steady_clock::now();
  DetectionResult result = std::forward<Fn>(run)();
  const auto stop = std::chrono::steady_clock::now();
  result.seconds = std::chrono::duration<double>(stop - start).count();
  return result;
}

struct MetricSample {
  std::string algorithm;
  std::string sweep_name;
  double sweep_value = 0.0;
  Index trial = 0;
  std::optional<double> nmse;
  std::optional<double> pmd;
  std::optional<double> pfa;
  double zeta = 0.0;
  double runtime = 0.0;
  Index iterations = 0;
  int skipped = 0;  // 0 ok, 1 no active device, 2 detector diverged
  Index active = 0;
  Index misses = 0;
  Index false_alarms = 0;
};

/// Order-independent mean / standard-error accumulator.
struct MeanAccumulator {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    ++count;
    sum += v;
    sum_sq += v * v;
  }
  void merge(const MeanAccumulator& o) {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  /// sample standard deviation / sqrt(n); 0 for n < 2
  double standard_error() const;
};

double median(std::vector<double> values);

}  // namespace jadce
