#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrf/error.hpp"

namespace rrf {

// One YES/NO answer per founder; 1 = YES. Kept as bytes so rows can be viewed
// through std::span.
using BitRow = std::vector<std::uint8_t>;
using BitView = std::span<const std::uint8_t>;

// Exact non-negative fraction num/den. Comparisons are rational, so ties in
// precision are real ties and never artifacts of rounding.
struct Rate {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  // Nearest fraction with the given denominator; for thresholds read from
  // configuration.
  static Rate approximate(double x, std::uint64_t den = 1'000'000) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("rate must be a finite non-negative number");
    return Rate{static_cast<std::uint64_t>(std::llround(x * static_cast<double>(den))), den};
  }

  friend bool operator==(Rate a, Rate b) { return a.num * b.den == b.num * a.den; }
  friend std::strong_ordering operator<=>(Rate a, Rate b) { return a.num * b.den <=> b.num * a.den; }
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn_ = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn_ + tn; }
  std::uint64_t predicted_positive() const { return tp + fp; }
  std::uint64_t actual_positive() const { return tp + fn_; }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(BitView predictions, BitView labels) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw DimensionError("confusion: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool l = labels[i] != 0;
    if (p && l) ++c.tp;
    else if (p) ++c.fp;
    else if (l) ++c.fn_;
    else ++c.tn;
  }
  return c;
}

// nullopt when nothing was predicted positive. Undefined is a value, never 0.
inline std::optional<Rate> precision(const ConfusionCounts& c) {
  if (c.predicted_positive() == 0) return std::nullopt;
  return Rate{c.tp, c.predicted_positive()};
}

inline std::optional<Rate> recall(const ConfusionCounts& c) {
  if (c.actual_positive() == 0) return std::nullopt;
  return Rate{c.tp, c.actual_positive()};
}

inline Rate base_rate(BitView labels) {
  if (labels.empty()) throw DimensionError("base_rate: empty label vector");
  std::uint64_t positives = 0;
  for (auto l : labels) positives += (l != 0);
  return Rate{positives, labels.size()};
}

// Precision over growing prefixes of the founder order. Entry k-1 covers the
// first k founders.
struct PrecisionTrajectory {
  std::vector<double> values;          // NaN where undefined
  std::vector<std::uint8_t> defined;   // 1 where the prefix has a YES

  std::size_t size() const { return values.size(); }
  std::optional<double> at(std::size_t k) const {
    if (!defined.at(k)) return std::nullopt;
    return values[k];
  }
};

inline PrecisionTrajectory trajectory(BitView question_row, BitView labels) {
  if (question_row.size() != labels.size()) {
    throw DimensionError("trajectory: row length " + std::to_string(question_row.size()) +
                         " vs " + std::to_string(labels.size()) + " labels");
  }
  PrecisionTrajectory t;
  t.values.reserve(question_row.size());
  t.defined.reserve(question_row.size());
  std::uint64_t tp = 0;
  std::uint64_t predicted = 0;
  for (std::size_t i = 0; i < question_row.size(); ++i) {
    if (question_row[i]) {
      ++predicted;
      if (labels[i]) ++tp;
    }
    if (predicted == 0) {
      t.values.push_back(std::numeric_limits<double>::quiet_NaN());
      t.defined.push_back(0);
    } else {
      t.values.push_back(Rate{tp, predicted}.value());
      t.defined.push_back(1);
    }
  }
  return t;
}

// "13.4%", "8%", "33.3%": one decimal, trailing ".0" dropped.
inline std::string format_percent(double fraction) {
  const double tenths = std::round(fraction * 1000.0);
  const auto whole = static_cast<long long>(tenths) / 10;
  const auto frac = static_cast<long long>(tenths) % 10;
  std::string out = std::to_string(whole);
  if (frac != 0) out += "." + std::to_string(frac);
  return out + "%";
}

inline std::string format_percent(const std::optional<Rate>& r) {
  return r ? format_percent(r->value()) : std::string("n/a");
}

// Published context figures, surfaced in reports for comparison only.
namespace reference {
inline constexpr double kAcceleratorPrecision = 0.032;
inline constexpr double kAcceleratorRecall = 0.069;
inline constexpr double kValidationPrecision = 0.54;
inline constexpr int kTunedQuestions = 43;
inline constexpr int kTunedThreshold = 36;
inline constexpr double kTestPrecision = 0.50;
inline constexpr double kTestPrecisionWithExperts = 0.54;
inline constexpr double kEvaluationBaseRate = 0.10;
}  // namespace reference

}  // namespace rrf
