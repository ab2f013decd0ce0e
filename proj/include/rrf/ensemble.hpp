#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rrf/answer_matrix.hpp"
#include "rrf/error.hpp"
#include "rrf/metrics.hpp"

namespace rrf {

// Top-N questions vote; a founder is predicted successful with at least X YES votes.
struct EnsembleConfig {
  std::size_t n_questions = 0;
  std::size_t vote_threshold = 0;

  void validate(std::size_t pool_size) const {
    if (vote_threshold < 1) throw ConfigError("vote threshold must be at least 1");
    if (vote_threshold > n_questions) {
      throw ConfigError("vote threshold " + std::to_string(vote_threshold) + " exceeds ensemble size " +
                        std::to_string(n_questions));
    }
    if (n_questions > pool_size) {
      throw ConfigError("ensemble size " + std::to_string(n_questions) + " exceeds ranked pool of " +
                        std::to_string(pool_size));
    }
  }

  friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

struct GridSearchConstraints {
  std::uint64_t min_predicted = 30;
  std::uint64_t max_predicted = 50;
  std::size_t min_questions = 10;

  void validate() const {
    if (min_predicted > max_predicted) throw ConfigError("min_predicted exceeds max_predicted");
    if (min_questions < 1) throw ConfigError("min_questions must be at least 1");
  }
};

struct EnsembleMetrics {
  ConfusionCounts counts;

  std::optional<Rate> precision() const { return rrf::precision(counts); }
  std::optional<Rate> recall() const { return rrf::recall(counts); }
  std::uint64_t predicted() const { return counts.predicted_positive(); }

  friend bool operator==(const EnsembleMetrics&, const EnsembleMetrics&) = default;
};

struct TunedModel {
  EnsembleConfig config;
  std::vector<std::string> ranked_ids;  // exactly the top N
  EnsembleMetrics validation;
};

struct Infeasible {
  std::string reason;
};

using GridSearchOutcome = std::variant<TunedModel, Infeasible>;

// Extra feasibility check applied after the bound constraints.
using FeasibilityHook = std::function<bool(const EnsembleConfig&, const EnsembleMetrics&)>;

inline std::size_t vote_count(BitView founder_column, std::size_t n_questions) {
  if (founder_column.size() != n_questions) {
    throw DimensionError("vote_count: column of " + std::to_string(founder_column.size()) + " for N = " +
                         std::to_string(n_questions));
  }
  return static_cast<std::size_t>(std::count_if(founder_column.begin(), founder_column.end(), [](auto v) { return v != 0; }));
}

// `top` holds the ranked questions' rows; only its first N rows vote.
inline BitRow predict(const EnsembleConfig& config, const AnswerMatrix& top) {
  top.validate();
  config.validate(top.num_questions());
  BitRow out(top.num_founders(), 0);
  BitRow column(config.n_questions);
  for (std::size_t f = 0; f < top.num_founders(); ++f) {
    for (std::size_t q = 0; q < config.n_questions; ++q) column[q] = top.answers[q][f];
    out[f] = vote_count(column, config.n_questions) >= config.vote_threshold ? 1 : 0;
  }
  return out;
}

namespace detail {

// Total order used to pick among feasible configurations: precision, then
// recall (undefined sorts lowest), then smaller N, then smaller X.
inline bool better_config(const EnsembleConfig& a, const EnsembleMetrics& ma, const EnsembleConfig& b,
                          const EnsembleMetrics& mb) {
  const auto pa = ma.precision(), pb = mb.precision();
  if (pa != pb) return pa > pb;
  const auto ra = ma.recall(), rb = mb.recall();
  if (ra != rb) return ra > rb;
  if (a.n_questions != b.n_questions) return a.n_questions < b.n_questions;
  return a.vote_threshold < b.vote_threshold;
}

// Calls visit(N, X, metrics) for every N in [n_lo, n_hi] and X in [x_lo, min(x_hi, N)],
// accumulating votes one ranked row at a time.
template <typename Visit>
void sweep(const AnswerMatrix& m, std::span<const std::size_t> rows, std::size_t n_lo, std::size_t n_hi,
           std::size_t x_lo, std::size_t x_hi, Visit&& visit) {
  const std::size_t founders = m.num_founders();
  std::uint64_t total_pos = 0;
  for (auto l : m.labels) total_pos += (l != 0);
  std::vector<std::uint32_t> votes(founders, 0);
  std::vector<std::uint64_t> count, positives;
  n_hi = std::min(n_hi, rows.size());
  for (std::size_t n = 1; n <= n_hi; ++n) {
    const auto& row = m.answers[rows[n - 1]];
    for (std::size_t f = 0; f < founders; ++f) votes[f] += row[f];
    if (n < n_lo) continue;
    count.assign(n + 2, 0);
    positives.assign(n + 2, 0);
    for (std::size_t f = 0; f < founders; ++f) {
      ++count[votes[f]];
      positives[votes[f]] += (m.labels[f] != 0);
    }
    // suffix sums: entry v = founders with at least v votes
    for (std::size_t v = n; v-- > 0;) {
      count[v] += count[v + 1];
      positives[v] += positives[v + 1];
    }
    const std::size_t top_x = std::min(x_hi, n);
    for (std::size_t x = std::max<std::size_t>(x_lo, 1); x <= top_x; ++x) {
      EnsembleMetrics metrics;
      metrics.counts.tp = positives[x];
      metrics.counts.fp = count[x] - positives[x];
      metrics.counts.fn_ = total_pos - positives[x];
      metrics.counts.tn = founders - count[x] - metrics.counts.fn_;
      visit(EnsembleConfig{n, x}, metrics);
    }
  }
}

inline std::vector<std::size_t> resolve_rows(const AnswerMatrix& m, std::span<const std::string> ids) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(m.index_of(id));
  return rows;
}

}  // namespace detail

// Exhaustive search over every integer (N, X) with min_questions <= N <= |ranked|
// and 1 <= X <= N, keeping configurations whose predicted-positive count lies
// in [min_predicted, max_predicted].
inline GridSearchOutcome grid_search(const AnswerMatrix& m, std::span<const std::string> ranked_ids,
                                     const GridSearchConstraints& constraints, const FeasibilityHook& hook = {}) {
  m.validate();
  constraints.validate();
  if (ranked_ids.empty()) throw PreconditionError("grid_search: ranked question list is empty");
  const auto rows = detail::resolve_rows(m, ranked_ids);

  std::optional<std::pair<EnsembleConfig, EnsembleMetrics>> best;
  detail::sweep(m, rows, constraints.min_questions, rows.size(), 1, rows.size(),
                [&](const EnsembleConfig& cfg, const EnsembleMetrics& metrics) {
                  const auto predicted = metrics.predicted();
                  if (predicted < constraints.min_predicted || predicted > constraints.max_predicted) return;
                  if (hook && !hook(cfg, metrics)) return;
                  if (!best || detail::better_config(cfg, metrics, best->first, best->second)) best.emplace(cfg, metrics);
                });

  if (!best) {
    return Infeasible{"no (N, X) with N in [" + std::to_string(constraints.min_questions) + ", " +
                      std::to_string(rows.size()) + "] predicts between " + std::to_string(constraints.min_predicted) +
                      " and " + std::to_string(constraints.max_predicted) + " of " + std::to_string(m.num_founders()) +
                      " founders"};
  }
  TunedModel model;
  model.config = best->first;
  model.validation = best->second;
  model.ranked_ids.assign(ranked_ids.begin(), ranked_ids.begin() + static_cast<std::ptrdiff_t>(model.config.n_questions));
  return model;
}

struct HeatmapCell {
  std::size_t n_questions;
  std::size_t vote_threshold;
  std::optional<Rate> precision;
  std::uint64_t predicted;
};

struct IndexRange {
  std::size_t lo;
  std::size_t hi;  // inclusive
};

// Cells with X > N are never emitted. N beyond the ranked list is clipped.
inline std::vector<HeatmapCell> heatmap(const AnswerMatrix& m, std::span<const std::string> ranked_ids,
                                        IndexRange n_range, IndexRange x_range) {
  m.validate();
  if (n_range.lo > n_range.hi || x_range.lo > x_range.hi) throw PreconditionError("heatmap: empty range");
  const auto rows = detail::resolve_rows(m, ranked_ids);
  std::vector<HeatmapCell> cells;
  detail::sweep(m, rows, std::max<std::size_t>(n_range.lo, 1), n_range.hi, x_range.lo, x_range.hi,
                [&](const EnsembleConfig& cfg, const EnsembleMetrics& metrics) {
                  cells.push_back({cfg.n_questions, cfg.vote_threshold, metrics.precision(), metrics.predicted()});
                });
  return cells;
}

struct TestEvaluation {
  EnsembleMetrics metrics;
  Rate base_rate;
  std::optional<double> lift;  // precision / base rate

  std::optional<Rate> precision() const { return metrics.precision(); }
  std::optional<Rate> recall() const { return metrics.recall(); }
  std::uint64_t predicted() const { return metrics.predicted(); }
};

inline EnsembleMetrics evaluate_config(const EnsembleConfig& config, const AnswerMatrix& top) {
  return EnsembleMetrics{confusion(predict(config, top), top.labels)};
}

// Applies the frozen model to a held-out matrix.
inline TestEvaluation evaluate_on_test(const TunedModel& model, const AnswerMatrix& test) {
  test.validate();
  const auto top = test.select(model.ranked_ids);
  TestEvaluation out;
  out.metrics = evaluate_config(model.config, top);
  out.base_rate = base_rate(test.labels);
  if (const auto p = out.metrics.precision(); p && out.base_rate.num > 0) {
    out.lift = static_cast<double>(p->num * out.base_rate.den) / static_cast<double>(p->den * out.base_rate.num);
  }
  return out;
}

}  // namespace rrf
