#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rrf/answer_matrix.hpp"
#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/metrics.hpp"

namespace rrf {

struct FilteredQuestion {
  std::string id;
  std::optional<Rate> precision;  // nullopt: never answered YES
};

struct DuplicateRemoval {
  std::string kept;
  std::string removed;
  Rate similarity;
};

// Every input question lands in exactly one of the three lists.
struct RefinementReport {
  std::vector<FilteredQuestion> removed_by_filter;
  std::vector<DuplicateRemoval> removed_by_dedup;
  std::vector<std::string> ranked_ids;

  std::size_t total() const { return removed_by_filter.size() + removed_by_dedup.size() + ranked_ids.size(); }
};

struct FilterResult {
  std::vector<std::string> retained;
  std::vector<FilteredQuestion> removed;
};

// Keeps questions whose precision is defined and at least `baseline`.
inline FilterResult filter_by_precision(const AnswerMatrix& m, Rate baseline) {
  m.validate();
  if (m.num_questions() == 0 || m.num_founders() == 0) throw DimensionError("filter_by_precision: empty matrix");
  if (baseline.num == 0 || baseline.num >= baseline.den) throw ConfigError("filter baseline must lie in (0, 1)");
  FilterResult out;
  for (std::size_t q = 0; q < m.num_questions(); ++q) {
    const auto p = m.precision_of(q);
    if (p && *p >= baseline) out.retained.push_back(m.question_ids[q]);
    else out.removed.push_back({m.question_ids[q], p});
  }
  return out;
}

// |A and B| / |A or B|. Two all-NO vectors are identical answer patterns and
// score 1.
inline Rate jaccard(BitView a, BitView b) {
  if (a.size() != b.size()) {
    throw DimensionError("jaccard: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  std::uint64_t both = 0;
  std::uint64_t either = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both += (a[i] && b[i]);
    either += (a[i] || b[i]);
  }
  if (either == 0) return Rate{1, 1};
  return Rate{both, either};
}

struct DedupResult {
  std::vector<std::string> survivors;
  std::vector<DuplicateRemoval> removed;
};

// Removes one member of every pair with similarity strictly above `threshold`.
// Pairs are visited from most to least similar (ties by id); the lower-precision
// member goes, and on equal precision the later row in the matrix goes.
inline DedupResult deduplicate(const AnswerMatrix& m, std::span<const std::string> retained, Rate threshold) {
  m.validate();
  if (threshold.num == 0 || threshold.num > threshold.den) throw ConfigError("jaccard threshold must lie in (0, 1]");

  std::vector<std::size_t> rows;
  rows.reserve(retained.size());
  for (const auto& id : retained) rows.push_back(m.index_of(id));

  std::vector<std::optional<Rate>> prec(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) prec[i] = m.precision_of(rows[i]);

  struct Pair {
    std::size_t i, j;
    Rate sim;
  };
  std::vector<Pair> offending;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const auto s = jaccard(m.answers[rows[i]], m.answers[rows[j]]);
      if (s > threshold) offending.push_back({i, j, s});
    }
  }
  auto pair_key = [&](const Pair& p) {
    const auto& a = retained[p.i];
    const auto& b = retained[p.j];
    return a < b ? std::tie(a, b) : std::tie(b, a);
  };
  std::sort(offending.begin(), offending.end(), [&](const Pair& x, const Pair& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    return pair_key(x) < pair_key(y);
  });

  std::vector<std::uint8_t> alive(rows.size(), 1);
  DedupResult out;
  for (const auto& p : offending) {
    if (!alive[p.i] || !alive[p.j]) continue;
    std::size_t loser;
    if (prec[p.i] != prec[p.j]) loser = prec[p.i] < prec[p.j] ? p.i : p.j;
    else loser = rows[p.i] > rows[p.j] ? p.i : p.j;
    const auto winner = loser == p.i ? p.j : p.i;
    alive[loser] = 0;
    out.removed.push_back({retained[winner], retained[loser], p.sim});
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (alive[i]) out.survivors.push_back(retained[i]);
  }
  return out;
}

// Highest precision first; ties by higher recall, then by id.
inline std::vector<std::string> rank_by_precision(const AnswerMatrix& m, std::span<const std::string> ids) {
  struct Entry {
    std::string id;
    std::optional<Rate> precision;
    std::optional<Rate> recall;
  };
  std::vector<Entry> entries;
  entries.reserve(ids.size());
  for (const auto& id : ids) {
    const auto c = m.counts(m.index_of(id));
    entries.push_back({id, precision(c), recall(c)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.precision != b.precision) return a.precision > b.precision;
    if (a.recall != b.recall) return a.recall > b.recall;
    return a.id < b.id;
  });
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (auto& e : entries) out.push_back(std::move(e.id));
  return out;
}

struct RefineOptions {
  std::optional<Rate> baseline;  // defaults to the matrix base rate
  Rate jaccard_threshold{9, 10};
};

// Filter, then de-duplicate, then rank, all on the same matrix.
inline RefinementReport refine(const AnswerMatrix& m, const RefineOptions& options = {}) {
  const Rate baseline = options.baseline.value_or(base_rate(m.labels));
  auto filtered = filter_by_precision(m, baseline);
  auto dedup = deduplicate(m, filtered.retained, options.jaccard_threshold);
  RefinementReport report;
  report.removed_by_filter = std::move(filtered.removed);
  report.removed_by_dedup = std::move(dedup.removed);
  report.ranked_ids = rank_by_precision(m, dedup.survivors);
  return report;
}

inline json rate_json(const std::optional<Rate>& r) {
  if (!r) return nullptr;
  return r->value();
}

// One JSON record per disposition; ranked records carry their 1-based rank.
inline std::vector<json> refinement_to_records(const AnswerMatrix& m, const RefinementReport& report) {
  std::vector<json> out;
  for (std::size_t k = 0; k < report.ranked_ids.size(); ++k) {
    const auto& id = report.ranked_ids[k];
    const auto c = m.counts(m.index_of(id));
    out.push_back({{"disposition", "ranked"},
                   {"rank", k + 1},
                   {"id", id},
                   {"precision", rate_json(precision(c))},
                   {"recall", rate_json(recall(c))},
                   {"predicted", c.predicted_positive()}});
  }
  for (const auto& f : report.removed_by_filter) {
    out.push_back({{"disposition", "filtered"}, {"id", f.id}, {"precision", rate_json(f.precision)}});
  }
  for (const auto& d : report.removed_by_dedup) {
    out.push_back({{"disposition", "deduplicated"},
                   {"id", d.removed},
                   {"kept", d.kept},
                   {"similarity", d.similarity.value()},
                   {"intersection", d.similarity.num},
                   {"union", d.similarity.den}});
  }
  return out;
}

inline RefinementReport refinement_from_records(const std::vector<json>& records) {
  RefinementReport report;
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& r : records) {
    const auto kind = r.at("disposition").get<std::string>();
    if (kind == "ranked") {
      ranked.emplace_back(r.at("rank").get<std::size_t>(), r.at("id").get<std::string>());
    } else if (kind == "filtered") {
      FilteredQuestion f{r.at("id").get<std::string>(), std::nullopt};
      report.removed_by_filter.push_back(std::move(f));
    } else if (kind == "deduplicated") {
      report.removed_by_dedup.push_back({r.at("kept").get<std::string>(), r.at("id").get<std::string>(),
                                         Rate{r.at("intersection").get<std::uint64_t>(), r.at("union").get<std::uint64_t>()}});
    } else {
      throw IoError("unknown refinement disposition '" + kind + "'");
    }
  }
  std::sort(ranked.begin(), ranked.end());
  for (auto& [rank, id] : ranked) report.ranked_ids.push_back(std::move(id));
  return report;
}

}  // namespace rrf
