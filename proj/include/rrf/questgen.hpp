#pragma once

#include <cstdio>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rrf/dataset/profile.hpp"
#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/metrics.hpp"
#include "rrf/oracle/backend.hpp"
#include "rrf/oracle/parse.hpp"
#include "rrf/oracle/prompts.hpp"
#include "rrf/oracle/retry.hpp"
#include "rrf/random.hpp"

namespace rrf {

enum class QuestionOrigin { llm, expert };

inline std::string to_string(QuestionOrigin o) { return o == QuestionOrigin::llm ? "llm" : "expert"; }

inline QuestionOrigin origin_from_string(std::string_view s) {
  if (s == "llm") return QuestionOrigin::llm;
  if (s == "expert") return QuestionOrigin::expert;
  throw IoError("unknown question origin '" + std::string(s) + "'");
}

// Scores of one question on the batch it was evaluated against.
struct RoundStats {
  ConfusionCounts counts;

  std::optional<Rate> precision() const { return rrf::precision(counts); }
  std::optional<Rate> recall() const { return rrf::recall(counts); }
  std::uint64_t predicted() const { return counts.predicted_positive(); }
  std::uint64_t batch_size() const { return counts.total(); }
};

struct QuestionRecord {
  std::string id;
  std::string text;
  int round = 0;
  QuestionOrigin origin = QuestionOrigin::llm;
  RoundStats stats;
  // The scoring batch, kept so stats can be recomputed.
  std::vector<std::string> eval_founder_ids;
  BitRow eval_answers;
  BitRow eval_labels;
};

struct QuestionPool {
  std::vector<QuestionRecord> questions;
  std::size_t target_size = 100;

  int last_round() const { return questions.empty() ? 0 : questions.back().round; }
};

enum class RoundKind { generation, feedback, expert };

inline std::string to_string(RoundKind k) {
  switch (k) {
    case RoundKind::generation: return "generation";
    case RoundKind::feedback: return "feedback";
    case RoundKind::expert: return "expert";
  }
  return "generation";
}

struct RoundReport {
  int round = 0;
  RoundKind kind = RoundKind::generation;
  std::string prompt;
  std::vector<std::string> gen_batch;
  std::vector<std::string> eval_batch;
  std::vector<std::string> question_ids;
};

// First rounds are seeded with hints; later rounds with the previous round's scores.
using RoundContext = std::variant<std::vector<InsightSummary>, std::vector<FeedbackStat>>;

struct RoundResult {
  std::vector<QuestionRecord> records;
  RoundReport report;
};

struct QuestgenOptions {
  int parse_retries = 3;   // identical-prompt retries for malformed responses
  int round_retries = 2;   // reruns of a failed round before giving up
  std::size_t batch_size = 20;
};

inline std::string question_id(std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "q%04zu", n);
  return buf;
}

inline std::vector<FeedbackStat> feedback_from(std::span<const QuestionRecord> records) {
  std::vector<FeedbackStat> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto p = r.stats.precision();
    const auto rc = r.stats.recall();
    out.push_back({r.text, p ? std::optional(p->value()) : std::nullopt, rc ? std::optional(rc->value()) : std::nullopt,
                   r.stats.predicted(), r.stats.batch_size()});
  }
  return out;
}

// Generates 10 questions and scores each on `eval_batch`. The ten
// evaluations run concurrently. Ids continue from `first_id`.
inline RoundResult run_round(OracleBackend& backend, const FeatureLexicon& lexicon,
                             std::span<const FounderProfile> gen_batch, std::span<const FounderProfile> eval_batch,
                             const RoundContext& context, int round, QuestionOrigin origin, std::size_t first_id,
                             const QuestgenOptions& options = {}) {
  for (const auto& g : gen_batch) {
    for (const auto& e : eval_batch) {
      if (g.id == e.id) throw PreconditionError("generation and evaluation batches overlap on " + g.id);
    }
  }
  if (eval_batch.empty()) throw PreconditionError("evaluation batch is empty");

  std::vector<std::string> gen_text;
  for (const auto& p : gen_batch) gen_text.push_back(render_profile(p, lexicon));
  std::vector<std::string> eval_text;
  BitRow labels;
  std::vector<std::string> eval_ids;
  for (const auto& p : eval_batch) {
    eval_text.push_back(render_profile(p, lexicon));
    labels.push_back(p.label ? 1 : 0);
    eval_ids.push_back(p.id);
  }

  RoundResult result;
  auto& report = result.report;
  report.round = round;
  if (const auto* hints = std::get_if<std::vector<InsightSummary>>(&context)) {
    report.kind = origin == QuestionOrigin::expert ? RoundKind::expert : RoundKind::generation;
    report.prompt = build_generation_prompt(gen_text, *hints);
  } else {
    report.kind = RoundKind::feedback;
    report.prompt = build_feedback_prompt(std::get<std::vector<FeedbackStat>>(context), gen_text);
  }
  for (const auto& p : gen_batch) report.gen_batch.push_back(p.id);
  report.eval_batch = eval_ids;

  auto questions = complete_with_retries(backend, report.prompt, options.parse_retries,
                                         [](const std::string& r) { return parse_questions(r, kQuestionsPerRound); });
  questions.resize(kQuestionsPerRound);

  std::vector<std::future<BitRow>> answers;
  answers.reserve(questions.size());
  for (const auto& q : questions) {
    answers.push_back(std::async(std::launch::async, [&backend, &q, &eval_text] { return backend.answer_batch(q, eval_text); }));
  }
  std::vector<BitRow> rows;
  std::exception_ptr error;
  for (auto& a : answers) {
    try {
      rows.push_back(a.get());
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (rows[i].size() != labels.size()) {
      throw BackendError("oracle returned " + std::to_string(rows[i].size()) + " answers for " +
                         std::to_string(labels.size()) + " founders");
    }
    QuestionRecord rec;
    rec.id = question_id(first_id + i);
    rec.text = questions[i];
    rec.round = round;
    rec.origin = origin;
    rec.stats.counts = confusion(rows[i], labels);
    rec.eval_founder_ids = eval_ids;
    rec.eval_answers = std::move(rows[i]);
    rec.eval_labels = labels;
    report.question_ids.push_back(rec.id);
    result.records.push_back(std::move(rec));
  }
  return result;
}

// A round kept failing. Carries everything accumulated before it.
class RoundFailure : public Error {
 public:
  RoundFailure(const std::string& what, int round, QuestionPool partial, std::vector<RoundReport> reports)
      : Error(what), round_(round), partial_(std::move(partial)), reports_(std::move(reports)) {}

  int round() const { return round_; }
  const QuestionPool& partial_pool() const { return partial_; }
  const std::vector<RoundReport>& reports() const { return reports_; }

 private:
  int round_;
  QuestionPool partial_;
  std::vector<RoundReport> reports_;
};

struct PoolRun {
  QuestionPool pool;
  std::vector<RoundReport> rounds;
};

// Fixed-size batches over a training split. Round r (0-based) is scored on
// batch r of the current pass and shown batch r+1 (cyclically) for
// generation; each pass is a fresh seeded permutation, so one pass of rounds
// scores every founder exactly once.
class BatchSchedule {
 public:
  BatchSchedule(std::span<const FounderProfile> train, std::size_t batch_size, std::uint64_t seed)
      : train_(train), batch_size_(batch_size), seed_(seed) {
    if (batch_size_ == 0 || train_.size() < 2 * batch_size_) {
      throw PreconditionError("training split of " + std::to_string(train_.size()) + " cannot supply two batches of " +
                              std::to_string(batch_size_));
    }
  }

  std::size_t batches_per_pass() const { return train_.size() / batch_size_; }

  std::pair<std::vector<FounderProfile>, std::vector<FounderProfile>> batches(std::size_t round_index) const {
    const auto per_pass = batches_per_pass();
    const auto pass = round_index / per_pass;
    const auto slot = round_index % per_pass;
    auto rng = make_rng(seed_, "questgen:pass", pass);
    const auto order = permutation(train_.size(), rng);
    auto take = [&](std::size_t b) {
      std::vector<FounderProfile> out;
      for (std::size_t i = 0; i < batch_size_; ++i) out.push_back(train_[order[b * batch_size_ + i]]);
      return out;
    };
    return {take((slot + 1) % per_pass), take(slot)};
  }

 private:
  std::span<const FounderProfile> train_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

namespace detail {
template <typename Body>
RoundResult run_with_round_retries(int round, const QuestionPool& pool, const std::vector<RoundReport>& reports,
                                   const QuestgenOptions& options, Body&& body) {
  for (int attempt = 0;; ++attempt) {
    try {
      return body();
    } catch (const BackendError& e) {
      if (attempt >= options.round_retries) {
        throw RoundFailure("round " + std::to_string(round) + " failed: " + e.what(), round, pool, reports);
      }
    }
  }
}
}  // namespace detail

// Runs rounds until the pool holds `target` questions: the first round is
// seeded with `hints`, each later round with the previous round's scores.
inline PoolRun accumulate_pool(OracleBackend& backend, const FeatureLexicon& lexicon,
                               std::span<const FounderProfile> train, const std::vector<InsightSummary>& hints,
                               std::size_t target, std::uint64_t seed, const QuestgenOptions& options = {}) {
  if (target == 0 || target % kQuestionsPerRound != 0) {
    throw PreconditionError("pool target must be a positive multiple of 10");
  }
  const BatchSchedule schedule(train, options.batch_size, seed);
  PoolRun run;
  run.pool.target_size = target;
  const std::size_t rounds = target / kQuestionsPerRound;
  for (std::size_t r = 0; r < rounds; ++r) {
    const int round = static_cast<int>(r) + 1;
    const auto [gen, eval] = schedule.batches(r);
    RoundContext context = hints;
    if (r > 0) {
      const auto prev = std::span(run.pool.questions).last(kQuestionsPerRound);
      context = feedback_from(prev);
    }
    auto result = detail::run_with_round_retries(round, run.pool, run.rounds, options, [&] {
      return run_round(backend, lexicon, gen, eval, context, round, QuestionOrigin::llm,
                       run.pool.questions.size() + 1, options);
    });
    for (auto& rec : result.records) run.pool.questions.push_back(std::move(rec));
    run.rounds.push_back(std::move(result.report));
  }
  return run;
}

// Generation rounds whose hints are expert descriptors; appends `count`
// expert-origin questions and grows the pool target accordingly.
inline PoolRun inject_expert_questions(PoolRun run, OracleBackend& backend, const FeatureLexicon& lexicon,
                                       std::span<const FounderProfile> train,
                                       const std::vector<InsightSummary>& descriptors, std::size_t count,
                                       std::uint64_t seed, const QuestgenOptions& options = {}) {
  if (count == 0) return run;
  if (descriptors.empty()) throw PreconditionError("expert injection needs at least one descriptor");
  const BatchSchedule schedule(train, options.batch_size, seed);
  std::size_t added = 0;
  while (added < count) {
    const int round = run.pool.last_round() + 1;
    const auto [gen, eval] = schedule.batches(static_cast<std::size_t>(round - 1));
    auto result = detail::run_with_round_retries(round, run.pool, run.rounds, options, [&] {
      return run_round(backend, lexicon, gen, eval, RoundContext{descriptors}, round, QuestionOrigin::expert,
                       run.pool.questions.size() + 1, options);
    });
    const auto take = std::min(count - added, result.records.size());
    result.records.resize(take);
    result.report.question_ids.resize(take);
    for (auto& rec : result.records) run.pool.questions.push_back(std::move(rec));
    run.rounds.push_back(std::move(result.report));
    added += take;
  }
  run.pool.target_size += count;
  return run;
}

inline std::string bits_to_string(BitView bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s += b ? '1' : '0';
  return s;
}

inline BitRow bits_from_string(std::string_view s) {
  BitRow out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw IoError("bit string may only contain 0 and 1");
    out.push_back(c == '1');
  }
  return out;
}

inline json to_json(const QuestionRecord& r) {
  return json{{"id", r.id},
              {"text", r.text},
              {"round", r.round},
              {"origin", to_string(r.origin)},
              {"stats",
               {{"tp", r.stats.counts.tp},
                {"fp", r.stats.counts.fp},
                {"fn", r.stats.counts.fn_},
                {"tn", r.stats.counts.tn},
                {"precision", r.stats.precision() ? json(r.stats.precision()->value()) : json(nullptr)},
                {"recall", r.stats.recall() ? json(r.stats.recall()->value()) : json(nullptr)},
                {"predicted", r.stats.predicted()},
                {"batch_size", r.stats.batch_size()}}},
              {"eval_founders", r.eval_founder_ids},
              {"eval_answers", bits_to_string(r.eval_answers)},
              {"eval_labels", bits_to_string(r.eval_labels)}};
}

inline QuestionRecord question_from_json(const json& j) {
  QuestionRecord r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.round = j.at("round").get<int>();
  r.origin = origin_from_string(j.at("origin").get<std::string>());
  const auto& s = j.at("stats");
  r.stats.counts = {s.at("tp").get<std::uint64_t>(), s.at("fp").get<std::uint64_t>(), s.at("fn").get<std::uint64_t>(),
                    s.at("tn").get<std::uint64_t>()};
  r.eval_founder_ids = j.at("eval_founders").get<std::vector<std::string>>();
  r.eval_answers = bits_from_string(j.at("eval_answers").get<std::string>());
  r.eval_labels = bits_from_string(j.at("eval_labels").get<std::string>());
  return r;
}

inline std::vector<json> pool_to_records(const QuestionPool& pool) {
  std::vector<json> out;
  out.reserve(pool.questions.size());
  for (const auto& q : pool.questions) out.push_back(to_json(q));
  return out;
}

inline QuestionPool pool_from_records(const std::vector<json>& records) {
  QuestionPool pool;
  for (const auto& r : records) pool.questions.push_back(question_from_json(r));
  pool.target_size = pool.questions.size();
  return pool;
}

inline json to_json(const RoundReport& r) {
  return json{{"round", r.round},        {"kind", to_string(r.kind)},     {"prompt", r.prompt},
              {"gen_batch", r.gen_batch}, {"eval_batch", r.eval_batch}, {"questions", r.question_ids}};
}

}  // namespace rrf
