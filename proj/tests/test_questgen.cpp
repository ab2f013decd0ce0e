#include <gtest/gtest.h>

#include <set>

#include "rrf/dataset/synthetic.hpp"
#include "rrf/oracle/mock.hpp"
#include "rrf/pipeline/config.hpp"
#include "rrf/questgen.hpp"
#include "support.hpp"

using namespace rrf;

namespace {

struct Fixture {
  PipelineConfig cfg = PipelineConfig::load(testkit::config_dir() / "default.json");
  FeatureLexicon lexicon = cfg.lexicon();
  DatasetSplit data = generate_synthetic_dataset(cfg.synth, 7);
  MockLibrary library = MockLibrary::load(cfg.mock_library_path);
  std::vector<InsightSummary> hints{{"Successful founders often have a prior exit.", InsightOrigin::data, {}}};
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

// Records every prompt and can fail the first few calls of complete().
class RecordingBackend : public OracleBackend {
 public:
  explicit RecordingBackend(OracleBackend& inner, int fail_first = 0) : inner_(inner), fail_(fail_first) {}
  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    if (fail_ > 0) {
      --fail_;
      return "not a list of questions";
    }
    return inner_.complete(prompt);
  }
  BitRow answer_batch(const std::string& q, std::span<const std::string> p) override { return inner_.answer_batch(q, p); }
  std::vector<std::string> prompts;

 private:
  OracleBackend& inner_;
  int fail_;
};

MockBackend mock() { return MockBackend(fx().library, fx().lexicon, 7); }

}  // namespace

TEST(RunRound, TenRecordsWithBatchStats) {
  auto backend = mock();
  const auto& train = fx().data.train;
  const std::span<const FounderProfile> gen(train.data(), 20), eval(train.data() + 20, 20);
  const auto r = run_round(backend, fx().lexicon, gen, eval, RoundContext{fx().hints}, 1, QuestionOrigin::llm, 1);
  ASSERT_EQ(r.records.size(), 10u);
  EXPECT_EQ(r.report.kind, RoundKind::generation);
  EXPECT_NE(r.report.prompt.find(fx().hints[0].text), std::string::npos);
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.stats.batch_size(), 20u);
    EXPECT_EQ(rec.round, 1);
    EXPECT_EQ(rec.eval_founder_ids.size(), 20u);
  }
  EXPECT_EQ(r.records.front().id, "q0001");
  EXPECT_EQ(r.records.back().id, "q0010");
}

TEST(RunRound, OverlappingBatchesRejected) {
  auto backend = mock();
  const auto& train = fx().data.train;
  const std::span<const FounderProfile> gen(train.data(), 20), eval(train.data() + 10, 20);
  EXPECT_THROW(run_round(backend, fx().lexicon, gen, eval, RoundContext{fx().hints}, 1, QuestionOrigin::llm, 1),
               PreconditionError);
}

TEST(RoundStats, DefinitionArithmetic) {
  // YES for 3 of 20 founders, one of them successful
  RoundStats s;
  BitRow answers(20, 0), labels(20, 0);
  answers[0] = answers[1] = answers[2] = 1;
  labels[0] = labels[10] = 1;
  s.counts = confusion(answers, labels);
  EXPECT_EQ(*s.precision(), (Rate{1, 3}));
  EXPECT_EQ(s.predicted(), 3u);
  EXPECT_EQ(s.batch_size(), 20u);
  EXPECT_EQ(*s.recall(), (Rate{1, 2}));
}

TEST(AccumulatePool, HundredTargetRunsTenRounds) {
  auto backend = mock();
  const auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 100, 7);
  EXPECT_EQ(run.pool.questions.size(), 100u);
  EXPECT_EQ(run.rounds.size(), 10u);
  EXPECT_EQ(run.pool.target_size, 100u);
  std::set<std::string> ids;
  for (const auto& q : run.pool.questions) EXPECT_TRUE(ids.insert(q.id).second);
}

TEST(AccumulatePool, DeskScaleTwentyRunsTwoRounds) {
  auto backend = mock();
  const auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 20, 7);
  EXPECT_EQ(run.rounds.size(), 2u);
  EXPECT_THROW(accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 25, 7), PreconditionError);
}

TEST(AccumulatePool, ScoringBatchesCoverTrainingSplitOncePerPass) {
  auto backend = mock();
  const auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 100, 7);
  std::set<std::string> scored;
  for (const auto& r : run.rounds) {
    for (const auto& id : r.eval_batch) EXPECT_TRUE(scored.insert(id).second) << id;
    for (const auto& id : r.gen_batch) {
      EXPECT_EQ(std::find(r.eval_batch.begin(), r.eval_batch.end(), id), r.eval_batch.end());
    }
  }
  EXPECT_EQ(scored.size(), 200u);
}

TEST(AccumulatePool, StatsRecomputeFromStoredBatch) {
  auto backend = mock();
  const auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 100, 7);
  std::map<std::string, const FounderProfile*> by_id;
  for (const auto& p : fx().data.train) by_id[p.id] = &p;
  const auto library = instantiate_library(fx().library, 7);
  for (const auto& q : run.pool.questions) {
    ASSERT_EQ(confusion(q.eval_answers, q.eval_labels), q.stats.counts);
    // stored answers agree with the hidden predicate on the named founders
    const auto& pred = backend.lookup(q.text);
    for (std::size_t i = 0; i < q.eval_founder_ids.size(); ++i) {
      const auto& p = *by_id.at(q.eval_founder_ids[i]);
      ASSERT_EQ(q.eval_labels[i] != 0, p.label);
      ASSERT_EQ(q.eval_answers[i] != 0, pred.evaluate(p));
    }
  }
}

TEST(AccumulatePool, FeedbackPromptCarriesExactlyPreviousRound) {
  auto inner = mock();
  RecordingBackend backend(inner);
  const auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 40, 7);
  ASSERT_EQ(run.rounds.size(), 4u);
  EXPECT_EQ(run.rounds[0].kind, RoundKind::generation);
  for (std::size_t r = 1; r < run.rounds.size(); ++r) {
    const auto& prompt = run.rounds[r].prompt;
    EXPECT_EQ(run.rounds[r].kind, RoundKind::feedback);
    EXPECT_TRUE(prompt.starts_with(prompt_marker::kFeedback));
    const auto stats = feedback_from(std::span(run.pool.questions).subspan((r - 1) * 10, 10));
    const auto expected = build_feedback_prompt(stats, std::vector<std::string>{});
    const auto block_start = expected.find("Previous questions performance:");
    const auto block_end = expected.find("Requirements:");
    EXPECT_NE(prompt.find(expected.substr(block_start, block_end - block_start)), std::string::npos);
    // nothing from two rounds back
    if (r >= 2) {
      for (std::size_t k = (r - 2) * 10; k < (r - 1) * 10; ++k) {
        const auto& text = run.pool.questions[k].text;
        bool in_previous = false;
        for (std::size_t j = (r - 1) * 10; j < r * 10; ++j) in_previous = in_previous || run.pool.questions[j].text == text;
        if (!in_previous) EXPECT_EQ(prompt.find("Question: " + text + "\n"), std::string::npos);
      }
    }
  }
  // each recorded prompt is what the backend saw
  ASSERT_EQ(backend.prompts.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(backend.prompts[r], run.rounds[r].prompt);
}

TEST(AccumulatePool, ReproducibleWithMockAndSeed) {
  auto a = mock();
  auto b = mock();
  const auto x = accumulate_pool(a, fx().lexicon, fx().data.train, fx().hints, 50, 7);
  const auto y = accumulate_pool(b, fx().lexicon, fx().data.train, fx().hints, 50, 7);
  EXPECT_EQ(pool_to_records(x.pool), pool_to_records(y.pool));
}

TEST(AccumulatePool, MalformedResponsesRetriedWithSamePrompt) {
  auto inner = mock();
  RecordingBackend backend(inner, 2);
  const auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 10, 7);
  EXPECT_EQ(run.pool.questions.size(), 10u);
  ASSERT_EQ(backend.prompts.size(), 3u);
  EXPECT_EQ(backend.prompts[0], backend.prompts[2]);
}

TEST(AccumulatePool, PersistentFailureCarriesPartialPool) {
  auto inner = mock();
  QuestgenOptions opts;
  opts.parse_retries = 0;
  opts.round_retries = 0;
  // first round succeeds, then every call fails
  class FailAfter : public OracleBackend {
   public:
    explicit FailAfter(OracleBackend& inner) : inner_(inner) {}
    std::string complete(const std::string& p) override { return calls_++ == 0 ? inner_.complete(p) : "junk"; }
    BitRow answer_batch(const std::string& q, std::span<const std::string> p) override { return inner_.answer_batch(q, p); }

   private:
    OracleBackend& inner_;
    int calls_ = 0;
  } backend(inner);
  try {
    accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 30, 7, opts);
    FAIL();
  } catch (const RoundFailure& e) {
    EXPECT_EQ(e.round(), 2);
    EXPECT_EQ(e.partial_pool().questions.size(), 10u);
    EXPECT_EQ(e.reports().size(), 1u);
  }
}

TEST(InjectExperts, AddsExpertOriginQuestions) {
  auto backend = mock();
  auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 100, 7);
  const std::vector<InsightSummary> experts{{"founders with prior exits", InsightOrigin::expert, {}},
                                            {"technical founders with experience scaling teams", InsightOrigin::expert, {}}};
  const auto same = inject_expert_questions(run, backend, fx().lexicon, fx().data.train, experts, 0, 7);
  EXPECT_EQ(pool_to_records(same.pool), pool_to_records(run.pool));

  run = inject_expert_questions(std::move(run), backend, fx().lexicon, fx().data.train, experts, 20, 7);
  ASSERT_EQ(run.pool.questions.size(), 120u);
  EXPECT_EQ(run.pool.target_size, 120u);
  for (std::size_t i = 0; i < 120; ++i) {
    EXPECT_EQ(run.pool.questions[i].origin, i < 100 ? QuestionOrigin::llm : QuestionOrigin::expert);
  }
  EXPECT_EQ(run.rounds.back().kind, RoundKind::expert);
  EXPECT_NE(run.rounds.back().prompt.find("- technical founders with experience scaling teams\n"), std::string::npos);
}

TEST(PoolRecords, RoundTrip) {
  auto backend = mock();
  const auto run = accumulate_pool(backend, fx().lexicon, fx().data.train, fx().hints, 20, 7);
  const auto records = pool_to_records(run.pool);
  const auto back = pool_from_records(records);
  EXPECT_EQ(pool_to_records(back), records);
  EXPECT_EQ(back.questions[3].stats.counts, run.pool.questions[3].stats.counts);
}
