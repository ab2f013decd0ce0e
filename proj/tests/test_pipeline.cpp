#include <gtest/gtest.h>

#include <sstream>

#include "rrf/pipeline/commands.hpp"
#include "support.hpp"

using namespace rrf;

namespace {

PipelineConfig load(const ConfigOverrides& o = {}) {
  return PipelineConfig::load(testkit::config_dir() / "default.json", o);
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

// A pipeline config with a 30-question pool for faster tests.
PipelineConfig small() {
  auto j = json::parse(read_text_file(testkit::config_dir() / "default.json"));
  j["questgen"]["pool_target"] = 30;
  return PipelineConfig::from_json(j, testkit::config_dir());
}

}  // namespace

TEST(Config, LoadsDefaultsAndResolvesPaths) {
  const auto cfg = load();
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.backend, BackendKind::mock);
  EXPECT_TRUE(fs::exists(cfg.lexicon_path));
  EXPECT_TRUE(fs::exists(cfg.mock_library_path));
  EXPECT_EQ(cfg.pool_target, 100u);
  EXPECT_EQ(cfg.hash.size(), 16u);
}

TEST(Config, OverridesChangeHash) {
  const auto a = load();
  const auto b = load({42, std::nullopt, std::nullopt});
  EXPECT_EQ(b.seed, 42u);
  EXPECT_NE(a.hash, b.hash);
  EXPECT_THROW(load({std::nullopt, std::string("carrier-pigeon"), std::nullopt}), ConfigError);
}

TEST(Config, RejectsBadValues) {
  auto j = json::parse(read_text_file(testkit::config_dir() / "default.json"));
  auto bad = j;
  bad["questgen"]["pool_target"] = 15;
  EXPECT_THROW(PipelineConfig::from_json(bad, testkit::config_dir()), ConfigError);
  bad = j;
  bad["refine"]["jaccard_threshold"] = 0.0;
  EXPECT_THROW(PipelineConfig::from_json(bad, testkit::config_dir()), ConfigError);
  bad = j;
  bad["dataset"]["lexicon"] = "missing.json";
  EXPECT_THROW(PipelineConfig::from_json(bad, testkit::config_dir()), ConfigError);
  bad = j;
  bad["ensemble"]["min_predicted"] = 60;
  EXPECT_THROW(PipelineConfig::from_json(bad, testkit::config_dir()), ConfigError);
  bad = j;
  bad["oracle"]["api_key"] = "sk-test";
  EXPECT_THROW(PipelineConfig::from_json(bad, testkit::config_dir()), ConfigError);
}

TEST(Config, ConstraintsScaleWithEvaluationSize) {
  const auto cfg = load();
  const auto c500 = cfg.constraints_for(500);
  EXPECT_EQ(c500.min_predicted, 30u);
  EXPECT_EQ(c500.max_predicted, 50u);
  const auto c1000 = cfg.constraints_for(1000);
  EXPECT_EQ(c1000.min_predicted, 60u);
  EXPECT_EQ(c1000.max_predicted, 100u);
  EXPECT_EQ(c1000.min_questions, 10u);
}

TEST(Synth, ManifestAndByteIdenticalRerun) {
  testkit::TempDir a, b;
  const auto cfg = load();
  const auto m = cmd_synth(cfg, a.path());
  EXPECT_EQ(m["splits"]["train"]["size"], 200);
  EXPECT_EQ(m["splits"]["validation"]["size"], 500);
  EXPECT_EQ(m["splits"]["test"]["positives"], 50);
  cmd_synth(cfg, b.path());
  for (const auto* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "manifest.json"}) {
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
  }
}

TEST(Synth, ScaleTwo) {
  auto j = json::parse(read_text_file(testkit::config_dir() / "default.json"));
  j["dataset"]["scale"] = 2;
  const auto cfg = PipelineConfig::from_json(j, testkit::config_dir());
  testkit::TempDir dir;
  const auto m = cmd_synth(cfg, dir.path());
  EXPECT_EQ(m["splits"]["train"]["size"], 400);
  EXPECT_EQ(m["splits"]["train"]["positives"], 200);
  EXPECT_EQ(m["splits"]["test"]["size"], 1000);
  EXPECT_EQ(m["splits"]["test"]["positives"], 100);
}

TEST(Dependencies, MissingUpstreamNamesCommand) {
  testkit::TempDir dir;
  const auto cfg = load();
  const ArtifactLayout layout{dir.path()};
  auto backend = cfg.make_backend();
  try {
    cmd_generate(cfg, layout.dataset_dir(), layout.pool(), *backend);
    FAIL();
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("rrf synth"), std::string::npos);
  }
  cmd_synth(cfg, layout.dataset_dir());
  try {
    cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "validation", layout.matrix("validation"), *backend);
    FAIL();
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find("rrf generate"), std::string::npos);
  }
  EXPECT_THROW(cmd_refine(cfg, layout.matrix("validation"), layout.refinement()), DependencyError);
  EXPECT_THROW(cmd_tune(cfg, layout.matrix("validation"), layout.refinement(), layout.pool(), layout.model()),
               DependencyError);
  EXPECT_THROW(cmd_predict(cfg, layout.model(), layout.matrix("test"), layout.metrics()), DependencyError);
}

TEST(Generate, PoolWithExpertsHas120Questions) {
  testkit::TempDir dir;
  const auto cfg = load({std::nullopt, std::nullopt, (testkit::config_dir() / "expert_descriptors.txt").string()});
  const ArtifactLayout layout{dir.path()};
  auto backend = cfg.make_backend();
  cmd_synth(cfg, layout.dataset_dir());
  const auto s = cmd_generate(cfg, layout.dataset_dir(), layout.pool(), *backend);
  EXPECT_EQ(s.questions, 120u);
  EXPECT_EQ(s.expert_questions, 20u);
  EXPECT_EQ(s.rounds, 12u);
  EXPECT_EQ(read_pool(layout.pool()).questions.size(), 120u);
  EXPECT_EQ(read_json_lines(dir.path() / "rounds.jsonl").records.size(), 12u);
}

TEST(Evaluate, MatrixShapeAndProvenance) {
  testkit::TempDir dir;
  const auto cfg = load();
  const ArtifactLayout layout{dir.path()};
  auto backend = cfg.make_backend();
  cmd_synth(cfg, layout.dataset_dir());
  cmd_generate(cfg, layout.dataset_dir(), layout.pool(), *backend);
  const auto s = cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "validation", layout.matrix("validation"), *backend);
  EXPECT_TRUE(s.complete);
  const auto file = read_matrix(layout.matrix("validation"));
  EXPECT_EQ(file.matrix.num_questions(), 100u);
  EXPECT_EQ(file.matrix.num_founders(), 500u);
  ASSERT_TRUE(file.provenance.has_value());
  EXPECT_EQ(file.provenance->config_hash, cfg.hash);
  EXPECT_FALSE(fs::exists(progress_file(layout.matrix("validation"))));
  EXPECT_THROW(cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "train", dir.path() / "x.csv", *backend),
               ConfigError);
}

TEST(Evaluate, ResumeAfterInterruptionGivesIdenticalMatrix) {
  testkit::TempDir dir;
  const auto cfg = small();
  const ArtifactLayout layout{dir.path()};
  auto backend = cfg.make_backend();
  cmd_synth(cfg, layout.dataset_dir());
  cmd_generate(cfg, layout.dataset_dir(), layout.pool(), *backend);
  const auto full = dir.path() / "full.csv";
  cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "test", full, *backend);

  const auto out = layout.matrix("test");
  auto fresh = cfg.make_backend();
  const auto first = cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "test", out, *fresh, {12});
  EXPECT_FALSE(first.complete);
  EXPECT_EQ(first.answered, 12u);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_TRUE(fs::exists(progress_file(out)));

  auto again = cfg.make_backend();
  const auto second = cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "test", out, *again);
  EXPECT_TRUE(second.complete);
  EXPECT_EQ(second.resumed, 12u);
  EXPECT_EQ(second.answered, 18u);
  EXPECT_EQ(slurp(out), slurp(full));
}

namespace {

// Refuses one question, as a flaky oracle might.
class RefusingBackend : public OracleBackend {
 public:
  RefusingBackend(OracleBackend& inner, std::string refused) : inner_(inner), refused_(std::move(refused)) {}
  std::string complete(const std::string& p) override { return inner_.complete(p); }
  BitRow answer_batch(const std::string& q, std::span<const std::string> p) override {
    if (q == refused_) throw BackendError("refused");
    return inner_.answer_batch(q, p);
  }

 private:
  OracleBackend& inner_;
  std::string refused_;
};

}  // namespace

TEST(Evaluate, FailedRowsAreAbsentAndExcludedDownstream) {
  testkit::TempDir dir;
  const auto cfg = small();
  const ArtifactLayout layout{dir.path()};
  auto backend = cfg.make_backend();
  cmd_synth(cfg, layout.dataset_dir());
  cmd_generate(cfg, layout.dataset_dir(), layout.pool(), *backend);
  const auto pool = read_pool(layout.pool());
  RefusingBackend flaky(*backend, pool.questions[4].text);
  std::ostringstream log;
  const auto s =
      cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "validation", layout.matrix("validation"), flaky, {}, log);
  EXPECT_TRUE(s.complete);
  // the same text may appear under more than one id
  std::size_t refused_ids = 0;
  for (const auto& q : pool.questions) refused_ids += q.text == pool.questions[4].text;
  EXPECT_EQ(s.absent.size(), refused_ids);
  EXPECT_NE(log.str().find("left absent"), std::string::npos);
  const auto m = read_matrix(layout.matrix("validation")).matrix;
  EXPECT_EQ(m.num_questions() + m.absent_question_ids.size(), 30u);

  std::ostringstream refine_log;
  const auto report = cmd_refine(cfg, layout.matrix("validation"), layout.refinement(), refine_log);
  EXPECT_EQ(report.total(), 30u - refused_ids);
  EXPECT_NE(refine_log.str().find("absent"), std::string::npos);
}

TEST(Tune, InfeasibleConstraintsAreReportedNotThrown) {
  testkit::TempDir dir;
  auto j = json::parse(read_text_file(testkit::config_dir() / "default.json"));
  j["questgen"]["pool_target"] = 30;
  j["ensemble"]["min_predicted"] = 490;
  j["ensemble"]["max_predicted"] = 495;
  j["ensemble"]["min_questions"] = 25;
  const auto cfg = PipelineConfig::from_json(j, testkit::config_dir());
  const ArtifactLayout layout{dir.path()};
  auto backend = cfg.make_backend();
  cmd_synth(cfg, layout.dataset_dir());
  cmd_generate(cfg, layout.dataset_dir(), layout.pool(), *backend);
  cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), "validation", layout.matrix("validation"), *backend);
  cmd_refine(cfg, layout.matrix("validation"), layout.refinement());
  const auto out = cmd_tune(cfg, layout.matrix("validation"), layout.refinement(), layout.pool(), layout.model());
  ASSERT_TRUE(std::holds_alternative<Infeasible>(out));
  const auto model = read_model(layout.model());
  EXPECT_FALSE(model.model.has_value());
  EXPECT_FALSE(model.infeasible_reason.empty());
  EXPECT_THROW(cmd_predict(cfg, layout.model(), layout.matrix("validation"), layout.metrics()), DependencyError);
}

TEST(RunPipeline, ArtifactsAreConsistent) {
  testkit::TempDir dir;
  const auto cfg = load();
  const ArtifactLayout layout{dir.path()};
  std::ostringstream log;
  const auto result = run_pipeline(cfg, layout, log);
  ASSERT_TRUE(std::holds_alternative<TunedModel>(result.tuned));
  const auto& model = std::get<TunedModel>(result.tuned);
  const auto file = read_model(layout.model());
  ASSERT_TRUE(file.model.has_value());
  EXPECT_EQ(file.model->config, model.config);
  EXPECT_EQ(file.model->ranked_ids, model.ranked_ids);
  EXPECT_EQ(file.questions.size(), model.config.n_questions);

  // every artifact carries the same config hash
  for (const auto* f : {"pool.jsonl", "rounds.jsonl", "insights.jsonl", "refinement.jsonl", "model.jsonl", "metrics.jsonl"}) {
    const auto lines = read_json_lines(dir.path() / f);
    ASSERT_TRUE(lines.meta.has_value()) << f;
    EXPECT_EQ(lines.meta->config_hash, cfg.hash) << f;
  }
  for (const auto* f : {"validation_matrix.csv", "test_matrix.csv", "report/heatmap.csv", "report/trajectories.csv"}) {
    const auto first = split_lines(slurp(dir.path() / f)).front();
    const auto p = Provenance::parse_csv_comment(first);
    ASSERT_TRUE(p.has_value()) << f;
    EXPECT_EQ(p->config_hash, cfg.hash) << f;
  }

  // trajectories: one row per matrix question, one column per founder
  const auto traj = split_lines(slurp(layout.report_dir() / "trajectories.csv"));
  EXPECT_EQ(traj.size(), 2u + 100u);
  EXPECT_EQ(split(traj[1], ',').size(), 3u + 500u);

  const auto card = slurp(layout.report_dir() / "model_card.txt");
  EXPECT_NE(card.find("Published reference points"), std::string::npos);
}
