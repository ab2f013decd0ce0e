#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rrf/answer_matrix.hpp"
#include "rrf/dataset/insights.hpp"
#include "rrf/dataset/profile.hpp"
#include "rrf/dataset/synthetic.hpp"
#include "rrf/ensemble.hpp"
#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/pipeline/config.hpp"
#include "rrf/questgen.hpp"
#include "rrf/refine.hpp"

namespace rrf {

namespace fs = std::filesystem;

// Default file names inside a work directory.
struct ArtifactLayout {
  fs::path root;

  fs::path dataset_dir() const { return root / "dataset"; }
  fs::path pool() const { return root / "pool.jsonl"; }
  fs::path matrix(std::string_view split) const { return root / (std::string(split) + "_matrix.csv"); }
  fs::path refinement() const { return root / "refinement.jsonl"; }
  fs::path model() const { return root / "model.jsonl"; }
  fs::path metrics() const { return root / "metrics.jsonl"; }
  fs::path report_dir() const { return root / "report"; }
};

inline void require_artifact(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw DependencyError("missing " + path.string() + "; run `rrf " + std::string(producer) + "` first");
  }
}

inline fs::path split_file(const fs::path& dataset_dir, std::string_view split) {
  return dataset_dir / (std::string(split) + ".jsonl");
}

// ---- synth ----

inline json cmd_synth(const PipelineConfig& cfg, const fs::path& out_dir) {
  const auto data = generate_synthetic_dataset(cfg.synth, cfg.seed);
  const auto lexicon = cfg.lexicon();
  json counts = json::object();
  for (const auto& [name, part] : {std::pair{"train", &data.train}, {"validation", &data.validation}, {"test", &data.test}}) {
    for (const auto& p : *part) render_profile(p, lexicon);  // every profile must be describable
    write_text_file(split_file(out_dir, name), dump_profiles(cfg.provenance(std::string("dataset/") + name), *part));
    std::size_t positives = 0;
    for (const auto& p : *part) positives += p.label;
    counts[name] = {{"size", part->size()}, {"positives", positives}};
  }
  json manifest{{"meta", cfg.provenance("dataset/manifest").to_json()}, {"scale", cfg.synth.scale}, {"splits", counts}};
  write_text_file(out_dir / "manifest.json", manifest.dump() + "\n");
  return manifest;
}

// ---- generate ----

struct GenerateSummary {
  std::size_t questions = 0;
  std::size_t rounds = 0;
  std::size_t expert_questions = 0;
};

inline void write_pool_run(const PipelineConfig& cfg, const PoolRun& run, const fs::path& pool_path,
                           const fs::path& rounds_path) {
  write_json_lines(pool_path, cfg.provenance("pool"), pool_to_records(run.pool));
  std::vector<json> rounds;
  for (const auto& r : run.rounds) rounds.push_back(to_json(r));
  write_json_lines(rounds_path, cfg.provenance("rounds"), rounds);
}

inline GenerateSummary cmd_generate(const PipelineConfig& cfg, const fs::path& dataset_dir, const fs::path& out_pool,
                                    OracleBackend& backend) {
  require_artifact(split_file(dataset_dir, "train"), "synth");
  const auto train = read_profiles(split_file(dataset_dir, "train"));
  const auto lexicon = cfg.lexicon();
  const auto rounds_path = out_pool.parent_path() / "rounds.jsonl";

  std::vector<FounderProfile> successful;
  for (const auto& p : train) {
    if (p.label) successful.push_back(p);
  }
  const auto hints = sample_insight_summaries(successful, cfg.insights, backend, lexicon, cfg.seed);
  std::vector<json> hint_records;
  for (const auto& h : hints) hint_records.push_back({{"text", h.text}, {"source_ids", h.source_ids}});
  write_json_lines(out_pool.parent_path() / "insights.jsonl", cfg.provenance("insights"), hint_records);

  PoolRun run;
  try {
    run = accumulate_pool(backend, lexicon, train, hints, cfg.pool_target, cfg.seed, cfg.questgen);
    if (cfg.expert_descriptors && cfg.expert_count > 0) {
      const auto experts = load_expert_descriptors(*cfg.expert_descriptors);
      run = inject_expert_questions(std::move(run), backend, lexicon, train, experts, cfg.expert_count, cfg.seed,
                                    cfg.questgen);
    }
  } catch (const RoundFailure& failure) {
    PoolRun partial{failure.partial_pool(), failure.reports()};
    auto partial_path = out_pool;
    partial_path.replace_extension(".partial.jsonl");
    write_pool_run(cfg, partial, partial_path, rounds_path);
    throw BackendError(std::string(failure.what()) + "; partial pool of " +
                       std::to_string(partial.pool.questions.size()) + " questions written to " + partial_path.string());
  }
  write_pool_run(cfg, run, out_pool, rounds_path);

  GenerateSummary s;
  s.questions = run.pool.questions.size();
  s.rounds = run.rounds.size();
  for (const auto& q : run.pool.questions) s.expert_questions += q.origin == QuestionOrigin::expert;
  return s;
}

inline QuestionPool read_pool(const fs::path& path) {
  require_artifact(path, "generate");
  return pool_from_records(read_json_lines(path).records);
}

// ---- evaluate ----

struct EvaluateOptions {
  // Stop after this many newly answered questions, leaving the progress file
  // behind as an interrupted run would.
  std::optional<std::size_t> stop_after;
};

struct EvaluateSummary {
  bool complete = false;
  std::size_t answered = 0;   // rows obtained in this invocation
  std::size_t resumed = 0;    // rows reused from an earlier invocation
  std::vector<std::string> absent;
};

inline fs::path progress_file(const fs::path& out_matrix) {
  auto p = out_matrix;
  p += ".progress.jsonl";
  return p;
}

// Answers every pool question for every founder of one split. Finished rows
// are appended to a progress file as they arrive, so an interrupted run
// resumes where it stopped.
inline EvaluateSummary cmd_evaluate(const PipelineConfig& cfg, const fs::path& pool_path, const fs::path& dataset_dir,
                                    std::string_view split, const fs::path& out_matrix, OracleBackend& backend,
                                    const EvaluateOptions& options = {}, std::ostream& log = std::clog) {
  if (split != "validation" && split != "test") throw ConfigError("split must be validation or test");
  const auto pool = read_pool(pool_path);
  require_artifact(split_file(dataset_dir, split), "synth");
  const auto founders = read_profiles(split_file(dataset_dir, split));
  const auto lexicon = cfg.lexicon();
  const auto meta = cfg.provenance("matrix/" + std::string(split));

  std::vector<std::string> rendered;
  rendered.reserve(founders.size());
  for (const auto& f : founders) rendered.push_back(render_profile(f, lexicon));

  const auto progress = progress_file(out_matrix);
  std::map<std::string, BitRow> done;
  if (fs::exists(progress)) {
    const auto lines = read_json_lines(progress);
    if (lines.meta && *lines.meta == meta) {
      for (const auto& r : lines.records) {
        if (r.contains("answers")) done[r.at("id").get<std::string>()] = bits_from_string(r.at("answers").get<std::string>());
      }
    } else {
      log << "warning: discarding progress file from a different configuration: " << progress << "\n";
      fs::remove(progress);
    }
  }
  if (!fs::exists(progress)) write_text_file(progress, json{{"meta", meta.to_json()}}.dump() + "\n");

  EvaluateSummary summary;
  std::map<std::string, std::string> failures;
  {
    std::ofstream out(progress, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + progress.string());
    for (const auto& q : pool.questions) {
      if (done.contains(q.id)) {
        ++summary.resumed;
        continue;
      }
      if (options.stop_after && summary.answered + failures.size() >= *options.stop_after) return summary;
      json line;
      try {
        auto answers = backend.answer_batch(q.text, rendered);
        if (answers.size() != founders.size()) throw BackendError("answer count does not match founder count");
        line = {{"id", q.id}, {"answers", bits_to_string(answers)}};
        done[q.id] = std::move(answers);
        ++summary.answered;
      } catch (const BackendError& e) {
        line = {{"id", q.id}, {"error", e.what()}};
        failures[q.id] = e.what();
        log << "warning: question " << q.id << " left absent: " << e.what() << "\n";
      }
      out << line.dump() << '\n';
      out.flush();
    }
  }

  AnswerMatrix m;
  for (const auto& f : founders) {
    m.founder_ids.push_back(f.id);
    m.labels.push_back(f.label ? 1 : 0);
  }
  for (const auto& q : pool.questions) {
    if (auto it = done.find(q.id); it != done.end()) {
      m.question_ids.push_back(q.id);
      m.answers.push_back(it->second);
    } else {
      m.absent_question_ids.push_back(q.id);
    }
  }
  write_matrix(out_matrix, m, meta);
  fs::remove(progress);
  summary.complete = true;
  summary.absent = m.absent_question_ids;
  return summary;
}

inline AnswerMatrix read_matrix_for(const fs::path& path, std::string_view split, std::ostream& log) {
  require_artifact(path, "evaluate --split " + std::string(split));
  auto file = read_matrix(path);
  if (!file.matrix.absent_question_ids.empty()) {
    log << "warning: " << file.matrix.absent_question_ids.size() << " absent question rows in " << path
        << " are excluded\n";
  }
  return std::move(file.matrix);
}

// ---- refine ----

inline RefinementReport cmd_refine(const PipelineConfig& cfg, const fs::path& matrix_path, const fs::path& out_report,
                                   std::ostream& log = std::clog) {
  const auto m = read_matrix_for(matrix_path, "validation", log);
  const auto report = refine(m, cfg.refine_options());
  write_json_lines(out_report, cfg.provenance("refinement"), refinement_to_records(m, report));
  return report;
}

inline RefinementReport read_refinement(const fs::path& path) {
  require_artifact(path, "refine");
  return refinement_from_records(read_json_lines(path).records);
}

// ---- tune ----

inline json metrics_json(const EnsembleMetrics& m) {
  return json{{"precision", rate_json(m.precision())},
              {"recall", rate_json(m.recall())},
              {"predicted", m.predicted()},
              {"tp", m.counts.tp},
              {"fp", m.counts.fp},
              {"fn", m.counts.fn_},
              {"tn", m.counts.tn}};
}

inline const QuestionRecord& find_question(const QuestionPool& pool, std::string_view id) {
  for (const auto& q : pool.questions) {
    if (q.id == id) return q;
  }
  throw LookupError("question " + std::string(id) + " not in pool");
}

inline GridSearchOutcome cmd_tune(const PipelineConfig& cfg, const fs::path& matrix_path,
                                  const fs::path& refinement_path, const fs::path& pool_path, const fs::path& out_model,
                                  std::ostream& log = std::clog) {
  const auto m = read_matrix_for(matrix_path, "validation", log);
  const auto report = read_refinement(refinement_path);
  const auto pool = read_pool(pool_path);
  const auto constraints = cfg.constraints_for(m.num_founders());
  const json constraint_json{{"min_predicted", constraints.min_predicted},
                             {"max_predicted", constraints.max_predicted},
                             {"min_questions", constraints.min_questions}};
  if (report.ranked_ids.empty()) {
    const Infeasible none{"no questions survived refinement"};
    write_json_lines(out_model, cfg.provenance("model"), {json{{"infeasible", none.reason}, {"constraints", constraint_json}}});
    return none;
  }
  auto outcome = grid_search(m, report.ranked_ids, constraints);
  std::vector<json> records;
  if (const auto* bad = std::get_if<Infeasible>(&outcome)) {
    records.push_back({{"infeasible", bad->reason}, {"constraints", constraint_json}});
  } else {
    const auto& model = std::get<TunedModel>(outcome);
    records.push_back({{"model",
                        {{"n_questions", model.config.n_questions},
                         {"vote_threshold", model.config.vote_threshold},
                         {"validation", metrics_json(model.validation)},
                         {"validation_founders", m.num_founders()},
                         {"constraints", constraint_json}}}});
    for (std::size_t k = 0; k < model.ranked_ids.size(); ++k) {
      const auto& q = find_question(pool, model.ranked_ids[k]);
      records.push_back({{"rank", k + 1}, {"id", q.id}, {"text", q.text}, {"origin", to_string(q.origin)}});
    }
  }
  write_json_lines(out_model, cfg.provenance("model"), records);
  return outcome;
}

struct ModelQuestion {
  std::string id;
  std::string text;
  std::string origin;
};

struct ModelFile {
  std::optional<TunedModel> model;
  std::string infeasible_reason;
  std::vector<ModelQuestion> questions;
};

inline ModelFile read_model(const fs::path& path) {
  require_artifact(path, "tune");
  const auto lines = read_json_lines(path);
  ModelFile out;
  for (const auto& r : lines.records) {
    if (r.contains("infeasible")) {
      out.infeasible_reason = r["infeasible"].get<std::string>();
    } else if (r.contains("model")) {
      const auto& mj = r["model"];
      TunedModel model;
      model.config = {mj.at("n_questions").get<std::size_t>(), mj.at("vote_threshold").get<std::size_t>()};
      const auto& v = mj.at("validation");
      model.validation.counts = {v.at("tp").get<std::uint64_t>(), v.at("fp").get<std::uint64_t>(),
                                 v.at("fn").get<std::uint64_t>(), v.at("tn").get<std::uint64_t>()};
      out.model = std::move(model);
    } else {
      out.questions.push_back(
          {r.at("id").get<std::string>(), r.at("text").get<std::string>(), r.at("origin").get<std::string>()});
    }
  }
  if (out.model) {
    for (const auto& q : out.questions) out.model->ranked_ids.push_back(q.id);
    if (out.model->ranked_ids.size() != out.model->config.n_questions) {
      throw IoError(path.string() + ": model lists " + std::to_string(out.model->ranked_ids.size()) +
                    " questions for N = " + std::to_string(out.model->config.n_questions));
    }
  }
  return out;
}

// ---- predict ----

inline json reference_points_json() {
  namespace ref = reference;
  return json{{"note", "published results on proprietary data; not reproducible with synthetic data"},
              {"validation_precision", ref::kValidationPrecision},
              {"n_questions", ref::kTunedQuestions},
              {"vote_threshold", ref::kTunedThreshold},
              {"test_precision", ref::kTestPrecision},
              {"test_lift", ref::kTestPrecision / ref::kEvaluationBaseRate},
              {"test_precision_with_experts", ref::kTestPrecisionWithExperts},
              {"accelerator_precision", ref::kAcceleratorPrecision},
              {"accelerator_recall", ref::kAcceleratorRecall}};
}

inline TestEvaluation cmd_predict(const PipelineConfig& cfg, const fs::path& model_path, const fs::path& matrix_path,
                                  const fs::path& out_metrics, std::ostream& log = std::clog) {
  const auto model = read_model(model_path);
  if (!model.model) throw DependencyError("model file holds no tuned model (" + model.infeasible_reason + ")");
  const auto m = read_matrix_for(matrix_path, "test", log);
  const auto eval = evaluate_on_test(*model.model, m);
  json test = metrics_json(eval.metrics);
  test["base_rate"] = eval.base_rate.value();
  test["lift"] = eval.lift ? json(*eval.lift) : json(nullptr);
  test["founders"] = m.num_founders();
  write_json_lines(out_metrics, cfg.provenance("metrics"),
                   {json{{"test", test}, {"config", {{"n_questions", model.model->config.n_questions},
                                                      {"vote_threshold", model.model->config.vote_threshold}}}},
                    json{{"reference", reference_points_json()}}});
  return eval;
}

// ---- report ----

inline std::string csv_number(double x) { return json(x).dump(); }

struct ReportSummary {
  std::size_t trajectory_rows = 0;
  std::size_t heatmap_cells = 0;
  std::size_t model_card_questions = 0;
};

inline std::string format_lift(double lift) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fx", lift);
  return buf;
}

inline std::string describe_rate(const std::optional<Rate>& r) {
  if (!r) return "undefined";
  return format_percent(r->value()) + " (" + std::to_string(r->num) + "/" + std::to_string(r->den) + ")";
}

inline ReportSummary cmd_report(const PipelineConfig& cfg, const ArtifactLayout& artifacts, const fs::path& out_dir,
                                std::ostream& log = std::clog) {
  const auto m = read_matrix_for(artifacts.matrix("validation"), "validation", log);
  const auto report = read_refinement(artifacts.refinement());
  const auto pool = read_pool(artifacts.pool());
  const auto model = read_model(artifacts.model());
  ReportSummary summary;

  // trajectories: one row per present question, in pool order
  std::map<std::string, std::string> disposition;
  for (const auto& id : report.ranked_ids) disposition[id] = "retained";
  for (const auto& f : report.removed_by_filter) disposition[f.id] = "filtered";
  for (const auto& d : report.removed_by_dedup) disposition[d.removed] = "deduplicated";
  std::string traj = cfg.provenance("report/trajectories").csv_comment() + "\nquestion_id,origin,disposition";
  for (std::size_t k = 1; k <= m.num_founders(); ++k) traj += "," + std::to_string(k);
  traj += '\n';
  for (std::size_t q = 0; q < m.num_questions(); ++q) {
    const auto& id = m.question_ids[q];
    const auto t = trajectory(m.answers[q], m.labels);
    traj += id + "," + to_string(find_question(pool, id).origin) + "," + disposition.at(id);
    for (std::size_t k = 0; k < t.size(); ++k) {
      traj += ',';
      if (t.defined[k]) traj += csv_number(t.values[k]);
    }
    traj += '\n';
    ++summary.trajectory_rows;
  }
  write_text_file(out_dir / "trajectories.csv", traj);

  // heatmap over every valid (N, X)
  std::string heat = cfg.provenance("report/heatmap").csv_comment() + "\nN,X,precision,predicted_count\n";
  if (!report.ranked_ids.empty()) {
    const auto r = report.ranked_ids.size();
    for (const auto& cell : heatmap(m, report.ranked_ids, {1, r}, {1, r})) {
      heat += std::to_string(cell.n_questions) + "," + std::to_string(cell.vote_threshold) + ",";
      if (cell.precision) heat += csv_number(cell.precision->value());
      heat += "," + std::to_string(cell.predicted) + "\n";
      ++summary.heatmap_cells;
    }
  }
  write_text_file(out_dir / "heatmap.csv", heat);

  // model card
  std::string card;
  card += "Rule ensemble model card\n";
  card += "config_hash: " + cfg.hash + "  seed: " + std::to_string(cfg.seed) + "\n\n";
  if (!model.model) {
    card += "No feasible configuration: " + model.infeasible_reason + "\n";
  } else {
    const auto& tm = *model.model;
    card += "Ensemble: top " + std::to_string(tm.config.n_questions) + " questions; predict successful with at least " +
            std::to_string(tm.config.vote_threshold) + " YES votes.\n";
    card += "Validation: precision " + describe_rate(tm.validation.precision()) + ", recall " +
            describe_rate(tm.validation.recall()) + ", predicted " + std::to_string(tm.validation.predicted()) + "\n";
    if (fs::exists(artifacts.metrics())) {
      for (const auto& r : read_json_lines(artifacts.metrics()).records) {
        if (!r.contains("test")) continue;
        const auto& t = r["test"];
        card += "Test: precision " + (t["precision"].is_null() ? std::string("undefined") : format_percent(t["precision"].get<double>())) +
                ", recall " + (t["recall"].is_null() ? std::string("undefined") : format_percent(t["recall"].get<double>())) +
                ", predicted " + std::to_string(t["predicted"].get<std::uint64_t>()) + ", base rate " +
                format_percent(t["base_rate"].get<double>()) + ", lift " +
                (t["lift"].is_null() ? std::string("undefined") : format_lift(t["lift"].get<double>())) + "\n";
      }
    }
    card += "\nQuestions:\n";
    for (std::size_t k = 0; k < model.questions.size(); ++k) {
      const auto& q = model.questions[k];
      const auto row = m.find(q.id);
      card += std::to_string(k + 1) + ". [" + q.origin + "] " + q.text;
      if (row) card += "  (validation precision " + describe_rate(m.precision_of(*row)) + ")";
      card += "\n";
      ++summary.model_card_questions;
    }
  }
  namespace ref = reference;
  card += "\nPublished reference points (proprietary data, not reproduced here):\n";
  card += "- tuned ensemble N = " + std::to_string(ref::kTunedQuestions) + ", X = " + std::to_string(ref::kTunedThreshold) +
          ", validation precision " + format_percent(ref::kValidationPrecision) + "\n";
  card += "- test precision " + format_percent(ref::kTestPrecision) + " at a " + format_percent(ref::kEvaluationBaseRate) +
          " base rate; " + format_percent(ref::kTestPrecisionWithExperts) + " with expert-informed questions\n";
  card += "- accelerator benchmark: precision " + format_percent(ref::kAcceleratorPrecision) + " at recall " +
          format_percent(ref::kAcceleratorRecall) + "\n";
  write_text_file(out_dir / "model_card.txt", card);
  return summary;
}

// ---- whole pipeline ----

struct PipelineResult {
  GridSearchOutcome tuned;
  std::optional<TestEvaluation> test;
};

// synth -> generate -> evaluate (validation, test) -> refine -> tune -> predict -> report
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const ArtifactLayout& layout,
                                   std::ostream& log = std::clog) {
  auto backend = cfg.make_backend();
  cmd_synth(cfg, layout.dataset_dir());
  cmd_generate(cfg, layout.dataset_dir(), layout.pool(), *backend);
  for (std::string_view split : {"validation", "test"}) {
    cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), split, layout.matrix(split), *backend, {}, log);
  }
  cmd_refine(cfg, layout.matrix("validation"), layout.refinement(), log);
  PipelineResult result{cmd_tune(cfg, layout.matrix("validation"), layout.refinement(), layout.pool(), layout.model(), log),
                        std::nullopt};
  if (std::holds_alternative<TunedModel>(result.tuned)) {
    result.test = cmd_predict(cfg, layout.model(), layout.matrix("test"), layout.metrics(), log);
  }
  cmd_report(cfg, layout, layout.report_dir(), log);
  return result;
}

}  // namespace rrf
