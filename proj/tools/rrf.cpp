#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "rrf/pipeline/commands.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config = "config/default.json";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> experts;
  std::string workdir = "run";
};

rrf::PipelineConfig load_config(const GlobalOptions& g) {
  return rrf::PipelineConfig::load(g.config, rrf::ConfigOverrides{g.seed, g.backend, g.experts});
}

void print_metrics(const char* label, const rrf::EnsembleMetrics& m) {
  std::cout << label << ": precision " << rrf::format_percent(m.precision()) << ", recall "
            << rrf::format_percent(m.recall()) << ", predicted " << m.predicted() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random rule forest: LLM-generated YES/NO questions combined by threshold voting"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "pipeline configuration (JSON)")->capture_default_str();
  app.add_option("--seed", g.seed, "override the configured seed");
  app.add_option("--backend", g.backend, "override the oracle backend")->check(CLI::IsMember({"mock", "wire"}));
  app.add_option("--expert-descriptors", g.experts, "expert descriptor file; adds expert-informed questions");
  app.add_option("--workdir", g.workdir, "directory holding every artifact")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "generate the synthetic founder dataset");
  std::optional<std::string> synth_out;
  synth->add_option("--out", synth_out, "output directory (default <workdir>/dataset)");

  auto* generate = app.add_subcommand("generate", "build the question pool");
  std::optional<std::string> gen_out;
  generate->add_option("--out", gen_out, "pool file (default <workdir>/pool.jsonl)");

  auto* evaluate = app.add_subcommand("evaluate", "answer every pool question for one split");
  std::string split = "validation";
  std::optional<std::size_t> stop_after;
  std::optional<std::string> eval_out;
  evaluate->add_option("--split", split)->check(CLI::IsMember({"validation", "test"}))->capture_default_str();
  evaluate->add_option("--out", eval_out, "matrix file (default <workdir>/<split>_matrix.csv)");
  evaluate->add_option("--stop-after", stop_after, "stop after this many questions; rerun to resume");

  auto* refine = app.add_subcommand("refine", "filter, de-duplicate and rank questions");
  auto* tune = app.add_subcommand("tune", "grid search over (N, X)");
  auto* predict = app.add_subcommand("predict", "score the tuned ensemble on the test split");
  auto* report = app.add_subcommand("report", "trajectories, heatmap and model card");
  auto* run = app.add_subcommand("run", "every stage in order");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load_config(g);
    const rrf::ArtifactLayout layout{g.workdir};
    if (*synth) {
      const fs::path out = synth_out ? fs::path(*synth_out) : layout.dataset_dir();
      const auto manifest = rrf::cmd_synth(cfg, out);
      std::cout << "dataset written to " << out.string() << ": " << manifest["splits"].dump() << "\n";
    } else if (*generate) {
      auto backend = cfg.make_backend();
      const fs::path out = gen_out ? fs::path(*gen_out) : layout.pool();
      const auto s = rrf::cmd_generate(cfg, layout.dataset_dir(), out, *backend);
      std::cout << s.questions << " questions (" << s.expert_questions << " expert) from " << s.rounds
                << " rounds written to " << out.string() << "\n";
    } else if (*evaluate) {
      auto backend = cfg.make_backend();
      const fs::path out = eval_out ? fs::path(*eval_out) : layout.matrix(split);
      const auto s = rrf::cmd_evaluate(cfg, layout.pool(), layout.dataset_dir(), split, out, *backend,
                                       rrf::EvaluateOptions{stop_after});
      if (!s.complete) {
        std::cout << "stopped after " << s.answered << " questions; rerun to resume\n";
        return 3;
      }
      std::cout << out.string() << ": " << s.answered << " answered, " << s.resumed << " resumed, " << s.absent.size()
                << " absent\n";
    } else if (*refine) {
      const auto r = rrf::cmd_refine(cfg, layout.matrix("validation"), layout.refinement());
      std::cout << r.ranked_ids.size() << " questions retained, " << r.removed_by_filter.size() << " filtered, "
                << r.removed_by_dedup.size() << " de-duplicated\n";
    } else if (*tune) {
      const auto outcome =
          rrf::cmd_tune(cfg, layout.matrix("validation"), layout.refinement(), layout.pool(), layout.model());
      if (const auto* bad = std::get_if<rrf::Infeasible>(&outcome)) {
        std::cerr << "infeasible: " << bad->reason << "\n";
        return 2;
      }
      const auto& m = std::get<rrf::TunedModel>(outcome);
      std::cout << "N = " << m.config.n_questions << ", X = " << m.config.vote_threshold << "\n";
      print_metrics("validation", m.validation);
    } else if (*predict) {
      const auto e = rrf::cmd_predict(cfg, layout.model(), layout.matrix("test"), layout.metrics());
      print_metrics("test", e.metrics);
      std::cout << "base rate " << rrf::format_percent(e.base_rate.value()) << ", lift "
                << (e.lift ? std::to_string(*e.lift) : std::string("n/a")) << "\n";
    } else if (*report) {
      const auto s = rrf::cmd_report(cfg, layout, layout.report_dir());
      std::cout << "report written to " << layout.report_dir().string() << ": " << s.trajectory_rows
                << " trajectories, " << s.heatmap_cells << " heatmap cells, " << s.model_card_questions
                << " model card questions\n";
    } else if (*run) {
      const auto r = rrf::run_pipeline(cfg, layout);
      if (const auto* bad = std::get_if<rrf::Infeasible>(&r.tuned)) {
        std::cerr << "infeasible: " << bad->reason << "\n";
        return 2;
      }
      const auto& m = std::get<rrf::TunedModel>(r.tuned);
      std::cout << "N = " << m.config.n_questions << ", X = " << m.config.vote_threshold << "\n";
      print_metrics("validation", m.validation);
      print_metrics("test", r.test->metrics);
    }
  } catch (const rrf::DependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const rrf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
