#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "rrf/dataset/insights.hpp"
#include "rrf/dataset/profile.hpp"
#include "rrf/dataset/synthetic.hpp"
#include "rrf/ensemble.hpp"
#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/oracle/mock.hpp"
#include "rrf/oracle/wire.hpp"
#include "rrf/questgen.hpp"
#include "rrf/random.hpp"
#include "rrf/refine.hpp"

namespace rrf {

enum class BackendKind { mock, wire };

inline BackendKind backend_from_string(std::string_view s) {
  if (s == "mock") return BackendKind::mock;
  if (s == "wire") return BackendKind::wire;
  throw ConfigError("backend must be 'mock' or 'wire', got '" + std::string(s) + "'");
}

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> expert_descriptors;  // relative to the working directory
};

// Whole-pipeline configuration. Relative paths resolve against the config
// file's directory. API keys come from the environment only.
struct PipelineConfig {
  std::uint64_t seed = 7;

  SynthConfig synth;
  std::filesystem::path lexicon_path;

  BackendKind backend = BackendKind::mock;
  std::filesystem::path mock_library_path;
  WireConfig wire;

  std::size_t pool_target = 100;
  InsightOptions insights;
  std::optional<std::filesystem::path> expert_descriptors;
  std::size_t expert_count = 20;
  QuestgenOptions questgen;

  std::optional<double> baseline;
  double jaccard_threshold = 0.9;

  GridSearchConstraints constraints;
  std::size_t constraints_reference_size = 500;

  json effective;    // the parsed file with overrides applied
  std::string hash;  // FNV-1a of `effective`

  Provenance provenance(std::string artifact) const { return Provenance{std::move(artifact), hash, seed}; }

  FeatureLexicon lexicon() const { return FeatureLexicon::load(lexicon_path); }

  // Count bounds scale with the evaluation split; the configured values apply
  // at `constraints_reference_size` founders.
  GridSearchConstraints constraints_for(std::size_t evaluation_size) const {
    GridSearchConstraints c = constraints;
    const double f = static_cast<double>(evaluation_size) / static_cast<double>(constraints_reference_size);
    c.min_predicted = static_cast<std::uint64_t>(std::llround(static_cast<double>(constraints.min_predicted) * f));
    c.max_predicted = static_cast<std::uint64_t>(std::llround(static_cast<double>(constraints.max_predicted) * f));
    return c;
  }

  RefineOptions refine_options() const {
    RefineOptions o;
    if (baseline) o.baseline = Rate::approximate(*baseline);
    o.jaccard_threshold = Rate::approximate(jaccard_threshold);
    return o;
  }

  std::unique_ptr<OracleBackend> make_backend() const {
    if (backend == BackendKind::wire) return std::make_unique<WireBackend>(wire);
    return std::make_unique<MockBackend>(MockLibrary::load(mock_library_path), lexicon(), seed);
  }

  static PipelineConfig from_json(json j, const std::filesystem::path& base_dir, const ConfigOverrides& overrides = {}) {
    if (overrides.seed) j["seed"] = *overrides.seed;
    if (overrides.backend) j["oracle"]["backend"] = *overrides.backend;
    if (overrides.expert_descriptors) {
      j["questgen"]["expert_descriptors"] = std::filesystem::absolute(*overrides.expert_descriptors).string();
    }

    PipelineConfig c;
    try {
      c.seed = j.value("seed", std::uint64_t{7});
      auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        if (path.is_relative()) path = base_dir / path;
        if (!std::filesystem::exists(path)) throw ConfigError("configured path does not exist: " + path.string());
        return path;
      };

      const auto& ds = j.at("dataset");
      c.synth = SynthConfig::from_json(ds);
      c.lexicon_path = resolve(ds.at("lexicon").get<std::string>());

      const auto oc = j.value("oracle", json::object());
      c.backend = backend_from_string(oc.value("backend", std::string("mock")));
      if (c.backend == BackendKind::mock) c.mock_library_path = resolve(oc.at("mock_library").get<std::string>());
      c.wire.base_url = oc.value("base_url", c.wire.base_url);
      c.wire.path = oc.value("path", c.wire.path);
      c.wire.model = oc.value("model", c.wire.model);
      if (oc.contains("api_key")) throw ConfigError("oracle.api_key is not allowed; set the key in the environment variable named by oracle.api_key_env");
      c.wire.api_key_env = oc.value("api_key_env", c.wire.api_key_env);
      if (oc.contains("temperature") && !oc["temperature"].is_null()) c.wire.temperature = oc["temperature"].get<double>();
      c.wire.retries = oc.value("retries", c.wire.retries);
      c.wire.parallelism = oc.value("parallelism", c.wire.parallelism);
      c.wire.batch_size = oc.value("batch_size", c.wire.batch_size);
      c.wire.backoff = std::chrono::milliseconds(oc.value("backoff_ms", 500));
      c.wire.timeout = std::chrono::seconds(oc.value("timeout_s", 120));
      c.questgen.parse_retries = c.wire.retries;
      c.insights.retries = c.wire.retries;

      const auto qc = j.value("questgen", json::object());
      c.pool_target = qc.value("pool_target", c.pool_target);
      c.insights.groups = qc.value("insight_groups", c.insights.groups);
      c.insights.group_size = qc.value("group_size", c.insights.group_size);
      c.insights.rules_per_group = qc.value("rules_per_group", c.insights.rules_per_group);
      c.questgen.round_retries = qc.value("round_retries", c.questgen.round_retries);
      c.questgen.batch_size = qc.value("batch_size", c.questgen.batch_size);
      if (qc.contains("expert_descriptors") && !qc["expert_descriptors"].is_null()) {
        c.expert_descriptors = resolve(qc["expert_descriptors"].get<std::string>());
      }
      c.expert_count = qc.value("expert_count", c.expert_count);

      const auto rc = j.value("refine", json::object());
      if (rc.contains("baseline") && !rc["baseline"].is_null()) c.baseline = rc["baseline"].get<double>();
      c.jaccard_threshold = rc.value("jaccard_threshold", c.jaccard_threshold);

      const auto ec = j.value("ensemble", json::object());
      c.constraints.min_predicted = ec.value("min_predicted", c.constraints.min_predicted);
      c.constraints.max_predicted = ec.value("max_predicted", c.constraints.max_predicted);
      c.constraints.min_questions = ec.value("min_questions", c.constraints.min_questions);
      c.constraints_reference_size = ec.value("reference_size", c.constraints_reference_size);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    c.validate();
    c.effective = std::move(j);
    c.hash = hex64(fnv1a(c.effective.dump()));
    return c;
  }

  static PipelineConfig load(const std::filesystem::path& path, const ConfigOverrides& overrides = {}) {
    json j;
    try {
      j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(std::move(j), path.parent_path(), overrides);
  }

  void validate() const {
    synth.validate();
    synth.validate_against(lexicon());
    if (pool_target == 0 || pool_target % kQuestionsPerRound != 0) {
      throw ConfigError("questgen.pool_target must be a positive multiple of 10");
    }
    if (insights.rules_per_group == 0) throw ConfigError("questgen.rules_per_group must be positive");
    if (baseline && !(*baseline > 0.0 && *baseline < 1.0)) throw ConfigError("refine.baseline must lie in (0, 1)");
    if (!(jaccard_threshold > 0.0 && jaccard_threshold <= 1.0)) {
      throw ConfigError("refine.jaccard_threshold must lie in (0, 1]");
    }
    if (constraints_reference_size == 0) throw ConfigError("ensemble.reference_size must be positive");
    constraints.validate();
    if (wire.parallelism < 1) throw ConfigError("oracle.parallelism must be at least 1");
    if (wire.retries < 0) throw ConfigError("oracle.retries must be non-negative");
  }
};

}  // namespace rrf
