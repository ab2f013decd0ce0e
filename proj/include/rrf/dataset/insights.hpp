#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rrf/dataset/profile.hpp"
#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/oracle/backend.hpp"
#include "rrf/oracle/parse.hpp"
#include "rrf/oracle/prompts.hpp"
#include "rrf/oracle/retry.hpp"
#include "rrf/random.hpp"

namespace rrf {

struct InsightOptions {
  std::size_t group_size = 20;
  std::size_t rules_per_group = 3;
  std::size_t groups = 1;
  int retries = 3;
};

// Each group samples `group_size` successful founders without replacement and
// asks the oracle for `rules_per_group` shared traits.
inline std::vector<InsightSummary> sample_insight_summaries(std::span<const FounderProfile> successful,
                                                            const InsightOptions& options, OracleBackend& backend,
                                                            const FeatureLexicon& lexicon, std::uint64_t seed) {
  std::vector<InsightSummary> out;
  if (options.groups == 0) return out;
  if (successful.size() < options.group_size) {
    throw PreconditionError("need at least " + std::to_string(options.group_size) + " successful founders, have " +
                            std::to_string(successful.size()));
  }
  for (std::size_t g = 0; g < options.groups; ++g) {
    auto rng = make_rng(seed, "insights:group", g);
    const auto order = permutation(successful.size(), rng);
    std::vector<std::string> rendered;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < options.group_size; ++i) {
      const auto& p = successful[order[i]];
      rendered.push_back(render_profile(p, lexicon));
      ids.push_back(p.id);
    }
    const auto prompt = build_insight_prompt(rendered, options.rules_per_group);
    const auto rules = complete_with_retries(backend, prompt, options.retries, [&](const std::string& r) {
      return parse_rules(r, options.rules_per_group);
    });
    for (const auto& rule : rules) out.push_back({rule, InsightOrigin::data, ids});
  }
  return out;
}

inline std::vector<InsightSummary> parse_expert_descriptors(std::string_view text) {
  std::vector<InsightSummary> out;
  for (const auto& raw : split_lines(text)) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    out.push_back({std::string(line), InsightOrigin::expert, {}});
  }
  if (out.empty()) throw EmptyInputError("expert descriptor file has no descriptors");
  return out;
}

// One descriptor per line; blank lines and '#' comments are skipped.
inline std::vector<InsightSummary> load_expert_descriptors(const std::filesystem::path& path) {
  return parse_expert_descriptors(read_text_file(path));
}

}  // namespace rrf
