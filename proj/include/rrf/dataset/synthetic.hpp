#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rrf/dataset/profile.hpp"
#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/random.hpp"

namespace rrf {

enum class ProfileSection { education, work_history, previous_companies };

inline ProfileSection section_from_name(std::string_view name) {
  if (name == "education") return ProfileSection::education;
  if (name == "work_history") return ProfileSection::work_history;
  if (name == "previous_companies") return ProfileSection::previous_companies;
  throw ConfigError("unknown profile section '" + std::string(name) + "'");
}

// Free-text entry added to a profile section when a feature is switched on.
struct TextCue {
  ProfileSection section = ProfileSection::work_history;
  std::string text;
};

// Latent trait correlated with success. The exact fraction of each class that
// carries it is fixed, so empirical rates match the configured ones up to
// rounding.
struct PlantedSignal {
  std::string feature;
  std::vector<int> present_codes;
  std::vector<int> absent_codes;
  double p_success = 0.0;  // P(signal | success)
  double p_failure = 0.0;  // P(signal | failure)
  std::optional<TextCue> cue;
};

// Feature drawn independently of the label.
struct NoiseFeature {
  std::string feature;
  std::vector<int> codes;
  std::vector<double> weights;
  std::optional<TextCue> cue;  // applied whenever the code is non-zero
};

struct SplitSize {
  std::size_t size = 0;
  std::size_t positives = 0;
};

struct SynthConfig {
  std::size_t scale = 1;
  SplitSize train{200, 100};
  SplitSize validation{500, 50};
  SplitSize test{500, 50};
  std::vector<PlantedSignal> signals;
  std::vector<NoiseFeature> noise;

  // Every (feature, code) the generator can emit, for lexicon checks.
  std::vector<std::pair<std::string, int>> emitted_codes() const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& s : signals) {
      for (int c : s.present_codes) out.emplace_back(s.feature, c);
      for (int c : s.absent_codes) out.emplace_back(s.feature, c);
    }
    for (const auto& n : noise) {
      for (int c : n.codes) out.emplace_back(n.feature, c);
    }
    return out;
  }

  void validate() const {
    if (scale < 1) throw ConfigError("scale factor must be at least 1");
    for (const auto& [name, split] : {std::pair{"train", train}, {"validation", validation}, {"test", test}}) {
      if (split.size == 0) throw ConfigError(std::string(name) + " split is empty");
      if (split.positives > split.size) {
        throw ConfigError(std::string(name) + " split cannot hold " + std::to_string(split.positives) +
                          " positives in " + std::to_string(split.size) + " founders");
      }
    }
    std::set<std::string> features;
    for (const auto& s : signals) {
      if (!features.insert(s.feature).second) throw ConfigError("feature " + s.feature + " configured twice");
      if (s.present_codes.empty() || s.absent_codes.empty()) {
        throw ConfigError("signal " + s.feature + " needs present and absent codes");
      }
      for (int c : s.present_codes) {
        if (std::find(s.absent_codes.begin(), s.absent_codes.end(), c) != s.absent_codes.end()) {
          throw ConfigError("signal " + s.feature + " uses code " + std::to_string(c) + " for both states");
        }
      }
      for (double p : {s.p_success, s.p_failure}) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("signal " + s.feature + " probability outside [0, 1]");
      }
    }
    for (const auto& n : noise) {
      if (!features.insert(n.feature).second) throw ConfigError("feature " + n.feature + " configured twice");
      if (n.codes.empty() || n.codes.size() != n.weights.size()) {
        throw ConfigError("noise feature " + n.feature + " needs one weight per code");
      }
      double total = 0;
      for (double w : n.weights) {
        if (!(w >= 0.0)) throw ConfigError("noise feature " + n.feature + " has a negative weight");
        total += w;
      }
      if (!(total > 0.0)) throw ConfigError("noise feature " + n.feature + " has zero total weight");
    }
  }

  void validate_against(const FeatureLexicon& lexicon) const {
    for (const auto& [feature, code] : emitted_codes()) {
      if (!lexicon.contains(feature, code)) {
        throw LexiconError("lexicon has no phrase for (" + feature + ", " + std::to_string(code) + ")");
      }
    }
  }

  static SynthConfig from_json(const json& j) {
    auto cue_from = [](const json& c) {
      return TextCue{section_from_name(c.at("section").get<std::string>()), c.at("text").get<std::string>()};
    };
    auto split_from = [](const json& s, SplitSize fallback) {
      if (s.is_null()) return fallback;
      return SplitSize{s.at("size").get<std::size_t>(), s.at("positives").get<std::size_t>()};
    };
    SynthConfig cfg;
    cfg.scale = j.value("scale", std::size_t{1});
    cfg.train = split_from(j.value("train", json()), cfg.train);
    cfg.validation = split_from(j.value("validation", json()), cfg.validation);
    cfg.test = split_from(j.value("test", json()), cfg.test);
    for (const auto& s : j.value("signals", json::array())) {
      PlantedSignal sig;
      sig.feature = s.at("feature").get<std::string>();
      sig.present_codes = s.value("present", std::vector<int>{1});
      sig.absent_codes = s.value("absent", std::vector<int>{0});
      sig.p_success = s.at("p_success").get<double>();
      sig.p_failure = s.at("p_failure").get<double>();
      if (s.contains("cue")) sig.cue = cue_from(s["cue"]);
      cfg.signals.push_back(std::move(sig));
    }
    for (const auto& n : j.value("noise", json::array())) {
      NoiseFeature nf;
      nf.feature = n.at("feature").get<std::string>();
      nf.codes = n.value("codes", std::vector<int>{0, 1});
      nf.weights = n.at("weights").get<std::vector<double>>();
      if (n.contains("cue")) nf.cue = cue_from(n["cue"]);
      cfg.noise.push_back(std::move(nf));
    }
    return cfg;
  }
};

namespace detail {

inline constexpr std::array kDegrees{
    "BSc in Computer Science", "BA in Economics",        "MBA",
    "BSc in Mechanical Engineering", "BA in Political Science", "MSc in Finance",
    "BSc in Mathematics",      "BA in Psychology",       "BSc in Chemistry",
    "MSc in Data Science",     "BA in English Literature", "BSc in Business Administration",
};

inline constexpr std::array kInstitutions{
    "University of Michigan",   "Ohio State University",    "University of Texas at Austin",
    "Arizona State University", "Purdue University",        "University of Toronto",
    "Boston University",        "University of Florida",    "Rutgers University",
    "Penn State University",    "University of Washington", "McGill University",
};

inline constexpr std::array kRoles{
    "Software Engineer at a logistics company",  "Sales Manager at a retail chain",
    "Financial Analyst at a regional bank",      "Operations Manager at a manufacturing firm",
    "Consultant at a strategy consultancy",      "Account Executive at a SaaS vendor",
    "Data Analyst at an insurance company",      "Business Development Lead at a telecom operator",
    "Project Manager at a construction company", "Customer Success Manager at a software company",
    "Engineer at a semiconductor supplier",      "Analyst at a real estate developer",
};

inline constexpr std::array kVentures{
    "Co-founded a local services marketplace that shut down",
    "Ran a small e-commerce store",
    "Started a mobile app side project",
};

inline const char* pick(Rng& rng, std::span<const char* const> items) {
  return items[static_cast<std::size_t>(uniform_index(rng, items.size()))];
}

inline std::vector<std::string>& section_of(FounderProfile& p, ProfileSection s) {
  switch (s) {
    case ProfileSection::education: return p.education;
    case ProfileSection::work_history: return p.work_history;
    case ProfileSection::previous_companies: return p.previous_companies;
  }
  return p.work_history;
}

inline int pick_weighted(Rng& rng, const NoiseFeature& f) {
  double total = 0;
  for (double w : f.weights) total += w;
  const double target = uniform_unit(rng) * total;
  double acc = 0;
  for (std::size_t i = 0; i < f.codes.size(); ++i) {
    acc += f.weights[i];
    if (target < acc) return f.codes[i];
  }
  return f.codes.back();
}

inline std::size_t exact_count(double p, std::size_t n) {
  return static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
}

inline std::vector<FounderProfile> generate_split(const SynthConfig& cfg, SplitSize size, std::string_view name,
                                                  std::uint64_t seed) {
  const std::size_t n = size.size * cfg.scale;
  const std::size_t pos = size.positives * cfg.scale;
  std::vector<FounderProfile> out(n);

  auto order_rng = make_rng(seed, std::string("synth:order:") + std::string(name));
  const auto order = permutation(n, order_rng);
  for (std::size_t i = 0; i < n; ++i) out[i].label = order[i] < pos;

  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < n; ++i) (out[i].label ? positives : negatives).push_back(i);

  for (std::size_t s = 0; s < cfg.signals.size(); ++s) {
    const auto& sig = cfg.signals[s];
    std::vector<std::uint8_t> present(n, 0);
    auto sig_rng = make_rng(seed, std::string("synth:signal:") + std::string(name), s);
    for (auto* group : {&positives, &negatives}) {
      const double p = group == &positives ? sig.p_success : sig.p_failure;
      auto chosen = *group;
      shuffle_in_place(chosen, sig_rng);
      const auto k = exact_count(p, chosen.size());
      for (std::size_t i = 0; i < k; ++i) present[chosen[i]] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& codes = present[i] ? sig.present_codes : sig.absent_codes;
      out[i].coded_features[sig.feature] = codes[static_cast<std::size_t>(uniform_index(sig_rng, codes.size()))];
      if (present[i] && sig.cue) section_of(out[i], sig.cue->section).push_back(sig.cue->text);
    }
  }

  auto text_rng = make_rng(seed, std::string("synth:text:") + std::string(name));
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = out[i];
    for (const auto& nf : cfg.noise) {
      const int code = pick_weighted(text_rng, nf);
      p.coded_features[nf.feature] = code;
      if (code != 0 && nf.cue) section_of(p, nf.cue->section).push_back(nf.cue->text);
    }
    std::vector<std::string> education;
    const auto degrees = 1 + uniform_index(text_rng, 2);
    for (std::size_t d = 0; d < degrees; ++d) {
      education.push_back(std::string(pick(text_rng, kDegrees)) + " from " + pick(text_rng, kInstitutions));
    }
    std::vector<std::string> roles;
    const auto jobs = 1 + uniform_index(text_rng, 3);
    for (std::size_t r = 0; r < jobs; ++r) roles.emplace_back(pick(text_rng, kRoles));
    std::vector<std::string> ventures;
    if (uniform_unit(text_rng) < 0.25) ventures.emplace_back(pick(text_rng, kVentures));
    // generic entries first, cues after
    education.insert(education.end(), p.education.begin(), p.education.end());
    roles.insert(roles.end(), p.work_history.begin(), p.work_history.end());
    ventures.insert(ventures.end(), p.previous_companies.begin(), p.previous_companies.end());
    p.education = std::move(education);
    p.work_history = std::move(roles);
    p.previous_companies = std::move(ventures);
  }
  return out;
}

}  // namespace detail

// Seeded stand-in for a real founder dataset. Same (config, seed), same bytes.
// Ids are "F" + six digits, numbered across train, validation, test.
inline DatasetSplit generate_synthetic_dataset(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  DatasetSplit split;
  split.train = detail::generate_split(config, config.train, "train", seed);
  split.validation = detail::generate_split(config, config.validation, "validation", seed);
  split.test = detail::generate_split(config, config.test, "test", seed);
  std::size_t next = 1;
  for (auto* part : {&split.train, &split.validation, &split.test}) {
    for (auto& p : *part) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "F%06zu", next++);
      p.id = buf;
    }
  }
  return split;
}

}  // namespace rrf
