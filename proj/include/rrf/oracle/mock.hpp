#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rrf/dataset/profile.hpp"
#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/oracle/backend.hpp"
#include "rrf/oracle/prompts.hpp"
#include "rrf/random.hpp"

namespace rrf {

enum class TextField { education, work_history, previous_companies };

inline TextField text_field_from_name(std::string_view name) {
  if (name == "education") return TextField::education;
  if (name == "work_history") return TextField::work_history;
  if (name == "previous_companies") return TextField::previous_companies;
  throw ConfigError("unknown text field '" + std::string(name) + "'");
}

// What a reader of a rendered profile can see: the three section lines and the
// coded features recovered through the lexicon.
struct ProfileView {
  std::string education;
  std::string work_history;
  std::string previous_companies;
  std::map<std::string, int> codes;

  const std::string& field(TextField f) const {
    switch (f) {
      case TextField::education: return education;
      case TextField::work_history: return work_history;
      case TextField::previous_companies: return previous_companies;
    }
    return education;
  }
};

inline ProfileView view_of(const FounderProfile& p) {
  return ProfileView{join(p.education, "; "), join(p.work_history, ", "), join(p.previous_companies, ", "),
                     p.coded_features};
}

inline ProfileView parse_rendered_profile(std::string_view text, const FeatureLexicon& lexicon) {
  ProfileView v;
  for (const auto& raw : split_lines(text)) {
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.starts_with("Education: ")) v.education = line.substr(11);
    else if (line.starts_with("Work History: ")) v.work_history = line.substr(14);
    else if (line.starts_with("Previous Companies: ")) v.previous_companies = line.substr(20);
    else if (auto hit = lexicon.find_phrase(line)) v.codes[hit->first] = hit->second;
    else throw BackendError("mock oracle cannot interpret profile line: " + std::string(line));
  }
  return v;
}

enum class Comparator { eq, ne, ge, le };

inline Comparator comparator_from_symbol(std::string_view s) {
  if (s == "==") return Comparator::eq;
  if (s == "!=") return Comparator::ne;
  if (s == ">=") return Comparator::ge;
  if (s == "<=") return Comparator::le;
  throw ConfigError("unknown comparator '" + std::string(s) + "'");
}

// Either "coded feature <op> constant" or "text field contains/lacks keyword".
struct PredicateAtom {
  bool on_text = false;
  std::string feature;
  Comparator op = Comparator::eq;
  int value = 0;
  TextField field = TextField::education;
  std::string keyword;  // lower case
  bool negate = false;

  bool holds(const ProfileView& v) const {
    if (on_text) {
      const bool found = to_lower(v.field(field)).find(keyword) != std::string::npos;
      return found != negate;
    }
    const auto it = v.codes.find(feature);
    if (it == v.codes.end()) return false;
    switch (op) {
      case Comparator::eq: return it->second == value;
      case Comparator::ne: return it->second != value;
      case Comparator::ge: return it->second >= value;
      case Comparator::le: return it->second <= value;
    }
    return false;
  }
};

// A question the mock oracle can answer: a conjunction of at most two atoms.
struct MockPredicate {
  std::string question_text;
  std::vector<PredicateAtom> atoms;

  bool evaluate(const ProfileView& v) const {
    for (const auto& a : atoms) {
      if (!a.holds(v)) return false;
    }
    return true;
  }
  bool evaluate(const FounderProfile& p) const { return evaluate(view_of(p)); }
};

struct AtomTemplate {
  PredicateAtom atom;
  std::optional<std::pair<int, int>> value_range;  // inclusive; drawn per seed
};

struct MockTemplate {
  std::string text;  // "{0}" / "{1}" stand for the atoms' constants
  std::vector<AtomTemplate> atoms;
};

struct MockLibrary {
  std::vector<MockTemplate> templates;
  std::vector<std::string> insights;  // canned rule texts for insight prompts

  static MockLibrary from_json(const json& j) {
    MockLibrary lib;
    for (const auto& t : j.at("templates")) {
      MockTemplate mt;
      mt.text = t.at("text").get<std::string>();
      for (const auto& a : t.at("atoms")) {
        AtomTemplate at;
        if (a.contains("field")) {
          at.atom.on_text = true;
          at.atom.field = text_field_from_name(a.at("field").get<std::string>());
          if (a.contains("contains")) {
            at.atom.keyword = to_lower(a.at("contains").get<std::string>());
          } else {
            at.atom.keyword = to_lower(a.at("lacks").get<std::string>());
            at.atom.negate = true;
          }
          if (at.atom.keyword.empty()) throw ConfigError("empty keyword in template: " + mt.text);
        } else {
          at.atom.feature = a.at("feature").get<std::string>();
          at.atom.op = comparator_from_symbol(a.at("op").get<std::string>());
          if (a.contains("range")) {
            const auto r = a.at("range").get<std::vector<int>>();
            if (r.size() != 2 || r[0] > r[1]) throw ConfigError("bad range in template: " + mt.text);
            at.value_range = std::pair{r[0], r[1]};
          } else {
            at.atom.value = a.at("value").get<int>();
          }
        }
        mt.atoms.push_back(std::move(at));
      }
      if (mt.atoms.empty() || mt.atoms.size() > 2) throw ConfigError("templates need one or two atoms: " + mt.text);
      lib.templates.push_back(std::move(mt));
    }
    if (j.contains("insights")) lib.insights = j.at("insights").get<std::vector<std::string>>();
    return lib;
  }

  static MockLibrary load(const std::filesystem::path& path) {
    try {
      return from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
};


// Every template instantiated once, with constants drawn from the seed.
inline std::vector<MockPredicate> instantiate_library(const MockLibrary& library, std::uint64_t seed) {
  std::vector<MockPredicate> out;
  out.reserve(library.templates.size());
  for (std::size_t t = 0; t < library.templates.size(); ++t) {
    const auto& tpl = library.templates[t];
    auto rng = make_rng(seed, "mock:template", t);
    MockPredicate pred;
    pred.question_text = tpl.text;
    for (std::size_t a = 0; a < tpl.atoms.size(); ++a) {
      auto atom = tpl.atoms[a].atom;
      if (const auto& r = tpl.atoms[a].value_range) {
        atom.value = r->first + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(r->second - r->first + 1)));
      }
      const std::string slot = "{" + std::to_string(a) + "}";
      const std::string fill = atom.on_text ? atom.keyword : std::to_string(atom.value);
      for (auto pos = pred.question_text.find(slot); pos != std::string::npos;
           pos = pred.question_text.find(slot, pos + fill.size())) {
        pred.question_text.replace(pos, slot.size(), fill);
      }
      pred.atoms.push_back(std::move(atom));
    }
    out.push_back(std::move(pred));
  }
  return out;
}

// Ten predicates for a 1-based round. Rounds walk a seeded permutation of the
// library, so they are disjoint until the library is used up; the next pass
// uses a fresh permutation.
inline std::vector<MockPredicate> mock_generate(std::uint64_t seed, int round, const MockLibrary& library) {
  if (library.templates.size() < kQuestionsPerRound) {
    throw ConfigError("mock template library has " + std::to_string(library.templates.size()) +
                      " templates; at least 10 are required");
  }
  if (round < 1) throw PreconditionError("rounds are numbered from 1");
  const auto all = instantiate_library(library, seed);
  const std::size_t size = all.size();
  std::vector<MockPredicate> out;
  out.reserve(kQuestionsPerRound);
  const std::size_t first = static_cast<std::size_t>(round - 1) * kQuestionsPerRound;
  std::size_t cached_pass = SIZE_MAX;
  std::vector<std::size_t> order;
  for (std::size_t k = first; k < first + kQuestionsPerRound; ++k) {
    const std::size_t pass = k / size;
    if (pass != cached_pass) {
      auto rng = make_rng(seed, "mock:pass", pass);
      order = permutation(size, rng);
      cached_pass = pass;
    }
    out.push_back(all[order[k % size]]);
  }
  return out;
}

// Deterministic stand-in for a language model. Question generation hands out
// library predicates round by round; answers come from evaluating the
// predicate on what the rendered profile shows.
class MockBackend : public OracleBackend {
 public:
  MockBackend(MockLibrary library, FeatureLexicon lexicon, std::uint64_t seed)
      : library_(std::move(library)), lexicon_(std::move(lexicon)), seed_(seed) {
    if (library_.templates.size() < kQuestionsPerRound) {
      throw ConfigError("mock template library needs at least 10 templates");
    }
    for (auto& p : instantiate_library(library_, seed_)) {
      auto text = p.question_text;
      if (!registry_.emplace(text, std::move(p)).second) {
        throw ConfigError("mock templates render to duplicate question: " + text);
      }
    }
  }

  std::string complete(const std::string& prompt) override {
    if (prompt.starts_with(prompt_marker::kEvaluation)) return answer_evaluation_prompt(prompt);
    if (prompt.starts_with(prompt_marker::kInsight)) return answer_insight_prompt(prompt);
    if (prompt.starts_with(prompt_marker::kGeneration) || prompt.starts_with(prompt_marker::kFeedback)) {
      int round;
      {
        std::lock_guard lock(mutex_);
        round = ++rounds_served_;
      }
      std::string out;
      int k = 0;
      for (const auto& p : mock_generate(seed_, round, library_)) {
        out += std::to_string(++k) + ". " + p.question_text + "\n";
      }
      return out;
    }
    throw BackendError("mock oracle does not recognize the prompt");
  }

  BitRow answer_batch(const std::string& question, std::span<const std::string> profiles) override {
    const auto& pred = lookup(question);
    BitRow out;
    out.reserve(profiles.size());
    for (const auto& text : profiles) out.push_back(pred.evaluate(parse_rendered_profile(text, lexicon_)) ? 1 : 0);
    return out;
  }

  const MockPredicate& lookup(std::string_view question) const {
    const auto it = registry_.find(std::string(question));
    if (it == registry_.end()) throw BackendError("mock oracle does not know the question: " + std::string(question));
    return it->second;
  }

  int rounds_served() const {
    std::lock_guard lock(mutex_);
    return rounds_served_;
  }

 private:
  // Splits "Founder k:" blocks that follow `header`.
  static std::vector<std::string> founder_blocks(std::string_view prompt, std::string_view header) {
    std::vector<std::string> blocks;
    bool started = header.empty();
    for (const auto& raw : split_lines(prompt)) {
      const auto line = trim(raw);
      if (!started) {
        started = (line == header);
        continue;
      }
      if (line.starts_with("Founder ") && line.ends_with(":") &&
          line.substr(8, line.size() - 9).find_first_not_of("0123456789") == std::string_view::npos) {
        blocks.emplace_back();
        continue;
      }
      if (blocks.empty()) continue;
      if (line.empty()) continue;
      blocks.back() += std::string(line) + "\n";
    }
    return blocks;
  }

  std::string answer_evaluation_prompt(const std::string& prompt) const {
    std::string question;
    for (const auto& raw : split_lines(prompt)) {
      if (raw.starts_with(prompt_marker::kQuestionPrefix)) {
        question = raw.substr(prompt_marker::kQuestionPrefix.size());
        break;
      }
    }
    const auto& pred = lookup(question);
    std::string out;
    std::size_t k = 0;
    for (const auto& block : founder_blocks(prompt, prompt_marker::kSummariesHeader)) {
      const bool yes = pred.evaluate(parse_rendered_profile(block, lexicon_));
      out += "Founder " + std::to_string(++k) + (yes ? ": Yes\n" : ": No\n");
    }
    return out;
  }

  std::string answer_insight_prompt(const std::string& prompt) const {
    if (library_.insights.empty()) throw BackendError("mock library has no insight texts");
    const auto blocks = founder_blocks(prompt, "");
    std::string out = "Summaries:\n";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      out += "Founder " + std::to_string(i + 1) + ": " + split_lines(blocks[i]).front() + "\n";
    }
    out += std::string(prompt_marker::kRulesHeader) + "\n";
    const std::size_t n = library_.insights.size();
    const std::size_t offset = static_cast<std::size_t>(fnv1a(prompt, seed_) % n);
    for (std::size_t i = 0; i < n; ++i) out += "- " + library_.insights[(offset + i) % n] + "\n";
    return out;
  }

  MockLibrary library_;
  FeatureLexicon lexicon_;
  std::uint64_t seed_;
  std::unordered_map<std::string, MockPredicate> registry_;
  mutable std::mutex mutex_;
  int rounds_served_ = 0;
};

}  // namespace rrf
