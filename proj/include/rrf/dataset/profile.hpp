#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rrf/error.hpp"
#include "rrf/io.hpp"

namespace rrf {

struct FounderProfile {
  std::string id;
  std::vector<std::string> education;
  std::vector<std::string> work_history;
  std::vector<std::string> previous_companies;
  std::map<std::string, int> coded_features;  // feature name -> ordinal code
  bool label = false;                         // successful

  friend bool operator==(const FounderProfile&, const FounderProfile&) = default;
};

// (feature, code) -> phrase used when describing a founder in prose.
class FeatureLexicon {
 public:
  FeatureLexicon() = default;

  void add(std::string feature, int code, std::string phrase) {
    entries_[std::move(feature)][code] = std::move(phrase);
  }

  const std::string& phrase(std::string_view feature, int code) const {
    const auto f = entries_.find(std::string(feature));
    if (f != entries_.end()) {
      const auto c = f->second.find(code);
      if (c != f->second.end()) return c->second;
    }
    throw LexiconError("lexicon has no phrase for (" + std::string(feature) + ", " + std::to_string(code) + ")");
  }

  bool contains(std::string_view feature, int code) const {
    const auto f = entries_.find(std::string(feature));
    return f != entries_.end() && f->second.contains(code);
  }

  // Inverse lookup; phrases are unique across the whole lexicon.
  std::optional<std::pair<std::string, int>> find_phrase(std::string_view phrase) const {
    for (const auto& [feature, codes] : entries_) {
      for (const auto& [code, text] : codes) {
        if (text == phrase) return std::pair{feature, code};
      }
    }
    return std::nullopt;
  }

  const std::map<std::string, std::map<int, std::string>>& entries() const { return entries_; }

  // {"feature": {"0": "phrase", ...}, ...}
  static FeatureLexicon from_json(const json& j) {
    FeatureLexicon lex;
    std::set<std::string> seen;
    for (const auto& [feature, codes] : j.items()) {
      for (const auto& [code, phrase] : codes.items()) {
        int value;
        try {
          value = std::stoi(code);
        } catch (const std::exception&) {
          throw ConfigError("lexicon code '" + code + "' for " + feature + " is not an integer");
        }
        if (value < 0) throw ConfigError("lexicon code for " + feature + " must be non-negative");
        auto text = phrase.get<std::string>();
        if (!seen.insert(text).second) throw ConfigError("duplicate lexicon phrase: " + text);
        lex.add(feature, value, std::move(text));
      }
    }
    return lex;
  }

  static FeatureLexicon load(const std::filesystem::path& path) {
    try {
      return from_json(json::parse(read_text_file(path)));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }

 private:
  std::map<std::string, std::map<int, std::string>> entries_;
};

struct DatasetSplit {
  std::vector<FounderProfile> train;
  std::vector<FounderProfile> validation;
  std::vector<FounderProfile> test;
};

enum class InsightOrigin { data, expert };

struct InsightSummary {
  std::string text;
  InsightOrigin provenance = InsightOrigin::data;
  std::vector<std::string> source_ids;  // empty for expert descriptors

  friend bool operator==(const InsightSummary&, const InsightSummary&) = default;
};

inline constexpr std::string_view kNoneEntry = "None";

inline std::string join(const std::vector<std::string>& items, std::string_view sep) {
  if (items.empty()) return std::string(kNoneEntry);
  std::string out = items.front();
  for (std::size_t i = 1; i < items.size(); ++i) {
    out += sep;
    out += items[i];
  }
  return out;
}

// Three section lines (empty sections read "None"), then one lexicon phrase
// per coded feature in feature-name order.
inline std::string render_profile(const FounderProfile& p, const FeatureLexicon& lexicon) {
  std::string out;
  out += "Education: " + join(p.education, "; ") + "\n";
  out += "Work History: " + join(p.work_history, ", ") + "\n";
  out += "Previous Companies: " + join(p.previous_companies, ", ") + "\n";
  for (const auto& [feature, code] : p.coded_features) {
    out += lexicon.phrase(feature, code);
    out += '\n';
  }
  return out;
}

inline json to_json(const FounderProfile& p) {
  return json{{"id", p.id},
              {"education", p.education},
              {"work_history", p.work_history},
              {"previous_companies", p.previous_companies},
              {"coded_features", p.coded_features},
              {"label", p.label}};
}

inline FounderProfile profile_from_json(const json& j) {
  FounderProfile p;
  p.id = j.at("id").get<std::string>();
  p.education = j.at("education").get<std::vector<std::string>>();
  p.work_history = j.at("work_history").get<std::vector<std::string>>();
  p.previous_companies = j.at("previous_companies").get<std::vector<std::string>>();
  p.coded_features = j.at("coded_features").get<std::map<std::string, int>>();
  p.label = j.at("label").get<bool>();
  return p;
}

inline std::string dump_profiles(const Provenance& meta, const std::vector<FounderProfile>& profiles) {
  std::vector<json> records;
  records.reserve(profiles.size());
  for (const auto& p : profiles) records.push_back(to_json(p));
  return dump_json_lines(meta, records);
}

inline std::vector<FounderProfile> read_profiles(const std::filesystem::path& path) {
  const auto lines = read_json_lines(path);
  std::vector<FounderProfile> out;
  out.reserve(lines.records.size());
  try {
    for (const auto& r : lines.records) out.push_back(profile_from_json(r));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace rrf
