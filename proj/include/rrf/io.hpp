#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rrf/error.hpp"

namespace rrf {

using json = nlohmann::json;

// Stamped into every artifact so any file can be traced to the run that made it.
struct Provenance {
  std::string artifact;
  std::string config_hash;
  std::uint64_t seed = 0;

  json to_json() const { return json{{"artifact", artifact}, {"config_hash", config_hash}, {"seed", seed}}; }

  static Provenance from_json(const json& j) {
    return Provenance{j.at("artifact").get<std::string>(), j.at("config_hash").get<std::string>(),
                      j.at("seed").get<std::uint64_t>()};
  }

  // "# artifact=... config_hash=... seed=..." leading comment for CSV files.
  std::string csv_comment() const {
    return "# artifact=" + artifact + " config_hash=" + config_hash + " seed=" + std::to_string(seed);
  }

  static std::optional<Provenance> parse_csv_comment(std::string_view line) {
    if (!line.starts_with("# ")) return std::nullopt;
    Provenance p;
    std::istringstream in{std::string(line.substr(2))};
    std::string token;
    while (in >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const auto key = token.substr(0, eq);
      const auto value = token.substr(eq + 1);
      if (key == "artifact") p.artifact = value;
      else if (key == "config_hash") p.config_hash = value;
      else if (key == "seed") p.seed = std::stoull(value);
    }
    return p;
  }

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Line-delimited JSON: first line {"meta": {...}}, then one record per line.
struct JsonLines {
  std::optional<Provenance> meta;
  std::vector<json> records;
};

inline std::string dump_json_lines(const Provenance& meta, const std::vector<json>& records) {
  std::string out = json{{"meta", meta.to_json()}}.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

inline JsonLines parse_json_lines(std::string_view text, const std::string& source = "<memory>") {
  JsonLines out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.is_object() && j.size() == 1 && j.contains("meta")) {
      out.meta = Provenance::from_json(j["meta"]);
      continue;
    }
    out.records.push_back(std::move(j));
  }
  return out;
}

inline JsonLines read_json_lines(const std::filesystem::path& path) {
  return parse_json_lines(read_text_file(path), path.string());
}

inline void write_json_lines(const std::filesystem::path& path, const Provenance& meta,
                             const std::vector<json>& records) {
  write_text_file(path, dump_json_lines(meta, records));
}

}  // namespace rrf
