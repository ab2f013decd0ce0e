#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/metrics.hpp"
#include "rrf/oracle/prompts.hpp"

namespace rrf {

// Drops a leading "1.", "2)", "-", "*" or bullet marker.
inline std::string_view strip_enumeration(std::string_view line) {
  line = trim(line);
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return trim(line.substr(i + 1));
  if (!line.empty() && (line[0] == '-' || line[0] == '*')) return trim(line.substr(1));
  if (line.starts_with("\xE2\x80\xA2")) return trim(line.substr(3));  // U+2022
  return line;
}

namespace detail {
inline std::vector<std::string> list_lines(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& raw : split_lines(text)) {
    auto item = strip_enumeration(raw);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}
}  // namespace detail

// One question per line. When the response holds at least `expected` lines
// ending in '?', other lines (preambles, headings) are discarded.
inline std::vector<std::string> parse_questions(std::string_view response, std::size_t expected = 10) {
  auto lines = detail::list_lines(response);
  std::vector<std::string> questions;
  for (const auto& l : lines) {
    if (l.back() == '?') questions.push_back(l);
  }
  if (questions.size() < expected) questions = std::move(lines);
  if (questions.size() < expected) {
    throw MalformedResponse("expected " + std::to_string(expected) + " questions, parsed " +
                                std::to_string(questions.size()),
                            std::string(response));
  }
  return questions;
}

// Exactly `expected` Yes/No tokens, case-insensitive. Lines may be bare
// ("Yes") or prefixed ("Founder 3: no", "3. Yes"); numbered prefixes must
// count up from 1.
inline BitRow parse_answers(std::string_view response, std::size_t expected) {
  if (expected < 1) throw PreconditionError("parse_answers: expected must be at least 1");
  BitRow out;
  for (const auto& raw : split_lines(response)) {
    auto line = trim(raw);
    if (line.empty()) continue;
    std::optional<std::size_t> number;
    auto lower = to_lower(line);
    std::string_view rest = lower;
    if (rest.starts_with("founder")) {
      rest = trim(rest.substr(7));
      std::size_t i = 0;
      while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
      if (i == 0 || i >= rest.size() || rest[i] != ':') {
        throw MalformedResponse("unrecognized answer line: " + std::string(line), std::string(response));
      }
      number = std::stoul(std::string(rest.substr(0, i)));
      rest = trim(rest.substr(i + 1));
    } else {
      std::size_t i = 0;
      while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
      if (i > 0 && i < rest.size() && (rest[i] == '.' || rest[i] == ')' || rest[i] == ':')) {
        number = std::stoul(std::string(rest.substr(0, i)));
        rest = trim(rest.substr(i + 1));
      }
    }
    std::size_t end = 0;
    while (end < rest.size() && std::isalpha(static_cast<unsigned char>(rest[end]))) ++end;
    const auto token = rest.substr(0, end);
    if (number && *number != out.size() + 1) {
      throw MalformedResponse("answer for founder " + std::to_string(*number) + " out of order",
                              std::string(response));
    }
    if (token == "yes") out.push_back(1);
    else if (token == "no") out.push_back(0);
    else throw MalformedResponse("unrecognized answer token in: " + std::string(line), std::string(response));
  }
  if (out.size() != expected) {
    throw MalformedResponse("expected " + std::to_string(expected) + " answers, parsed " + std::to_string(out.size()),
                            std::string(response));
  }
  return out;
}

// Rules listed after the "Rules:" line of an insight response; the first
// `expected` are returned.
inline std::vector<std::string> parse_rules(std::string_view response, std::size_t expected) {
  const auto lines = split_lines(response);
  std::size_t i = 0;
  while (i < lines.size() && to_lower(trim(lines[i])) != to_lower(prompt_marker::kRulesHeader)) ++i;
  if (i == lines.size()) throw MalformedResponse("insight response has no Rules: section", std::string(response));
  std::vector<std::string> rules;
  for (++i; i < lines.size() && rules.size() < expected; ++i) {
    auto item = strip_enumeration(lines[i]);
    if (!item.empty()) rules.emplace_back(item);
  }
  if (rules.size() < expected) {
    throw MalformedResponse("expected " + std::to_string(expected) + " rules, parsed " + std::to_string(rules.size()),
                            std::string(response));
  }
  return rules;
}

}  // namespace rrf
