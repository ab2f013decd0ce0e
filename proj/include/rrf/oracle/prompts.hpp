#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrf/dataset/profile.hpp"
#include "rrf/error.hpp"
#include "rrf/metrics.hpp"

namespace rrf {

// Generation and feedback prompts both ask for this many questions.
inline constexpr std::size_t kQuestionsPerRound = 10;

// Lines that identify each prompt kind. The mock backend dispatches on them.
namespace prompt_marker {
inline constexpr std::string_view kGeneration =
    "You are a venture capital analyst specializing in evaluating startup founders.";
inline constexpr std::string_view kEvaluation = "You are a VC analyst that evaluates startup founders.";
inline constexpr std::string_view kFeedback =
    "Based on our testing of evaluation questions on founders, generate 10 new YES/NO questions.";
inline constexpr std::string_view kInsight =
    "You are a venture capital analyst studying what successful startup founders have in common.";
inline constexpr std::string_view kQuestionPrefix = "Question: ";
inline constexpr std::string_view kSummariesHeader = "Founder Summaries:";
inline constexpr std::string_view kRulesHeader = "Rules:";
}  // namespace prompt_marker

inline std::string collapse_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool last_space = false;
  for (char c : text) {
    if (c == '\n' || c == '\r') {
      if (!last_space) out += ' ';
      last_space = true;
    } else {
      out += c;
      last_space = (c == ' ');
    }
  }
  return std::string(trim(out));
}

namespace detail {
inline void append_founder_blocks(std::string& out, std::span<const std::string> profiles) {
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    out += "Founder " + std::to_string(i + 1) + ":\n";
    out += profiles[i];
    if (profiles[i].empty() || profiles[i].back() != '\n') out += '\n';
    out += '\n';
  }
}
}  // namespace detail

inline std::string build_generation_prompt(std::span<const std::string> profiles,
                                           std::span<const InsightSummary> hints) {
  std::string out;
  out += prompt_marker::kGeneration;
  out +=
      " Your task is to generate clear, objective YES/NO questions that could help assess a founder's "
      "likelihood of success. Your questions should be simple, interpretable and grounded in observable "
      "traits such as academic background, job roles, or industry experience.\n\n";
  out += "Here are " + std::to_string(profiles.size()) + " founders to help guide your question generation:\n\n";
  detail::append_founder_blocks(out, profiles);
  if (!hints.empty()) {
    out += "Insights about successful founders:\n";
    for (const auto& h : hints) out += "- " + collapse_newlines(h.text) + "\n";
    out += '\n';
  }
  out += "Please return 10 YES/NO questions, one per line. Do not include explanations or formatting.\n";
  out += "Example question: Has the founder previously worked at a well-known tech company?\n";
  return out;
}

inline std::string build_evaluation_prompt(std::string_view question, std::span<const std::string> profiles) {
  if (profiles.empty()) throw PreconditionError("evaluation prompt needs at least one founder");
  std::string out;
  out += prompt_marker::kEvaluation;
  out += "\nYour task is to assess whether the following question applies to each founder, based on their "
         "background information.\n";
  out += "For each founder, respond simply with Yes or No, one line per founder in order, written as "
         "\"Founder <number>: Yes\" or \"Founder <number>: No\".\n\n";
  out += prompt_marker::kQuestionPrefix;
  out += collapse_newlines(question);
  out += "\n\n";
  out += prompt_marker::kSummariesHeader;
  out += "\n\n";
  detail::append_founder_blocks(out, profiles);
  return out;
}

// Per-question performance on the batch it was scored against.
struct FeedbackStat {
  std::string question;
  std::optional<double> precision;
  std::optional<double> recall;
  std::uint64_t predicted = 0;
  std::uint64_t batch_size = 0;
};

inline std::string format_optional_percent(const std::optional<double>& v) {
  return v ? format_percent(*v) : std::string("n/a");
}

inline std::string build_feedback_prompt(std::span<const FeedbackStat> stats, std::span<const std::string> profiles) {
  if (stats.empty()) throw PreconditionError("feedback prompt needs the stats of a scored round");
  std::string out;
  out += prompt_marker::kFeedback;
  out += "\n\nPrevious questions performance:\n\n";
  for (const auto& s : stats) {
    out += std::string(prompt_marker::kQuestionPrefix) + collapse_newlines(s.question) + "\n";
    out += "Precision: " + format_optional_percent(s.precision) + "\n";
    out += "Recall: " + format_optional_percent(s.recall) + "\n";
    out += "Number of founders predicted successful: " + std::to_string(s.predicted) + "/" +
           std::to_string(s.batch_size) + "\n\n";
  }
  if (!profiles.empty()) {
    out += "New batch of " + std::to_string(profiles.size()) + " founders:\n\n";
    detail::append_founder_blocks(out, profiles);
  }
  out += "Requirements:\n";
  out += "1. Questions must be objective and directly answerable from founder data.\n";
  out += "2. Focus on patterns that showed high precision.\n";
  out += "3. Consider patterns in the new batch of " + std::to_string(profiles.size()) +
         " founders when generating questions.\n\n";
  out += "Return the 10 questions one per line. Do not include explanations or formatting.\n";
  return out;
}

// Group prompt: per-founder summaries and shared rules in one call.
inline std::string build_insight_prompt(std::span<const std::string> profiles, std::size_t rules) {
  std::string out;
  out += prompt_marker::kInsight;
  out += "\n\nHere are " + std::to_string(profiles.size()) + " successful founders:\n\n";
  detail::append_founder_blocks(out, profiles);
  out += "First, summarize each founder in one or two sentences. Then extract " + std::to_string(rules) +
         " qualitative rules describing high-level patterns shared by these founders.\n";
  out += "Write the summaries after a line \"Summaries:\" and the rules after a line \"Rules:\", one rule per line.\n";
  return out;
}

}  // namespace rrf
