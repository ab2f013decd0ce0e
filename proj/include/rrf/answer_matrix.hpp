#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrf/error.hpp"
#include "rrf/io.hpp"
#include "rrf/metrics.hpp"

namespace rrf {

// Questions x founders YES/NO answers with founder labels. Founder order is the
// evaluation order and is significant for trajectories.
struct AnswerMatrix {
  std::vector<std::string> question_ids;
  std::vector<std::string> founder_ids;
  std::vector<BitRow> answers;  // answers[q][f]
  BitRow labels;                // aligned to founder_ids

  // Questions whose answers could not be obtained. They carry no row and are
  // excluded from every computation.
  std::vector<std::string> absent_question_ids;

  std::size_t num_questions() const { return question_ids.size(); }
  std::size_t num_founders() const { return founder_ids.size(); }

  void validate() const {
    if (answers.size() != question_ids.size()) {
      throw DimensionError("answer matrix has " + std::to_string(answers.size()) + " rows for " +
                           std::to_string(question_ids.size()) + " question ids");
    }
    if (labels.size() != founder_ids.size()) {
      throw DimensionError("answer matrix has " + std::to_string(labels.size()) + " labels for " +
                           std::to_string(founder_ids.size()) + " founders");
    }
    for (std::size_t q = 0; q < answers.size(); ++q) {
      if (answers[q].size() != founder_ids.size()) {
        throw DimensionError("row " + question_ids[q] + " has " + std::to_string(answers[q].size()) +
                             " cells for " + std::to_string(founder_ids.size()) + " founders");
      }
    }
  }

  std::optional<std::size_t> find(std::string_view id) const {
    const auto it = std::find(question_ids.begin(), question_ids.end(), id);
    if (it == question_ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - question_ids.begin());
  }

  std::size_t index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw LookupError("question " + std::string(id) + " not in answer matrix");
  }

  BitView row(std::size_t q) const { return answers.at(q); }
  BitView row(std::string_view id) const { return answers[index_of(id)]; }

  ConfusionCounts counts(std::size_t q) const { return confusion(answers.at(q), labels); }
  std::optional<Rate> precision_of(std::size_t q) const { return precision(counts(q)); }
  std::optional<Rate> recall_of(std::size_t q) const { return recall(counts(q)); }

  // Rows for `ids`, in that order. Unknown ids raise LookupError.
  AnswerMatrix select(std::span<const std::string> ids) const {
    AnswerMatrix out;
    out.founder_ids = founder_ids;
    out.labels = labels;
    for (const auto& id : ids) {
      out.question_ids.push_back(id);
      out.answers.push_back(answers[index_of(id)]);
    }
    return out;
  }

  friend bool operator==(const AnswerMatrix&, const AnswerMatrix&) = default;
};

// CSV layout: optional "# ..." provenance line, header "question_id,<founder ids>",
// one 0/1 row per question, absent questions as rows of empty cells, and a
// final "label" row.
inline std::string matrix_to_csv(const AnswerMatrix& m, const std::optional<Provenance>& meta = {}) {
  m.validate();
  std::string out;
  if (meta) out += meta->csv_comment() + "\n";
  out += "question_id";
  for (const auto& f : m.founder_ids) out += "," + f;
  out += '\n';
  for (std::size_t q = 0; q < m.num_questions(); ++q) {
    out += m.question_ids[q];
    for (auto a : m.answers[q]) out += a ? ",1" : ",0";
    out += '\n';
  }
  for (const auto& id : m.absent_question_ids) {
    out += id;
    out.append(m.num_founders(), ',');
    out += '\n';
  }
  out += "label";
  for (auto l : m.labels) out += l ? ",1" : ",0";
  out += '\n';
  return out;
}

struct MatrixFile {
  AnswerMatrix matrix;
  std::optional<Provenance> provenance;
};

inline MatrixFile matrix_from_csv(std::string_view text, const std::string& source = "<memory>") {
  MatrixFile out;
  auto& m = out.matrix;
  auto lines = split_lines(text);
  std::size_t i = 0;
  if (i < lines.size()) {
    if (auto p = Provenance::parse_csv_comment(lines[i])) {
      out.provenance = *p;
      ++i;
    }
  }
  if (i >= lines.size()) throw IoError(source + ": missing header row");
  auto header = split(lines[i++], ',');
  if (header.empty() || header[0] != "question_id") throw IoError(source + ": header must start with question_id");
  m.founder_ids.assign(header.begin() + 1, header.end());
  const auto width = m.founder_ids.size();

  auto parse_bits = [&](const std::vector<std::string>& cells, std::size_t line_no) {
    BitRow row;
    row.reserve(width);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c] == "1") row.push_back(1);
      else if (cells[c] == "0") row.push_back(0);
      else throw IoError(source + ":" + std::to_string(line_no) + ": cell must be 0 or 1, got '" + cells[c] + "'");
    }
    return row;
  };

  bool saw_labels = false;
  for (; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = split(lines[i], ',');
    if (cells.size() != width + 1) {
      throw DimensionError(source + ":" + std::to_string(i + 1) + ": expected " + std::to_string(width + 1) +
                           " cells, got " + std::to_string(cells.size()));
    }
    if (cells[0] == "label") {
      m.labels = parse_bits(cells, i + 1);
      saw_labels = true;
      continue;
    }
    if (saw_labels) throw IoError(source + ": rows after the label row");
    const bool absent = width > 0 && std::all_of(cells.begin() + 1, cells.end(), [](const auto& s) { return s.empty(); });
    if (absent) {
      m.absent_question_ids.push_back(cells[0]);
    } else {
      m.question_ids.push_back(cells[0]);
      m.answers.push_back(parse_bits(cells, i + 1));
    }
  }
  if (!saw_labels) throw IoError(source + ": missing label row");
  m.validate();
  return out;
}

inline void write_matrix(const std::filesystem::path& path, const AnswerMatrix& m,
                         const std::optional<Provenance>& meta = {}) {
  write_text_file(path, matrix_to_csv(m, meta));
}

inline MatrixFile read_matrix(const std::filesystem::path& path) {
  return matrix_from_csv(read_text_file(path), path.string());
}

}  // namespace rrf
