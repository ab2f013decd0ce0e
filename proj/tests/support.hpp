#pragma once

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rrf/answer_matrix.hpp"
#include "rrf/metrics.hpp"

namespace rrf::testkit {

inline std::filesystem::path source_dir() { return RRF_SOURCE_DIR; }
inline std::filesystem::path config_dir() { return source_dir() / "config"; }

inline BitRow random_bits(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution d(p);
  BitRow out(n);
  for (auto& b : out) b = d(rng) ? 1 : 0;
  return out;
}

inline std::string qid(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "q%03zu", i);
  return buf;
}

// Random matrix; YES rates differ per row so metrics vary.
inline AnswerMatrix random_matrix(std::mt19937_64& rng, std::size_t questions, std::size_t founders,
                                  double base_rate = 0.2) {
  AnswerMatrix m;
  std::uniform_real_distribution<double> rate(0.02, 0.6);
  for (std::size_t f = 0; f < founders; ++f) m.founder_ids.push_back("F" + std::to_string(f));
  m.labels = random_bits(rng, founders, base_rate);
  for (std::size_t q = 0; q < questions; ++q) {
    m.question_ids.push_back(qid(q));
    m.answers.push_back(random_bits(rng, founders, rate(rng)));
  }
  return m;
}

// Matrix where some rows are noisy copies of others, so de-duplication has work to do.
inline AnswerMatrix clustered_matrix(std::mt19937_64& rng, std::size_t questions, std::size_t founders) {
  auto m = random_matrix(rng, questions, founders);
  std::bernoulli_distribution copy(0.5);
  std::uniform_real_distribution<double> flip_rate(0.0, 0.05);
  for (std::size_t q = 1; q < questions; ++q) {
    if (!copy(rng)) continue;
    const auto src = std::uniform_int_distribution<std::size_t>(0, q - 1)(rng);
    std::bernoulli_distribution flip(flip_rate(rng));
    m.answers[q] = m.answers[src];
    for (auto& b : m.answers[q]) {
      if (flip(rng)) b ^= 1;
    }
  }
  return m;
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("rrf-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace rrf::testkit
