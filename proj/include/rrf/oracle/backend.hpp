#pragma once

#include <span>
#include <string>

#include "rrf/metrics.hpp"

namespace rrf {

// The language-model boundary. Implementations must be safe to call from
// several threads at once.
class OracleBackend {
 public:
  virtual ~OracleBackend() = default;

  // Free-form completion of a single user prompt.
  virtual std::string complete(const std::string& prompt) = 0;

  // One YES/NO per rendered profile, in input order.
  virtual BitRow answer_batch(const std::string& question, std::span<const std::string> profiles) = 0;
};

}  // namespace rrf
