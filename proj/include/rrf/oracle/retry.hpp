#pragma once

#include <string>
#include <utility>

#include "rrf/error.hpp"
#include "rrf/oracle/backend.hpp"

namespace rrf {

// Sends the same prompt until `parse` accepts the response, at most
// 1 + retries times. The last MalformedResponse is rethrown.
template <typename Parse>
auto complete_with_retries(OracleBackend& backend, const std::string& prompt, int retries, Parse&& parse)
    -> decltype(parse(std::string{})) {
  for (int attempt = 0;; ++attempt) {
    try {
      return parse(backend.complete(prompt));
    } catch (const MalformedResponse&) {
      if (attempt >= retries) throw;
    }
  }
}

}  // namespace rrf
