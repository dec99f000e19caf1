#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sfanc {

// Invalid arguments or inconsistent configuration. CLI exit code 2.
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad input data: malformed files, unsupported formats, failed checksums.
// CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An adaptive run produced a non-finite weight or an error sample beyond
// the abort threshold. CLI exit code 4.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::int64_t sample)
      : std::runtime_error(what + " (sample " + std::to_string(sample) + ")"),
        sample_index(sample) {}

  std::int64_t sample_index;
};

}  // namespace sfanc
