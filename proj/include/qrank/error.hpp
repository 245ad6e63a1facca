#pragma once

#include <stdexcept>
#include <string>

namespace qrank {

// Malformed input: bad dataset lines, inadmissible labels, inconsistent
// configs, broken checkpoints. The CLI maps this to exit code 1; every
// other exception is a runtime failure (exit code 2).
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qrank
