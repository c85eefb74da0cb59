#pragma once
// Error taxonomy shared by file loaders and the CLI: configuration problems
// exit with code 2, data/file problems with code 3.

#include <stdexcept>
#include <string>

namespace sparsereg {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sparsereg
