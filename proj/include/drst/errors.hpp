#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace drst {

// Malformed inputs: shapes, empty sets, non-finite entries, invalid specs.
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Divergence, non-finite gradients, failed Monte Carlo trials.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what,
                          std::optional<std::size_t> trial = std::nullopt)
      : std::runtime_error(what), trial_(trial) {}

  std::optional<std::size_t> trial() const { return trial_; }

 private:
  std::optional<std::size_t> trial_;
};

}  // namespace drst
