#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfp {

// Every failure carries a short machine-readable code ("empty-evaluation-set",
// "budget-exceeds-pool", ...) plus optional human detail.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code, const std::string& detail = {});

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Raised by negative sampling when the victim makes fewer mistakes than the
// requested budget. Callers may lower the budget or fall back to uniform.
class InsufficientNegatives : public Error {
 public:
  InsufficientNegatives(std::size_t available, std::size_t requested);

  std::size_t available() const noexcept { return available_; }
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::size_t available_;
  std::size_t requested_;
};

}  // namespace mfp
