#include "mfp/error.hpp"

namespace mfp {

Error::Error(std::string code, const std::string& detail)
    : std::runtime_error(detail.empty() ? code : code + ": " + detail),
      code_(std::move(code)) {}

InsufficientNegatives::InsufficientNegatives(std::size_t available, std::size_t requested)
    : Error("insufficient-negatives",
            "victim misclassifies " + std::to_string(available) + " points, " +
                std::to_string(requested) + " requested"),
      available_(available),
      requested_(requested) {}

}  // namespace mfp
