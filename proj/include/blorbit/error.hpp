#pragma once

#include <stdexcept>
#include <string>

namespace blorbit {

// Every failure carries a short machine-readable tag (e.g. "NR-violation",
// "H2-violation", "detA-zero", "Omega-hat-zero", "config") so the CLI can
// report which hypothesis or stage broke.
class Error : public std::runtime_error {
 public:
  Error(std::string tag, const std::string& message)
      : std::runtime_error(tag + ": " + message), tag_(std::move(tag)) {}

  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

namespace tags {
inline constexpr const char* kConfig = "config";
inline constexpr const char* kInvalid = "invalid-argument";
inline constexpr const char* kNonResonance = "NR-violation";
inline constexpr const char* kSmallDenominator = "H2-violation";
inline constexpr const char* kSingularA = "detA-zero";
inline constexpr const char* kOmegaHatZero = "Omega-hat-zero";
inline constexpr const char* kNoAdmissibleT = "no-admissible-T";
inline constexpr const char* kChart = "action-chart";
inline constexpr const char* kRange = "range-divergence";
inline constexpr const char* kKernel = "kernel-search";
inline constexpr const char* kIntegration = "integration";
inline constexpr const char* kUndersampled = "undersampled";
}  // namespace tags

}  // namespace blorbit
