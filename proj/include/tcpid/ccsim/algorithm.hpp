#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace tcpid::ccsim {

// The class id of each algorithm is its enumerator value.
enum class CcAlgorithm : int {
  NewReno = 0,
  Cubic = 1,
  Vegas = 2,
  Hybla = 3,
  Bbr = 4,
  Westwood = 5,
};

inline constexpr int kNumAlgorithms = 6;

inline constexpr std::array<CcAlgorithm, kNumAlgorithms> kAllAlgorithms = {
    CcAlgorithm::NewReno, CcAlgorithm::Cubic, CcAlgorithm::Vegas,
    CcAlgorithm::Hybla,   CcAlgorithm::Bbr,   CcAlgorithm::Westwood};

constexpr int class_id(CcAlgorithm algo) { return static_cast<int>(algo); }

std::string_view to_string(CcAlgorithm algo);

// Case-insensitive lookup by name ("NewReno", "cubic", ...).
std::optional<CcAlgorithm> parse_algorithm(std::string_view name);

std::optional<CcAlgorithm> algorithm_from_class_id(int id);

}  // namespace tcpid::ccsim
