#include "tcpid/ccsim/algorithm.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace tcpid::ccsim {

std::string_view to_string(CcAlgorithm algo) {
  switch (algo) {
    case CcAlgorithm::NewReno: return "NewReno";
    case CcAlgorithm::Cubic: return "Cubic";
    case CcAlgorithm::Vegas: return "Vegas";
    case CcAlgorithm::Hybla: return "Hybla";
    case CcAlgorithm::Bbr: return "BBR";
    case CcAlgorithm::Westwood: return "Westwood";
  }
  return "?";
}

std::optional<CcAlgorithm> parse_algorithm(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string key = lower(name);
  for (CcAlgorithm algo : kAllAlgorithms) {
    if (lower(to_string(algo)) == key) return algo;
  }
  return std::nullopt;
}

std::optional<CcAlgorithm> algorithm_from_class_id(int id) {
  if (id < 0 || id >= kNumAlgorithms) return std::nullopt;
  return static_cast<CcAlgorithm>(id);
}

}  // namespace tcpid::ccsim
