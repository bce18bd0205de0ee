#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcpid {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout shared by dataset and checkpoint files:
//   8-byte magic | u64 LE header length | JSON header | float32 LE payload
struct Container {
  std::string header;
  std::vector<float> payload;
};

void write_container(const std::filesystem::path& path, const std::string& magic,
                     const Container& c);
Container read_container(const std::filesystem::path& path, const std::string& magic);

}  // namespace tcpid
