#include "tcpid/container.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace tcpid {

namespace {

void put_u64(std::ofstream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::ifstream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void swap_if_big_endian(std::vector<float>& values) {
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& f : values) {
      auto bits = std::bit_cast<std::uint32_t>(f);
      bits = (bits >> 24) | ((bits >> 8) & 0xFF00) | ((bits << 8) & 0xFF0000) | (bits << 24);
      f = std::bit_cast<float>(bits);
    }
  }
}

}  // namespace

void write_container(const std::filesystem::path& path, const std::string& magic,
                     const Container& c) {
  if (magic.size() != 8) throw std::invalid_argument("magic must be 8 bytes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(magic.data(), 8);
  put_u64(out, c.header.size());
  out.write(c.header.data(), static_cast<std::streamsize>(c.header.size()));
  std::vector<float> le = c.payload;
  swap_if_big_endian(le);
  out.write(reinterpret_cast<const char*>(le.data()),
            static_cast<std::streamsize>(le.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path, const std::string& magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string got(8, '\0');
  in.read(got.data(), 8);
  if (!in || got != magic) {
    throw FormatError(path.string() + ": bad magic, expected " + magic);
  }
  const std::uint64_t header_len = get_u64(in);
  const auto file_size = std::filesystem::file_size(path);
  if (!in || header_len > file_size - 16) throw FormatError(path.string() + ": truncated header");
  Container c;
  c.header.resize(header_len);
  in.read(c.header.data(), static_cast<std::streamsize>(header_len));
  const auto payload_bytes = file_size - 16 - header_len;
  if (payload_bytes % sizeof(float) != 0) {
    throw FormatError(path.string() + ": payload is not a whole number of float32 values");
  }
  c.payload.resize(payload_bytes / sizeof(float));
  in.read(reinterpret_cast<char*>(c.payload.data()), static_cast<std::streamsize>(payload_bytes));
  if (!in) throw FormatError(path.string() + ": truncated payload");
  swap_if_big_endian(c.payload);
  return c;
}

}  // namespace tcpid
