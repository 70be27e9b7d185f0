#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "btm/mlp.hpp"

namespace btm {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Little-endian scalar/array append and cursor-based reads. All container
// formats share the pattern: magic, version u32, dimensions, f32 payload,
// CRC32 of the payload bytes.
void put_u32(std::string& buf, std::uint32_t v);
void put_u64(std::string& buf, std::uint64_t v);
void put_f32_array(std::string& buf, const Vec& v);

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;
  std::uint32_t u32();
  std::uint64_t u64();
  Vec f32_array(std::size_t n);
  void expect_magic(const char magic[4]);
  bool exhausted() const { return pos == buf.size(); }
};

std::uint32_t crc32_of(const std::string& data, std::size_t from = 0);

// write-temp then rename, so readers never observe partial files
void atomic_write_text(const std::filesystem::path& path, const std::string& data);
std::string read_file(const std::filesystem::path& path);

}  // namespace btm
