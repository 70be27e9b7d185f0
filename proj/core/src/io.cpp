#include "btm/io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace btm {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32_array(std::string& buf, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const float f = static_cast<float>(v[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
  }
}

std::uint32_t Cursor::u32() {
  if (pos + 4 > buf.size()) throw FormatError("truncated file (u32)");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::uint64_t Cursor::u64() {
  if (pos + 8 > buf.size()) throw FormatError("truncated file (u64)");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

Vec Cursor::f32_array(std::size_t n) {
  if (pos + 4 * n > buf.size()) throw FormatError("truncated file (payload)");
  Vec v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 4 * i + k]))
              << (8 * k);
    float f;
    std::memcpy(&f, &bits, 4);
    v[static_cast<Eigen::Index>(i)] = static_cast<double>(f);
  }
  pos += 4 * n;
  return v;
}

void Cursor::expect_magic(const char magic[4]) {
  if (pos + 4 > buf.size()) throw FormatError("truncated file (magic)");
  if (std::memcmp(buf.data() + pos, magic, 4) != 0)
    throw FormatError("bad magic bytes, expected " + std::string(magic, 4));
  pos += 4;
}

std::uint32_t crc32_of(const std::string& data, std::size_t from) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data() + from),
                static_cast<uInt>(data.size() - from));
  return static_cast<std::uint32_t>(crc);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write: " + tmp);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

}  // namespace btm
