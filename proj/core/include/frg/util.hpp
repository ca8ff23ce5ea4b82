#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace frg {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Hash of a whole file's contents; throws frg::DataError when unreadable.
std::uint64_t hash_file(const std::string& path);

/// Fixed-width lowercase hex.
std::string to_hex(std::uint64_t value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// Little-endian append/read helpers for the binary formats.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  void raw(std::span<const std::uint8_t> bytes);
  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : data_(bytes) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::span<const std::uint8_t> raw(std::size_t n);
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace frg

namespace frg {

/// Envelope shared by the binary file formats:
///   magic[4] | version u32 | payload_size u64 | payload | fnv1a64(payload) u64
std::vector<std::uint8_t> seal(std::string_view magic, std::uint32_t version,
                               std::span<const std::uint8_t> payload);

/// Inverse of seal(). Throws frg::FormatError on wrong magic, version mismatch,
/// truncation or checksum failure.
std::vector<std::uint8_t> unseal(std::span<const std::uint8_t> file, std::string_view magic,
                                 std::uint32_t version);

/// The 4-byte magic of a sealed file, or "" when too short.
std::string peek_magic(std::span<const std::uint8_t> file);

}  // namespace frg
