#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlcbreak/error.hpp"

namespace vlcbreak {

/// An ordered sequence of bits packed MSB-first into bytes. Bits past
/// size() inside the last byte are padding and are always zero.
class BitString {
 public:
  BitString() = default;

  /// Parses a string of '0'/'1' characters; spaces are ignored.
  static BitString from_text(std::string_view text);
  static BitString from_bytes(std::vector<std::uint8_t> bytes, std::size_t bit_length);

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  bool bit(std::size_t index) const noexcept {
    return (bytes_[index >> 3] >> (7 - (index & 7))) & 1u;
  }

  /// Appends the low n bits of value, most significant first.
  void write_bits(std::uint32_t value, unsigned n);
  void push_bit(bool b);
  void append(const BitString& other);

  /// Copies bits [begin, begin + n).
  BitString slice(std::size_t begin, std::size_t n) const;

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::string to_text() const;

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.size_ == b.size_ && a.bytes_ == b.bytes_;
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t size_ = 0;
};

/// Read position over a BitString. Tracks the run of zero bits ending at
/// the current position so the decoder can enforce the start-code rule.
class BitCursor {
 public:
  explicit BitCursor(const BitString& stream) : stream_(&stream) {}
  /// Positions the cursor at `position`; zero_run is recounted from the
  /// preceding bits.
  BitCursor(const BitString& stream, std::size_t position);

  std::size_t position() const noexcept { return position_; }
  std::size_t remaining() const noexcept { return stream_->size() - position_; }
  unsigned zero_run() const noexcept { return zero_run_; }
  const BitString& stream() const noexcept { return *stream_; }

  /// Reads n <= 32 bits. Throws Error(EndOfStream) when fewer remain.
  std::uint32_t read_bits(unsigned n);

  /// Non-throwing form used on hot decode paths.
  bool try_read_bits(unsigned n, std::uint32_t& out) noexcept;
  bool try_read_bit(unsigned& out) noexcept {
    if (position_ >= stream_->size()) return false;
    out = stream_->bit(position_++);
    zero_run_ = out ? 0 : zero_run_ + 1;
    return true;
  }

  /// Looks at the next n <= 32 bits without consuming them.
  bool peek_bits(unsigned n, std::uint32_t& out) const noexcept;

  /// True when a start code (23 zeros, a one, and an 8-bit id) begins
  /// exactly at the current position.
  bool at_start_code() const noexcept;

  void seek(std::size_t position);

 private:
  const BitString* stream_;
  std::size_t position_ = 0;
  unsigned zero_run_ = 0;
};

inline constexpr unsigned kStartCodeZeros = 23;
inline constexpr unsigned kStartCodeBits = kStartCodeZeros + 1 + 8;

/// Scans forward for the next start code, leaves the cursor after its id
/// byte and returns the id. Returns nullopt (cursor at end) if none.
std::optional<std::uint8_t> next_start_code(BitCursor& cursor);

/// Appends 0^23 1 followed by the 8-bit id.
void write_start_code(BitString& out, std::uint8_t id);

/// Every start code in the stream: bit offset of its first zero and id.
struct StartCodePos {
  std::size_t offset;
  std::uint8_t id;
};
std::vector<StartCodePos> scan_start_codes(const BitString& stream);

/// Longest zero run that is not part of a start code pattern. Zeros that
/// precede a start code's own 23 zeros count as ordinary data.
unsigned max_zero_run_outside_start_codes(const BitString& stream);

}  // namespace vlcbreak
