#include "vlcbreak/bitio.hpp"

#include <algorithm>

namespace vlcbreak {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::EndOfStream: return "EndOfStream";
    case Errc::ValueTooWide: return "ValueTooWide";
    case Errc::UnknownSymbol: return "UnknownSymbol";
    case Errc::KeyShapeMismatch: return "KeyShapeMismatch";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::DomainError: return "DomainError";
    case Errc::Unencodable: return "Unencodable";
    case Errc::BadParams: return "BadParams";
    case Errc::NotMpeg1Like: return "NotMpeg1Like";
    case Errc::ExtractionFailed: return "ExtractionFailed";
    case Errc::InconsistentPair: return "InconsistentPair";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

BitString BitString::from_text(std::string_view text) {
  BitString out;
  for (char c : text) {
    if (c == '0' || c == '1') {
      out.push_bit(c == '1');
    } else if (c != ' ' && c != '\'' && c != '_') {
      throw Error(Errc::ParseError, "bad bit character in '" + std::string(text) + "'");
    }
  }
  return out;
}

BitString BitString::from_bytes(std::vector<std::uint8_t> bytes, std::size_t bit_length) {
  if (bytes.size() * 8 < bit_length)
    throw Error(Errc::ParseError, "bit length exceeds payload");
  BitString out;
  bytes.resize((bit_length + 7) / 8);
  if (bit_length % 8 != 0) bytes.back() &= static_cast<std::uint8_t>(0xFF00u >> (bit_length % 8));
  out.bytes_ = std::move(bytes);
  out.size_ = bit_length;
  return out;
}

void BitString::push_bit(bool b) {
  if ((size_ & 7) == 0) bytes_.push_back(0);
  if (b) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (size_ & 7));
  ++size_;
}

void BitString::write_bits(std::uint32_t value, unsigned n) {
  if (n > 32) throw Error(Errc::ValueTooWide, "field wider than 32 bits");
  if (n < 32 && (static_cast<std::uint64_t>(value) >> n) != 0)
    throw Error(Errc::ValueTooWide, std::to_string(value) + " does not fit in " + std::to_string(n) + " bits");
  for (unsigned i = n; i-- > 0;) push_bit((value >> i) & 1u);
}

void BitString::append(const BitString& other) {
  for (std::size_t i = 0; i < other.size_; ++i) push_bit(other.bit(i));
}

BitString BitString::slice(std::size_t begin, std::size_t n) const {
  BitString out;
  for (std::size_t i = 0; i < n; ++i) out.push_bit(bit(begin + i));
  return out;
}

std::string BitString::to_text() const {
  std::string s;
  s.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) s.push_back(bit(i) ? '1' : '0');
  return s;
}

BitCursor::BitCursor(const BitString& stream, std::size_t position) : stream_(&stream) {
  seek(position);
}

void BitCursor::seek(std::size_t position) {
  if (position > stream_->size()) throw Error(Errc::EndOfStream, "seek past end");
  position_ = position;
  zero_run_ = 0;
  while (zero_run_ < position_ && !stream_->bit(position_ - 1 - zero_run_)) ++zero_run_;
}

bool BitCursor::try_read_bits(unsigned n, std::uint32_t& out) noexcept {
  if (n > 32 || remaining() < n) return false;
  std::uint32_t v = 0;
  for (unsigned i = 0; i < n; ++i) v = (v << 1) | stream_->bit(position_ + i);
  position_ += n;
  if (n > 0) {
    if (v == 0) {
      zero_run_ += n;
    } else {
      zero_run_ = static_cast<unsigned>(__builtin_ctz(v));
    }
  }
  out = v;
  return true;
}

std::uint32_t BitCursor::read_bits(unsigned n) {
  std::uint32_t v = 0;
  if (!try_read_bits(n, v)) throw Error(Errc::EndOfStream, "read of " + std::to_string(n) + " bits past end");
  return v;
}

bool BitCursor::peek_bits(unsigned n, std::uint32_t& out) const noexcept {
  if (n > 32 || remaining() < n) return false;
  std::uint32_t v = 0;
  for (unsigned i = 0; i < n; ++i) v = (v << 1) | stream_->bit(position_ + i);
  out = v;
  return true;
}

bool BitCursor::at_start_code() const noexcept {
  std::uint32_t prefix = 0;
  if (remaining() < kStartCodeBits) return false;
  return peek_bits(kStartCodeZeros + 1, prefix) && prefix == 1u;
}

std::optional<std::uint8_t> next_start_code(BitCursor& cursor) {
  const BitString& s = cursor.stream();
  std::size_t zeros = 0;
  for (std::size_t pos = cursor.position(); pos < s.size(); ++pos) {
    if (!s.bit(pos)) {
      ++zeros;
      continue;
    }
    if (zeros >= kStartCodeZeros && pos + 1 + 8 <= s.size()) {
      cursor.seek(pos + 1);
      return static_cast<std::uint8_t>(cursor.read_bits(8));
    }
    zeros = 0;
  }
  cursor.seek(s.size());
  return std::nullopt;
}

void write_start_code(BitString& out, std::uint8_t id) {
  out.write_bits(0, kStartCodeZeros);
  out.push_bit(true);
  out.write_bits(id, 8);
}

std::vector<StartCodePos> scan_start_codes(const BitString& stream) {
  std::vector<StartCodePos> found;
  std::size_t zeros = 0;
  for (std::size_t pos = 0; pos < stream.size(); ++pos) {
    if (!stream.bit(pos)) {
      ++zeros;
      continue;
    }
    if (zeros >= kStartCodeZeros && pos + 1 + 8 <= stream.size()) {
      std::uint8_t id = 0;
      for (unsigned i = 0; i < 8; ++i) id = static_cast<std::uint8_t>((id << 1) | stream.bit(pos + 1 + i));
      found.push_back({pos - kStartCodeZeros, id});
      pos += 8;
    }
    zeros = 0;
  }
  return found;
}

unsigned max_zero_run_outside_start_codes(const BitString& stream) {
  unsigned best = 0;
  unsigned run = 0;
  for (std::size_t pos = 0; pos < stream.size(); ++pos) {
    if (!stream.bit(pos)) {
      ++run;
      continue;
    }
    if (run >= kStartCodeZeros && pos + 1 + 8 <= stream.size()) {
      best = std::max(best, run - kStartCodeZeros);
      std::uint32_t id = 0;
      for (unsigned i = 0; i < 8; ++i) id = (id << 1) | stream.bit(pos + 1 + i);
      pos += 8;
      run = id == 0 ? 8 : static_cast<unsigned>(__builtin_ctz(id));
      continue;
    }
    best = std::max(best, run);
    run = 0;
  }
  return std::max(best, run);
}

}  // namespace vlcbreak
