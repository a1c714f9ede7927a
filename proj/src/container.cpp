#include "vlcbreak/container.hpp"

#include <fstream>
#include <sstream>

namespace vlcbreak {

std::string to_container(const BitString& bits) {
  std::string out = "MMV1";
  std::uint64_t n = bits.size();
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
  out.append(bits.bytes().begin(), bits.bytes().end());
  return out;
}

BitString from_container(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "MMV1") != 0) throw Error(Errc::ParseError, "not an MMV1 stream");
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i) n = (n << 8) | static_cast<unsigned char>(bytes[4 + static_cast<std::size_t>(i)]);
  std::vector<std::uint8_t> payload(bytes.begin() + 12, bytes.end());
  if (payload.size() != (n + 7) / 8) throw Error(Errc::ParseError, "MMV1 payload size does not match bit length");
  return BitString::from_bytes(std::move(payload), static_cast<std::size_t>(n));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

void write_stream_file(const std::string& path, const BitString& bits) { write_text_file(path, to_container(bits)); }

BitString read_stream_file(const std::string& path) { return from_container(read_text_file(path)); }

}  // namespace vlcbreak
