#pragma once

#include <string>

#include "vlcbreak/bitio.hpp"

namespace vlcbreak {

/// `.mmv` files: "MMV1", 64-bit big-endian bit length, padded payload.
std::string to_container(const BitString& bits);
BitString from_container(const std::string& bytes);

void write_stream_file(const std::string& path, const BitString& bits);
BitString read_stream_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace vlcbreak
