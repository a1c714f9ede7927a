#pragma once

#include <cstdint>
#include <string>

#include "vlcbreak/cipher.hpp"
#include "vlcbreak/codec.hpp"

namespace vlcbreak {

struct GeneratorParams {
  std::uint16_t width = 176;
  std::uint16_t height = 144;
  ChromaFormat chroma = ChromaFormat::k420;
  std::size_t pictures = 3;
  /// Picture types cycled after the leading I picture, e.g. "PBP".
  std::string pattern = "PBP";
  double intra_ratio = 0.1;          // intra MBs inside P/B pictures
  double skip_ratio = 0.1;           // skipped MBs inside P/B pictures
  double motion_activity = 0.5;      // chance an inter MB changes its vector
  double coded_block_ratio = 0.5;    // cbp bit probability
  double coefficient_density = 0.3;  // mean AC coefficients per block / 8
  double escape_ratio = 0.05;        // share of coefficients outside the table
  double full_block_ratio = 0.15;    // coded blocks filled to all 64 positions
  double intra_vlc_ratio = 0.0;      // pictures with intra_vlc_format = 1
  double concealment_ratio = 0.0;    // pictures with concealment vectors
  double gap_ratio = 0.05;           // address increments above 1
  std::uint8_t f_code = 2;           // 1..3
  bool d_pictures = false;           // allow 'D' in the pattern
  /// Key spaces the stream must stay encodable under.
  SchemeShape shapes = standard_shapes();
};

/// Throws Error(BadParams) when params are outside the profile.
void validate_params(const GeneratorParams& p);

/// Deterministic synthetic sequence. Every MB is drawn so that no key of
/// `params.shapes` can make its encoding contain 23 zeros in a row.
MiniSequence generate_video(std::uint64_t seed, const GeneratorParams& params = {});

/// Zero-bit extremes over all codeword sets a key of `shape` can produce.
struct ZeroProfile {
  unsigned all_zero = 0;  // longest codeword made only of zeros
  unsigned leading = 0;
  unsigned trailing = 0;
};
ZeroProfile zero_profile(const HuffmanTable& table, const KeySpaceShape& shape);

/// Longest zero run any key could give `elements`, starting after `carry`
/// possible zeros; updates carry to the possible run at the end.
unsigned worst_zero_run(const std::vector<SyntaxElement>& elements, const std::array<ZeroProfile, kRoleCount>& prof,
                        unsigned& carry);

}  // namespace vlcbreak
