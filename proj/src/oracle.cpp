#include "vlcbreak/oracle.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace vlcbreak {

const char* verdict_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::Rejected: return "Rejected";
    case VerdictKind::AcceptedClean: return "AcceptedClean";
    case VerdictKind::AcceptedImplausible: return "AcceptedImplausible";
  }
  return "?";
}

Verdict test_key(const BitString& stream, const TableSet& candidate, const CheckSet& checks) {
  DecodeResult r = decode(stream, candidate, checks);
  Verdict v;
  if (r.error) {
    v.kind = VerdictKind::Rejected;
    v.error = r.error;
    return v;
  }
  if (checks.plausibility_threshold) {
    v.score = plausibility_score(r.sequence);
    if (v.score > *checks.plausibility_threshold) v.kind = VerdictKind::AcceptedImplausible;
  }
  return v;
}

std::optional<std::size_t> first_error_offset(const BitString& stream, const TableSet& candidate) {
  DecodeResult r = decode(stream, candidate, CheckSet::all());
  if (r.error) return r.error->bit_offset;
  return std::nullopt;
}

double plausibility_score(const MiniSequence& seq) {
  double jump_sum = 0, level_sum = 0;
  std::size_t jumps = 0, levels = 0;
  for (const MiniPicture& pic : seq.pictures) {
    for (const MiniSlice& sl : pic.slices) {
      std::array<int, 3> pred{};
      int col = -1;
      int prev_col = -10;
      int prev_right = 0;  // DC of the right luma blocks of the previous intra MB (top row)
      int prev_right_low = 0;
      for (const MiniMacroblock& mb : sl.mbs) {
        col += mb.address_increment;
        for (const MiniBlock& b : mb.blocks)
          for (const Coefficient& c : b.ac) {
            level_sum += std::abs(c.level);
            ++levels;
          }
        if (!mb.is_intra()) {
          pred = {0, 0, 0};
          continue;
        }
        std::array<int, 4> luma{};
        for (std::size_t i = 0; i < mb.blocks.size(); ++i) {
          const MiniBlock& b = mb.blocks[i];
          int& p = pred[i < 4 ? 0 : 1 + ((i - 4) & 1u)];
          p += dc_differential(b.dc_size, b.dc_bits);
          if (i < 4) luma[i] = p;
        }
        jump_sum += std::abs(luma[1] - luma[0]) + std::abs(luma[3] - luma[2]);
        jumps += 2;
        if (prev_col == col - 1) {
          jump_sum += std::abs(luma[0] - prev_right) + std::abs(luma[2] - prev_right_low);
          jumps += 2;
        }
        prev_col = col;
        prev_right = luma[1];
        prev_right_low = luma[3];
      }
    }
  }
  double score = 0;
  if (jumps) score += jump_sum / static_cast<double>(jumps);
  if (levels) score += level_sum / static_cast<double>(levels);
  return score;
}

#ifndef VLCBREAK_PLAUSIBILITY_THRESHOLD
#error "VLCBREAK_PLAUSIBILITY_THRESHOLD comes from tests/fixtures/plausibility.txt"
#endif

double default_plausibility_threshold() { return VLCBREAK_PLAUSIBILITY_THRESHOLD; }

std::string format_verdict(const Verdict& v) {
  std::ostringstream out;
  out << "verdict " << verdict_name(v.kind) << "\n";
  if (v.error) {
    out << "error " << error_kind_name(v.error->kind) << "\n";
    out << "offset " << v.error->bit_offset << "\n";
    out << "picture " << v.error->picture << "\nslice " << v.error->slice << "\nmb " << v.error->mb << "\nblock "
        << v.error->block << "\n";
  }
  if (v.kind != VerdictKind::Rejected) out << "score " << v.score << "\n";
  return out.str();
}

std::string status_pgm(const DecodeResult& r, std::size_t picture, unsigned mb_width, unsigned mb_height) {
  std::string out = "P5\n" + std::to_string(mb_width) + " " + std::to_string(mb_height) + "\n255\n";
  for (unsigned i = 0; i < mb_width * mb_height; ++i) {
    MbStatus s = MbStatus::NotReached;
    if (picture < r.mb_status.size() && i < r.mb_status[picture].size()) s = r.mb_status[picture][i];
    unsigned char px = s == MbStatus::Decoded ? 255 : s == MbStatus::Skipped ? 160 : s == MbStatus::Failed ? 0 : 80;
    out.push_back(static_cast<char>(px));
  }
  return out;
}

}  // namespace vlcbreak
