#pragma once

#include <optional>
#include <string>

#include "vlcbreak/codec.hpp"

namespace vlcbreak {

enum class VerdictKind : std::uint8_t { Rejected, AcceptedClean, AcceptedImplausible };
const char* verdict_name(VerdictKind k);

struct Verdict {
  VerdictKind kind = VerdictKind::AcceptedClean;
  std::optional<SyntaxError> error;  // set when Rejected
  double score = 0.0;                // set when plausibility scoring ran
};

/// Decodes under the candidate tables and classifies the outcome. The
/// plausibility test runs only when checks carry a threshold.
Verdict test_key(const BitString& stream, const TableSet& candidate, const CheckSet& checks = CheckSet::all());

std::optional<std::size_t> first_error_offset(const BitString& stream, const TableSet& candidate);

/// Mean |DC jump| between horizontally adjacent intra luminance blocks plus
/// mean |AC level|. Zero for a sequence without coefficients.
double plausibility_score(const MiniSequence& seq);

/// Threshold shipped with the build (honest maximum times 1.5).
double default_plausibility_threshold();

/// One-line-per-field report for the CLI.
std::string format_verdict(const Verdict& v);

/// Binary PGM of per-MB decode status for one picture: 255 decoded,
/// 160 skipped, 0 failed, 80 not reached. One pixel per MB.
std::string status_pgm(const DecodeResult& r, std::size_t picture, unsigned mb_width, unsigned mb_height);

}  // namespace vlcbreak
