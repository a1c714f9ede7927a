#pragma once

// Internal: aligns a known syntax trace against ciphertext bits and reads
// the unknown codewords off the gaps between fixed-length fields.

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "vlcbreak/attacks.hpp"

namespace vlcbreak::detail {

/// Allowed codewords per symbol; symbols missing from the map are free.
using CandidateSets = std::array<std::map<Symbol, std::vector<Codeword>>, kRoleCount>;

struct Segment {
  std::size_t first = 0, last = 0;      // element range [first, last)
  std::size_t begin = 0, end = 0;       // bit range [begin, end)
};

/// Pairs the trace's start codes with the stream's. Returns false when the
/// ids or counts disagree.
bool split_segments(const std::vector<SyntaxElement>& trace, const BitString& stream,
                    std::vector<Segment>& out);

enum class AlignStatus { Unique, Multiple, None, Budget };

struct AlignResult {
  AlignStatus status = AlignStatus::None;
  /// New bindings shared by every solution found.
  std::vector<std::tuple<TableRole, Symbol, Codeword>> common;
};

struct AlignOptions {
  const CandidateSets* candidates = nullptr;
  std::size_t node_budget = 1u << 20;
  std::size_t max_solutions = 2;
};

AlignResult align_segment(const BitString& stream, const Segment& seg, std::span<const SyntaxElement> trace,
                          const Bindings& known, const AlignOptions& options);

/// Codewords each entry of `plain` can take under some key of `shape`.
std::map<Symbol, std::vector<Codeword>> candidate_codewords(const HuffmanTable& plain, const KeySpaceShape& shape);

/// Table with the bound codewords; nullopt unless every entry is bound.
std::optional<HuffmanTable> table_from_bindings(const HuffmanTable& plain, const std::map<Symbol, Codeword>& bound);

}  // namespace vlcbreak::detail
