#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vlcbreak/cipher.hpp"
#include "vlcbreak/codec.hpp"
#include "vlcbreak/keyspace.hpp"

namespace vlcbreak {

enum class Outcome : std::uint8_t { Unique, Ambiguous, Failed };
const char* outcome_name(Outcome o);

struct StageReport {
  std::string name;
  Count candidates = 0;
  std::uint64_t oracle_calls = 0;
  Outcome outcome = Outcome::Failed;
  std::size_t survivors = 0;
  double seconds = 0.0;
};

struct AttackReport {
  PartialTableSet recovered;
  std::optional<SchemeKey> key;  // when every table was recovered exactly
  Count candidates_tested = 0;
  std::uint64_t oracle_calls = 0;
  double elapsed = 0.0;
  std::vector<StageReport> order;
  Outcome outcome = Outcome::Failed;
  std::vector<std::string> ambiguity;  // surviving alternatives, one line each
  std::string note;
  std::size_t bindings = 0;  // plaintext attacks: symbol/codeword pairs read off
};

struct AttackOptions {
  SchemeShape shapes = standard_shapes();
  unsigned jobs = 1;
  std::size_t min_b10_headers = 8;
  std::size_t survivor_cap = 1u << 16;
  std::size_t refine_rounds = 4;
  std::size_t pair_limit = 8u << 20;  // largest survivor product tested jointly
  std::size_t fork_limit = 4096;      // largest survivor list retested with branching
  std::size_t fork_budget = 256;      // decode replays per slice while branching
  /// Reshuffle period the stream is known to use, if any; attacks refuse
  /// periods below `reshuffle_bound` (0 means the stream's picture count).
  std::optional<std::uint32_t> reshuffle_period;
  std::uint32_t reshuffle_bound = 0;
};

/// Ciphertext-only divide-and-conquer search.
AttackReport dac_attack(const BitString& stream, const AttackScenario& scenario, const CheckSet& checks,
                        const AttackOptions& options = {});

/// Search over B10, B12, B13 and B14 only. Throws Error(NotMpeg1Like) when
/// a picture uses intra_vlc_format = 1.
AttackReport partial_key_attack(const BitString& stream, bool b10_separate, const CheckSet& checks,
                                const AttackOptions& options = {});

/// Human-readable report followed by `stage candidates oracle_calls outcome`
/// lines and a `total ...` line. Timings are left out unless asked for so
/// that reruns print identical text.
std::string format_report(const AttackReport& r, bool timing = false);
std::string machine_lines(const AttackReport& r);

/// Per-role key ranges or explicit candidate lists for the search engine.
struct RoleCandidates {
  std::optional<std::vector<Count>> list;  // nullopt: the whole shape
};

/// Search with explicit candidate lists (used by the known-plaintext attack).
/// A list holding a single key pins that table without testing it.
AttackReport restricted_search(const BitString& stream, const std::array<RoleCandidates, kRoleCount>& candidates,
                               const std::array<bool, kRoleCount>& search, const CheckSet& checks,
                               const AttackOptions& options);

// ---------------------------------------------------------------------------
// Plaintext attacks
// ---------------------------------------------------------------------------

struct PlanFragment {
  std::string id;
  MiniSequence sequence;
  std::vector<std::pair<TableRole, Symbol>> pins;  // entries this fragment reveals
};

struct ChosenPlan {
  std::vector<PlanFragment> fragments;
  std::size_t total_mbs() const;
};

ChosenPlan build_chosen_plan();

using EncryptFn = std::function<BitString(const MiniSequence&)>;

/// Reads every table off the encryptions of the plan fragments. Throws
/// Error(ExtractionFailed) naming the fragment when anchors do not line up.
AttackReport cpa_attack(const ChosenPlan& plan, const EncryptFn& encrypt, const AttackOptions& options = {});

struct KnownPair {
  MiniSequence plain;
  BitString cipher;
};

/// Binds codewords from known pairs, then searches only the keys consistent
/// with the bindings on `target` (the pair ciphertexts when null). Throws
/// Error(InconsistentPair) when two bindings contradict.
AttackReport kpa_attack(const std::vector<KnownPair>& pairs, const CheckSet& checks, const AttackOptions& options = {},
                        const BitString* target = nullptr);

/// Symbol-to-codeword bindings accumulated by the plaintext attacks.
struct Bindings {
  std::array<std::map<Symbol, Codeword>, kRoleCount> table;

  /// Returns false when the binding contradicts an existing one.
  bool compatible(TableRole role, const Symbol& s, const Codeword& c) const;
  bool bind(TableRole role, const Symbol& s, const Codeword& c);
  std::size_t size() const;
};

/// Finds the key of `shape` that turns `plain` into `table`, if any.
std::optional<TableKey> recover_table_key(const HuffmanTable& plain, const HuffmanTable& table,
                                          const KeySpaceShape& shape);

/// Indices of the keys of `shape` whose table agrees with `bound`, or
/// nullopt when more than `limit` exist.
std::optional<std::vector<Count>> consistent_keys(const HuffmanTable& plain, const KeySpaceShape& shape,
                                                  const std::map<Symbol, Codeword>& bound, std::size_t limit);

}  // namespace vlcbreak
