#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vlcbreak/bitio.hpp"

namespace vlcbreak {

/// The five secret tables: motion codes, luminance and chrominance DC
/// sizes, and the two AC coefficient tables.
enum class TableRole : std::uint8_t { B10 = 0, B12 = 1, B13 = 2, B14 = 3, B15 = 4 };

inline constexpr std::array<TableRole, 5> kAllRoles = {TableRole::B10, TableRole::B12, TableRole::B13,
                                                      TableRole::B14, TableRole::B15};
inline constexpr std::size_t kRoleCount = kAllRoles.size();

constexpr std::size_t role_index(TableRole r) { return static_cast<std::size_t>(r); }
const char* role_name(TableRole r);
TableRole parse_role(std::string_view name);

enum class SymbolKind : std::uint8_t { MotionCode, DcSize, RunLevel, Eob, Escape };

struct Symbol {
  SymbolKind kind = SymbolKind::Eob;
  std::uint8_t run = 0;
  std::int16_t value = 0;  // motion code, dc size, or level magnitude

  static constexpr Symbol motion_code(int code) {
    return {SymbolKind::MotionCode, 0, static_cast<std::int16_t>(code)};
  }
  static constexpr Symbol dc_size(int size) { return {SymbolKind::DcSize, 0, static_cast<std::int16_t>(size)}; }
  static constexpr Symbol run_level(int run, int level) {
    return {SymbolKind::RunLevel, static_cast<std::uint8_t>(run), static_cast<std::int16_t>(level)};
  }
  static constexpr Symbol eob() { return {SymbolKind::Eob, 0, 0}; }
  static constexpr Symbol escape() { return {SymbolKind::Escape, 0, 0}; }

  friend constexpr auto operator<=>(const Symbol&, const Symbol&) = default;
};

/// Text form used by table files: mc:<n>, sz:<n>, rl:<run>,<level>, EOB, ESC.
std::string to_string(const Symbol& s);
Symbol parse_symbol(std::string_view text);

struct Codeword {
  std::uint32_t bits = 0;  // right-aligned, MSB is the first transmitted bit
  std::uint8_t length = 0;

  static Codeword from_text(std::string_view text);
  std::string to_text() const;

  bool bit(unsigned i) const { return (bits >> (length - 1 - i)) & 1u; }
  bool is_prefix_of(const Codeword& other) const {
    return length <= other.length && (other.bits >> (other.length - length)) == bits;
  }
  /// True when one codeword is a prefix of the other (or they are equal).
  bool conflicts(const Codeword& other) const { return is_prefix_of(other) || other.is_prefix_of(*this); }

  friend constexpr auto operator<=>(const Codeword&, const Codeword&) = default;
};

inline constexpr unsigned kMaxCodewordLength = 17;

struct VlcEntry {
  Codeword code;
  Symbol symbol;
  bool has_sign_suffix = false;  // a sign bit follows the codeword in the stream

  friend bool operator==(const VlcEntry&, const VlcEntry&) = default;
};

bool is_prefix_free(std::span<const VlcEntry> entries);
bool is_prefix_free(std::span<const Codeword> codes);

/// A prefix-free code for one role. Entry order is the canonical table
/// order; key shapes refer to entries by their position in it.
class HuffmanTable {
 public:
  HuffmanTable() = default;
  HuffmanTable(TableRole role, std::vector<VlcEntry> entries);

  TableRole role() const noexcept { return role_; }
  const std::vector<VlcEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const VlcEntry& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> index_of(const Symbol& s) const;
  const VlcEntry* find(const Symbol& s) const;
  bool contains(const Symbol& s) const { return find(s) != nullptr; }

  /// Throws Error(UnknownSymbol).
  const Codeword& codeword(const Symbol& s) const;
  std::size_t max_length() const;

  friend bool operator==(const HuffmanTable&, const HuffmanTable&) = default;

 private:
  TableRole role_ = TableRole::B10;
  std::vector<VlcEntry> entries_;
};

inline constexpr std::size_t kDefaultRunLevelCount = 16;

/// Built-in plaintext table. For B14/B15 `run_levels` selects how many of
/// the fixed run-level list are included (at least 2) before EOB and ESC.
HuffmanTable default_table(TableRole role, std::size_t run_levels = kDefaultRunLevelCount);

/// The ordered run-level list shared by B14 and B15 (most frequent first).
std::span<const Symbol> run_level_symbols();

BitString encode_symbol(const HuffmanTable& table, const Symbol& s);

/// Walks the cursor until a codeword matches. Throws Error(ParseError)
/// tagged InvalidPrefix when no codeword can match.
Symbol decode_symbol(const HuffmanTable& table, BitCursor& cursor);

/// Fills `lengths` (in order) with the lexicographically smallest codewords
/// that keep the set prefix-free with everything already in `entries`,
/// skipping codewords that begin with more than three zeros.
void canonical_fill(std::vector<VlcEntry>& entries,
                    std::span<const std::pair<Symbol, unsigned>> lengths, bool sign_suffix);

enum class VlcStatus : std::uint8_t { Ok, Invalid, Undetermined, EndOfStream };

/// Bitwise trie used for decoding. Built from a full table (missing
/// branches are invalid codes) or from a partially known table (missing
/// branches may belong to entries that are not known yet).
class TableDecoder {
 public:
  TableDecoder() = default;
  static TableDecoder full(const HuffmanTable& table);
  static TableDecoder partial(TableRole role, std::span<const VlcEntry> known);
  static TableDecoder unknown(TableRole role);

  TableRole role() const noexcept { return role_; }
  bool is_unknown() const noexcept { return nodes_.empty(); }

  VlcStatus decode(BitCursor& cursor, const VlcEntry*& out) const noexcept {
    if (nodes_.empty()) return VlcStatus::Undetermined;
    std::int32_t node = 0;
    for (;;) {
      unsigned b = 0;
      if (!cursor.try_read_bit(b)) return VlcStatus::EndOfStream;
      std::int32_t next = nodes_[static_cast<std::size_t>(node)][b];
      if (next > 0) {
        node = next;
        continue;
      }
      if (next == 0) return missing_;
      out = &entries_[static_cast<std::size_t>(-next - 1)];
      return VlcStatus::Ok;
    }
  }

  const std::vector<VlcEntry>& entries() const noexcept { return entries_; }

 private:
  void build(std::span<const VlcEntry> entries);

  TableRole role_ = TableRole::B10;
  VlcStatus missing_ = VlcStatus::Invalid;
  std::vector<VlcEntry> entries_;
  // child > 0: internal node index, child < 0: leaf -(entry + 1), 0: absent
  std::vector<std::array<std::int32_t, 2>> nodes_;
};

/// Table text format: one `<codeword-bits> <symbol>` per line. Lines
/// starting with '#' are comments. The role must be given by the caller or
/// by a `role <name>` line.
std::string format_table(const HuffmanTable& table);
HuffmanTable parse_table(std::string_view text, std::optional<TableRole> role = std::nullopt);

std::vector<HuffmanTable> default_tables();

}  // namespace vlcbreak
