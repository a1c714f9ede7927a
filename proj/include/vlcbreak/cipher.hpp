#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vlcbreak/count.hpp"
#include "vlcbreak/vlc.hpp"

namespace vlcbreak {

/// Key space of one table: consecutive shuffle groups starting at entry 0
/// of the canonical order, and `flip_count` flippable entries ending at the
/// second-to-last entry.
struct KeySpaceShape {
  TableRole role = TableRole::B10;
  std::vector<std::size_t> group_sizes;
  std::size_t flip_count = 0;

  Count cardinality() const;
  friend bool operator==(const KeySpaceShape&, const KeySpaceShape&) = default;
};

using SchemeShape = std::array<KeySpaceShape, kRoleCount>;

/// Shapes whose cardinalities are exactly B10=3!, B12=7!*2^6, B13=6!*2^8,
/// B14=6!, B15=16!.
KeySpaceShape standard_shape(TableRole role);
SchemeShape standard_shapes();

struct TableKey {
  TableRole role = TableRole::B10;
  std::vector<std::vector<std::uint8_t>> perms;  // one permutation per group
  std::uint32_t flips = 0;
  std::uint8_t flip_count = 0;

  static TableKey identity(const KeySpaceShape& shape);
  KeySpaceShape shape() const;
  friend bool operator==(const TableKey&, const TableKey&) = default;
};

using TableSet = std::array<HuffmanTable, kRoleCount>;
TableSet default_table_set();

struct SchemeKey {
  std::array<TableKey, kRoleCount> tables;
  std::optional<std::uint32_t> reshuffle_period;
  std::uint64_t seed = 0;  // drives per-epoch rekeying when reshuffling

  static SchemeKey identity(const SchemeShape& shapes = standard_shapes());
  SchemeShape shapes() const;
  const TableKey& operator[](TableRole r) const { return tables[role_index(r)]; }
  TableKey& operator[](TableRole r) { return tables[role_index(r)]; }
  friend bool operator==(const SchemeKey&, const SchemeKey&) = default;
};

/// Entry positions whose last bit the key may flip.
std::vector<std::size_t> flip_positions(std::size_t table_size, std::size_t flip_count);

/// Flips designated entries (sibling-subtree swap at the parent of each
/// entry's codeword, in ascending position order), then shuffles
/// codewords within each group: entry g+i takes the codeword entry
/// g+perm[i] held after flipping.
HuffmanTable apply_key(const HuffmanTable& table, const TableKey& key);

/// Swaps the subtree at `code` with the subtree at its sibling.
void flip_last_bit(std::vector<VlcEntry>& entries, std::size_t index);

std::uint64_t permutation_rank(const std::vector<std::uint8_t>& perm);
std::vector<std::uint8_t> permutation_unrank(std::uint64_t rank, std::size_t n);

/// Mixed radix: group ranks (first group most significant), then flip mask
/// as the least significant digit.
TableKey key_from_index(const KeySpaceShape& shape, Count index);
Count index_of_key(const KeySpaceShape& shape, const TableKey& key);

/// Walks a shape's keys in index order.
class KeyEnumerator {
 public:
  explicit KeyEnumerator(KeySpaceShape shape, Count begin = 0, std::optional<Count> end = std::nullopt);
  bool next(TableKey& out);
  Count position() const { return next_; }
  Count size() const { return end_; }

 private:
  KeySpaceShape shape_;
  Count next_;
  Count end_;
};

std::vector<TableKey> enumerate_keys(const KeySpaceShape& shape);

/// Documented 64-bit LCG (Knuth MMIX constants) used for key generation.
class Lcg64 {
 public:
  /// The seed goes through the splitmix64 finalizer so nearby seeds start
  /// far apart.
  explicit Lcg64(std::uint64_t seed) : state_(mix(seed)) {}
  std::uint64_t next() {
    state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
    return state_;
  }
  std::uint32_t next32() { return static_cast<std::uint32_t>(next() >> 32); }
  /// Uniform in [0, bound) by rejection.
  Count uniform(Count bound);

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

SchemeKey keygen(std::uint64_t seed, const SchemeShape& shapes = standard_shapes());

TableSet encrypt_tables(const SchemeKey& key, const TableSet& plain = default_table_set());

/// Tables in force for each picture. Without a reshuffle period every
/// picture uses epoch 0; otherwise epoch = picture / period and epochs > 0
/// are rekeyed from the key seed and the epoch number.
class TableSchedule {
 public:
  explicit TableSchedule(SchemeKey key, TableSet plain = default_table_set());
  std::uint32_t epoch(std::size_t picture) const;
  const TableSet& tables_for_picture(std::size_t picture);
  SchemeKey key_for_epoch(std::uint32_t epoch) const;

 private:
  SchemeKey key_;
  TableSet plain_;
  std::vector<std::optional<TableSet>> cache_;
};

/// Key text format: `<role> <group-rank> <flip-mask-hex>` per table, plus
/// optional `seed <n>`, `reshuffle <n>` and `shape <role> <g1,g2..> <flips>`.
std::string format_key(const SchemeKey& key);
SchemeKey parse_key(const std::string& text);

}  // namespace vlcbreak
