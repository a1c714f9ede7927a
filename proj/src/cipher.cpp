#include "vlcbreak/cipher.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace vlcbreak {

Count KeySpaceShape::cardinality() const {
  Count c = 1;
  for (std::size_t g : group_sizes) c *= factorial(static_cast<unsigned>(g));
  return c << flip_count;
}

KeySpaceShape standard_shape(TableRole role) {
  switch (role) {
    case TableRole::B10: return {role, {3}, 0};
    case TableRole::B12: return {role, {7}, 6};
    case TableRole::B13: return {role, {6}, 8};
    case TableRole::B14: return {role, {6}, 0};
    case TableRole::B15: return {role, {16}, 0};
  }
  return {};
}

SchemeShape standard_shapes() {
  SchemeShape s;
  for (TableRole r : kAllRoles) s[role_index(r)] = standard_shape(r);
  return s;
}

TableSet default_table_set() {
  TableSet t;
  for (TableRole r : kAllRoles) t[role_index(r)] = default_table(r);
  return t;
}

TableKey TableKey::identity(const KeySpaceShape& shape) {
  TableKey k;
  k.role = shape.role;
  for (std::size_t g : shape.group_sizes) {
    std::vector<std::uint8_t> p(g);
    std::iota(p.begin(), p.end(), std::uint8_t{0});
    k.perms.push_back(std::move(p));
  }
  k.flip_count = static_cast<std::uint8_t>(shape.flip_count);
  return k;
}

KeySpaceShape TableKey::shape() const {
  KeySpaceShape s{role, {}, flip_count};
  for (const auto& p : perms) s.group_sizes.push_back(p.size());
  return s;
}

SchemeKey SchemeKey::identity(const SchemeShape& shapes) {
  SchemeKey k;
  for (TableRole r : kAllRoles) k[r] = TableKey::identity(shapes[role_index(r)]);
  return k;
}

SchemeShape SchemeKey::shapes() const {
  SchemeShape s;
  for (TableRole r : kAllRoles) s[role_index(r)] = (*this)[r].shape();
  return s;
}

std::vector<std::size_t> flip_positions(std::size_t table_size, std::size_t flip_count) {
  if (flip_count == 0) return {};
  if (flip_count + 1 > table_size) throw Error(Errc::KeyShapeMismatch, "too many flippable entries");
  std::vector<std::size_t> pos;
  for (std::size_t i = table_size - 1 - flip_count; i + 1 < table_size; ++i) pos.push_back(i);
  return pos;
}

void flip_last_bit(std::vector<VlcEntry>& entries, std::size_t index) {
  const Codeword c = entries[index].code;
  const Codeword sibling{c.bits ^ 1u, c.length};
  for (auto& e : entries) {
    if (c.is_prefix_of(e.code)) {
      unsigned tail = e.code.length - c.length;
      e.code.bits ^= 1u << tail;
    } else if (sibling.is_prefix_of(e.code)) {
      unsigned tail = e.code.length - sibling.length;
      e.code.bits ^= 1u << tail;
    }
  }
}

HuffmanTable apply_key(const HuffmanTable& table, const TableKey& key) {
  if (key.role != table.role()) throw Error(Errc::KeyShapeMismatch, "key role does not match table");
  std::size_t grouped = 0;
  for (const auto& p : key.perms) {
    grouped += p.size();
    std::vector<bool> seen(p.size());
    for (auto v : p) {
      if (v >= p.size() || seen[v]) throw Error(Errc::KeyShapeMismatch, "shuffle is not a permutation");
      seen[v] = true;
    }
  }
  if (grouped > table.size()) throw Error(Errc::KeyShapeMismatch, "shuffle groups exceed table size");
  if (key.flip_count < 32 && (key.flips >> key.flip_count) != 0)
    throw Error(Errc::KeyShapeMismatch, "flip mask wider than flip count");

  std::vector<VlcEntry> entries = table.entries();
  const auto flips = flip_positions(entries.size(), key.flip_count);
  for (std::size_t j = 0; j < flips.size(); ++j)
    if ((key.flips >> j) & 1u) flip_last_bit(entries, flips[j]);

  std::vector<VlcEntry> out = entries;
  std::size_t offset = 0;
  for (const auto& p : key.perms) {
    for (std::size_t i = 0; i < p.size(); ++i) out[offset + i].code = entries[offset + p[i]].code;
    offset += p.size();
  }
  return HuffmanTable(table.role(), std::move(out));
}

std::uint64_t permutation_rank(const std::vector<std::uint8_t>& perm) {
  std::uint64_t rank = 0;
  const std::size_t n = perm.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j)
      if (perm[j] < perm[i]) ++smaller;
    rank = rank * (n - i) + smaller;
  }
  return rank;
}

std::vector<std::uint8_t> permutation_unrank(std::uint64_t rank, std::size_t n) {
  std::vector<std::uint64_t> digits(n);
  for (std::size_t i = n; i-- > 0;) {
    std::size_t radix = n - i;
    digits[i] = rank % radix;
    rank /= radix;
  }
  std::vector<std::uint8_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::uint8_t{0});
  std::vector<std::uint8_t> perm;
  perm.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    perm.push_back(pool[digits[i]]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digits[i]));
  }
  return perm;
}

TableKey key_from_index(const KeySpaceShape& shape, Count index) {
  if (index >= shape.cardinality()) throw Error(Errc::IndexOutOfRange, "key index " + to_string(index));
  TableKey k;
  k.role = shape.role;
  k.flip_count = static_cast<std::uint8_t>(shape.flip_count);
  k.flips = static_cast<std::uint32_t>(index & ((Count{1} << shape.flip_count) - 1));
  Count rest = index >> shape.flip_count;
  k.perms.resize(shape.group_sizes.size());
  for (std::size_t g = shape.group_sizes.size(); g-- > 0;) {
    Count radix = factorial(static_cast<unsigned>(shape.group_sizes[g]));
    k.perms[g] = permutation_unrank(static_cast<std::uint64_t>(rest % radix), shape.group_sizes[g]);
    rest /= radix;
  }
  return k;
}

Count index_of_key(const KeySpaceShape& shape, const TableKey& key) {
  if (key.shape() != shape) throw Error(Errc::KeyShapeMismatch, "key does not belong to shape");
  Count index = 0;
  for (std::size_t g = 0; g < key.perms.size(); ++g)
    index = index * factorial(static_cast<unsigned>(key.perms[g].size())) + permutation_rank(key.perms[g]);
  return (index << shape.flip_count) | key.flips;
}

KeyEnumerator::KeyEnumerator(KeySpaceShape shape, Count begin, std::optional<Count> end)
    : shape_(std::move(shape)), next_(begin) {
  Count card = shape_.cardinality();
  end_ = end ? std::min(*end, card) : card;
}

bool KeyEnumerator::next(TableKey& out) {
  if (next_ >= end_) return false;
  out = key_from_index(shape_, next_++);
  return true;
}

std::vector<TableKey> enumerate_keys(const KeySpaceShape& shape) {
  std::vector<TableKey> keys;
  KeyEnumerator it(shape);
  TableKey k;
  while (it.next(k)) keys.push_back(k);
  return keys;
}

Count Lcg64::uniform(Count bound) {
  if (bound <= 1) return 0;
  unsigned bits = 0;
  while (bits < 128 && (Count{1} << bits) < bound) ++bits;
  // Only the high halves of the states are used; low LCG bits have short periods.
  for (;;) {
    Count v = 0;
    for (unsigned have = 0; have < bits; have += 32) v = (v << 32) | next32();
    if (bits < 128) v &= (Count{1} << bits) - 1;
    if (v < bound) return v;
  }
}

SchemeKey keygen(std::uint64_t seed, const SchemeShape& shapes) {
  Lcg64 rng(seed);
  SchemeKey k;
  k.seed = seed;
  for (TableRole r : kAllRoles) {
    const auto& shape = shapes[role_index(r)];
    k[r] = key_from_index(shape, rng.uniform(shape.cardinality()));
  }
  return k;
}

TableSet encrypt_tables(const SchemeKey& key, const TableSet& plain) {
  TableSet out;
  for (TableRole r : kAllRoles) out[role_index(r)] = apply_key(plain[role_index(r)], key[r]);
  return out;
}

TableSchedule::TableSchedule(SchemeKey key, TableSet plain) : key_(std::move(key)), plain_(std::move(plain)) {}

std::uint32_t TableSchedule::epoch(std::size_t picture) const {
  if (!key_.reshuffle_period) return 0;
  return static_cast<std::uint32_t>(picture / *key_.reshuffle_period);
}

SchemeKey TableSchedule::key_for_epoch(std::uint32_t e) const {
  if (e == 0) return key_;
  SchemeKey k = keygen(key_.seed ^ (0xD1B54A32D192ED03ull * e), key_.shapes());
  k.seed = key_.seed;
  k.reshuffle_period = key_.reshuffle_period;
  return k;
}

const TableSet& TableSchedule::tables_for_picture(std::size_t picture) {
  std::uint32_t e = epoch(picture);
  if (cache_.size() <= e) cache_.resize(e + 1);
  if (!cache_[e]) cache_[e] = encrypt_tables(key_for_epoch(e), plain_);
  return *cache_[e];
}

std::string format_key(const SchemeKey& key) {
  std::ostringstream os;
  os << "seed " << key.seed << "\n";
  if (key.reshuffle_period) os << "reshuffle " << *key.reshuffle_period << "\n";
  for (TableRole r : kAllRoles) {
    const TableKey& k = key[r];
    KeySpaceShape s = k.shape();
    if (s != standard_shape(r)) {
      os << "shape " << role_name(r) << " ";
      for (std::size_t i = 0; i < s.group_sizes.size(); ++i) os << (i ? "," : "") << s.group_sizes[i];
      if (s.group_sizes.empty()) os << "-";
      os << " " << s.flip_count << "\n";
    }
  }
  for (TableRole r : kAllRoles) {
    const TableKey& k = key[r];
    Count rank = index_of_key(k.shape(), k) >> k.flip_count;
    os << role_name(r) << " " << to_string(rank) << " 0x" << std::hex << k.flips << std::dec << "\n";
  }
  return os.str();
}

namespace {

Count parse_count(const std::string& s) {
  if (s.empty()) throw Error(Errc::ParseError, "empty number");
  Count v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw Error(Errc::ParseError, "bad number '" + s + "'");
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  return v;
}

}  // namespace

SchemeKey parse_key(const std::string& text) {
  SchemeShape shapes = standard_shapes();
  SchemeKey key;
  std::array<std::optional<std::pair<Count, std::uint32_t>>, kRoleCount> parts;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head) || head.front() == '#') continue;
    if (head == "seed") {
      ls >> key.seed;
    } else if (head == "reshuffle") {
      std::uint32_t p = 0;
      ls >> p;
      if (p == 0) throw Error(Errc::ParseError, "reshuffle period must be >= 1");
      key.reshuffle_period = p;
    } else if (head == "shape") {
      std::string role, groups;
      std::size_t flips = 0;
      ls >> role >> groups >> flips;
      KeySpaceShape s{parse_role(role), {}, flips};
      if (groups != "-") {
        std::istringstream gs(groups);
        std::string g;
        while (std::getline(gs, g, ',')) s.group_sizes.push_back(static_cast<std::size_t>(parse_count(g)));
      }
      shapes[role_index(s.role)] = s;
    } else {
      TableRole r = parse_role(head);
      std::string rank, mask;
      if (!(ls >> rank >> mask)) throw Error(Errc::ParseError, "bad key line '" + line + "'");
      parts[role_index(r)] = {parse_count(rank), static_cast<std::uint32_t>(std::stoul(mask, nullptr, 16))};
    }
  }
  for (TableRole r : kAllRoles) {
    const auto& shape = shapes[role_index(r)];
    if (!parts[role_index(r)]) throw Error(Errc::ParseError, std::string("missing key for ") + role_name(r));
    auto [rank, mask] = *parts[role_index(r)];
    if (shape.flip_count < 32 && (mask >> shape.flip_count) != 0)
      throw Error(Errc::KeyShapeMismatch, "flip mask too wide");
    key[r] = key_from_index(shape, (rank << shape.flip_count) | mask);
  }
  return key;
}

}  // namespace vlcbreak
