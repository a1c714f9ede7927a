#include "anchor.hpp"

#include <algorithm>
#include <numeric>

namespace vlcbreak {

bool Bindings::compatible(TableRole role, const Symbol& s, const Codeword& c) const {
  const auto& m = table[role_index(role)];
  if (auto it = m.find(s); it != m.end()) return it->second == c;
  for (const auto& [sym, code] : m)
    if (code.conflicts(c)) return false;
  return true;
}

bool Bindings::bind(TableRole role, const Symbol& s, const Codeword& c) {
  if (!compatible(role, s, c)) return false;
  table[role_index(role)][s] = c;
  return true;
}

std::size_t Bindings::size() const {
  std::size_t n = 0;
  for (const auto& m : table) n += m.size();
  return n;
}

namespace {

struct GroupSpan {
  std::size_t first, size;
};

std::vector<GroupSpan> groups_of(const KeySpaceShape& shape) {
  std::vector<GroupSpan> g;
  std::size_t at = 0;
  for (std::size_t n : shape.group_sizes) {
    g.push_back({at, n});
    at += n;
  }
  return g;
}

HuffmanTable flipped(const HuffmanTable& plain, const KeySpaceShape& shape, std::uint32_t mask) {
  TableKey k = TableKey::identity(shape);
  k.flips = mask;
  return apply_key(plain, k);
}

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

std::optional<std::vector<Count>> consistent_keys(const HuffmanTable& plain, const KeySpaceShape& shape,
                                                  const std::map<Symbol, Codeword>& bound, std::size_t limit) {
  std::vector<GroupSpan> groups = groups_of(shape);
  std::size_t grouped = 0;
  for (const GroupSpan& g : groups) grouped += g.size;
  std::vector<Count> out;
  const std::uint32_t masks = 1u << shape.flip_count;
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    HuffmanTable t = flipped(plain, shape, mask);
    bool ok = true;
    for (std::size_t i = grouped; i < t.size() && ok; ++i) {
      auto it = bound.find(plain[i].symbol);
      if (it != bound.end() && it->second != t[i].code) ok = false;
    }
    if (!ok) continue;
    // Per group: positions whose codeword is forced, and the rest.
    std::vector<std::vector<int>> fixed(groups.size());
    std::vector<std::vector<std::uint8_t>> free_pos(groups.size()), free_src(groups.size());
    std::uint64_t combos = 1;
    for (std::size_t g = 0; g < groups.size() && ok; ++g) {
      const GroupSpan& gs = groups[g];
      fixed[g].assign(gs.size, -1);
      std::vector<char> used(gs.size, 0);
      for (std::size_t i = 0; i < gs.size && ok; ++i) {
        auto it = bound.find(plain[gs.first + i].symbol);
        if (it == bound.end()) continue;
        int src = -1;
        for (std::size_t j = 0; j < gs.size; ++j)
          if (t[gs.first + j].code == it->second) src = static_cast<int>(j);
        if (src < 0 || used[static_cast<std::size_t>(src)]) {
          ok = false;
          break;
        }
        used[static_cast<std::size_t>(src)] = 1;
        fixed[g][i] = src;
      }
      for (std::size_t i = 0; i < gs.size; ++i) {
        if (fixed[g][i] < 0) free_pos[g].push_back(static_cast<std::uint8_t>(i));
        if (!used[i]) free_src[g].push_back(static_cast<std::uint8_t>(i));
      }
      std::uint64_t f = factorial(free_pos[g].size());
      combos = combos > (limit + 1) / f + 1 ? limit + 1 : combos * f;
    }
    if (!ok) continue;
    if (out.size() + combos > limit) return std::nullopt;
    // Cartesian product of the free permutations of every group.
    TableKey key = TableKey::identity(shape);
    key.flips = mask;
    std::vector<std::vector<std::uint8_t>> srcs = free_src;
    auto emit = [&](auto&& self, std::size_t g) -> void {
      if (g == groups.size()) {
        out.push_back(index_of_key(shape, key));
        return;
      }
      std::sort(srcs[g].begin(), srcs[g].end());
      do {
        std::vector<std::uint8_t>& perm = key.perms[g];
        for (std::size_t i = 0; i < groups[g].size; ++i)
          if (fixed[g][i] >= 0) perm[i] = static_cast<std::uint8_t>(fixed[g][i]);
        for (std::size_t k = 0; k < free_pos[g].size(); ++k) perm[free_pos[g][k]] = srcs[g][k];
        self(self, g + 1);
      } while (std::next_permutation(srcs[g].begin(), srcs[g].end()));
    };
    emit(emit, 0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<TableKey> recover_table_key(const HuffmanTable& plain, const HuffmanTable& table,
                                          const KeySpaceShape& shape) {
  if (plain.size() != table.size()) return std::nullopt;
  std::map<Symbol, Codeword> bound;
  for (const VlcEntry& e : table.entries()) bound[e.symbol] = e.code;
  auto keys = consistent_keys(plain, shape, bound, 2);
  if (!keys || keys->size() != 1) return std::nullopt;
  TableKey k = key_from_index(shape, keys->front());
  if (apply_key(plain, k) != table) return std::nullopt;
  return k;
}

namespace detail {

std::map<Symbol, std::vector<Codeword>> candidate_codewords(const HuffmanTable& plain, const KeySpaceShape& shape) {
  std::map<Symbol, std::vector<Codeword>> out;
  std::vector<GroupSpan> groups = groups_of(shape);
  std::size_t grouped = 0;
  for (const GroupSpan& g : groups) grouped += g.size;
  for (std::uint32_t mask = 0; mask < (1u << shape.flip_count); ++mask) {
    HuffmanTable t = flipped(plain, shape, mask);
    for (const GroupSpan& g : groups)
      for (std::size_t i = 0; i < g.size; ++i)
        for (std::size_t j = 0; j < g.size; ++j) out[plain[g.first + i].symbol].push_back(t[g.first + j].code);
    for (std::size_t i = grouped; i < t.size(); ++i) out[plain[i].symbol].push_back(t[i].code);
  }
  for (auto& [s, v] : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

std::optional<HuffmanTable> table_from_bindings(const HuffmanTable& plain, const std::map<Symbol, Codeword>& bound) {
  std::vector<VlcEntry> entries = plain.entries();
  for (VlcEntry& e : entries) {
    auto it = bound.find(e.symbol);
    if (it == bound.end()) return std::nullopt;
    e.code = it->second;
  }
  if (!is_prefix_free(entries)) return std::nullopt;
  return HuffmanTable(plain.role(), std::move(entries));
}

bool split_segments(const std::vector<SyntaxElement>& trace, const BitString& stream, std::vector<Segment>& out) {
  out.clear();
  std::vector<StartCodePos> codes = scan_start_codes(stream);
  std::vector<std::size_t> marks;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (trace[i].kind == SyntaxElement::Kind::StartCode) marks.push_back(i);
  if (marks.size() != codes.size() || marks.empty() || marks.front() != 0) return false;
  for (std::size_t k = 0; k < marks.size(); ++k) {
    if (trace[marks[k]].value != codes[k].id) return false;
    Segment s;
    s.first = marks[k] + 1;
    s.last = k + 1 < marks.size() ? marks[k + 1] : trace.size();
    s.begin = codes[k].offset + kStartCodeBits;
    s.end = k + 1 < codes.size() ? codes[k + 1].offset : stream.size();
    if (s.begin > s.end) return false;
    out.push_back(s);
  }
  return true;
}

namespace {

class Aligner {
 public:
  Aligner(const BitString& s, std::span<const SyntaxElement> elems, std::size_t end, const Bindings& known,
          const AlignOptions& opt)
      : s_(s), elems_(elems), end_(end), opt_(opt) {
    for (TableRole r : kAllRoles)
      for (const auto& [sym, code] : known.table[role_index(r)]) bound_[role_index(r)].push_back({sym, code});
  }

  void run(std::size_t p) { dfs(0, p); }

  bool budget_hit = false;
  std::vector<std::vector<std::tuple<TableRole, Symbol, Codeword>>> solutions;

 private:
  bool matches(std::size_t p, std::uint32_t value, unsigned width) const {
    if (p + width > end_) return false;
    for (unsigned k = 0; k < width; ++k)
      if (s_.bit(p + k) != ((value >> (width - 1 - k)) & 1u)) return false;
    return true;
  }

  const Codeword* lookup(TableRole r, const Symbol& sym) const {
    for (const auto& [s, c] : bound_[role_index(r)])
      if (s == sym) return &c;
    return nullptr;
  }

  bool fits(TableRole r, const Codeword& c) const {
    for (const auto& [s, code] : bound_[role_index(r)])
      if (code.conflicts(c)) return false;
    return true;
  }

  void try_codeword(const SyntaxElement& e, std::size_t i, std::size_t p, const Codeword& c) {
    if (p + c.length > end_ || !matches(p, c.bits, c.length) || !fits(e.role, c)) return;
    bound_[role_index(e.role)].push_back({e.symbol, c});
    added_.emplace_back(e.role, e.symbol, c);
    dfs(i + 1, p + c.length);
    added_.pop_back();
    bound_[role_index(e.role)].pop_back();
  }

  void dfs(std::size_t i, std::size_t p) {
    if (budget_hit || solutions.size() > opt_.max_solutions) return;
    if (++nodes_ > opt_.node_budget) {
      budget_hit = true;
      return;
    }
    while (i < elems_.size()) {
      const SyntaxElement& e = elems_[i];
      if (e.kind == SyntaxElement::Kind::StartCode) return;
      if (e.kind == SyntaxElement::Kind::Fixed) {
        if (!matches(p, e.value, e.width)) return;
        p += e.width;
        ++i;
        continue;
      }
      const Codeword* c = lookup(e.role, e.symbol);
      if (!c) break;
      if (!matches(p, c->bits, c->length)) return;
      p += c->length;
      ++i;
    }
    if (i == elems_.size()) {
      if (p == end_) solutions.push_back(added_);
      return;
    }
    const SyntaxElement& e = elems_[i];
    const std::vector<Codeword>* list = nullptr;
    if (opt_.candidates) {
      const auto& m = (*opt_.candidates)[role_index(e.role)];
      if (auto it = m.find(e.symbol); it != m.end()) list = &it->second;
    }
    if (list) {
      for (const Codeword& c : *list) try_codeword(e, i, p, c);
      return;
    }
    for (unsigned len = 1; len <= kMaxCodewordLength && p + len <= end_; ++len) {
      Codeword c;
      c.length = static_cast<std::uint8_t>(len);
      for (unsigned k = 0; k < len; ++k) c.bits = (c.bits << 1) | s_.bit(p + k);
      try_codeword(e, i, p, c);
    }
  }

  const BitString& s_;
  std::span<const SyntaxElement> elems_;
  std::size_t end_;
  const AlignOptions& opt_;
  std::array<std::vector<std::pair<Symbol, Codeword>>, kRoleCount> bound_;
  std::vector<std::tuple<TableRole, Symbol, Codeword>> added_;
  std::size_t nodes_ = 0;
};

}  // namespace

AlignResult align_segment(const BitString& stream, const Segment& seg, std::span<const SyntaxElement> trace,
                          const Bindings& known, const AlignOptions& options) {
  Aligner a(stream, trace.subspan(seg.first, seg.last - seg.first), seg.end, known, options);
  a.run(seg.begin);
  AlignResult r;
  if (a.budget_hit) {
    r.status = AlignStatus::Budget;
    return r;
  }
  if (a.solutions.empty()) {
    r.status = AlignStatus::None;
    return r;
  }
  r.status = a.solutions.size() == 1 ? AlignStatus::Unique : AlignStatus::Multiple;
  if (a.solutions.size() > options.max_solutions) return r;
  for (const auto& b : a.solutions.front()) {
    bool everywhere = std::all_of(a.solutions.begin() + 1, a.solutions.end(), [&](const auto& sol) {
      return std::find(sol.begin(), sol.end(), b) != sol.end();
    });
    if (everywhere) r.common.push_back(b);
  }
  return r;
}

}  // namespace detail
}  // namespace vlcbreak
