#include <algorithm>
#include <random>
#include <set>

#include "anchor.hpp"
#include "doctest.h"
#include "vlcbreak/generator.hpp"

using namespace vlcbreak;

namespace {

// Brute force: every key index whose table agrees with the bindings.
std::vector<Count> agreeing_keys(const HuffmanTable& plain, const KeySpaceShape& shape,
                                 const std::map<Symbol, Codeword>& bound) {
  std::vector<Count> out;
  KeyEnumerator it(shape);
  TableKey k;
  Count i = 0;
  while (it.next(k)) {
    HuffmanTable t = apply_key(plain, k);
    bool ok = true;
    for (const auto& [s, c] : bound) ok = ok && t.codeword(s) == c;
    if (ok) out.push_back(i);
    ++i;
  }
  return out;
}

}  // namespace

TEST_SUITE("anchor") {

TEST_CASE("consistent keys agree with brute force") {
  std::mt19937 rng(5);
  for (TableRole r : {TableRole::B10, TableRole::B12, TableRole::B13, TableRole::B14}) {
    KeySpaceShape shape = standard_shape(r);
    HuffmanTable plain = default_table(r);
    for (int trial = 0; trial < (r == TableRole::B12 || r == TableRole::B13 ? 2 : 6); ++trial) {
      HuffmanTable truth = apply_key(plain, key_from_index(shape, rng() % static_cast<std::uint64_t>(shape.cardinality())));
      std::map<Symbol, Codeword> bound;
      for (const VlcEntry& e : truth.entries())
        if (rng() % 3 == 0) bound[e.symbol] = e.code;
      std::vector<Count> expect = agreeing_keys(plain, shape, bound);
      auto got = consistent_keys(plain, shape, bound, 1u << 20);
      REQUIRE(got);
      CHECK(*got == expect);
      if (expect.size() > 1) CHECK_FALSE(consistent_keys(plain, shape, bound, expect.size() - 1));
    }
  }
}

TEST_CASE("a full table pins exactly one key") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SchemeKey k = keygen(seed);
    for (TableRole r : kAllRoles) {
      HuffmanTable t = apply_key(default_table(r), k[r]);
      auto got = recover_table_key(default_table(r), t, standard_shape(r));
      REQUIRE(got);
      CHECK(*got == k[r]);
    }
  }
  // a table outside the key space is not reachable
  HuffmanTable t = default_table(TableRole::B12);
  std::vector<VlcEntry> e = t.entries();
  std::swap(e[0].code, e[11].code);
  CHECK_FALSE(recover_table_key(t, HuffmanTable(TableRole::B12, e), standard_shape(TableRole::B12)));
}

TEST_CASE("candidate codewords are exactly the reachable ones") {
  for (TableRole r : {TableRole::B10, TableRole::B13, TableRole::B14}) {
    KeySpaceShape shape = standard_shape(r);
    HuffmanTable plain = default_table(r);
    std::map<Symbol, std::set<Codeword>> seen;
    KeyEnumerator it(shape);
    TableKey k;
    while (it.next(k)) {
      HuffmanTable t = apply_key(plain, k);
      for (const VlcEntry& e : t.entries()) seen[e.symbol].insert(e.code);
    }
    auto cand = detail::candidate_codewords(plain, shape);
    for (const auto& [s, codes] : seen) {
      REQUIRE(cand.count(s));
      std::set<Codeword> got(cand[s].begin(), cand[s].end());
      CHECK(got == codes);
    }
  }
}

TEST_CASE("table from bindings needs every entry") {
  HuffmanTable t = default_table(TableRole::B13);
  std::map<Symbol, Codeword> bound;
  for (const VlcEntry& e : t.entries()) bound[e.symbol] = e.code;
  auto full = detail::table_from_bindings(t, bound);
  REQUIRE(full);
  CHECK(*full == t);
  bound.erase(Symbol::dc_size(4));
  CHECK_FALSE(detail::table_from_bindings(t, bound));
}

TEST_CASE("bindings reject contradictions") {
  Bindings b;
  CHECK(b.bind(TableRole::B12, Symbol::dc_size(1), Codeword::from_text("00")));
  CHECK(b.bind(TableRole::B12, Symbol::dc_size(1), Codeword::from_text("00")));
  CHECK_FALSE(b.compatible(TableRole::B12, Symbol::dc_size(1), Codeword::from_text("01")));
  // another symbol on a conflicting codeword
  CHECK_FALSE(b.compatible(TableRole::B12, Symbol::dc_size(2), Codeword::from_text("001")));
  CHECK(b.compatible(TableRole::B13, Symbol::dc_size(2), Codeword::from_text("00")));
  CHECK(b.size() == 1);
}

TEST_CASE("segments pair trace start codes with stream start codes") {
  MiniSequence s = generate_video(6);
  BitString b = encode(s, encrypt_tables(keygen(6)));
  std::vector<SyntaxElement> trace = syntax_trace(s);
  std::vector<detail::Segment> seg;
  REQUIRE(detail::split_segments(trace, b, seg));
  std::size_t starts = 0;
  for (const SyntaxElement& e : trace) starts += e.kind == SyntaxElement::Kind::StartCode;
  CHECK(seg.size() + 1 >= starts);
  for (const detail::Segment& g : seg) {
    CHECK(g.first <= g.last);
    CHECK(g.begin <= g.end);
  }
  MiniSequence shorter = s;
  shorter.pictures.pop_back();
  CHECK_FALSE(detail::split_segments(syntax_trace(shorter), b, seg));
}

TEST_CASE("aligning a known I picture reads its codewords") {
  MiniSequence s = generate_video(8);
  s.pictures.resize(1);
  TableSet t = encrypt_tables(keygen(8));
  BitString b = encode(s, t);
  std::vector<SyntaxElement> trace = syntax_trace(s);
  std::vector<detail::Segment> seg;
  REQUIRE(detail::split_segments(trace, b, seg));
  detail::CandidateSets cand;
  for (TableRole r : kAllRoles) cand[role_index(r)] = detail::candidate_codewords(default_table(r), standard_shape(r));
  detail::AlignOptions opt;
  opt.candidates = &cand;
  Bindings bound;
  std::size_t unique = 0;
  for (const detail::Segment& g : seg) {
    detail::AlignResult r = detail::align_segment(b, g, trace, bound, opt);
    CHECK(r.status != detail::AlignStatus::None);
    if (r.status == detail::AlignStatus::Unique) ++unique;
    for (const auto& [role, sym, code] : r.common) {
      CHECK(t[role_index(role)].codeword(sym) == code);
      bound.bind(role, sym, code);
    }
  }
  CHECK(unique > 0);
  CHECK(bound.table[role_index(TableRole::B12)].size() > 5);
}

}  // TEST_SUITE
