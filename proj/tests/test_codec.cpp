#include <algorithm>
#include <bit>

#include "doctest.h"
#include "support.hpp"
#include "vlcbreak/generator.hpp"

using namespace vlcbreak;
using testsupport::assemble;
using testsupport::fixed_element;
using testsupport::vlc_element;

namespace {

std::size_t find_vlc(const std::vector<SyntaxElement>& t, const Symbol& s, std::size_t from = 0) {
  for (std::size_t i = from; i < t.size(); ++i)
    if (t[i].kind == SyntaxElement::Kind::Vlc && t[i].symbol == s) return i;
  return t.size();
}

// Element indices where a macroblock header starts in a sequence without
// motion: the one ending the address increment, then the two mode bits.
std::vector<std::size_t> mb_starts(const std::vector<SyntaxElement>& t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < t.size(); ++i)
    if (t[i].kind == SyntaxElement::Kind::Fixed && t[i].width == 1 && t[i].value == 1 && t[i].slice >= 0 &&
        t[i + 1].kind == SyntaxElement::Kind::Fixed && t[i + 1].width == 2)
      out.push_back(i);
  return out;
}

DecodeResult decode_trace(const std::vector<SyntaxElement>& t, const CheckSet& checks = CheckSet::all(),
                          const TableSet& tables = default_table_set()) {
  return decode(assemble(t, tables), tables, checks);
}

MiniSequence inter_sequence(unsigned mb_w, std::uint8_t f_code) {
  MiniSequence s = testsupport::flat_sequence(mb_w, 1);
  MiniPicture p;
  p.type = PictureType::P;
  p.f_code = f_code;
  MiniSlice sl;
  for (unsigned m = 0; m < mb_w; ++m) {
    MiniMacroblock mb;
    mb.mode = MbMode::Inter;
    mb.motion.resize(2);
    sl.mbs.push_back(mb);
  }
  p.slices.push_back(sl);
  s.pictures.push_back(p);
  return s;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("the library encoder writes exactly the trace") {
  GeneratorParams p;
  p.intra_vlc_ratio = 0.5;
  p.concealment_ratio = 0.5;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MiniSequence s = generate_video(seed, p);
    TableSet t = encrypt_tables(keygen(seed));
    std::vector<SyntaxElement> trace;
    BitString b = encode_traced(s, [&](std::size_t) -> const TableSet& { return t; }, trace);
    CHECK(b == assemble(trace, t));
    CHECK(b == encode(s, t));
    CHECK(assemble(syntax_trace(s), t) == b);
  }
}

TEST_CASE("round trip under default and keyed tables") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorParams p;
    p.pictures = 2 + seed % 3;
    p.chroma = static_cast<ChromaFormat>(1 + seed % 3);
    p.pattern = seed % 2 ? "PBP" : "BBP";
    p.intra_vlc_ratio = (seed % 4) * 0.25;
    p.concealment_ratio = seed % 5 == 0 ? 0.5 : 0.0;
    p.f_code = static_cast<std::uint8_t>(1 + seed % 3);
    MiniSequence s = generate_video(seed, p);
    for (const TableSet& t : {default_table_set(), encrypt_tables(keygen(seed + 77))}) {
      DecodeResult r = decode(encode(s, t), t);
      REQUIRE_MESSAGE(r.ok(), "seed " << seed << ": " << (r.error ? describe(*r.error) : "undetermined"));
      CHECK(r.sequence == s);
    }
  }
}

TEST_CASE("D pictures round trip") {
  GeneratorParams p;
  p.d_pictures = true;
  p.pattern = "DPD";
  p.pictures = 4;
  MiniSequence s = generate_video(5, p);
  TableSet t = encrypt_tables(keygen(5));
  DecodeResult r = decode(encode(s, t), t);
  REQUIRE(r.ok());
  CHECK(r.sequence == s);
}

TEST_CASE("block (0,1) is 11, a sign bit and EOB") {
  MiniSequence s = inter_sequence(1, 1);
  MiniMacroblock& mb = s.pictures[1].slices[0].mbs[0];
  mb.cbp = 0x20;
  MiniBlock b;
  b.ac = {{0, 1}};
  mb.blocks = {b};
  std::vector<SyntaxElement> t = syntax_trace(s);
  std::size_t i = find_vlc(t, Symbol::run_level(0, 1));
  REQUIRE(i + 2 < t.size());
  CHECK(t[i].role == TableRole::B14);
  CHECK(t[i + 1].kind == SyntaxElement::Kind::Fixed);
  CHECK(t[i + 1].width == 1);
  CHECK(t[i + 2].symbol == Symbol::eob());
  std::vector<SyntaxElement> part(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i + 3));
  CHECK(assemble(part, default_table_set()).to_text() == "11010");
}

TEST_CASE("keyed stream length differs only by codeword lengths") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MiniSequence s = generate_video(seed);
    TableSet plain = default_table_set(), keyed = encrypt_tables(keygen(seed));
    long long delta = 0;
    for (const SyntaxElement& e : syntax_trace(s))
      if (e.kind == SyntaxElement::Kind::Vlc)
        delta += static_cast<long long>(keyed[role_index(e.role)].codeword(e.symbol).length) -
                 static_cast<long long>(plain[role_index(e.role)].codeword(e.symbol).length);
    BitString a = encode(s, plain), b = encode(s, keyed);
    CHECK(static_cast<long long>(b.size()) - static_cast<long long>(a.size()) == delta);
    CHECK_FALSE(a == b);
  }
}

TEST_CASE("stream swapped at 11/011 fails by the first P picture") {
  int within = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    MiniSequence s = generate_video(seed);
    TableSet swapped = default_table_set();
    TableKey k = TableKey::identity(standard_shape(TableRole::B14));
    std::swap(k.perms[0][0], k.perms[0][1]);
    swapped[role_index(TableRole::B14)] = apply_key(swapped[role_index(TableRole::B14)], k);
    DecodeResult r = decode(encode(s, swapped), default_table_set());
    REQUIRE(r.error);
    std::size_t first_p = 0;
    while (s.pictures[first_p].type != PictureType::P) ++first_p;
    if (r.error->picture <= static_cast<int>(first_p)) ++within;
  }
  CHECK(within == 20);
}

TEST_CASE("static syntax checks") {
  MiniSequence s = testsupport::flat_sequence(1, 1);
  CHECK_NOTHROW(validate_sequence(s));
  MiniSequence bad = s;
  bad.pictures[0].slices[0].mbs[0].address_increment = 0;
  CHECK_THROWS_AS(validate_sequence(bad), Error);
  bad = s;
  bad.pictures[0].slices[0].mbs[0].mode = MbMode::Inter;
  CHECK_THROWS_AS(validate_sequence(bad), Error);
  bad = s;
  bad.pictures[0].slices[0].mbs[0].blocks[0].dc_size = 12;
  CHECK_THROWS_AS(encode(bad, default_table_set()), Error);
  bad = s;
  bad.pictures[0].slices.clear();
  CHECK_THROWS_AS(validate_sequence(bad), Error);
}

TEST_CASE("dc differential coding") {
  for (int d = -2047; d <= 2047; ++d) {
    auto [size, bits] = dc_code(d);
    unsigned expect = d == 0 ? 0u : static_cast<unsigned>(std::bit_width(static_cast<unsigned>(std::abs(d))));
    CHECK(size == expect);
    CHECK(dc_differential(size, bits) == d);
  }
}

TEST_CASE("motion delta coding") {
  for (unsigned f = 1; f <= 3; ++f) {
    int lim = 16 << (f - 1);
    for (int d = -lim; d <= lim; ++d) {
      MotionComponent c = motion_component(d, f);
      CHECK(c.code <= 16);
      CHECK(motion_delta(c, f) == d);
    }
  }
}

TEST_CASE("motion component counts") {
  CHECK(motion_components(PictureType::P, MbMode::Inter, false) == 2);
  CHECK(motion_components(PictureType::B, MbMode::Inter, false) == 4);
  CHECK(motion_components(PictureType::I, MbMode::Intra, true) == 2);
  CHECK(motion_components(PictureType::I, MbMode::Intra, false) == 0);
}

TEST_CASE("error kinds: names round trip") {
  for (std::size_t k = 0; k < kErrorKindCount; ++k) {
    auto kind = static_cast<ErrorKind>(k);
    CHECK(parse_error_kind(error_kind_name(kind)) == kind);
  }
}

TEST_CASE("error kind: illegal mode reads as InvalidPrefix") {
  std::vector<SyntaxElement> t = syntax_trace(testsupport::flat_sequence(1, 1));
  auto starts = mb_starts(t);
  REQUIRE(starts.size() == 1);
  t[starts[0] + 1].value = static_cast<unsigned>(MbMode::Inter);
  DecodeResult r = decode_trace(t);
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::InvalidPrefix);
  CHECK(r.error->picture == 0);
  CHECK(r.error->slice == 0);
  CHECK(r.error->mb == 0);
}

TEST_CASE("error kind: MacroblockCountExceeded") {
  std::vector<SyntaxElement> t = syntax_trace(testsupport::flat_sequence(2, 1));
  auto starts = mb_starts(t);
  REQUIRE(starts.size() == 2);
  t.insert(t.begin() + static_cast<std::ptrdiff_t>(starts[1]), fixed_element(0, 1));
  DecodeResult r = decode_trace(t);
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::MacroblockCountExceeded);
}

TEST_CASE("error kind: SliceSkipped") {
  std::vector<SyntaxElement> t = syntax_trace(testsupport::flat_sequence(1, 2));
  std::erase_if(t, [](const SyntaxElement& e) { return e.slice == 1; });
  DecodeResult r = decode_trace(t);
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::SliceSkipped);
  DecodeResult off = decode_trace(t, CheckSet::only({ErrorKind::EndOfStream}));
  CHECK_FALSE(off.error);
}

TEST_CASE("error kind: MarkerBitZero and switching it off") {
  MiniSequence s = testsupport::flat_sequence(1, 1);
  s.pictures[0].type = PictureType::D;
  s.pictures[0].slices[0].mbs[0].mode = MbMode::D;
  std::vector<SyntaxElement> t = syntax_trace(s);
  std::size_t marker = t.size();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].kind == SyntaxElement::Kind::Fixed && t[i].width == 1 && t[i].slice == 0) marker = i;
  REQUIRE(marker < t.size());
  t[marker].value = 0;
  DecodeResult r = decode_trace(t);
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::MarkerBitZero);
  CheckSet c = CheckSet::all();
  c.enabled.reset(static_cast<std::size_t>(ErrorKind::MarkerBitZero));
  CHECK(decode_trace(t, c).ok());
}

TEST_CASE("error kind: MissingEOB") {
  MiniSequence s = testsupport::flat_sequence(1, 1);
  MiniBlock& b = s.pictures[0].slices[0].mbs[0].blocks[0];
  b.ac.assign(63, Coefficient{0, 1});
  std::vector<SyntaxElement> t = syntax_trace(s);
  std::size_t eob = find_vlc(t, Symbol::eob());
  REQUIRE(eob < t.size());
  t[eob] = vlc_element(TableRole::B14, Symbol::run_level(0, 1));
  t.insert(t.begin() + static_cast<std::ptrdiff_t>(eob + 1), fixed_element(0, 1));
  DecodeResult r = decode_trace(t);
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::MissingEOB);
  CHECK(r.error->block == 0);
}

TEST_CASE("error kind: CoefficientOverflow") {
  MiniSequence s = testsupport::flat_sequence(1, 1);
  s.pictures[0].slices[0].mbs[0].blocks[2].ac = {{20, 900}};
  std::vector<SyntaxElement> t = syntax_trace(s);
  std::size_t esc = find_vlc(t, Symbol::escape());
  REQUIRE(esc + 1 < t.size());
  REQUIRE(t[esc + 1].width == 6);
  t[esc + 1].value = 63;
  DecodeResult r = decode_trace(t);
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::CoefficientOverflow);
  CHECK(r.error->block == 2);
}

TEST_CASE("error kind: CoefficientOutOfRange from DC prediction and zero escapes") {
  MiniSequence s = testsupport::flat_sequence(1, 1);
  auto& blocks = s.pictures[0].slices[0].mbs[0].blocks;
  for (int i : {0, 1}) {
    auto [size, bits] = dc_code(2047);
    blocks[static_cast<std::size_t>(i)].dc_size = static_cast<std::uint8_t>(size);
    blocks[static_cast<std::size_t>(i)].dc_bits = static_cast<std::uint16_t>(bits);
  }
  DecodeResult r = decode(encode(s, default_table_set()), default_table_set());
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::CoefficientOutOfRange);
  CHECK(r.error->block == 1);

  MiniSequence z = testsupport::flat_sequence(1, 1);
  z.pictures[0].slices[0].mbs[0].blocks[0].ac = {{20, 900}};
  std::vector<SyntaxElement> t = syntax_trace(z);
  std::size_t esc = find_vlc(t, Symbol::escape());
  t[esc + 2].value = 0;
  DecodeResult rz = decode_trace(t);
  REQUIRE(rz.error);
  CHECK(rz.error->kind == ErrorKind::CoefficientOutOfRange);
}

TEST_CASE("error kind: MotionVectorOutOfRange") {
  MiniSequence s = inter_sequence(2, 1);
  s.pictures[1].slices[0].mbs[0].motion[0] = {16, false, 0};
  DecodeResult r = decode(encode(s, default_table_set()), default_table_set());
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::MotionVectorOutOfRange);
  CHECK(r.error->picture == 1);
  MiniSequence left = inter_sequence(2, 1);
  left.pictures[1].slices[0].mbs[0].motion[0] = {1, true, 0};  // points outside the picture
  DecodeResult rl = decode(encode(left, default_table_set()), default_table_set());
  REQUIRE(rl.error);
  CHECK(rl.error->kind == ErrorKind::MotionVectorOutOfRange);
}

TEST_CASE("error kind: ZeroRunViolation") {
  // escape codeword ending in five zeros, a zero run and a zero level: 23 zeros
  TableSet t = default_table_set();
  std::vector<VlcEntry> e = {{Codeword::from_text("11"), Symbol::run_level(0, 1), true},
                             {Codeword::from_text("01"), Symbol::eob(), false},
                             {Codeword::from_text("100000"), Symbol::escape(), false}};
  t[role_index(TableRole::B14)] = HuffmanTable(TableRole::B14, e);
  MiniSequence s = testsupport::flat_sequence(1, 1);
  s.pictures[0].slices[0].mbs[0].blocks[0].ac = {{20, 900}};
  std::vector<SyntaxElement> tr = syntax_trace(s);
  std::size_t esc = find_vlc(tr, Symbol::escape());
  tr[esc + 1].value = 0;
  tr[esc + 2].value = 0;
  CheckSet c = CheckSet::all();
  c.enabled.reset(static_cast<std::size_t>(ErrorKind::CoefficientOutOfRange));
  DecodeResult r = decode_trace(tr, c, t);
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::ZeroRunViolation);
}

TEST_CASE("error kind: EndOfStream on truncation") {
  MiniSequence s = generate_video(3);
  BitString b = encode(s, default_table_set());
  DecodeResult r = decode(b.slice(0, b.size() / 2), default_table_set());
  REQUIRE(r.error);
  CHECK(r.error->kind == ErrorKind::EndOfStream);
}

TEST_CASE("encoding refuses symbols missing from the tables") {
  TableSet t = default_table_set();
  std::vector<VlcEntry> e = {{Codeword::from_text("1"), Symbol::run_level(0, 1), true},
                             {Codeword::from_text("01"), Symbol::eob(), false}};
  t[role_index(TableRole::B14)] = HuffmanTable(TableRole::B14, e);
  MiniSequence s = testsupport::flat_sequence(1, 1);
  s.pictures[0].slices[0].mbs[0].blocks[0].ac = {{20, 900}};
  CHECK_THROWS_AS(encode(s, t), Error);
}

TEST_CASE("stream index matches the start codes") {
  GeneratorParams p;
  p.pictures = 4;
  p.intra_vlc_ratio = 0.5;
  MiniSequence s = generate_video(12, p);
  BitString b = encode(s, default_table_set());
  StreamIndex ix = StreamIndex::build(b);
  CHECK(ix.width == 176);
  CHECK(ix.height == 144);
  CHECK(ix.pictures == 4);
  REQUIRE(ix.slices.size() == 4 * 9);
  auto sc = scan_start_codes(b);
  std::size_t k = 0;
  for (const StartCodePos& c : sc) {
    if (c.id < 1 || c.id > kMaxSliceCode) continue;
    REQUIRE(k < ix.slices.size());
    CHECK(ix.slices[k].begin == c.offset + kStartCodeBits);
    CHECK(ix.slices[k].row + 1 == c.id);
    ++k;
  }
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(ix.picture_types[q] == s.pictures[q].type);
    CHECK(ix.picture_intra_vlc[q] == s.pictures[q].intra_vlc_format);
  }
}

TEST_CASE("slices decode one at a time") {
  MiniSequence s = generate_video(4);
  TableSet t = encrypt_tables(keygen(4));
  BitString b = encode(s, t);
  StreamIndex ix = StreamIndex::build(b);
  OwnedDecoders d = OwnedDecoders::full(t);
  for (const SliceInfo& info : ix.slices) {
    MiniSlice out;
    SliceResult r = decode_slice(b, ix, info, d.view(), CheckSet::all(), &out);
    REQUIRE(r.outcome == SliceOutcome::Clean);
    CHECK(out == s.pictures[static_cast<std::size_t>(info.picture)].slices[static_cast<std::size_t>(info.slice)]);
    CHECK(r.mbs == out.mbs.size());
  }
}

TEST_CASE("partial tables: missing ESCAPE is harmless without escapes") {
  GeneratorParams p;
  p.escape_ratio = 0.0;
  MiniSequence s = generate_video(21, p);
  TableSet t = encrypt_tables(keygen(21));
  BitString b = encode(s, t);
  PartialTableSet pt;
  for (TableRole r : kAllRoles) pt[role_index(r)] = PartialTable::from_table(t[role_index(r)]);
  for (TableRole r : {TableRole::B14, TableRole::B15}) {
    PartialTable& q = pt[role_index(r)];
    std::erase_if(q.known, [](const VlcEntry& e) { return e.symbol == Symbol::escape(); });
    q.undetermined.push_back(Symbol::escape());
  }
  DecodeResult r = decode_partial(b, pt);
  REQUIRE(r.ok());
  CHECK(r.sequence == s);

  GeneratorParams q;
  q.escape_ratio = 0.3;
  MiniSequence s2 = generate_video(22, q);
  DecodeResult r2 = decode_partial(encode(s2, t), pt);
  CHECK_FALSE(r2.error);
  REQUIRE(r2.undetermined);
  CHECK((r2.undetermined->role == TableRole::B14 || r2.undetermined->role == TableRole::B15));
}

TEST_CASE("partial table conversion") {
  HuffmanTable t = default_table(TableRole::B13);
  PartialTable p = PartialTable::from_table(t);
  CHECK(p.complete());
  REQUIRE(p.to_table());
  CHECK(*p.to_table() == t);
  p.known.pop_back();
  p.undetermined.push_back(t.entries().back().symbol);
  CHECK_FALSE(p.to_table());
}

TEST_CASE("skip-undetermined mode keeps going after a gap") {
  MiniSequence s = generate_video(9);
  TableSet t = default_table_set();
  BitString b = encode(s, t);
  std::array<TableDecoder, kRoleCount> own;
  DecoderSet view;
  for (TableRole r : kAllRoles) {
    std::size_t i = role_index(r);
    own[i] = r == TableRole::B10 ? TableDecoder::unknown(r) : TableDecoder::full(t[i]);
  }
  for (std::size_t i = 0; i < kRoleCount; ++i) view[i] = &own[i];
  DecodeResult strict = decode(b, view, CheckSet::all(), DecodeMode::Strict);
  REQUIRE(strict.undetermined);
  CHECK(strict.undetermined->role == TableRole::B10);
  CHECK(strict.undetermined->picture >= 1);
  DecodeResult skip = decode(b, view, CheckSet::all(), DecodeMode::SkipUndetermined);
  CHECK_FALSE(skip.error);
  REQUIRE(skip.mb_status.size() == s.pictures.size());
  CHECK(std::count(skip.mb_status[0].begin(), skip.mb_status[0].end(), MbStatus::NotReached) == 0);
  CHECK(std::count(skip.mb_status[0].begin(), skip.mb_status[0].end(), MbStatus::Failed) == 0);
}

}  // TEST_SUITE
