#include <chrono>

#include "anchor.hpp"
#include "vlcbreak/attacks.hpp"

namespace vlcbreak {

std::size_t ChosenPlan::total_mbs() const {
  std::size_t n = 0;
  for (const PlanFragment& f : fragments)
    for (const MiniPicture& p : f.sequence.pictures)
      for (const MiniSlice& s : p.slices) n += s.mbs.size();
  return n;
}

namespace {

constexpr std::uint8_t kProbeRun = 20;
constexpr std::int16_t kProbeLevel = 1445;
constexpr std::uint8_t kPlanFCode = 2;

MiniBlock escape_block(bool intra, std::int16_t level) {
  MiniBlock b;
  b.is_intra = intra;
  b.ac = {{kProbeRun, level}};
  return b;
}

// Escape, the probed pair, escape, EOB.
MiniBlock sandwich_block(bool intra, const Symbol& s) {
  MiniBlock b;
  b.is_intra = intra;
  b.ac = {{kProbeRun, kProbeLevel}, {s.run, s.value}, {kProbeRun, kProbeLevel}};
  return b;
}

std::vector<MiniBlock> ac_probe_blocks(bool intra) {
  std::vector<MiniBlock> out = {escape_block(intra, kProbeLevel), escape_block(intra, -kProbeLevel)};
  for (const Symbol& s : run_level_symbols()) out.push_back(sandwich_block(intra, s));
  return out;
}

// Signs and residuals for the motion probes so every reconstructed vector
// stays in range and inside the picture.
struct MotionPlanner {
  std::vector<std::array<std::uint8_t, 2>> codes;  // horizontal, vertical per MB
  std::vector<std::array<MotionComponent, 2>> out;
  int width = 0, height = 0;

  bool place(std::size_t mb, int h, int v) {
    if (mb == codes.size()) return true;
    const int range = motion_range(kPlanFCode);
    for (int choice = 0; choice < 16; ++choice) {
      std::array<MotionComponent, 2> comp;
      int vec[2] = {h, v};
      bool ok = true;
      for (int k = 0; k < 2 && ok; ++k) {
        MotionComponent& m = comp[static_cast<std::size_t>(k)];
        m.code = codes[mb][static_cast<std::size_t>(k)];
        m.negative = m.code != 0 && ((choice >> (2 * k)) & 1);
        m.residual = m.code != 0 ? static_cast<std::uint16_t>((choice >> (2 * k + 1)) & 1) : 0;
        if (m.code == 0 && (choice >> (2 * k)) & 3) ok = false;
        vec[k] += motion_delta(m, kPlanFCode);
        int origin = k == 0 ? static_cast<int>(mb) * 16 : 0;
        int limit = (k == 0 ? width : height) - 16;
        ok = ok && std::abs(vec[k]) < range && origin + vec[k] >= 0 && origin + vec[k] <= limit;
      }
      if (!ok) continue;
      out[mb] = comp;
      if (place(mb + 1, vec[0], vec[1])) return true;
    }
    return false;
  }
};

MiniMacroblock inter_mb(std::vector<MotionComponent> motion, std::uint16_t cbp, std::vector<MiniBlock> blocks) {
  MiniMacroblock mb;
  mb.mode = MbMode::Inter;
  mb.motion = std::move(motion);
  mb.cbp = cbp;
  mb.blocks = std::move(blocks);
  return mb;
}

PlanFragment motion_and_ac_fragment() {
  PlanFragment f;
  f.id = "motion+ac";
  MiniSequence& seq = f.sequence;
  seq.width = 176;
  seq.height = 32;
  MiniPicture pic;
  pic.type = PictureType::P;
  pic.f_code = kPlanFCode;

  // Row 0: not-coded MBs carrying motion codes 0..16.
  MotionPlanner mp;
  mp.width = seq.width;
  mp.height = seq.height;
  for (std::uint8_t i = 0; i < 9; ++i) mp.codes.push_back({static_cast<std::uint8_t>(8 + i), i < 8 ? i : std::uint8_t{0}});
  mp.out.resize(mp.codes.size());
  if (!mp.place(0, 0, 0)) throw Error(Errc::ExtractionFailed, "motion probes do not fit the picture");
  MiniSlice row0;
  row0.row = 0;
  for (const auto& comp : mp.out) row0.mbs.push_back(inter_mb({comp[0], comp[1]}, 0, {}));
  pic.slices.push_back(row0);

  // Row 1: coded blocks, six per MB: escape pair first, then sandwiches.
  MiniSlice row1;
  row1.row = 1;
  std::vector<MiniBlock> probes = ac_probe_blocks(false);
  for (std::size_t at = 0; at < probes.size(); at += 6) {
    std::vector<MiniBlock> blocks(probes.begin() + static_cast<std::ptrdiff_t>(at),
                                  probes.begin() + static_cast<std::ptrdiff_t>(std::min(at + 6, probes.size())));
    row1.mbs.push_back(inter_mb({{}, {}}, 0x3F, std::move(blocks)));
  }
  pic.slices.push_back(row1);
  seq.pictures.push_back(pic);
  for (int c = 0; c <= 16; ++c) f.pins.emplace_back(TableRole::B10, Symbol::motion_code(c));
  f.pins.emplace_back(TableRole::B14, Symbol::escape());
  f.pins.emplace_back(TableRole::B14, Symbol::eob());
  for (const Symbol& s : run_level_symbols()) f.pins.emplace_back(TableRole::B14, s);
  return f;
}

// Differential with exactly `size` significant bits that moves the
// predictor back toward zero.
int probe_differential(unsigned size, int pred) {
  if (size == 0) return 0;
  unsigned top = 1u << (size - 1);
  int mag = static_cast<int>(top | (0x555u & (top - 1)));
  return pred > 0 ? -mag : mag;
}

MiniBlock dc_block(unsigned size, int& pred) {
  MiniBlock b;
  b.is_intra = true;
  int d = probe_differential(size, pred);
  auto [s, bits] = dc_code(d);
  b.dc_size = static_cast<std::uint8_t>(s);
  b.dc_bits = static_cast<std::uint16_t>(bits);
  pred += d;
  return b;
}

PlanFragment dc_fragment() {
  PlanFragment f;
  f.id = "dc";
  MiniSequence& seq = f.sequence;
  seq.width = 176;
  seq.height = 16;
  MiniPicture pic;
  pic.type = PictureType::I;
  MiniSlice sl;
  int pred[3] = {0, 0, 0};
  for (unsigned m = 0; m < 6; ++m) {
    MiniMacroblock mb;
    mb.mode = MbMode::Intra;
    for (unsigned b = 0; b < 4; ++b) {
      unsigned k = 4 * m + b;
      mb.blocks.push_back(dc_block(k < 12 ? k : 0, pred[0]));
    }
    mb.blocks.push_back(dc_block(2 * m, pred[1]));
    mb.blocks.push_back(dc_block(2 * m + 1, pred[2]));
    sl.mbs.push_back(mb);
  }
  pic.slices.push_back(sl);
  seq.pictures.push_back(pic);
  for (int s = 0; s <= 11; ++s) {
    f.pins.emplace_back(TableRole::B12, Symbol::dc_size(s));
    f.pins.emplace_back(TableRole::B13, Symbol::dc_size(s));
  }
  return f;
}

PlanFragment intra_ac_fragment() {
  PlanFragment f;
  f.id = "intra-ac";
  MiniSequence& seq = f.sequence;
  seq.width = 176;
  seq.height = 16;
  MiniPicture pic;
  pic.type = PictureType::I;
  pic.intra_vlc_format = true;
  MiniSlice sl;
  std::vector<MiniBlock> probes = ac_probe_blocks(true);
  for (std::size_t at = 0; at < probes.size(); at += 6) {
    MiniMacroblock mb;
    mb.mode = MbMode::Intra;
    mb.blocks.assign(probes.begin() + static_cast<std::ptrdiff_t>(at),
                     probes.begin() + static_cast<std::ptrdiff_t>(std::min(at + 6, probes.size())));
    sl.mbs.push_back(mb);
  }
  pic.slices.push_back(sl);
  seq.pictures.push_back(pic);
  f.pins.emplace_back(TableRole::B15, Symbol::escape());
  f.pins.emplace_back(TableRole::B15, Symbol::eob());
  for (const Symbol& s : run_level_symbols()) f.pins.emplace_back(TableRole::B15, s);
  return f;
}

}  // namespace

ChosenPlan build_chosen_plan() {
  ChosenPlan plan;
  plan.fragments = {motion_and_ac_fragment(), dc_fragment(), intra_ac_fragment()};
  return plan;
}

AttackReport cpa_attack(const ChosenPlan& plan, const EncryptFn& encrypt, const AttackOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  const TableSet plain = default_table_set();
  Bindings bound;
  detail::AlignOptions align;
  align.max_solutions = 1;
  for (const PlanFragment& f : plan.fragments) {
    BitString cipher = encrypt(f.sequence);
    std::vector<SyntaxElement> trace = syntax_trace(f.sequence);
    std::vector<detail::Segment> segments;
    if (!detail::split_segments(trace, cipher, segments))
      throw Error(Errc::ExtractionFailed, f.id + ": start codes do not line up");
    for (std::size_t k = 0; k < segments.size(); ++k) {
      detail::AlignResult r = detail::align_segment(cipher, segments[k], trace, bound, align);
      if (r.status != detail::AlignStatus::Unique) {
        const char* why = r.status == detail::AlignStatus::None       ? "no reading fits the anchors"
                          : r.status == detail::AlignStatus::Multiple ? "anchors admit several readings"
                                                                      : "search budget exhausted";
        throw Error(Errc::ExtractionFailed, f.id + ": segment " + std::to_string(k) + ": " + why);
      }
      for (const auto& [role, sym, code] : r.common) bound.bind(role, sym, code);
    }
  }
  AttackReport rep;
  SchemeKey key;
  for (TableRole role : kAllRoles) {
    const HuffmanTable& p = plain[role_index(role)];
    auto table = detail::table_from_bindings(p, bound.table[role_index(role)]);
    if (!table) throw Error(Errc::ExtractionFailed, std::string("plan leaves entries of ") + role_name(role) + " unread");
    auto k = recover_table_key(p, *table, options.shapes[role_index(role)]);
    if (!k) throw Error(Errc::ExtractionFailed, std::string(role_name(role)) + " table is not reachable by any key");
    key[role] = *k;
    rep.recovered[role_index(role)] = PartialTable::from_table(*table);
  }
  rep.key = key;
  rep.outcome = Outcome::Unique;
  rep.bindings = bound.size();
  rep.note = "chosen MBs " + std::to_string(plan.total_mbs());
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace vlcbreak
