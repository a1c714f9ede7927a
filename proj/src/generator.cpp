#include "vlcbreak/generator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

namespace vlcbreak {

void validate_params(const GeneratorParams& p) {
  auto fail = [](const std::string& what) { throw Error(Errc::BadParams, what); };
  if (p.width == 0 || p.height == 0 || p.width % 16 || p.height % 16 || p.width >= 4096 || p.height >= 4096)
    fail("width and height must be nonzero multiples of 16 below 4096");
  if (p.height / 16 > kMaxSliceCode) fail("too many macroblock rows");
  if (p.pictures == 0) fail("at least one picture is required");
  if (p.pictures > 1 && p.pattern.empty()) fail("empty picture pattern");
  for (char c : p.pattern) {
    if (c != 'I' && c != 'P' && c != 'B' && c != 'D') fail(std::string("bad picture type '") + c + "'");
    if (c == 'D' && !p.d_pictures) fail("D pictures need d_pictures");
  }
  for (double r : {p.intra_ratio, p.skip_ratio, p.motion_activity, p.coded_block_ratio, p.coefficient_density,
                   p.escape_ratio, p.full_block_ratio, p.intra_vlc_ratio, p.concealment_ratio, p.gap_ratio})
    if (!(r >= 0.0 && r <= 1.0)) fail("ratios must lie in [0, 1]");
  if (p.intra_ratio + p.skip_ratio > 1.0) fail("intra_ratio + skip_ratio exceeds 1");
  if (p.f_code < 1 || p.f_code > 3) fail("f_code must be 1..3");
}

ZeroProfile zero_profile(const HuffmanTable& table, const KeySpaceShape& shape) {
  ZeroProfile z;
  TableKey key = TableKey::identity(shape);
  const std::uint32_t masks = 1u << shape.flip_count;
  for (std::uint32_t m = 0; m < masks; ++m) {
    key.flips = m;
    HuffmanTable t = apply_key(table, key);
    for (const VlcEntry& e : t.entries()) {
      const Codeword& c = e.code;
      if (c.bits == 0) {
        z.all_zero = std::max<unsigned>(z.all_zero, c.length);
        continue;
      }
      unsigned lead = static_cast<unsigned>(std::countl_zero(c.bits)) - (32u - c.length);
      unsigned trail = static_cast<unsigned>(std::countr_zero(c.bits));
      z.leading = std::max(z.leading, lead);
      z.trailing = std::max(z.trailing, trail);
    }
  }
  return z;
}

unsigned worst_zero_run(const std::vector<SyntaxElement>& elements, const std::array<ZeroProfile, kRoleCount>& prof,
                        unsigned& carry) {
  unsigned run = carry;
  unsigned worst = run;
  for (const SyntaxElement& e : elements) {
    switch (e.kind) {
      case SyntaxElement::Kind::Fixed:
        for (unsigned i = e.width; i-- > 0;) {
          run = ((e.value >> i) & 1u) ? 0 : run + 1;
          worst = std::max(worst, run);
        }
        break;
      case SyntaxElement::Kind::Vlc: {
        const ZeroProfile& z = prof[role_index(e.role)];
        worst = std::max(worst, run + std::max(z.all_zero, z.leading));
        run = std::max(z.trailing, z.all_zero ? run + z.all_zero : 0u);
        break;
      }
      case SyntaxElement::Kind::StartCode: run = static_cast<unsigned>(std::countr_zero(e.value | 0x100u)); break;
    }
  }
  carry = run;
  return worst;
}

namespace {

class Drawer {
 public:
  Drawer(std::uint64_t seed, const GeneratorParams& p) : rng_(seed), p_(p) {}

  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool chance(double p) { return unit() < p; }
  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  unsigned geometric(double mean) {
    if (mean <= 0) return 0;
    double q = mean / (1.0 + mean);
    unsigned n = 0;
    while (n < 64 && chance(q)) ++n;
    return n;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  const GeneratorParams& p_;
};

struct SliceState {
  std::array<int, 3> dc{};
  std::array<int, 4> mv{};
};

bool in_table(int run, int level) {
  for (const Symbol& s : run_level_symbols())
    if (s.run == run && s.value == level) return true;
  return false;
}

class SequenceBuilder {
 public:
  SequenceBuilder(std::uint64_t seed, const GeneratorParams& p) : d_(seed, p), p_(p) {
    TableSet plain = default_table_set();
    for (TableRole r : kAllRoles) prof_[role_index(r)] = zero_profile(plain[role_index(r)], p.shapes[role_index(r)]);
  }

  MiniSequence build() {
    MiniSequence seq;
    seq.width = p_.width;
    seq.height = p_.height;
    seq.chroma = p_.chroma;
    mb_w_ = seq.mb_width();
    blocks_ = seq.blocks();
    for (std::size_t i = 0; i < p_.pictures; ++i) {
      MiniPicture& pic = seq.pictures.emplace_back();
      char t = i == 0 ? 'I' : p_.pattern[(i - 1) % p_.pattern.size()];
      pic.type = t == 'I' ? PictureType::I : t == 'P' ? PictureType::P : t == 'B' ? PictureType::B : PictureType::D;
      pic.intra_vlc_format = pic.type != PictureType::D && d_.chance(p_.intra_vlc_ratio);
      pic.concealment_motion_vectors = pic.type != PictureType::D && d_.chance(p_.concealment_ratio);
      pic.f_code = p_.f_code;
      draw_pan(pic.f_code);
      for (unsigned row = 0; row < seq.mb_height(); ++row) build_slice(pic, row);
    }
    return seq;
  }

 private:
  void build_slice(MiniPicture& pic, unsigned row) {
    MiniSlice& sl = pic.slices.emplace_back();
    sl.row = static_cast<std::uint8_t>(row);
    row_ = row;
    SliceState st;
    unsigned carry = static_cast<unsigned>(std::countr_zero((row + 1u) | 0x100u));
    int col = -1;
    for (;;) {
      unsigned inc = 1;
      while (inc < 3 && d_.chance(p_.gap_ratio)) ++inc;
      if (col + static_cast<int>(inc) >= static_cast<int>(mb_w_)) {
        if (col >= 0) break;
        inc = 1;
      }
      col += static_cast<int>(inc);
      col_ = col;
      bool placed = false;
      for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
        SliceState trial = st;
        MiniMacroblock mb = draw_mb(pic, trial, inc, attempt >= 24);
        unsigned c = carry;
        if (worst_zero_run(macroblock_trace(mb, pic, p_.chroma), prof_, c) < kStartCodeZeros) {
          sl.mbs.push_back(std::move(mb));
          st = trial;
          carry = c;
          placed = true;
        }
      }
      if (!placed) throw Error(Errc::BadParams, "cannot draw a macroblock free of long zero runs");
    }
  }

  // Vectors follow a per-picture pan plus jitter and are clamped to the
  // legal range, so honest vectors often sit exactly on a bound.
  int draw_vector(int& pred, unsigned comp, unsigned f_code, bool active) {
    int reach = 16 << (f_code - 1);
    int origin = (comp & 1u) == 0 ? col_ * 16 : static_cast<int>(row_) * 16;
    int limit = (comp & 1u) == 0 ? p_.width - 16 : p_.height - 16;
    int lo = std::max({-reach + 1, -origin, pred - reach});
    int hi = std::min({reach - 1, limit - origin, pred + reach});
    int target = pan_[comp] + (active ? d_.range(-3, 3) : 0);
    target = std::clamp(target, lo, hi);
    int delta = target - pred;
    pred = target;
    return delta;
  }

  void draw_pan(unsigned f_code) {
    int reach = 16 << (f_code - 1);
    for (unsigned i = 0; i < 2; ++i) {
      int mag = d_.chance(p_.motion_activity) ? d_.range(reach / 2, reach + 4) : d_.range(0, 4);
      pan_[i] = d_.chance(0.5) ? mag : -mag;
      pan_[i + 2] = -pan_[i];
    }
  }

  Coefficient draw_coefficient() {
    Coefficient c;
    const auto symbols = run_level_symbols();
    if (d_.chance(p_.escape_ratio)) {
      int run = 0, level = 0;
      do {
        run = d_.range(0, 20);
        level = d_.range(2, 40);
      } while (in_table(run, level));
      c.run = static_cast<std::uint8_t>(run);
      c.level = static_cast<std::int16_t>(level);
    } else {
      unsigned k = std::min<unsigned>(d_.geometric(2.0), static_cast<unsigned>(symbols.size() - 1));
      c.run = symbols[k].run;
      c.level = symbols[k].value;
    }
    if (d_.chance(0.5)) c.level = static_cast<std::int16_t>(-c.level);
    return c;
  }

  void draw_ac(MiniBlock& b, bool intra, bool plain) {
    unsigned pos = intra ? 1 : 0;
    if (plain) return;
    if (p_.coefficient_density > 0 && d_.chance(p_.full_block_ratio)) {
      // every position up to 63 is used; the last run is cut to fit
      while (pos < 64) {
        Coefficient c = draw_coefficient();
        if (pos + c.run > 63) c.run = static_cast<std::uint8_t>(63 - pos);
        pos += c.run + 1u;
        b.ac.push_back(c);
      }
      return;
    }
    unsigned n = d_.geometric(p_.coefficient_density * 8.0);
    for (unsigned i = 0; i < n; ++i) {
      Coefficient c = draw_coefficient();
      if (pos + c.run > 63) break;
      pos += c.run + 1u;
      b.ac.push_back(c);
    }
  }

  MiniBlock draw_intra_block(SliceState& st, unsigned index, bool dc_only, bool plain) {
    MiniBlock b;
    b.is_intra = true;
    int& pred = st.dc[index < 4 ? 0 : 1 + ((index - 4) & 1u)];
    int jump = d_.chance(0.15) ? d_.range(-700, 700) : d_.range(-20, 20);
    if (plain) jump = 0;
    int target = std::clamp(pred + jump, -1800, 1800);
    auto [size, bits] = dc_code(target - pred);
    b.dc_size = static_cast<std::uint8_t>(size);
    b.dc_bits = static_cast<std::uint16_t>(bits);
    pred = target;
    if (!dc_only) draw_ac(b, true, plain);
    return b;
  }

  MiniMacroblock draw_mb(const MiniPicture& pic, SliceState& st, unsigned inc, bool plain) {
    MiniMacroblock mb;
    mb.address_increment = static_cast<std::uint8_t>(inc);
    if (pic.type == PictureType::I) {
      mb.mode = MbMode::Intra;
    } else if (pic.type == PictureType::D) {
      mb.mode = MbMode::D;
    } else {
      double u = d_.unit();
      mb.mode = u < p_.intra_ratio ? MbMode::Intra : u < p_.intra_ratio + p_.skip_ratio ? MbMode::Skipped : MbMode::Inter;
      if (plain) mb.mode = MbMode::Skipped;
    }
    switch (mb.mode) {
      case MbMode::Skipped:
        st.dc = {0, 0, 0};
        st.mv = {0, 0, 0, 0};
        break;
      case MbMode::Intra:
        if (pic.concealment_motion_vectors) {
          for (unsigned i = 0; i < 2; ++i)
            mb.motion.push_back(motion_component(draw_vector(st.mv[i], i, pic.f_code, d_.chance(p_.motion_activity)),
                                                 pic.f_code));
          st.mv[2] = st.mv[3] = 0;
        } else {
          st.mv = {0, 0, 0, 0};
        }
        for (unsigned b = 0; b < blocks_; ++b) mb.blocks.push_back(draw_intra_block(st, b, false, plain));
        break;
      case MbMode::Inter: {
        st.dc = {0, 0, 0};
        unsigned n = pic.type == PictureType::B ? 4 : 2;
        for (unsigned i = 0; i < n; ++i)
          mb.motion.push_back(
              motion_component(draw_vector(st.mv[i], i, pic.f_code, d_.chance(p_.motion_activity)), pic.f_code));
        for (unsigned b = 0; b < blocks_; ++b) {
          bool coded = d_.chance(p_.coded_block_ratio);
          mb.cbp = static_cast<std::uint16_t>((mb.cbp << 1) | (coded ? 1u : 0u));
          if (!coded) continue;
          MiniBlock& blk = mb.blocks.emplace_back();
          draw_ac(blk, false, false);
        }
        break;
      }
      case MbMode::D:
        st.mv = {0, 0, 0, 0};
        for (unsigned b = 0; b < blocks_; ++b) mb.blocks.push_back(draw_intra_block(st, b, true, plain));
        break;
    }
    return mb;
  }

  Drawer d_;
  const GeneratorParams& p_;
  std::array<ZeroProfile, kRoleCount> prof_{};
  unsigned mb_w_ = 0;
  unsigned blocks_ = 6;
  unsigned row_ = 0;
  int col_ = 0;
  std::array<int, 4> pan_{};
};

}  // namespace

MiniSequence generate_video(std::uint64_t seed, const GeneratorParams& params) {
  validate_params(params);
  return SequenceBuilder(seed, params).build();
}

}  // namespace vlcbreak
