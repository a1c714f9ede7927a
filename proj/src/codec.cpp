#include "vlcbreak/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>

namespace vlcbreak {

char picture_type_char(PictureType t) {
  switch (t) {
    case PictureType::I: return 'I';
    case PictureType::P: return 'P';
    case PictureType::B: return 'B';
    case PictureType::D: return 'D';
  }
  return '?';
}

unsigned motion_components(PictureType type, MbMode mode, bool concealment) {
  switch (mode) {
    case MbMode::Inter: return type == PictureType::B ? 4 : 2;
    case MbMode::Intra: return concealment ? 2 : 0;
    default: return 0;
  }
}

int dc_differential(unsigned size, unsigned bits) {
  if (size == 0) return 0;
  if (bits >= (1u << (size - 1))) return static_cast<int>(bits);
  return static_cast<int>(bits) - static_cast<int>((1u << size) - 1);
}

std::pair<unsigned, unsigned> dc_code(int d) {
  if (d == 0) return {0, 0};
  unsigned mag = static_cast<unsigned>(std::abs(d));
  unsigned size = static_cast<unsigned>(std::bit_width(mag));
  unsigned bits = d > 0 ? mag : static_cast<unsigned>(d + static_cast<int>((1u << size) - 1));
  return {size, bits};
}

int motion_delta(const MotionComponent& c, unsigned f_code) {
  if (c.code == 0) return 0;
  unsigned r = f_code - 1;
  int mag = static_cast<int>(((c.code - 1u) << r) + c.residual + 1u);
  return c.negative ? -mag : mag;
}

MotionComponent motion_component(int delta, unsigned f_code) {
  MotionComponent c;
  if (delta == 0) return c;
  unsigned r = f_code - 1;
  unsigned mag = static_cast<unsigned>(std::abs(delta));
  if (mag > (16u << r)) throw Error(Errc::Unencodable, "motion delta out of range");
  c.code = static_cast<std::uint8_t>(((mag - 1) >> r) + 1);
  c.residual = static_cast<std::uint16_t>((mag - 1) & ((1u << r) - 1));
  c.negative = delta < 0;
  return c;
}

TableRole ac_role(bool intra, bool intra_vlc_format) {
  return intra && intra_vlc_format ? TableRole::B15 : TableRole::B14;
}

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidPrefix: return "InvalidPrefix";
    case ErrorKind::ZeroRunViolation: return "ZeroRunViolation";
    case ErrorKind::MarkerBitZero: return "MarkerBitZero";
    case ErrorKind::CoefficientOutOfRange: return "CoefficientOutOfRange";
    case ErrorKind::MotionVectorOutOfRange: return "MotionVectorOutOfRange";
    case ErrorKind::CoefficientOverflow: return "CoefficientOverflow";
    case ErrorKind::MissingEOB: return "MissingEOB";
    case ErrorKind::MacroblockCountExceeded: return "MacroblockCountExceeded";
    case ErrorKind::SliceSkipped: return "SliceSkipped";
    case ErrorKind::EndOfStream: return "EndOfStream";
  }
  return "?";
}

ErrorKind parse_error_kind(const std::string& name) {
  for (std::size_t i = 0; i < kErrorKindCount; ++i) {
    auto k = static_cast<ErrorKind>(i);
    if (name == error_kind_name(k)) return k;
  }
  throw Error(Errc::ParseError, "unknown check '" + name + "'");
}

std::string describe(const SyntaxError& e) {
  std::string s = error_kind_name(e.kind);
  s += " at bit " + std::to_string(e.bit_offset);
  s += " (picture " + std::to_string(e.picture) + ", slice " + std::to_string(e.slice) + ", mb " +
       std::to_string(e.mb) + ", block " + std::to_string(e.block) + ")";
  return s;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::Unencodable, what); }

void validate_block(const MiniBlock& b, bool intra, bool dc_only) {
  if (b.is_intra != intra) bad("block intra flag does not match its macroblock");
  if (intra) {
    if (b.dc_size > 11) bad("dc_size above 11");
    if (b.dc_size < 16 && (b.dc_bits >> b.dc_size) != 0) bad("dc differential wider than dc_size");
  }
  if (dc_only && !b.ac.empty()) bad("D macroblocks carry no AC coefficients");
  unsigned pos = intra ? 1 : 0;
  for (const Coefficient& c : b.ac) {
    if (c.run > 63) bad("run above 63");
    if (c.level == 0 || c.level < -2047 || c.level > 2047) bad("level out of range");
    pos += c.run + 1u;
    if (pos > 64) bad("more than 64 coefficients");
  }
  if (!b.terminated_by_eob) bad("blocks must end with EOB");
}

}  // namespace

void validate_sequence(const MiniSequence& seq) {
  if (seq.width == 0 || seq.height == 0 || seq.width % 16 || seq.height % 16 || seq.width >= 4096 ||
      seq.height >= 4096)
    bad("width and height must be nonzero multiples of 16 below 4096");
  if (seq.mb_height() > kMaxSliceCode) bad("too many macroblock rows");
  if (seq.pictures.empty()) bad("sequence has no pictures");
  const unsigned blocks = seq.blocks();
  for (const MiniPicture& pic : seq.pictures) {
    if (pic.f_code < 1 || pic.f_code > 9) bad("f_code out of 1..9");
    if (pic.slices.size() != seq.mb_height()) bad("one slice per macroblock row required");
    for (std::size_t r = 0; r < pic.slices.size(); ++r) {
      const MiniSlice& sl = pic.slices[r];
      if (sl.row != r) bad("slice rows must be consecutive from 0");
      if (sl.mbs.empty()) bad("empty slice");
      unsigned col = 0;
      bool first = true;
      for (const MiniMacroblock& mb : sl.mbs) {
        if (mb.address_increment < 1 || mb.address_increment > kMaxAddressIncrement)
          bad("address increment out of 1..8");
        col = first ? mb.address_increment - 1u : col + mb.address_increment;
        first = false;
        if (col >= seq.mb_width()) bad("macroblock beyond picture width");
        bool dpic = pic.type == PictureType::D;
        if (dpic != (mb.mode == MbMode::D)) bad("D macroblocks exactly in D pictures");
        if (pic.type == PictureType::I && (mb.mode == MbMode::Inter || mb.mode == MbMode::Skipped))
          bad("I pictures hold only intra macroblocks");
        if (mb.motion.size() != motion_components(pic.type, mb.mode, pic.concealment_motion_vectors))
          bad("wrong motion component count");
        for (const MotionComponent& m : mb.motion) {
          if (m.code > 16) bad("motion code above 16");
          if (m.code == 0 && (m.negative || m.residual)) bad("zero motion code carries sign or residual");
          if ((m.residual >> (pic.f_code - 1)) != 0) bad("motion residual too wide");
        }
        switch (mb.mode) {
          case MbMode::Skipped:
            if (!mb.blocks.empty() || mb.cbp) bad("skipped macroblock with data");
            break;
          case MbMode::Intra:
          case MbMode::D:
            if (mb.blocks.size() != blocks) bad("intra macroblock block count");
            for (const MiniBlock& b : mb.blocks) validate_block(b, true, mb.mode == MbMode::D);
            break;
          case MbMode::Inter:
            if ((mb.cbp >> blocks) != 0) bad("cbp too wide");
            if (mb.blocks.size() != static_cast<std::size_t>(std::popcount(mb.cbp))) bad("cbp and block count differ");
            for (const MiniBlock& b : mb.blocks) validate_block(b, false, false);
            break;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

namespace {

class Emitter {
 public:
  Emitter(const TableProvider& tables, std::vector<SyntaxElement>* trace) : provider_(tables), trace_(trace) {}

  void set_picture(int pic) {
    picture_ = pic;
    tables_ = &provider_(static_cast<std::size_t>(pic));
  }
  void set_slice(int s) { slice_ = s; }

  void fixed(std::uint32_t value, unsigned width) {
    out_.write_bits(value, width);
    if (trace_) {
      SyntaxElement e;
      e.kind = SyntaxElement::Kind::Fixed;
      e.value = value;
      e.width = static_cast<std::uint8_t>(width);
      push(e);
    }
  }

  void vlc(TableRole role, const Symbol& s) {
    const Codeword& c = (*tables_)[role_index(role)].codeword(s);
    out_.write_bits(c.bits, c.length);
    if (trace_) {
      SyntaxElement e;
      e.kind = SyntaxElement::Kind::Vlc;
      e.role = role;
      e.symbol = s;
      push(e);
    }
  }

  bool has(TableRole role, const Symbol& s) const { return (*tables_)[role_index(role)].contains(s); }

  void start(std::uint8_t id) {
    starts_.push_back(out_.size());
    write_start_code(out_, id);
    if (trace_) {
      SyntaxElement e;
      e.kind = SyntaxElement::Kind::StartCode;
      e.value = id;
      push(e);
    }
  }

  const std::vector<std::size_t>& starts() const { return starts_; }
  BitString& out() { return out_; }

 private:
  void push(SyntaxElement e) {
    e.picture = picture_;
    e.slice = slice_;
    trace_->push_back(e);
  }

  const TableProvider& provider_;
  std::vector<SyntaxElement>* trace_;
  const TableSet* tables_ = nullptr;
  BitString out_;
  std::vector<std::size_t> starts_;
  int picture_ = -1;
  int slice_ = -1;
};

void emit_block(Emitter& em, const MiniBlock& b, unsigned index, bool intra, bool ivf, bool dc_only) {
  if (intra) {
    em.vlc(dc_role(index), Symbol::dc_size(b.dc_size));
    if (b.dc_size) em.fixed(b.dc_bits, b.dc_size);
  }
  if (dc_only) return;
  TableRole role = ac_role(intra, ivf);
  for (const Coefficient& c : b.ac) {
    unsigned mag = static_cast<unsigned>(std::abs(c.level));
    Symbol s = Symbol::run_level(c.run, static_cast<int>(mag));
    if (em.has(role, s)) {
      em.vlc(role, s);
      em.fixed(c.level < 0 ? 1 : 0, 1);
    } else {
      em.vlc(role, Symbol::escape());
      em.fixed(c.run, 6);
      em.fixed(static_cast<std::uint32_t>(c.level) & 0xFFFu, 12);
    }
  }
  em.vlc(role, Symbol::eob());
}

void emit_motion(Emitter& em, const MotionComponent& m, unsigned f_code) {
  em.vlc(TableRole::B10, Symbol::motion_code(m.code));
  if (m.code == 0) return;
  em.fixed(m.negative ? 1 : 0, 1);
  if (f_code > 1) em.fixed(m.residual, f_code - 1);
}

void emit_macroblock(Emitter& em, const MiniMacroblock& mb, const MiniPicture& pic, unsigned blocks) {
  for (unsigned k = 1; k < mb.address_increment; ++k) em.fixed(0, 1);
  em.fixed(1, 1);
  em.fixed(static_cast<unsigned>(mb.mode), 2);
  switch (mb.mode) {
    case MbMode::Skipped: break;
    case MbMode::Intra:
      if (pic.concealment_motion_vectors) {
        for (const MotionComponent& m : mb.motion) emit_motion(em, m, pic.f_code);
        em.fixed(1, 1);
      }
      for (unsigned b = 0; b < blocks; ++b) emit_block(em, mb.blocks[b], b, true, pic.intra_vlc_format, false);
      break;
    case MbMode::Inter: {
      for (const MotionComponent& m : mb.motion) emit_motion(em, m, pic.f_code);
      em.fixed(mb.cbp, blocks);
      std::size_t next = 0;
      for (unsigned b = 0; b < blocks; ++b)
        if ((mb.cbp >> (blocks - 1 - b)) & 1u) emit_block(em, mb.blocks[next++], b, false, false, false);
      break;
    }
    case MbMode::D:
      for (unsigned b = 0; b < blocks; ++b) emit_block(em, mb.blocks[b], b, true, false, true);
      em.fixed(1, 1);
      break;
  }
}

BitString encode_impl(const MiniSequence& seq, const TableProvider& tables, std::vector<SyntaxElement>* trace) {
  validate_sequence(seq);
  Emitter em(tables, trace);
  const unsigned blocks = seq.blocks();
  em.start(kSeqCode);
  em.fixed(seq.width, 12);
  em.fixed(seq.height, 12);
  em.fixed(static_cast<unsigned>(seq.chroma), 2);
  for (std::size_t p = 0; p < seq.pictures.size(); ++p) {
    const MiniPicture& pic = seq.pictures[p];
    em.set_picture(static_cast<int>(p));
    em.set_slice(-1);
    em.start(kPictureCode);
    em.fixed(static_cast<unsigned>(pic.type), 3);
    em.fixed(pic.intra_vlc_format, 1);
    em.fixed(pic.concealment_motion_vectors, 1);
    em.fixed(pic.f_code, 4);
    for (std::size_t s = 0; s < pic.slices.size(); ++s) {
      const MiniSlice& sl = pic.slices[s];
      em.set_slice(static_cast<int>(s));
      em.start(static_cast<std::uint8_t>(sl.row + 1));
      for (const MiniMacroblock& mb : sl.mbs) emit_macroblock(em, mb, pic, blocks);
    }
  }
  em.set_slice(-1);
  em.start(kEndCode);

  // Long zero runs are legal only inside start codes.
  BitString& out = em.out();
  std::vector<StartCodePos> found = scan_start_codes(out);
  bool same = found.size() == em.starts().size();
  for (std::size_t i = 0; same && i < found.size(); ++i) same = found[i].offset == em.starts()[i];
  if (!same || max_zero_run_outside_start_codes(out) >= kStartCodeZeros)
    throw Error(Errc::Unencodable, "encoding contains 23 or more consecutive zeros outside start codes");
  return std::move(out);
}

}  // namespace

BitString encode(const MiniSequence& seq, const TableSet& tables) {
  TableProvider p = [&tables](std::size_t) -> const TableSet& { return tables; };
  return encode_impl(seq, p, nullptr);
}

BitString encode(const MiniSequence& seq, const TableProvider& tables) { return encode_impl(seq, tables, nullptr); }

BitString encode_traced(const MiniSequence& seq, const TableProvider& tables, std::vector<SyntaxElement>& trace) {
  trace.clear();
  return encode_impl(seq, tables, &trace);
}

std::vector<SyntaxElement> macroblock_trace(const MiniMacroblock& mb, const MiniPicture& pic, ChromaFormat chroma) {
  static const TableSet defaults = default_table_set();
  TableProvider p = [](std::size_t) -> const TableSet& { return defaults; };
  std::vector<SyntaxElement> trace;
  Emitter em(p, &trace);
  em.set_picture(0);
  emit_macroblock(em, mb, pic, blocks_per_mb(chroma));
  return trace;
}

std::vector<SyntaxElement> syntax_trace(const MiniSequence& seq) {
  static const TableSet defaults = default_table_set();
  TableProvider p = [](std::size_t) -> const TableSet& { return defaults; };
  std::vector<SyntaxElement> trace;
  encode_impl(seq, p, &trace);
  return trace;
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

DecoderSet OwnedDecoders::view() const {
  DecoderSet v{};
  for (std::size_t i = 0; i < kRoleCount; ++i) v[i] = &decoders[i];
  return v;
}

OwnedDecoders OwnedDecoders::full(const TableSet& tables) {
  OwnedDecoders d;
  for (std::size_t i = 0; i < kRoleCount; ++i) d.decoders[i] = TableDecoder::full(tables[i]);
  return d;
}

namespace {

struct PictureCtx {
  unsigned mb_w = 0, mb_h = 0, blocks = 6;
  std::uint16_t width = 0, height = 0;
  PictureType type = PictureType::I;
  bool ivf = false, cmv = false;
  unsigned f_code = 1;
  int picture = 0;
};

enum class Stop : std::uint8_t { Clean, Error, Undetermined, Abandoned };

class SliceParser {
 public:
  SliceParser(BitCursor& cur, const DecoderSet& t, const CheckSet& ck) : cur_(cur), t_(t), ck_(ck) {}

  SyntaxError error;
  UndeterminedHit undetermined;
  std::size_t mbs = 0;
  std::vector<MbStatus>* status = nullptr;
  VlcChooser* chooser = nullptr;

  Stop run(const PictureCtx& ctx, int slice_index, unsigned row, MiniSlice* out) {
    ctx_ = &ctx;
    slice_ = slice_index;
    row_ = row;
    out_ = out;
    col_ = -1;
    block_ = -1;
    mbs = 0;
    stop_ = Stop::Clean;
    reset_dc();
    reset_mv();
    for (;;) {
      if (cur_.at_start_code()) {
        if (mbs == 0) {
          if (!raise(ErrorKind::SliceSkipped, false)) return stop_;
        }
        // the rest of the row is skipped
        if (status)
          for (unsigned c = static_cast<unsigned>(col_ + 1); c < ctx.mb_w; ++c)
            (*status)[row_ * ctx.mb_w + c] = MbStatus::Skipped;
        return Stop::Clean;
      }
      if (cur_.remaining() == 0) {
        raise(ErrorKind::EndOfStream, true);
        return stop_;
      }
      block_ = -1;
      if (!macroblock()) {
        if (status && col_ >= 0 && col_ < static_cast<int>(ctx.mb_w))
          (*status)[row_ * ctx.mb_w + static_cast<unsigned>(col_)] = MbStatus::Failed;
        return stop_;
      }
      ++mbs;
    }
  }

 private:
  // Returns false when parsing must stop (stop_ says why).
  bool raise(ErrorKind k, bool fatal) {
    if (ck_.on(k)) {
      error = {k, cur_.position(), ctx_->picture, slice_, col_, block_};
      stop_ = Stop::Error;
      return false;
    }
    if (fatal) {
      stop_ = Stop::Abandoned;
      return false;
    }
    return true;
  }

  bool zero_check() {
    if (cur_.zero_run() >= kStartCodeZeros) return raise(ErrorKind::ZeroRunViolation, false);
    return true;
  }

  bool fixed(unsigned n, std::uint32_t& v) {
    if (!cur_.try_read_bits(n, v)) return raise(ErrorKind::EndOfStream, true);
    return zero_check();
  }

  bool vlc(TableRole role, const VlcEntry*& e) {
    std::size_t start = cur_.position();
    switch (t_[role_index(role)]->decode(cur_, e)) {
      case VlcStatus::Ok: return zero_check();
      case VlcStatus::Invalid: return raise(ErrorKind::InvalidPrefix, true);
      case VlcStatus::EndOfStream: return raise(ErrorKind::EndOfStream, true);
      case VlcStatus::Undetermined:
        if (chooser) {
          VlcChoice c = chooser->choose(role, cur_.stream(), start);
          if (c.kind == VlcChoice::Kind::NoEntry) return raise(ErrorKind::InvalidPrefix, true);
          if (c.kind == VlcChoice::Kind::Take) {
            chosen_ = c.entry;
            cur_.seek(start);
            std::uint32_t bits = 0;
            if (!cur_.try_read_bits(chosen_.code.length, bits)) return raise(ErrorKind::EndOfStream, true);
            e = &chosen_;
            return zero_check();
          }
        }
        undetermined = {role, cur_.position(), ctx_->picture, slice_, col_, block_};
        stop_ = Stop::Undetermined;
        return false;
    }
    return false;
  }

  void reset_dc() { dc_pred_ = {0, 0, 0}; }
  void reset_mv() { mv_pred_ = {0, 0, 0, 0}; }

  unsigned component_of(unsigned block) const {
    if (block < 4) return 0;
    return 1 + ((block - 4) & 1u);
  }

  bool motion(unsigned i, MotionComponent& m) {
    const VlcEntry* e = nullptr;
    if (!vlc(TableRole::B10, e)) return false;
    m.code = static_cast<std::uint8_t>(e->symbol.value);
    m.negative = false;
    m.residual = 0;
    if (m.code != 0) {
      std::uint32_t v = 0;
      if (!fixed(1, v)) return false;
      m.negative = v != 0;
      if (ctx_->f_code > 1) {
        if (!fixed(ctx_->f_code - 1, v)) return false;
        m.residual = static_cast<std::uint16_t>(v);
      }
    }
    int vec = mv_pred_[i] + motion_delta(m, ctx_->f_code);
    mv_pred_[i] = vec;
    bool ok = std::abs(vec) < motion_range(ctx_->f_code);
    int origin = (i & 1u) == 0 ? col_ * 16 : static_cast<int>(row_) * 16;
    int limit = (i & 1u) == 0 ? ctx_->width - 16 : ctx_->height - 16;
    ok = ok && origin + vec >= 0 && origin + vec <= limit;
    if (!ok) return raise(ErrorKind::MotionVectorOutOfRange, false);
    return true;
  }

  bool block(unsigned index, bool intra, bool dc_only, MiniBlock* out) {
    block_ = static_cast<int>(index);
    const VlcEntry* e = nullptr;
    if (out) {
      out->is_intra = intra;
      out->ac.clear();
      out->terminated_by_eob = true;
    }
    if (intra) {
      if (!vlc(dc_role(index), e)) return false;
      unsigned size = static_cast<unsigned>(e->symbol.value);
      std::uint32_t bits = 0;
      if (size && !fixed(size, bits)) return false;
      if (out) {
        out->dc_size = static_cast<std::uint8_t>(size);
        out->dc_bits = static_cast<std::uint16_t>(bits);
      }
      int& pred = dc_pred_[component_of(index)];
      pred += dc_differential(size, bits);
      if (pred < kMinCoefficient || pred > kMaxCoefficient) {
        if (!raise(ErrorKind::CoefficientOutOfRange, false)) return false;
      }
    }
    if (dc_only) return true;
    TableRole role = ac_role(intra, ctx_->ivf);
    unsigned pos = intra ? 1 : 0;
    for (;;) {
      if (!vlc(role, e)) return false;
      if (e->symbol.kind == SymbolKind::Eob) return true;
      if (pos >= 64) return raise(ErrorKind::MissingEOB, true);
      Coefficient c;
      if (e->symbol.kind == SymbolKind::Escape) {
        std::uint32_t run = 0, lv = 0;
        if (!fixed(6, run) || !fixed(12, lv)) return false;
        c.run = static_cast<std::uint8_t>(run);
        c.level = static_cast<std::int16_t>(lv >= 2048 ? static_cast<int>(lv) - 4096 : static_cast<int>(lv));
        if (c.level == 0 && !raise(ErrorKind::CoefficientOutOfRange, false)) return false;
      } else {
        std::uint32_t sign = 0;
        if (!fixed(1, sign)) return false;
        c.run = e->symbol.run;
        c.level = static_cast<std::int16_t>(sign ? -e->symbol.value : e->symbol.value);
      }
      pos += c.run;
      if (pos > 63) return raise(ErrorKind::CoefficientOverflow, true);
      ++pos;
      if (out) out->ac.push_back(c);
    }
  }

  bool macroblock() {
    MiniMacroblock local;
    MiniMacroblock* mb = out_ ? &local : nullptr;
    const PictureCtx& ctx = *ctx_;
    // address increment: k zeros then a one
    unsigned k = 0;
    for (;;) {
      unsigned b = 0;
      if (!cur_.try_read_bit(b)) return raise(ErrorKind::EndOfStream, true);
      if (b) break;
      if (++k >= kMaxAddressIncrement) return raise(ErrorKind::InvalidPrefix, true);
    }
    if (!zero_check()) return false;
    col_ += static_cast<int>(k) + 1;
    if (col_ >= static_cast<int>(ctx.mb_w)) return raise(ErrorKind::MacroblockCountExceeded, true);
    // macroblocks jumped over by the increment
    if (status)
      for (int c = col_ - static_cast<int>(k); c < col_; ++c)
        if (c >= 0) (*status)[row_ * ctx.mb_w + static_cast<unsigned>(c)] = MbStatus::Skipped;
    std::uint32_t mode_bits = 0;
    if (!fixed(2, mode_bits)) return false;
    auto mode = static_cast<MbMode>(mode_bits);
    bool legal = ctx.type == PictureType::D ? mode == MbMode::D
                 : ctx.type == PictureType::I ? mode == MbMode::Intra
                                              : mode != MbMode::D;
    if (!legal) return raise(ErrorKind::InvalidPrefix, true);
    if (mb) {
      mb->address_increment = static_cast<std::uint8_t>(k + 1);
      mb->mode = mode;
    }
    MbStatus st = MbStatus::Decoded;
    switch (mode) {
      case MbMode::Skipped:
        reset_dc();
        reset_mv();
        st = MbStatus::Skipped;
        break;
      case MbMode::Intra: {
        if (ctx.cmv) {
          for (unsigned i = 0; i < 2; ++i) {
            MotionComponent m;
            if (!motion(i, m)) return false;
            if (mb) mb->motion.push_back(m);
          }
          std::uint32_t marker = 0;
          if (!fixed(1, marker)) return false;
          if (!marker && !raise(ErrorKind::MarkerBitZero, false)) return false;
          mv_pred_[2] = mv_pred_[3] = 0;
        } else {
          reset_mv();
        }
        if (mb) mb->blocks.resize(ctx.blocks);
        for (unsigned b = 0; b < ctx.blocks; ++b)
          if (!block(b, true, false, mb ? &mb->blocks[b] : nullptr)) return false;
        break;
      }
      case MbMode::Inter: {
        reset_dc();
        unsigned n = ctx.type == PictureType::B ? 4 : 2;
        for (unsigned i = 0; i < n; ++i) {
          MotionComponent m;
          if (!motion(i, m)) return false;
          if (mb) mb->motion.push_back(m);
        }
        std::uint32_t cbp = 0;
        if (!fixed(ctx.blocks, cbp)) return false;
        if (mb) mb->cbp = static_cast<std::uint16_t>(cbp);
        for (unsigned b = 0; b < ctx.blocks; ++b) {
          if (!((cbp >> (ctx.blocks - 1 - b)) & 1u)) continue;
          MiniBlock* blk = nullptr;
          if (mb) blk = &mb->blocks.emplace_back();
          if (!block(b, false, false, blk)) return false;
        }
        break;
      }
      case MbMode::D: {
        reset_mv();
        if (mb) mb->blocks.resize(ctx.blocks);
        for (unsigned b = 0; b < ctx.blocks; ++b)
          if (!block(b, true, true, mb ? &mb->blocks[b] : nullptr)) return false;
        block_ = -1;
        std::uint32_t marker = 0;
        if (!fixed(1, marker)) return false;
        if (!marker && !raise(ErrorKind::MarkerBitZero, false)) return false;
        break;
      }
    }
    if (out_) out_->mbs.push_back(std::move(local));
    if (status) (*status)[row_ * ctx.mb_w + static_cast<unsigned>(col_)] = st;
    return true;
  }

  BitCursor& cur_;
  const DecoderSet& t_;
  const CheckSet& ck_;
  const PictureCtx* ctx_ = nullptr;
  MiniSlice* out_ = nullptr;
  int slice_ = 0;
  unsigned row_ = 0;
  int col_ = -1;
  int block_ = -1;
  Stop stop_ = Stop::Clean;
  std::array<int, 3> dc_pred_{};
  std::array<int, 4> mv_pred_{};
  VlcEntry chosen_;
};

void seek_next_start_code(BitCursor& cur) {
  if (next_start_code(cur)) cur.seek(cur.position() - kStartCodeBits);
}

bool valid_header(std::uint32_t w, std::uint32_t h, std::uint32_t c) {
  return w && h && w % 16 == 0 && h % 16 == 0 && c >= 1 && c <= 3 && h / 16 <= kMaxSliceCode;
}

}  // namespace

DecodeResult decode(const BitString& stream, const TableSet& tables, const CheckSet& checks) {
  OwnedDecoders d = OwnedDecoders::full(tables);
  return decode(stream, d.view(), checks, DecodeMode::Strict);
}

DecodeResult decode(const BitString& stream, const DecoderSet& tables, const CheckSet& checks, DecodeMode mode) {
  DecodeResult r;
  if (stream.empty()) return r;
  BitCursor cur(stream);
  auto fail = [&](ErrorKind k, int pic, int slice) {
    r.error = SyntaxError{k, cur.position(), pic, slice, -1, -1};
  };
  auto header_fail = [&](ErrorKind k, int pic, int slice) {
    // headers are not subject to the check toggles apart from EndOfStream
    if (k == ErrorKind::EndOfStream && !checks.on(k)) return;
    fail(k, pic, slice);
  };

  if (!cur.at_start_code()) {
    header_fail(cur.remaining() < kStartCodeBits ? ErrorKind::EndOfStream : ErrorKind::SliceSkipped, -1, -1);
    return r;
  }
  cur.read_bits(kStartCodeBits - 8);
  std::uint32_t w = 0, h = 0, c = 0;
  if (cur.read_bits(8) != kSeqCode) {
    header_fail(ErrorKind::SliceSkipped, -1, -1);
    return r;
  }
  if (!cur.try_read_bits(12, w) || !cur.try_read_bits(12, h) || !cur.try_read_bits(2, c)) {
    header_fail(ErrorKind::EndOfStream, -1, -1);
    return r;
  }
  if (!valid_header(w, h, c)) {
    header_fail(ErrorKind::SliceSkipped, -1, -1);
    return r;
  }
  MiniSequence& seq = r.sequence;
  seq.width = static_cast<std::uint16_t>(w);
  seq.height = static_cast<std::uint16_t>(h);
  seq.chroma = static_cast<ChromaFormat>(c);

  PictureCtx ctx;
  ctx.mb_w = seq.mb_width();
  ctx.mb_h = seq.mb_height();
  ctx.blocks = seq.blocks();
  ctx.width = seq.width;
  ctx.height = seq.height;

  SliceParser parser(cur, tables, checks);
  int pic = -1;
  unsigned next_row = 0;
  int slice_index = 0;
  for (;;) {
    if (cur.remaining() == 0) {
      header_fail(ErrorKind::EndOfStream, pic, -1);
      return r;
    }
    if (!cur.at_start_code()) {
      if (!checks.on(ErrorKind::SliceSkipped)) {
        seek_next_start_code(cur);
        continue;
      }
      fail(ErrorKind::SliceSkipped, pic, -1);
      return r;
    }
    std::size_t code_at = cur.position();
    cur.read_bits(kStartCodeBits - 8);
    std::uint8_t id = static_cast<std::uint8_t>(cur.read_bits(8));
    bool rows_missing = pic >= 0 && next_row < ctx.mb_h;
    if (id == kEndCode) {
      if (rows_missing && checks.on(ErrorKind::SliceSkipped)) {
        cur.seek(code_at);
        fail(ErrorKind::SliceSkipped, pic, -1);
      }
      return r;
    }
    if (id == kPictureCode) {
      if (rows_missing && checks.on(ErrorKind::SliceSkipped)) {
        cur.seek(code_at);
        fail(ErrorKind::SliceSkipped, pic, -1);
        return r;
      }
      std::uint32_t type = 0, ivf = 0, cmv = 0, fc = 0;
      if (!cur.try_read_bits(3, type) || !cur.try_read_bits(1, ivf) || !cur.try_read_bits(1, cmv) ||
          !cur.try_read_bits(4, fc)) {
        header_fail(ErrorKind::EndOfStream, pic + 1, -1);
        return r;
      }
      if (type < 1 || type > 4 || fc < 1 || fc > 9) {
        header_fail(ErrorKind::SliceSkipped, pic + 1, -1);
        return r;
      }
      ++pic;
      MiniPicture& mp = seq.pictures.emplace_back();
      mp.type = static_cast<PictureType>(type);
      mp.intra_vlc_format = ivf != 0;
      mp.concealment_motion_vectors = cmv != 0;
      mp.f_code = static_cast<std::uint8_t>(fc);
      r.mb_status.emplace_back(static_cast<std::size_t>(ctx.mb_w) * ctx.mb_h, MbStatus::NotReached);
      ctx.type = mp.type;
      ctx.ivf = mp.intra_vlc_format;
      ctx.cmv = mp.concealment_motion_vectors;
      ctx.f_code = fc;
      ctx.picture = pic;
      next_row = 0;
      slice_index = 0;
      continue;
    }
    if (id >= 1 && id <= kMaxSliceCode && pic >= 0) {
      unsigned row = id - 1u;
      if (row >= ctx.mb_h) {
        if (checks.on(ErrorKind::MacroblockCountExceeded)) {
          cur.seek(code_at);
          fail(ErrorKind::MacroblockCountExceeded, pic, slice_index);
          return r;
        }
        seek_next_start_code(cur);
        continue;
      }
      if (row != next_row && checks.on(ErrorKind::SliceSkipped)) {
        cur.seek(code_at);
        fail(ErrorKind::SliceSkipped, pic, slice_index);
        return r;
      }
      next_row = row + 1;
      MiniSlice& sl = seq.pictures.back().slices.emplace_back();
      sl.row = static_cast<std::uint8_t>(row);
      parser.status = &r.mb_status.back();
      Stop st = parser.run(ctx, slice_index, row, &sl);
      ++slice_index;
      switch (st) {
        case Stop::Clean: break;
        case Stop::Error: r.error = parser.error; return r;
        case Stop::Undetermined:
          if (mode == DecodeMode::Strict) {
            r.undetermined = parser.undetermined;
            return r;
          }
          if (!r.undetermined) r.undetermined = parser.undetermined;
          seek_next_start_code(cur);
          break;
        case Stop::Abandoned: seek_next_start_code(cur); break;
      }
      continue;
    }
    // unexpected start code id
    if (checks.on(ErrorKind::SliceSkipped)) {
      cur.seek(code_at);
      fail(ErrorKind::SliceSkipped, pic, -1);
      return r;
    }
    seek_next_start_code(cur);
  }
}

PartialTable PartialTable::from_table(const HuffmanTable& t) {
  PartialTable p;
  p.role = t.role();
  p.known = t.entries();
  return p;
}

std::optional<HuffmanTable> PartialTable::to_table() const {
  if (!complete()) return std::nullopt;
  return HuffmanTable(role, known);
}

DecodeResult decode_partial(const BitString& stream, const PartialTableSet& tables, const CheckSet& checks) {
  std::array<TableDecoder, kRoleCount> d;
  for (std::size_t i = 0; i < kRoleCount; ++i) {
    const PartialTable& p = tables[i];
    if (p.complete()) {
      d[i] = TableDecoder::full(HuffmanTable(p.role, p.known));
    } else if (p.known.empty()) {
      d[i] = TableDecoder::unknown(p.role);
    } else {
      d[i] = TableDecoder::partial(p.role, p.known);
    }
  }
  DecoderSet view{};
  for (std::size_t i = 0; i < kRoleCount; ++i) view[i] = &d[i];
  return decode(stream, view, checks, DecodeMode::Strict);
}

// ---------------------------------------------------------------------------
// Stream index and slice decoding
// ---------------------------------------------------------------------------

StreamIndex StreamIndex::build(const BitString& stream) {
  StreamIndex ix;
  std::vector<StartCodePos> codes = scan_start_codes(stream);
  if (codes.empty() || codes.front().id != kSeqCode || codes.front().offset != 0)
    throw Error(Errc::ParseError, "stream does not begin with a sequence header");
  BitCursor cur(stream, kStartCodeBits);
  std::uint32_t w = 0, h = 0, c = 0;
  if (!cur.try_read_bits(12, w) || !cur.try_read_bits(12, h) || !cur.try_read_bits(2, c) || !valid_header(w, h, c))
    throw Error(Errc::ParseError, "bad sequence header");
  ix.width = static_cast<std::uint16_t>(w);
  ix.height = static_cast<std::uint16_t>(h);
  ix.chroma = static_cast<ChromaFormat>(c);

  SliceInfo pic;
  int picture = -1;
  int slice = 0;
  for (std::size_t i = 1; i < codes.size(); ++i) {
    const StartCodePos& sc = codes[i];
    std::size_t body = sc.offset + kStartCodeBits;
    if (sc.id == kPictureCode) {
      BitCursor pc(stream, body);
      std::uint32_t type = 0, ivf = 0, cmv = 0, fc = 0;
      if (!pc.try_read_bits(3, type) || !pc.try_read_bits(1, ivf) || !pc.try_read_bits(1, cmv) ||
          !pc.try_read_bits(4, fc) || type < 1 || type > 4 || fc < 1 || fc > 9)
        throw Error(Errc::ParseError, "bad picture header");
      ++picture;
      slice = 0;
      pic.picture = picture;
      pic.type = static_cast<PictureType>(type);
      pic.intra_vlc_format = ivf != 0;
      pic.concealment_motion_vectors = cmv != 0;
      pic.f_code = static_cast<std::uint8_t>(fc);
      ix.picture_types.push_back(pic.type);
      ix.picture_intra_vlc.push_back(pic.intra_vlc_format);
    } else if (sc.id >= 1 && sc.id <= kMaxSliceCode && picture >= 0) {
      SliceInfo s = pic;
      s.slice = slice++;
      s.row = sc.id - 1u;
      s.begin = body;
      s.end = i + 1 < codes.size() ? codes[i + 1].offset : stream.size();
      ix.slices.push_back(s);
    }
  }
  ix.pictures = static_cast<std::size_t>(picture + 1);
  return ix;
}

SliceResult decode_slice(const BitString& stream, const StreamIndex& index, const SliceInfo& info,
                         const DecoderSet& tables, const CheckSet& checks, MiniSlice* out, VlcChooser* chooser) {
  PictureCtx ctx;
  ctx.mb_w = index.mb_width();
  ctx.mb_h = index.mb_height();
  ctx.blocks = blocks_per_mb(index.chroma);
  ctx.width = index.width;
  ctx.height = index.height;
  ctx.type = info.type;
  ctx.ivf = info.intra_vlc_format;
  ctx.cmv = info.concealment_motion_vectors;
  ctx.f_code = info.f_code;
  ctx.picture = info.picture;
  BitCursor cur(stream, info.begin);
  SliceParser parser(cur, tables, checks);
  parser.chooser = chooser;
  if (out) out->row = static_cast<std::uint8_t>(info.row);
  Stop st = parser.run(ctx, info.slice, info.row, out);
  SliceResult r;
  r.mbs = parser.mbs;
  switch (st) {
    case Stop::Clean:
      if (cur.position() != info.end) {
        r.outcome = SliceOutcome::Error;
        r.error = {ErrorKind::SliceSkipped, cur.position(), info.picture, info.slice, -1, -1};
      }
      break;
    case Stop::Error:
      r.outcome = SliceOutcome::Error;
      r.error = parser.error;
      break;
    case Stop::Undetermined:
      r.outcome = SliceOutcome::Undetermined;
      r.undetermined = parser.undetermined;
      break;
    case Stop::Abandoned: break;  // disabled checks: nothing more can be said
  }
  return r;
}

}  // namespace vlcbreak
