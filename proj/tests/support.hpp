#pragma once

// Shared helpers for the test programs.

#include <vector>

#include "vlcbreak/codec.hpp"

namespace testsupport {

using namespace vlcbreak;

// Writes a syntax trace out bit by bit; an encoder independent of the
// library's own.
inline BitString assemble(const std::vector<SyntaxElement>& trace, const TableSet& tables) {
  BitString out;
  for (const SyntaxElement& e : trace) {
    switch (e.kind) {
      case SyntaxElement::Kind::Fixed: out.write_bits(e.value, e.width); break;
      case SyntaxElement::Kind::StartCode:
        out.write_bits(0, 23);
        out.write_bits(1, 1);
        out.write_bits(e.value, 8);
        break;
      case SyntaxElement::Kind::Vlc: {
        for (const VlcEntry& v : tables[role_index(e.role)].entries())
          if (v.symbol == e.symbol) out.write_bits(v.code.bits, v.code.length);
        break;
      }
    }
  }
  return out;
}

inline SyntaxElement fixed_element(std::uint32_t value, std::uint8_t width) {
  SyntaxElement e;
  e.kind = SyntaxElement::Kind::Fixed;
  e.value = value;
  e.width = width;
  return e;
}

inline SyntaxElement vlc_element(TableRole role, Symbol s) {
  SyntaxElement e;
  e.kind = SyntaxElement::Kind::Vlc;
  e.role = role;
  e.symbol = s;
  return e;
}

// A single-row picture of intra MBs with DC size 0 everywhere.
inline MiniPicture flat_intra_picture(unsigned mbs, unsigned blocks, unsigned rows = 1) {
  MiniPicture pic;
  pic.type = PictureType::I;
  for (unsigned r = 0; r < rows; ++r) {
    MiniSlice sl;
    sl.row = static_cast<std::uint8_t>(r);
    for (unsigned m = 0; m < mbs; ++m) {
      MiniMacroblock mb;
      mb.mode = MbMode::Intra;
      mb.blocks.resize(blocks);
      for (MiniBlock& b : mb.blocks) b.is_intra = true;
      sl.mbs.push_back(mb);
    }
    pic.slices.push_back(sl);
  }
  return pic;
}

inline MiniSequence flat_sequence(unsigned mb_w, unsigned mb_h) {
  MiniSequence s;
  s.width = static_cast<std::uint16_t>(16 * mb_w);
  s.height = static_cast<std::uint16_t>(16 * mb_h);
  s.pictures.push_back(flat_intra_picture(mb_w, s.blocks(), mb_h));
  return s;
}

}  // namespace testsupport
