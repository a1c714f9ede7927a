#include "vlcbreak/vlc.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace vlcbreak {

namespace {

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(Errc::ParseError, "bad integer '" + std::string(s) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Level-1 entries with runs 0..5 come first: they form the keyed group of
// the coefficient tables, and distinct runs keep a shuffle visible to the
// coefficient-count checks.
constexpr std::array<Symbol, kDefaultRunLevelCount> kRunLevels = {
    Symbol::run_level(0, 1), Symbol::run_level(1, 1), Symbol::run_level(2, 1), Symbol::run_level(3, 1),
    Symbol::run_level(4, 1), Symbol::run_level(5, 1), Symbol::run_level(0, 2), Symbol::run_level(0, 3),
    Symbol::run_level(1, 2), Symbol::run_level(6, 1), Symbol::run_level(7, 1), Symbol::run_level(0, 4),
    Symbol::run_level(2, 2), Symbol::run_level(8, 1), Symbol::run_level(9, 1), Symbol::run_level(0, 5),
};

// Motion-code magnitudes 0..16 with the standard's codewords; the sign
// bit is a suffix on every nonzero code.
constexpr std::array<const char*, 17> kB10Codes = {
    "1",         "01",        "001",       "0001",      "000011",    "0000101",
    "0000100",   "0000011",   "000001011", "000001010", "000001001", "000001000",
    "0000001111", "0000001110", "0000001101", "0000001100", "0000001011",
};

constexpr std::array<const char*, 12> kB12Codes = {
    "100", "00", "01", "101", "110", "1110", "11110", "111110", "1111110", "11111110", "111111110", "111111111",
};

constexpr std::array<const char*, 12> kB13Codes = {
    "00",       "01",        "10",         "110",        "1110",       "11110",
    "111110",   "1111110",   "11111110",   "111111110",  "1111111110", "1111111111",
};

// Non-intra coefficient codewords for the run-level list above.
constexpr std::array<const char*, kDefaultRunLevelCount> kB14Codes = {
    "11",     "011",    "0101",   "00111",   "00110",   "000111",  "0100",    "00101",
    "000110", "000101", "000100", "0000110", "0000100", "0000111", "0000101", "00100110",
};

// B15: four codewords are fixed, the rest come from canonical_fill.
constexpr std::array<unsigned, kDefaultRunLevelCount - 2> kB15FillLengths = {3, 4, 4, 5, 5, 5, 5,
                                                                            6, 6, 6, 7, 7, 7, 7};

HuffmanTable make_b14(std::size_t run_levels) {
  std::vector<VlcEntry> e;
  for (std::size_t i = 0; i < run_levels; ++i)
    e.push_back({Codeword::from_text(kB14Codes[i]), kRunLevels[i], true});
  e.push_back({Codeword::from_text("10"), Symbol::eob(), false});
  e.push_back({Codeword::from_text("000001"), Symbol::escape(), false});
  return HuffmanTable(TableRole::B14, std::move(e));
}

HuffmanTable make_b15(std::size_t run_levels) {
  std::vector<VlcEntry> pinned = {
      {Codeword::from_text("10"), kRunLevels[0], true},
      {Codeword::from_text("010"), kRunLevels[1], true},
      {Codeword::from_text("0110"), Symbol::eob(), false},
      {Codeword::from_text("000001"), Symbol::escape(), false},
  };
  std::vector<std::pair<Symbol, unsigned>> rest;
  for (std::size_t i = 2; i < run_levels; ++i) rest.emplace_back(kRunLevels[i], kB15FillLengths[i - 2]);
  canonical_fill(pinned, rest, true);
  // canonical order: run-levels first, then EOB and ESC
  std::vector<VlcEntry> e;
  e.push_back(pinned[0]);
  e.push_back(pinned[1]);
  for (std::size_t i = 4; i < pinned.size(); ++i) e.push_back(pinned[i]);
  e.push_back(pinned[2]);
  e.push_back(pinned[3]);
  return HuffmanTable(TableRole::B15, std::move(e));
}

}  // namespace

const char* role_name(TableRole r) {
  switch (r) {
    case TableRole::B10: return "B10";
    case TableRole::B12: return "B12";
    case TableRole::B13: return "B13";
    case TableRole::B14: return "B14";
    case TableRole::B15: return "B15";
  }
  return "?";
}

TableRole parse_role(std::string_view name) {
  for (TableRole r : kAllRoles)
    if (name == role_name(r)) return r;
  if (name.size() == 4 && name[0] == 'B' && name[1] == '-') {
    std::string compact = "B" + std::string(name.substr(2));
    return parse_role(compact);
  }
  throw Error(Errc::ParseError, "unknown table role '" + std::string(name) + "'");
}

std::string to_string(const Symbol& s) {
  switch (s.kind) {
    case SymbolKind::MotionCode: return "mc:" + std::to_string(s.value);
    case SymbolKind::DcSize: return "sz:" + std::to_string(s.value);
    case SymbolKind::RunLevel: return "rl:" + std::to_string(s.run) + "," + std::to_string(s.value);
    case SymbolKind::Eob: return "EOB";
    case SymbolKind::Escape: return "ESC";
  }
  return "?";
}

Symbol parse_symbol(std::string_view text) {
  text = trim(text);
  if (text == "EOB") return Symbol::eob();
  if (text == "ESC") return Symbol::escape();
  if (text.starts_with("mc:")) return Symbol::motion_code(parse_int(text.substr(3)));
  if (text.starts_with("sz:")) return Symbol::dc_size(parse_int(text.substr(3)));
  if (text.starts_with("rl:")) {
    auto body = text.substr(3);
    auto comma = body.find(',');
    if (comma == std::string_view::npos) throw Error(Errc::ParseError, "bad run-level '" + std::string(text) + "'");
    return Symbol::run_level(parse_int(body.substr(0, comma)), parse_int(body.substr(comma + 1)));
  }
  throw Error(Errc::ParseError, "bad symbol '" + std::string(text) + "'");
}

Codeword Codeword::from_text(std::string_view text) {
  Codeword c;
  for (char ch : text) {
    if (ch == ' ') continue;
    if (ch != '0' && ch != '1') throw Error(Errc::ParseError, "bad codeword '" + std::string(text) + "'");
    if (c.length >= 32) throw Error(Errc::ValueTooWide, "codeword too long");
    c.bits = (c.bits << 1) | static_cast<std::uint32_t>(ch == '1');
    ++c.length;
  }
  return c;
}

std::string Codeword::to_text() const {
  std::string s;
  for (unsigned i = 0; i < length; ++i) s.push_back(bit(i) ? '1' : '0');
  return s;
}

bool is_prefix_free(std::span<const Codeword> codes) {
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].length == 0) return false;
    for (std::size_t j = i + 1; j < codes.size(); ++j)
      if (codes[i].conflicts(codes[j])) return false;
  }
  return true;
}

bool is_prefix_free(std::span<const VlcEntry> entries) {
  std::vector<Codeword> codes;
  codes.reserve(entries.size());
  for (const auto& e : entries) codes.push_back(e.code);
  return is_prefix_free(codes);
}

HuffmanTable::HuffmanTable(TableRole role, std::vector<VlcEntry> entries)
    : role_(role), entries_(std::move(entries)) {}

std::optional<std::size_t> HuffmanTable::index_of(const Symbol& s) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].symbol == s) return i;
  return std::nullopt;
}

const VlcEntry* HuffmanTable::find(const Symbol& s) const {
  for (const auto& e : entries_)
    if (e.symbol == s) return &e;
  return nullptr;
}

const Codeword& HuffmanTable::codeword(const Symbol& s) const {
  const VlcEntry* e = find(s);
  if (!e) throw Error(Errc::UnknownSymbol, to_string(s) + " not in " + role_name(role_));
  return e->code;
}

std::size_t HuffmanTable::max_length() const {
  std::size_t m = 0;
  for (const auto& e : entries_) m = std::max<std::size_t>(m, e.code.length);
  return m;
}

std::span<const Symbol> run_level_symbols() { return kRunLevels; }

void canonical_fill(std::vector<VlcEntry>& entries, std::span<const std::pair<Symbol, unsigned>> lengths,
                    bool sign_suffix) {
  for (const auto& [symbol, length] : lengths) {
    bool placed = false;
    for (std::uint32_t v = 0; v < (1u << length) && !placed; ++v) {
      Codeword c{v, static_cast<std::uint8_t>(length)};
      if (length >= 4 && (v >> (length - 4)) == 0) continue;
      bool free = std::none_of(entries.begin(), entries.end(),
                               [&](const VlcEntry& e) { return e.code.conflicts(c); });
      if (free) {
        entries.push_back({c, symbol, sign_suffix});
        placed = true;
      }
    }
    if (!placed) throw Error(Errc::BadParams, "no free codeword of length " + std::to_string(length));
  }
}

HuffmanTable default_table(TableRole role, std::size_t run_levels) {
  std::vector<VlcEntry> e;
  switch (role) {
    case TableRole::B10:
      for (int i = 0; i < 17; ++i) e.push_back({Codeword::from_text(kB10Codes[i]), Symbol::motion_code(i), i != 0});
      return HuffmanTable(role, std::move(e));
    case TableRole::B12:
      for (int i = 0; i < 12; ++i) e.push_back({Codeword::from_text(kB12Codes[i]), Symbol::dc_size(i), false});
      return HuffmanTable(role, std::move(e));
    case TableRole::B13:
      for (int i = 0; i < 12; ++i) e.push_back({Codeword::from_text(kB13Codes[i]), Symbol::dc_size(i), false});
      return HuffmanTable(role, std::move(e));
    case TableRole::B14:
    case TableRole::B15:
      if (run_levels < 2 || run_levels > kDefaultRunLevelCount)
        throw Error(Errc::BadParams, "run-level count must be in [2, 16]");
      return role == TableRole::B14 ? make_b14(run_levels) : make_b15(run_levels);
  }
  throw Error(Errc::BadParams, "bad role");
}

std::vector<HuffmanTable> default_tables() {
  std::vector<HuffmanTable> t;
  for (TableRole r : kAllRoles) t.push_back(default_table(r));
  return t;
}

BitString encode_symbol(const HuffmanTable& table, const Symbol& s) {
  const Codeword& c = table.codeword(s);
  BitString out;
  out.write_bits(c.bits, c.length);
  return out;
}

Symbol decode_symbol(const HuffmanTable& table, BitCursor& cursor) {
  TableDecoder dec = TableDecoder::full(table);
  const VlcEntry* e = nullptr;
  switch (dec.decode(cursor, e)) {
    case VlcStatus::Ok: return e->symbol;
    case VlcStatus::EndOfStream: throw Error(Errc::EndOfStream, "stream ended inside a codeword");
    default: throw Error(Errc::ParseError, "InvalidPrefix");
  }
}

void TableDecoder::build(std::span<const VlcEntry> entries) {
  entries_.assign(entries.begin(), entries.end());
  nodes_.assign(1, {0, 0});
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Codeword& c = entries_[i].code;
    if (c.length == 0) throw Error(Errc::ParseError, "empty codeword");
    std::int32_t node = 0;
    for (unsigned b = 0; b + 1 < c.length; ++b) {
      auto& child = nodes_[static_cast<std::size_t>(node)][c.bit(b)];
      if (child < 0) throw Error(Errc::ParseError, "table is not prefix-free");
      if (child == 0) {
        child = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({0, 0});
      }
      node = nodes_[static_cast<std::size_t>(node)][c.bit(b)];
    }
    auto& leaf = nodes_[static_cast<std::size_t>(node)][c.bit(c.length - 1u)];
    if (leaf != 0) throw Error(Errc::ParseError, "table is not prefix-free");
    leaf = -static_cast<std::int32_t>(i + 1);
  }
}

TableDecoder TableDecoder::full(const HuffmanTable& table) {
  TableDecoder d;
  d.role_ = table.role();
  d.missing_ = VlcStatus::Invalid;
  d.build(table.entries());
  return d;
}

TableDecoder TableDecoder::partial(TableRole role, std::span<const VlcEntry> known) {
  TableDecoder d;
  d.role_ = role;
  d.missing_ = VlcStatus::Undetermined;
  d.build(known);
  return d;
}

TableDecoder TableDecoder::unknown(TableRole role) {
  TableDecoder d;
  d.role_ = role;
  d.missing_ = VlcStatus::Undetermined;
  return d;
}

std::string format_table(const HuffmanTable& table) {
  std::ostringstream os;
  os << "role " << role_name(table.role()) << "\n";
  for (const auto& e : table.entries()) os << e.code.to_text() << " " << to_string(e.symbol) << "\n";
  return os.str();
}

HuffmanTable parse_table(std::string_view text, std::optional<TableRole> role) {
  std::vector<VlcEntry> entries;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    auto space = line.find(' ');
    if (space == std::string_view::npos) throw Error(Errc::ParseError, "bad table line '" + std::string(line) + "'");
    std::string_view head = line.substr(0, space);
    std::string_view tail = trim(line.substr(space + 1));
    if (head == "role") {
      role = parse_role(tail);
      continue;
    }
    Symbol s = parse_symbol(tail);
    bool sign = s.kind == SymbolKind::RunLevel || (s.kind == SymbolKind::MotionCode && s.value != 0);
    entries.push_back({Codeword::from_text(head), s, sign});
  }
  if (!role) throw Error(Errc::ParseError, "table role not specified");
  if (!is_prefix_free(entries)) throw Error(Errc::ParseError, "table is not prefix-free");
  return HuffmanTable(*role, std::move(entries));
}

}  // namespace vlcbreak
