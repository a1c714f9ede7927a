#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vlcbreak/bitio.hpp"
#include "vlcbreak/cipher.hpp"
#include "vlcbreak/vlc.hpp"

namespace vlcbreak {

// ---------------------------------------------------------------------------
// Syntax tree of the mini profile
// ---------------------------------------------------------------------------

enum class ChromaFormat : std::uint8_t { k420 = 1, k422 = 2, k444 = 3 };
enum class PictureType : std::uint8_t { I = 1, P = 2, B = 3, D = 4 };
enum class MbMode : std::uint8_t { D = 0, Intra = 1, Inter = 2, Skipped = 3 };

constexpr unsigned chroma_pairs(ChromaFormat f) { return f == ChromaFormat::k420 ? 1 : f == ChromaFormat::k422 ? 2 : 4; }
constexpr unsigned blocks_per_mb(ChromaFormat f) { return 4 + 2 * chroma_pairs(f); }
char picture_type_char(PictureType t);

inline constexpr std::uint8_t kSeqCode = 0xB3;
inline constexpr std::uint8_t kPictureCode = 0x00;
inline constexpr std::uint8_t kEndCode = 0xB7;
inline constexpr std::uint8_t kMaxSliceCode = 0xAF;
inline constexpr unsigned kMaxAddressIncrement = 8;
inline constexpr int kMinCoefficient = -2048;
inline constexpr int kMaxCoefficient = 2047;

struct MotionComponent {
  std::uint8_t code = 0;  // motion_code magnitude, 0..16
  bool negative = false;
  std::uint16_t residual = 0;  // f_code - 1 bits, present when code != 0
  friend bool operator==(const MotionComponent&, const MotionComponent&) = default;
};

struct Coefficient {
  std::uint8_t run = 0;
  std::int16_t level = 0;  // signed, nonzero
  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

struct MiniBlock {
  bool is_intra = false;
  std::uint8_t dc_size = 0;    // intra only
  std::uint16_t dc_bits = 0;   // dc_size bits of dc differential
  std::vector<Coefficient> ac;
  bool terminated_by_eob = true;
  friend bool operator==(const MiniBlock&, const MiniBlock&) = default;
};

struct MiniMacroblock {
  std::uint8_t address_increment = 1;  // 1..8
  MbMode mode = MbMode::Inter;
  std::vector<MotionComponent> motion;
  std::uint16_t cbp = 0;  // one bit per block, block 0 is the MSB
  std::vector<MiniBlock> blocks;
  bool is_intra() const { return mode == MbMode::Intra || mode == MbMode::D; }
  bool skipped() const { return mode == MbMode::Skipped; }
  friend bool operator==(const MiniMacroblock&, const MiniMacroblock&) = default;
};

struct MiniSlice {
  std::uint8_t row = 0;
  std::vector<MiniMacroblock> mbs;
  friend bool operator==(const MiniSlice&, const MiniSlice&) = default;
};

struct MiniPicture {
  PictureType type = PictureType::I;
  bool intra_vlc_format = false;
  bool concealment_motion_vectors = false;
  std::uint8_t f_code = 1;  // 1..9, shared by all directions
  std::vector<MiniSlice> slices;
  friend bool operator==(const MiniPicture&, const MiniPicture&) = default;
};

struct MiniSequence {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  ChromaFormat chroma = ChromaFormat::k420;
  std::vector<MiniPicture> pictures;

  unsigned mb_width() const { return width / 16u; }
  unsigned mb_height() const { return height / 16u; }
  unsigned blocks() const { return blocks_per_mb(chroma); }
  friend bool operator==(const MiniSequence&, const MiniSequence&) = default;
};

/// Motion components carried by an MB: 2 per direction; intra MBs carry a
/// forward concealment vector when the picture enables it.
unsigned motion_components(PictureType type, MbMode mode, bool concealment);

/// Signed dc differential from its size class and raw bits, and back.
int dc_differential(unsigned size, unsigned bits);
std::pair<unsigned, unsigned> dc_code(int differential);

/// Signed motion delta from a component, and back (requires |delta| <= 16 << r).
int motion_delta(const MotionComponent& c, unsigned f_code);
MotionComponent motion_component(int delta, unsigned f_code);
/// Exclusive bound on reconstructed vector magnitude.
inline int motion_range(unsigned f_code) { return 16 << (f_code - 1); }

TableRole ac_role(bool intra, bool intra_vlc_format);
inline TableRole dc_role(unsigned block) { return block < 4 ? TableRole::B12 : TableRole::B13; }

/// Checks structural invariants (field widths, counts, mode/picture
/// compatibility). Throws Error(Unencodable) describing the first problem.
void validate_sequence(const MiniSequence& seq);

// ---------------------------------------------------------------------------
// Syntax errors and checks
// ---------------------------------------------------------------------------

enum class ErrorKind : std::uint8_t {
  InvalidPrefix,
  ZeroRunViolation,
  MarkerBitZero,
  CoefficientOutOfRange,
  MotionVectorOutOfRange,
  CoefficientOverflow,
  MissingEOB,
  MacroblockCountExceeded,
  SliceSkipped,
  EndOfStream,
};
inline constexpr std::size_t kErrorKindCount = 10;
const char* error_kind_name(ErrorKind k);
ErrorKind parse_error_kind(const std::string& name);

struct SyntaxError {
  ErrorKind kind = ErrorKind::EndOfStream;
  std::size_t bit_offset = 0;
  int picture = -1;
  int slice = -1;
  int mb = -1;      // column of the MB being parsed
  int block = -1;
  friend bool operator==(const SyntaxError&, const SyntaxError&) = default;
};
std::string describe(const SyntaxError& e);

struct CheckSet {
  std::bitset<kErrorKindCount> enabled;
  std::optional<double> plausibility_threshold;

  static CheckSet all() {
    CheckSet c;
    c.enabled.set();
    return c;
  }
  static CheckSet only(std::initializer_list<ErrorKind> kinds) {
    CheckSet c;
    for (ErrorKind k : kinds) c.enabled.set(static_cast<std::size_t>(k));
    return c;
  }
  bool on(ErrorKind k) const { return enabled.test(static_cast<std::size_t>(k)); }
};

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// One element of the transmitted syntax in the order it is written.
struct SyntaxElement {
  enum class Kind : std::uint8_t { Fixed, Vlc, StartCode };
  Kind kind = Kind::Fixed;
  std::uint32_t value = 0;  // fixed value or start-code id
  std::uint8_t width = 0;   // fixed width
  TableRole role = TableRole::B10;
  Symbol symbol;
  int picture = -1;
  int slice = -1;
};

using TableProvider = std::function<const TableSet&(std::size_t picture)>;

BitString encode(const MiniSequence& seq, const TableSet& tables);
BitString encode(const MiniSequence& seq, const TableProvider& tables);
/// Also returns the element trace (table-independent apart from codewords).
BitString encode_traced(const MiniSequence& seq, const TableProvider& tables, std::vector<SyntaxElement>& trace);
std::vector<SyntaxElement> syntax_trace(const MiniSequence& seq);
/// Elements of a single macroblock (no validation of the macroblock).
std::vector<SyntaxElement> macroblock_trace(const MiniMacroblock& mb, const MiniPicture& pic, ChromaFormat chroma);

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

/// Per-role decoders; a partial or unknown decoder reports Undetermined on
/// gaps instead of Invalid.
using DecoderSet = std::array<const TableDecoder*, kRoleCount>;

struct OwnedDecoders {
  std::array<TableDecoder, kRoleCount> decoders;
  DecoderSet view() const;
  static OwnedDecoders full(const TableSet& tables);
};

struct UndeterminedHit {
  TableRole role = TableRole::B10;
  std::size_t bit_offset = 0;
  int picture = -1;
  int slice = -1;
  int mb = -1;
  int block = -1;
};

enum class MbStatus : std::uint8_t { NotReached = 0, Decoded = 1, Failed = 2, Skipped = 3 };

struct DecodeResult {
  MiniSequence sequence;
  std::optional<SyntaxError> error;
  std::optional<UndeterminedHit> undetermined;
  /// Per picture, mb_width * mb_height statuses in raster order.
  std::vector<std::vector<MbStatus>> mb_status;
  bool ok() const { return !error && !undetermined; }
};

enum class DecodeMode : std::uint8_t {
  Strict,            // stop at the first undetermined codeword
  SkipUndetermined,  // abandon the slice and resume at the next start code
};

DecodeResult decode(const BitString& stream, const TableSet& tables, const CheckSet& checks = CheckSet::all());
DecodeResult decode(const BitString& stream, const DecoderSet& tables, const CheckSet& checks,
                    DecodeMode mode = DecodeMode::Strict);

/// Decoding where some entries are not known: succeeds only if the stream
/// never needs an undetermined entry.
struct PartialTable {
  TableRole role = TableRole::B10;
  std::vector<VlcEntry> known;
  std::vector<Symbol> undetermined;

  static PartialTable from_table(const HuffmanTable& t);
  bool complete() const { return undetermined.empty(); }
  std::optional<HuffmanTable> to_table() const;
};
using PartialTableSet = std::array<PartialTable, kRoleCount>;

DecodeResult decode_partial(const BitString& stream, const PartialTableSet& tables,
                            const CheckSet& checks = CheckSet::all());

// ---------------------------------------------------------------------------
// Slice-level access used by key search
// ---------------------------------------------------------------------------

struct SliceInfo {
  int picture = 0;
  int slice = 0;
  unsigned row = 0;
  PictureType type = PictureType::I;
  bool intra_vlc_format = false;
  bool concealment_motion_vectors = false;
  std::uint8_t f_code = 1;
  std::size_t begin = 0;  // first bit after the slice start code
  std::size_t end = 0;    // offset of the following start code
};

/// Headers and slice boundaries of a stream, read without any table.
struct StreamIndex {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  ChromaFormat chroma = ChromaFormat::k420;
  std::size_t pictures = 0;
  std::vector<PictureType> picture_types;
  std::vector<bool> picture_intra_vlc;
  std::vector<SliceInfo> slices;

  static StreamIndex build(const BitString& stream);
  unsigned mb_width() const { return width / 16u; }
  unsigned mb_height() const { return height / 16u; }
};

enum class SliceOutcome : std::uint8_t { Clean, Error, Undetermined };

struct SliceResult {
  SliceOutcome outcome = SliceOutcome::Clean;
  SyntaxError error;
  UndeterminedHit undetermined;
  std::size_t mbs = 0;
};

/// Decodes one slice body and checks that it ends exactly at info.end.
/// Supplies an entry when a partial decoder cannot resolve a codeword, so
/// a caller can explore the entries an unknown table might hold there.
struct VlcChoice {
  enum class Kind : std::uint8_t { Take, NoEntry, Decline };
  Kind kind = Kind::Decline;
  VlcEntry entry;
};

class VlcChooser {
 public:
  virtual ~VlcChooser() = default;
  /// Called with the bit offset where the unresolved codeword starts.
  virtual VlcChoice choose(TableRole role, const BitString& stream, std::size_t position) = 0;
};

SliceResult decode_slice(const BitString& stream, const StreamIndex& index, const SliceInfo& info,
                         const DecoderSet& tables, const CheckSet& checks, MiniSlice* out = nullptr,
                         VlcChooser* chooser = nullptr);

}  // namespace vlcbreak
