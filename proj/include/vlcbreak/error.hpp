#pragma once

#include <stdexcept>
#include <string>

namespace vlcbreak {

enum class Errc {
  EndOfStream,
  ValueTooWide,
  UnknownSymbol,
  KeyShapeMismatch,
  IndexOutOfRange,
  InvalidScenario,
  DomainError,
  Unencodable,
  BadParams,
  NotMpeg1Like,
  ExtractionFailed,
  InconsistentPair,
  ParseError,
  IoError,
};

const char* errc_name(Errc code);

// Contract violations surface as exceptions. Syntax errors found while
// decoding are data and never use this type.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace vlcbreak
