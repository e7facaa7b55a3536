#pragma once

#include <stdexcept>
#include <string>

namespace drf {

// Error codes used across the library. Kept as a flat enum so CLI exit-code
// mapping and tests can switch on them without string matching.
enum class ErrorCode {
  ShapeMismatch,
  InvalidValue,
  NonFinite,
  MissingFile,
  ParseError,
  BadMagic,
  TruncatedFile,
  ScaleGuard,
  TapeError,
  VersionMismatch,
  CorruptPayload,
  DegenerateResponse,
  SpecError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace drf

#define DRF_CHECK(cond, code, msg)                                       \
  do {                                                                   \
    if (!(cond)) ::drf::fail(::drf::ErrorCode::code, (msg));             \
  } while (0)
