#pragma once

#include <stdexcept>
#include <string>

namespace jelly {

// Error codes for conditions callers may want to distinguish programmatically,
// mostly around the on-disk formats.
enum class Errc {
  invalid_argument,
  shape_mismatch,
  degenerate_input,
  missing_file,
  parse_error,
  version_mismatch,
  offset_inconsistency,
  truncated_blob,
  trailing_bytes,
  unknown_dtype,
  duplicate_name,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::missing_file: return "missing_file";
    case Errc::parse_error: return "parse_error";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::offset_inconsistency: return "offset_inconsistency";
    case Errc::truncated_blob: return "truncated_blob";
    case Errc::trailing_bytes: return "trailing_bytes";
    case Errc::unknown_dtype: return "unknown_dtype";
    case Errc::duplicate_name: return "duplicate_name";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace jelly
