#ifndef JOINTDST_ERROR_H_
#define JOINTDST_ERROR_H_

#include <stdexcept>
#include <string>

namespace jointdst {

enum class ErrorKind {
  kParse,        // malformed input document
  kSchema,       // schema invariant violated
  kValidation,   // corpus fails dialogue validation
  kShape,        // parameter / feature shape mismatch
  kOutOfRange,   // span or index outside its container
  kEmptyHistory, // span decoding over zero tokens
  kVersion,      // unknown format_version
  kFingerprint,  // checkpoint schema does not match corpus schema
  kCorrupt,      // truncated or internally inconsistent file
  kNumerical,    // non-finite loss or gradient
  kConfig,       // bad configuration key or value
  kIo,           // file cannot be opened or written
};

const char* ErrorKindName(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace jointdst

#endif  // JOINTDST_ERROR_H_
