#include "jointdst/error.h"

namespace jointdst {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kShape: return "shape mismatch";
    case ErrorKind::kOutOfRange: return "out of range";
    case ErrorKind::kEmptyHistory: return "empty history";
    case ErrorKind::kVersion: return "version mismatch";
    case ErrorKind::kFingerprint: return "fingerprint mismatch";
    case ErrorKind::kCorrupt: return "corrupt file";
    case ErrorKind::kNumerical: return "numerical failure";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kIo: return "io error";
  }
  return "error";
}

}  // namespace jointdst
