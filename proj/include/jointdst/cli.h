#ifndef JOINTDST_CLI_H_
#define JOINTDST_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "jointdst/error.h"
#include "jointdst/model.h"
#include "jointdst/training.h"

namespace jointdst {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

int ExitCodeFor(ErrorKind kind);

// Overrides the configured output directory when set (the --out flag wins).
inline constexpr const char* kOutDirEnv = "JDST_OUT_DIR";

// Gradient check of one head on a seeded instance: a six slot, two domain
// schema (with a boolean slot), 16-dim features, LSTM hidden size 4,
// parameters drawn at random so that every block carries signal.
// `inject_fault` perturbs the analytic gradient of the first block as a
// negative control.
GradCheckReport RunHeadGradCheck(HeadKind head, std::uint64_t seed, bool inject_fault = false,
                                 bool lstm_prev_class = false);

// Entry point of the jointdst binary. Reports go to files under the output
// directory; summaries to `out`, errors to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jointdst

#endif  // JOINTDST_CLI_H_
