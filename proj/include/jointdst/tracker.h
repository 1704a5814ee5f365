#ifndef JOINTDST_TRACKER_H_
#define JOINTDST_TRACKER_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jointdst/dialogue.h"
#include "jointdst/schema.h"

namespace jointdst {

struct SlotPrediction {
  CopyClass cls = CopyClass::kNone;
  std::optional<TokenSpan> span;      // iff cls == kSpan
  std::optional<int> refer_target;    // iff cls == kRefer

  bool operator==(const SlotPrediction&) const = default;
};

using TurnPrediction = std::vector<SlotPrediction>;

// Values the system offered so far in the dialogue, latest wins.
using InformMemory = std::map<int, std::string>;

InformMemory UpdateInformMemory(InformMemory memory, const DialogueTurn& turn);

// tokens[start..=end] joined by single spaces. Throws Error(kOutOfRange).
std::string ExtractSpan(std::span<const std::string> history, TokenSpan span);

struct Diagnostic {
  int slot = 0;
  std::string message;
};

struct TurnResolution {
  BeliefState state;
  std::vector<Diagnostic> diagnostics;
};

// Resolves every slot of one turn from its copy source:
//   none      keeps prev
//   dontcare  DONTCARE
//   span      text of the span in `history` (flattened through this turn)
//   inform    memory[slot]
//   refer     prev[refer_target]
//   true/false  the boolean sentinels
// Inform with no remembered value, refer to an unset slot, or a malformed
// span keep prev and add a diagnostic.
TurnResolution ResolveTurn(const BeliefState& prev,
                           std::span<const std::string> history,
                           const TurnPrediction& predictions,
                           const InformMemory& memory);

// Gold labels re-expressed as predictions.
TurnPrediction PredictionFromLabel(const TurnLabel& label);

struct DialogueTrace {
  std::vector<BeliefState> states;  // after each turn
  std::vector<std::vector<Diagnostic>> diagnostics;
};

// Runs the tracker across a dialogue given one prediction per turn.
DialogueTrace TrackDialogue(const Dialogue& dialogue, int num_slots,
                            const std::vector<TurnPrediction>& predictions);

}  // namespace jointdst

#endif  // JOINTDST_TRACKER_H_
