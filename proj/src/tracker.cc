#include "jointdst/tracker.h"

#include <utility>

#include "jointdst/error.h"

namespace jointdst {

InformMemory UpdateInformMemory(InformMemory memory, const DialogueTurn& turn) {
  for (const SystemInform& inform : turn.system_informs) {
    memory[inform.slot] = inform.value;
  }
  return memory;
}

std::string ExtractSpan(std::span<const std::string> history, TokenSpan span) {
  const int n = static_cast<int>(history.size());
  if (span.start < 0 || span.start > span.end || span.end >= n) {
    throw Error(ErrorKind::kOutOfRange,
                "span (" + std::to_string(span.start) + "," + std::to_string(span.end) +
                    ") outside history of " + std::to_string(n) + " tokens");
  }
  std::string out = history[span.start];
  for (int i = span.start + 1; i <= span.end; ++i) {
    out += ' ';
    out += history[i];
  }
  return out;
}

TurnResolution ResolveTurn(const BeliefState& prev,
                           std::span<const std::string> history,
                           const TurnPrediction& predictions,
                           const InformMemory& memory) {
  TurnResolution out{prev, {}};
  const int num_slots = prev.size();
  auto degrade = [&out](int slot, std::string message) {
    out.diagnostics.push_back(Diagnostic{slot, std::move(message)});
  };
  for (int s = 0; s < num_slots && s < static_cast<int>(predictions.size()); ++s) {
    const SlotPrediction& pred = predictions[s];
    switch (pred.cls) {
      case CopyClass::kNone:
        break;
      case CopyClass::kDontcare:
        out.state.Set(s, Value::Dontcare());
        break;
      case CopyClass::kTrue:
        out.state.Set(s, Value::True());
        break;
      case CopyClass::kFalse:
        out.state.Set(s, Value::False());
        break;
      case CopyClass::kSpan: {
        if (!pred.span) {
          degrade(s, "span class without a span");
          break;
        }
        const TokenSpan span = *pred.span;
        if (span.start < 0 || span.start > span.end ||
            span.end >= static_cast<int>(history.size())) {
          degrade(s, "span outside history");
          break;
        }
        out.state.Set(s, Value::Text(ExtractSpan(history, span)));
        break;
      }
      case CopyClass::kInform: {
        auto it = memory.find(s);
        if (it == memory.end()) {
          degrade(s, "inform with empty system inform memory");
          break;
        }
        out.state.Set(s, Value::Text(it->second));
        break;
      }
      case CopyClass::kRefer: {
        if (!pred.refer_target || *pred.refer_target < 0 ||
            *pred.refer_target >= num_slots || *pred.refer_target == s) {
          degrade(s, "refer without a valid target");
          break;
        }
        const Value& source = prev.Get(*pred.refer_target);
        if (source.is_none()) {
          degrade(s, "refer to slot " + std::to_string(*pred.refer_target) +
                         " which holds no value");
          break;
        }
        out.state.Set(s, source);
        break;
      }
    }
  }
  return out;
}

TurnPrediction PredictionFromLabel(const TurnLabel& label) {
  TurnPrediction pred;
  pred.reserve(label.slots.size());
  for (const SlotLabel& sl : label.slots) {
    pred.push_back(SlotPrediction{sl.gold_class, sl.gold_span, sl.gold_refer_target});
  }
  return pred;
}

DialogueTrace TrackDialogue(const Dialogue& dialogue, int num_slots,
                            const std::vector<TurnPrediction>& predictions) {
  DialogueTrace trace;
  BeliefState state(num_slots);
  InformMemory memory;
  TokenList history;
  for (std::size_t t = 0; t < dialogue.turns.size() && t < predictions.size(); ++t) {
    const DialogueTurn& turn = dialogue.turns[t];
    history.insert(history.end(), turn.system_tokens.begin(), turn.system_tokens.end());
    history.insert(history.end(), turn.user_tokens.begin(), turn.user_tokens.end());
    memory = UpdateInformMemory(std::move(memory), turn);
    TurnResolution resolved = ResolveTurn(state, history, predictions[t], memory);
    state = resolved.state;
    trace.states.push_back(std::move(resolved.state));
    trace.diagnostics.push_back(std::move(resolved.diagnostics));
  }
  return trace;
}

}  // namespace jointdst
