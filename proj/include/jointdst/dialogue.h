#ifndef JOINTDST_DIALOGUE_H_
#define JOINTDST_DIALOGUE_H_

#include <optional>
#include <string>
#include <vector>

#include "jointdst/schema.h"

namespace jointdst {

using TokenList = std::vector<std::string>;

struct SystemInform {
  int slot = 0;
  std::string value;

  bool operator==(const SystemInform&) const = default;
};

struct DialogueTurn {
  TokenList system_tokens;  // M_t, may be empty
  TokenList user_tokens;    // U_t
  std::vector<SystemInform> system_informs;

  bool operator==(const DialogueTurn&) const = default;
};

// Inclusive token offsets into the flattened history "M_1 U_1 ... M_t U_t".
struct TokenSpan {
  int start = 0;
  int end = 0;

  bool operator==(const TokenSpan&) const = default;
};

struct SlotLabel {
  CopyClass gold_class = CopyClass::kNone;
  Value gold_value;  // belief-state value after this turn
  std::optional<TokenSpan> gold_span;
  std::optional<int> gold_refer_target;

  bool operator==(const SlotLabel&) const = default;
};

struct TurnLabel {
  std::vector<SlotLabel> slots;  // one entry per schema slot

  bool operator==(const TurnLabel&) const = default;
};

// Dense slot -> value map; an unset slot holds Value::None().
class BeliefState {
 public:
  BeliefState() = default;
  explicit BeliefState(int num_slots) : values_(num_slots) {}

  int size() const { return static_cast<int>(values_.size()); }
  const Value& Get(int slot) const { return values_.at(slot); }
  void Set(int slot, Value value) { values_.at(slot) = std::move(value); }
  const std::vector<Value>& values() const { return values_; }

  bool operator==(const BeliefState&) const = default;

 private:
  std::vector<Value> values_;
};

struct Dialogue {
  std::string id;
  std::vector<DialogueTurn> turns;
  std::vector<TurnLabel> labels;

  bool operator==(const Dialogue&) const = default;
};

struct Corpus {
  SlotSchema schema;
  std::vector<Dialogue> dialogues;
};

// Tokens M_1 U_1 ... M_t U_t for 0-based `turn` = t - 1.
TokenList FlattenHistory(const Dialogue& dialogue, int turn);
// Offset of the first token of turn `turn` (its system utterance).
int TurnOffset(const Dialogue& dialogue, int turn);

// Gold belief state after each turn, read from the labels' gold_value fields.
std::vector<BeliefState> GoldStates(const Dialogue& dialogue, int num_slots);

struct Violation {
  int turn = -1;  // 1-based, -1 for dialogue-level problems
  int slot = -1;  // 0-based, -1 when not slot-specific
  std::string message;
};

// Empty result means the dialogue is well formed.
std::vector<Violation> ValidateDialogue(const Dialogue& dialogue,
                                        const SlotSchema& schema);
std::string FormatViolation(const std::string& dialogue_id, const Violation& v);

json DialogueToJson(const Dialogue& dialogue);
Dialogue DialogueFromJson(const json& doc);
// The corpus document embeds its schema so it is self-describing.
json CorpusToJson(const Corpus& corpus);
Corpus CorpusFromJson(const json& doc);
Corpus LoadCorpus(const std::string& path);
void SaveCorpus(const Corpus& corpus, const std::string& path);

}  // namespace jointdst

#endif  // JOINTDST_DIALOGUE_H_
