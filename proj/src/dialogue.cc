#include "jointdst/dialogue.h"

#include <algorithm>
#include <string>
#include <utility>

#include "jointdst/error.h"
#include "jointdst/io_util.h"

namespace jointdst {

namespace {

TokenList TokensFromJson(const json& doc, std::string_view what) {
  if (!doc.is_array()) {
    throw Error(ErrorKind::kParse, std::string(what) + " must be a token array");
  }
  TokenList tokens;
  tokens.reserve(doc.size());
  for (const json& token : doc) {
    if (!token.is_string()) {
      throw Error(ErrorKind::kParse, std::string(what) + " tokens must be strings");
    }
    tokens.push_back(token.get<std::string>());
  }
  return tokens;
}

std::string TurnWhere(int turn, int slot) {
  std::string where = "at turn " + std::to_string(turn);
  if (slot >= 0) where += ", slot " + std::to_string(slot);
  return where;
}

}  // namespace

TokenList FlattenHistory(const Dialogue& dialogue, int turn) {
  TokenList history;
  for (int t = 0; t <= turn && t < static_cast<int>(dialogue.turns.size()); ++t) {
    const DialogueTurn& dt = dialogue.turns[t];
    history.insert(history.end(), dt.system_tokens.begin(), dt.system_tokens.end());
    history.insert(history.end(), dt.user_tokens.begin(), dt.user_tokens.end());
  }
  return history;
}

int TurnOffset(const Dialogue& dialogue, int turn) {
  int offset = 0;
  for (int t = 0; t < turn && t < static_cast<int>(dialogue.turns.size()); ++t) {
    offset += static_cast<int>(dialogue.turns[t].system_tokens.size() +
                               dialogue.turns[t].user_tokens.size());
  }
  return offset;
}

std::vector<BeliefState> GoldStates(const Dialogue& dialogue, int num_slots) {
  std::vector<BeliefState> states;
  states.reserve(dialogue.labels.size());
  for (const TurnLabel& label : dialogue.labels) {
    BeliefState state(num_slots);
    for (int s = 0; s < num_slots && s < static_cast<int>(label.slots.size()); ++s) {
      state.Set(s, label.slots[s].gold_value);
    }
    states.push_back(std::move(state));
  }
  return states;
}

std::vector<Violation> ValidateDialogue(const Dialogue& dialogue,
                                        const SlotSchema& schema) {
  std::vector<Violation> out;
  auto add = [&out](int turn, int slot, std::string message) {
    out.push_back(Violation{turn, slot, std::move(message)});
  };
  if (dialogue.turns.empty()) add(-1, -1, "dialogue has no turns");
  if (dialogue.turns.size() != dialogue.labels.size()) {
    add(-1, -1, "turn count " + std::to_string(dialogue.turns.size()) +
                    " differs from label count " +
                    std::to_string(dialogue.labels.size()));
  }
  const int num_slots = schema.size();
  const int num_turns =
      static_cast<int>(std::min(dialogue.turns.size(), dialogue.labels.size()));
  int history_length = 0;
  for (int t = 0; t < num_turns; ++t) {
    const int turn_no = t + 1;
    const DialogueTurn& turn = dialogue.turns[t];
    history_length +=
        static_cast<int>(turn.system_tokens.size() + turn.user_tokens.size());
    for (const SystemInform& inform : turn.system_informs) {
      if (inform.slot < 0 || inform.slot >= num_slots) {
        add(turn_no, inform.slot, "system inform references unknown slot " +
                                      TurnWhere(turn_no, inform.slot));
      }
    }
    const TurnLabel& label = dialogue.labels[t];
    if (static_cast<int>(label.slots.size()) != num_slots) {
      add(turn_no, -1, "label has " + std::to_string(label.slots.size()) +
                           " slot entries, schema has " + std::to_string(num_slots) +
                           " " + TurnWhere(turn_no, -1));
      continue;
    }
    for (int s = 0; s < num_slots; ++s) {
      const SlotLabel& sl = label.slots[s];
      const SlotDef& def = schema.slot(s);
      const std::string where = TurnWhere(turn_no, s);
      if (!IsAdmissible(def.value_kind, sl.gold_class)) {
        add(turn_no, s, "class " + std::string(ToString(sl.gold_class)) +
                            " not admissible for " +
                            std::string(ToString(def.value_kind)) + " slot " + where);
      }
      const bool is_span = sl.gold_class == CopyClass::kSpan;
      if (is_span != sl.gold_span.has_value()) {
        add(turn_no, s,
            std::string(is_span ? "span class without span" : "span given for non-span class") +
                " " + where);
      }
      if (sl.gold_span) {
        const TokenSpan& span = *sl.gold_span;
        if (span.start > span.end) add(turn_no, s, "start > end " + where);
        if (span.start < 0 || span.end >= history_length) {
          add(turn_no, s, "span outside flattened history " + where);
        }
      }
      const bool is_refer = sl.gold_class == CopyClass::kRefer;
      if (is_refer != sl.gold_refer_target.has_value()) {
        add(turn_no, s,
            std::string(is_refer ? "refer class with no target" : "refer target for non-refer class") +
                " " + where);
      }
      if (sl.gold_refer_target) {
        const int target = *sl.gold_refer_target;
        if (target < 0 || target >= num_slots) {
          add(turn_no, s, "refer target out of range " + where);
        } else if (target == s) {
          add(turn_no, s, "slot refers to itself " + where);
        }
      }
    }
  }
  return out;
}

std::string FormatViolation(const std::string& dialogue_id, const Violation& v) {
  return dialogue_id + ": " + v.message;
}

json DialogueToJson(const Dialogue& dialogue) {
  json turns = json::array();
  for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
    const DialogueTurn& turn = dialogue.turns[t];
    json informs = json::array();
    for (const SystemInform& inform : turn.system_informs) {
      informs.push_back({{"slot", inform.slot}, {"value", inform.value}});
    }
    json labels = json::array();
    if (t < dialogue.labels.size()) {
      for (const SlotLabel& sl : dialogue.labels[t].slots) {
        json entry = {{"class", ToString(sl.gold_class)},
                      {"value", ValueToJson(sl.gold_value)}};
        if (sl.gold_span) entry["span"] = {sl.gold_span->start, sl.gold_span->end};
        if (sl.gold_refer_target) entry["refer"] = *sl.gold_refer_target;
        labels.push_back(std::move(entry));
      }
    }
    turns.push_back({{"system", turn.system_tokens},
                     {"user", turn.user_tokens},
                     {"informs", informs},
                     {"labels", labels}});
  }
  return {{"id", dialogue.id}, {"turns", turns}};
}

Dialogue DialogueFromJson(const json& doc) {
  CheckKeys(doc, {"id", "turns"}, "dialogue");
  Dialogue dialogue;
  dialogue.id = GetString(doc, "id", "dialogue");
  const json& turns = RequireField(doc, "turns", "dialogue");
  if (!turns.is_array()) throw Error(ErrorKind::kParse, "dialogue: 'turns' must be an array");
  for (const json& tj : turns) {
    CheckKeys(tj, {"system", "user", "informs", "labels"}, "turn");
    DialogueTurn turn;
    turn.system_tokens = TokensFromJson(RequireField(tj, "system", "turn"), "system");
    turn.user_tokens = TokensFromJson(RequireField(tj, "user", "turn"), "user");
    if (auto it = tj.find("informs"); it != tj.end()) {
      if (!it->is_array()) throw Error(ErrorKind::kParse, "turn: 'informs' must be an array");
      for (const json& ij : *it) {
        CheckKeys(ij, {"slot", "value"}, "inform");
        turn.system_informs.push_back(
            {static_cast<int>(GetInt(ij, "slot", "inform")), GetString(ij, "value", "inform")});
      }
    }
    TurnLabel label;
    const json& labels = RequireField(tj, "labels", "turn");
    if (!labels.is_array()) throw Error(ErrorKind::kParse, "turn: 'labels' must be an array");
    for (const json& lj : labels) {
      CheckKeys(lj, {"class", "value", "span", "refer"}, "label");
      SlotLabel sl;
      sl.gold_class = ParseCopyClass(GetString(lj, "class", "label"));
      sl.gold_value = ValueFromJson(RequireField(lj, "value", "label"));
      if (auto it = lj.find("span"); it != lj.end()) {
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() ||
            !(*it)[1].is_number_integer()) {
          throw Error(ErrorKind::kParse, "label: 'span' must be [start, end]");
        }
        sl.gold_span = TokenSpan{(*it)[0].get<int>(), (*it)[1].get<int>()};
      }
      if (auto it = lj.find("refer"); it != lj.end()) {
        if (!it->is_number_integer()) {
          throw Error(ErrorKind::kParse, "label: 'refer' must be a slot index");
        }
        sl.gold_refer_target = it->get<int>();
      }
      label.slots.push_back(std::move(sl));
    }
    dialogue.turns.push_back(std::move(turn));
    dialogue.labels.push_back(std::move(label));
  }
  return dialogue;
}

json CorpusToJson(const Corpus& corpus) {
  json dialogues = json::array();
  for (const Dialogue& d : corpus.dialogues) {
    dialogues.push_back(DialogueToJson(d));
  }
  return {{"format_version", kFormatVersion},
          {"schema", SchemaToJson(corpus.schema)},
          {"dialogues", dialogues}};
}

Corpus CorpusFromJson(const json& doc) {
  CheckFormatVersion(doc, "corpus");
  CheckKeys(doc, {"format_version", "schema", "dialogues"}, "corpus");
  Corpus corpus;
  corpus.schema = SchemaFromJson(RequireField(doc, "schema", "corpus"));
  const json& dialogues = RequireField(doc, "dialogues", "corpus");
  if (!dialogues.is_array()) {
    throw Error(ErrorKind::kParse, "corpus: 'dialogues' must be an array");
  }
  for (const json& dj : dialogues) {
    corpus.dialogues.push_back(DialogueFromJson(dj));
  }
  return corpus;
}

Corpus LoadCorpus(const std::string& path) {
  return CorpusFromJson(ReadJsonFile(path));
}

void SaveCorpus(const Corpus& corpus, const std::string& path) {
  // One dialogue per line keeps large corpora diffable.
  std::string text = "{\"format_version\":" + std::to_string(kFormatVersion) +
                     ",\n\"schema\":" + SchemaToJson(corpus.schema).dump() +
                     ",\n\"dialogues\":[";
  for (std::size_t i = 0; i < corpus.dialogues.size(); ++i) {
    text += i == 0 ? "\n" : ",\n";
    text += DialogueToJson(corpus.dialogues[i]).dump();
  }
  text += "\n]}\n";
  WriteTextFile(path, text);
}

}  // namespace jointdst
