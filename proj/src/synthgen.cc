#include "jointdst/synthgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "jointdst/error.h"
#include "jointdst/random.h"

namespace jointdst {

namespace {

TokenList Split(const std::string& text) {
  TokenList out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string SlotWords(const SlotDef& slot) {
  std::string out = slot.name;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

void Append(TokenList& out, const TokenList& more) {
  out.insert(out.end(), more.begin(), more.end());
}

double Logit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(p / (1.0 - p));
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::string> TimeVocabulary() {
  std::vector<std::string> out;
  char buf[16];
  for (int h = 8; h <= 21; ++h) {
    for (int m : {0, 15, 30, 45}) {
      std::snprintf(buf, sizeof(buf), "%02d : %02d", h, m);
      out.emplace_back(buf);
    }
  }
  return out;
}

const std::map<std::string, std::vector<std::string>>& HandTemplates() {
  static const auto* templates = new std::map<std::string, std::vector<std::string>>{
      {"restaurant-area", {"in the {v} area", "somewhere in the {v}"}},
      {"restaurant-food", {"{v} food", "serving {v} cuisine"}},
      {"restaurant-book_time", {"a table at {v}", "reserve for {v}"}},
      {"restaurant-book_people", {"a table for {v}", "{v} diners"}},
      {"restaurant-book_day", {"dinner on {v}", "reserve it for {v}"}},
      {"train-departure", {"leaving from {v}", "departing {v}"}},
      {"train-destination", {"going to {v}", "heading for {v}"}},
      {"train-leave_at", {"leave after {v}", "depart after {v}"}},
      {"train-arrive_by", {"arrive by {v}", "get there by {v}"}},
      {"train-book_people", {"{v} tickets", "tickets for {v}"}},
      {"train-day", {"travel on {v}", "a train on {v}"}},
  };
  return *templates;
}

constexpr const char* kFillers[] = {"please", "thanks", "ok", "well", "hmm", "so"};

struct Spoken {
  int slot = 0;
  TokenList tokens;
  int value_begin = -1;  // offset of the value inside `tokens`, -1 if none
  int value_len = 0;
};

Spoken Realize(const std::string& templ, int slot, const std::string& value) {
  Spoken out;
  out.slot = slot;
  for (const std::string& tok : Split(templ)) {
    if (tok == "{v}") {
      out.value_begin = static_cast<int>(out.tokens.size());
      const TokenList v = Split(value);
      out.value_len = static_cast<int>(v.size());
      Append(out.tokens, v);
    } else {
      out.tokens.push_back(tok);
    }
  }
  return out;
}

const std::vector<std::string>& VocabFor(const SynthConfig& cfg, int s) {
  auto it = cfg.slot_vocabularies.find(s);
  if (it != cfg.slot_vocabularies.end()) return it->second;
  return cfg.vocabularies.at(cfg.schema.slot(s).data_type_group);
}

}  // namespace

SlotSchema DefaultSynthSchema() {
  using G = DataTypeGroup;
  auto open = [](const char* d, const char* n, G g) {
    return SlotDef{d, n, 0, ValueKind::kOpen, g};
  };
  return SlotSchema({
      open("restaurant", "area", G::kPlace),
      open("restaurant", "food", G::kOther),
      open("restaurant", "book_time", G::kTime),
      open("restaurant", "book_people", G::kInteger),
      open("restaurant", "book_day", G::kOther),
      open("train", "departure", G::kPlace),
      open("train", "destination", G::kPlace),
      open("train", "leave_at", G::kTime),
      open("train", "arrive_by", G::kTime),
      open("train", "book_people", G::kInteger),
      open("train", "day", G::kOther),
  });
}

SynthConfig DefaultSynthConfig(const SlotSchema& schema) {
  SynthConfig cfg;
  cfg.schema = schema;
  const int n = schema.size();
  cfg.vocabularies[DataTypeGroup::kTime] = TimeVocabulary();
  cfg.vocabularies[DataTypeGroup::kInteger] = {"1", "2", "3", "4", "5", "6", "7", "8"};
  cfg.vocabularies[DataTypeGroup::kPlace] = {"centre",    "north", "south",   "east",
                                             "west",      "ely",   "norwich", "london",
                                             "stevenage", "leicester"};
  cfg.vocabularies[DataTypeGroup::kName] = {"alpha", "bravo", "charlie", "delta", "echo"};
  cfg.vocabularies[DataTypeGroup::kOther] = {"monday", "tuesday",  "wednesday", "thursday",
                                             "friday", "saturday", "sunday"};
  cfg.shared_templates[DataTypeGroup::kTime] = {"at {v}", "around {v}"};
  cfg.shared_templates[DataTypeGroup::kInteger] = {"for {v} people", "{v} people"};
  cfg.shared_templates[DataTypeGroup::kOther] = {"on {v}"};

  const auto& hand = HandTemplates();
  cfg.slot_templates.resize(n);
  for (int s = 0; s < n; ++s) {
    const SlotDef& slot = schema.slot(s);
    auto it = hand.find(slot.FullName());
    if (it != hand.end()) {
      cfg.slot_templates[s] = it->second;
    } else {
      cfg.slot_templates[s] = {SlotWords(slot) + " {v}"};
    }
    if (slot.FullName() == "restaurant-food") {
      cfg.slot_vocabularies[s] = {"thai", "italian", "indian", "chinese", "french", "british"};
    }
  }
  cfg.slot_activation.assign(n, 0.35);
  cfg.boosts.assign(n, std::vector<double>(n, 0.0));
  auto boost = [&](const char* a, const char* b, double v) {
    const auto i = schema.FindByFullName(a);
    const auto j = schema.FindByFullName(b);
    if (!i || !j) return;
    cfg.boosts[*i][*j] = v;
    cfg.boosts[*j][*i] = v;
  };
  boost("restaurant-book_time", "restaurant-book_people", 2.0);
  boost("restaurant-book_time", "restaurant-book_day", 2.0);
  boost("restaurant-book_people", "restaurant-book_day", 2.0);
  boost("train-leave_at", "train-arrive_by", -4.0);
  boost("train-departure", "train-destination", 1.5);
  return cfg;
}

void SynthConfig::Validate() const {
  const int n = schema.size();
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kConfig, std::string(what) + " must lie in [0, 1]");
    }
  };
  prob(domain_activation_prob, "domain_activation_prob");
  prob(inform_prob, "inform_prob");
  prob(refer_prob, "refer_prob");
  prob(dontcare_prob, "dontcare_prob");
  prob(shared_template_prob, "shared_template_prob");
  prob(acknowledge_prob, "acknowledge_prob");
  prob(domain_cue_prob, "domain_cue_prob");
  if (inform_prob + refer_prob + dontcare_prob > 1.0) {
    throw Error(ErrorKind::kConfig, "inform_prob + refer_prob + dontcare_prob exceeds 1");
  }
  if (static_cast<int>(slot_activation.size()) != n) {
    throw Error(ErrorKind::kConfig, "slot_activation must have one entry per slot");
  }
  for (double p : slot_activation) prob(p, "slot activation");
  if (static_cast<int>(boosts.size()) != n) {
    throw Error(ErrorKind::kConfig, "boost matrix must be N x N");
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(boosts[i].size()) != n) {
      throw Error(ErrorKind::kConfig, "boost matrix must be N x N");
    }
    if (boosts[i][i] != 0.0) throw Error(ErrorKind::kConfig, "boost diagonal must be zero");
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(boosts[i][j]) || boosts[i][j] != boosts[j][i]) {
        throw Error(ErrorKind::kConfig, "boost matrix must be finite and symmetric");
      }
    }
  }
  if (max_filler < 0) throw Error(ErrorKind::kConfig, "max_filler must be >= 0");
  if (min_turns < 1 || max_turns < min_turns) {
    throw Error(ErrorKind::kConfig, "need 1 <= min_turns <= max_turns");
  }
  if (num_dialogues < 0) throw Error(ErrorKind::kConfig, "num_dialogues must be >= 0");
  if (static_cast<int>(slot_templates.size()) != n) {
    throw Error(ErrorKind::kConfig, "slot_templates must have one entry per slot");
  }
  auto check_template = [](const std::string& t, const std::string& where) {
    const TokenList toks = Split(t);
    if (std::count(toks.begin(), toks.end(), "{v}") != 1) {
      throw Error(ErrorKind::kConfig, where + ": template '" + t + "' needs exactly one {v}");
    }
  };
  for (int s = 0; s < n; ++s) {
    const SlotDef& slot = schema.slot(s);
    if (slot.value_kind == ValueKind::kBoolean) continue;
    const auto& ts = slot_templates[s];
    if (ts.empty() || ts.size() > 5) {
      throw Error(ErrorKind::kConfig, slot.FullName() + ": needs 1..5 templates");
    }
    for (const auto& t : ts) check_template(t, slot.FullName());
    const auto ov = slot_vocabularies.find(s);
    const auto gv = vocabularies.find(slot.data_type_group);
    const bool has_vocab = (ov != slot_vocabularies.end() && !ov->second.empty()) ||
                           (gv != vocabularies.end() && !gv->second.empty());
    if (!has_vocab) {
      throw Error(ErrorKind::kConfig, slot.FullName() + ": empty value vocabulary");
    }
  }
  for (const auto& [group, ts] : shared_templates) {
    if (ts.size() > 5) throw Error(ErrorKind::kConfig, "at most 5 shared templates per group");
    for (const auto& t : ts) check_template(t, std::string(ToString(group)));
  }
}

Corpus Generate(const SynthConfig& cfg) {
  cfg.Validate();
  const SlotSchema& schema = cfg.schema;
  const int n = schema.size();
  Corpus corpus;
  corpus.schema = schema;
  corpus.dialogues.reserve(cfg.num_dialogues);
  for (int di = 0; di < cfg.num_dialogues; ++di) {
    // One stream per dialogue, so a corpus prefix does not depend on its size.
    Rng rng(MixHash(cfg.seed, static_cast<std::uint64_t>(di)));
    Dialogue dialogue;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", di);
    dialogue.id = id;
    const int num_turns = rng.Between(cfg.min_turns, cfg.max_turns);
    BeliefState state(n);
    std::vector<bool> valued(n, false);
    std::vector<int> last_active;
    int history_len = 0;

    for (int t = 0; t < num_turns; ++t) {
      // 1. Domain focus.
      std::vector<bool> focus(schema.domains().size(), false);
      bool any = false;
      for (std::size_t d = 0; d < focus.size(); ++d) {
        focus[d] = rng.Bernoulli(cfg.domain_activation_prob);
        any = any || focus[d];
      }
      if (!any) focus[rng.Below(focus.size())] = true;

      // 2. Activation sweep.
      std::vector<bool> active(n, false);
      for (int s = 0; s < n; ++s) {
        if (!focus[schema.domain_of(s)] || valued[s]) continue;
        double logit = Logit(cfg.slot_activation[s]);
        for (int j = 0; j < s; ++j) {
          if (active[j]) logit += cfg.boosts[s][j];
        }
        active[s] = rng.Bernoulli(Sigmoid(logit));
      }

      // 3. Sources and values.
      DialogueTurn turn;
      TurnLabel label;
      label.slots.resize(n);
      for (int s = 0; s < n; ++s) label.slots[s].gold_value = state.Get(s);
      std::vector<Spoken> spoken;
      TokenList system_tail;
      std::map<DataTypeGroup, std::vector<std::string>> used;
      auto draw_value = [&](int s) {
        const auto& vocab = VocabFor(cfg, s);
        auto& taken = used[schema.slot(s).data_type_group];
        std::string v;
        for (int attempt = 0; attempt < 64; ++attempt) {
          v = vocab[rng.Below(vocab.size())];
          if (std::find(taken.begin(), taken.end(), v) == taken.end()) break;
        }
        taken.push_back(v);
        return v;
      };
      std::vector<int> now_active;
      for (int s = 0; s < n; ++s) {
        if (!active[s]) continue;
        now_active.push_back(s);
        const SlotDef& slot = schema.slot(s);
        SlotLabel& sl = label.slots[s];
        const std::string words = SlotWords(slot);
        if (slot.value_kind == ValueKind::kBoolean) {
          if (rng.Bernoulli(cfg.dontcare_prob)) {
            sl.gold_class = CopyClass::kDontcare;
            sl.gold_value = Value::Dontcare();
            spoken.push_back(Realize("any " + words + " is fine", s, ""));
          } else if (rng.Bernoulli(0.5)) {
            sl.gold_class = CopyClass::kTrue;
            sl.gold_value = Value::True();
            spoken.push_back(Realize("with " + words, s, ""));
          } else {
            sl.gold_class = CopyClass::kFalse;
            sl.gold_value = Value::False();
            spoken.push_back(Realize("no " + words, s, ""));
          }
          continue;
        }
        std::vector<int> refer_candidates;
        for (int j = 0; j < n; ++j) {
          if (j != s && state.Get(j).is_text() &&
              schema.slot(j).data_type_group == slot.data_type_group &&
              VocabFor(cfg, j) == VocabFor(cfg, s)) {
            refer_candidates.push_back(j);
          }
        }
        const double u = rng.Uniform();
        if (u < cfg.dontcare_prob) {
          sl.gold_class = CopyClass::kDontcare;
          sl.gold_value = Value::Dontcare();
          Spoken sp = Realize("any " + words + " is fine", s, "");
          spoken.push_back(std::move(sp));
        } else if (u < cfg.dontcare_prob + cfg.inform_prob) {
          const std::string v = draw_value(s);
          sl.gold_class = CopyClass::kInform;
          sl.gold_value = Value::Text(v);
          turn.system_informs.push_back(SystemInform{s, v});
          Append(system_tail, Split("i have a " + slot.domain + " " + words + " " + v + " ,"));
          Spoken sp = Realize("that " + words + " works", s, "");
          spoken.push_back(std::move(sp));
        } else if (u < cfg.dontcare_prob + cfg.inform_prob + cfg.refer_prob &&
                   !refer_candidates.empty()) {
          const int target = refer_candidates[rng.Below(refer_candidates.size())];
          sl.gold_class = CopyClass::kRefer;
          sl.gold_value = state.Get(target);
          sl.gold_refer_target = target;
          Spoken sp = Realize(words + " same as before", s, "");
          spoken.push_back(std::move(sp));
        } else {
          const std::string v = draw_value(s);
          sl.gold_class = CopyClass::kSpan;
          sl.gold_value = Value::Text(v);
          const auto shared = cfg.shared_templates.find(slot.data_type_group);
          const bool use_shared = shared != cfg.shared_templates.end() &&
                                  !shared->second.empty() &&
                                  rng.Bernoulli(cfg.shared_template_prob);
          const auto& pool = use_shared ? shared->second : cfg.slot_templates[s];
          spoken.push_back(Realize(pool[rng.Below(pool.size())], s, v));
        }
      }

      // System turn: acknowledgement of the previous turn, then offers.
      if (t > 0) {
        if (!last_active.empty() && rng.Bernoulli(cfg.acknowledge_prob)) {
          turn.system_tokens = {"noted"};
          for (std::size_t k = 0; k < last_active.size(); ++k) {
            if (k > 0) turn.system_tokens.push_back("and");
            Append(turn.system_tokens, Split("the " + SlotWords(schema.slot(last_active[k]))));
          }
          turn.system_tokens.push_back(",");
        }
        Append(turn.system_tokens, system_tail);
        Append(turn.system_tokens, Split("anything else ?"));
      } else if (!system_tail.empty()) {
        turn.system_tokens = system_tail;
        Append(turn.system_tokens, Split("how can i help ?"));
      }

      // User turn: domain cues, shuffled slot phrases, fillers.
      TokenList& user = turn.user_tokens;
      const int lead = rng.Between(0, cfg.max_filler);
      for (int k = 0; k < lead; ++k) user.push_back(kFillers[rng.Below(std::size(kFillers))]);
      for (std::size_t d = 0; d < focus.size(); ++d) {
        if (focus[d] && rng.Bernoulli(cfg.domain_cue_prob)) {
          Append(user, Split("i need a " + schema.domains()[d].name));
        }
      }
      rng.Shuffle(spoken);
      const int user_offset = history_len + static_cast<int>(turn.system_tokens.size());
      for (std::size_t k = 0; k < spoken.size(); ++k) {
        if (k > 0) user.push_back("and");
        const Spoken& sp = spoken[k];
        if (sp.value_begin >= 0) {
          const int start = user_offset + static_cast<int>(user.size()) + sp.value_begin;
          label.slots[sp.slot].gold_span = TokenSpan{start, start + sp.value_len - 1};
        }
        Append(user, sp.tokens);
      }
      if (user.empty()) user = {"thanks"};

      history_len += static_cast<int>(turn.system_tokens.size() + user.size());
      for (int s : now_active) {
        state.Set(s, label.slots[s].gold_value);
        valued[s] = true;
      }
      last_active = std::move(now_active);
      dialogue.turns.push_back(std::move(turn));
      dialogue.labels.push_back(std::move(label));
    }
    corpus.dialogues.push_back(std::move(dialogue));
  }
  return corpus;
}

CorpusStats ComputeCorpusStats(const Corpus& corpus) {
  const int n = corpus.schema.size();
  CorpusStats stats;
  stats.activation_rate.assign(n, 0.0);
  stats.co_activation.assign(n, std::vector<long long>(n, 0));
  stats.class_counts.resize(n);
  stats.num_dialogues = static_cast<int>(corpus.dialogues.size());
  std::vector<long long> active_count(n, 0);
  for (const Dialogue& d : corpus.dialogues) {
    for (const TurnLabel& label : d.labels) {
      ++stats.num_turns;
      for (int s = 0; s < n; ++s) {
        const CopyClass c = label.slots[s].gold_class;
        ++stats.class_counts[s][c];
        if (c == CopyClass::kNone) continue;
        ++active_count[s];
        for (int j = 0; j < n; ++j) {
          if (label.slots[j].gold_class != CopyClass::kNone) ++stats.co_activation[s][j];
        }
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    stats.activation_rate[s] =
        stats.num_turns > 0 ? static_cast<double>(active_count[s]) / stats.num_turns : 0.0;
  }
  return stats;
}

json CorpusStatsToJson(const CorpusStats& stats, const SlotSchema& schema) {
  json slots = json::array();
  for (int s = 0; s < schema.size(); ++s) {
    json classes = json::object();
    for (const auto& [c, count] : stats.class_counts[s]) classes[std::string(ToString(c))] = count;
    slots.push_back({{"slot", schema.slot(s).FullName()},
                     {"activation_rate", stats.activation_rate[s]},
                     {"class_counts", classes},
                     {"co_activation", stats.co_activation[s]}});
  }
  return {{"format_version", kFormatVersion},
          {"num_dialogues", stats.num_dialogues},
          {"num_turns", stats.num_turns},
          {"slots", slots}};
}

}  // namespace jointdst
