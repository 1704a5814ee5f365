#include <cmath>
#include <array>
#include <functional>
#include <map>

#include "doctest.h"
#include "jointdst/error.h"
#include "jointdst/synthgen.h"
#include "jointdst/tracker.h"
#include "test_util.h"

namespace jointdst {
namespace {

using testing::Slot;

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

SynthConfig SmallConfig(int dialogues, std::uint64_t seed = 1) {
  SynthConfig cfg = DefaultSynthConfig(testing::SmallSchema());
  cfg.num_dialogues = dialogues;
  cfg.seed = seed;
  return cfg;
}

TEST_SUITE("synthgen") {

TEST_CASE("generation is deterministic and prefix stable") {
  const SynthConfig cfg = SmallConfig(40, 9);
  const std::string a = CorpusToJson(Generate(cfg)).dump();
  CHECK(a == CorpusToJson(Generate(cfg)).dump());
  SynthConfig other = cfg;
  other.seed = 10;
  CHECK(a != CorpusToJson(Generate(other)).dump());
  SynthConfig shorter = cfg;
  shorter.num_dialogues = 15;
  const Corpus full = Generate(cfg);
  const Corpus prefix = Generate(shorter);
  for (int i = 0; i < 15; ++i) CHECK(prefix.dialogues[i] == full.dialogues[i]);
}

TEST_CASE("zero dialogues") {
  SynthConfig cfg = SmallConfig(0);
  const Corpus c = Generate(cfg);
  CHECK(c.dialogues.empty());
  CHECK(c.schema == cfg.schema);
  const CorpusStats stats = ComputeCorpusStats(c);
  CHECK(stats.num_turns == 0);
  CHECK(stats.activation_rate == std::vector<double>(6, 0.0));
}

TEST_CASE("every generated dialogue is valid and its labels are consistent") {
  for (const SynthConfig& cfg : {SmallConfig(200, 3), [] {
         SynthConfig c = DefaultSynthConfig();
         c.num_dialogues = 200;
         c.acknowledge_prob = 0.5;
         c.domain_cue_prob = 0.0;
         c.refer_prob = 0.4;
         return c;
       }()}) {
    const Corpus corpus = Generate(cfg);
    const SlotSchema& schema = corpus.schema;
    long long spans = 0, refers = 0, informs = 0;
    for (const Dialogue& d : corpus.dialogues) {
      CHECK(ValidateDialogue(d, schema).empty());
      CHECK(static_cast<int>(d.turns.size()) >= cfg.min_turns);
      CHECK(static_cast<int>(d.turns.size()) <= cfg.max_turns);
      for (int t = 0; t < static_cast<int>(d.turns.size()); ++t) {
        const TokenList history = FlattenHistory(d, t);
        std::map<std::pair<DataTypeGroup, std::string>, int> spoken;
        for (int s = 0; s < schema.size(); ++s) {
          const SlotLabel& l = d.labels[t].slots[s];
          const Value prev = t == 0 ? Value::None() : d.labels[t - 1].slots[s].gold_value;
          if (l.gold_class == CopyClass::kNone) {
            CHECK(l.gold_value == prev);  // values persist
            continue;
          }
          CHECK(prev.is_none());  // a slot is set at most once
          if (l.gold_class == CopyClass::kSpan) {
            ++spans;
            REQUIRE(l.gold_span);
            CHECK(ExtractSpan(history, *l.gold_span) == l.gold_value.text());
            // The span lies in the current user utterance.
            CHECK(l.gold_span->start >= TurnOffset(d, t) + static_cast<int>(d.turns[t].system_tokens.size()));
          }
          if (l.gold_class == CopyClass::kRefer) {
            ++refers;
            const int target = *l.gold_refer_target;
            CHECK(target != s);
            CHECK(schema.slot(target).data_type_group == schema.slot(s).data_type_group);
            CHECK(l.gold_value == d.labels[t - 1].slots[target].gold_value);
          }
          if (l.gold_class == CopyClass::kInform) {
            ++informs;
            bool offered = false;
            for (const SystemInform& si : d.turns[t].system_informs) {
              offered = offered || (si.slot == s && si.value == l.gold_value.text());
            }
            CHECK(offered);
          }
          if (l.gold_class == CopyClass::kSpan || l.gold_class == CopyClass::kInform) {
            // Same-group values drawn in one turn are distinct.
            CHECK(spoken[{schema.slot(s).data_type_group, l.gold_value.text()}]++ == 0);
          }
        }
      }
    }
    CHECK(spans > 100);
    CHECK(refers > 10);
    CHECK(informs > 10);
  }
}

TEST_CASE("a boost shifts co-activation to the logistic prediction") {
  SynthConfig cfg;
  cfg.schema = SlotSchema({Slot("a", "x", DataTypeGroup::kTime), Slot("a", "y", DataTypeGroup::kTime)});
  cfg = [&] {
    SynthConfig c = DefaultSynthConfig(cfg.schema);
    c.domain_activation_prob = 1.0;
    c.min_turns = c.max_turns = 1;
    c.num_dialogues = 10000;
    c.slot_activation = {0.3, 0.2};
    return c;
  }();
  auto conditional = [](const Corpus& corpus) {
    long long n1 = 0, both = 0, n0 = 0, only_y = 0;
    for (const Dialogue& d : corpus.dialogues) {
      const bool x = d.labels[0].slots[0].gold_class != CopyClass::kNone;
      const bool y = d.labels[0].slots[1].gold_class != CopyClass::kNone;
      (x ? n1 : n0)++;
      if (x && y) ++both;
      if (!x && y) ++only_y;
    }
    return std::array<double, 4>{double(both) / n1, double(only_y) / n0, double(n1), double(n0)};
  };
  for (double boost : {0.0, 3.0, -3.0}) {
    cfg.boosts = {{0.0, boost}, {boost, 0.0}};
    const auto [p_given_x, p_given_not_x, n1, n0] = conditional(Generate(cfg));
    const double want1 = Sigmoid(std::log(0.2 / 0.8) + boost);
    const double want0 = 0.2;
    CHECK(std::abs(p_given_x - want1) < 4.0 * std::sqrt(want1 * (1 - want1) / n1));
    CHECK(std::abs(p_given_not_x - want0) < 4.0 * std::sqrt(want0 * (1 - want0) / n0));
    // Co-activation statistics see the same thing.
    const CorpusStats stats = ComputeCorpusStats(Generate(cfg));
    CHECK(stats.co_activation[0][1] == stats.co_activation[1][0]);
    CHECK(stats.co_activation[0][1] == std::llround(p_given_x * n1));
  }
}

TEST_CASE("corpus statistics match a hand tally") {
  Corpus c;
  c.schema = SlotSchema({Slot("a", "x", DataTypeGroup::kTime), Slot("a", "y", DataTypeGroup::kTime),
                         Slot("b", "z", DataTypeGroup::kPlace)});
  auto turn = [](CopyClass x, CopyClass y, CopyClass z) {
    TurnLabel l;
    for (CopyClass cls : {x, y, z}) {
      SlotLabel s;
      s.gold_class = cls;
      l.slots.push_back(s);
    }
    return l;
  };
  using C = CopyClass;
  Dialogue d1;
  d1.labels = {turn(C::kSpan, C::kSpan, C::kNone), turn(C::kNone, C::kNone, C::kDontcare)};
  Dialogue d2;
  d2.labels = {turn(C::kSpan, C::kNone, C::kSpan)};
  d1.turns.resize(2);
  d2.turns.resize(1);
  c.dialogues = {d1, d2};
  const CorpusStats st = ComputeCorpusStats(c);
  CHECK(st.num_dialogues == 2);
  CHECK(st.num_turns == 3);
  CHECK(st.activation_rate == std::vector<double>{2.0 / 3, 1.0 / 3, 2.0 / 3});
  CHECK(st.co_activation == std::vector<std::vector<long long>>{{2, 1, 1}, {1, 1, 0}, {1, 0, 2}});
  CHECK(st.class_counts[2] == std::map<CopyClass, long long>{{C::kNone, 1}, {C::kDontcare, 1}, {C::kSpan, 1}});
  const json doc = CorpusStatsToJson(st, c.schema);
  CHECK(doc["slots"][2]["slot"] == "b-z");
  CHECK(doc["slots"][0]["class_counts"]["span"] == 2);
}

TEST_CASE("config validation") {
  auto kind = [](const SynthConfig& cfg) {
    try {
      Generate(cfg);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  const SynthConfig base = SmallConfig(5);
  CHECK_NOTHROW(Generate(base));
  std::vector<std::function<void(SynthConfig&)>> breakers = {
      [](SynthConfig& c) { c.inform_prob = 1.5; },
      [](SynthConfig& c) { c.inform_prob = 0.5; c.refer_prob = 0.5; c.dontcare_prob = 0.1; },
      [](SynthConfig& c) { c.slot_activation.pop_back(); },
      [](SynthConfig& c) { c.boosts[0][1] = 1.0; },
      [](SynthConfig& c) { c.boosts[2][2] = 1.0; },
      [](SynthConfig& c) { c.boosts[0][1] = c.boosts[1][0] = NAN; },
      [](SynthConfig& c) { c.boosts.pop_back(); },
      [](SynthConfig& c) { c.min_turns = 0; },
      [](SynthConfig& c) { c.min_turns = 4; c.max_turns = 3; },
      [](SynthConfig& c) { c.max_filler = -1; },
      [](SynthConfig& c) { c.num_dialogues = -1; },
      [](SynthConfig& c) { c.slot_templates[0] = {"no placeholder"}; },
      [](SynthConfig& c) { c.slot_templates[0] = {"{v} and {v}"}; },
      [](SynthConfig& c) { c.slot_templates[0].clear(); },
      [](SynthConfig& c) { c.slot_templates[0].assign(6, "at {v}"); },
      [](SynthConfig& c) { c.vocabularies[DataTypeGroup::kTime].clear(); },
      [](SynthConfig& c) { c.domain_activation_prob = -0.1; },
  };
  for (std::size_t i = 0; i < breakers.size(); ++i) {
    SynthConfig cfg = base;
    breakers[i](cfg);
    CAPTURE(i);
    CHECK(kind(cfg) == ErrorKind::kConfig);
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace jointdst
