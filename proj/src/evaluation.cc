#include "jointdst/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "jointdst/error.h"
#include "jointdst/io_util.h"

namespace jointdst {

namespace {

double Ratio(long long num, long long den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void AddInto(std::vector<long long>& a, const std::vector<long long>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

// ".99" for fractions, "1.00" at one.
std::string FormatFraction(double x, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  std::string s = buf;
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

std::string FormatSigned(double x, int digits) {
  std::string s = FormatFraction(x, digits);
  return s[0] == '-' ? s : "+" + s;
}

std::string Pad(const std::string& s, std::size_t width, bool left = true) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

std::size_t NameWidth(const EvalReport& report) {
  std::size_t w = 4;
  for (const std::string& n : report.slot_names) w = std::max(w, n.size());
  return w;
}

json Matrix(const std::vector<std::vector<long long>>& m) { return m; }

std::vector<std::vector<long long>> ReadMatrix(const json& doc, int n, const char* what) {
  std::vector<std::vector<long long>> m = doc.get<std::vector<std::vector<long long>>>();
  if (static_cast<int>(m.size()) != n) {
    throw Error(ErrorKind::kParse, std::string("report: ") + what + " has the wrong size");
  }
  for (const auto& row : m) {
    if (static_cast<int>(row.size()) != n) {
      throw Error(ErrorKind::kParse, std::string("report: ") + what + " has the wrong size");
    }
  }
  return m;
}

std::vector<long long> ReadVector(const json& doc, int n, const char* what) {
  std::vector<long long> v = doc.get<std::vector<long long>>();
  if (static_cast<int>(v.size()) != n) {
    throw Error(ErrorKind::kParse, std::string("report: ") + what + " has the wrong size");
  }
  return v;
}

}  // namespace

double JointGoalAccuracy(std::span<const BeliefState> predicted,
                         std::span<const BeliefState> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorKind::kShape, "joint goal accuracy: state counts differ");
  }
  if (gold.empty()) return 0.0;
  long long correct = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (predicted[t].size() != gold[t].size()) {
      throw Error(ErrorKind::kShape, "joint goal accuracy: slot counts differ");
    }
    bool all = true;
    for (int s = 0; s < gold[t].size() && all; ++s) {
      all = ValuesEqual(predicted[t].Get(s), gold[t].Get(s));
    }
    correct += all;
  }
  return Ratio(correct, static_cast<long long>(gold.size()));
}

EvalTally::EvalTally(int n)
    : num_slots(n),
      oracle_correct(n, 0),
      class_counts(n, ClassMatrix{}),
      value_incorrect(n, 0),
      considered(n, 0),
      none_fn(n, 0),
      none_fp(n, 0),
      none_other(n, 0),
      p1_events(n, std::vector<long long>(n, 0)),
      p2_events(n, std::vector<long long>(n, 0)),
      diagnostics(n, 0) {}

void EvalTally::Merge(const EvalTally& other) {
  if (other.num_slots != num_slots) {
    throw Error(ErrorKind::kShape, "tally merge: slot counts differ");
  }
  turns += other.turns;
  joint_correct += other.joint_correct;
  AddInto(oracle_correct, other.oracle_correct);
  for (int s = 0; s < num_slots; ++s) {
    for (int g = 0; g < kNumCopyClasses; ++g) {
      for (int p = 0; p < kNumCopyClasses; ++p) {
        class_counts[s][g][p] += other.class_counts[s][g][p];
      }
    }
    AddInto(p1_events[s], other.p1_events[s]);
    AddInto(p2_events[s], other.p2_events[s]);
  }
  AddInto(value_incorrect, other.value_incorrect);
  AddInto(considered, other.considered);
  AddInto(none_fn, other.none_fn);
  AddInto(none_fp, other.none_fp);
  AddInto(none_other, other.none_other);
  AddInto(diagnostics, other.diagnostics);
}

void AddDialogue(EvalTally& tally, const Dialogue& dialogue,
                 std::span<const TurnPrediction> predictions,
                 std::span<const BeliefState> predicted_states,
                 std::span<const std::vector<Diagnostic>> diagnostics) {
  const int n = tally.num_slots;
  const std::size_t num_turns = dialogue.labels.size();
  if (predictions.size() != num_turns || predicted_states.size() != num_turns ||
      (!diagnostics.empty() && diagnostics.size() != num_turns)) {
    throw Error(ErrorKind::kShape, "evaluation: dialogue '" + dialogue.id +
                                       "' has mismatched prediction counts");
  }
  std::vector<char> correct(n);
  for (std::size_t t = 0; t < num_turns; ++t) {
    const TurnLabel& label = dialogue.labels[t];
    const BeliefState& state = predicted_states[t];
    if (static_cast<int>(label.slots.size()) != n || state.size() != n ||
        static_cast<int>(predictions[t].size()) != n) {
      throw Error(ErrorKind::kShape, "evaluation: dialogue '" + dialogue.id +
                                         "' has the wrong slot count");
    }
    int wrong = 0;
    for (int s = 0; s < n; ++s) {
      correct[s] = ValuesEqual(state.Get(s), label.slots[s].gold_value);
      wrong += !correct[s];
    }
    ++tally.turns;
    tally.joint_correct += (wrong == 0);
    for (int s = 0; s < n; ++s) {
      const SlotLabel& gold = label.slots[s];
      const Value& pred_value = state.Get(s);
      const CopyClass pred_class = predictions[t][s].cls;
      const bool gold_none = gold.gold_class == CopyClass::kNone;
      const bool pred_none = pred_class == CopyClass::kNone;

      tally.oracle_correct[s] += (wrong == 0 || (wrong == 1 && !correct[s]));
      ++tally.class_counts[s][static_cast<int>(gold.gold_class)][static_cast<int>(pred_class)];
      tally.value_incorrect[s] += !correct[s];

      const bool prev_none = t == 0 || dialogue.labels[t - 1].slots[s].gold_value.is_none();
      if (!prev_none) continue;
      ++tally.considered[s];
      if (!correct[s]) {
        if (gold_none && !pred_none) {
          ++tally.none_fn[s];
        } else if (!gold_none && pred_none) {
          ++tally.none_fp[s];
        } else if (!gold_none && !pred_none) {
          ++tally.none_other[s];
        }
      }
      for (int other = 0; other < n; ++other) {
        if (other == s) continue;
        const Value& other_gold = label.slots[other].gold_value;
        if (!other_gold.is_text()) continue;
        if (gold_none && pred_value.is_text() && ValuesEqual(pred_value, other_gold)) {
          ++tally.p1_events[s][other];
        }
        if (pred_none && !gold_none && !correct[s] && gold.gold_value.is_text() &&
            ValuesEqual(gold.gold_value, other_gold)) {
          ++tally.p2_events[s][other];
        }
      }
    }
    if (!diagnostics.empty()) {
      for (const Diagnostic& d : diagnostics[t]) {
        if (d.slot >= 0 && d.slot < n) ++tally.diagnostics[d.slot];
      }
    }
  }
}

double Jga(const EvalTally& tally) { return Ratio(tally.joint_correct, tally.turns); }

ClassAccuracy PerSlotClassAccuracy(const EvalTally& tally, int slot, CopyClass cls) {
  const auto& row = tally.class_counts.at(slot)[static_cast<int>(cls)];
  const long long support = std::accumulate(row.begin(), row.end(), 0LL);
  return {Ratio(row[static_cast<int>(cls)], support), support};
}

double OracleJga(const EvalTally& tally, int slot) {
  return Ratio(tally.oracle_correct.at(slot), tally.turns);
}

std::vector<std::vector<double>> ConfusionFrequency(const EvalTally& tally) {
  const int n = tally.num_slots;
  std::vector<std::vector<double>> f(n, std::vector<double>(n, 0.0));
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < n; ++o) {
      f[s][o] = Ratio(tally.p1_events[s][o] + tally.p2_events[s][o], tally.considered[s]);
    }
  }
  return f;
}

double ConfusionMass(const EvalTally& tally, int slot) {
  const auto f = ConfusionFrequency(tally);
  return std::accumulate(f.at(slot).begin(), f.at(slot).end(), 0.0);
}

double TotalConfusionMass(const EvalTally& tally) {
  double total = 0.0;
  for (const auto& row : ConfusionFrequency(tally)) {
    for (double x : row) total += x;
  }
  return total;
}

json EvalReportToJson(const EvalReport& report) {
  const EvalTally& t = report.tally;
  json classes = json::array();
  for (const auto& m : t.class_counts) {
    json rows = json::array();
    for (const auto& row : m) rows.push_back(std::vector<long long>(row.begin(), row.end()));
    classes.push_back(rows);
  }
  json per_slot = json::array();
  for (int s = 0; s < t.num_slots; ++s) {
    json accuracy = json::object();
    for (int c = 0; c < kNumCopyClasses; ++c) {
      const ClassAccuracy a = PerSlotClassAccuracy(t, s, static_cast<CopyClass>(c));
      if (a.support == 0) continue;
      accuracy[std::string(ToString(static_cast<CopyClass>(c)))] = {
          {"accuracy", a.accuracy}, {"support", a.support}};
    }
    per_slot.push_back({{"slot", report.slot_names.at(s)},
                        {"class_accuracy", accuracy},
                        {"oracle_jga", OracleJga(t, s)},
                        {"confusion_mass", ConfusionMass(t, s)}});
  }
  return {{"format_version", kFormatVersion},
          {"kind", "jointdst-eval-report"},
          {"label", report.label},
          {"split", report.split},
          {"slots", report.slot_names},
          {"metrics",
           {{"jga", Jga(t)},
            {"total_confusion_mass", TotalConfusionMass(t)},
            {"per_slot", per_slot}}},
          {"definitions",
           {{"confusion_denominator",
             "decisions for slot s whose previous gold value is none"},
            {"p1", "gold class none and the predicted value of s equals the gold value of s'"},
            {"p2",
             "predicted class none, gold class not none, and the gold value of s equals the "
             "gold value of s'"}}},
          {"tally",
           {{"turns", t.turns},
            {"joint_correct", t.joint_correct},
            {"oracle_correct", t.oracle_correct},
            {"class_counts", classes},
            {"value_incorrect", t.value_incorrect},
            {"considered", t.considered},
            {"none_fn", t.none_fn},
            {"none_fp", t.none_fp},
            {"none_other", t.none_other},
            {"p1_events", Matrix(t.p1_events)},
            {"p2_events", Matrix(t.p2_events)},
            {"diagnostics", t.diagnostics}}}};
}

EvalReport EvalReportFromJson(const json& doc) {
  try {
    CheckFormatVersion(doc, "report");
    EvalReport report;
    report.label = GetString(doc, "label", "report");
    report.split = GetString(doc, "split", "report");
    report.slot_names = RequireField(doc, "slots", "report").get<std::vector<std::string>>();
    const int n = static_cast<int>(report.slot_names.size());
    const json& t = RequireField(doc, "tally", "report");
    EvalTally tally(n);
    tally.turns = RequireField(t, "turns", "tally").get<long long>();
    tally.joint_correct = RequireField(t, "joint_correct", "tally").get<long long>();
    tally.oracle_correct = ReadVector(RequireField(t, "oracle_correct", "tally"), n, "oracle_correct");
    tally.value_incorrect =
        ReadVector(RequireField(t, "value_incorrect", "tally"), n, "value_incorrect");
    tally.considered = ReadVector(RequireField(t, "considered", "tally"), n, "considered");
    tally.none_fn = ReadVector(RequireField(t, "none_fn", "tally"), n, "none_fn");
    tally.none_fp = ReadVector(RequireField(t, "none_fp", "tally"), n, "none_fp");
    tally.none_other = ReadVector(RequireField(t, "none_other", "tally"), n, "none_other");
    tally.diagnostics = ReadVector(RequireField(t, "diagnostics", "tally"), n, "diagnostics");
    tally.p1_events = ReadMatrix(RequireField(t, "p1_events", "tally"), n, "p1_events");
    tally.p2_events = ReadMatrix(RequireField(t, "p2_events", "tally"), n, "p2_events");
    const json& classes = RequireField(t, "class_counts", "tally");
    if (!classes.is_array() || static_cast<int>(classes.size()) != n) {
      throw Error(ErrorKind::kParse, "report: class_counts has the wrong size");
    }
    for (int s = 0; s < n; ++s) {
      const auto m = ReadMatrix(classes[s], kNumCopyClasses, "class_counts");
      for (int g = 0; g < kNumCopyClasses; ++g) {
        for (int p = 0; p < kNumCopyClasses; ++p) tally.class_counts[s][g][p] = m[g][p];
      }
    }
    report.tally = std::move(tally);
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("report: ") + e.what());
  }
}

std::string RenderClassAccuracyTable(const EvalReport& report) {
  const EvalTally& t = report.tally;
  const std::size_t w = NameWidth(report);
  const double jga = Jga(t);
  std::ostringstream out;
  out << Pad("slot", w);
  for (int c = 0; c < kNumCopyClasses; ++c) {
    out << "  " << Pad(std::string(ToString(static_cast<CopyClass>(c))), 14);
  }
  out << "  " << Pad("oracle", 7) << "  delta\n";
  for (int s = 0; s < t.num_slots; ++s) {
    out << Pad(report.slot_names[s], w);
    for (int c = 0; c < kNumCopyClasses; ++c) {
      const ClassAccuracy a = PerSlotClassAccuracy(t, s, static_cast<CopyClass>(c));
      const std::string cell =
          a.support == 0 ? "-"
                         : FormatFraction(a.accuracy, 2) + " (" + std::to_string(a.support) + ")";
      out << "  " << Pad(cell, 14);
    }
    const double oracle = OracleJga(t, s);
    out << "  " << Pad(FormatFraction(oracle, 3), 7) << "  " << FormatSigned(oracle - jga, 3)
        << "\n";
  }
  out << "jga " << FormatFraction(jga, 4) << " over " << t.turns << " turns\n";
  return out.str();
}

std::string RenderNoneConfusionTable(const EvalReport& report) {
  const EvalTally& t = report.tally;
  const std::size_t w = NameWidth(report);
  std::ostringstream out;
  out << Pad("slot", w) << "  " << Pad("fn", 8, false) << "  " << Pad("fp", 8, false) << "  "
      << Pad("other", 8, false) << "  " << Pad("considered", 10, false) << "\n";
  long long fn = 0, fp = 0, other = 0, considered = 0;
  auto row = [&](const std::string& name, long long a, long long b, long long c, long long d) {
    out << Pad(name, w) << "  " << Pad(std::to_string(a), 8, false) << "  "
        << Pad(std::to_string(b), 8, false) << "  " << Pad(std::to_string(c), 8, false) << "  "
        << Pad(std::to_string(d), 10, false) << "\n";
  };
  for (int s = 0; s < t.num_slots; ++s) {
    row(report.slot_names[s], t.none_fn[s], t.none_fp[s], t.none_other[s], t.considered[s]);
    fn += t.none_fn[s];
    fp += t.none_fp[s];
    other += t.none_other[s];
    considered += t.considered[s];
  }
  row("total", fn, fp, other, considered);
  return out.str();
}

std::string RenderConfusionTsv(const EvalReport& report) {
  const EvalTally& t = report.tally;
  const auto f = ConfusionFrequency(t);
  std::ostringstream out;
  out << "slot\tother\tp1\tp2\tconsidered\tfrequency\n";
  char buf[32];
  for (int s = 0; s < t.num_slots; ++s) {
    for (int o = 0; o < t.num_slots; ++o) {
      if (o == s) continue;
      std::snprintf(buf, sizeof(buf), "%.6f", f[s][o]);
      out << report.slot_names[s] << '\t' << report.slot_names[o] << '\t' << t.p1_events[s][o]
          << '\t' << t.p2_events[s][o] << '\t' << t.considered[s] << '\t' << buf << '\n';
    }
  }
  return out.str();
}

std::string RenderDiagnostics(const EvalReport& report) {
  const EvalTally& t = report.tally;
  const std::size_t w = NameWidth(report);
  std::ostringstream out;
  out << Pad("slot", w) << "  " << Pad("degraded", 8, false) << "  "
      << Pad("confusion", 9, false) << "\n";
  char buf[32];
  for (int s = 0; s < t.num_slots; ++s) {
    std::snprintf(buf, sizeof(buf), "%.4f", ConfusionMass(t, s));
    out << Pad(report.slot_names[s], w) << "  " << Pad(std::to_string(t.diagnostics[s]), 8, false)
        << "  " << Pad(buf, 9, false) << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.4f", TotalConfusionMass(t));
  out << "total confusion mass " << buf << "\n";
  return out.str();
}

std::string RenderJgaTable(std::span<const JgaRow> rows) {
  std::size_t w = 5;
  for (const JgaRow& r : rows) w = std::max(w, r.model.size());
  auto cell = [](const std::optional<double>& x) {
    if (!x) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *x);
    return std::string(buf);
  };
  std::ostringstream out;
  out << Pad("model", w) << "  " << Pad("dev", 6, false) << "  " << Pad("test", 6, false) << "\n";
  for (const JgaRow& r : rows) {
    out << Pad(r.model, w) << "  " << Pad(cell(r.dev), 6, false) << "  "
        << Pad(cell(r.test), 6, false) << "\n";
  }
  return out.str();
}

std::vector<int> AllIndices(const Corpus& corpus) {
  std::vector<int> idx(corpus.dialogues.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<TurnPrediction> PredictDialogue(const Model& model, const EncodedDialogue& encoded) {
  std::vector<TurnPrediction> preds;
  preds.reserve(encoded.turns.size());
  for (const EncodedHistory& h : encoded.turns) preds.push_back(PredictTurn(model, h));
  return preds;
}

EvalTally EvaluateModel(const Model& model, const Corpus& corpus,
                        const std::vector<EncodedDialogue>& encoded,
                        std::span<const int> indices) {
  const int n = corpus.schema.size();
  EvalTally tally(n);
  for (int i : indices) {
    const Dialogue& d = corpus.dialogues.at(i);
    const std::vector<TurnPrediction> preds =
        encoded.empty() ? PredictDialogue(model, EncodeDialogue(d, model.config().features))
                        : PredictDialogue(model, encoded.at(i));
    const DialogueTrace trace = TrackDialogue(d, n, preds);
    AddDialogue(tally, d, preds, trace.states, trace.diagnostics);
  }
  return tally;
}

EvalTally EvaluateOracle(const Corpus& corpus, std::span<const int> indices) {
  const int n = corpus.schema.size();
  EvalTally tally(n);
  for (int i : indices) {
    const Dialogue& d = corpus.dialogues.at(i);
    std::vector<TurnPrediction> preds;
    for (const TurnLabel& label : d.labels) preds.push_back(PredictionFromLabel(label));
    const DialogueTrace trace = TrackDialogue(d, n, preds);
    AddDialogue(tally, d, preds, trace.states, trace.diagnostics);
  }
  return tally;
}

}  // namespace jointdst
