#ifndef JOINTDST_EVALUATION_H_
#define JOINTDST_EVALUATION_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jointdst/dialogue.h"
#include "jointdst/model.h"
#include "jointdst/schema.h"
#include "jointdst/tracker.h"
#include "jointdst/training.h"

namespace jointdst {

// Joint goal accuracy over aligned per-turn states.
double JointGoalAccuracy(std::span<const BeliefState> predicted,
                         std::span<const BeliefState> gold);

// Raw counts behind every metric. Counts are sums over turns, so tallies of
// disjoint shards merge into the tally of their union.
struct EvalTally {
  using ClassMatrix = std::array<std::array<long long, kNumCopyClasses>, kNumCopyClasses>;

  int num_slots = 0;
  long long turns = 0;
  long long joint_correct = 0;
  std::vector<long long> oracle_correct;   // turns correct once slot s is fixed
  std::vector<ClassMatrix> class_counts;   // [s][gold class][predicted class]
  std::vector<long long> value_incorrect;  // per slot, over all turns
  // Restricted to decisions whose previous gold value is NONE.
  std::vector<long long> considered;
  std::vector<long long> none_fn;
  std::vector<long long> none_fp;
  std::vector<long long> none_other;
  std::vector<std::vector<long long>> p1_events;  // [s][s']
  std::vector<std::vector<long long>> p2_events;  // [s][s']
  std::vector<long long> diagnostics;             // degraded resolutions per slot

  explicit EvalTally(int n = 0);
  void Merge(const EvalTally& other);
  bool operator==(const EvalTally&) const = default;
};

// Adds one dialogue: per-turn class predictions and the tracked states.
void AddDialogue(EvalTally& tally, const Dialogue& dialogue,
                 std::span<const TurnPrediction> predictions,
                 std::span<const BeliefState> predicted_states,
                 std::span<const std::vector<Diagnostic>> diagnostics = {});

double Jga(const EvalTally& tally);

struct ClassAccuracy {
  double accuracy = 0.0;  // 0 when support is 0
  long long support = 0;
};

ClassAccuracy PerSlotClassAccuracy(const EvalTally& tally, int slot, CopyClass cls);
double OracleJga(const EvalTally& tally, int slot);
// p1 + p2 events for (s, s') over decisions_considered for s.
std::vector<std::vector<double>> ConfusionFrequency(const EvalTally& tally);
double ConfusionMass(const EvalTally& tally, int slot);  // row sum
double TotalConfusionMass(const EvalTally& tally);

struct EvalReport {
  std::vector<std::string> slot_names;
  std::string label;  // e.g. head kind
  std::string split;
  EvalTally tally;
};

json EvalReportToJson(const EvalReport& report);
EvalReport EvalReportFromJson(const json& doc);

std::string RenderClassAccuracyTable(const EvalReport& report);  // class accuracy + oracle
std::string RenderNoneConfusionTable(const EvalReport& report);  // none FN / FP / other
std::string RenderConfusionTsv(const EvalReport& report);
std::string RenderDiagnostics(const EvalReport& report);

struct JgaRow {
  std::string model;
  std::optional<double> dev;
  std::optional<double> test;
};
std::string RenderJgaTable(std::span<const JgaRow> rows);

// ---- Pipeline --------------------------------------------------------------

std::vector<int> AllIndices(const Corpus& corpus);

// Featurized history -> class head -> span/refer decoding, turn by turn.
std::vector<TurnPrediction> PredictDialogue(const Model& model, const EncodedDialogue& encoded);

// Evaluates the dialogues at `indices`. `encoded` may be empty, in which case
// dialogues are featurized on the fly.
EvalTally EvaluateModel(const Model& model, const Corpus& corpus,
                        const std::vector<EncodedDialogue>& encoded,
                        std::span<const int> indices);
// Gold labels fed through the tracker.
EvalTally EvaluateOracle(const Corpus& corpus, std::span<const int> indices);

}  // namespace jointdst

#endif  // JOINTDST_EVALUATION_H_
