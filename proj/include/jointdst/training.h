#ifndef JOINTDST_TRAINING_H_
#define JOINTDST_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jointdst/dialogue.h"
#include "jointdst/featurizer.h"
#include "jointdst/model.h"
#include "jointdst/params.h"

namespace jointdst {

// One encoded history per turn of a dialogue.
struct EncodedDialogue {
  std::vector<EncodedHistory> turns;
};

EncodedDialogue EncodeDialogue(const Dialogue& dialogue, const FeatureConfig& config);
std::vector<EncodedDialogue> EncodeCorpus(const Corpus& corpus, const FeatureConfig& config);

// A single (turn, all slots) training example. `input` points into an
// EncodedDialogue owned by the caller.
struct TrainExample {
  const EncodedHistory* input = nullptr;
  std::vector<int> gold_class;        // admissible-class index per slot
  std::vector<CopyClass> gold_copy;   // the same labels as copy classes
  std::vector<std::optional<TokenSpan>> gold_span;
  std::vector<int> gold_refer;        // -1 unless the slot is refer-labelled
};

TrainExample MakeExample(const SlotSchema& schema, const TurnLabel& label,
                         const EncodedHistory& input);
// Examples for the given dialogues, in dialogue then turn order.
std::vector<TrainExample> MakeExamples(const Corpus& corpus,
                                       const std::vector<EncodedDialogue>& encoded,
                                       std::span<const int> dialogue_indices);

struct LossWeights {
  double cls = 1.0;
  double span = 1.0;
  double refer = 1.0;
  bool operator==(const LossWeights&) const = default;
};

// Every term is summed over the batch and divided by (turns x slots).
struct LossBreakdown {
  double total = 0.0;
  double cls = 0.0;
  double span = 0.0;
  double refer = 0.0;
};

// Negative log-likelihood of the batch under the model's class head plus the
// span and referral terms. When `grad` is non-null it is reset to the model's
// layout and receives the exact gradient.
LossBreakdown ComputeLoss(const Model& model, std::span<const TrainExample> batch,
                          const LossWeights& weights, ParamSet* grad = nullptr);

// ---- Finite-difference check ----------------------------------------------

struct BlockCheck {
  std::string name;
  std::size_t size = 0;
  std::size_t checked = 0;
  double max_rel_error = 0.0;  // over coordinates with a usable denominator
  double max_abs_error = 0.0;  // over near-zero coordinates
  bool passed = true;
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;
  bool passed = true;
};

using GradientFn = std::function<void(const Model&, std::span<const TrainExample>,
                                      const LossWeights&, ParamSet*)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;      // relative
  double abs_tolerance = 1e-7;  // for coordinates whose gradient is ~0
  double zero_threshold = 1e-6;
  std::size_t max_full_block = 10000;
  std::size_t samples = 200;    // per block above max_full_block
  std::uint64_t seed = 1;
};

// Central differences against `gradient` (the analytic gradient by default).
GradCheckReport FdCheck(const Model& model, std::span<const TrainExample> batch,
                        const LossWeights& weights, const GradCheckOptions& options = {},
                        const GradientFn& gradient = {});

// ---- Optimisation -----------------------------------------------------------

enum class OptimizerKind { kSgd, kAdam };

std::string_view ToString(OptimizerKind kind);
OptimizerKind ParseOptimizerKind(std::string_view text);

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 10;
  int batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::optional<double> clip_norm;
  LossWeights weights;

  void Validate() const;  // throws Error(kConfig)
  bool operator==(const TrainConfig&) const = default;
};

class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config, std::size_t num_params);
  void Step(ParamSet& params, const ParamSet& grad);

 private:
  TrainConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long long step_ = 0;
};

// Rescales grad in place so its L2 norm is at most max_norm; returns the
// norm before clipping.
double ClipGradient(ParamSet& grad, double max_norm);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> dev_jga;
};

// Mini-batch training from the model's current parameters. Example order is
// reshuffled every epoch from the config seed. Throws Error(kNumerical) on the
// first non-finite batch loss. `dev_eval`, if given, runs after each epoch.
std::vector<EpochLog> Train(Model& model, const TrainConfig& config,
                            std::span<const TrainExample> examples,
                            const std::function<double(const Model&)>& dev_eval = {},
                            const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace jointdst

#endif  // JOINTDST_TRAINING_H_
