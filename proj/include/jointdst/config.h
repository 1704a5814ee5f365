#ifndef JOINTDST_CONFIG_H_
#define JOINTDST_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jointdst/dialogue.h"
#include "jointdst/featurizer.h"
#include "jointdst/model.h"
#include "jointdst/schema.h"
#include "jointdst/synthgen.h"
#include "jointdst/training.h"

namespace jointdst {

enum class Split { kTrain, kDev, kTest };

std::string_view ToString(Split split);

struct EvaluationConfig {
  // Dialogues hash into 100 buckets: [0, train) train, [train, train + dev)
  // dev, the rest test.
  int train_percent = 80;
  int dev_percent = 10;
  std::uint64_t split_salt = 0x5d1a7c0de;

  void Validate() const;
  bool operator==(const EvaluationConfig&) const = default;
};

// Stable in the dialogue id alone, so adding dialogues never moves others.
Split SplitOf(const std::string& dialogue_id, const EvaluationConfig& config);
// Dialogue indices in corpus order; every dialogue when `split` is empty.
std::vector<int> SplitIndices(const Corpus& corpus, const EvaluationConfig& config,
                              std::optional<Split> split);

struct RunConfig {
  ModelConfig model;
  TrainConfig training;
  SynthConfig synth = DefaultSynthConfig();
  EvaluationConfig evaluation;
  std::string output_dir = "out";
};

// Every section and key is optional; unknown keys throw Error(kConfig).
// Sections: featurizer, head, training, synth, evaluation; top-level keys
// output_dir and seed (seed sets both training.seed and synth.seed).
RunConfig RunConfigFromJson(const json& doc);
RunConfig LoadRunConfig(const std::string& path);
json RunConfigToJson(const RunConfig& config);

json FeatureConfigToJson(const FeatureConfig& config);
FeatureConfig FeatureConfigFromJson(const json& doc);
// The "head" section plus the featurizer.
json ModelConfigToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(const json& head, const json& featurizer);
json TrainConfigToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const json& doc);
json SynthConfigToJson(const SynthConfig& config);
SynthConfig SynthConfigFromJson(const json& doc);
json EvaluationConfigToJson(const EvaluationConfig& config);
EvaluationConfig EvaluationConfigFromJson(const json& doc);

}  // namespace jointdst

#endif  // JOINTDST_CONFIG_H_
