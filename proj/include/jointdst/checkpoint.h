#ifndef JOINTDST_CHECKPOINT_H_
#define JOINTDST_CHECKPOINT_H_

#include <string>

#include "jointdst/model.h"
#include "jointdst/schema.h"
#include "jointdst/training.h"

namespace jointdst {

struct Checkpoint {
  Model model;
  TrainConfig train_config;
};

json CheckpointToJson(const Model& model, const TrainConfig& train_config);
// Errors: kVersion for an unknown format_version, kFingerprint when
// `expected` is given and differs from the stored schema, kCorrupt for
// anything malformed (including truncation).
Checkpoint CheckpointFromJson(const json& doc, const SlotSchema* expected = nullptr);

void SaveCheckpoint(const Model& model, const TrainConfig& train_config,
                    const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path, const SlotSchema* expected = nullptr);

}  // namespace jointdst

#endif  // JOINTDST_CHECKPOINT_H_
