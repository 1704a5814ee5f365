#include "jointdst/checkpoint.h"

#include "jointdst/config.h"
#include "jointdst/error.h"
#include "jointdst/io_util.h"

namespace jointdst {

namespace {

constexpr const char* kKind = "jointdst-checkpoint";

[[noreturn]] void Corrupt(const std::string& message) {
  throw Error(ErrorKind::kCorrupt, "checkpoint: " + message);
}

}  // namespace

json CheckpointToJson(const Model& model, const TrainConfig& train_config) {
  const SlotSchema& schema = model.schema();
  json slot_order = json::array();
  for (const SlotDef& slot : schema.slots()) slot_order.push_back(slot.FullName());
  json blocks = json::array();
  const ParamSet& params = model.params();
  for (int id = 0; id < params.num_blocks(); ++id) {
    const BlockInfo& info = params.block(id);
    const ConstVectorView v = params.Vector(id);
    blocks.push_back({{"name", info.name},
                      {"shape", {info.rows, info.cols}},
                      {"data", std::vector<double>(v.data(), v.data() + v.size())}});
  }
  return {{"format_version", kFormatVersion},
          {"kind", kKind},
          {"schema_fingerprint", schema.FingerprintHex()},
          {"schema", SchemaToJson(schema)},
          {"slot_order", slot_order},
          {"featurizer", FeatureConfigToJson(model.config().features)},
          {"head", ModelConfigToJson(model.config())},
          {"train_config", TrainConfigToJson(train_config)},
          {"blocks", blocks}};
}

Checkpoint CheckpointFromJson(const json& doc, const SlotSchema* expected) {
  if (!doc.is_object()) Corrupt("expected an object");
  if (!doc.contains("format_version")) Corrupt("missing format_version");
  CheckFormatVersion(doc, "checkpoint");
  try {
    CheckKeys(doc, {"format_version", "kind", "schema_fingerprint", "schema", "slot_order",
                    "featurizer", "head", "train_config", "blocks"},
              "checkpoint");
    if (GetString(doc, "kind", "checkpoint") != kKind) Corrupt("not a checkpoint file");
    const SlotSchema schema = SchemaFromJson(RequireField(doc, "schema", "checkpoint"));
    const std::string fingerprint = GetString(doc, "schema_fingerprint", "checkpoint");
    if (fingerprint != schema.FingerprintHex()) {
      Corrupt("stored fingerprint does not match the embedded schema");
    }
    if (expected && expected->FingerprintHex() != fingerprint) {
      throw Error(ErrorKind::kFingerprint,
                  "checkpoint was trained on schema " + fingerprint + ", corpus has " +
                      expected->FingerprintHex());
    }
    const json& order = RequireField(doc, "slot_order", "checkpoint");
    if (!order.is_array() || static_cast<int>(order.size()) != schema.size()) {
      Corrupt("slot_order does not match the schema");
    }
    for (int s = 0; s < schema.size(); ++s) {
      if (!order[s].is_string() || order[s].get<std::string>() != schema.slot(s).FullName()) {
        Corrupt("slot_order does not match the schema");
      }
    }
    ModelConfig model_config = ModelConfigFromJson(RequireField(doc, "head", "checkpoint"),
                                                   RequireField(doc, "featurizer", "checkpoint"));
    TrainConfig train_config =
        TrainConfigFromJson(RequireField(doc, "train_config", "checkpoint"));
    Checkpoint cp{Model(schema, model_config), train_config};
    ParamSet& params = cp.model.params();
    const json& blocks = RequireField(doc, "blocks", "checkpoint");
    if (!blocks.is_array() || static_cast<int>(blocks.size()) != params.num_blocks()) {
      Corrupt("parameter blocks do not match the model layout");
    }
    for (int id = 0; id < params.num_blocks(); ++id) {
      const BlockInfo& info = params.block(id);
      const json& b = blocks[id];
      CheckKeys(b, {"name", "shape", "data"}, "checkpoint block");
      if (GetString(b, "name", "checkpoint block") != info.name) {
        Corrupt("block " + std::to_string(id) + " should be '" + info.name + "'");
      }
      const json& shape = RequireField(b, "shape", "checkpoint block");
      if (!shape.is_array() || shape.size() != 2 || shape[0] != info.rows ||
          shape[1] != info.cols) {
        Corrupt("block '" + info.name + "' has the wrong shape");
      }
      const json& data = RequireField(b, "data", "checkpoint block");
      if (!data.is_array() || data.size() != info.size()) {
        Corrupt("block '" + info.name + "' has the wrong number of values");
      }
      VectorView v = params.Vector(id);
      for (std::size_t i = 0; i < info.size(); ++i) {
        if (!data[i].is_number()) Corrupt("block '" + info.name + "' holds a non-number");
        v[static_cast<Eigen::Index>(i)] = data[i].get<double>();
      }
    }
    return cp;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFingerprint || e.kind() == ErrorKind::kCorrupt ||
        e.kind() == ErrorKind::kVersion) {
      throw;
    }
    Corrupt(e.what());
  } catch (const json::exception& e) {
    Corrupt(e.what());
  }
}

void SaveCheckpoint(const Model& model, const TrainConfig& train_config,
                    const std::string& path) {
  WriteJsonFile(path, CheckpointToJson(model, train_config), -1);
}

Checkpoint LoadCheckpoint(const std::string& path, const SlotSchema* expected) {
  json doc;
  try {
    doc = ReadJsonFile(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kParse) Corrupt(e.what());
    throw;
  }
  return CheckpointFromJson(doc, expected);
}

}  // namespace jointdst
