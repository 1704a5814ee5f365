#include <filesystem>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "doctest.h"
#include "jointdst/checkpoint.h"
#include "jointdst/error.h"
#include "jointdst/evaluation.h"
#include "jointdst/io_util.h"
#include "jointdst/synthgen.h"
#include "test_util.h"

namespace jointdst {
namespace {

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

Model RandomModel(HeadKind head, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.head = head;
  cfg.features.dim = 32;
  cfg.lstm_input_dim = 3;
  cfg.lstm_hidden_dim = 5;
  Model model(testing::SmallSchema(), cfg);
  Rng rng(seed);
  // Awkward doubles: subnormals, negative zero, long mantissas.
  for (double& v : model.params().values()) v = rng.Normal() * std::pow(10.0, rng.Between(-30, 5));
  model.params().values()[0] = -0.0;
  model.params().values()[1] = 4.9e-324;
  model.params().values()[2] = 0.1 + 0.2;
  return model;
}

TEST_SUITE("checkpoint") {

TEST_CASE("save and load is bit exact with identical predictions") {
  const std::string dir = testing::TempDir("checkpoint_roundtrip");
  SynthConfig synth = DefaultSynthConfig(testing::SmallSchema());
  synth.num_dialogues = 10;
  const Corpus corpus = Generate(synth);
  for (HeadKind head : {HeadKind::kIndependent, HeadKind::kMrf, HeadKind::kLstm}) {
    const Model model = RandomModel(head, 1 + static_cast<int>(head));
    TrainConfig tc;
    tc.learning_rate = 0.123;
    tc.clip_norm = 2.5;
    const std::string path = dir + "/" + std::string(ToString(head)) + ".json";
    SaveCheckpoint(model, tc, path);
    const Checkpoint back = LoadCheckpoint(path, &corpus.schema);
    CHECK(back.model.kind() == head);
    CHECK(back.model.config() == model.config());
    CHECK(back.train_config == tc);
    REQUIRE(back.model.params().SameLayout(model.params()));
    const auto a = model.params().values();
    const auto b = back.model.params().values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);
    }
    const std::vector<EncodedDialogue> enc = EncodeCorpus(corpus, model.config().features);
    for (const EncodedDialogue& e : enc) {
      CHECK(PredictDialogue(model, e) == PredictDialogue(back.model, e));
    }
    CHECK(EvaluateModel(model, corpus, enc, AllIndices(corpus)) ==
          EvaluateModel(back.model, corpus, enc, AllIndices(corpus)));
    // Saving the loaded model reproduces the file byte for byte.
    SaveCheckpoint(back.model, back.train_config, path + ".again");
    CHECK(ReadTextFile(path) == ReadTextFile(path + ".again"));
  }
}

TEST_CASE("schema fingerprint is checked on load") {
  const std::string dir = testing::TempDir("checkpoint_fingerprint");
  const Model model = RandomModel(HeadKind::kMrf, 4);
  SaveCheckpoint(model, TrainConfig{}, dir + "/cp.json");
  const SlotSchema other = DefaultSynthSchema();
  CHECK(KindOf([&] { LoadCheckpoint(dir + "/cp.json", &other); }) == ErrorKind::kFingerprint);
  CHECK_NOTHROW(LoadCheckpoint(dir + "/cp.json"));
}

TEST_CASE("truncated and tampered files are corrupt") {
  const std::string dir = testing::TempDir("checkpoint_corrupt");
  const Model model = RandomModel(HeadKind::kLstm, 5);
  SaveCheckpoint(model, TrainConfig{}, dir + "/cp.json");
  const std::string text = ReadTextFile(dir + "/cp.json");
  for (std::size_t cut : {std::size_t{1}, text.size() / 3, text.size() - 3}) {
    std::ofstream(dir + "/cut.json") << text.substr(0, cut);
    CHECK(KindOf([&] { LoadCheckpoint(dir + "/cut.json"); }) == ErrorKind::kCorrupt);
  }
  const json doc = CheckpointToJson(model, TrainConfig{});
  json missing = doc;
  missing["blocks"].erase(missing["blocks"].size() - 1);
  CHECK(KindOf([&] { CheckpointFromJson(missing); }) == ErrorKind::kCorrupt);
  json shape = doc;
  shape["blocks"][0]["shape"][0] = 99;
  CHECK(KindOf([&] { CheckpointFromJson(shape); }) == ErrorKind::kCorrupt);
  json values = doc;
  values["blocks"][0]["data"].erase(0);
  CHECK(KindOf([&] { CheckpointFromJson(values); }) == ErrorKind::kCorrupt);
  json kind = doc;
  kind["kind"] = "jointdst-eval-report";
  CHECK(KindOf([&] { CheckpointFromJson(kind); }) == ErrorKind::kCorrupt);
  json print = doc;
  print["schema_fingerprint"] = "0000000000000000";
  CHECK(KindOf([&] { CheckpointFromJson(print); }) == ErrorKind::kCorrupt);
  CHECK(KindOf([&] { LoadCheckpoint(dir + "/absent.json"); }) == ErrorKind::kIo);
}

TEST_CASE("unknown format version") {
  json doc = CheckpointToJson(RandomModel(HeadKind::kIndependent, 6), TrainConfig{});
  doc["format_version"] = 2;
  CHECK(KindOf([&] { CheckpointFromJson(doc); }) == ErrorKind::kVersion);
}

}  // TEST_SUITE

}  // namespace
}  // namespace jointdst
