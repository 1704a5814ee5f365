#include "jointdst/config.h"

#include "jointdst/error.h"
#include "jointdst/io_util.h"
#include "jointdst/random.h"

namespace jointdst {

namespace {

[[noreturn]] void Bad(std::string_view what, std::string_view key, std::string_view expect) {
  throw Error(ErrorKind::kConfig, std::string(what) + "." + std::string(key) + ": expected " +
                                      std::string(expect));
}

void Keys(const json& doc, std::initializer_list<std::string_view> allowed,
          std::string_view what) {
  if (!doc.is_object()) throw Error(ErrorKind::kConfig, std::string(what) + ": expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool known = false;
    for (std::string_view key : allowed) known = known || key == it.key();
    if (!known) {
      throw Error(ErrorKind::kConfig,
                  std::string(what) + ": unknown key '" + it.key() + "'");
    }
  }
}

void Read(const json& doc, const char* key, double& out, std::string_view what) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_number()) Bad(what, key, "a number");
  out = it->get<double>();
}

void Read(const json& doc, const char* key, int& out, std::string_view what) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_number_integer()) Bad(what, key, "an integer");
  out = it->get<int>();
}

void Read(const json& doc, const char* key, std::uint64_t& out, std::string_view what) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  const bool ok = it->is_number_unsigned() ||
                  (it->is_number_integer() && it->get<std::int64_t>() >= 0);
  if (!ok) Bad(what, key, "a non-negative integer");
  out = it->get<std::uint64_t>();
}

void Read(const json& doc, const char* key, bool& out, std::string_view what) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_boolean()) Bad(what, key, "true or false");
  out = it->get<bool>();
}

void Read(const json& doc, const char* key, std::string& out, std::string_view what) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  if (!it->is_string()) Bad(what, key, "a string");
  out = it->get<std::string>();
}

std::vector<std::string> StringList(const json& doc, std::string_view what) {
  if (!doc.is_array()) throw Error(ErrorKind::kConfig, std::string(what) + ": expected a list");
  std::vector<std::string> out;
  for (const json& v : doc) {
    if (!v.is_string()) throw Error(ErrorKind::kConfig, std::string(what) + ": expected strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

int SlotIndex(const SlotSchema& schema, const std::string& full_name, std::string_view what) {
  const auto s = schema.FindByFullName(full_name);
  if (!s) throw Error(ErrorKind::kConfig, std::string(what) + ": unknown slot '" + full_name + "'");
  return *s;
}

DataTypeGroup GroupFromConfig(const std::string& name, std::string_view what) {
  try {
    return ParseDataTypeGroup(name);
  } catch (const Error&) {
    throw Error(ErrorKind::kConfig, std::string(what) + ": unknown group '" + name + "'");
  }
}

}  // namespace

std::string_view ToString(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

void EvaluationConfig::Validate() const {
  if (train_percent < 0 || dev_percent < 0 || train_percent + dev_percent > 100) {
    throw Error(ErrorKind::kConfig, "split percentages must be >= 0 and sum to <= 100");
  }
}

Split SplitOf(const std::string& dialogue_id, const EvaluationConfig& config) {
  const int bucket = static_cast<int>(HashBytes(dialogue_id, config.split_salt) % 100);
  if (bucket < config.train_percent) return Split::kTrain;
  if (bucket < config.train_percent + config.dev_percent) return Split::kDev;
  return Split::kTest;
}

std::vector<int> SplitIndices(const Corpus& corpus, const EvaluationConfig& config,
                              std::optional<Split> split) {
  std::vector<int> out;
  for (std::size_t i = 0; i < corpus.dialogues.size(); ++i) {
    if (!split || SplitOf(corpus.dialogues[i].id, config) == *split) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

json FeatureConfigToJson(const FeatureConfig& config) {
  return {{"dim", config.dim},
          {"ngram_orders", config.ngram_orders},
          {"hash_seed", config.hash_seed}};
}

FeatureConfig FeatureConfigFromJson(const json& doc) {
  FeatureConfig cfg;
  if (doc.is_null()) return cfg;
  Keys(doc, {"dim", "ngram_orders", "hash_seed"}, "featurizer");
  Read(doc, "dim", cfg.dim, "featurizer");
  Read(doc, "hash_seed", cfg.hash_seed, "featurizer");
  if (auto it = doc.find("ngram_orders"); it != doc.end()) {
    if (!it->is_array()) Bad("featurizer", "ngram_orders", "a list of integers");
    cfg.ngram_orders.clear();
    for (const json& v : *it) {
      if (!v.is_number_integer()) Bad("featurizer", "ngram_orders", "a list of integers");
      cfg.ngram_orders.push_back(v.get<int>());
    }
  }
  cfg.Validate();
  return cfg;
}

json ModelConfigToJson(const ModelConfig& config) {
  return {{"kind", std::string(ToString(config.head))},
          {"lstm_input_dim", config.lstm_input_dim},
          {"lstm_hidden_dim", config.lstm_hidden_dim},
          {"lstm_prev_class", config.lstm_prev_class}};
}

ModelConfig ModelConfigFromJson(const json& head, const json& featurizer) {
  ModelConfig cfg;
  cfg.features = FeatureConfigFromJson(featurizer);
  if (head.is_null()) return cfg;
  Keys(head, {"kind", "lstm_input_dim", "lstm_hidden_dim", "lstm_prev_class"}, "head");
  std::string kind(ToString(cfg.head));
  Read(head, "kind", kind, "head");
  cfg.head = ParseHeadKind(kind);
  Read(head, "lstm_input_dim", cfg.lstm_input_dim, "head");
  Read(head, "lstm_hidden_dim", cfg.lstm_hidden_dim, "head");
  Read(head, "lstm_prev_class", cfg.lstm_prev_class, "head");
  if (cfg.lstm_input_dim < 1 || cfg.lstm_hidden_dim < 1) {
    throw Error(ErrorKind::kConfig, "head: LSTM dims must be >= 1");
  }
  return cfg;
}

json TrainConfigToJson(const TrainConfig& config) {
  return {{"learning_rate", config.learning_rate},
          {"epochs", config.epochs},
          {"batch_size", config.batch_size},
          {"optimizer", std::string(ToString(config.optimizer))},
          {"beta1", config.beta1},
          {"beta2", config.beta2},
          {"adam_epsilon", config.adam_epsilon},
          {"seed", config.seed},
          {"clip_norm", config.clip_norm ? json(*config.clip_norm) : json(nullptr)},
          {"loss_weights",
           {{"class", config.weights.cls},
            {"span", config.weights.span},
            {"refer", config.weights.refer}}}};
}

TrainConfig TrainConfigFromJson(const json& doc) {
  TrainConfig cfg;
  if (doc.is_null()) return cfg;
  const char* what = "training";
  Keys(doc, {"learning_rate", "epochs", "batch_size", "optimizer", "beta1", "beta2",
             "adam_epsilon", "seed", "clip_norm", "loss_weights"},
       what);
  Read(doc, "learning_rate", cfg.learning_rate, what);
  Read(doc, "epochs", cfg.epochs, what);
  Read(doc, "batch_size", cfg.batch_size, what);
  std::string opt(ToString(cfg.optimizer));
  Read(doc, "optimizer", opt, what);
  cfg.optimizer = ParseOptimizerKind(opt);
  Read(doc, "beta1", cfg.beta1, what);
  Read(doc, "beta2", cfg.beta2, what);
  Read(doc, "adam_epsilon", cfg.adam_epsilon, what);
  Read(doc, "seed", cfg.seed, what);
  if (auto it = doc.find("clip_norm"); it != doc.end() && !it->is_null()) {
    if (!it->is_number()) Bad(what, "clip_norm", "a number or null");
    cfg.clip_norm = it->get<double>();
  }
  if (auto it = doc.find("loss_weights"); it != doc.end()) {
    Keys(*it, {"class", "span", "refer"}, "training.loss_weights");
    Read(*it, "class", cfg.weights.cls, "training.loss_weights");
    Read(*it, "span", cfg.weights.span, "training.loss_weights");
    Read(*it, "refer", cfg.weights.refer, "training.loss_weights");
  }
  cfg.Validate();
  return cfg;
}

json SynthConfigToJson(const SynthConfig& config) {
  const SlotSchema& schema = config.schema;
  json vocab = json::object();
  for (const auto& [g, values] : config.vocabularies) vocab[std::string(ToString(g))] = values;
  json slot_vocab = json::object();
  for (const auto& [s, values] : config.slot_vocabularies) {
    slot_vocab[schema.slot(s).FullName()] = values;
  }
  json templates = json::object();
  for (int s = 0; s < schema.size(); ++s) {
    templates[schema.slot(s).FullName()] = config.slot_templates[s];
  }
  json shared = json::object();
  for (const auto& [g, ts] : config.shared_templates) shared[std::string(ToString(g))] = ts;
  json activation = json::object();
  for (int s = 0; s < schema.size(); ++s) {
    activation[schema.slot(s).FullName()] = config.slot_activation[s];
  }
  json boosts = json::array();
  for (int i = 0; i < schema.size(); ++i) {
    for (int j = i + 1; j < schema.size(); ++j) {
      if (config.boosts[i][j] == 0.0) continue;
      boosts.push_back({{"slots", {schema.slot(i).FullName(), schema.slot(j).FullName()}},
                        {"value", config.boosts[i][j]}});
    }
  }
  return {{"schema", SchemaToJson(schema)},
          {"vocabularies", vocab},
          {"slot_vocabularies", slot_vocab},
          {"slot_templates", templates},
          {"shared_templates", shared},
          {"domain_activation_prob", config.domain_activation_prob},
          {"slot_activation", activation},
          {"boosts", boosts},
          {"inform_prob", config.inform_prob},
          {"refer_prob", config.refer_prob},
          {"dontcare_prob", config.dontcare_prob},
          {"shared_template_prob", config.shared_template_prob},
          {"acknowledge_prob", config.acknowledge_prob},
          {"domain_cue_prob", config.domain_cue_prob},
          {"max_filler", config.max_filler},
          {"min_turns", config.min_turns},
          {"max_turns", config.max_turns},
          {"num_dialogues", config.num_dialogues},
          {"seed", config.seed}};
}

SynthConfig SynthConfigFromJson(const json& doc) {
  if (doc.is_null()) return DefaultSynthConfig();
  const char* what = "synth";
  Keys(doc, {"schema", "schema_path", "vocabularies", "slot_vocabularies", "slot_templates",
             "shared_templates", "domain_activation_prob", "slot_activation", "boosts",
             "inform_prob", "refer_prob", "dontcare_prob", "shared_template_prob",
             "acknowledge_prob", "domain_cue_prob", "max_filler", "min_turns", "max_turns",
             "num_dialogues", "seed"},
       what);
  SlotSchema schema = DefaultSynthSchema();
  try {
    if (doc.contains("schema") && doc.contains("schema_path")) {
      throw Error(ErrorKind::kConfig, "synth: give schema or schema_path, not both");
    }
    if (auto it = doc.find("schema"); it != doc.end()) schema = SchemaFromJson(*it);
    if (auto it = doc.find("schema_path"); it != doc.end()) {
      if (!it->is_string()) Bad(what, "schema_path", "a string");
      schema = LoadSchema(it->get<std::string>());
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw Error(ErrorKind::kConfig, std::string("synth schema: ") + e.what());
  }
  SynthConfig cfg = DefaultSynthConfig(schema);
  if (auto it = doc.find("vocabularies"); it != doc.end()) {
    if (!it->is_object()) Bad(what, "vocabularies", "an object");
    for (auto g = it->begin(); g != it->end(); ++g) {
      cfg.vocabularies[GroupFromConfig(g.key(), "synth.vocabularies")] =
          StringList(g.value(), "synth.vocabularies");
    }
  }
  if (auto it = doc.find("slot_vocabularies"); it != doc.end()) {
    if (!it->is_object()) Bad(what, "slot_vocabularies", "an object");
    for (auto s = it->begin(); s != it->end(); ++s) {
      cfg.slot_vocabularies[SlotIndex(schema, s.key(), "synth.slot_vocabularies")] =
          StringList(s.value(), "synth.slot_vocabularies");
    }
  }
  if (auto it = doc.find("slot_templates"); it != doc.end()) {
    if (!it->is_object()) Bad(what, "slot_templates", "an object");
    for (auto s = it->begin(); s != it->end(); ++s) {
      cfg.slot_templates[SlotIndex(schema, s.key(), "synth.slot_templates")] =
          StringList(s.value(), "synth.slot_templates");
    }
  }
  if (auto it = doc.find("shared_templates"); it != doc.end()) {
    if (!it->is_object()) Bad(what, "shared_templates", "an object");
    cfg.shared_templates.clear();
    for (auto g = it->begin(); g != it->end(); ++g) {
      cfg.shared_templates[GroupFromConfig(g.key(), "synth.shared_templates")] =
          StringList(g.value(), "synth.shared_templates");
    }
  }
  if (auto it = doc.find("slot_activation"); it != doc.end()) {
    if (it->is_number()) {
      cfg.slot_activation.assign(schema.size(), it->get<double>());
    } else if (it->is_object()) {
      for (auto s = it->begin(); s != it->end(); ++s) {
        if (!s.value().is_number()) Bad(what, "slot_activation", "numbers");
        if (s.key() == "default") {
          cfg.slot_activation.assign(schema.size(), s.value().get<double>());
        }
      }
      for (auto s = it->begin(); s != it->end(); ++s) {
        if (s.key() == "default") continue;
        cfg.slot_activation[SlotIndex(schema, s.key(), "synth.slot_activation")] =
            s.value().get<double>();
      }
    } else {
      Bad(what, "slot_activation", "a number or an object");
    }
  }
  if (auto it = doc.find("boosts"); it != doc.end()) {
    if (!it->is_array()) Bad(what, "boosts", "a list");
    cfg.boosts.assign(schema.size(), std::vector<double>(schema.size(), 0.0));
    for (const json& entry : *it) {
      Keys(entry, {"slots", "value"}, "synth.boosts entry");
      const auto names = StringList(entry.value("slots", json::array()), "synth.boosts.slots");
      if (names.size() != 2) Bad(what, "boosts.slots", "two slot names");
      const int a = SlotIndex(schema, names[0], "synth.boosts");
      const int b = SlotIndex(schema, names[1], "synth.boosts");
      if (a == b) Bad(what, "boosts.slots", "two different slots");
      double v = 0.0;
      Read(entry, "value", v, "synth.boosts");
      cfg.boosts[a][b] = v;
      cfg.boosts[b][a] = v;
    }
  }
  Read(doc, "domain_activation_prob", cfg.domain_activation_prob, what);
  Read(doc, "inform_prob", cfg.inform_prob, what);
  Read(doc, "refer_prob", cfg.refer_prob, what);
  Read(doc, "dontcare_prob", cfg.dontcare_prob, what);
  Read(doc, "shared_template_prob", cfg.shared_template_prob, what);
  Read(doc, "acknowledge_prob", cfg.acknowledge_prob, what);
  Read(doc, "domain_cue_prob", cfg.domain_cue_prob, what);
  Read(doc, "max_filler", cfg.max_filler, what);
  Read(doc, "min_turns", cfg.min_turns, what);
  Read(doc, "max_turns", cfg.max_turns, what);
  Read(doc, "num_dialogues", cfg.num_dialogues, what);
  Read(doc, "seed", cfg.seed, what);
  cfg.Validate();
  return cfg;
}

json EvaluationConfigToJson(const EvaluationConfig& config) {
  return {{"train_percent", config.train_percent},
          {"dev_percent", config.dev_percent},
          {"split_salt", config.split_salt}};
}

EvaluationConfig EvaluationConfigFromJson(const json& doc) {
  EvaluationConfig cfg;
  if (doc.is_null()) return cfg;
  Keys(doc, {"train_percent", "dev_percent", "split_salt"}, "evaluation");
  Read(doc, "train_percent", cfg.train_percent, "evaluation");
  Read(doc, "dev_percent", cfg.dev_percent, "evaluation");
  Read(doc, "split_salt", cfg.split_salt, "evaluation");
  cfg.Validate();
  return cfg;
}

RunConfig RunConfigFromJson(const json& doc) {
  Keys(doc, {"featurizer", "head", "training", "synth", "evaluation", "output_dir", "seed"},
       "config");
  auto section = [&doc](const char* key) {
    auto it = doc.find(key);
    return it == doc.end() ? json(nullptr) : *it;
  };
  RunConfig cfg;
  try {
    cfg.model = ModelConfigFromJson(section("head"), section("featurizer"));
    cfg.training = TrainConfigFromJson(section("training"));
    cfg.synth = SynthConfigFromJson(section("synth"));
    cfg.evaluation = EvaluationConfigFromJson(section("evaluation"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    throw Error(ErrorKind::kConfig, e.what());
  }
  Read(doc, "output_dir", cfg.output_dir, "config");
  if (doc.contains("seed")) {
    std::uint64_t seed = 0;
    Read(doc, "seed", seed, "config");
    cfg.training.seed = seed;
    cfg.synth.seed = seed;
  }
  return cfg;
}

RunConfig LoadRunConfig(const std::string& path) {
  json doc;
  try {
    doc = ReadJsonFile(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  return RunConfigFromJson(doc);
}

json RunConfigToJson(const RunConfig& config) {
  return {{"featurizer", FeatureConfigToJson(config.model.features)},
          {"head", ModelConfigToJson(config.model)},
          {"training", TrainConfigToJson(config.training)},
          {"synth", SynthConfigToJson(config.synth)},
          {"evaluation", EvaluationConfigToJson(config.evaluation)},
          {"output_dir", config.output_dir}};
}

}  // namespace jointdst
