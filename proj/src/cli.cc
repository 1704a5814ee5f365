#include "jointdst/cli.h"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "jointdst/checkpoint.h"
#include "jointdst/config.h"
#include "jointdst/dialogue.h"
#include "jointdst/evaluation.h"
#include "jointdst/io_util.h"
#include "jointdst/random.h"
#include "jointdst/synthgen.h"

namespace jointdst {

namespace fs = std::filesystem;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kIo:
      return kExitUsage;
    case ErrorKind::kNumerical:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

namespace {

SlotSchema GradCheckSchema() {
  return SlotSchema({
      {"hotel", "arrive_time", 0, ValueKind::kOpen, DataTypeGroup::kTime},
      {"hotel", "area", 0, ValueKind::kOpen, DataTypeGroup::kPlace},
      {"hotel", "parking", 0, ValueKind::kBoolean, DataTypeGroup::kOther},
      {"taxi", "leave_at", 0, ValueKind::kOpen, DataTypeGroup::kTime},
      {"taxi", "destination", 0, ValueKind::kOpen, DataTypeGroup::kPlace},
      {"taxi", "passengers", 0, ValueKind::kOpen, DataTypeGroup::kInteger},
  });
}

bool CoversAllHeads(const Corpus& corpus) {
  const SlotSchema& schema = corpus.schema;
  for (int s = 0; s < schema.size(); ++s) {
    if (schema.slot(s).value_kind != ValueKind::kOpen) continue;
    bool partner = false;
    for (int o = 0; o < schema.size(); ++o) {
      partner = partner || (o != s && schema.slot(o).value_kind == ValueKind::kOpen &&
                            schema.slot(o).data_type_group == schema.slot(s).data_type_group);
    }
    bool span = false, refer = false;
    for (const Dialogue& d : corpus.dialogues) {
      for (const TurnLabel& l : d.labels) {
        span = span || l.slots[s].gold_class == CopyClass::kSpan;
        refer = refer || l.slots[s].gold_class == CopyClass::kRefer;
      }
    }
    if (!span || (partner && !refer)) return false;
  }
  return true;
}

}  // namespace

GradCheckReport RunHeadGradCheck(HeadKind head, std::uint64_t seed, bool inject_fault,
                                 bool lstm_prev_class) {
  SynthConfig synth = DefaultSynthConfig(GradCheckSchema());
  synth.min_turns = 2;
  synth.max_turns = 3;
  synth.slot_activation.assign(synth.schema.size(), 0.6);
  synth.inform_prob = 0.2;
  synth.refer_prob = 0.4;
  synth.dontcare_prob = 0.1;
  synth.seed = seed;
  // Smallest corpus in which every open slot is span-labelled somewhere and
  // every slot with a same-group partner is refer-labelled somewhere.
  Corpus corpus;
  for (synth.num_dialogues = 2;; ++synth.num_dialogues) {
    corpus = Generate(synth);
    if (CoversAllHeads(corpus) || synth.num_dialogues >= 64) break;
  }

  ModelConfig mc;
  mc.head = head;
  mc.features.dim = 16;
  mc.lstm_input_dim = 4;
  mc.lstm_hidden_dim = 4;
  mc.lstm_prev_class = lstm_prev_class;
  Model model(corpus.schema, mc);
  Rng rng(MixHash(seed, HashBytes("gradcheck-params")));
  for (double& v : model.params().values()) v = 0.5 * rng.Normal();

  const std::vector<EncodedDialogue> encoded = EncodeCorpus(corpus, mc.features);
  const std::vector<TrainExample> batch = MakeExamples(corpus, encoded, AllIndices(corpus));

  GradCheckOptions options;
  options.seed = seed;
  GradientFn gradient;
  if (inject_fault) {
    gradient = [](const Model& m, std::span<const TrainExample> b, const LossWeights& w,
                  ParamSet* g) {
      ComputeLoss(m, b, w, g);
      VectorView first = g->Vector(0);
      first[0] += 1e-2 + 0.1 * std::abs(first[0]);
    };
  }
  return FdCheck(model, batch, LossWeights{}, options, gradient);
}

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> head;
  std::string out_dir;
  bool oracle_labels = false;
  std::optional<std::string> split;
  std::string corpus_path;
  std::vector<std::string> checkpoints;
  bool inject_fault = false;
};

struct Context {
  RunConfig config;
  std::string out_dir;
  std::ostream& out;
};

std::string Timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path);
}

std::string OutPath(const Context& ctx, const std::string& name) {
  return (fs::path(ctx.out_dir) / name).string();
}

// Volatile facts about the run live here so the reports themselves stay
// byte-identical across reruns.
void WriteRunMeta(const Context& ctx, const std::string& command,
                  const std::vector<std::string>& args) {
  json meta = {{"command", command}, {"args", args}, {"finished_at", Timestamp()}};
  WriteJsonFile(OutPath(ctx, "run_meta.json"), meta);
}

Corpus ObtainCorpus(const Context& ctx, const Options& opt) {
  Corpus corpus = opt.corpus_path.empty() ? Generate(ctx.config.synth) : LoadCorpus(opt.corpus_path);
  std::ostringstream problems;
  int count = 0;
  for (const Dialogue& d : corpus.dialogues) {
    for (const Violation& v : ValidateDialogue(d, corpus.schema)) {
      if (count < 20) problems << "\n  " << FormatViolation(d.id, v);
      ++count;
    }
  }
  if (count > 0) {
    throw Error(ErrorKind::kValidation,
                "corpus has " + std::to_string(count) + " violation(s):" + problems.str());
  }
  return corpus;
}

std::vector<std::pair<std::string, std::optional<Split>>> RequestedSplits(
    const Options& opt, std::vector<std::string> fallback) {
  std::vector<std::string> names = opt.split ? std::vector<std::string>{*opt.split} : fallback;
  std::vector<std::pair<std::string, std::optional<Split>>> out;
  for (const std::string& n : names) {
    if (n == "all") {
      out.emplace_back(n, std::nullopt);
    } else if (n == "train") {
      out.emplace_back(n, Split::kTrain);
    } else if (n == "dev") {
      out.emplace_back(n, Split::kDev);
    } else {
      out.emplace_back(n, Split::kTest);
    }
  }
  return out;
}

std::vector<std::string> CheckpointPaths(const Context& ctx, const Options& opt) {
  if (!opt.checkpoints.empty()) return opt.checkpoints;
  std::vector<std::string> found;
  if (opt.head) {
    found.push_back(OutPath(ctx, "checkpoint_" + *opt.head + ".json"));
    return found;
  }
  for (const char* h : {"independent", "mrf", "lstm"}) {
    const std::string p = OutPath(ctx, std::string("checkpoint_") + h + ".json");
    if (fs::exists(p)) found.push_back(p);
  }
  if (found.empty()) {
    throw Error(ErrorKind::kConfig,
                "no checkpoint given and none found in " + ctx.out_dir +
                    " (pass --checkpoint, or --oracle-labels)");
  }
  return found;
}

std::vector<std::string> SlotNames(const SlotSchema& schema) {
  std::vector<std::string> names;
  for (const SlotDef& s : schema.slots()) names.push_back(s.FullName());
  return names;
}

int CmdSynth(const Context& ctx) {
  const Corpus corpus = Generate(ctx.config.synth);
  SaveCorpus(corpus, OutPath(ctx, "corpus.json"));
  WriteJsonFile(OutPath(ctx, "corpus_stats.json"),
                CorpusStatsToJson(ComputeCorpusStats(corpus), corpus.schema));
  ctx.out << "wrote " << corpus.dialogues.size() << " dialogues to "
          << OutPath(ctx, "corpus.json") << "\n";
  return kExitOk;
}

int CmdTrain(const Context& ctx, const Options& opt) {
  const Corpus corpus = ObtainCorpus(ctx, opt);
  const RunConfig& cfg = ctx.config;
  const std::vector<EncodedDialogue> encoded = EncodeCorpus(corpus, cfg.model.features);
  const std::vector<int> train_idx = SplitIndices(corpus, cfg.evaluation, Split::kTrain);
  const std::vector<int> dev_idx = SplitIndices(corpus, cfg.evaluation, Split::kDev);
  const std::vector<TrainExample> examples = MakeExamples(corpus, encoded, train_idx);

  Model model(corpus.schema, cfg.model);
  model.Initialize(cfg.training.seed);
  std::function<double(const Model&)> dev_eval;
  if (!dev_idx.empty()) {
    dev_eval = [&](const Model& m) { return Jga(EvaluateModel(m, corpus, encoded, dev_idx)); };
  }
  const std::string head = std::string(ToString(cfg.model.head));
  json epochs = json::array();
  Train(model, cfg.training, examples, dev_eval, [&](const EpochLog& log) {
    json entry = {{"epoch", log.epoch}, {"mean_loss", log.mean_loss}};
    entry["dev_jga"] = log.dev_jga ? json(*log.dev_jga) : json(nullptr);
    epochs.push_back(entry);
    ctx.out << head << " epoch " << log.epoch << " loss " << log.mean_loss;
    if (log.dev_jga) ctx.out << " dev_jga " << *log.dev_jga;
    ctx.out << "\n";
  });
  SaveCheckpoint(model, cfg.training, OutPath(ctx, "checkpoint_" + head + ".json"));
  WriteJsonFile(OutPath(ctx, "train_log_" + head + ".json"),
                {{"format_version", kFormatVersion},
                 {"head", head},
                 {"train_dialogues", train_idx.size()},
                 {"train_turns", examples.size()},
                 {"dev_dialogues", dev_idx.size()},
                 {"epochs", epochs}});
  return kExitOk;
}

struct Evaluated {
  std::string label;
  EvalReport report;
};

// Runs the checkpoint (or gold labels) over one split.
EvalReport EvaluateSplit(const Corpus& corpus, const Model* model,
                         const std::vector<EncodedDialogue>& encoded, const std::string& label,
                         const std::string& split_name, std::span<const int> indices) {
  EvalReport report;
  report.slot_names = SlotNames(corpus.schema);
  report.label = label;
  report.split = split_name;
  report.tally = model ? EvaluateModel(*model, corpus, encoded, indices)
                       : EvaluateOracle(corpus, indices);
  return report;
}

void SaveReport(const Context& ctx, const EvalReport& report) {
  WriteJsonFile(OutPath(ctx, "report_" + report.label + "_" + report.split + ".json"),
                EvalReportToJson(report));
}

int CmdEval(const Context& ctx, const Options& opt) {
  const Corpus corpus = ObtainCorpus(ctx, opt);
  const auto splits = RequestedSplits(opt, {"dev", "test"});
  std::vector<JgaRow> rows;
  auto run = [&](const Model* model, const std::string& label,
                 const std::vector<EncodedDialogue>& encoded) {
    JgaRow row{label, std::nullopt, std::nullopt};
    for (const auto& [name, split] : splits) {
      const std::vector<int> idx = SplitIndices(corpus, ctx.config.evaluation, split);
      const EvalReport report = EvaluateSplit(corpus, model, encoded, label, name, idx);
      SaveReport(ctx, report);
      const double jga = Jga(report.tally);
      if (name == "dev") row.dev = jga;
      if (name == "test" || name == "all") row.test = jga;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.4f", jga);
      ctx.out << label << " " << name << " jga " << buf << " (" << report.tally.turns
              << " turns)\n";
    }
    rows.push_back(row);
  };
  if (opt.oracle_labels) {
    run(nullptr, "oracle", {});
  } else {
    for (const std::string& path : CheckpointPaths(ctx, opt)) {
      const Checkpoint cp = LoadCheckpoint(path, &corpus.schema);
      const std::vector<EncodedDialogue> encoded =
          EncodeCorpus(corpus, cp.model.config().features);
      run(&cp.model, std::string(ToString(cp.model.kind())), encoded);
    }
  }
  WriteText(OutPath(ctx, "jga_table.txt"), RenderJgaTable(rows));
  return kExitOk;
}

int CmdAnalyze(const Context& ctx, const Options& opt) {
  const Corpus corpus = ObtainCorpus(ctx, opt);
  const auto splits = RequestedSplits(opt, {"test"});
  auto run = [&](const Model* model, const std::string& label,
                 const std::vector<EncodedDialogue>& encoded) {
    for (const auto& [name, split] : splits) {
      const std::vector<int> idx = SplitIndices(corpus, ctx.config.evaluation, split);
      const EvalReport report = EvaluateSplit(corpus, model, encoded, label, name, idx);
      const std::string stem = label + "_" + name;
      WriteJsonFile(OutPath(ctx, "analysis_" + stem + ".json"), EvalReportToJson(report));
      WriteText(OutPath(ctx, "class_accuracy_" + stem + ".txt"), RenderClassAccuracyTable(report));
      WriteText(OutPath(ctx, "none_confusion_" + stem + ".txt"), RenderNoneConfusionTable(report));
      WriteText(OutPath(ctx, "confusion_" + stem + ".tsv"), RenderConfusionTsv(report));
      WriteText(OutPath(ctx, "diagnostics_" + stem + ".txt"), RenderDiagnostics(report));
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%.4f confusion_mass %.4f", Jga(report.tally),
                    TotalConfusionMass(report.tally));
      ctx.out << label << " " << name << " jga " << buf << "\n";
    }
  };
  if (opt.oracle_labels) {
    run(nullptr, "oracle", {});
  } else {
    for (const std::string& path : CheckpointPaths(ctx, opt)) {
      const Checkpoint cp = LoadCheckpoint(path, &corpus.schema);
      const std::vector<EncodedDialogue> encoded =
          EncodeCorpus(corpus, cp.model.config().features);
      run(&cp.model, std::string(ToString(cp.model.kind())), encoded);
    }
  }
  return kExitOk;
}

int CmdGradCheck(const Context& ctx, const Options& opt) {
  const std::uint64_t seed = opt.seed.value_or(ctx.config.training.seed);
  std::vector<HeadKind> heads = {HeadKind::kIndependent, HeadKind::kMrf, HeadKind::kLstm};
  if (opt.head) heads = {ParseHeadKind(*opt.head)};
  bool passed = true;
  json doc = json::array();
  for (HeadKind head : heads) {
    const GradCheckReport report = RunHeadGradCheck(head, seed, opt.inject_fault);
    json blocks = json::array();
    for (const BlockCheck& b : report.blocks) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-12s %-44s %6zu/%-6zu rel %.3e abs %.3e %s",
                    std::string(ToString(head)).c_str(), b.name.c_str(), b.checked, b.size,
                    b.max_rel_error, b.max_abs_error, b.passed ? "ok" : "FAIL");
      ctx.out << buf << "\n";
      blocks.push_back({{"name", b.name},
                        {"size", b.size},
                        {"checked", b.checked},
                        {"max_rel_error", b.max_rel_error},
                        {"max_abs_error", b.max_abs_error},
                        {"passed", b.passed}});
    }
    doc.push_back({{"head", ToString(head)}, {"passed", report.passed}, {"blocks", blocks}});
    passed = passed && report.passed;
  }
  WriteJsonFile(OutPath(ctx, "gradcheck.json"),
                {{"format_version", kFormatVersion}, {"seed", seed}, {"heads", doc}});
  ctx.out << "gradcheck " << (passed ? "passed" : "FAILED") << "\n";
  return passed ? kExitOk : kExitNumerical;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint slot-class decoding for dialogue state tracking", "jointdst"};
  app.require_subcommand(1, 1);
  Options opt;
  std::uint64_t seed = 0;
  std::string head;
  std::string split;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "overrides the training and synth seeds");
    sub->add_option("--out", opt.out_dir, "output directory");
  };
  auto add_corpus = [&](CLI::App* sub) {
    sub->add_option("--corpus", opt.corpus_path,
                    "corpus file (generated from the config when omitted)")
        ->check(CLI::ExistingFile);
  };
  auto add_head = [&](CLI::App* sub) {
    sub->add_option("--head", head, "class head")
        ->check(CLI::IsMember({"independent", "mrf", "lstm"}));
  };
  auto add_eval = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", opt.checkpoints, "checkpoint file (repeatable)")
        ->check(CLI::ExistingFile);
    sub->add_flag("--oracle-labels", opt.oracle_labels, "feed gold labels to the tracker");
    sub->add_option("--split", split, "dialogue split")
        ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth);
  CLI::App* train = app.add_subcommand("train", "train one head");
  add_common(train);
  add_corpus(train);
  add_head(train);
  CLI::App* eval = app.add_subcommand("eval", "joint goal accuracy per split");
  add_common(eval);
  add_corpus(eval);
  add_head(eval);
  add_eval(eval);
  CLI::App* analyze = app.add_subcommand("analyze", "class accuracy and confusion reports");
  add_common(analyze);
  add_corpus(analyze);
  add_head(analyze);
  add_eval(analyze);
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gradcheck);
  add_head(gradcheck);
  gradcheck->add_flag("--inject-gradient-fault", opt.inject_fault)->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opt.seed = seed;
  if (!head.empty()) opt.head = head;
  if (!split.empty()) opt.split = split;

  try {
    Context ctx{opt.config_path.empty() ? RunConfig{} : LoadRunConfig(opt.config_path), "", out};
    if (opt.seed) {
      ctx.config.training.seed = *opt.seed;
      ctx.config.synth.seed = *opt.seed;
    }
    if (opt.head) ctx.config.model.head = ParseHeadKind(*opt.head);
    if (!opt.out_dir.empty()) {
      ctx.out_dir = opt.out_dir;
    } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
      ctx.out_dir = env;
    } else {
      ctx.out_dir = ctx.config.output_dir;
    }
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create " + ctx.out_dir + ": " + ec.message());

    const std::string name = sub->get_name();
    int code = kExitOk;
    if (name == "synth") {
      code = CmdSynth(ctx);
    } else if (name == "train") {
      code = CmdTrain(ctx, opt);
    } else if (name == "eval") {
      code = CmdEval(ctx, opt);
    } else if (name == "analyze") {
      code = CmdAnalyze(ctx, opt);
    } else {
      code = CmdGradCheck(ctx, opt);
    }
    WriteRunMeta(ctx, name, args);
    return code;
  } catch (const Error& e) {
    err << "jointdst: " << ErrorKindName(e.kind()) << ": " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "jointdst: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace jointdst
