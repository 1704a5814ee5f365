#include <cmath>

#include "doctest.h"
#include "jointdst/cli.h"
#include "jointdst/error.h"
#include "jointdst/evaluation.h"
#include "jointdst/synthgen.h"
#include "jointdst/training.h"
#include "test_util.h"

namespace jointdst {
namespace {

using testing::FillNormal;
using testing::Slot;

ModelConfig SmallConfig(HeadKind head, int dim = 16) {
  ModelConfig cfg;
  cfg.head = head;
  cfg.features.dim = dim;
  cfg.lstm_input_dim = 4;
  cfg.lstm_hidden_dim = 4;
  return cfg;
}

// A generated corpus over `schema` with its encodings; the examples point into
// `encoded`, so the fixture must outlive them.
struct Fixture {
  Corpus corpus;
  std::vector<EncodedDialogue> encoded;
  std::vector<TrainExample> examples;

  Fixture(const SlotSchema& schema, int dialogues, std::uint64_t seed, int dim = 16) {
    SynthConfig cfg = DefaultSynthConfig(schema);
    cfg.num_dialogues = dialogues;
    cfg.seed = seed;
    cfg.refer_prob = 0.3;
    cfg.slot_activation.assign(schema.size(), 0.5);
    corpus = Generate(cfg);
    FeatureConfig fc;
    fc.dim = dim;
    encoded = EncodeCorpus(corpus, fc);
    examples = MakeExamples(corpus, encoded, AllIndices(corpus));
  }
};

TrainExample AllNoneExample(const EncodedHistory& input, int n) {
  TrainExample ex;
  ex.input = &input;
  ex.gold_class.assign(n, 0);
  ex.gold_copy.assign(n, CopyClass::kNone);
  ex.gold_span.assign(n, std::nullopt);
  ex.gold_refer.assign(n, -1);
  return ex;
}

double LogSumExp(const std::vector<double>& v) {
  double z = 0.0;
  for (double x : v) z += std::exp(x);
  return std::log(z);
}

ParamSet Gradient(const Model& model, std::span<const TrainExample> batch) {
  ParamSet g;
  ComputeLoss(model, batch, LossWeights{}, &g);
  return g;
}

TEST_SUITE("training") {

TEST_CASE("zero parameters give log K per slot") {
  const Fixture fx(testing::SmallSchema(), 6, 1);
  for (HeadKind head : {HeadKind::kIndependent, HeadKind::kLstm}) {
    const Model model(fx.corpus.schema, SmallConfig(head));
    double mean_log_k = 0.0;
    for (const SlotDef& s : fx.corpus.schema.slots()) mean_log_k += std::log(s.num_classes());
    mean_log_k /= fx.corpus.schema.size();
    const LossBreakdown loss = ComputeLoss(model, fx.examples, LossWeights{});
    CHECK(loss.cls == doctest::Approx(mean_log_k).epsilon(1e-12));
  }
}

TEST_CASE("zero parameter mrf domain term is log 8") {
  const SlotSchema schema({Slot("d", "a", DataTypeGroup::kTime), Slot("d", "b", DataTypeGroup::kTime),
                           Slot("d", "c", DataTypeGroup::kPlace)});
  const Model model(schema, SmallConfig(HeadKind::kMrf));
  const EncodedHistory input = Encode(testing::Tokens("hello there"), model.config().features);
  const std::vector<TrainExample> batch = {AllNoneExample(input, 3)};
  // Loss is divided by turns x slots.
  CHECK(ComputeLoss(model, batch, LossWeights{}).cls * 3 ==
        doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("independent loss matches a naive per-example recomputation") {
  Fixture fx(testing::SmallSchema(), 8, 2);
  Model model(fx.corpus.schema, SmallConfig(HeadKind::kIndependent));
  Rng rng(3);
  FillNormal(model.params(), rng, 0.5);
  const SlotSchema& schema = fx.corpus.schema;
  double cls = 0.0, span = 0.0, refer = 0.0;
  for (const TrainExample& ex : fx.examples) {
    const Eigen::VectorXd& h = ex.input->pooled;
    for (int s = 0; s < schema.size(); ++s) {
      const auto w = model.params().Matrix(model.independent().weight[s]);
      std::vector<double> logits;
      for (Eigen::Index k = 0; k < w.rows(); ++k) {
        double z = model.params().Vector(model.independent().bias[s])[k];
        for (Eigen::Index j = 0; j < h.size(); ++j) z += w(k, j) * h[j];
        logits.push_back(z);
      }
      cls += LogSumExp(logits) - logits[ex.gold_class[s]];
      if (ex.gold_span[s]) {
        const SpanScores sc = SpanForward(ex.input->tokens, model.params(), model.span(), s);
        std::vector<double> st(sc.start.data(), sc.start.data() + sc.start.size());
        std::vector<double> en(sc.end.data(), sc.end.data() + sc.end.size());
        span += LogSumExp(st) - st[ex.gold_span[s]->start] + LogSumExp(en) - en[ex.gold_span[s]->end];
      }
      if (ex.gold_refer[s] >= 0) {
        const auto rw = model.params().Matrix(model.referral().weight[s]);
        std::vector<double> logits_r;
        double gold = 0.0;
        for (Eigen::Index k = 0; k < rw.rows(); ++k) {
          if (k == s) continue;
          double z = model.params().Vector(model.referral().bias[s])[k];
          for (Eigen::Index j = 0; j < h.size(); ++j) z += rw(k, j) * h[j];
          logits_r.push_back(z);
          if (k == ex.gold_refer[s]) gold = z;
        }
        refer += LogSumExp(logits_r) - gold;
      }
    }
  }
  const double norm = 1.0 / (static_cast<double>(fx.examples.size()) * schema.size());
  const LossBreakdown loss = ComputeLoss(model, fx.examples, LossWeights{});
  CHECK(std::abs(loss.cls - cls * norm) < 1e-12);
  CHECK(std::abs(loss.span - span * norm) < 1e-12);
  CHECK(std::abs(loss.refer - refer * norm) < 1e-12);
  CHECK(span > 0.0);
  CHECK(refer > 0.0);
  LossWeights w{0.5, 2.0, 3.0};
  const LossBreakdown weighted = ComputeLoss(model, fx.examples, w);
  CHECK(std::abs(weighted.total - (0.5 * loss.cls + 2.0 * loss.span + 3.0 * loss.refer)) < 1e-12);
}

TEST_CASE("mrf loss matches an enumeration log-likelihood") {
  Fixture fx(testing::SmallSchema(), 8, 4);
  Model model(fx.corpus.schema, SmallConfig(HeadKind::kMrf));
  Rng rng(5);
  FillNormal(model.params(), rng, 0.7);
  const SlotSchema& schema = fx.corpus.schema;
  double cls = 0.0;
  for (const TrainExample& ex : fx.examples) {
    const auto u = MrfUnaries(ex.input->pooled, model.params(), model.mrf(), schema);
    const auto cond = MrfConditionals(ex.input->pooled, model.params(), model.mrf(), schema);
    for (std::size_t d = 0; d < schema.domains().size(); ++d) {
      const DomainInfo& dom = schema.domains()[d];
      const auto table = model.params().Vector(model.mrf().table[d]);
      std::vector<double> scores;
      double gold = 0.0;
      for (unsigned a = 0; a < (1U << dom.slots.size()); ++a) {
        double sc = table[a];
        bool is_gold = true;
        for (std::size_t j = 0; j < dom.slots.size(); ++j) {
          const bool on = (a >> j) & 1U;
          sc += on ? u[dom.slots[j]].active : u[dom.slots[j]].inactive;
          is_gold = is_gold && (on == (ex.gold_class[dom.slots[j]] != 0));
        }
        scores.push_back(sc);
        if (is_gold) gold = sc;
      }
      cls += LogSumExp(scores) - gold;
    }
    for (int s = 0; s < schema.size(); ++s) {
      if (ex.gold_class[s] != 0) cls -= cond[s][ex.gold_class[s] - 1];
    }
  }
  const double norm = 1.0 / (static_cast<double>(fx.examples.size()) * schema.size());
  CHECK(std::abs(ComputeLoss(model, fx.examples, LossWeights{}).cls - cls * norm) < 1e-10);
}

TEST_CASE("lstm loss matches a forward recomputation") {
  Fixture fx(testing::SmallSchema(), 8, 6);
  for (bool prev_class : {false, true}) {
    ModelConfig cfg = SmallConfig(HeadKind::kLstm);
    cfg.lstm_prev_class = prev_class;
    Model model(fx.corpus.schema, cfg);
    Rng rng(7);
    FillNormal(model.params(), rng, 0.5);
    double cls = 0.0;
    for (const TrainExample& ex : fx.examples) {
      const LstmTrace trace =
          LstmForwardTrace(ex.input->pooled, model.params(), model.lstm(), fx.corpus.schema, ex.gold_copy);
      for (int s = 0; s < fx.corpus.schema.size(); ++s) cls -= trace.log_probs[s][ex.gold_class[s]];
    }
    const double norm = 1.0 / (static_cast<double>(fx.examples.size()) * fx.corpus.schema.size());
    CHECK(std::abs(ComputeLoss(model, fx.examples, LossWeights{}).cls - cls * norm) < 1e-12);
  }
}

TEST_CASE("single slot lstm with a silent cell equals the independent loss") {
  const SlotSchema schema({Slot("d", "a", DataTypeGroup::kTime)});
  const Fixture fx(schema, 10, 8);
  Model lstm(schema, SmallConfig(HeadKind::kLstm));
  Model indep(schema, SmallConfig(HeadKind::kIndependent));
  Rng rng(9);
  FillNormal(lstm.params(), rng, 0.5);
  ParamSet& p = lstm.params();
  p.Vector(lstm.lstm().recurrent_weight).setZero();
  p.Vector(lstm.lstm().gate_bias).setZero();
  p.Vector(lstm.lstm().proj_weight[0]).setZero();
  p.Vector(lstm.lstm().proj_bias[0]).setZero();
  indep.params().Matrix(indep.independent().weight[0]) = p.Matrix(lstm.lstm().out_weight[0]).leftCols(16);
  indep.params().Vector(indep.independent().bias[0]) = p.Vector(lstm.lstm().out_bias[0]);
  CHECK(std::abs(ComputeLoss(lstm, fx.examples, LossWeights{}).cls -
                 ComputeLoss(indep, fx.examples, LossWeights{}).cls) < 1e-12);
}

TEST_CASE("saturated models have near-zero loss and gradient") {
  const SlotSchema schema = testing::SmallSchema();
  const EncodedHistory input = Encode(testing::Tokens("nothing to see"), FeatureConfig{16});
  const std::vector<TrainExample> batch = {AllNoneExample(input, schema.size())};
  SUBCASE("independent") {
    Model model(schema, SmallConfig(HeadKind::kIndependent));
    for (int s = 0; s < schema.size(); ++s) model.params().Vector(model.independent().bias[s])[0] = 20.0;
    ParamSet g;
    CHECK(ComputeLoss(model, batch, LossWeights{}, &g).total < 1e-3);
    for (double v : g.values()) CHECK(std::abs(v) < 1e-3);
  }
  SUBCASE("mrf table") {
    Model model(schema, SmallConfig(HeadKind::kMrf));
    for (int t : model.mrf().table) model.params().Vector(t)[0] = 30.0;  // all-none assignment
    const LossBreakdown loss = ComputeLoss(model, batch, LossWeights{});
    CHECK(loss.cls * schema.size() < 1e-3);
  }
}

TEST_CASE("clique table gradient is marginal minus indicator") {
  SUBCASE("hand case") {
    const SlotSchema schema({Slot("d", "a", DataTypeGroup::kTime), Slot("d", "b", DataTypeGroup::kTime)});
    const Model model(schema, SmallConfig(HeadKind::kMrf));
    const EncodedHistory input = Encode(testing::Tokens("x"), model.config().features);
    const std::vector<TrainExample> batch = {AllNoneExample(input, 2)};
    const ParamSet g = Gradient(model, batch);
    const auto gt = g.Vector(model.mrf().table[0]);
    // One turn, two slots: the loss carries a factor 1/2.
    const std::vector<double> expect = {0.25 - 1.0, 0.25, 0.25, 0.25};
    for (int a = 0; a < 4; ++a) CHECK(gt[a] * 2.0 == doctest::Approx(expect[a]).epsilon(1e-14));
  }
  SUBCASE("random instances against the marginals") {
    Fixture fx(testing::SmallSchema(), 6, 10);
    Model model(fx.corpus.schema, SmallConfig(HeadKind::kMrf));
    Rng rng(11);
    FillNormal(model.params(), rng, 0.7);
    const SlotSchema& schema = fx.corpus.schema;
    const ParamSet g = Gradient(model, fx.examples);
    const double norm = 1.0 / (static_cast<double>(fx.examples.size()) * schema.size());
    for (std::size_t d = 0; d < schema.domains().size(); ++d) {
      const DomainInfo& dom = schema.domains()[d];
      const auto tv = model.params().Vector(model.mrf().table[d]);
      const std::vector<double> table(tv.data(), tv.data() + tv.size());
      std::vector<double> expect(table.size(), 0.0);
      for (const TrainExample& ex : fx.examples) {
        const auto u = MrfUnaries(ex.input->pooled, model.params(), model.mrf(), schema);
        std::vector<Unary> du;
        Assignment gold = 0;
        for (std::size_t j = 0; j < dom.slots.size(); ++j) {
          du.push_back(u[dom.slots[j]]);
          if (ex.gold_class[dom.slots[j]] != 0) gold |= 1U << j;
        }
        const MrfMarginals m = ComputeMrfMarginals(du, table);
        for (std::size_t a = 0; a < table.size(); ++a) expect[a] += norm * (m.assignment[a] - (a == gold));
      }
      const auto gt = g.Vector(model.mrf().table[d]);
      for (std::size_t a = 0; a < table.size(); ++a) CHECK(std::abs(gt[a] - expect[a]) < 1e-12);
    }
  }
}

TEST_CASE("finite differences agree for every head and block") {
  for (HeadKind head : {HeadKind::kIndependent, HeadKind::kMrf, HeadKind::kLstm}) {
    for (std::uint64_t seed : {1, 2}) {
      const GradCheckReport report = RunHeadGradCheck(head, seed);
      CHECK(report.passed);
      for (const BlockCheck& b : report.blocks) {
        INFO(b.name);
        CHECK(b.max_rel_error < 1e-4);
        CHECK(b.checked == b.size);
      }
    }
  }
  const GradCheckReport ext = RunHeadGradCheck(HeadKind::kLstm, 3, false, true);
  CHECK(ext.passed);
  bool saw_embedding = false;
  for (const BlockCheck& b : ext.blocks) saw_embedding = saw_embedding || b.name.find("prev_class") != std::string::npos;
  CHECK(saw_embedding);
}

TEST_CASE("corrupted gradient is caught") {
  const GradCheckReport report = RunHeadGradCheck(HeadKind::kMrf, 1, true);
  CHECK_FALSE(report.passed);
  CHECK_FALSE(report.blocks[0].passed);
  for (std::size_t i = 1; i < report.blocks.size(); ++i) CHECK(report.blocks[i].passed);
}

TEST_CASE("zero-gradient blocks use the absolute criterion") {
  // No refer labels: referral blocks get no gradient at all.
  const SlotSchema schema = testing::SmallSchema();
  Model model(schema, SmallConfig(HeadKind::kIndependent));
  Rng rng(13);
  FillNormal(model.params(), rng, 0.5);
  const EncodedHistory input = Encode(testing::Tokens("a b c"), model.config().features);
  const std::vector<TrainExample> batch = {AllNoneExample(input, schema.size())};
  const GradCheckReport report = FdCheck(model, batch, LossWeights{});
  CHECK(report.passed);
  bool found = false;
  for (const BlockCheck& b : report.blocks) {
    if (b.name.find("referral") == std::string::npos) continue;
    found = true;
    CHECK(b.max_rel_error == 0.0);
    CHECK(b.max_abs_error < 1e-7);
  }
  CHECK(found);
}

TEST_CASE("large blocks are sampled reproducibly") {
  ModelConfig cfg = SmallConfig(HeadKind::kIndependent, 2048);
  const SlotSchema schema({Slot("d", "a", DataTypeGroup::kTime)});
  Model model(schema, cfg);
  Rng rng(14);
  FillNormal(model.params(), rng, 0.1);
  const EncodedHistory input = Encode(testing::Tokens("a b c d e"), cfg.features);
  const std::vector<TrainExample> batch = {AllNoneExample(input, 1)};
  GradCheckOptions opt;
  opt.max_full_block = 1000;
  const GradCheckReport a = FdCheck(model, batch, LossWeights{}, opt);
  const GradCheckReport b = FdCheck(model, batch, LossWeights{}, opt);
  CHECK(a.passed);
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    if (a.blocks[i].size > 1000) CHECK(a.blocks[i].checked == 200);
    CHECK(a.blocks[i].max_rel_error == b.blocks[i].max_rel_error);
  }
}

TEST_CASE("one small sgd step lowers the loss of its example") {
  Fixture fx(testing::SmallSchema(), 6, 15);
  Rng rng(16);
  for (HeadKind head : {HeadKind::kIndependent, HeadKind::kMrf, HeadKind::kLstm}) {
    for (int trial = 0; trial < 10; ++trial) {
      Model model(fx.corpus.schema, SmallConfig(head));
      FillNormal(model.params(), rng, 0.5);
      const std::vector<TrainExample> one = {fx.examples[rng.Below(fx.examples.size())]};
      ParamSet g;
      const double before = ComputeLoss(model, one, LossWeights{}, &g).total;
      TrainConfig tc;
      tc.optimizer = OptimizerKind::kSgd;
      tc.learning_rate = 1e-2;
      Optimizer opt(tc, model.params().size());
      opt.Step(model.params(), g);
      CHECK(ComputeLoss(model, one, LossWeights{}).total < before + 1e-12);
    }
  }
}

TEST_CASE("learning rate zero leaves the initialisation untouched") {
  Fixture fx(testing::SmallSchema(), 6, 17);
  for (OptimizerKind kind : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    Model model(fx.corpus.schema, SmallConfig(HeadKind::kMrf));
    model.Initialize(3);
    const ParamSet init = model.params();
    TrainConfig tc;
    tc.learning_rate = 0.0;
    tc.epochs = 1;
    tc.optimizer = kind;
    Train(model, tc, fx.examples);
    CHECK(model.params() == init);
  }
}

TEST_CASE("training is deterministic") {
  Fixture fx(testing::SmallSchema(), 10, 18);
  auto run = [&](HeadKind head) {
    Model model(fx.corpus.schema, SmallConfig(head));
    model.Initialize(4);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    const auto log = Train(model, tc, fx.examples);
    return std::make_pair(model.params(), log);
  };
  for (HeadKind head : {HeadKind::kIndependent, HeadKind::kMrf, HeadKind::kLstm}) {
    const auto a = run(head);
    const auto b = run(head);
    CHECK(a.first == b.first);
    REQUIRE(a.second.size() == b.second.size());
    for (std::size_t i = 0; i < a.second.size(); ++i) CHECK(a.second[i].mean_loss == b.second[i].mean_loss);
  }
}

TEST_CASE("shared heads start identically whatever the class head") {
  const SlotSchema schema = testing::SmallSchema();
  Model a(schema, SmallConfig(HeadKind::kIndependent));
  Model b(schema, SmallConfig(HeadKind::kLstm));
  a.Initialize(9);
  b.Initialize(9);
  for (int s = 0; s < schema.size(); ++s) {
    CHECK(a.params().Vector(a.span().start_weight[s]) == b.params().Vector(b.span().start_weight[s]));
    CHECK(a.params().Vector(a.referral().weight[s]) == b.params().Vector(b.referral().weight[s]));
  }
  for (double v : a.params().values()) CHECK(std::abs(v) <= 0.05);
}

TEST_CASE("tiny corpus overfits") {
  Fixture fx(DefaultSynthSchema(), 8, 19, 512);
  Model model(fx.corpus.schema, SmallConfig(HeadKind::kIndependent, 512));
  model.Initialize(1);
  TrainConfig tc;
  tc.epochs = 200;
  tc.learning_rate = 0.1;  // pooled features are small, see the featurizer
  const auto log = Train(model, tc, fx.examples);
  int decreases = 0;
  for (std::size_t i = 1; i < log.size(); ++i) decreases += log[i].mean_loss < log[i - 1].mean_loss;
  CHECK(decreases >= 0.9 * (log.size() - 1));
  CHECK(Jga(EvaluateModel(model, fx.corpus, fx.encoded, AllIndices(fx.corpus))) == 1.0);
}

TEST_CASE("non-finite loss aborts") {
  Fixture fx(testing::SmallSchema(), 4, 20);
  Model model(fx.corpus.schema, SmallConfig(HeadKind::kIndependent));
  model.params().Vector(model.independent().bias[0])[0] = std::nan("");
  TrainConfig tc;
  try {
    Train(model, tc, fx.examples);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumerical);
  }
}

TEST_CASE("config and input validation") {
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.Validate(), Error);
  tc = TrainConfig{};
  tc.learning_rate = -1.0;
  CHECK_THROWS_AS(tc.Validate(), Error);
  tc = TrainConfig{};
  tc.clip_norm = 0.0;
  CHECK_THROWS_AS(tc.Validate(), Error);
  const SlotSchema schema = testing::SmallSchema();
  Model model(schema, SmallConfig(HeadKind::kIndependent));
  CHECK_THROWS_AS(Train(model, TrainConfig{}, {}), Error);
  const EncodedHistory input = Encode(testing::Tokens("a"), model.config().features);
  TrainExample bad = AllNoneExample(input, schema.size());
  bad.gold_class.pop_back();
  const std::vector<TrainExample> batch = {bad};
  CHECK_THROWS_AS(ComputeLoss(model, batch, LossWeights{}), Error);
}

TEST_CASE("gradient clipping") {
  const SlotSchema schema({Slot("d", "a", DataTypeGroup::kTime)});
  Model model(schema, SmallConfig(HeadKind::kIndependent, 8));
  ParamSet g = model.params().ZerosLike();
  g.values()[0] = 3.0;
  g.values()[1] = 4.0;
  CHECK(ClipGradient(g, 1.0) == doctest::Approx(5.0));
  CHECK(g.values()[0] == doctest::Approx(0.6));
  CHECK(g.values()[1] == doctest::Approx(0.8));
  CHECK(ClipGradient(g, 10.0) == doctest::Approx(1.0));
  CHECK(g.values()[1] == doctest::Approx(0.8));
}

}  // TEST_SUITE

}  // namespace
}  // namespace jointdst
