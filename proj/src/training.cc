#include "jointdst/training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "jointdst/error.h"
#include "jointdst/random.h"

namespace jointdst {

EncodedDialogue EncodeDialogue(const Dialogue& dialogue, const FeatureConfig& config) {
  EncodedDialogue out;
  out.turns.reserve(dialogue.turns.size());
  TokenList history;
  for (const DialogueTurn& turn : dialogue.turns) {
    history.insert(history.end(), turn.system_tokens.begin(), turn.system_tokens.end());
    history.insert(history.end(), turn.user_tokens.begin(), turn.user_tokens.end());
    out.turns.push_back(Encode(history, config));
  }
  return out;
}

std::vector<EncodedDialogue> EncodeCorpus(const Corpus& corpus, const FeatureConfig& config) {
  std::vector<EncodedDialogue> out;
  out.reserve(corpus.dialogues.size());
  for (const Dialogue& d : corpus.dialogues) out.push_back(EncodeDialogue(d, config));
  return out;
}

TrainExample MakeExample(const SlotSchema& schema, const TurnLabel& label,
                         const EncodedHistory& input) {
  if (static_cast<int>(label.slots.size()) != schema.size()) {
    throw Error(ErrorKind::kShape, "turn label does not cover every slot");
  }
  TrainExample ex;
  ex.input = &input;
  for (int s = 0; s < schema.size(); ++s) {
    const SlotLabel& sl = label.slots[s];
    const int k = ClassIndex(schema.slot(s).value_kind, sl.gold_class);
    if (k < 0) {
      throw Error(ErrorKind::kValidation, "class " + std::string(ToString(sl.gold_class)) +
                                              " not admissible for slot " +
                                              schema.slot(s).FullName());
    }
    ex.gold_class.push_back(k);
    ex.gold_copy.push_back(sl.gold_class);
    ex.gold_span.push_back(sl.gold_class == CopyClass::kSpan ? sl.gold_span : std::nullopt);
    ex.gold_refer.push_back(sl.gold_class == CopyClass::kRefer && sl.gold_refer_target
                                ? *sl.gold_refer_target
                                : -1);
  }
  return ex;
}

std::vector<TrainExample> MakeExamples(const Corpus& corpus,
                                       const std::vector<EncodedDialogue>& encoded,
                                       std::span<const int> dialogue_indices) {
  std::vector<TrainExample> out;
  for (int i : dialogue_indices) {
    const Dialogue& d = corpus.dialogues.at(i);
    const EncodedDialogue& e = encoded.at(i);
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      out.push_back(MakeExample(corpus.schema, d.labels[t], e.turns[t]));
    }
  }
  return out;
}

namespace {

// Returns -logp[gold] and, when requested, sets *dlogits to
// scale * (softmax - onehot(gold)). Entries at -inf get zero probability.
double SoftmaxXent(const Eigen::VectorXd& logp, int gold, double scale,
                   Eigen::VectorXd* dlogits) {
  if (dlogits) {
    *dlogits = logp.array().exp() * scale;
    (*dlogits)[gold] -= scale;
  }
  return -logp[gold];
}

void AddLinearGrad(ParamSet& grad, int weight, int bias, const Eigen::VectorXd& dlogits,
                   const Eigen::VectorXd& x) {
  AddOuterSkipZeros(grad.Matrix(weight), dlogits, x);
  grad.Vector(bias) += dlogits;
}

double IndependentClassLoss(const Model& model, const TrainExample& ex, double scale,
                            ParamSet* grad) {
  const SlotSchema& schema = model.schema();
  const Eigen::VectorXd& h = ex.input->pooled;
  const std::vector<Eigen::VectorXd> logp =
      IndependentForward(h, model.params(), model.independent(), schema);
  double loss = 0.0;
  Eigen::VectorXd d;
  for (int s = 0; s < schema.size(); ++s) {
    loss += SoftmaxXent(logp[s], ex.gold_class[s], scale, grad ? &d : nullptr);
    if (grad) {
      AddLinearGrad(*grad, model.independent().weight[s], model.independent().bias[s], d, h);
    }
  }
  return loss;
}

double MrfClassLoss(const Model& model, const TrainExample& ex, double scale,
                    ParamSet* grad) {
  const SlotSchema& schema = model.schema();
  const ParamSet& params = model.params();
  const MrfHeadParams& layout = model.mrf();
  const Eigen::VectorXd& h = ex.input->pooled;
  const std::vector<Unary> unaries = MrfUnaries(h, params, layout, schema);
  double loss = 0.0;
  for (std::size_t di = 0; di < schema.domains().size(); ++di) {
    const DomainInfo& domain = schema.domains()[di];
    std::vector<Unary> du;
    Assignment gold = 0;
    for (std::size_t j = 0; j < domain.slots.size(); ++j) {
      const int s = domain.slots[j];
      du.push_back(unaries[s]);
      if (ex.gold_class[s] != 0) gold |= Assignment{1} << j;
    }
    const ConstVectorView table = params.Vector(layout.table[di]);
    const std::span<const double> table_span(table.data(),
                                             static_cast<std::size_t>(table.size()));
    const MrfMarginals m = ComputeMrfMarginals(du, table_span);
    double gold_score = table[gold];
    for (std::size_t j = 0; j < du.size(); ++j) {
      gold_score += ((gold >> j) & 1U) ? du[j].active : du[j].inactive;
    }
    loss += m.log_partition - gold_score;
    if (!grad) continue;
    VectorView gtable = grad->Vector(layout.table[di]);
    for (std::size_t a = 0; a < m.assignment.size(); ++a) {
      gtable[a] += scale * (m.assignment[a] - (a == gold ? 1.0 : 0.0));
    }
    for (std::size_t j = 0; j < du.size(); ++j) {
      const int s = domain.slots[j];
      const double g = ((gold >> j) & 1U) ? 1.0 : 0.0;
      Eigen::VectorXd d(2);
      d[0] = scale * (m.slot_inactive[j] - (1.0 - g));
      d[1] = scale * (m.slot_active[j] - g);
      AddLinearGrad(*grad, layout.unary_weight[s], layout.unary_bias[s], d, h);
    }
  }
  Eigen::VectorXd d;
  for (int s = 0; s < schema.size(); ++s) {
    if (ex.gold_class[s] == 0) continue;
    const Eigen::VectorXd logp = LogSoftmax(MulSkipZeros(params.Matrix(layout.cond_weight[s]), h) +
                                            params.Vector(layout.cond_bias[s]));
    loss += SoftmaxXent(logp, ex.gold_class[s] - 1, scale, grad ? &d : nullptr);
    if (grad) AddLinearGrad(*grad, layout.cond_weight[s], layout.cond_bias[s], d, h);
  }
  return loss;
}

double LstmClassLoss(const Model& model, const TrainExample& ex, double scale,
                     ParamSet* grad) {
  const SlotSchema& schema = model.schema();
  const ParamSet& params = model.params();
  const LstmHeadParams& layout = model.lstm();
  const Eigen::VectorXd& h = ex.input->pooled;
  const LstmTrace trace = LstmForwardTrace(h, params, layout, schema, ex.gold_copy);
  const int n = schema.size();
  const int dim = static_cast<int>(h.size());
  const int hid = layout.hidden_dim;

  double loss = 0.0;
  std::vector<Eigen::VectorXd> dlogits(n);
  for (int s = 0; s < n; ++s) {
    loss += SoftmaxXent(trace.log_probs[s], ex.gold_class[s], scale,
                        grad ? &dlogits[s] : nullptr);
  }
  if (!grad) return loss;

  const ConstMatrixView wx = params.Matrix(layout.input_weight);
  const ConstMatrixView wh = params.Matrix(layout.recurrent_weight);
  MatrixView gwx = grad->Matrix(layout.input_weight);
  MatrixView gwh = grad->Matrix(layout.recurrent_weight);
  VectorView gbias = grad->Vector(layout.gate_bias);

  Eigen::VectorXd concat(dim + hid);
  concat.head(dim) = h;
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hid);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hid);
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(hid);
  Eigen::VectorXd dz(4 * hid);
  for (int s = n - 1; s >= 0; --s) {
    const LstmStep& step = trace.steps[s];
    const Eigen::VectorXd& h_prev = s > 0 ? trace.steps[s - 1].hidden : zeros;
    const Eigen::VectorXd& c_prev = s > 0 ? trace.steps[s - 1].cell : zeros;

    concat.tail(hid) = step.hidden;
    AddLinearGrad(*grad, layout.out_weight[s], layout.out_bias[s], dlogits[s], concat);
    const ConstMatrixView out_w = params.Matrix(layout.out_weight[s]);
    const Eigen::VectorXd dh =
        out_w.rightCols(hid).transpose() * dlogits[s] + dh_next;

    const Eigen::ArrayXd tanh_c = step.cell.array().tanh();
    const Eigen::ArrayXd dc =
        dh.array() * step.gate_o.array() * (1.0 - tanh_c.square()) + dc_next.array();
    const Eigen::ArrayXd di = dc * step.gate_g.array();
    const Eigen::ArrayXd df = dc * c_prev.array();
    const Eigen::ArrayXd dout = dh.array() * tanh_c;
    const Eigen::ArrayXd dg = dc * step.gate_i.array();
    const Eigen::ArrayXd i = step.gate_i.array();
    const Eigen::ArrayXd f = step.gate_f.array();
    const Eigen::ArrayXd o = step.gate_o.array();
    const Eigen::ArrayXd g = step.gate_g.array();
    dz.segment(0, hid) = (di * i * (1.0 - i)).matrix();
    dz.segment(hid, hid) = (df * f * (1.0 - f)).matrix();
    dz.segment(2 * hid, hid) = (dout * o * (1.0 - o)).matrix();
    dz.segment(3 * hid, hid) = (dg * (1.0 - g.square())).matrix();

    gwx.noalias() += dz * step.input.transpose();
    gwh.noalias() += dz * h_prev.transpose();
    gbias += dz;
    const Eigen::VectorXd dx = wx.transpose() * dz;
    AddLinearGrad(*grad, layout.proj_weight[s], layout.proj_bias[s], dx, h);
    if (layout.prev_class_embedding >= 0) {
      const int row = s == 0 ? 0 : 1 + static_cast<int>(ex.gold_copy[s - 1]);
      grad->Matrix(layout.prev_class_embedding).row(row) += dx.transpose();
    }
    dh_next = wh.transpose() * dz;
    dc_next = (dc * f).matrix();
  }
  return loss;
}

double SpanLoss(const Model& model, const TrainExample& ex, double scale, ParamSet* grad) {
  double loss = 0.0;
  const SpanHeadParams& layout = model.span();
  for (int s = 0; s < model.schema().size(); ++s) {
    if (!ex.gold_span[s]) continue;
    const TokenSpan gold = *ex.gold_span[s];
    const TokenFeatures& tokens = ex.input->tokens;
    if (gold.start < 0 || gold.end >= tokens.rows() || gold.start > gold.end) {
      throw Error(ErrorKind::kOutOfRange, "gold span outside encoded history");
    }
    const SpanScores scores = SpanForward(tokens, model.params(), layout, s);
    Eigen::VectorXd ds, de;
    loss += SoftmaxXent(LogSoftmax(scores.start), gold.start, scale, grad ? &ds : nullptr);
    loss += SoftmaxXent(LogSoftmax(scores.end), gold.end, scale, grad ? &de : nullptr);
    if (!grad) continue;
    grad->Vector(layout.start_weight[s]) += tokens.transpose() * ds;
    grad->Vector(layout.start_bias[s])[0] += ds.sum();
    grad->Vector(layout.end_weight[s]) += tokens.transpose() * de;
    grad->Vector(layout.end_bias[s])[0] += de.sum();
  }
  return loss;
}

double ReferLoss(const Model& model, const TrainExample& ex, double scale, ParamSet* grad) {
  double loss = 0.0;
  const ReferralHeadParams& layout = model.referral();
  const Eigen::VectorXd& h = ex.input->pooled;
  Eigen::VectorXd d;
  for (int s = 0; s < model.schema().size(); ++s) {
    const int target = ex.gold_refer[s];
    if (target < 0) continue;
    if (target == s || target >= model.schema().size()) {
      throw Error(ErrorKind::kOutOfRange, "invalid gold refer target");
    }
    const Eigen::VectorXd logp = ReferralForward(h, model.params(), layout, s);
    loss += SoftmaxXent(logp, target, scale, grad ? &d : nullptr);
    if (grad) AddLinearGrad(*grad, layout.weight[s], layout.bias[s], d, h);
  }
  return loss;
}

}  // namespace

LossBreakdown ComputeLoss(const Model& model, std::span<const TrainExample> batch,
                          const LossWeights& weights, ParamSet* grad) {
  if (grad) {
    if (grad->SameLayout(model.params())) {
      grad->SetZero();
    } else {
      *grad = model.params().ZerosLike();
    }
  }
  LossBreakdown out;
  if (batch.empty()) return out;
  const double norm = 1.0 / (static_cast<double>(batch.size()) * model.schema().size());
  for (const TrainExample& ex : batch) {
    if (ex.input == nullptr) throw Error(ErrorKind::kShape, "example has no input");
    if (static_cast<int>(ex.gold_class.size()) != model.schema().size()) {
      throw Error(ErrorKind::kShape, "example labels do not cover every slot");
    }
    const double cls_scale = norm * weights.cls;
    switch (model.kind()) {
      case HeadKind::kIndependent:
        out.cls += IndependentClassLoss(model, ex, cls_scale, grad);
        break;
      case HeadKind::kMrf:
        out.cls += MrfClassLoss(model, ex, cls_scale, grad);
        break;
      case HeadKind::kLstm:
        out.cls += LstmClassLoss(model, ex, cls_scale, grad);
        break;
    }
    out.span += SpanLoss(model, ex, norm * weights.span, grad);
    out.refer += ReferLoss(model, ex, norm * weights.refer, grad);
  }
  out.cls *= norm;
  out.span *= norm;
  out.refer *= norm;
  out.total = weights.cls * out.cls + weights.span * out.span + weights.refer * out.refer;
  return out;
}

GradCheckReport FdCheck(const Model& model, std::span<const TrainExample> batch,
                        const LossWeights& weights, const GradCheckOptions& options,
                        const GradientFn& gradient) {
  if (!(options.epsilon > 0.0)) throw Error(ErrorKind::kConfig, "epsilon must be positive");
  Model work = model;
  ParamSet analytic;
  if (gradient) {
    analytic = model.params().ZerosLike();
    gradient(model, batch, weights, &analytic);
  } else {
    ComputeLoss(model, batch, weights, &analytic);
  }
  GradCheckReport report;
  std::span<double> theta = work.params().values();
  for (int id = 0; id < work.params().num_blocks(); ++id) {
    const BlockInfo& info = work.params().block(id);
    BlockCheck check;
    check.name = info.name;
    check.size = info.size();
    std::vector<std::size_t> coords;
    if (info.size() <= options.max_full_block) {
      coords.resize(info.size());
      std::iota(coords.begin(), coords.end(), std::size_t{0});
    } else {
      Rng rng(MixHash(options.seed, HashBytes(info.name)));
      std::set<std::size_t> picked;
      while (picked.size() < options.samples) picked.insert(rng.Below(info.size()));
      coords.assign(picked.begin(), picked.end());
    }
    for (std::size_t c : coords) {
      const std::size_t i = info.offset + c;
      const double saved = theta[i];
      theta[i] = saved + options.epsilon;
      const double plus = ComputeLoss(work, batch, weights).total;
      theta[i] = saved - options.epsilon;
      const double minus = ComputeLoss(work, batch, weights).total;
      theta[i] = saved;
      const double fd = (plus - minus) / (2.0 * options.epsilon);
      const double a = analytic.values()[i];
      const double diff = std::abs(a - fd);
      const double scale = std::max(std::abs(a), std::abs(fd));
      if (!std::isfinite(diff)) {
        check.max_rel_error = std::numeric_limits<double>::infinity();
      } else if (scale < options.zero_threshold) {
        check.max_abs_error = std::max(check.max_abs_error, diff);
      } else {
        check.max_rel_error =
            std::max(check.max_rel_error, diff / std::max(scale, 1e-8));
      }
    }
    check.checked = coords.size();
    check.passed = check.max_rel_error < options.tolerance &&
                   check.max_abs_error < options.abs_tolerance;
    report.passed = report.passed && check.passed;
    report.blocks.push_back(std::move(check));
  }
  return report;
}

std::string_view ToString(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind ParseOptimizerKind(std::string_view text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorKind::kConfig, "unknown optimizer '" + std::string(text) + "'");
}

void TrainConfig::Validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::kConfig, "learning_rate must be a finite non-negative number");
  }
  if (epochs < 1) throw Error(ErrorKind::kConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorKind::kConfig, "Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw Error(ErrorKind::kConfig, "Adam epsilon must be > 0");
  if (clip_norm && !(*clip_norm > 0.0)) {
    throw Error(ErrorKind::kConfig, "clip_norm must be positive when set");
  }
  if (weights.cls < 0.0 || weights.span < 0.0 || weights.refer < 0.0) {
    throw Error(ErrorKind::kConfig, "loss weights must be non-negative");
  }
}

Optimizer::Optimizer(const TrainConfig& config, std::size_t num_params) : config_(config) {
  if (config_.optimizer == OptimizerKind::kAdam) {
    m_.assign(num_params, 0.0);
    v_.assign(num_params, 0.0);
  }
}

void Optimizer::Step(ParamSet& params, const ParamSet& grad) {
  std::span<double> theta = params.values();
  std::span<const double> g = grad.values();
  if (theta.size() != g.size()) throw Error(ErrorKind::kShape, "gradient layout mismatch");
  const double lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * g[i];
    return;
  }
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const auto n = static_cast<Eigen::Index>(theta.size());
  Eigen::Map<Eigen::ArrayXd> t(theta.data(), n);
  Eigen::Map<const Eigen::ArrayXd> ga(g.data(), n);
  Eigen::Map<Eigen::ArrayXd> m(m_.data(), n);
  Eigen::Map<Eigen::ArrayXd> v(v_.data(), n);
  m = b1 * m + (1.0 - b1) * ga;
  v = b2 * v + (1.0 - b2) * ga.square();
  // lr * mhat / (sqrt(vhat) + eps) with the bias corrections folded into scalars.
  const double step_size = lr * std::sqrt(c2) / c1;
  const double eps = config_.adam_epsilon * std::sqrt(c2);
  t -= step_size * m / (v.sqrt() + eps);
}

double ClipGradient(ParamSet& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (double& g : grad.values()) g *= f;
  }
  return norm;
}

std::vector<EpochLog> Train(Model& model, const TrainConfig& config,
                            std::span<const TrainExample> examples,
                            const std::function<double(const Model&)>& dev_eval,
                            const std::function<void(const EpochLog&)>& on_epoch) {
  config.Validate();
  if (examples.empty()) throw Error(ErrorKind::kValidation, "no training examples");
  Optimizer optimizer(config, model.params().size());
  Rng rng(MixHash(config.seed, HashBytes("example-order")));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ParamSet grad = model.params().ZerosLike();
  std::vector<TrainExample> batch;
  std::vector<EpochLog> log;
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.Shuffle(order);
    double sum = 0.0;
    for (std::size_t begin = 0, b = 0; begin < order.size(); begin += bs, ++b) {
      const std::size_t end = std::min(order.size(), begin + bs);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(examples[order[i]]);
      const LossBreakdown loss = ComputeLoss(model, batch, config.weights, &grad);
      if (!std::isfinite(loss.total)) {
        throw Error(ErrorKind::kNumerical, "non-finite loss at epoch " + std::to_string(epoch) +
                                               ", batch " + std::to_string(b + 1) +
                                               " (class " + std::to_string(loss.cls) +
                                               ", span " + std::to_string(loss.span) +
                                               ", refer " + std::to_string(loss.refer) + ")");
      }
      if (config.clip_norm) ClipGradient(grad, *config.clip_norm);
      optimizer.Step(model.params(), grad);
      sum += loss.total * static_cast<double>(end - begin);
    }
    EpochLog entry{epoch, sum / static_cast<double>(examples.size()), std::nullopt};
    if (dev_eval) entry.dev_jga = dev_eval(model);
    if (on_epoch) on_epoch(entry);
    log.push_back(entry);
  }
  return log;
}

}  // namespace jointdst
