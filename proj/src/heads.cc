#include "jointdst/heads.h"

#include <bit>
#include <cmath>
#include <limits>

#include "jointdst/error.h"

namespace jointdst {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void CheckPooled(const Eigen::VectorXd& pooled, const ParamSet& params, int block,
                 const char* what) {
  if (pooled.size() != params.block(block).cols) {
    throw Error(ErrorKind::kShape,
                std::string(what) + ": feature dim " + std::to_string(pooled.size()) +
                    " does not match parameter dim " +
                    std::to_string(params.block(block).cols));
  }
}

void CheckDomain(std::span<const Unary> unaries, std::span<const double> table) {
  if (unaries.empty() || unaries.size() > 12) {
    throw Error(ErrorKind::kShape, "MRF domain must have 1..12 slots");
  }
  if (table.size() != (std::size_t{1} << unaries.size())) {
    throw Error(ErrorKind::kShape, "clique table has " + std::to_string(table.size()) +
                                       " entries, expected 2^" +
                                       std::to_string(unaries.size()));
  }
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd LinearLayer(const ParamSet& params, int weight, int bias,
                            const Eigen::VectorXd& x) {
  return MulSkipZeros(params.Matrix(weight), x) + params.Vector(bias);
}

}  // namespace

Eigen::VectorXd LogSoftmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  if (!std::isfinite(max)) {
    return Eigen::VectorXd::Constant(logits.size(), std::nan(""));
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) sum += std::exp(logits[k] - max);
  const double log_z = max + std::log(sum);
  return logits.array() - log_z;
}

int ArgmaxLowest(const Eigen::VectorXd& values) {
  int best = 0;
  for (Eigen::Index k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = static_cast<int>(k);
  }
  return best;
}

std::vector<Eigen::VectorXd> IndependentForward(const Eigen::VectorXd& pooled,
                                                const ParamSet& params,
                                                const IndependentHeadParams& layout,
                                                const SlotSchema& schema) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(schema.size());
  for (int s = 0; s < schema.size(); ++s) {
    CheckPooled(pooled, params, layout.weight[s], "independent head");
    out.push_back(LogSoftmax(LinearLayer(params, layout.weight[s], layout.bias[s], pooled)));
  }
  return out;
}

std::vector<double> MrfScores(std::span<const Unary> unaries,
                              std::span<const double> table) {
  CheckDomain(unaries, table);
  const std::size_t count = table.size();
  double base = 0.0;
  std::vector<double> delta(unaries.size());
  for (std::size_t j = 0; j < unaries.size(); ++j) {
    base += unaries[j].inactive;
    delta[j] = unaries[j].active - unaries[j].inactive;
  }
  // unary_part[a] = unary_part[a without its lowest set bit] + that bit's delta.
  std::vector<double> unary_part(count);
  unary_part[0] = base;
  for (std::size_t a = 1; a < count; ++a) {
    const int low = std::countr_zero(static_cast<unsigned>(a));
    unary_part[a] = unary_part[a & (a - 1)] + delta[low];
  }
  std::vector<double> scores(count);
  for (std::size_t a = 0; a < count; ++a) scores[a] = table[a] + unary_part[a];
  return scores;
}

double MrfLogPartition(std::span<const Unary> unaries, std::span<const double> table) {
  const std::vector<double> scores = MrfScores(unaries, table);
  double max = kNegInf;
  for (double v : scores) max = std::max(max, v);
  double sum = 0.0;
  for (double v : scores) sum += std::exp(v - max);
  return max + std::log(sum);
}

double MrfAssignmentLogProb(Assignment a, std::span<const Unary> unaries,
                            std::span<const double> table) {
  CheckDomain(unaries, table);
  if (a >= table.size()) throw Error(ErrorKind::kShape, "assignment outside domain");
  double score = table[a];
  for (std::size_t j = 0; j < unaries.size(); ++j) {
    score += ((a >> j) & 1U) ? unaries[j].active : unaries[j].inactive;
  }
  return score - MrfLogPartition(unaries, table);
}

Assignment MrfMap(std::span<const Unary> unaries, std::span<const double> table) {
  const std::vector<double> scores = MrfScores(unaries, table);
  Assignment best = 0;
  for (Assignment a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[best]) best = a;
  }
  return best;
}

MrfMarginals ComputeMrfMarginals(std::span<const Unary> unaries,
                                 std::span<const double> table) {
  const std::vector<double> scores = MrfScores(unaries, table);
  MrfMarginals out;
  double max = kNegInf;
  for (double v : scores) max = std::max(max, v);
  double sum = 0.0;
  out.assignment.resize(scores.size());
  for (std::size_t a = 0; a < scores.size(); ++a) {
    out.assignment[a] = std::exp(scores[a] - max);
    sum += out.assignment[a];
  }
  out.log_partition = max + std::log(sum);
  for (double& p : out.assignment) p /= sum;
  out.slot_active.assign(unaries.size(), 0.0);
  out.slot_inactive.assign(unaries.size(), 0.0);
  for (std::size_t a = 0; a < scores.size(); ++a) {
    for (std::size_t j = 0; j < unaries.size(); ++j) {
      if ((a >> j) & 1U) {
        out.slot_active[j] += out.assignment[a];
      } else {
        out.slot_inactive[j] += out.assignment[a];
      }
    }
  }
  return out;
}

std::vector<Unary> MrfUnaries(const Eigen::VectorXd& pooled, const ParamSet& params,
                              const MrfHeadParams& layout, const SlotSchema& schema) {
  std::vector<Unary> out(schema.size());
  for (int s = 0; s < schema.size(); ++s) {
    CheckPooled(pooled, params, layout.unary_weight[s], "MRF unary");
    const Eigen::VectorXd u =
        LinearLayer(params, layout.unary_weight[s], layout.unary_bias[s], pooled);
    out[s] = Unary{u[0], u[1]};
  }
  return out;
}

std::vector<Eigen::VectorXd> MrfConditionals(const Eigen::VectorXd& pooled,
                                             const ParamSet& params,
                                             const MrfHeadParams& layout,
                                             const SlotSchema& schema) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(schema.size());
  for (int s = 0; s < schema.size(); ++s) {
    CheckPooled(pooled, params, layout.cond_weight[s], "MRF conditional");
    out.push_back(
        LogSoftmax(LinearLayer(params, layout.cond_weight[s], layout.cond_bias[s], pooled)));
  }
  return out;
}

namespace {

std::vector<Unary> DomainUnaries(const std::vector<Unary>& all, const DomainInfo& domain) {
  std::vector<Unary> out;
  out.reserve(domain.slots.size());
  for (int s : domain.slots) out.push_back(all[s]);
  return out;
}

}  // namespace

std::vector<Eigen::VectorXd> MrfClassDistribution(const Eigen::VectorXd& pooled,
                                                  const ParamSet& params,
                                                  const MrfHeadParams& layout,
                                                  const SlotSchema& schema) {
  const std::vector<Unary> unaries = MrfUnaries(pooled, params, layout, schema);
  const std::vector<Eigen::VectorXd> cond = MrfConditionals(pooled, params, layout, schema);
  std::vector<Eigen::VectorXd> out(schema.size());
  for (std::size_t d = 0; d < schema.domains().size(); ++d) {
    const DomainInfo& domain = schema.domains()[d];
    const std::vector<Unary> du = DomainUnaries(unaries, domain);
    const ConstVectorView table = params.Vector(layout.table[d]);
    const MrfMarginals m = ComputeMrfMarginals(
        du, std::span<const double>(table.data(), static_cast<std::size_t>(table.size())));
    for (std::size_t j = 0; j < domain.slots.size(); ++j) {
      const int s = domain.slots[j];
      const int k = schema.slot(s).num_classes();
      Eigen::VectorXd logp(k);
      logp[0] = std::log(m.slot_inactive[j]);
      const double log_active = std::log(m.slot_active[j]);
      for (int c = 1; c < k; ++c) logp[c] = log_active + cond[s][c - 1];
      out[s] = std::move(logp);
    }
  }
  return out;
}

std::vector<int> MrfDecode(const Eigen::VectorXd& pooled, const ParamSet& params,
                           const MrfHeadParams& layout, const SlotSchema& schema) {
  const std::vector<Unary> unaries = MrfUnaries(pooled, params, layout, schema);
  std::vector<int> out(schema.size(), 0);
  for (std::size_t d = 0; d < schema.domains().size(); ++d) {
    const DomainInfo& domain = schema.domains()[d];
    const std::vector<Unary> du = DomainUnaries(unaries, domain);
    const ConstVectorView table = params.Vector(layout.table[d]);
    const Assignment best = MrfMap(
        du, std::span<const double>(table.data(), static_cast<std::size_t>(table.size())));
    for (std::size_t j = 0; j < domain.slots.size(); ++j) {
      if (!((best >> j) & 1U)) continue;
      const int s = domain.slots[j];
      const Eigen::VectorXd logits =
          LinearLayer(params, layout.cond_weight[s], layout.cond_bias[s], pooled);
      out[s] = 1 + ArgmaxLowest(logits);
    }
  }
  return out;
}

LstmTrace LstmForwardTrace(const Eigen::VectorXd& pooled, const ParamSet& params,
                           const LstmHeadParams& layout, const SlotSchema& schema,
                           std::span<const CopyClass> teacher_classes) {
  const int hidden = layout.hidden_dim;
  const int dim = static_cast<int>(pooled.size());
  const bool use_prev = layout.prev_class_embedding >= 0;
  if (use_prev && !teacher_classes.empty() &&
      static_cast<int>(teacher_classes.size()) < schema.size()) {
    throw Error(ErrorKind::kShape, "teacher classes do not cover every slot");
  }
  const ConstMatrixView wx = params.Matrix(layout.input_weight);
  const ConstMatrixView wh = params.Matrix(layout.recurrent_weight);
  const ConstVectorView bias = params.Vector(layout.gate_bias);

  LstmTrace trace;
  trace.steps.reserve(schema.size());
  trace.log_probs.reserve(schema.size());
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd concat(dim + hidden);
  concat.head(dim) = pooled;
  CopyClass prev_class = CopyClass::kNone;
  for (int s = 0; s < schema.size(); ++s) {
    CheckPooled(pooled, params, layout.proj_weight[s], "LSTM projection");
    LstmStep step;
    step.input = LinearLayer(params, layout.proj_weight[s], layout.proj_bias[s], pooled);
    if (use_prev) {
      const int row = s == 0 ? 0 : 1 + static_cast<int>(prev_class);
      step.input += params.Matrix(layout.prev_class_embedding).row(row).transpose();
    }
    const Eigen::VectorXd z = wx * step.input + wh * h_prev + bias;
    step.gate_i = z.segment(0, hidden).unaryExpr(&Sigmoid);
    step.gate_f = z.segment(hidden, hidden).unaryExpr(&Sigmoid);
    step.gate_o = z.segment(2 * hidden, hidden).unaryExpr(&Sigmoid);
    step.gate_g = z.segment(3 * hidden, hidden).array().tanh();
    step.cell = step.gate_f.cwiseProduct(c_prev) + step.gate_i.cwiseProduct(step.gate_g);
    step.hidden = step.gate_o.cwiseProduct(step.cell.array().tanh().matrix());
    concat.tail(hidden) = step.hidden;
    trace.log_probs.push_back(
        LogSoftmax(LinearLayer(params, layout.out_weight[s], layout.out_bias[s], concat)));
    if (use_prev) {
      prev_class = teacher_classes.empty()
                       ? schema.slot(s).ClassAt(ArgmaxLowest(trace.log_probs.back()))
                       : teacher_classes[s];
    }
    h_prev = step.hidden;
    c_prev = step.cell;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

std::vector<Eigen::VectorXd> LstmForward(const Eigen::VectorXd& pooled,
                                         const ParamSet& params,
                                         const LstmHeadParams& layout,
                                         const SlotSchema& schema) {
  return LstmForwardTrace(pooled, params, layout, schema).log_probs;
}

SpanScores SpanForward(const TokenFeatures& tokens, const ParamSet& params,
                       const SpanHeadParams& layout, int slot) {
  if (static_cast<std::size_t>(tokens.cols()) != params.block(layout.start_weight[slot]).size()) {
    throw Error(ErrorKind::kShape, "span head: token feature dim mismatch");
  }
  SpanScores out;
  out.start = tokens * params.Vector(layout.start_weight[slot]);
  out.start.array() += params.Vector(layout.start_bias[slot])[0];
  out.end = tokens * params.Vector(layout.end_weight[slot]);
  out.end.array() += params.Vector(layout.end_bias[slot])[0];
  return out;
}

TokenSpan DecodeSpan(const SpanScores& scores) {
  const Eigen::Index n = scores.start.size();
  if (n == 0) throw Error(ErrorKind::kEmptyHistory, "cannot decode a span over 0 tokens");
  const int start = ArgmaxLowest(scores.start);
  int end = start;
  for (Eigen::Index i = start + 1; i < n; ++i) {
    if (scores.end[i] > scores.end[end]) end = static_cast<int>(i);
  }
  return TokenSpan{start, end};
}

Eigen::VectorXd ReferralForward(const Eigen::VectorXd& pooled, const ParamSet& params,
                                const ReferralHeadParams& layout, int slot) {
  CheckPooled(pooled, params, layout.weight[slot], "referral head");
  Eigen::VectorXd logits = LinearLayer(params, layout.weight[slot], layout.bias[slot], pooled);
  logits[slot] = kNegInf;
  return LogSoftmax(logits);
}

}  // namespace jointdst
