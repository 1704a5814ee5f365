#ifndef JOINTDST_HEADS_H_
#define JOINTDST_HEADS_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jointdst/dialogue.h"
#include "jointdst/featurizer.h"
#include "jointdst/params.h"
#include "jointdst/schema.h"

namespace jointdst {

// Block ids into a ParamSet. Index by slot (or by domain for clique tables).

struct IndependentHeadParams {
  std::vector<int> weight;  // K_s x D
  std::vector<int> bias;    // K_s
};

struct MrfHeadParams {
  std::vector<int> unary_weight;  // 2 x D, row 0 = none, row 1 = active
  std::vector<int> unary_bias;    // 2
  std::vector<int> table;         // per domain, 2^{N_d}
  std::vector<int> cond_weight;   // (K_s - 1) x D over the non-none classes
  std::vector<int> cond_bias;     // K_s - 1
};

struct LstmHeadParams {
  int input_dim = 0;   // D'
  int hidden_dim = 0;  // H
  // Shared cell; gate rows are ordered input, forget, output, candidate.
  int input_weight = -1;      // 4H x D'
  int recurrent_weight = -1;  // 4H x H
  int gate_bias = -1;         // 4H
  std::vector<int> proj_weight;  // D' x D
  std::vector<int> proj_bias;    // D'
  std::vector<int> out_weight;   // K_s x (D + H)
  std::vector<int> out_bias;     // K_s
  // Optional extension: embedding of the previous slot's class added to the
  // cell input. Row 0 is the start symbol, row 1 + c is CopyClass c.
  int prev_class_embedding = -1;  // (1 + kNumCopyClasses) x D'
};

struct SpanHeadParams {
  std::vector<int> start_weight;  // D
  std::vector<int> start_bias;    // 1
  std::vector<int> end_weight;    // D
  std::vector<int> end_bias;      // 1
};

struct ReferralHeadParams {
  std::vector<int> weight;  // (N + 1) x D, row N = no target
  std::vector<int> bias;    // N + 1
};

// Log-softmax that tolerates -inf entries (masked classes).
Eigen::VectorXd LogSoftmax(const Eigen::VectorXd& logits);
// Index of the largest entry; ties go to the lowest index.
int ArgmaxLowest(const Eigen::VectorXd& values);

// ---- Independent head -----------------------------------------------------

// Per-slot log P(C_s | X) over the slot's admissible classes.
std::vector<Eigen::VectorXd> IndependentForward(const Eigen::VectorXd& pooled,
                                                const ParamSet& params,
                                                const IndependentHeadParams& layout,
                                                const SlotSchema& schema);

// ---- Exact MRF inference over one domain ----------------------------------

// Phi_s(c', x) for c' = 0 (none) and c' = 1 (active).
struct Unary {
  double inactive = 0.0;
  double active = 0.0;
};

// Bit j of an assignment is the active indicator of the domain's j-th slot.
using Assignment = std::uint32_t;

// Unnormalised log score: table[a] + sum_j unary_j(a_j), for every a.
std::vector<double> MrfScores(std::span<const Unary> unaries,
                              std::span<const double> table);
double MrfLogPartition(std::span<const Unary> unaries, std::span<const double> table);
double MrfAssignmentLogProb(Assignment a, std::span<const Unary> unaries,
                            std::span<const double> table);
// Highest-scoring assignment; ties go to the smaller encoding.
Assignment MrfMap(std::span<const Unary> unaries, std::span<const double> table);

struct MrfMarginals {
  double log_partition = 0.0;
  std::vector<double> assignment;     // P(a), 2^{N_d} entries
  std::vector<double> slot_active;    // P(c'_j = 1)
  std::vector<double> slot_inactive;  // P(c'_j = 0), summed directly
};

MrfMarginals ComputeMrfMarginals(std::span<const Unary> unaries,
                                 std::span<const double> table);

// ---- MRF head --------------------------------------------------------------

std::vector<Unary> MrfUnaries(const Eigen::VectorXd& pooled, const ParamSet& params,
                              const MrfHeadParams& layout, const SlotSchema& schema);
// Per-slot log P(C_s = c | C'_s = 1) over the non-none classes.
std::vector<Eigen::VectorXd> MrfConditionals(const Eigen::VectorXd& pooled,
                                             const ParamSet& params,
                                             const MrfHeadParams& layout,
                                             const SlotSchema& schema);
// Per-slot log P(C_s) over all admissible classes:
//   P(none) = P(C'_s = 0),  P(c) = P(C'_s = 1) P(c | C'_s = 1),
// with P(C'_s) the exact marginal of the slot's domain MRF.
std::vector<Eigen::VectorXd> MrfClassDistribution(const Eigen::VectorXd& pooled,
                                                  const ParamSet& params,
                                                  const MrfHeadParams& layout,
                                                  const SlotSchema& schema);
// Joint MAP of the none indicators per domain; active slots then take the
// argmax non-none class. Returns admissible-class indices per slot.
std::vector<int> MrfDecode(const Eigen::VectorXd& pooled, const ParamSet& params,
                           const MrfHeadParams& layout, const SlotSchema& schema);

// ---- LSTM head -------------------------------------------------------------

struct LstmStep {
  Eigen::VectorXd input;  // f^lstm_s(h_X) (+ previous-class embedding)
  Eigen::VectorXd gate_i, gate_f, gate_o, gate_g;
  Eigen::VectorXd cell;
  Eigen::VectorXd hidden;
};

struct LstmTrace {
  std::vector<LstmStep> steps;
  std::vector<Eigen::VectorXd> log_probs;  // per slot
};

// Runs the cell over the slots in canonical order from a zero state. With the
// previous-class extension enabled, step s also receives the embedding of slot
// s - 1's class: `teacher_classes[s - 1]` when given (training), otherwise the
// head's own argmax (greedy decoding). Without the extension the argument is
// ignored.
LstmTrace LstmForwardTrace(const Eigen::VectorXd& pooled, const ParamSet& params,
                           const LstmHeadParams& layout, const SlotSchema& schema,
                           std::span<const CopyClass> teacher_classes = {});
std::vector<Eigen::VectorXd> LstmForward(const Eigen::VectorXd& pooled,
                                         const ParamSet& params,
                                         const LstmHeadParams& layout,
                                         const SlotSchema& schema);

// ---- Span and referral heads ----------------------------------------------

struct SpanScores {
  Eigen::VectorXd start;
  Eigen::VectorXd end;
};

SpanScores SpanForward(const TokenFeatures& tokens, const ParamSet& params,
                       const SpanHeadParams& layout, int slot);
// start = argmax start score, end = argmax end score over positions >= start.
// Throws Error(kEmptyHistory) when there are no tokens.
TokenSpan DecodeSpan(const SpanScores& scores);

// Log-distribution over N + 1 targets; the slot itself is masked to -inf.
Eigen::VectorXd ReferralForward(const Eigen::VectorXd& pooled, const ParamSet& params,
                                const ReferralHeadParams& layout, int slot);

}  // namespace jointdst

#endif  // JOINTDST_HEADS_H_
