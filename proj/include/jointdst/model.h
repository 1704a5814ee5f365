#ifndef JOINTDST_MODEL_H_
#define JOINTDST_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "jointdst/featurizer.h"
#include "jointdst/heads.h"
#include "jointdst/params.h"
#include "jointdst/schema.h"
#include "jointdst/tracker.h"

namespace jointdst {

enum class HeadKind { kIndependent, kMrf, kLstm };

std::string_view ToString(HeadKind kind);
HeadKind ParseHeadKind(std::string_view text);

struct ModelConfig {
  HeadKind head = HeadKind::kIndependent;
  FeatureConfig features;
  int lstm_input_dim = 16;   // D'
  int lstm_hidden_dim = 16;  // H
  // Feed the previous slot's class into the LSTM cell (off by default).
  bool lstm_prev_class = false;

  bool operator==(const ModelConfig&) const = default;
};

// One class head of the configured kind plus the span and referral heads that
// every model shares, laid out in a single ParamSet.
class Model {
 public:
  Model(const SlotSchema& schema, const ModelConfig& config);

  const SlotSchema& schema() const { return schema_; }
  const ModelConfig& config() const { return config_; }
  HeadKind kind() const { return config_.head; }

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  const IndependentHeadParams& independent() const { return independent_; }
  const MrfHeadParams& mrf() const { return mrf_; }
  const LstmHeadParams& lstm() const { return lstm_; }
  const SpanHeadParams& span() const { return span_; }
  const ReferralHeadParams& referral() const { return referral_; }

  // Weights uniform in [-scale, scale], biases and clique tables zero. Each
  // block draws from its own stream keyed by (seed, block name), so shared
  // heads start identically whatever the class head.
  void Initialize(std::uint64_t seed, double scale = 0.05);

 private:
  SlotSchema schema_;
  ModelConfig config_;
  ParamSet params_;
  IndependentHeadParams independent_;
  MrfHeadParams mrf_;
  LstmHeadParams lstm_;
  SpanHeadParams span_;
  ReferralHeadParams referral_;
};

// Per-slot log-distributions over admissible classes from the class head.
std::vector<Eigen::VectorXd> ClassLogDistributions(const Model& model,
                                                   const Eigen::VectorXd& pooled);
// Hard class decisions (admissible-class indices) for one turn.
std::vector<int> DecodeClasses(const Model& model, const Eigen::VectorXd& pooled);

// Classes plus span and refer-target decoding for one turn. Refer decoding
// that lands on the no-target entry leaves refer_target empty.
TurnPrediction PredictTurn(const Model& model, const EncodedHistory& encoded);

}  // namespace jointdst

#endif  // JOINTDST_MODEL_H_
