#include "jointdst/model.h"

#include "jointdst/error.h"
#include "jointdst/random.h"

namespace jointdst {

std::string_view ToString(HeadKind kind) {
  switch (kind) {
    case HeadKind::kIndependent: return "independent";
    case HeadKind::kMrf: return "mrf";
    case HeadKind::kLstm: return "lstm";
  }
  return "independent";
}

HeadKind ParseHeadKind(std::string_view text) {
  if (text == "independent") return HeadKind::kIndependent;
  if (text == "mrf") return HeadKind::kMrf;
  if (text == "lstm") return HeadKind::kLstm;
  throw Error(ErrorKind::kConfig, "unknown head kind '" + std::string(text) + "'");
}

Model::Model(const SlotSchema& schema, const ModelConfig& config)
    : schema_(schema), config_(config) {
  config_.features.Validate();
  const int dim = config_.features.dim;
  const int n = schema_.size();
  if (n == 0) throw Error(ErrorKind::kShape, "model needs at least one slot");
  auto name = [this](std::string_view head, int s, std::string_view part) {
    return std::string(head) + "/" + schema_.slot(s).FullName() + "/" + std::string(part);
  };

  switch (config_.head) {
    case HeadKind::kIndependent:
      for (int s = 0; s < n; ++s) {
        const int k = schema_.slot(s).num_classes();
        independent_.weight.push_back(
            params_.AddBlock(name("independent", s, "weight"), k, dim, BlockInit::kUniform));
        independent_.bias.push_back(
            params_.AddBlock(name("independent", s, "bias"), k, 1, BlockInit::kZero));
      }
      break;
    case HeadKind::kMrf:
      for (int s = 0; s < n; ++s) {
        const int k = schema_.slot(s).num_classes();
        mrf_.unary_weight.push_back(
            params_.AddBlock(name("mrf", s, "unary_weight"), 2, dim, BlockInit::kUniform));
        mrf_.unary_bias.push_back(
            params_.AddBlock(name("mrf", s, "unary_bias"), 2, 1, BlockInit::kZero));
        mrf_.cond_weight.push_back(
            params_.AddBlock(name("mrf", s, "cond_weight"), k - 1, dim, BlockInit::kUniform));
        mrf_.cond_bias.push_back(
            params_.AddBlock(name("mrf", s, "cond_bias"), k - 1, 1, BlockInit::kZero));
      }
      for (const DomainInfo& domain : schema_.domains()) {
        mrf_.table.push_back(params_.AddBlock(
            "mrf/" + domain.name + "/table", 1 << domain.slots.size(), 1, BlockInit::kZero));
      }
      break;
    case HeadKind::kLstm: {
      const int in = config_.lstm_input_dim;
      const int hid = config_.lstm_hidden_dim;
      if (in <= 0 || hid <= 0) throw Error(ErrorKind::kConfig, "LSTM dims must be positive");
      lstm_.input_dim = in;
      lstm_.hidden_dim = hid;
      lstm_.input_weight =
          params_.AddBlock("lstm/cell/input_weight", 4 * hid, in, BlockInit::kUniform);
      lstm_.recurrent_weight =
          params_.AddBlock("lstm/cell/recurrent_weight", 4 * hid, hid, BlockInit::kUniform);
      lstm_.gate_bias = params_.AddBlock("lstm/cell/gate_bias", 4 * hid, 1, BlockInit::kZero);
      if (config_.lstm_prev_class) {
        lstm_.prev_class_embedding = params_.AddBlock(
            "lstm/cell/prev_class_embedding", 1 + kNumCopyClasses, in, BlockInit::kUniform);
      }
      for (int s = 0; s < n; ++s) {
        const int k = schema_.slot(s).num_classes();
        lstm_.proj_weight.push_back(
            params_.AddBlock(name("lstm", s, "proj_weight"), in, dim, BlockInit::kUniform));
        lstm_.proj_bias.push_back(
            params_.AddBlock(name("lstm", s, "proj_bias"), in, 1, BlockInit::kZero));
        lstm_.out_weight.push_back(params_.AddBlock(name("lstm", s, "out_weight"), k,
                                                    dim + hid, BlockInit::kUniform));
        lstm_.out_bias.push_back(
            params_.AddBlock(name("lstm", s, "out_bias"), k, 1, BlockInit::kZero));
      }
      break;
    }
  }

  for (int s = 0; s < n; ++s) {
    span_.start_weight.push_back(
        params_.AddBlock(name("span", s, "start_weight"), dim, 1, BlockInit::kUniform));
    span_.start_bias.push_back(
        params_.AddBlock(name("span", s, "start_bias"), 1, 1, BlockInit::kZero));
    span_.end_weight.push_back(
        params_.AddBlock(name("span", s, "end_weight"), dim, 1, BlockInit::kUniform));
    span_.end_bias.push_back(
        params_.AddBlock(name("span", s, "end_bias"), 1, 1, BlockInit::kZero));
  }
  for (int s = 0; s < n; ++s) {
    referral_.weight.push_back(
        params_.AddBlock(name("referral", s, "weight"), n + 1, dim, BlockInit::kUniform));
    referral_.bias.push_back(
        params_.AddBlock(name("referral", s, "bias"), n + 1, 1, BlockInit::kZero));
  }
}

void Model::Initialize(std::uint64_t seed, double scale) {
  for (int id = 0; id < params_.num_blocks(); ++id) {
    const BlockInfo& info = params_.block(id);
    VectorView values = params_.Vector(id);
    if (info.init == BlockInit::kZero) {
      values.setZero();
      continue;
    }
    Rng rng(MixHash(seed, HashBytes(info.name)));
    for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = rng.Uniform(-scale, scale);
  }
}

std::vector<Eigen::VectorXd> ClassLogDistributions(const Model& model,
                                                   const Eigen::VectorXd& pooled) {
  switch (model.kind()) {
    case HeadKind::kIndependent:
      return IndependentForward(pooled, model.params(), model.independent(), model.schema());
    case HeadKind::kMrf:
      return MrfClassDistribution(pooled, model.params(), model.mrf(), model.schema());
    case HeadKind::kLstm:
      return LstmForward(pooled, model.params(), model.lstm(), model.schema());
  }
  return {};
}

std::vector<int> DecodeClasses(const Model& model, const Eigen::VectorXd& pooled) {
  if (model.kind() == HeadKind::kMrf) {
    return MrfDecode(pooled, model.params(), model.mrf(), model.schema());
  }
  const std::vector<Eigen::VectorXd> dists = ClassLogDistributions(model, pooled);
  std::vector<int> out;
  out.reserve(dists.size());
  for (const Eigen::VectorXd& d : dists) out.push_back(ArgmaxLowest(d));
  return out;
}

TurnPrediction PredictTurn(const Model& model, const EncodedHistory& encoded) {
  const SlotSchema& schema = model.schema();
  const std::vector<int> classes = DecodeClasses(model, encoded.pooled);
  TurnPrediction out(schema.size());
  for (int s = 0; s < schema.size(); ++s) {
    SlotPrediction& pred = out[s];
    pred.cls = schema.slot(s).ClassAt(classes[s]);
    if (pred.cls == CopyClass::kSpan && encoded.tokens.rows() > 0) {
      pred.span = DecodeSpan(SpanForward(encoded.tokens, model.params(), model.span(), s));
    } else if (pred.cls == CopyClass::kRefer) {
      const Eigen::VectorXd dist =
          ReferralForward(encoded.pooled, model.params(), model.referral(), s);
      const int target = ArgmaxLowest(dist);
      if (target < schema.size()) pred.refer_target = target;
    }
  }
  return out;
}

}  // namespace jointdst
