#include "jointdst/featurizer.h"

#include <algorithm>
#include <string_view>

#include "jointdst/error.h"
#include "jointdst/random.h"

namespace jointdst {

namespace {

constexpr std::uint64_t kUnigramTag = 0x75;
constexpr std::uint64_t kBigramTag = 0x62;
constexpr std::uint64_t kLengthTag = 0x6c;

int Bucket(std::uint64_t hash, int dim) {
  return static_cast<int>(hash % static_cast<std::uint64_t>(dim));
}

}  // namespace

void FeatureConfig::Validate() const {
  if (dim < 8) throw Error(ErrorKind::kConfig, "feature dim must be >= 8");
  if (ngram_orders.empty()) throw Error(ErrorKind::kConfig, "ngram_orders is empty");
  for (int order : ngram_orders) {
    if (order != 1 && order != 2) {
      throw Error(ErrorKind::kConfig, "ngram order must be 1 or 2");
    }
  }
}

int LengthBin(int num_tokens) {
  int bin = 0;
  int bound = 8;
  while (num_tokens >= bound && bin < 5) {
    ++bin;
    bound *= 2;
  }
  return bin;
}

EncodedHistory Encode(std::span<const std::string> tokens,
                      const FeatureConfig& config) {
  config.Validate();
  const int n = static_cast<int>(tokens.size());
  const int dim = config.dim;
  const bool unigrams =
      std::find(config.ngram_orders.begin(), config.ngram_orders.end(), 1) !=
      config.ngram_orders.end();
  const bool bigrams =
      std::find(config.ngram_orders.begin(), config.ngram_orders.end(), 2) !=
      config.ngram_orders.end();

  std::vector<std::uint64_t> token_hash(n);
  for (int i = 0; i < n; ++i) token_hash[i] = HashBytes(tokens[i], config.hash_seed);

  EncodedHistory out;
  out.pooled = Eigen::VectorXd::Zero(dim);
  out.tokens.resize(n, dim);
  out.tokens.reserve(Eigen::VectorXi::Constant(n, 2));

  std::vector<std::pair<int, double>> row;
  for (int i = 0; i < n; ++i) {
    row.clear();
    auto bump = [&row](int bucket) {
      for (auto& [b, v] : row) {
        if (b == bucket) {
          v += 1.0;
          return;
        }
      }
      row.emplace_back(bucket, 1.0);
    };
    if (unigrams) bump(Bucket(MixHash(kUnigramTag, token_hash[i]), dim));
    if (bigrams && i > 0) {
      bump(Bucket(MixHash(MixHash(kBigramTag, token_hash[i - 1]), token_hash[i]), dim));
    }
    double max_value = 0.0;
    for (const auto& entry : row) max_value = std::max(max_value, entry.second);
    std::sort(row.begin(), row.end());
    for (const auto& [bucket, count] : row) {
      const double v = count / max_value;
      out.tokens.insert(i, bucket) = v;
      out.pooled[bucket] += v;
    }
  }
  out.tokens.makeCompressed();
  if (n > 0) {
    out.pooled /= static_cast<double>(n);
    out.pooled[Bucket(MixHash(kLengthTag, static_cast<std::uint64_t>(LengthBin(n)) ^
                                              config.hash_seed),
                      dim)] += 1.0;
  }
  return out;
}

}  // namespace jointdst
