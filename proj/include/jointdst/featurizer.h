#ifndef JOINTDST_FEATURIZER_H_
#define JOINTDST_FEATURIZER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace jointdst {

struct FeatureConfig {
  int dim = 512;
  std::vector<int> ngram_orders = {1, 2};
  std::uint64_t hash_seed = 0x5eed0001;

  // Throws Error(kConfig) unless dim >= 8 and orders is a non-empty subset
  // of {1, 2}.
  void Validate() const;
  bool operator==(const FeatureConfig&) const = default;
};

// Row i holds the hashed n-grams ending at flattened-history token i.
using TokenFeatures = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct EncodedHistory {
  Eigen::VectorXd pooled;  // h_X
  TokenFeatures tokens;
};

// Hashed bag-of-ngrams encoder. Each token row counts its n-gram buckets and
// is scaled so its largest entry is 1. The pooled vector is the mean row plus
// one unit on a bucket keyed by the history length bin. Integer hashing only,
// so the output is identical on every platform.
EncodedHistory Encode(std::span<const std::string> tokens,
                      const FeatureConfig& config);

// Length bins [0,8) [8,16) [16,32) [32,64) [64,128) [128,inf).
int LengthBin(int num_tokens);

}  // namespace jointdst

#endif  // JOINTDST_FEATURIZER_H_
