#include <set>

#include "doctest.h"
#include "jointdst/error.h"
#include "jointdst/featurizer.h"
#include "jointdst/random.h"
#include "test_util.h"

namespace jointdst {
namespace {

using testing::Tokens;

Eigen::MatrixXd Dense(const TokenFeatures& tf) { return Eigen::MatrixXd(tf); }

TokenList RandomTokens(Rng& rng, int n) {
  TokenList out;
  for (int i = 0; i < n; ++i) out.push_back("w" + std::to_string(rng.Below(50)));
  return out;
}

TEST_SUITE("featurizer") {

TEST_CASE("empty history") {
  const EncodedHistory e = Encode({}, FeatureConfig{});
  CHECK(e.pooled.size() == 512);
  CHECK(e.pooled.isZero(0.0));
  CHECK(e.tokens.rows() == 0);
  CHECK(e.tokens.cols() == 512);
}

TEST_CASE("identical input gives identical output") {
  const TokenList tokens = Tokens("i need a train to cambridge at 18 : 30");
  const EncodedHistory a = Encode(tokens, FeatureConfig{});
  const EncodedHistory b = Encode(tokens, FeatureConfig{});
  CHECK(a.pooled == b.pooled);
  CHECK(Dense(a.tokens) == Dense(b.tokens));
}

TEST_CASE("rows are max normalised and pooled is their mean plus a length unit") {
  FeatureConfig cfg;
  cfg.dim = 64;  // small enough for collisions inside a row
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const TokenList tokens = RandomTokens(rng, 1 + static_cast<int>(rng.Below(40)));
    const EncodedHistory e = Encode(tokens, cfg);
    const Eigen::MatrixXd rows = Dense(e.tokens);
    REQUIRE(rows.rows() == static_cast<Eigen::Index>(tokens.size()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      CHECK(rows.row(i).maxCoeff() == 1.0);
      CHECK(rows.row(i).minCoeff() >= 0.0);
    }
    const Eigen::VectorXd mean = rows.colwise().sum().transpose() / static_cast<double>(rows.rows());
    const Eigen::VectorXd extra = e.pooled - mean;
    int bumped = 0;
    for (Eigen::Index k = 0; k < extra.size(); ++k) {
      if (std::abs(extra[k]) > 1e-12) {
        ++bumped;
        CHECK(extra[k] == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    CHECK(bumped == 1);
  }
}

TEST_CASE("unigram only rows have a single bucket") {
  FeatureConfig cfg;
  cfg.ngram_orders = {1};
  const EncodedHistory e = Encode(Tokens("a b a c"), cfg);
  for (int i = 0; i < 4; ++i) CHECK(e.tokens.row(i).nonZeros() == 1);
  CHECK(Dense(e.tokens).row(0) == Dense(e.tokens).row(2));
}

TEST_CASE("histories differing in one token almost always differ") {
  FeatureConfig cfg;
  Rng rng(11);
  int differ = 0;
  const int pairs = 1000;
  for (int p = 0; p < pairs; ++p) {
    TokenList a = RandomTokens(rng, 1 + static_cast<int>(rng.Below(30)));
    TokenList b = a;
    const std::size_t pos = rng.Below(a.size());
    do {
      b[pos] = "w" + std::to_string(rng.Below(50));
    } while (b[pos] == a[pos]);
    differ += Encode(a, cfg).pooled != Encode(b, cfg).pooled;
  }
  CHECK(static_cast<double>(differ) / pairs >= 0.99);
}

TEST_CASE("swapping two tokens changes only their rows and bigram successors") {
  FeatureConfig cfg;
  cfg.dim = 4096;
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    TokenList tokens;
    const int n = 2 + static_cast<int>(rng.Below(20));
    for (int i = 0; i < n; ++i) tokens.push_back("t" + std::to_string(i));  // all distinct
    const int i = static_cast<int>(rng.Below(n));
    int j = static_cast<int>(rng.Below(n - 1));
    if (j >= i) ++j;
    TokenList swapped = tokens;
    std::swap(swapped[i], swapped[j]);
    const Eigen::MatrixXd before = Dense(Encode(tokens, cfg).tokens);
    const Eigen::MatrixXd after = Dense(Encode(swapped, cfg).tokens);
    std::set<int> affected = {i, j};
    if (i + 1 < n) affected.insert(i + 1);
    if (j + 1 < n) affected.insert(j + 1);
    for (int r = 0; r < n; ++r) {
      const bool changed = before.row(r) != after.row(r);
      CHECK(changed == (affected.count(r) == 1));
    }
  }
}

TEST_CASE("length bins") {
  CHECK(LengthBin(0) == 0);
  CHECK(LengthBin(7) == 0);
  CHECK(LengthBin(8) == 1);
  CHECK(LengthBin(16) == 2);
  CHECK(LengthBin(63) == 3);
  CHECK(LengthBin(127) == 4);
  CHECK(LengthBin(128) == 5);
  CHECK(LengthBin(100000) == 5);
}

TEST_CASE("config validation") {
  FeatureConfig cfg;
  cfg.dim = 7;
  CHECK_THROWS_AS(cfg.Validate(), Error);
  cfg.dim = 8;
  CHECK_NOTHROW(cfg.Validate());
  cfg.ngram_orders = {3};
  try {
    cfg.Validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfig);
  }
  cfg.ngram_orders = {};
  CHECK_THROWS_AS(cfg.Validate(), Error);
}

TEST_CASE("hash seed changes the buckets") {
  FeatureConfig a;
  FeatureConfig b;
  b.hash_seed = a.hash_seed + 1;
  const TokenList tokens = Tokens("one two three four");
  CHECK(Encode(tokens, a).pooled != Encode(tokens, b).pooled);
}

}  // TEST_SUITE

}  // namespace
}  // namespace jointdst
