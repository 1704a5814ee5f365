#ifndef JOINTDST_PARAMS_H_
#define JOINTDST_PARAMS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace jointdst {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using VectorView = Eigen::Map<Eigen::VectorXd>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

// How a block is initialised before training.
enum class BlockInit { kUniform, kZero };

struct BlockInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  BlockInit init = BlockInit::kUniform;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Flat parameter storage partitioned into named row-major blocks. Gradients
// use a second ParamSet with the identical layout.
class ParamSet {
 public:
  int AddBlock(std::string name, int rows, int cols, BlockInit init);

  std::size_t size() const { return values_.size(); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<BlockInfo>& blocks() const { return blocks_; }
  const BlockInfo& block(int id) const { return blocks_.at(id); }
  int FindBlock(const std::string& name) const;  // -1 if absent

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  MatrixView Matrix(int id);
  ConstMatrixView Matrix(int id) const;
  // Whole block as a vector (for 1-row or 1-column blocks and flat access).
  VectorView Vector(int id);
  ConstVectorView Vector(int id) const;

  // Same layout, all zeros.
  ParamSet ZerosLike() const;
  void SetZero();
  bool SameLayout(const ParamSet& other) const;

  bool operator==(const ParamSet& other) const {
    return SameLayout(other) && values_ == other.values_;
  }

 private:
  std::vector<BlockInfo> blocks_;
  std::vector<double> values_;
};

// w * x and g += d * x^T, skipping zero entries of x. Pooled features touch a
// small fraction of the hashed dimensions, so this is much cheaper than the
// dense product.
Eigen::VectorXd MulSkipZeros(const ConstMatrixView& w, const Eigen::VectorXd& x);
void AddOuterSkipZeros(MatrixView g, const Eigen::VectorXd& d, const Eigen::VectorXd& x);

}  // namespace jointdst

#endif  // JOINTDST_PARAMS_H_
