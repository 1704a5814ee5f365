#include "jointdst/params.h"

#include <algorithm>

#include "jointdst/error.h"

namespace jointdst {

int ParamSet::AddBlock(std::string name, int rows, int cols, BlockInit init) {
  if (rows <= 0 || cols <= 0) {
    throw Error(ErrorKind::kShape, "block '" + name + "' has an empty shape");
  }
  if (FindBlock(name) >= 0) {
    throw Error(ErrorKind::kShape, "duplicate block '" + name + "'");
  }
  BlockInfo info{std::move(name), rows, cols, values_.size(), init};
  values_.resize(values_.size() + info.size(), 0.0);
  blocks_.push_back(std::move(info));
  return static_cast<int>(blocks_.size()) - 1;
}

int ParamSet::FindBlock(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

MatrixView ParamSet::Matrix(int id) {
  const BlockInfo& b = blocks_.at(id);
  return MatrixView(values_.data() + b.offset, b.rows, b.cols);
}

ConstMatrixView ParamSet::Matrix(int id) const {
  const BlockInfo& b = blocks_.at(id);
  return ConstMatrixView(values_.data() + b.offset, b.rows, b.cols);
}

VectorView ParamSet::Vector(int id) {
  const BlockInfo& b = blocks_.at(id);
  return VectorView(values_.data() + b.offset, static_cast<Eigen::Index>(b.size()));
}

ConstVectorView ParamSet::Vector(int id) const {
  const BlockInfo& b = blocks_.at(id);
  return ConstVectorView(values_.data() + b.offset, static_cast<Eigen::Index>(b.size()));
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out = *this;
  out.SetZero();
  return out;
}

void ParamSet::SetZero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool ParamSet::SameLayout(const ParamSet& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const BlockInfo& a = blocks_[i];
    const BlockInfo& b = other.blocks_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

Eigen::VectorXd MulSkipZeros(const ConstMatrixView& w, const Eigen::VectorXd& x) {
  if (w.cols() != x.size()) throw Error(ErrorKind::kShape, "matrix-vector size mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(w.rows());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] != 0.0) y += w.col(j) * x[j];
  }
  return y;
}

void AddOuterSkipZeros(MatrixView g, const Eigen::VectorXd& d, const Eigen::VectorXd& x) {
  if (g.rows() != d.size() || g.cols() != x.size()) {
    throw Error(ErrorKind::kShape, "outer product size mismatch");
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] != 0.0) g.col(j) += d * x[j];
  }
}

}  // namespace jointdst
