#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace artic {

// Dense order-3 tensor, layout (i, j, l) -> (i * dim2 + j) * dim3 + l.
// Mode numbering is 1-based to match the usual tensor notation.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t d1, std::size_t d2, std::size_t d3)
      : d1_(d1), d2_(d2), d3_(d3), data_(d1 * d2 * d3, 0.0) {}

  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  std::size_t dim3() const { return d3_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t l) {
    return data_[(i * d2_ + j) * d3_ + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * d2_ + j) * d3_ + l];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // Fibre (i, j, :) as an Eigen map.
  Eigen::Map<const Eigen::VectorXd> fibre(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * d2_ + j) * d3_, static_cast<Eigen::Index>(d3_)};
  }
  Eigen::Map<Eigen::VectorXd> fibre(std::size_t i, std::size_t j) {
    return {data_.data() + (i * d2_ + j) * d3_, static_cast<Eigen::Index>(d3_)};
  }

  double frobenius_norm() const;

  // Mode-n unfolding: rows indexed by the chosen mode, columns by the
  // remaining two modes (second index fastest for mode 1; conventions
  // are fixed by the tests, all internal users agree with them).
  Eigen::MatrixXd unfold(int mode) const;

  // Mode-n product with a matrix M (rows_out x dim_mode).
  Tensor3 mode_multiply(int mode, const Eigen::MatrixXd& m) const;

  // Contraction against vectors in modes 1 and 2: result length dim3.
  Eigen::VectorXd contract12(const Eigen::VectorXd& s,
                             const Eigen::VectorXd& p) const;

 private:
  std::size_t d1_ = 0, d2_ = 0, d3_ = 0;
  std::vector<double> data_;
};

}  // namespace artic
