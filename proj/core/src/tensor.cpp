#include "artic/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace artic {

double Tensor3::frobenius_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

Eigen::MatrixXd Tensor3::unfold(int mode) const {
  const auto n1 = static_cast<Eigen::Index>(d1_);
  const auto n2 = static_cast<Eigen::Index>(d2_);
  const auto n3 = static_cast<Eigen::Index>(d3_);
  Eigen::MatrixXd out;
  switch (mode) {
    case 1:
      out.resize(n1, n2 * n3);
      for (std::size_t i = 0; i < d1_; ++i)
        for (std::size_t j = 0; j < d2_; ++j)
          for (std::size_t l = 0; l < d3_; ++l)
            out(static_cast<Eigen::Index>(i),
                static_cast<Eigen::Index>(j * d3_ + l)) = (*this)(i, j, l);
      return out;
    case 2:
      out.resize(n2, n1 * n3);
      for (std::size_t i = 0; i < d1_; ++i)
        for (std::size_t j = 0; j < d2_; ++j)
          for (std::size_t l = 0; l < d3_; ++l)
            out(static_cast<Eigen::Index>(j),
                static_cast<Eigen::Index>(i * d3_ + l)) = (*this)(i, j, l);
      return out;
    case 3:
      out.resize(n3, n1 * n2);
      for (std::size_t i = 0; i < d1_; ++i)
        for (std::size_t j = 0; j < d2_; ++j)
          for (std::size_t l = 0; l < d3_; ++l)
            out(static_cast<Eigen::Index>(l),
                static_cast<Eigen::Index>(i * d2_ + j)) = (*this)(i, j, l);
      return out;
    default:
      throw std::runtime_error("tensor: unfold mode must be 1, 2 or 3");
  }
}

Tensor3 Tensor3::mode_multiply(int mode, const Eigen::MatrixXd& m) const {
  const auto rows = static_cast<std::size_t>(m.rows());
  switch (mode) {
    case 1: {
      if (static_cast<std::size_t>(m.cols()) != d1_)
        throw std::runtime_error("tensor: mode-1 size mismatch");
      Tensor3 out(rows, d2_, d3_);
      for (std::size_t j = 0; j < d2_; ++j)
        for (std::size_t l = 0; l < d3_; ++l)
          for (std::size_t a = 0; a < rows; ++a) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d1_; ++i)
              acc += m(static_cast<Eigen::Index>(a),
                       static_cast<Eigen::Index>(i)) *
                     (*this)(i, j, l);
            out(a, j, l) = acc;
          }
      return out;
    }
    case 2: {
      if (static_cast<std::size_t>(m.cols()) != d2_)
        throw std::runtime_error("tensor: mode-2 size mismatch");
      Tensor3 out(d1_, rows, d3_);
      for (std::size_t i = 0; i < d1_; ++i)
        for (std::size_t l = 0; l < d3_; ++l)
          for (std::size_t b = 0; b < rows; ++b) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d2_; ++j)
              acc += m(static_cast<Eigen::Index>(b),
                       static_cast<Eigen::Index>(j)) *
                     (*this)(i, j, l);
            out(i, b, l) = acc;
          }
      return out;
    }
    case 3: {
      if (static_cast<std::size_t>(m.cols()) != d3_)
        throw std::runtime_error("tensor: mode-3 size mismatch");
      Tensor3 out(d1_, d2_, rows);
      for (std::size_t i = 0; i < d1_; ++i)
        for (std::size_t j = 0; j < d2_; ++j)
          for (std::size_t c = 0; c < rows; ++c) {
            double acc = 0.0;
            for (std::size_t l = 0; l < d3_; ++l)
              acc += m(static_cast<Eigen::Index>(c),
                       static_cast<Eigen::Index>(l)) *
                     (*this)(i, j, l);
            out(i, j, c) = acc;
          }
      return out;
    }
    default:
      throw std::runtime_error("tensor: mode must be 1, 2 or 3");
  }
}

Eigen::VectorXd Tensor3::contract12(const Eigen::VectorXd& s,
                                    const Eigen::VectorXd& p) const {
  if (static_cast<std::size_t>(s.size()) != d1_ ||
      static_cast<std::size_t>(p.size()) != d2_)
    throw std::runtime_error("tensor: contraction size mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d3_));
  for (std::size_t i = 0; i < d1_; ++i)
    for (std::size_t j = 0; j < d2_; ++j) {
      const double w = s(static_cast<Eigen::Index>(i)) *
                       p(static_cast<Eigen::Index>(j));
      if (w == 0.0) continue;
      out += w * fibre(i, j);
    }
  return out;
}

}  // namespace artic
