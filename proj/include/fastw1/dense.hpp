#ifndef FASTW1_DENSE_HPP
#define FASTW1_DENSE_HPP

#include <cmath>
#include <cstddef>

#include "fastw1/common.hpp"

namespace fastw1 {

/// Row-major dense matrix. Oracle-side mirror of the implicit representations;
/// also the working storage of the dense baselines.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec data_;
};

inline Vec matvec(const DenseMatrix& m, const Vec& y) {
  if (y.size() != m.cols()) throw invalid_input("matvec: size mismatch");
  instrument::counters().dense_ops += m.rows() * m.cols();
  Vec out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * y[j];
    out[i] = s;
  }
  return out;
}

inline Vec matvec_transpose(const DenseMatrix& m, const Vec& y) {
  if (y.size() != m.rows()) throw invalid_input("matvec_transpose: size mismatch");
  instrument::counters().dense_ops += m.rows() * m.cols();
  Vec out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j) * y[i];
  return out;
}

inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw invalid_input("hadamard: shape mismatch");
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t k = 0; k < out.data().size(); ++k)
    out.data()[k] = a.data()[k] * b.data()[k];
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

/// diag(x) * m
inline DenseMatrix scale_rows(const Vec& x, const DenseMatrix& m) {
  if (x.size() != m.rows()) throw invalid_input("scale_rows: size mismatch");
  DenseMatrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) *= x[i];
  return out;
}

/// m * diag(x)
inline DenseMatrix scale_cols(const DenseMatrix& m, const Vec& x) {
  if (x.size() != m.cols()) throw invalid_input("scale_cols: size mismatch");
  DenseMatrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) *= x[j];
  return out;
}

/// exp(-m/delta), elementwise.
inline DenseMatrix exp_neg_scaled(const DenseMatrix& m, double delta) {
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t k = 0; k < m.data().size(); ++k)
    out.data()[k] = std::exp(-m.data()[k] / delta);
  return out;
}

inline double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw invalid_input("frobenius_distance: shape mismatch");
  double s = 0;
  for (std::size_t k = 0; k < a.data().size(); ++k) {
    double d = a.data()[k] - b.data()[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    s = std::max(s, std::abs(a.data()[k] - b.data()[k]));
  return s;
}

}  // namespace fastw1

#endif  // FASTW1_DENSE_HPP
