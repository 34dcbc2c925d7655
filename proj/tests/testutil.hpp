#ifndef FASTW1_TESTUTIL_HPP
#define FASTW1_TESTUTIL_HPP

#include <cmath>
#include <random>

#include "fastw1/colt.hpp"
#include "fastw1/colt_block.hpp"
#include "fastw1/dense.hpp"

namespace testutil {

using fastw1::BlockColt;
using fastw1::Colt;
using fastw1::DenseMatrix;
using fastw1::Vec;

// log-uniform in [0.5, 2]: well-conditioned but not symmetric around 1
inline double log_uniform_half_two(std::mt19937_64& eng) {
  std::uniform_real_distribution<double> d(-std::log(2.0), std::log(2.0));
  return std::exp(d(eng));
}

inline Vec random_vec(std::size_t n, std::mt19937_64& eng) {
  Vec v(n);
  for (double& x : v) x = log_uniform_half_two(eng);
  return v;
}

inline Vec random_signed_vec(std::size_t n, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vec v(n);
  for (double& x : v) x = d(eng);
  return v;
}

inline Colt random_colt(std::size_t n, std::mt19937_64& eng) {
  Colt m;
  m.lower.diag = random_vec(n, eng);
  m.lower.ratios = random_vec(n - 1, eng);
  m.upper.sup = random_vec(n - 1, eng);
  m.upper.ratios = random_vec(n >= 2 ? n - 2 : 0, eng);
  return m;
}

// cross-compatible by construction: the superdiagonal extends the upper
// ratios across the diagonal (sup[j] = diag[j+1] * ratios'[j])
inline Colt random_cross_compatible_colt(std::size_t n, std::mt19937_64& eng) {
  Colt m = random_colt(n, eng);
  for (std::size_t j = 0; j + 2 < n; ++j)
    m.upper.sup[j] = m.lower.diag[j + 1] * m.upper.ratios[j];
  return m;
}

inline BlockColt random_block_colt(std::size_t n, std::size_t blocks, std::mt19937_64& eng) {
  BlockColt b;
  b.inner = n;
  for (std::size_t k = 0; k < blocks; ++k) b.blocks.push_back(random_colt(n, eng));
  for (std::size_t k = 0; k + 1 < blocks; ++k) {
    b.lower_ratios.push_back(random_vec(n, eng));
    b.upper_ratios.push_back(random_vec(n, eng));
  }
  return b;
}

inline double rel_linf(const Vec& got, const Vec& want) {
  double scale = 0;
  for (double w : want) scale = std::max(scale, std::abs(w));
  if (scale == 0) scale = 1;
  double err = 0;
  for (std::size_t i = 0; i < got.size(); ++i)
    err = std::max(err, std::abs(got[i] - want[i]));
  return err / scale;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double max_rel_entrywise(const DenseMatrix& a, const DenseMatrix& b) {
  double scale = 0;
  for (double x : b.data()) scale = std::max(scale, std::abs(x));
  if (scale == 0) scale = 1;
  double err = 0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    err = std::max(err, std::abs(a.data()[k] - b.data()[k]));
  return err / scale;
}

}  // namespace testutil

#endif
