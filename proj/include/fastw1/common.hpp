#ifndef FASTW1_COMMON_HPP
#define FASTW1_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fastw1 {

using Vec = std::vector<double>;

/// Input violates a documented precondition (sizes, signs, file formats).
class invalid_input : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An iteration produced a non-finite value or divided by zero.
class numerical_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class io_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense reconstructions refuse matrices larger than this unless the caller
// raises the guard explicitly. Keeps O(N^2) paths out of solver code.
inline constexpr std::size_t kDenseGuard = 4096;

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double l1_norm(const Vec& v) {
  double s = 0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline double sum(const Vec& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

namespace instrument {

// Per-thread operation counters. Structured kernels bump them once per call
// (by the number of steps taken), so hot loops carry no extra work.
struct Counters {
  std::uint64_t ratio_steps = 0;  // multiply-add-by-ratio steps in lcmv/ucmv
  std::uint64_t diag_mults = 0;   // diagonal/superdiagonal multiplies
  std::uint64_t dense_ops = 0;    // entries touched by dense reconstruction or oracles
};

inline Counters& counters() {
  thread_local Counters c;
  return c;
}

inline void reset() { counters() = Counters{}; }

}  // namespace instrument
}  // namespace fastw1

#endif  // FASTW1_COMMON_HPP
