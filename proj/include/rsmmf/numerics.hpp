#pragma once

// Numerical kernels shared by every other module: complex matrix aliases,
// null-space extraction, the two Bessel orders the satellite beam pattern
// needs, and hash-derived reproducible random streams.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsmmf/errors.hpp"

namespace rsmmf {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

/// Orthonormal basis of null(A^H), i.e. the orthogonal complement of range(A).
///
/// A is n x m (m may be zero). Rank is decided from a full SVD with threshold
/// max(n, m) * eps * sigma_max. The result is n x (n - rank).
inline ComplexMatrix null_space_basis(const ComplexMatrix& a) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();
  detail::require(n >= 1, "null_space_basis: need at least one row");
  if (!all_finite(a)) throw InvalidInput("null_space_basis: non-finite input");
  if (m == 0) return ComplexMatrix::Identity(n, n);

  Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeFullU);
  const RealVector& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double thr =
      static_cast<double>(std::max(n, m)) * std::numeric_limits<double>::epsilon() * smax;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thr) ++rank;
  return svd.matrixU().rightCols(n - rank);
}

// ---------------------------------------------------------------------------
// Bessel functions of the first kind, orders 1 and 3.

namespace detail {

inline double bessel_series(int order, double x) {
  // sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
  const double half = 0.5 * x;
  double term = 1.0;
  for (int i = 1; i <= order; ++i) term *= half / i;
  double sum = term;
  const double q = -half * half;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + order));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > 2) break;
  }
  return sum;
}

// Miller's backward recurrence normalised with J0 + 2 sum J_{2k} = 1.
inline double bessel_miller(int order, double x) {
  const int start = 2 * ((static_cast<int>(x) + order + 60) / 2);
  double jp1 = 0.0;
  double j = 1e-300;
  double norm = 0.0;
  double result = 0.0;
  for (int k = start; k >= 1; --k) {
    const double jm1 = 2.0 * k / x * j - jp1;
    jp1 = j;
    j = jm1;
    if (std::abs(j) > 1e250) {  // rescale to stay in range
      j *= 1e-250;
      jp1 *= 1e-250;
      result *= 1e-250;
      norm *= 1e-250;
    }
    if (k - 1 == order) result = j;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * j;
  }
  norm += j;  // J0 term
  return result / norm;
}

}  // namespace detail

/// J_order(x) for order in {1, 3} and x >= 0.
inline double bessel_j(int order, double x) {
  if (order != 1 && order != 3) throw InvalidInput("bessel_j: only orders 1 and 3 are supported");
  if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidInput("bessel_j: x must be finite and >= 0");
  if (x == 0.0) return 0.0;
  if (x <= 12.0) return detail::bessel_series(order, x);
  return detail::bessel_miller(order, x);
}

// ---------------------------------------------------------------------------
// Reproducible random streams.

/// One element of a stream path; either a name or an index.
struct StreamLabel {
  std::string text;
  StreamLabel(const char* s) : text(s) {}
  StreamLabel(std::string s) : text(std::move(s)) {}
  StreamLabel(std::string_view s) : text(s) {}
  template <typename I>
    requires std::is_integral_v<I>
  StreamLabel(I i) : text(std::to_string(i)) {}
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// A deterministic substream identified by (master seed, path).
///
/// The engine seed is splitmix64-chained over the master seed and the FNV-1a
/// hash of each label (labels are length-prefixed so ["ab","c"] and
/// ["a","bc"] differ). Distinct paths give independent-looking streams.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::vector<std::string> path)
      : master_seed_(master_seed), path_(std::move(path)), engine_(derive_seed()) {}

  std::uint64_t master_seed() const { return master_seed_; }
  const std::vector<std::string>& path() const { return path_; }

  /// Labels joined with '/', e.g. "trial/3/error".
  std::string path_string() const {
    std::string out;
    for (std::size_t i = 0; i < path_.size(); ++i) {
      if (i) out += '/';
      out += path_[i];
    }
    return out;
  }

  /// A fresh stream whose path extends this one.
  RandomStream child(std::initializer_list<StreamLabel> labels) const {
    std::vector<std::string> p = path_;
    for (const auto& l : labels) p.push_back(l.text);
    return RandomStream(master_seed_, std::move(p));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Circularly-symmetric complex Gaussian with the given variance.
  cplx complex_normal(double variance = 1.0) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t derive_seed() const {
    std::uint64_t h = detail::splitmix64(master_seed_);
    for (const auto& label : path_) {
      std::uint64_t lh = detail::fnv1a(std::to_string(label.size()));
      lh = detail::fnv1a(":", lh);
      lh = detail::fnv1a(label, lh);
      h = detail::splitmix64(h ^ lh);
    }
    return h;
  }

  std::uint64_t master_seed_;
  std::vector<std::string> path_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline RandomStream derive_stream(std::uint64_t master_seed,
                                  std::initializer_list<StreamLabel> path = {}) {
  std::vector<std::string> p;
  for (const auto& l : path) p.push_back(l.text);
  return RandomStream(master_seed, std::move(p));
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline constexpr double kLn2 = std::numbers::ln2;
inline double nats_to_bits(double nats) { return nats / kLn2; }
inline double bits_to_nats(double bits) { return bits * kLn2; }

}  // namespace rsmmf
