#pragma once

// Two-user toy instances shaped like one WMMSE subproblem, with a brute-force
// grid oracle. Variables: x = (x1, x2) with |x|^2 <= 1, a common portion C >= 0
// and the max-min objective t.
//
//   t <= g1(x) + C,   t <= g2(x),   C <= b^T x - x^T R x - e
//   g_k(x) = a_k^T x - x^T Q_k x - d_k
//
// The oracle uses only std:: arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace oracle {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<double, 4>;  // row-major, symmetric PSD

struct SmallQcqp {
  Vec2 a1, a2, b;
  Mat2 q1, q2, r;
  double d1, d2, e;
};

inline double quad_form(const Mat2& m, double x, double y) {
  return m[0] * x * x + (m[1] + m[2]) * x * y + m[3] * y * y;
}

// Random PSD 2x2 as L L^T with entries of L in [-s, s].
inline Mat2 random_psd(std::mt19937_64& rng, double s) {
  std::uniform_real_distribution<double> u(-s, s);
  const double l00 = u(rng), l10 = u(rng), l11 = u(rng);
  return {l00 * l00, l00 * l10, l00 * l10, l10 * l10 + l11 * l11};
}

inline SmallQcqp random_small_qcqp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 0.5);
  SmallQcqp p;
  p.a1 = {u(rng), u(rng)};
  p.a2 = {u(rng), u(rng)};
  p.b = {u(rng), u(rng)};
  p.q1 = random_psd(rng, 1.0);
  p.q2 = random_psd(rng, 1.0);
  p.r = random_psd(rng, 1.0);
  p.d1 = -pos(rng);
  p.d2 = -pos(rng);
  p.e = -pos(rng);  // x = 0, C = 0 is strictly feasible
  return p;
}

// Objective at a fixed x (C and t eliminated), or -inf if infeasible.
inline double reduced_objective(const SmallQcqp& p, double x, double y) {
  if (x * x + y * y > 1.0) return -std::numeric_limits<double>::infinity();
  const double cmax = p.b[0] * x + p.b[1] * y - quad_form(p.r, x, y) - p.e;
  if (cmax < 0.0) return -std::numeric_limits<double>::infinity();
  const double g1 = p.a1[0] * x + p.a1[1] * y - quad_form(p.q1, x, y) - p.d1;
  const double g2 = p.a2[0] * x + p.a2[1] * y - quad_form(p.q2, x, y) - p.d2;
  return std::min(g1 + cmax, g2);
}

/// Grid search over the unit disc at spacing h, then a finer local grid
/// around the best point (the reduced objective is concave).
inline double grid_optimum(const SmallQcqp& p, double h = 1e-3) {
  double best = -std::numeric_limits<double>::infinity(), bx = 0.0, by = 0.0;
  const int n = static_cast<int>(std::ceil(1.0 / h));
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const double v = reduced_objective(p, i * h, j * h);
      if (v > best) best = v, bx = i * h, by = j * h;
    }
  for (int level = 0; level < 3; ++level) {
    const double hh = h / 20.0;
    const double cx = bx, cy = by;
    for (int i = -40; i <= 40; ++i)
      for (int j = -40; j <= 40; ++j) {
        const double v = reduced_objective(p, cx + i * hh, cy + j * hh);
        if (v > best) best = v, bx = cx + i * hh, by = cy + j * hh;
      }
    h = hh;
  }
  return best;
}

}  // namespace oracle
