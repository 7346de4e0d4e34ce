#pragma once

// Max-min fair degrees of freedom (DoF) of RS and NoRS under imperfect CSIT:
// closed-form predictions, the zero-forcing constructions that attain them,
// and a least-squares slope estimator for checking them against simulated rates.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rsmmf/model.hpp"

namespace rsmmf {

enum class Scheme { NoRS, RS };
enum class Regime { Underloaded, PartiallyOverloaded, FullyOverloaded };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Underloaded: return "underloaded";
    case Regime::PartiallyOverloaded: return "partially-overloaded";
    case Regime::FullyOverloaded: return "fully-overloaded";
  }
  return "?";
}

/// Achievable MMF-DoF. RS values are achievable lower bounds, not proven optima.
struct DofPrediction {
  Scheme scheme = Scheme::NoRS;
  double value = 0.0;
  Regime regime = Regime::Underloaded;
};

/// Split of the groups used by the overloaded RS construction.
struct OverloadPartition {
  int m_r = 0;               // number of groups served with private streams
  std::vector<int> members;  // canonical indices of those groups (the smallest)
  double delta = 0.0;        // private power exponent
  double z = 0.0;            // fraction of the common rate given to `members`
};

/// Fraction of the common rate assigned to each canonical group. Multiplying by
/// the realised common rate gives a CommonRateSplit.
struct CommonShareRule {
  std::vector<double> shares;

  CommonRateSplit apply(double common_rate) const {
    CommonRateSplit s;
    for (double f : shares) s.portions.push_back(f * common_rate);
    return s;
  }
};

inline Regime classify_regime(const GroupLayout& layout, int nt) {
  const auto g = layout.sizes();
  const int k = layout.num_users();
  if (nt >= k - g.front() + 1) return Regime::Underloaded;
  if (nt >= k - g.back() + 1) return Regime::PartiallyOverloaded;
  return Regime::FullyOverloaded;
}

/// Antennas needed to treat groups 1..L as underloaded while ignoring the rest.
inline int n_l(const GroupLayout& layout, int l) {
  const int m = layout.num_groups();
  if (l < 1 || l > m) throw InvalidInput("n_l: L must lie in [1, M]");
  const auto g = layout.sizes();
  const int k = layout.num_users();
  if (l == m) return k - g[0] + 1;
  int tail = 0;
  for (int j = l; j < m; ++j) tail += g[j];  // groups L+1..M (1-based)
  return k - g[0] - tail + 1;
}

/// Largest number of groups that the overloaded RS construction can serve privately.
inline int m_r_star(const GroupLayout& layout, int nt) {
  detail::require(nt >= 1, "m_r_star: need N_t >= 1");
  const int m = layout.num_groups();
  if (nt >= n_l(layout, m)) return m;
  for (int l = m - 1; l >= 1; --l)
    if (nt >= n_l(layout, l)) return l;
  return 1;
}

inline DofPrediction nors_dof(const GroupLayout& layout, int nt, double alpha) {
  detail::require(alpha >= 0.0 && alpha <= 1.0, "nors_dof: alpha must lie in [0, 1]");
  const Regime r = classify_regime(layout, nt);
  double v = 0.0;
  if (r == Regime::Underloaded) v = alpha;
  else if (r == Regime::PartiallyOverloaded) v = alpha / 2.0;
  return {Scheme::NoRS, v, r};
}

inline DofPrediction rs_dof(const GroupLayout& layout, int nt, double alpha) {
  detail::require(alpha >= 0.0 && alpha <= 1.0, "rs_dof: alpha must lie in [0, 1]");
  const Regime r = classify_regime(layout, nt);
  const double m = layout.num_groups();
  if (r == Regime::Underloaded) return {Scheme::RS, (1.0 - alpha) / m + alpha, r};
  const double q = 1.0 + m - m_r_star(layout, nt);
  const double v = alpha > 1.0 / q ? 1.0 / q : alpha + (1.0 - q * alpha) / m;
  return {Scheme::RS, v, r};
}

/// Least-squares slope of MMF rate (bits) against log2(P).
inline double estimate_dof_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw InvalidInput("estimate_dof_slope: need at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [p, r] : points) {
    detail::require(p > 0.0, "estimate_dof_slope: power must be positive");
    mx += std::log2(p);
    my += r;
  }
  mx /= points.size();
  my /= points.size();
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [p, r] : points) {
    const double dx = std::log2(p) - mx;
    sxx += dx * dx;
    sxy += dx * (r - my);
  }
  if (sxx <= 0.0) throw InvalidInput("estimate_dof_slope: powers must be distinct");
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// Zero-forcing constructions.

namespace detail {

inline ComplexMatrix user_columns(const ComplexMatrix& est, const std::vector<int>& users) {
  ComplexMatrix out(est.rows(), static_cast<Eigen::Index>(users.size()));
  for (std::size_t i = 0; i < users.size(); ++i) out.col(i) = est.col(users[i]);
  return out;
}

// Unit vector in null(H_hat_{users}^H), steered towards the intended group's
// channel sum; falls back to the first basis vector when the projection vanishes.
inline ComplexVector nulling_direction(const ComplexMatrix& est, const GroupLayout& layout,
                                       int group, const std::vector<int>& nulled_users) {
  const ComplexMatrix basis = null_space_basis(user_columns(est, nulled_users));
  if (basis.cols() == 0)
    throw RegimeError("construction: not enough antennas to null group " + std::to_string(group));
  ComplexVector target = ComplexVector::Zero(est.rows());
  for (int u : layout.members(group)) target += est.col(u);
  ComplexVector v = basis * (basis.adjoint() * target);
  const double n = v.norm();
  if (n <= 1e-12 * std::max(1.0, target.norm())) return basis.col(0);
  return v / n;
}

inline ComplexVector random_unit_vector(int nt, RandomStream& stream) {
  ComplexVector v(nt);
  for (int i = 0; i < nt; ++i) v(i) = stream.complex_normal();
  return v / v.norm();
}

}  // namespace detail

/// Privates nulled at every other group's estimated channels, P/M each.
inline PrecoderSet build_nors_underloaded(const ComplexMatrix& est, const GroupLayout& layout,
                                          double power) {
  const int nt = static_cast<int>(est.rows());
  const int m = layout.num_groups();
  if (classify_regime(layout, nt) != Regime::Underloaded)
    throw RegimeError("build_nors_underloaded: requires N_t >= K - G_1 + 1");
  PrecoderSet p = PrecoderSet::zeros(nt, m, false);
  const double amp = std::sqrt(power / m);
  for (int g = 0; g < m; ++g)
    p.privates.col(g) =
        amp * detail::nulling_direction(est, layout, g, layout.users_excluding({g}));
  return p;
}

/// Index (0-based, canonical) of the group whose subspace is partly sacrificed.
inline int sacrificial_group(const GroupLayout& layout, int nt) {
  const auto g = layout.sizes();
  const int k = layout.num_users();
  for (int x = layout.num_groups() - 1; x >= 1; --x)
    if (k - g[x] + 1 <= nt) return x;
  throw RegimeError("sacrificial_group: no feasible group");
}

/// Partially-overloaded NoRS: groups before x are nulled at every group but
/// themselves and x; groups from x on are fully nulled. Powers use beta = 1 - alpha/2.
inline PrecoderSet build_nors_partial(const ComplexMatrix& est, const GroupLayout& layout,
                                      double power, double alpha) {
  const int nt = static_cast<int>(est.rows());
  const int m = layout.num_groups();
  if (classify_regime(layout, nt) != Regime::PartiallyOverloaded)
    throw RegimeError("build_nors_partial: requires K - G_M + 1 <= N_t < K - G_1 + 1");
  detail::require(alpha >= 0.0 && alpha <= 1.0, "build_nors_partial: alpha must lie in [0, 1]");
  const int x = sacrificial_group(layout, nt);
  const double beta = 1.0 - alpha / 2.0;
  const double pb = std::min(std::pow(power, beta), power);
  PrecoderSet p = PrecoderSet::zeros(nt, m, false);
  for (int g = 0; g < m; ++g) {
    const std::vector<int> excl = g < x ? std::vector<int>{g, x} : std::vector<int>{g};
    const double pw = g == x ? power - pb : pb / (m - 1);
    p.privates.col(g) =
        std::sqrt(pw) * detail::nulling_direction(est, layout, g, layout.users_excluding(excl));
  }
  return p;
}

/// Underloaded RS: privates as NoRS with total power P^alpha, common gets the rest
/// along a random direction; the common rate is shared equally.
inline std::pair<PrecoderSet, CommonShareRule> build_rs_underloaded(const ComplexMatrix& est,
                                                                    const GroupLayout& layout,
                                                                    double power, double alpha,
                                                                    RandomStream& stream) {
  const int nt = static_cast<int>(est.rows());
  const int m = layout.num_groups();
  if (classify_regime(layout, nt) != Regime::Underloaded)
    throw RegimeError("build_rs_underloaded: requires N_t >= K - G_1 + 1");
  detail::require(alpha >= 0.0 && alpha <= 1.0, "build_rs_underloaded: alpha must lie in [0, 1]");
  const double pd = std::min(std::pow(power, alpha), power);
  PrecoderSet p = build_nors_underloaded(est, layout, pd);
  p.common = std::sqrt(power - pd) * detail::random_unit_vector(nt, stream);
  return {std::move(p), CommonShareRule{std::vector<double>(m, 1.0 / m)}};
}

/// Partition used by the overloaded RS construction for a given alpha.
inline OverloadPartition overload_partition(const GroupLayout& layout, int nt, double alpha) {
  detail::require(alpha >= 0.0 && alpha <= 1.0, "overload_partition: alpha must lie in [0, 1]");
  OverloadPartition part;
  const int m = layout.num_groups();
  part.m_r = m_r_star(layout, nt);
  for (int g = 0; g < part.m_r; ++g) part.members.push_back(g);
  const double q = 1.0 + m - part.m_r;
  if (alpha <= 1.0 / q) {
    part.delta = alpha;
    part.z = (1.0 - q * alpha) * part.m_r / ((1.0 - alpha) * m);
  } else {
    part.delta = 1.0 / q;
    part.z = 0.0;
  }
  return part;
}

/// Overloaded RS: the M_R smallest groups get private streams nulled among
/// themselves (power P^delta / M_R each); the rest are served by the common stream only.
inline std::pair<PrecoderSet, OverloadPartition> build_rs_overloaded(const ComplexMatrix& est,
                                                                     const GroupLayout& layout,
                                                                     double power, double alpha,
                                                                     RandomStream& stream) {
  const int nt = static_cast<int>(est.rows());
  const int m = layout.num_groups();
  if (classify_regime(layout, nt) == Regime::Underloaded)
    throw RegimeError("build_rs_overloaded: requires N_t < K - G_1 + 1");
  OverloadPartition part = overload_partition(layout, nt, alpha);
  const double pd = std::min(std::pow(power, part.delta), power);
  std::vector<int> outside;
  for (int g = part.m_r; g < m; ++g) outside.push_back(g);

  PrecoderSet p = PrecoderSet::zeros(nt, m, true);
  const double amp = std::sqrt(pd / part.m_r);
  for (int g : part.members) {
    std::vector<int> excl = outside;
    excl.push_back(g);
    p.privates.col(g) =
        amp * detail::nulling_direction(est, layout, g, layout.users_excluding(excl));
  }
  p.common = std::sqrt(power - pd) * detail::random_unit_vector(nt, stream);
  return {std::move(p), std::move(part)};
}

/// Common-rate shares implied by an overload partition.
inline CommonShareRule share_rule(const OverloadPartition& part, int num_groups) {
  CommonShareRule rule{std::vector<double>(num_groups, 0.0)};
  const int mc = num_groups - part.m_r;
  for (int g = 0; g < num_groups; ++g) {
    const bool member = g < part.m_r;
    if (member) rule.shares[g] = part.z / part.m_r;
    else if (mc > 0) rule.shares[g] = (1.0 - part.z) / mc;
  }
  return rule;
}

}  // namespace rsmmf
