#pragma once

// Multigroup multicast downlink model: group layout, precoders, power
// constraints, and the instantaneous SINRs and rates of the rate-splitting
// (RS) and conventional (NoRS) transmission schemes.

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "rsmmf/numerics.hpp"

namespace rsmmf {

/// Users partitioned into multicast groups.
///
/// Group indices are canonical: groups are relabelled so sizes ascend. User
/// indices are never relabelled (they index channel columns). `original_group`
/// maps a canonical group back to the label the caller used.
class GroupLayout {
 public:
  /// `user_group[k]` is the caller's group label of user k, labels 0..M-1.
  explicit GroupLayout(const std::vector<int>& user_group) {
    detail::require(!user_group.empty(), "GroupLayout: no users");
    const int m = *std::max_element(user_group.begin(), user_group.end()) + 1;
    detail::require(*std::min_element(user_group.begin(), user_group.end()) >= 0,
                    "GroupLayout: negative group label");
    std::vector<int> size(m, 0);
    for (int g : user_group) ++size[g];
    for (int g = 0; g < m; ++g)
      detail::require(size[g] > 0, "GroupLayout: group labels must be contiguous and non-empty");

    original_.resize(m);
    std::iota(original_.begin(), original_.end(), 0);
    std::stable_sort(original_.begin(), original_.end(),
                     [&](int a, int b) { return size[a] < size[b]; });
    std::vector<int> canonical(m);
    for (int c = 0; c < m; ++c) canonical[original_[c]] = c;

    mu_.resize(user_group.size());
    members_.assign(m, {});
    for (std::size_t k = 0; k < user_group.size(); ++k) {
      mu_[k] = canonical[user_group[k]];
      members_[mu_[k]].push_back(static_cast<int>(k));
    }
  }

  /// Users numbered contiguously group by group in the given order.
  static GroupLayout from_sizes(const std::vector<int>& sizes) {
    std::vector<int> ug;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      detail::require(sizes[g] >= 1, "GroupLayout: group sizes must be >= 1");
      ug.insert(ug.end(), sizes[g], static_cast<int>(g));
    }
    return GroupLayout(ug);
  }

  int num_users() const { return static_cast<int>(mu_.size()); }
  int num_groups() const { return static_cast<int>(members_.size()); }
  int group_of(int user) const { return mu_.at(user); }
  int size(int group) const { return static_cast<int>(members_.at(group).size()); }
  const std::vector<int>& members(int group) const { return members_.at(group); }
  int original_group(int group) const { return original_.at(group); }

  /// Canonical (ascending) group sizes G_1 <= ... <= G_M.
  std::vector<int> sizes() const {
    std::vector<int> s;
    for (const auto& g : members_) s.push_back(static_cast<int>(g.size()));
    return s;
  }

  /// Users of every group except those in `excluded`.
  std::vector<int> users_excluding(const std::vector<int>& excluded) const {
    std::vector<int> out;
    for (int g = 0; g < num_groups(); ++g)
      if (std::find(excluded.begin(), excluded.end(), g) == excluded.end())
        out.insert(out.end(), members_[g].begin(), members_[g].end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<int> mu_;
  std::vector<std::vector<int>> members_;
  std::vector<int> original_;
};

/// Common precoder (absent for NoRS) and one private precoder per group.
struct PrecoderSet {
  std::optional<ComplexVector> common;
  ComplexMatrix privates;  // N_t x M, column m is p_m

  int num_antennas() const { return static_cast<int>(privates.rows()); }
  int num_groups() const { return static_cast<int>(privates.cols()); }
  bool has_common() const { return common.has_value(); }

  double total_power() const {
    double p = privates.squaredNorm();
    if (common) p += common->squaredNorm();
    return p;
  }

  void scale(double factor) {
    privates *= factor;
    if (common) *common *= factor;
  }

  static PrecoderSet zeros(int nt, int m, bool with_common) {
    PrecoderSet p;
    p.privates = ComplexMatrix::Zero(nt, m);
    if (with_common) p.common = ComplexVector::Zero(nt);
    return p;
  }
};

enum class PowerKind { TPC, PAC };

/// L constraints p_c^H D_l p_c + sum_m p_m^H D_l p_m <= P_l with diagonal D_l.
struct PowerConstraint {
  PowerKind kind = PowerKind::TPC;
  RealMatrix shaping;  // L x N_t, row l is diag(D_l)
  RealVector limits;   // L

  int num_constraints() const { return static_cast<int>(limits.size()); }
  int num_antennas() const { return static_cast<int>(shaping.cols()); }

  /// Total power constraint; with unit noise, `total` is the transmit SNR.
  static PowerConstraint tpc(int nt, double total) {
    detail::require(nt >= 1 && total > 0.0, "tpc: need nt >= 1 and positive power");
    return {PowerKind::TPC, RealMatrix::Ones(1, nt), RealVector::Constant(1, total)};
  }

  /// Per-antenna constraints, each antenna limited to total / N_t.
  static PowerConstraint pac(int nt, double total) {
    detail::require(nt >= 1 && total > 0.0, "pac: need nt >= 1 and positive power");
    return {PowerKind::PAC, RealMatrix::Identity(nt, nt), RealVector::Constant(nt, total / nt)};
  }

  /// Sum of all limits (the nominal total power).
  double nominal_total() const { return limits.sum(); }
};

/// Power radiated under each shaping matrix.
inline RealVector radiated_power(const PrecoderSet& prec, const PowerConstraint& pc) {
  detail::require(prec.num_antennas() == pc.num_antennas(), "radiated_power: dimension mismatch");
  RealVector per_antenna = prec.privates.cwiseAbs2().rowwise().sum();
  if (prec.common) {
    detail::require(prec.common->size() == prec.num_antennas(),
                    "radiated_power: common precoder dimension mismatch");
    per_antenna += prec.common->cwiseAbs2();
  }
  return pc.shaping * per_antenna;
}

inline bool power_feasible(const PrecoderSet& prec, const PowerConstraint& pc,
                           double rel_slack = 1e-9) {
  const RealVector r = radiated_power(prec, pc);
  for (Eigen::Index l = 0; l < r.size(); ++l)
    if (r(l) > pc.limits(l) * (1.0 + rel_slack)) return false;
  return true;
}

/// SINR of the common stream at a user with channel h; all private streams interfere.
inline double sinr_common(const ComplexVector& h, const PrecoderSet& prec, double noise_var = 1.0) {
  detail::require(prec.common.has_value(), "sinr_common: no common precoder");
  detail::require(h.size() == prec.num_antennas(), "sinr_common: dimension mismatch");
  const double signal = std::norm(h.dot(*prec.common));
  const double interference = (prec.privates.adjoint() * h).squaredNorm();
  return signal / (interference + noise_var);
}

/// SINR of the user's own private stream after the common stream is removed.
inline double sinr_private(const ComplexVector& h, const PrecoderSet& prec, int group,
                           double noise_var = 1.0) {
  detail::require(h.size() == prec.num_antennas(), "sinr_private: dimension mismatch");
  detail::require(group >= 0 && group < prec.num_groups(), "sinr_private: group out of range");
  const ComplexVector proj = prec.privates.adjoint() * h;  // conj(h^H p_j)
  const double signal = std::norm(proj(group));
  const double interference = proj.squaredNorm() - signal;
  return signal / (std::max(interference, 0.0) + noise_var);
}

/// Common-rate portions C_1..C_M (bits/s/Hz), indexed by canonical group.
struct CommonRateSplit {
  std::vector<double> portions;
  double total() const { return std::accumulate(portions.begin(), portions.end(), 0.0); }
  static CommonRateSplit zeros(int m) { return {std::vector<double>(m, 0.0)}; }
};

/// Instantaneous rates of one channel realization, in bits/s/Hz.
struct RateReport {
  std::vector<double> common_user;   // R_c,k (empty for NoRS)
  std::vector<double> private_user;  // R_k
  double common = 0.0;               // R_c = min_k R_c,k
  std::vector<double> private_group; // r_m = min_{i in G_m} R_i
  std::vector<double> group;         // r_g,m
  double mmf = 0.0;                  // min_m r_g,m
};

/// Max-min split of a common rate across groups with the given private rates
/// (water-filling on the weakest groups). Returns C_m >= 0 with sum <= common.
inline std::vector<double> max_min_split(double common, const std::vector<double>& private_rates) {
  const int m = static_cast<int>(private_rates.size());
  std::vector<double> split(m, 0.0);
  if (common <= 0.0 || m == 0) return split;
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return private_rates[a] < private_rates[b]; });
  // Raise the lowest `n` groups to a common level until the budget is spent.
  double level = private_rates[order[0]];
  double budget = common;
  int n = 1;
  while (n < m) {
    const double next = private_rates[order[n]];
    const double cost = (next - level) * n;
    if (cost >= budget) break;
    budget -= cost;
    level = next;
    ++n;
  }
  level += budget / n;
  for (int i = 0; i < n; ++i) split[order[i]] = level - private_rates[order[i]];
  return split;
}

/// Rates of `prec` on channel H (N_t x K). For NoRS pass a precoder set
/// without common precoder and an all-zero split.
inline RateReport rate_report(const ComplexMatrix& h, const PrecoderSet& prec,
                              const GroupLayout& layout, const CommonRateSplit& split,
                              double noise_var = 1.0) {
  detail::require(h.cols() == layout.num_users(), "rate_report: channel/user count mismatch");
  detail::require(h.rows() == prec.num_antennas(), "rate_report: channel/antenna mismatch");
  detail::require(prec.num_groups() == layout.num_groups(), "rate_report: group count mismatch");
  detail::require(static_cast<int>(split.portions.size()) == layout.num_groups(),
                  "rate_report: split size mismatch");
  const int k_users = layout.num_users();
  const int m_groups = layout.num_groups();
  RateReport rep;
  rep.private_user.resize(k_users);
  for (int k = 0; k < k_users; ++k)
    rep.private_user[k] =
        nats_to_bits(std::log1p(sinr_private(h.col(k), prec, layout.group_of(k), noise_var)));

  if (prec.common) {
    rep.common_user.resize(k_users);
    for (int k = 0; k < k_users; ++k)
      rep.common_user[k] = nats_to_bits(std::log1p(sinr_common(h.col(k), prec, noise_var)));
    rep.common = *std::min_element(rep.common_user.begin(), rep.common_user.end());
  }
  for (double c : split.portions)
    if (c < 0.0) throw ConstraintViolation("rate_report: negative common-rate portion");
  if (split.total() > rep.common + 1e-9)
    throw ConstraintViolation("rate_report: common-rate split exceeds the common rate");

  rep.private_group.resize(m_groups);
  rep.group.resize(m_groups);
  for (int g = 0; g < m_groups; ++g) {
    double r = std::numeric_limits<double>::infinity();
    for (int i : layout.members(g)) r = std::min(r, rep.private_user[i]);
    rep.private_group[g] = r;
    rep.group[g] = split.portions[g] + r;
  }
  rep.mmf = *std::min_element(rep.group.begin(), rep.group.end());
  return rep;
}

}  // namespace rsmmf
