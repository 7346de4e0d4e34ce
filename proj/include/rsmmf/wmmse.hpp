#pragma once

// Sample-average (SAA) rates and the Rate-WMMSE alternating optimisation for
// max-min fair RS / NoRS multigroup multicast beamforming.
//
// Internally every rate and WMSE is in nats: with the augmented WMSE
// xi = u * eps - ln(u), the minimum over (g, u) is exactly 1 - ln(1 + SINR).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rsmmf/conic.hpp"
#include "rsmmf/csit.hpp"
#include "rsmmf/dof.hpp"
#include "rsmmf/model.hpp"

namespace rsmmf {

/// Per-user sample-average rates.
struct AverageRates {
  std::vector<double> common;    // R_c,k (empty without a common precoder)
  std::vector<double> private_;  // R_k
};

/// Sample-average rates in nats.
inline AverageRates average_rates_nats(const ConditionalSampleSet& samples, const PrecoderSet& prec,
                                       const GroupLayout& layout, double noise_var = 1.0) {
  detail::require(samples.size() >= 1, "average_rates: empty sample set");
  const int k_users = layout.num_users();
  AverageRates out;
  out.private_.assign(k_users, 0.0);
  if (prec.common) out.common.assign(k_users, 0.0);
  for (const auto& h : samples.realizations) {
    detail::require(h.cols() == k_users && h.rows() == prec.num_antennas(),
                    "average_rates: dimension mismatch");
    for (int k = 0; k < k_users; ++k) {
      out.private_[k] += std::log1p(sinr_private(h.col(k), prec, layout.group_of(k), noise_var));
      if (prec.common) out.common[k] += std::log1p(sinr_common(h.col(k), prec, noise_var));
    }
  }
  const double inv = 1.0 / samples.size();
  for (auto& r : out.private_) r *= inv;
  for (auto& r : out.common) r *= inv;
  return out;
}

/// Sample-average rates in bits/s/Hz.
inline AverageRates average_rates(const ConditionalSampleSet& samples, const PrecoderSet& prec,
                                  const GroupLayout& layout, double noise_var = 1.0) {
  AverageRates r = average_rates_nats(samples, prec, layout, noise_var);
  for (auto& v : r.private_) v = nats_to_bits(v);
  for (auto& v : r.common) v = nats_to_bits(v);
  return r;
}

/// Per-group private rates (min over members).
inline std::vector<double> group_private_rates(const AverageRates& r, const GroupLayout& layout) {
  std::vector<double> out(layout.num_groups(), std::numeric_limits<double>::infinity());
  for (int k = 0; k < layout.num_users(); ++k)
    out[layout.group_of(k)] = std::min(out[layout.group_of(k)], r.private_[k]);
  return out;
}

struct MmfEvaluation {
  CommonRateSplit split;
  std::vector<double> group_rates;
  double mmf = 0.0;
};

namespace detail {

inline MmfEvaluation finish_evaluation(const std::vector<double>& priv, CommonRateSplit split) {
  MmfEvaluation ev;
  ev.split = std::move(split);
  ev.group_rates.resize(priv.size());
  for (std::size_t g = 0; g < priv.size(); ++g) ev.group_rates[g] = priv[g] + ev.split.portions[g];
  ev.mmf = *std::min_element(ev.group_rates.begin(), ev.group_rates.end());
  return ev;
}

inline double common_rate(const AverageRates& r) {
  if (r.common.empty()) return 0.0;
  return std::max(0.0, *std::min_element(r.common.begin(), r.common.end()));
}

}  // namespace detail

/// MMF average rate of fixed precoders under the max-min optimal common-rate split.
inline MmfEvaluation evaluate_mmf(const AverageRates& r, const GroupLayout& layout) {
  const auto priv = group_private_rates(r, layout);
  return detail::finish_evaluation(priv, {max_min_split(detail::common_rate(r), priv)});
}

/// MMF average rate of fixed precoders with a prescribed share rule.
inline MmfEvaluation evaluate_mmf(const AverageRates& r, const GroupLayout& layout,
                                  const CommonShareRule& rule) {
  const auto priv = group_private_rates(r, layout);
  return detail::finish_evaluation(priv, rule.apply(detail::common_rate(r)));
}

// ---------------------------------------------------------------------------
// MMSE equalizers and weights.

/// Equalizers and weights per (sample, user): row = sample, column = user.
struct EqualizerWeightSet {
  bool has_common = false;
  Eigen::MatrixXcd g_common, g_private;
  RealMatrix u_common, u_private;
  RealMatrix eps_common, eps_private;  // the MMSEs the weights invert

  int num_samples() const { return static_cast<int>(g_private.rows()); }
  int num_users() const { return static_cast<int>(g_private.cols()); }
};

inline EqualizerWeightSet mmse_update(const ConditionalSampleSet& samples, const PrecoderSet& prec,
                                      const GroupLayout& layout, double noise_var = 1.0) {
  const int s_count = samples.size();
  const int k_users = layout.num_users();
  detail::require(s_count >= 1, "mmse_update: empty sample set");
  detail::require(prec.num_groups() == layout.num_groups(), "mmse_update: group count mismatch");
  EqualizerWeightSet gw;
  gw.has_common = prec.has_common();
  gw.g_private.resize(s_count, k_users);
  gw.u_private.resize(s_count, k_users);
  gw.eps_private.resize(s_count, k_users);
  if (gw.has_common) {
    gw.g_common.resize(s_count, k_users);
    gw.u_common.resize(s_count, k_users);
    gw.eps_common.resize(s_count, k_users);
  }
  for (int s = 0; s < s_count; ++s) {
    const ComplexMatrix& h = samples.realizations[s];
    detail::require(h.cols() == k_users && h.rows() == prec.num_antennas(),
                    "mmse_update: dimension mismatch");
    const ComplexMatrix proj = h.adjoint() * prec.privates;  // (k, j) = h_k^H p_j
    ComplexVector proj_c;
    if (gw.has_common) proj_c = h.adjoint() * *prec.common;
    for (int k = 0; k < k_users; ++k) {
      const double tk = proj.row(k).squaredNorm() + noise_var;
      const double tc = gw.has_common ? tk + std::norm(proj_c(k)) : tk;
      if (!(tc > 0.0) || !(tk > 0.0))
        throw DegenerateInstance("mmse_update: zero total receive power at user " +
                                 std::to_string(k));
      const cplx a = proj(k, layout.group_of(k));
      gw.g_private(s, k) = std::conj(a) / tk;
      const double ek = (tk - std::norm(a)) / tk;
      gw.eps_private(s, k) = ek;
      gw.u_private(s, k) = 1.0 / ek;
      if (gw.has_common) {
        gw.g_common(s, k) = std::conj(proj_c(k)) / tc;
        gw.eps_common(s, k) = tk / tc;
        gw.u_common(s, k) = tc / tk;
      }
    }
  }
  return gw;
}

/// Augmented WMSE u * eps - ln(u).
inline double augmented_wmse(double u, double eps) { return u * eps - std::log(u); }

// ---------------------------------------------------------------------------
// Subproblem coefficients.

/// Sample-averaged WMSEs as explicit quadratics in the precoders:
///   xi_k   = sum_j p_j^H Psi_k p_j - 2 Re(f_k^H p_mu(k)) + nu_k
///   xi_c,k = p_c^H Psi_c,k p_c + sum_j p_j^H Psi_c,k p_j - 2 Re(f_c,k^H p_c) + nu_c,k
struct SubproblemCoefficients {
  bool has_common = false;
  std::vector<ComplexMatrix> psi_private, psi_common;
  std::vector<ComplexVector> f_private, f_common;
  std::vector<double> nu_private, nu_common;

  double private_wmse(int k, const PrecoderSet& p, const GroupLayout& layout) const {
    double v = nu_private[k];
    for (int j = 0; j < p.num_groups(); ++j)
      v += std::real(p.privates.col(j).dot(psi_private[k] * p.privates.col(j)));
    v -= 2.0 * std::real(f_private[k].dot(p.privates.col(layout.group_of(k))));
    return v;
  }

  double common_wmse(int k, const PrecoderSet& p) const {
    const ComplexVector& pc = *p.common;
    double v = nu_common[k] + std::real(pc.dot(psi_common[k] * pc));
    for (int j = 0; j < p.num_groups(); ++j)
      v += std::real(p.privates.col(j).dot(psi_common[k] * p.privates.col(j)));
    v -= 2.0 * std::real(f_common[k].dot(pc));
    return v;
  }
};

inline SubproblemCoefficients assemble_subproblem(const ConditionalSampleSet& samples,
                                                  const EqualizerWeightSet& gw,
                                                  const GroupLayout& layout,
                                                  double noise_var = 1.0) {
  const int s_count = samples.size();
  const int k_users = layout.num_users();
  detail::require(gw.num_samples() == s_count && gw.num_users() == k_users,
                  "assemble_subproblem: equalizer/sample dimension mismatch");
  const int nt = static_cast<int>(samples.estimate.rows());
  SubproblemCoefficients c;
  c.has_common = gw.has_common;
  c.psi_private.resize(k_users);
  c.f_private.assign(k_users, ComplexVector::Zero(nt));
  c.nu_private.assign(k_users, 0.0);
  if (c.has_common) {
    c.psi_common.resize(k_users);
    c.f_common.assign(k_users, ComplexVector::Zero(nt));
    c.nu_common.assign(k_users, 0.0);
  }
  const double inv = 1.0 / s_count;
  // Psi = H_k W H_k^H, H_k stacking the S realisations of user k column-wise.
  ComplexMatrix hk(nt, s_count), weighted(nt, s_count);
  auto accumulate = [&](const RealMatrix& u, const Eigen::MatrixXcd& g, int k, ComplexMatrix& psi,
                        ComplexVector& f, double& nu) {
    double acc = 0.0;
    for (int s = 0; s < s_count; ++s) {
      const double w = u(s, k) * std::norm(g(s, k));
      weighted.col(s) = (w * inv) * hk.col(s);
      f += (u(s, k) * inv) * std::conj(g(s, k)) * hk.col(s);
      acc += w * noise_var + u(s, k) - std::log(u(s, k));
    }
    psi.noalias() = weighted * hk.adjoint();
    nu = acc * inv;
  };
  for (int k = 0; k < k_users; ++k) {
    for (int s = 0; s < s_count; ++s) hk.col(s) = samples.realizations[s].col(k);
    accumulate(gw.u_private, gw.g_private, k, c.psi_private[k], c.f_private[k], c.nu_private[k]);
    if (c.has_common)
      accumulate(gw.u_common, gw.g_common, k, c.psi_common[k], c.f_common[k], c.nu_common[k]);
  }
  return c;
}

/// Sample-average augmented WMSEs at arbitrary precoders and fixed
/// equalizers/weights, evaluated sample by sample.
struct AverageWmse {
  std::vector<double> common, private_;
};

inline AverageWmse average_wmse(const ConditionalSampleSet& samples, const EqualizerWeightSet& gw,
                                const PrecoderSet& prec, const GroupLayout& layout,
                                double noise_var = 1.0) {
  const int k_users = layout.num_users();
  AverageWmse out;
  out.private_.assign(k_users, 0.0);
  if (gw.has_common) out.common.assign(k_users, 0.0);
  for (int s = 0; s < samples.size(); ++s) {
    const ComplexMatrix& h = samples.realizations[s];
    for (int k = 0; k < k_users; ++k) {
      const ComplexVector hk = h.col(k);
      const ComplexVector proj = prec.privates.adjoint() * hk;  // conj(h^H p_j)
      const double tk = proj.squaredNorm() + noise_var;
      const cplx a = std::conj(proj(layout.group_of(k)));
      const cplx g = gw.g_private(s, k);
      const double eps = std::norm(g) * tk - 2.0 * std::real(g * a) + 1.0;
      out.private_[k] += augmented_wmse(gw.u_private(s, k), eps);
      if (gw.has_common) {
        const cplx ac = hk.dot(*prec.common);
        const double tc = tk + std::norm(ac);
        const cplx gc = gw.g_common(s, k);
        const double epsc = std::norm(gc) * tc - 2.0 * std::real(gc * ac) + 1.0;
        out.common[k] += augmented_wmse(gw.u_common(s, k), epsc);
      }
    }
  }
  for (auto& v : out.private_) v /= samples.size();
  for (auto& v : out.common) v /= samples.size();
  return out;
}

// ---------------------------------------------------------------------------
// Subproblem as a QCQP.

/// Variable layout: [p_c | p_1..p_M | C_1..C_M | r_1..r_M | r_g], precoders in
/// stacked real coordinates; p_c and C only with a common stream.
struct SubproblemLayout {
  int nt = 0;
  int m = 0;
  bool has_common = false;

  int common_offset() const { return 0; }
  int private_offset(int g) const { return (has_common ? 2 * nt : 0) + 2 * nt * g; }
  int split_index(int g) const { return private_offset(m) + g; }
  int rate_index(int g) const { return private_offset(m) + (has_common ? m : 0) + g; }
  int objective_index() const { return rate_index(m); }
  int num_vars() const { return objective_index() + 1; }

  RealVector pack(const PrecoderSet& p) const {
    RealVector x = RealVector::Zero(num_vars());
    if (has_common) x.segment(common_offset(), 2 * nt) = stack_real(*p.common);
    for (int g = 0; g < m; ++g) x.segment(private_offset(g), 2 * nt) = stack_real(p.privates.col(g));
    return x;
  }

  PrecoderSet unpack(const RealVector& x) const {
    PrecoderSet p = PrecoderSet::zeros(nt, m, has_common);
    if (has_common) p.common = unstack_real(x.segment(common_offset(), 2 * nt));
    for (int g = 0; g < m; ++g) p.privates.col(g) = unstack_real(x.segment(private_offset(g), 2 * nt));
    return p;
  }
};

/// maximize r_g  s.t.  r_g <= C_m + r_m,  r_m <= 1 - xi_i (i in G_m),
/// sum C <= 1 - xi_c,k,  C >= 0,  power limits.
inline MaxMinQcqp build_subproblem(const SubproblemCoefficients& c, const GroupLayout& layout,
                                   const PowerConstraint& pc, SubproblemLayout* layout_out = nullptr) {
  const int nt = pc.num_antennas();
  const int m = layout.num_groups();
  const int k_users = layout.num_users();
  const SubproblemLayout sl{nt, m, c.has_common};
  if (layout_out) *layout_out = sl;

  MaxMinQcqp q;
  q.num_vars = sl.num_vars();
  q.objective = sl.objective_index();
  auto name_block = [&](const std::string& base) {
    for (int i = 0; i < 2 * nt; ++i)
      q.var_names.push_back(base + (i < nt ? ".re[" : ".im[") + std::to_string(i % nt) + "]");
  };
  if (c.has_common) name_block("pc");
  for (int g = 0; g < m; ++g) name_block("p" + std::to_string(g));
  if (c.has_common)
    for (int g = 0; g < m; ++g) q.var_names.push_back("C" + std::to_string(g));
  for (int g = 0; g < m; ++g) q.var_names.push_back("r" + std::to_string(g));
  q.var_names.push_back("rg");

  const int common_block = c.has_common ? q.add_block(sl.common_offset(), 2 * nt) : -1;
  std::vector<int> private_block(m);
  for (int g = 0; g < m; ++g) private_block[g] = q.add_block(sl.private_offset(g), 2 * nt);

  for (int g = 0; g < m; ++g) {
    QcqpConstraint con;
    con.label = "group_rate_" + std::to_string(g);
    con.linear.emplace_back(sl.objective_index(), 1.0);
    con.linear.emplace_back(sl.rate_index(g), -1.0);
    if (c.has_common) con.linear.emplace_back(sl.split_index(g), -1.0);
    q.constraints.push_back(std::move(con));
  }
  for (int k = 0; k < k_users; ++k) {
    const int mu = layout.group_of(k);
    QcqpConstraint con;
    con.label = "private_" + std::to_string(k);
    const int form = q.add_form(hermitian_to_real(c.psi_private[k]));
    for (int g = 0; g < m; ++g) con.terms.push_back({private_block[g], form});
    const RealVector lin = -2.0 * re_inner_to_real(c.f_private[k]);
    for (int i = 0; i < 2 * nt; ++i) con.linear.emplace_back(sl.private_offset(mu) + i, lin(i));
    con.linear.emplace_back(sl.rate_index(mu), 1.0);
    con.constant = c.nu_private[k] - 1.0;
    q.constraints.push_back(std::move(con));
  }
  if (c.has_common) {
    for (int k = 0; k < k_users; ++k) {
      QcqpConstraint con;
      con.label = "common_" + std::to_string(k);
      const int form = q.add_form(hermitian_to_real(c.psi_common[k]));
      con.terms.push_back({common_block, form});
      for (int g = 0; g < m; ++g) con.terms.push_back({private_block[g], form});
      const RealVector lin = -2.0 * re_inner_to_real(c.f_common[k]);
      for (int i = 0; i < 2 * nt; ++i) con.linear.emplace_back(sl.common_offset() + i, lin(i));
      for (int g = 0; g < m; ++g) con.linear.emplace_back(sl.split_index(g), 1.0);
      con.constant = c.nu_common[k] - 1.0;
      q.constraints.push_back(std::move(con));
    }
    for (int g = 0; g < m; ++g) {
      QcqpConstraint con;
      con.label = "split_nonneg_" + std::to_string(g);
      con.linear.emplace_back(sl.split_index(g), -1.0);
      q.constraints.push_back(std::move(con));
    }
  }
  for (int l = 0; l < pc.num_constraints(); ++l) {
    QcqpConstraint con;
    con.label = "power_" + std::to_string(l);
    RealVector d(2 * nt);
    d.head(nt) = pc.shaping.row(l).transpose();
    d.tail(nt) = pc.shaping.row(l).transpose();
    const int form = q.add_form(d.asDiagonal().toDenseMatrix());
    if (c.has_common) con.terms.push_back({common_block, form});
    for (int g = 0; g < m; ++g) con.terms.push_back({private_block[g], form});
    con.constant = -pc.limits(l);
    q.constraints.push_back(std::move(con));
  }
  return q;
}

// ---------------------------------------------------------------------------
// Alternating optimisation.

struct AoOptions {
  double tol = 1e-4;  // nats, on successive r_g
  int max_iter = 200;
  double noise_var = 1.0;
  ConicOptions conic{};
};

struct MmfSolution {
  PrecoderSet precoders;
  CommonRateSplit split;                // bits/s/Hz, max-min optimal for the final precoders
  std::vector<double> objective_trace;  // subproblem optimum r_g per iteration, nats
  std::vector<double> group_rates;      // bits/s/Hz
  double mmf = 0.0;                     // bits/s/Hz
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Strictly feasible start for the subproblem around the current precoders.
inline RealVector subproblem_start(const SubproblemLayout& sl, const SubproblemCoefficients& c,
                                   const PrecoderSet& prec, const GroupLayout& layout) {
  PrecoderSet p = prec;
  p.scale(std::sqrt(0.999));
  RealVector x = sl.pack(p);
  const int m = layout.num_groups();
  std::vector<double> priv(m, std::numeric_limits<double>::infinity());
  for (int k = 0; k < layout.num_users(); ++k)
    priv[layout.group_of(k)] =
        std::min(priv[layout.group_of(k)], 1.0 - c.private_wmse(k, p, layout));
  double budget = 0.0;
  if (sl.has_common) {
    budget = std::numeric_limits<double>::infinity();
    for (int k = 0; k < layout.num_users(); ++k) budget = std::min(budget, 1.0 - c.common_wmse(k, p));
  }
  const double margin = 1e-3;
  double rg = std::numeric_limits<double>::infinity();
  for (int g = 0; g < m; ++g) {
    x(sl.rate_index(g)) = priv[g] - margin;
    double cg = 0.0;
    if (sl.has_common) {
      cg = budget > 0.0 ? 0.5 * budget / m : 0.0;
      x(sl.split_index(g)) = cg;
    }
    rg = std::min(rg, x(sl.rate_index(g)) + cg);
  }
  x(sl.objective_index()) = rg - margin;
  return x;
}

inline ComplexVector dominant_left_singular_vector(const ComplexMatrix& a) {
  Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU);
  return svd.matrixU().col(0);
}

inline ComplexVector group_mrt_direction(const ComplexMatrix& est, const GroupLayout& layout, int g) {
  ComplexVector v = ComplexVector::Zero(est.rows());
  for (int u : layout.members(g)) v += est.col(u) / std::max(est.col(u).norm(), 1e-300);
  const double n = v.norm();
  if (n <= 1e-12) {
    v = ComplexVector::Zero(est.rows());
    v(0) = 1.0;
    return v;
  }
  return v / n;
}

/// Dominant left singular vector of H_hat, unless it leaves some user with
/// (almost) no common-stream gain; then the sum of normalised user channels.
inline ComplexVector common_direction(const ComplexMatrix& est) {
  const ComplexVector v = dominant_left_singular_vector(est);
  bool reaches_all = true;
  for (Eigen::Index k = 0; k < est.cols(); ++k)
    if (std::norm(est.col(k).dot(v)) < 1e-6 * est.col(k).squaredNorm()) reaches_all = false;
  if (reaches_all) return v;
  ComplexVector w = ComplexVector::Zero(est.rows());
  for (Eigen::Index k = 0; k < est.cols(); ++k) w += est.col(k) / std::max(est.col(k).norm(), 1e-300);
  return w.norm() > 1e-12 ? ComplexVector(w / w.norm()) : v;
}

/// Uniformly rescales precoders into the power constraint (never scales up).
inline void fit_power(PrecoderSet& p, const PowerConstraint& pc) {
  const RealVector r = radiated_power(p, pc);
  double worst = 0.0;
  for (Eigen::Index l = 0; l < r.size(); ++l) worst = std::max(worst, r(l) / pc.limits(l));
  if (worst > 1.0) p.scale(std::sqrt(1.0 / worst));
}

}  // namespace detail

namespace detail {

// One AO iteration: MMSE update at `work`, then the convex subproblem. On
// success `out` receives the new precoders (with a common precoder only if
// `work` has one).
inline ConicResult ao_step(const ConditionalSampleSet& samples, const PrecoderSet& work,
                           const GroupLayout& layout, const PowerConstraint& pc,
                           const AoOptions& opt, PrecoderSet& out) {
  const EqualizerWeightSet gw = mmse_update(samples, work, layout, opt.noise_var);
  const SubproblemCoefficients coeffs = assemble_subproblem(samples, gw, layout, opt.noise_var);
  SubproblemLayout sl;
  const MaxMinQcqp q = build_subproblem(coeffs, layout, pc, &sl);
  ConicResult res = solve(q, subproblem_start(sl, coeffs, work, layout), opt.conic);
  if (res.status != ConicStatus::Infeasible) out = sl.unpack(res.x);
  return res;
}

}  // namespace detail

/// Alternating optimisation of the SAA max-min problem. An `init` with a
/// common precoder runs RS, one without runs NoRS.
inline MmfSolution ao_solve(const ComplexMatrix& est, const ConditionalSampleSet& samples,
                            const GroupLayout& layout, const PowerConstraint& pc,
                            const PrecoderSet& init, const AoOptions& opt = {}) {
  detail::require(est.rows() == pc.num_antennas() && est.cols() == layout.num_users(),
                  "ao_solve: estimate dimension mismatch");
  detail::require(init.num_antennas() == pc.num_antennas() &&
                      init.num_groups() == layout.num_groups(),
                  "ao_solve: init dimension mismatch");
  detail::require(opt.max_iter >= 1 && opt.tol > 0.0, "ao_solve: bad iteration controls");
  if (!power_feasible(init, pc))
    throw InvalidInput("ao_solve: initial precoders violate the power constraint");

  MmfSolution sol;
  PrecoderSet prec = init;
  const bool rs = init.has_common();
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iter; ++it) {
    // A powerless common stream gives the subproblem an empty interior and the
    // updates could never revive it; solve that iteration without it.
    PrecoderSet work = prec;
    if (work.common && work.common->squaredNorm() <= 1e-14 * std::max(1.0, pc.nominal_total()))
      work.common.reset();

    ConicResult res = detail::ao_step(samples, work, layout, pc, opt, prec);
    if (res.status == ConicStatus::Infeasible && work.common) {
      // Some user's common equaliser vanished, so the split is pinned at zero
      // and the subproblem has no interior. Keep p_c fixed and update the
      // privates within the power it leaves.
      PrecoderSet frozen = work;
      frozen.common.reset();
      PowerConstraint rest = pc;
      PrecoderSet only_common = PrecoderSet::zeros(pc.num_antennas(), layout.num_groups(), true);
      only_common.common = work.common;
      rest.limits -= radiated_power(only_common, pc);
      if (rest.limits.minCoeff() > 0.0) {
        res = detail::ao_step(samples, frozen, layout, rest, opt, prec);
        if (res.status != ConicStatus::Infeasible) prec.common = work.common;
      }
    }
    if (res.status == ConicStatus::Infeasible)
      throw SolverFailure("ao_solve: subproblem infeasible at iteration " + std::to_string(it));
    if (res.status != ConicStatus::Optimal && res.max_violation > 0.0)
      throw SolverFailure("ao_solve: subproblem " + to_string(res.status) + " at iteration " +
                          std::to_string(it));
    if (rs && !prec.common) prec.common = ComplexVector::Zero(pc.num_antennas());
    sol.objective_trace.push_back(res.objective);
    sol.iterations = it;
    if (std::abs(res.objective - prev) < opt.tol) {
      sol.converged = true;
      break;
    }
    prev = res.objective;
  }
  const MmfEvaluation ev = evaluate_mmf(average_rates(samples, prec, layout, opt.noise_var), layout);
  sol.precoders = std::move(prec);
  sol.split = ev.split;
  sol.group_rates = ev.group_rates;
  sol.mmf = ev.mmf;
  return sol;
}

/// NoRS restriction: no common stream, zero split.
inline MmfSolution solve_nors(const ComplexMatrix& est, const ConditionalSampleSet& samples,
                              const GroupLayout& layout, const PowerConstraint& pc,
                              const PrecoderSet& init, const AoOptions& opt = {}) {
  PrecoderSet p = init;
  p.common.reset();
  return ao_solve(est, samples, layout, pc, p, opt);
}

// ---------------------------------------------------------------------------
// Initialisation.

/// Regime-appropriate starting precoders from the zero-forcing constructions,
/// scaled into the power constraint. `alpha` is the CSIT exponent (1 for perfect).
inline PrecoderSet initial_precoders(const ComplexMatrix& est, const GroupLayout& layout,
                                     const PowerConstraint& pc, double alpha, Scheme scheme,
                                     RandomStream& stream) {
  const int nt = static_cast<int>(est.rows());
  const int m = layout.num_groups();
  const double power = pc.nominal_total();
  const Regime regime = classify_regime(layout, nt);
  PrecoderSet p;
  if (scheme == Scheme::NoRS) {
    if (regime == Regime::Underloaded) {
      p = build_nors_underloaded(est, layout, power);
    } else if (regime == Regime::PartiallyOverloaded) {
      p = build_nors_partial(est, layout, power, alpha);
    } else {
      // No zero-forcing construction exists: per-group matched filters.
      p = PrecoderSet::zeros(nt, m, false);
      for (int g = 0; g < m; ++g)
        p.privates.col(g) = std::sqrt(power / m) * detail::group_mrt_direction(est, layout, g);
    }
  } else {
    if (regime == Regime::Underloaded) {
      p = build_rs_underloaded(est, layout, power, alpha, stream).first;
    } else {
      auto [prec, part] = build_rs_overloaded(est, layout, power, alpha, stream);
      p = std::move(prec);
      // Groups without a private stream start with a matched filter at the
      // members' power; a zero precoder could never be revived by the updates.
      const double each = std::max(p.privates.col(part.members.front()).squaredNorm(), 1e-6 * power);
      for (int g = part.m_r; g < m; ++g)
        p.privates.col(g) = std::sqrt(each) * detail::group_mrt_direction(est, layout, g);
      const double total = p.total_power();
      if (total > power) p.scale(std::sqrt(power / total));
    }
    // Keep a little common power so the common stream stays alive (alpha = 1).
    const double cpow = std::max(p.common->squaredNorm(), 1e-3 * power);
    const double ppow = p.privates.squaredNorm();
    if (ppow > power - cpow) p.privates *= std::sqrt((power - cpow) / ppow);
    p.common = std::sqrt(cpow) * detail::common_direction(est);
  }
  detail::fit_power(p, pc);
  return p;
}

}  // namespace rsmmf
