#pragma once

// Monte-Carlo experiment orchestration: scenario configuration, presets,
// per-trial optimisation of every scheme, DoF slope reports and CSV output.
//
// The ergodic MMF rate of a (scheme, power, alpha) point is the mean over
// channel estimates of the MMF average rate obtained on that estimate.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rsmmf/csit.hpp"
#include "rsmmf/dof.hpp"
#include "rsmmf/model.hpp"
#include "rsmmf/satcom.hpp"
#include "rsmmf/wmmse.hpp"

namespace rsmmf {

enum class ChannelKind { Rayleigh, Satellite };
enum class SchemeKind { RS, NoRS, FourColor, DofConstructionRS, DofConstructionNoRS };

inline std::string to_string(ChannelKind c) { return c == ChannelKind::Rayleigh ? "rayleigh" : "satellite"; }

inline std::string to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::RS: return "RS";
    case SchemeKind::NoRS: return "NoRS";
    case SchemeKind::FourColor: return "FourColor";
    case SchemeKind::DofConstructionRS: return "DofConstructionRS";
    case SchemeKind::DofConstructionNoRS: return "DofConstructionNoRS";
  }
  return "?";
}

inline SchemeKind scheme_from_string(const std::string& s) {
  for (SchemeKind k : {SchemeKind::RS, SchemeKind::NoRS, SchemeKind::FourColor,
                       SchemeKind::DofConstructionRS, SchemeKind::DofConstructionNoRS})
    if (to_string(k) == s) return k;
  throw InvalidInput("unknown scheme '" + s + "'");
}

inline std::string to_string(PowerKind k) { return k == PowerKind::TPC ? "TPC" : "PAC"; }

inline PowerKind power_kind_from_string(const std::string& s) {
  if (s == "TPC") return PowerKind::TPC;
  if (s == "PAC") return PowerKind::PAC;
  throw InvalidInput("unknown power constraint '" + s + "'");
}

/// CSIT quality of one curve: nullopt is perfect CSIT.
using AlphaSpec = std::optional<double>;

inline std::string alpha_label(const AlphaSpec& a) {
  if (!a) return "perfect";
  std::ostringstream os;
  os << std::setprecision(9) << *a;
  return os.str();
}

struct ScenarioConfig {
  std::string name = "custom";
  ChannelKind channel = ChannelKind::Rayleigh;
  int nt = 6;
  std::vector<int> group_sizes{1, 2, 3};  // Rayleigh layout
  std::vector<int> users_per_beam;        // satellite layout (7 entries)
  std::vector<AlphaSpec> csit{std::nullopt};
  PowerKind power_constraint = PowerKind::TPC;
  std::vector<double> power_grid{5, 10, 15, 20, 25, 30, 35, 40};  // dB (Rayleigh) or W per feed
  std::vector<SchemeKind> schemes{SchemeKind::RS, SchemeKind::NoRS};
  int num_estimates = 20;
  int saa_samples = 100;
  std::uint64_t master_seed = 1;
  double ao_tol = 1e-4;
  int ao_max_iter = 200;
  double conic_tol = 1e-9;
  bool rain = true;

  void validate() const {
    detail::require(!name.empty(), "ScenarioConfig: empty name");
    detail::require(num_estimates >= 1 && saa_samples >= 1, "ScenarioConfig: need >= 1 estimate and sample");
    detail::require(!power_grid.empty() && !csit.empty() && !schemes.empty(),
                    "ScenarioConfig: empty power grid, CSIT list or scheme list");
    detail::require(ao_tol > 0 && ao_max_iter >= 1 && conic_tol > 0, "ScenarioConfig: bad solver tolerances");
    for (const auto& a : csit)
      if (a) detail::require(*a >= 0.0 && *a <= 1.0, "ScenarioConfig: alpha must lie in [0, 1]");
    if (channel == ChannelKind::Satellite) {
      detail::require(users_per_beam.size() == 7, "ScenarioConfig: satellite needs 7 users_per_beam entries");
      detail::require(nt == 7, "ScenarioConfig: satellite uses one feed per beam (N_t = M = 7)");
      for (double p : power_grid) detail::require(p > 0, "ScenarioConfig: per-feed power must be positive");
    } else {
      detail::require(nt >= 1 && !group_sizes.empty(), "ScenarioConfig: bad Rayleigh layout");
      for (SchemeKind s : schemes)
        detail::require(s != SchemeKind::FourColor, "ScenarioConfig: FourColor needs the satellite channel");
    }
  }

  /// Total transmit power of a grid point (linear; unit noise).
  double total_power(double grid_value) const {
    return channel == ChannelKind::Rayleigh ? db_to_linear(grid_value) : nt * grid_value;
  }

  PowerConstraint constraint(double grid_value) const {
    const double p = total_power(grid_value);
    return power_constraint == PowerKind::TPC ? PowerConstraint::tpc(nt, p) : PowerConstraint::pac(nt, p);
  }
};

struct ResultRow {
  std::string scenario;
  std::string scheme;
  double power = 0.0;
  std::string alpha;
  int trial = 0;
  double mmf_bits = 0.0;
  int iters = 0;
  std::string status = "ok";
  std::string seed_path;
  double wall_ms = 0.0;

  // ordering keys
  int scheme_index = 0, power_index = 0, alpha_index = 0;

  bool succeeded() const { return status == "ok" || status == "max-iter"; }
};

// ---------------------------------------------------------------------------
// Presets.

inline std::vector<std::string> preset_names() {
  return {"fig1", "fig2", "fig3", "fig5", "fig6", "fig7", "fig8"};
}

/// Preset configurations at desk scale; `paper_scale` restores 100 estimates and S = 1000.
/// fig6 and fig7 expand into several variants.
inline std::vector<ScenarioConfig> preset(const std::string& name, bool paper_scale = false) {
  std::vector<ScenarioConfig> out;
  const std::vector<AlphaSpec> rayleigh_alphas{std::nullopt, 0.9, 0.6};
  const std::vector<double> snr_db{5, 10, 15, 20, 25, 30, 35, 40};
  const std::vector<double> feed_w{10, 30, 50, 70, 90, 110, 130};

  auto rayleigh = [&](int nt, std::vector<int> sizes) {
    ScenarioConfig c;
    c.name = name;
    c.channel = ChannelKind::Rayleigh;
    c.nt = nt;
    c.group_sizes = std::move(sizes);
    c.csit = rayleigh_alphas;
    c.power_grid = snr_db;
    c.schemes = {SchemeKind::RS, SchemeKind::NoRS};
    return c;
  };
  auto satellite = [&](std::vector<int> per_beam) {
    ScenarioConfig c;
    c.name = name;
    c.channel = ChannelKind::Satellite;
    c.nt = 7;
    c.users_per_beam = std::move(per_beam);
    c.csit = {std::nullopt, 0.8, 0.6};
    c.power_constraint = PowerKind::PAC;
    c.power_grid = feed_w;
    c.schemes = {SchemeKind::RS, SchemeKind::NoRS};
    return c;
  };

  if (name == "fig1") {
    out.push_back(rayleigh(6, {1, 2, 3}));
  } else if (name == "fig2") {
    out.push_back(rayleigh(4, {1, 2, 3}));
  } else if (name == "fig3") {
    out.push_back(rayleigh(4, {2, 2, 2}));
  } else if (name == "fig5") {
    auto c = satellite(std::vector<int>(7, 2));
    c.schemes.push_back(SchemeKind::FourColor);
    out.push_back(c);
  } else if (name == "fig6") {
    for (int rho : {2, 4, 6}) {
      auto c = satellite(std::vector<int>(7, rho));
      c.name = name + "_rho" + std::to_string(rho);
      c.power_grid = {80};
      c.csit = {0.2, 0.4, 0.6, 0.8, 1.0, std::nullopt};
      out.push_back(c);
    }
  } else if (name == "fig7") {
    for (PowerKind k : {PowerKind::PAC, PowerKind::TPC}) {
      auto c = satellite(std::vector<int>(7, 2));
      c.name = name + (k == PowerKind::PAC ? "_pac" : "_tpc");
      c.power_constraint = k;
      c.csit = {0.8};
      out.push_back(c);
    }
  } else if (name == "fig8") {
    auto c = satellite({8, 1, 1, 1, 1, 1, 1});
    c.csit = {std::nullopt, 0.6};
    out.push_back(c);
  } else {
    throw InvalidInput("unknown preset '" + name + "'");
  }
  for (auto& c : out) {
    c.num_estimates = paper_scale ? 100 : 20;
    c.saa_samples = paper_scale ? 1000 : 100;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trial machinery.

/// Everything drawn once per trial, shared by all power points and CSIT levels.
struct TrialInstance {
  ComplexMatrix channel;
  GroupLayout layout{std::vector<int>{0}};
  std::optional<BeamGeometry> geometry;
};

inline TrialInstance make_trial(const ScenarioConfig& c, int trial) {
  RandomStream st = derive_stream(c.master_seed, {"trial", trial, "channel"});
  TrialInstance t;
  if (c.channel == ChannelKind::Rayleigh) {
    t.layout = GroupLayout::from_sizes(c.group_sizes);
    t.channel = sample_rayleigh(c.nt, t.layout.num_users(), st);
  } else {
    SatelliteParams p;
    p.rain = c.rain;
    t.geometry = place_users(p, c.users_per_beam, st);
    t.layout = t.geometry->layout();
    t.channel = build_satellite_channel(*t.geometry, p, st);
  }
  return t;
}

/// CSIT model of one curve at one power point.
inline CsitModel csit_model(const ScenarioConfig& c, const AlphaSpec& a, double grid_value) {
  if (!a) return CsitModel::perfect_csit();
  return CsitModel::scaling(*a, c.total_power(grid_value));
}

namespace detail {

inline std::string seed_path(int trial, int power_index) {
  return "trial/" + std::to_string(trial) + "/power/" + std::to_string(power_index);
}

struct SchemeOutcome {
  double mmf = 0.0;
  int iters = 0;
  std::string status = "ok";
};

inline AoOptions ao_options(const ScenarioConfig& c) {
  AoOptions o;
  o.tol = c.ao_tol;
  o.max_iter = c.ao_max_iter;
  o.conic.tol = c.conic_tol;
  return o;
}

template <typename F>
SchemeOutcome guarded(F&& f) {
  try {
    return f();
  } catch (const SolverFailure&) {
    return {0.0, 0, "solver-failure"};
  } catch (const RegimeError&) {
    return {0.0, 0, "not-applicable"};
  } catch (const DegenerateInstance&) {
    return {0.0, 0, "degenerate"};
  }
}

}  // namespace detail

/// Runs every scheme of the config for one (trial, CSIT level, power point).
/// NoRS is solved first so that RS can be warm-started from its solution.
inline std::vector<ResultRow> run_point(const ScenarioConfig& c, const TrialInstance& inst, int trial,
                                        int alpha_index, int power_index) {
  const AlphaSpec& a = c.csit[alpha_index];
  const double grid = c.power_grid[power_index];
  const double alpha_eff = a ? *a : 1.0;
  const PowerConstraint pc = c.constraint(grid);
  const CsitModel model = csit_model(c, a, grid);
  const std::string path = detail::seed_path(trial, power_index);
  // Errors are drawn from streams that do not depend on alpha, so curves of
  // different CSIT quality share their standardised draws.
  RandomStream err = derive_stream(c.master_seed, {"trial", trial, "power", power_index, "error"});
  RandomStream saa = derive_stream(c.master_seed, {"trial", trial, "power", power_index, "saa"});
  RandomStream dir = derive_stream(c.master_seed, {"trial", trial, "power", power_index, "common_dir"});
  const CsitSample cs = split_estimate(inst.channel, model, err);
  const ConditionalSampleSet samples = conditional_samples(cs.estimate, c.saa_samples, model, saa);
  const GroupLayout& layout = inst.layout;
  const AoOptions opt = detail::ao_options(c);

  std::optional<MmfSolution> nors;
  auto solve_nors_once = [&]() -> const MmfSolution& {
    if (!nors) {
      RandomStream s = dir.child({"nors"});
      const PrecoderSet init = initial_precoders(cs.estimate, layout, pc, alpha_eff, Scheme::NoRS, s);
      nors = solve_nors(cs.estimate, samples, layout, pc, init, opt);
    }
    return *nors;
  };

  std::vector<ResultRow> rows;
  std::vector<SchemeKind> order = c.schemes;
  std::stable_sort(order.begin(), order.end(), [](SchemeKind x, SchemeKind y) {
    return (x == SchemeKind::NoRS) > (y == SchemeKind::NoRS);
  });
  for (SchemeKind s : order) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::SchemeOutcome out;
    switch (s) {
      case SchemeKind::NoRS:
        out = detail::guarded([&] {
          const MmfSolution& sol = solve_nors_once();
          return detail::SchemeOutcome{sol.mmf, sol.iterations, sol.converged ? "ok" : "max-iter"};
        });
        break;
      case SchemeKind::RS:
        out = detail::guarded([&] {
          // Multi-start: the DoF construction, and the NoRS optimum with a weak
          // common stream added. The NoRS optimum itself is RS-feasible
          // (p_c = 0, zero split) and is kept if neither start beats it.
          RandomStream s1 = dir.child({"rs"});
          const PrecoderSet init = initial_precoders(cs.estimate, layout, pc, alpha_eff, Scheme::RS, s1);
          MmfSolution best = ao_solve(cs.estimate, samples, layout, pc, init, opt);
          int iters = best.iterations;
          bool converged = best.converged;
          std::optional<MmfSolution> ref;
          try {
            ref = solve_nors_once();
          } catch (const SolverFailure&) {
          }
          if (ref) {
            PrecoderSet warm = ref->precoders;
            const double eps = 1e-3;
            warm.privates *= std::sqrt(1.0 - eps);
            warm.common = std::sqrt(eps * pc.nominal_total()) *
                          detail::common_direction(cs.estimate);
            detail::fit_power(warm, pc);
            MmfSolution second = ao_solve(cs.estimate, samples, layout, pc, warm, opt);
            iters += second.iterations;
            converged = converged && second.converged;
            if (second.mmf > best.mmf) best = std::move(second);
            if (ref->mmf > best.mmf) best.mmf = ref->mmf;
          }
          return detail::SchemeOutcome{best.mmf, iters, converged ? "ok" : "max-iter"};
        });
        break;
      case SchemeKind::DofConstructionNoRS:
        out = detail::guarded([&] {
          const Regime r = classify_regime(layout, c.nt);
          PrecoderSet p;
          if (r == Regime::Underloaded) p = build_nors_underloaded(cs.estimate, layout, pc.nominal_total());
          else if (r == Regime::PartiallyOverloaded)
            p = build_nors_partial(cs.estimate, layout, pc.nominal_total(), alpha_eff);
          else throw RegimeError("no NoRS construction in the fully overloaded regime");
          detail::fit_power(p, pc);
          const MmfEvaluation ev = evaluate_mmf(average_rates(samples, p, layout), layout);
          return detail::SchemeOutcome{ev.mmf, 0, "ok"};
        });
        break;
      case SchemeKind::DofConstructionRS:
        out = detail::guarded([&] {
          RandomStream s1 = dir.child({"construction"});
          PrecoderSet p;
          CommonShareRule rule;
          if (classify_regime(layout, c.nt) == Regime::Underloaded) {
            std::tie(p, rule) = build_rs_underloaded(cs.estimate, layout, pc.nominal_total(), alpha_eff, s1);
          } else {
            OverloadPartition part;
            std::tie(p, part) = build_rs_overloaded(cs.estimate, layout, pc.nominal_total(), alpha_eff, s1);
            rule = share_rule(part, layout.num_groups());
          }
          detail::fit_power(p, pc);
          const MmfEvaluation ev = evaluate_mmf(average_rates(samples, p, layout), layout, rule);
          return detail::SchemeOutcome{ev.mmf, 0, "ok"};
        });
        break;
      case SchemeKind::FourColor:
        out = detail::guarded([&] {
          SatelliteParams sp;
          sp.rain = c.rain;
          const FourColorResult fc = four_color_rates(inst.channel, *inst.geometry, sp, grid);
          return detail::SchemeOutcome{fc.mmf, 0, "ok"};
        });
        break;
    }
    ResultRow row;
    row.scenario = c.name;
    row.scheme = to_string(s);
    row.power = grid;
    row.alpha = alpha_label(a);
    row.trial = trial;
    row.mmf_bits = out.mmf;
    row.iters = out.iters;
    row.status = out.status;
    row.seed_path = path;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    row.scheme_index = static_cast<int>(std::find(c.schemes.begin(), c.schemes.end(), s) - c.schemes.begin());
    row.power_index = power_index;
    row.alpha_index = alpha_index;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& x, const ResultRow& y) {
    return std::tie(x.scenario, x.scheme_index, x.alpha_index, x.power_index, x.trial) <
           std::tie(y.scenario, y.scheme_index, y.alpha_index, y.power_index, y.trial);
  });
}

/// Runs the whole scenario on `jobs` worker threads (0 = hardware concurrency).
inline std::vector<ResultRow> run_scenario(const ScenarioConfig& c, int jobs = 0) {
  c.validate();
  const int np = static_cast<int>(c.power_grid.size());
  const int na = static_cast<int>(c.csit.size());
  const int total = c.num_estimates * na * np;
  if (jobs <= 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, total);

  std::vector<ResultRow> rows;
  std::mutex mu;
  std::atomic<int> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    try {
      for (int task; (task = next.fetch_add(1)) < total;) {
        const int trial = task / (na * np);
        const int alpha_index = (task / np) % na;
        const int power_index = task % np;
        const TrialInstance inst = make_trial(c, trial);
        auto part = run_point(c, inst, trial, alpha_index, power_index);
        std::lock_guard<std::mutex> lock(mu);
        rows.insert(rows.end(), part.begin(), part.end());
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) failure = std::current_exception();
      next = total;
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// Summaries and CSV.

struct SummaryRow {
  std::string scenario, scheme, alpha;
  double power = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  int count = 0;
  int failed = 0;
  int scheme_index = 0, power_index = 0, alpha_index = 0;
};

/// Ergodic mean and standard error per (scenario, scheme, alpha, power) over successful rows.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, int, int, int>, SummaryRow> acc;
  std::map<std::tuple<std::string, int, int, int>, std::vector<double>> values;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.scenario, r.scheme_index, r.alpha_index, r.power_index);
    SummaryRow& s = acc[key];
    s.scenario = r.scenario;
    s.scheme = r.scheme;
    s.alpha = r.alpha;
    s.power = r.power;
    s.scheme_index = r.scheme_index;
    s.power_index = r.power_index;
    s.alpha_index = r.alpha_index;
    if (r.succeeded()) values[key].push_back(r.mmf_bits);
    else ++s.failed;
  }
  std::vector<SummaryRow> out;
  for (auto& [key, s] : acc) {
    const auto& v = values[key];
    s.count = static_cast<int>(v.size());
    if (s.count > 0) {
      double sum = 0.0;
      for (double x : v) sum += x;
      s.mean = sum / s.count;
      if (s.count > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stderr_ = std::sqrt(ss / (s.count - 1) / s.count);
      }
    } else {
      s.mean = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(s);
  }
  return out;
}

/// Mean MMF of one summary point, NaN if absent.
inline double summary_value(const std::vector<SummaryRow>& s, const std::string& scheme,
                            const std::string& alpha, double power) {
  for (const auto& r : s)
    if (r.scheme == scheme && r.alpha == alpha && r.power == power) return r.mean;
  return std::numeric_limits<double>::quiet_NaN();
}

inline void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "scenario,scheme,power,alpha,trial,mmf_bits,iters,status,seed_path,wall_ms\n";
  os << std::setprecision(9);
  for (const auto& r : rows)
    os << r.scenario << ',' << r.scheme << ',' << r.power << ',' << r.alpha << ',' << r.trial << ','
       << r.mmf_bits << ',' << r.iters << ',' << r.status << ',' << r.seed_path << ',' << r.wall_ms
       << '\n';
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& s) {
  os << "scenario,scheme,power,alpha,mmf_mean_bits,mmf_stderr_bits,count,failed\n";
  os << std::setprecision(9);
  for (const auto& r : s)
    os << r.scenario << ',' << r.scheme << ',' << r.power << ',' << r.alpha << ',' << r.mean << ','
       << r.stderr_ << ',' << r.count << ',' << r.failed << '\n';
}

// ---------------------------------------------------------------------------
// DoF report.

struct DofReportRow {
  std::string scheme, alpha, regime;
  double predicted = 0.0;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double deviation = std::numeric_limits<double>::quiet_NaN();
};

/// Default high-SNR fit window (dB).
inline std::vector<double> dof_fit_window() { return {25, 30, 35, 40}; }

/// Predicted MMF-DoF against the slope fitted to the ergodic MMF rate over the
/// top of the SNR grid. Predictions are achievable lower bounds.
inline std::vector<DofReportRow> dof_report(const std::vector<ResultRow>& rows,
                                            const ScenarioConfig& c,
                                            const std::vector<double>& window = dof_fit_window()) {
  detail::require(c.channel == ChannelKind::Rayleigh, "dof_report: needs a Rayleigh scenario (SNR grid in dB)");
  detail::require(window.size() >= 2, "dof_report: need >= 2 fit points");
  const GroupLayout layout = GroupLayout::from_sizes(c.group_sizes);
  const auto summary = summarize(rows);
  std::vector<DofReportRow> out;
  for (SchemeKind s : c.schemes) {
    if (s == SchemeKind::FourColor) continue;
    const bool rs = s == SchemeKind::RS || s == SchemeKind::DofConstructionRS;
    for (const auto& a : c.csit) {
      const double alpha = a ? *a : 1.0;
      const DofPrediction pred = rs ? rs_dof(layout, c.nt, alpha) : nors_dof(layout, c.nt, alpha);
      DofReportRow r;
      r.scheme = to_string(s);
      r.alpha = alpha_label(a);
      r.regime = to_string(pred.regime);
      r.predicted = pred.value;
      std::vector<std::pair<double, double>> pts;
      for (double db : window) {
        const double v = summary_value(summary, r.scheme, r.alpha, db);
        if (std::isfinite(v)) pts.emplace_back(db_to_linear(db), v);
      }
      if (pts.size() >= 2) {
        r.slope = estimate_dof_slope(pts);
        r.deviation = std::abs(r.slope - r.predicted);
      }
      out.push_back(r);
    }
  }
  return out;
}

inline void write_dof_report(std::ostream& os, const std::vector<DofReportRow>& rep) {
  os << "scheme,alpha,regime,predicted_dof,fitted_slope,abs_deviation\n";
  os << std::setprecision(9);
  for (const auto& r : rep)
    os << r.scheme << ',' << r.alpha << ',' << r.regime << ',' << r.predicted << ',' << r.slope
       << ',' << r.deviation << '\n';
}

}  // namespace rsmmf
