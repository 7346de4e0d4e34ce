#pragma once

// Log-barrier interior-point solver for the small convex QCQPs produced by one
// WMMSE iteration:
//
//   maximize x[objective]
//   s.t.     sum_t x_{b_t}^T Q_{f_t} x_{b_t} + a_i^T x + c_i <= 0,   i = 1..m
//
// where every Q is symmetric PSD and acts on a contiguous block of x. Complex
// precoders are stacked in real coordinates [Re p; Im p] by the caller.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rsmmf/numerics.hpp"

namespace rsmmf {

struct QcqpBlock {
  int offset = 0;
  int size = 0;
};

struct QuadTerm {
  int block = 0;
  int form = 0;
};

struct QcqpConstraint {
  std::vector<QuadTerm> terms;
  std::vector<std::pair<int, double>> linear;
  double constant = 0.0;
  std::string label;
};

/// Convex max-min QCQP in stacked real coordinates.
struct MaxMinQcqp {
  int num_vars = 0;
  int objective = 0;
  std::vector<std::string> var_names;
  std::vector<QcqpBlock> blocks;
  std::vector<RealMatrix> forms;
  std::vector<QcqpConstraint> constraints;

  int add_block(int offset, int size) {
    blocks.push_back({offset, size});
    return static_cast<int>(blocks.size()) - 1;
  }
  int add_form(RealMatrix q) {
    forms.push_back(std::move(q));
    return static_cast<int>(forms.size()) - 1;
  }

  double value(int i, const RealVector& x) const {
    const auto& c = constraints[i];
    double v = c.constant;
    for (const auto& [idx, coef] : c.linear) v += coef * x(idx);
    for (const auto& t : c.terms) {
      const auto& b = blocks[t.block];
      const auto xb = x.segment(b.offset, b.size);
      v += xb.dot(forms[t.form] * xb);
    }
    return v;
  }

  /// Largest constraint value; negative iff x is strictly feasible.
  double max_value(const RealVector& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(constraints.size()); ++i)
      worst = std::max(worst, value(i, x));
    return worst;
  }

  double max_violation(const RealVector& x) const {
    double worst = 0.0;
    for (int i = 0; i < static_cast<int>(constraints.size()); ++i)
      worst = std::max(worst, value(i, x));
    return worst;
  }

  /// Throws InvalidInput unless every form is symmetric PSD and indices are in range.
  void certify_convex() const {
    for (const auto& b : blocks)
      detail::require(b.offset >= 0 && b.size >= 0 && b.offset + b.size <= num_vars,
                      "MaxMinQcqp: block out of range");
    for (const auto& q : forms) {
      detail::require(q.rows() == q.cols(), "MaxMinQcqp: form must be square");
      if (q.rows() == 0) continue;
      const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
      detail::require((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
                      "MaxMinQcqp: form is not symmetric");
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(q, Eigen::EigenvaluesOnly);
      detail::require(es.eigenvalues().minCoeff() >= -1e-9 * scale,
                      "MaxMinQcqp: form is not positive semidefinite");
    }
    for (const auto& c : constraints) {
      for (const auto& t : c.terms) {
        detail::require(t.block >= 0 && t.block < static_cast<int>(blocks.size()) && t.form >= 0 &&
                            t.form < static_cast<int>(forms.size()),
                        "MaxMinQcqp: term index out of range");
        detail::require(forms[t.form].rows() == blocks[t.block].size,
                        "MaxMinQcqp: form/block size mismatch");
      }
      for (const auto& [idx, coef] : c.linear)
        detail::require(idx >= 0 && idx < num_vars && std::isfinite(coef),
                        "MaxMinQcqp: linear index out of range");
    }
    detail::require(objective >= 0 && objective < num_vars, "MaxMinQcqp: bad objective index");
  }

  /// Self-describing text dump for offline inspection.
  void dump(std::ostream& os) const {
    os.precision(17);
    os << "# max-min qcqp: maximize x[objective] s.t. sum x_b^T Q x_b + a^T x + c <= 0\n";
    os << "variables " << num_vars << "\nobjective " << objective << "\n";
    for (int i = 0; i < static_cast<int>(var_names.size()); ++i)
      os << "var " << i << ' ' << var_names[i] << "\n";
    for (int i = 0; i < static_cast<int>(blocks.size()); ++i)
      os << "block " << i << ' ' << blocks[i].offset << ' ' << blocks[i].size << "\n";
    for (int f = 0; f < static_cast<int>(forms.size()); ++f) {
      os << "form " << f << ' ' << forms[f].rows() << "\n";
      for (Eigen::Index r = 0; r < forms[f].rows(); ++r) {
        for (Eigen::Index c = 0; c < forms[f].cols(); ++c) os << (c ? " " : "") << forms[f](r, c);
        os << "\n";
      }
    }
    for (int i = 0; i < static_cast<int>(constraints.size()); ++i) {
      const auto& c = constraints[i];
      os << "constraint " << i << ' ' << (c.label.empty() ? "-" : c.label) << " constant "
         << c.constant << "\n";
      for (const auto& t : c.terms) os << "  term " << t.block << ' ' << t.form << "\n";
      for (const auto& [idx, coef] : c.linear) os << "  linear " << idx << ' ' << coef << "\n";
    }
    os << "end\n";
  }
};

enum class ConicStatus { Optimal, MaxIterations, Infeasible };

inline std::string to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::Optimal: return "optimal";
    case ConicStatus::MaxIterations: return "max-iterations";
    case ConicStatus::Infeasible: return "infeasible";
  }
  return "?";
}

struct ConicResult {
  RealVector x;
  double objective = -std::numeric_limits<double>::infinity();
  double max_violation = 0.0;
  double gap = std::numeric_limits<double>::infinity();  // m / t at the last centre
  ConicStatus status = ConicStatus::MaxIterations;
  int newton_steps = 0;
};

struct ConicOptions {
  double tol = 1e-9;         // target duality gap m/t
  double mu = 20.0;          // barrier parameter growth
  double t0 = 1.0;
  int max_newton = 2000;     // over all centring steps
  double newton_eps = 1e-10; // lambda^2 / 2 stopping threshold per centring
  int max_centring = 80;     // Newton steps per centring
};

namespace detail {

// Centres the barrier problem min  -t x[obj] - sum log(-f_i(x)) repeatedly,
// growing t, starting from a strictly feasible x. `early_stop` is polled after
// every Newton step.
template <typename Stop>
ConicResult barrier_solve(const MaxMinQcqp& p, RealVector x, const ConicOptions& opt,
                          Stop early_stop) {
  const int n = p.num_vars;
  const int m = static_cast<int>(p.constraints.size());
  ConicResult res;
  res.x = x;

  RealVector f(m);
  RealMatrix grads(n, m);
  // Per constraint, per term: Q x_b (reused for gradients).
  auto evaluate = [&](const RealVector& pt) {
    grads.setZero();
    for (int i = 0; i < m; ++i) {
      const auto& c = p.constraints[i];
      double v = c.constant;
      for (const auto& [idx, coef] : c.linear) {
        v += coef * pt(idx);
        grads(idx, i) += coef;
      }
      for (const auto& t : c.terms) {
        const auto& b = p.blocks[t.block];
        const RealVector qx = p.forms[t.form] * pt.segment(b.offset, b.size);
        v += pt.segment(b.offset, b.size).dot(qx);
        grads.col(i).segment(b.offset, b.size) += 2.0 * qx;
      }
      f(i) = v;
    }
  };

  double t = opt.t0;
  RealMatrix hess(n, n);
  RealVector grad(n), dx(n), scale(n);
  RealVector lin_b(m), quad_a(m);

  if (m == 0) {
    res.status = ConicStatus::Infeasible;  // unbounded objective is not a valid instance
    return res;
  }

  for (;;) {
    // Centring.
    for (int steps = 0; steps < opt.max_centring; ++steps) {
      if (res.newton_steps >= opt.max_newton) {
        res.x = x;
        res.objective = x(p.objective);
        res.max_violation = p.max_violation(x);
        res.gap = m / t;
        res.status = ConicStatus::MaxIterations;
        return res;
      }
      evaluate(x);
      RealVector inv = (-f).cwiseInverse();  // 1 / (-f_i) > 0
      grad = grads * inv;
      grad(p.objective) -= t;

      RealMatrix gs = grads * inv.asDiagonal();
      hess.setZero();
      hess.selfadjointView<Eigen::Lower>().rankUpdate(gs);
      for (int i = 0; i < m; ++i) {
        for (const auto& tm : p.constraints[i].terms) {
          const auto& b = p.blocks[tm.block];
          hess.block(b.offset, b.offset, b.size, b.size).template triangularView<Eigen::Lower>() +=
              (2.0 * inv(i)) * p.forms[tm.form];
        }
      }
      hess.template triangularView<Eigen::StrictlyUpper>() = hess.transpose();

      // Jacobi scaling before factorisation.
      for (int j = 0; j < n; ++j) scale(j) = 1.0 / std::sqrt(std::max(hess(j, j), 1e-300));
      RealMatrix hs = scale.asDiagonal() * hess * scale.asDiagonal();
      Eigen::LDLT<RealMatrix> ldlt(hs);
      RealVector rhs = -scale.cwiseProduct(grad);
      dx = scale.cwiseProduct(ldlt.solve(rhs));
      if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
        hs.diagonal().array() += 1e-10;
        Eigen::LDLT<RealMatrix> ldlt2(hs);
        dx = scale.cwiseProduct(ldlt2.solve(rhs));
      }
      ++res.newton_steps;
      const double lambda2 = -grad.dot(dx);
      if (!(lambda2 >= 0.0) || !dx.allFinite()) break;  // numerically centred
      // The decrement cannot be resolved below the rounding level of t * x[obj].
      const double floor = 1e-13 * t * std::max(1.0, std::abs(x(p.objective)));
      if (lambda2 / 2.0 <= std::max(opt.newton_eps, floor)) break;

      // Exact line search data: f_i(x + s dx) = f_i + b_i s + a_i s^2.
      lin_b = grads.transpose() * dx;
      for (int i = 0; i < m; ++i) {
        double a = 0.0;
        for (const auto& tm : p.constraints[i].terms) {
          const auto& b = p.blocks[tm.block];
          const auto d = dx.segment(b.offset, b.size);
          a += d.dot(p.forms[tm.form] * d);
        }
        quad_a(i) = a;
      }
      double smax = 1.0;
      for (int i = 0; i < m; ++i) {
        // smallest positive root of f + b s + a s^2 = 0
        const double a = quad_a(i), b = lin_b(i), c = f(i);
        double root = std::numeric_limits<double>::infinity();
        if (a > 0.0) {
          const double disc = b * b - 4.0 * a * c;  // c < 0 so disc > b^2
          const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
          const double r1 = q / a, r2 = c / q;
          root = std::max(r1, r2);
        } else if (b > 0.0) {
          root = -c / b;
        }
        smax = std::min(smax, 0.99 * root);
      }
      auto phi = [&](double s) {
        double v = -t * s * dx(p.objective);
        for (int i = 0; i < m; ++i) {
          const double fi = f(i) + s * (lin_b(i) + s * quad_a(i));
          if (!(fi < 0.0)) return std::numeric_limits<double>::infinity();
          v -= std::log(-fi / -f(i));
        }
        return v;
      };
      double s = smax;
      const double slope = grad.dot(dx);
      int backtracks = 0;
      while (phi(s) > 0.01 * s * slope && backtracks < 60) {
        s *= 0.5;
        ++backtracks;
      }
      if (backtracks >= 60) break;
      x += s * dx;
      if (s * dx.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) break;
      if (early_stop(x)) {
        res.x = x;
        res.objective = x(p.objective);
        res.max_violation = p.max_violation(x);
        res.gap = m / t;
        res.status = ConicStatus::Optimal;
        return res;
      }
    }
    if (m / t < opt.tol) break;
    t *= opt.mu;
  }
  res.x = x;
  res.objective = x(p.objective);
  res.max_violation = p.max_violation(x);
  res.gap = m / t;
  res.status = ConicStatus::Optimal;
  return res;
}

}  // namespace detail

/// Solves the QCQP. `start` may be any point; if it is not strictly feasible a
/// phase-I problem (maximise the uniform slack w, capped at 1) finds one first.
inline ConicResult solve(const MaxMinQcqp& problem, std::optional<RealVector> start = std::nullopt,
                         const ConicOptions& opt = {}) {
  problem.certify_convex();
  const int n = problem.num_vars;
  RealVector x = start ? *start : RealVector::Zero(n);
  detail::require(x.size() == n, "solve: start has wrong dimension");
  detail::require(x.allFinite(), "solve: start is not finite");

  const double worst = problem.max_value(x);

  if (!(worst < 0.0)) {
    MaxMinQcqp ph = problem;
    const int w = n;
    ph.num_vars = n + 1;
    ph.objective = w;
    ph.var_names.push_back("phase1_slack");
    for (auto& c : ph.constraints) c.linear.emplace_back(w, 1.0);
    ph.constraints.push_back({{}, {{w, 1.0}}, -1.0, "phase1_cap"});
    // Free variables (e.g. the objective) would make the phase-I barrier
    // unbounded; confine the search to a large ball around the start.
    {
      const double radius = 1e4 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
      QcqpConstraint ball;
      ball.terms.push_back({ph.add_block(0, n), ph.add_form(RealMatrix::Identity(n, n))});
      for (int i = 0; i < n; ++i)
        if (x(i) != 0.0) ball.linear.emplace_back(i, -2.0 * x(i));
      ball.constant = x.squaredNorm() - radius * radius;
      ball.label = "phase1_ball";
      ph.constraints.push_back(std::move(ball));
    }
    RealVector x1(n + 1);
    x1.head(n) = x;
    x1(w) = -worst - 1.0;
    ConicOptions o1 = opt;
    o1.tol = 1e-6;
    const ConicResult r1 = detail::barrier_solve(ph, x1, o1, [&](const RealVector& pt) {
      return pt(w) > 1e-9 && problem.max_value(pt.head(n)) < 0.0;
    });
    if (!(r1.x(w) > 0.0) || !(problem.max_value(r1.x.head(n)) < 0.0)) {
      ConicResult bad;
      bad.x = r1.x.head(n);
      bad.status = ConicStatus::Infeasible;
      bad.max_violation = problem.max_violation(bad.x);
      bad.newton_steps = r1.newton_steps;
      return bad;
    }
    x = r1.x.head(n);
  }
  return detail::barrier_solve(problem, x, opt, [](const RealVector&) { return false; });
}

// ---------------------------------------------------------------------------
// Complex <-> stacked real helpers.

/// Real symmetric form R with [Re v; Im v]^T R [Re v; Im v] = v^H A v for Hermitian A.
inline RealMatrix hermitian_to_real(const ComplexMatrix& a) {
  const Eigen::Index n = a.rows();
  RealMatrix r(2 * n, 2 * n);
  const RealMatrix re = 0.5 * (a.real() + a.real().transpose());
  const RealMatrix im = 0.5 * (a.imag() - a.imag().transpose());
  r.topLeftCorner(n, n) = re;
  r.bottomRightCorner(n, n) = re;
  r.topRightCorner(n, n) = -im;
  r.bottomLeftCorner(n, n) = im;
  return r;
}

/// Coefficients c with c^T [Re v; Im v] = Re(f^H v).
inline RealVector re_inner_to_real(const ComplexVector& f) {
  RealVector c(2 * f.size());
  c.head(f.size()) = f.real();
  c.tail(f.size()) = f.imag();
  return c;
}

inline RealVector stack_real(const ComplexVector& v) {
  RealVector r(2 * v.size());
  r.head(v.size()) = v.real();
  r.tail(v.size()) = v.imag();
  return r;
}

inline ComplexVector unstack_real(const Eigen::Ref<const RealVector>& r) {
  const Eigen::Index n = r.size() / 2;
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(r(i), r(n + i));
  return v;
}

}  // namespace rsmmf
