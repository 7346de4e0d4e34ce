#include <catch_amalgamated.hpp>

#include <cmath>

#include "common/oracles.hpp"
#include "rsmmf/csit.hpp"
#include "rsmmf/model.hpp"

using namespace rsmmf;
using Catch::Approx;

namespace {

ComplexVector unit(int n, int i) {
  ComplexVector v = ComplexVector::Zero(n);
  v(i) = 1.0;
  return v;
}

// |h^H p|^2 in long double.
long double gain(const ComplexVector& h, const ComplexVector& p) {
  long double re = 0, im = 0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const long double hr = h(i).real(), hi = -h(i).imag();  // conj(h)
    const long double pr = p(i).real(), pi = p(i).imag();
    re += hr * pr - hi * pi;
    im += hr * pi + hi * pr;
  }
  return re * re + im * im;
}

PrecoderSet random_precoders(int nt, int m, bool common, RandomStream& st) {
  PrecoderSet p = PrecoderSet::zeros(nt, m, common);
  p.privates = sample_rayleigh(nt, m, st);
  if (common) p.common = sample_rayleigh(nt, 1, st).col(0);
  return p;
}

}  // namespace

TEST_CASE("group layout canonicalises groups to ascending size") {
  GroupLayout l({0, 0, 0, 1, 2, 2});  // sizes 3, 1, 2
  CHECK(l.num_users() == 6);
  CHECK(l.num_groups() == 3);
  CHECK(l.sizes() == std::vector<int>{1, 2, 3});
  CHECK(l.group_of(3) == 0);
  CHECK(l.group_of(4) == 1);
  CHECK(l.group_of(0) == 2);
  CHECK(l.original_group(2) == 0);
  CHECK(l.members(1) == std::vector<int>{4, 5});
  CHECK(l.users_excluding({2}) == std::vector<int>{3, 4, 5});
}

TEST_CASE("group layout rejects gaps and empty input") {
  CHECK_THROWS_AS(GroupLayout(std::vector<int>{}), InvalidInput);
  CHECK_THROWS_AS(GroupLayout(std::vector<int>{0, 2}), InvalidInput);
  CHECK_THROWS_AS(GroupLayout::from_sizes({1, 0}), InvalidInput);
}

TEST_CASE("radiated power of zero precoders") {
  const PrecoderSet p = PrecoderSet::zeros(3, 2, true);
  const PowerConstraint pc = PowerConstraint::pac(3, 3.0);
  CHECK(radiated_power(p, pc).isZero());
  CHECK(power_feasible(p, pc));
}

TEST_CASE("radiated power under TPC equals the squared norm") {
  PrecoderSet p = PrecoderSet::zeros(2, 1, false);
  p.privates(0, 0) = cplx(0.0, 2.0);
  const RealVector r = radiated_power(p, PowerConstraint::tpc(2, 4.0));
  CHECK(r.size() == 1);
  CHECK(r(0) == Approx(4.0));
  CHECK(power_feasible(p, PowerConstraint::tpc(2, 4.0)));
}

TEST_CASE("radiated power under PAC is per antenna") {
  PrecoderSet p = PrecoderSet::zeros(2, 1, false);
  p.privates(0, 0) = 1.0;
  p.privates(1, 0) = 2.0;
  const PowerConstraint pc = PowerConstraint::pac(2, 10.0);
  const RealVector r = radiated_power(p, pc);
  CHECK(r(0) == Approx(1.0));
  CHECK(r(1) == Approx(4.0));
  CHECK(pc.limits(1) == Approx(5.0));
  CHECK(power_feasible(p, pc));
  p.privates(1, 0) = 2.3;
  CHECK_FALSE(power_feasible(p, pc));
}

TEST_CASE("radiated power rejects mismatched dimensions") {
  CHECK_THROWS_AS(radiated_power(PrecoderSet::zeros(3, 1, false), PowerConstraint::tpc(2, 1.0)),
                  InvalidInput);
}

TEST_CASE("common SINR of a single stream equals the transmit SNR") {
  PrecoderSet p = PrecoderSet::zeros(2, 0, true);
  const double power = 7.0;
  p.common = std::sqrt(power) * unit(2, 0);
  CHECK(sinr_common(unit(2, 0), p) == Approx(power));
}

TEST_CASE("common SINR vanishes for an orthogonal common precoder") {
  PrecoderSet p = PrecoderSet::zeros(2, 1, true);
  p.common = unit(2, 1);
  p.privates.col(0) = unit(2, 0);
  CHECK(sinr_common(unit(2, 0), p) == 0.0);
}

TEST_CASE("SINRs match an extended-precision direct evaluation") {
  RandomStream st = derive_stream(3, {"sinr"});
  for (int trial = 0; trial < 50; ++trial) {
    const PrecoderSet p = random_precoders(3, 2, true, st);
    const ComplexVector h = sample_rayleigh(3, 1, st).col(0);
    const double noise = 0.7;
    const long double g0 = gain(h, p.privates.col(0)), g1 = gain(h, p.privates.col(1));
    const long double gc = gain(h, *p.common);
    const double ref_c = static_cast<double>(gc / (g0 + g1 + noise));
    const double ref_p0 = static_cast<double>(g0 / (g1 + noise));
    const double ref_p1 = static_cast<double>(g1 / (g0 + noise));
    CHECK(sinr_common(h, p, noise) == Approx(ref_c).epsilon(1e-12));
    CHECK(sinr_private(h, p, 0, noise) == Approx(ref_p0).epsilon(1e-12));
    CHECK(sinr_private(h, p, 1, noise) == Approx(ref_p1).epsilon(1e-12));
  }
}

TEST_CASE("single-group rate is log2(1 + P)") {
  const double power = 15.0;
  PrecoderSet p = PrecoderSet::zeros(2, 1, false);
  p.privates.col(0) = std::sqrt(power) * unit(2, 0);
  ComplexMatrix h = ComplexMatrix::Zero(2, 1);
  h(0, 0) = 1.0;
  const GroupLayout l = GroupLayout::from_sizes({1});
  CHECK(sinr_private(h.col(0), p, 0) == Approx(power));
  const RateReport r = rate_report(h, p, l, CommonRateSplit::zeros(1));
  CHECK(r.group[0] == Approx(std::log2(1.0 + power)));
  CHECK(r.mmf == Approx(std::log2(1.0 + power)));
}

TEST_CASE("orthogonal zero-forcing precoders leave no interference") {
  PrecoderSet p = PrecoderSet::zeros(2, 2, false);
  p.privates.col(0) = 2.0 * unit(2, 0);
  p.privates.col(1) = 3.0 * unit(2, 1);
  CHECK(sinr_private(unit(2, 0), p, 0) == Approx(4.0));
  CHECK(sinr_private(unit(2, 1), p, 1) == Approx(9.0));
}

TEST_CASE("RS with zero common power and zero split reproduces NoRS exactly") {
  RandomStream st = derive_stream(4, {"degenerate-rs"});
  const GroupLayout l = GroupLayout::from_sizes({2, 2});
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix h = sample_rayleigh(3, 4, st);
    PrecoderSet nors = random_precoders(3, 2, false, st);
    PrecoderSet rs = nors;
    rs.common = ComplexVector::Zero(3);
    const RateReport a = rate_report(h, nors, l, CommonRateSplit::zeros(2));
    const RateReport b = rate_report(h, rs, l, CommonRateSplit::zeros(2));
    CHECK(a.mmf == b.mmf);
    CHECK(a.group == b.group);
    CHECK(a.private_user == b.private_user);
    CHECK(b.common == 0.0);
  }
}

TEST_CASE("group rate is the split portion plus the weakest member's private rate") {
  RandomStream st = derive_stream(5, {"group-min"});
  const GroupLayout l = GroupLayout::from_sizes({2, 2});
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix h = sample_rayleigh(3, 4, st);
    const PrecoderSet p = random_precoders(3, 2, true, st);
    double rc = std::numeric_limits<double>::infinity();
    std::vector<double> rk(4);
    for (int k = 0; k < 4; ++k) {
      const long double g0 = gain(h.col(k), p.privates.col(0)), g1 = gain(h.col(k), p.privates.col(1));
      const long double gc = gain(h.col(k), *p.common);
      const long double own = l.group_of(k) == 0 ? g0 : g1, other = l.group_of(k) == 0 ? g1 : g0;
      rk[k] = std::log2(1.0 + static_cast<double>(own / (other + 1)));
      rc = std::min(rc, std::log2(1.0 + static_cast<double>(gc / (g0 + g1 + 1))));
    }
    const CommonRateSplit split{{0.4 * rc, 0.6 * rc}};
    const RateReport r = rate_report(h, p, l, split);
    CHECK(r.common == Approx(rc).epsilon(1e-12));
    for (int g = 0; g < 2; ++g) {
      double weakest = std::numeric_limits<double>::infinity();
      for (int k : l.members(g)) weakest = std::min(weakest, rk[k]);
      CHECK(r.private_group[g] == Approx(weakest).epsilon(1e-12));
      CHECK(r.group[g] == Approx(split.portions[g] + weakest).epsilon(1e-12));
      CHECK(r.mmf <= r.group[g]);
      for (int k : l.members(g)) CHECK(r.private_group[g] <= r.private_user[k]);
    }
  }
}

TEST_CASE("rate report rejects an over-allocated common rate") {
  PrecoderSet p = PrecoderSet::zeros(2, 1, true);
  p.common = unit(2, 0);
  p.privates.col(0) = unit(2, 1);
  ComplexMatrix h = ComplexMatrix::Identity(2, 1);
  const GroupLayout l = GroupLayout::from_sizes({1});
  CHECK_THROWS_AS(rate_report(h, p, l, CommonRateSplit{{1.01}}), ConstraintViolation);
  CHECK_THROWS_AS(rate_report(h, p, l, CommonRateSplit{{-0.1}}), ConstraintViolation);
  CHECK_NOTHROW(rate_report(h, p, l, CommonRateSplit{{1.0}}));
}

TEST_CASE("SINRs are invariant to a common phase rotation") {
  RandomStream st = derive_stream(6, {"phase"});
  PrecoderSet p = random_precoders(3, 2, true, st);
  const ComplexVector h = sample_rayleigh(3, 1, st).col(0);
  PrecoderSet q = p;
  const cplx rot = std::polar(1.0, 0.77);
  q.privates *= rot;
  *q.common *= rot;
  CHECK(sinr_common(h, q) == Approx(sinr_common(h, p)).epsilon(1e-13));
  CHECK(sinr_private(h, q, 1) == Approx(sinr_private(h, p, 1)).epsilon(1e-13));
}

TEST_CASE("scaling the single-group precoder up never lowers the SINR") {
  RandomStream st = derive_stream(7, {"monotone"});
  PrecoderSet p = random_precoders(3, 1, false, st);
  const ComplexVector h = sample_rayleigh(3, 1, st).col(0);
  double prev = sinr_private(h, p, 0);
  for (int i = 0; i < 5; ++i) {
    p.scale(1.5);
    const double now = sinr_private(h, p, 0);
    CHECK(now >= prev);
    prev = now;
  }
}

TEST_CASE("removing a user never lowers its group's rate") {
  RandomStream st = derive_stream(8, {"subset"});
  const ComplexMatrix h = sample_rayleigh(3, 3, st);
  const PrecoderSet p = random_precoders(3, 1, false, st);
  const RateReport full = rate_report(h, p, GroupLayout::from_sizes({3}), CommonRateSplit::zeros(1));
  const RateReport part =
      rate_report(h.leftCols(2), p, GroupLayout::from_sizes({2}), CommonRateSplit::zeros(1));
  CHECK(part.group[0] >= full.group[0]);
}

TEST_CASE("max-min split levels the weakest groups") {
  const auto s = max_min_split(3.0, {1.0, 2.0, 5.0});
  // raise 1 -> 2 (cost 1), then both to 3 (cost 2): total 3
  CHECK(s[0] == Approx(2.0));
  CHECK(s[1] == Approx(1.0));
  CHECK(s[2] == Approx(0.0));
  const auto z = max_min_split(0.0, {1.0, 2.0});
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
}
