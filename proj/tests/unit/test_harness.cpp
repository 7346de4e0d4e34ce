#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rsmmf/config_json.hpp"
#include "rsmmf/harness.hpp"

using namespace rsmmf;
using Catch::Approx;

namespace {

ScenarioConfig small_rayleigh() {
  ScenarioConfig c;
  c.name = "small";
  c.nt = 4;
  c.group_sizes = {1, 2, 3};
  c.csit = {std::nullopt, 0.6};
  c.power_grid = {10, 20};
  c.schemes = {SchemeKind::RS, SchemeKind::NoRS, SchemeKind::DofConstructionRS,
               SchemeKind::DofConstructionNoRS};
  c.num_estimates = 2;
  c.saa_samples = 8;
  c.master_seed = 5;
  return c;
}

std::string csv_without_wall_time(const std::vector<ResultRow>& rows) {
  std::vector<ResultRow> copy = rows;
  for (auto& r : copy) r.wall_ms = 0.0;
  std::ostringstream os;
  write_rows_csv(os, copy);
  return os.str();
}

}  // namespace

TEST_CASE("presets match the documented scenarios") {
  const auto names = preset_names();
  CHECK(names == std::vector<std::string>{"fig1", "fig2", "fig3", "fig5", "fig6", "fig7", "fig8"});

  const auto fig2 = preset("fig2");
  REQUIRE(fig2.size() == 1);
  CHECK(fig2[0].nt == 4);
  CHECK(fig2[0].group_sizes == std::vector<int>{1, 2, 3});
  CHECK(fig2[0].num_estimates == 20);
  CHECK(fig2[0].saa_samples == 100);

  const auto fig1 = preset("fig1", true);
  CHECK(fig1[0].nt == 6);
  CHECK(fig1[0].num_estimates == 100);
  CHECK(fig1[0].saa_samples == 1000);
  CHECK(fig1[0].csit.size() * fig1[0].schemes.size() == 6);

  CHECK(preset("fig3")[0].group_sizes == std::vector<int>{2, 2, 2});

  const auto fig6 = preset("fig6");
  REQUIRE(fig6.size() == 3);
  for (const auto& c : fig6) {
    CHECK(c.power_grid == std::vector<double>{80});
    CHECK(c.channel == ChannelKind::Satellite);
  }
  CHECK(fig6[2].users_per_beam == std::vector<int>(7, 6));

  const auto fig7 = preset("fig7");
  REQUIRE(fig7.size() == 2);
  CHECK(fig7[0].power_constraint == PowerKind::PAC);
  CHECK(fig7[1].power_constraint == PowerKind::TPC);
  CHECK(fig7[0].csit.size() == 1);
  CHECK(*fig7[0].csit[0] == 0.8);

  const auto fig5 = preset("fig5");
  CHECK(fig5[0].users_per_beam == std::vector<int>(7, 2));
  CHECK(std::find(fig5[0].schemes.begin(), fig5[0].schemes.end(), SchemeKind::FourColor) !=
        fig5[0].schemes.end());
  CHECK(fig5[0].power_grid.back() == 130);

  CHECK(preset("fig8")[0].users_per_beam == std::vector<int>{8, 1, 1, 1, 1, 1, 1});
  CHECK_THROWS_AS(preset("fig4"), InvalidInput);
  for (const auto& n : names)
    for (const auto& c : preset(n)) CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation") {
  ScenarioConfig c = small_rayleigh();
  c.csit = {1.5};
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_rayleigh();
  c.schemes = {SchemeKind::FourColor};
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = preset("fig5")[0];
  c.nt = 6;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_rayleigh();
  c.num_estimates = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("power grid conversion") {
  const ScenarioConfig r = small_rayleigh();
  CHECK(r.total_power(20) == Approx(100.0));
  const ScenarioConfig s = preset("fig5")[0];
  CHECK(s.total_power(80) == Approx(560.0));
  const PowerConstraint pac = s.constraint(80);
  CHECK(pac.kind == PowerKind::PAC);
  CHECK(pac.limits(0) == Approx(80.0));
}

TEST_CASE("a scenario run is reproducible and RS dominates NoRS") {
  const ScenarioConfig c = small_rayleigh();
  const auto rows = run_scenario(c, 1);
  CHECK(rows.size() == 2u * 2u * 2u * 4u);
  CHECK(csv_without_wall_time(rows) == csv_without_wall_time(run_scenario(c, 2)));

  std::map<std::tuple<std::string, double, int>, double> nors, rs;
  for (const auto& r : rows) {
    CHECK(r.mmf_bits >= 0.0);
    if (r.scheme == "NoRS") nors[{r.alpha, r.power, r.trial}] = r.mmf_bits;
    if (r.scheme == "RS") rs[{r.alpha, r.power, r.trial}] = r.mmf_bits;
    if (r.scheme == "RS" || r.scheme == "NoRS") CHECK(r.succeeded());
    CHECK(r.seed_path == "trial/" + std::to_string(r.trial) + "/power/" + std::to_string(r.power_index));
  }
  REQUIRE(rs.size() == nors.size());
  for (const auto& [k, v] : nors) CHECK(rs[k] >= v - 1e-6);

  // The constructions do not depend on the optimiser at all.
  for (const auto& r : rows)
    if (r.scheme == "DofConstructionNoRS") CHECK(r.iters == 0);
}

TEST_CASE("a different master seed changes the draws") {
  ScenarioConfig c = small_rayleigh();
  c.schemes = {SchemeKind::DofConstructionRS};
  const auto a = run_scenario(c, 1);
  c.master_seed = 6;
  const auto b = run_scenario(c, 1);
  CHECK(csv_without_wall_time(a) != csv_without_wall_time(b));
}

TEST_CASE("single deterministic optimisation") {
  ScenarioConfig c;
  c.name = "one";
  c.nt = 2;
  c.group_sizes = {1, 1};
  c.csit = {std::nullopt};
  c.power_grid = {10};
  c.schemes = {SchemeKind::NoRS};
  c.num_estimates = 1;
  c.saa_samples = 1;
  const auto rows = run_scenario(c, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == "ok");
  // Direct call with the same draws.
  const TrialInstance inst = make_trial(c, 0);
  const auto again = run_point(c, inst, 0, 0, 0);
  CHECK(again[0].mmf_bits == rows[0].mmf_bits);
}

TEST_CASE("summary statistics and CSV layout") {
  std::vector<ResultRow> rows;
  for (int t = 0; t < 3; ++t) {
    ResultRow r;
    r.scenario = "s";
    r.scheme = "RS";
    r.power = 10;
    r.alpha = "perfect";
    r.trial = t;
    r.mmf_bits = 1.0 + t;
    rows.push_back(r);
  }
  rows[2].status = "solver-failure";
  const auto s = summarize(rows);
  REQUIRE(s.size() == 1);
  CHECK(s[0].mean == Approx(1.5));
  CHECK(s[0].stderr_ == Approx(std::sqrt(0.5 / 2)));
  CHECK(s[0].count == 2);
  CHECK(s[0].failed == 1);
  CHECK(summary_value(s, "RS", "perfect", 10) == Approx(1.5));
  CHECK(std::isnan(summary_value(s, "NoRS", "perfect", 10)));

  std::ostringstream os;
  write_summary_csv(os, s);
  CHECK(os.str() == "scenario,scheme,power,alpha,mmf_mean_bits,mmf_stderr_bits,count,failed\n"
                    "s,RS,10,perfect,1.5,0.5,2,1\n");
  std::ostringstream rs;
  write_rows_csv(rs, rows);
  CHECK(rs.str().rfind("scenario,scheme,power,alpha,trial,mmf_bits,iters,status,seed_path,wall_ms\n", 0) == 0);
}

TEST_CASE("satellite scenario with the four-colour baseline") {
  ScenarioConfig c = preset("fig5")[0];
  c.users_per_beam = std::vector<int>(7, 1);
  c.power_grid = {80};
  c.csit = {std::nullopt};
  c.num_estimates = 1;
  c.saa_samples = 2;
  const auto rows = run_scenario(c, 1);
  REQUIRE(rows.size() == 3);
  double fc = -1, rs = -1, no = -1;
  for (const auto& r : rows) {
    CHECK(r.succeeded());
    if (r.scheme == "FourColor") fc = r.mmf_bits;
    if (r.scheme == "RS") rs = r.mmf_bits;
    if (r.scheme == "NoRS") no = r.mmf_bits;
  }
  CHECK(fc > 0.0);
  CHECK(rs >= no - 1e-6);
  const TrialInstance inst = make_trial(c, 0);
  REQUIRE(inst.geometry.has_value());
  CHECK(inst.layout.num_groups() == 7);
}

TEST_CASE("JSON configuration round trip") {
  ScenarioConfig c = preset("fig7")[1];
  c.csit = {std::nullopt, 0.25};
  c.master_seed = 123456789012345ULL;
  const nlohmann::json j = c;
  const ScenarioConfig back = j.get<ScenarioConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.name == c.name);
  CHECK(back.power_constraint == PowerKind::TPC);
  CHECK(!back.csit[0].has_value());
  CHECK(*back.csit[1] == 0.25);
  CHECK(back.master_seed == c.master_seed);

  nlohmann::json bad = j;
  bad["unknown_key"] = 1;
  CHECK_THROWS(bad.get<ScenarioConfig>());
  nlohmann::json bad_csit = j;
  bad_csit["csit"] = {"sometimes"};
  CHECK_THROWS(bad_csit.get<ScenarioConfig>());
}

TEST_CASE("DoF report fits the construction slopes") {
  ScenarioConfig c;
  c.name = "dof";
  c.nt = 6;
  c.group_sizes = {1, 2, 3};
  c.csit = {0.6};
  c.power_grid = {25, 30, 35, 40};
  c.schemes = {SchemeKind::DofConstructionNoRS};
  c.num_estimates = 4;
  c.saa_samples = 20;
  const auto rep = dof_report(run_scenario(c, 1), c);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].predicted == Approx(0.6));
  CHECK(rep[0].regime == "underloaded");
  CHECK(std::abs(rep[0].slope - 0.6) < 0.15);
  std::ostringstream os;
  write_dof_report(os, rep);
  CHECK(os.str().rfind("scheme,alpha,regime,predicted_dof,fitted_slope,abs_deviation\n", 0) == 0);
  CHECK_THROWS_AS(dof_report({}, preset("fig5")[0]), InvalidInput);
}
