// Command-line front end: run presets or JSON-configured scenarios, print DoF
// reports, list presets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rsmmf/config_json.hpp"
#include "rsmmf/rsmmf.hpp"

namespace fs = std::filesystem;
using namespace rsmmf;

namespace {

struct Overrides {
  std::string preset;
  std::string config;
  bool paper_scale = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> saa;
  int jobs = 0;
  std::string out = "results";
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--preset", o.preset, "Preset name (see list-presets)");
  cmd->add_option("--config", o.config, "JSON scenario file; flags override its values");
  cmd->add_flag("--paper-scale", o.paper_scale, "100 estimates and S = 1000");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--trials", o.trials, "Number of channel estimates");
  cmd->add_option("--saa", o.saa, "SAA sample size S");
  cmd->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "Output directory");
}

std::vector<ScenarioConfig> load(const Overrides& o) {
  std::vector<ScenarioConfig> cfgs;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw InvalidInput("cannot open config '" + o.config + "'");
    const auto j = nlohmann::json::parse(in);
    if (j.is_array()) {
      for (const auto& e : j) cfgs.push_back(e.get<ScenarioConfig>());
    } else {
      ScenarioConfig c;
      if (!o.preset.empty()) c = preset(o.preset, o.paper_scale).front();
      from_json(j, c);
      cfgs.push_back(c);
    }
  } else if (!o.preset.empty()) {
    cfgs = preset(o.preset, o.paper_scale);
  } else {
    throw InvalidInput("need --preset or --config");
  }
  for (auto& c : cfgs) {
    if (o.seed) c.master_seed = *o.seed;
    if (o.trials) c.num_estimates = *o.trials;
    if (o.saa) c.saa_samples = *o.saa;
    c.validate();
  }
  return cfgs;
}

std::string stem(const Overrides& o, const std::vector<ScenarioConfig>& cfgs) {
  if (!o.preset.empty()) return o.preset;
  return cfgs.front().name;
}

int cmd_run(const Overrides& o) {
  const auto cfgs = load(o);
  fs::create_directories(o.out);
  std::vector<ResultRow> all;
  for (const auto& c : cfgs) {
    std::cerr << "running " << c.name << " (" << c.num_estimates << " estimates, S=" << c.saa_samples
              << ")\n";
    const auto rows = run_scenario(c, o.jobs);
    std::ofstream f(fs::path(o.out) / (c.name + ".csv"));
    write_rows_csv(f, rows);
    all.insert(all.end(), rows.begin(), rows.end());
    if (c.channel == ChannelKind::Satellite) {
      std::ofstream g(fs::path(o.out) / (c.name + "_geometry.csv"));
      write_geometry_csv(g, *make_trial(c, 0).geometry);
    }
    std::ofstream cj(fs::path(o.out) / (c.name + "_config.json"));
    cj << nlohmann::json(c).dump(2) << '\n';
  }
  const auto summary = summarize(all);
  std::ofstream s(fs::path(o.out) / (stem(o, cfgs) + "_summary.csv"));
  write_summary_csv(s, summary);
  write_summary_csv(std::cout, summary);
  return 0;
}

int cmd_dof(const Overrides& o, bool optimized) {
  auto cfgs = load(o);
  for (auto& c : cfgs) {
    if (c.channel != ChannelKind::Rayleigh) throw InvalidInput("dof-report needs a Rayleigh preset");
    c.power_grid = dof_fit_window();
    c.schemes = {SchemeKind::DofConstructionRS, SchemeKind::DofConstructionNoRS};
    if (optimized) {
      c.schemes.push_back(SchemeKind::RS);
      c.schemes.push_back(SchemeKind::NoRS);
    }
    const auto rows = run_scenario(c, o.jobs);
    std::cout << "# " << c.name << " N_t=" << c.nt << "\n";
    write_dof_report(std::cout, dof_report(rows, c));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-min fair rate-splitting multigroup multicast simulator"};
  app.require_subcommand(1);
  Overrides run_opts, dof_opts;
  bool optimized = false;
  auto* run = app.add_subcommand("run", "Run a scenario and write CSV results");
  add_common(run, run_opts);
  auto* dof = app.add_subcommand("dof-report", "Compare predicted MMF-DoF with fitted slopes");
  add_common(dof, dof_opts);
  dof->add_flag("--optimized", optimized, "Also fit the optimised RS and NoRS schemes");
  auto* list = app.add_subcommand("list-presets", "List preset names");
  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opts);
    if (*dof) return cmd_dof(dof_opts, optimized);
    if (*list) {
      for (const auto& n : preset_names()) {
        std::cout << n << ':';
        for (const auto& c : preset(n)) std::cout << ' ' << c.name;
        std::cout << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
