#pragma once

// JSON <-> ScenarioConfig. Keys mirror the struct fields; absent keys keep
// their defaults. CSIT entries are numbers or the string "perfect".

#include <string>

#include "json.hpp"
#include "rsmmf/harness.hpp"

namespace rsmmf {

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  nlohmann::json csit = nlohmann::json::array();
  for (const auto& a : c.csit) csit.push_back(a ? nlohmann::json(*a) : nlohmann::json("perfect"));
  nlohmann::json schemes = nlohmann::json::array();
  for (auto s : c.schemes) schemes.push_back(to_string(s));
  j = {{"name", c.name},
       {"channel_kind", to_string(c.channel)},
       {"nt", c.nt},
       {"group_sizes", c.group_sizes},
       {"users_per_beam", c.users_per_beam},
       {"csit", csit},
       {"power_constraint", to_string(c.power_constraint)},
       {"power_grid", c.power_grid},
       {"schemes", schemes},
       {"num_estimates", c.num_estimates},
       {"saa_samples", c.saa_samples},
       {"master_seed", c.master_seed},
       {"ao_tol", c.ao_tol},
       {"ao_max_iter", c.ao_max_iter},
       {"conic_tol", c.conic_tol},
       {"rain", c.rain}};
}

inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    if (k == "name") c.name = v.get<std::string>();
    else if (k == "channel_kind") {
      const auto s = v.get<std::string>();
      if (s == "rayleigh") c.channel = ChannelKind::Rayleigh;
      else if (s == "satellite") c.channel = ChannelKind::Satellite;
      else throw InvalidInput("config: unknown channel_kind '" + s + "'");
    } else if (k == "nt") c.nt = v.get<int>();
    else if (k == "group_sizes") c.group_sizes = v.get<std::vector<int>>();
    else if (k == "users_per_beam") c.users_per_beam = v.get<std::vector<int>>();
    else if (k == "csit") {
      c.csit.clear();
      for (const auto& e : v) {
        if (e.is_string()) {
          if (e.get<std::string>() != "perfect") throw InvalidInput("config: csit strings must be \"perfect\"");
          c.csit.push_back(std::nullopt);
        } else {
          c.csit.push_back(e.get<double>());
        }
      }
    } else if (k == "power_constraint") c.power_constraint = power_kind_from_string(v.get<std::string>());
    else if (k == "power_grid") c.power_grid = v.get<std::vector<double>>();
    else if (k == "schemes") {
      c.schemes.clear();
      for (const auto& e : v) c.schemes.push_back(scheme_from_string(e.get<std::string>()));
    } else if (k == "num_estimates") c.num_estimates = v.get<int>();
    else if (k == "saa_samples") c.saa_samples = v.get<int>();
    else if (k == "master_seed") c.master_seed = v.get<std::uint64_t>();
    else if (k == "ao_tol") c.ao_tol = v.get<double>();
    else if (k == "ao_max_iter") c.ao_max_iter = v.get<int>();
    else if (k == "conic_tol") c.conic_tol = v.get<double>();
    else if (k == "rain") c.rain = v.get<bool>();
    else throw InvalidInput("config: unknown key '" + k + "'");
  }
}

}  // namespace rsmmf
