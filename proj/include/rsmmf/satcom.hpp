#pragma once

// Multibeam GEO satellite downlink: single feed per beam, 7 hexagonal beams,
// Bessel beam pattern, free-space loss, lognormal rain fading with a random
// per-user phase, and the 4-colour frequency-reuse baseline.
//
// B is normalised by sqrt(kappa T_sys B_w), so the receiver noise power is 1
// and per-feed powers are in watts.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "rsmmf/model.hpp"
#include "rsmmf/numerics.hpp"

namespace rsmmf {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kEarthRadius = 6371e3;      // m

struct SatelliteParams {
  double carrier_hz = 20e9;
  double height_m = 35786e3;
  double bandwidth_hz = 500e6;
  double theta_3db_deg = 0.4;
  double gmax_dbi = 52.0;
  double gr_dbi = 41.7;
  double tsys_k = 517.0;
  double rain_mu = -3.125;
  double rain_sigma = 1.591;  // standard deviation of ln(chi_dB)
  bool rain = true;           // false: no attenuation (|Q| = 1), phase still random

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double theta_3db() const { return theta_3db_deg * std::numbers::pi / 180.0; }
  double gmax() const { return std::pow(10.0, gmax_dbi / 10.0); }
  double gr() const { return std::pow(10.0, gr_dbi / 10.0); }

  void validate() const {
    detail::require(carrier_hz > 0 && height_m > 0 && bandwidth_hz > 0 && theta_3db_deg > 0 &&
                        tsys_k > 0 && rain_sigma >= 0,
                    "SatelliteParams: parameters must be positive");
  }
};

using Vec3 = Eigen::Vector3d;

/// Beam and user geometry seen from the satellite. The satellite sits at
/// (0, 0, R_E + h) above an Earth centred at the origin; nadir is -z.
struct BeamGeometry {
  std::vector<Vec3> beam_dirs;    // unit boresight directions, N_t
  std::vector<Vec3> user_dirs;    // unit directions towards users, K
  std::vector<int> serving;       // serving beam of each user
  std::vector<double> distance;   // slant range d_k, metres
  RealMatrix theta;               // N_t x K, angle between user k and beam n centre (rad)

  int num_beams() const { return static_cast<int>(beam_dirs.size()); }
  int num_users() const { return static_cast<int>(user_dirs.size()); }

  /// Users of each beam, for GroupLayout (label = serving beam).
  GroupLayout layout() const { return GroupLayout(serving); }
};

namespace detail {

inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline Vec3 direction(double off_nadir, double azimuth) {
  return {std::sin(off_nadir) * std::cos(azimuth), std::sin(off_nadir) * std::sin(azimuth),
          -std::cos(off_nadir)};
}

// Unit vector at angle `offset` from `axis`, rotated by `azimuth` about it.
inline Vec3 offset_direction(const Vec3& axis, double offset, double azimuth) {
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = axis.cross(helper).normalized();
  const Vec3 e2 = axis.cross(e1);
  return (std::cos(offset) * axis +
          std::sin(offset) * (std::cos(azimuth) * e1 + std::sin(azimuth) * e2))
      .normalized();
}

inline int nearest_beam(const std::vector<Vec3>& beams, const Vec3& dir) {
  int best = 0;
  for (int n = 1; n < static_cast<int>(beams.size()); ++n)
    if (angle_between(beams[n], dir) < angle_between(beams[best], dir)) best = n;
  return best;
}

inline double slant_range(const Vec3& dir, const SatelliteParams& p) {
  const Vec3 sat(0.0, 0.0, kEarthRadius + p.height_m);
  const double b = sat.dot(dir);
  const double c = sat.squaredNorm() - kEarthRadius * kEarthRadius;
  const double disc = b * b - c;
  detail::require(disc >= 0.0, "slant_range: direction misses the Earth");
  return -b - std::sqrt(disc);
}

}  // namespace detail

/// Seven hexagonal beams: one at nadir, six on a ring sqrt(3) * theta_3dB away.
inline std::vector<Vec3> hex_beam_directions(const SatelliteParams& p) {
  std::vector<Vec3> dirs{detail::direction(0.0, 0.0)};
  const double ring = std::sqrt(3.0) * p.theta_3db();
  for (int i = 0; i < 6; ++i) dirs.push_back(detail::direction(ring, i * std::numbers::pi / 3.0));
  return dirs;
}

/// Normalised beam gain G(theta) / G_max.
inline double beam_gain_ratio(double theta, const SatelliteParams& p) {
  detail::require(theta >= 0.0, "beam_gain: theta must be non-negative");
  const double u = 2.07123 * std::sin(theta) / std::sin(p.theta_3db());
  double bracket;
  if (std::abs(u) < 1e-4) {
    // J1(u)/(2u) -> 1/4 - u^2/32, 36 J3(u)/u^3 -> 3/4 - 3u^2/32
    bracket = 1.0 - u * u / 8.0;
  } else {
    const double au = std::abs(u);
    bracket = bessel_j(1, au) / (2.0 * au) + 36.0 * bessel_j(3, au) / (au * au * au);
  }
  return bracket * bracket;
}

/// Linear beam gain G_max [J1(u)/2u + 36 J3(u)/u^3]^2.
inline double beam_gain(double theta, const SatelliteParams& p) {
  return p.gmax() * beam_gain_ratio(theta, p);
}

/// Noise-normalised amplitude for gain `gain` (linear) at slant range `d`.
inline double link_amplitude(double gain, double d, const SatelliteParams& p) {
  return std::sqrt(p.gr() * gain) /
         (4.0 * std::numbers::pi * (d / p.wavelength()) *
          std::sqrt(kBoltzmann * p.tsys_k * p.bandwidth_hz));
}

inline double link_coefficient(int n, int k, const BeamGeometry& g, const SatelliteParams& p) {
  detail::require(n >= 0 && n < g.num_beams() && k >= 0 && k < g.num_users(),
                  "link_coefficient: index out of range");
  return link_amplitude(beam_gain(g.theta(n, k), p), g.distance[k], p);
}

/// Matrix B (N_t x K).
inline RealMatrix link_matrix(const BeamGeometry& g, const SatelliteParams& p) {
  RealMatrix b(g.num_beams(), g.num_users());
  for (int k = 0; k < g.num_users(); ++k)
    for (int n = 0; n < g.num_beams(); ++n) b(n, k) = link_coefficient(n, k, g, p);
  return b;
}

struct RainPhase {
  double chi_db = 0.0;  // attenuation in dB
  double phase = 0.0;   // radians in [0, 2 pi)
  cplx q;               // chi^(-1/2) e^{-j phase}
};

/// One user's rain attenuation and phase. ln(chi_dB) ~ N(mu, sigma), chi = 10^(chi_dB/20).
inline RainPhase rain_phase(RandomStream& stream, const SatelliteParams& p) {
  RainPhase r;
  const double z = stream.normal();
  r.chi_db = p.rain ? std::exp(p.rain_mu + p.rain_sigma * z) : 0.0;
  r.phase = 2.0 * std::numbers::pi * stream.uniform();
  const double mag = std::pow(10.0, -r.chi_db / 40.0);
  r.q = std::polar(mag, -r.phase);
  return r;
}

struct SatelliteChannel {
  ComplexMatrix h;  // B o Q
  RealMatrix b;
  ComplexMatrix q;
};

/// H = B o Q, with one rain/phase draw per user shared by every feed.
inline SatelliteChannel build_satellite_channel_parts(const BeamGeometry& g,
                                                      const SatelliteParams& p,
                                                      RandomStream& stream) {
  SatelliteChannel c;
  c.b = link_matrix(g, p);
  c.q.resize(g.num_beams(), g.num_users());
  for (int k = 0; k < g.num_users(); ++k) c.q.col(k).setConstant(rain_phase(stream, p).q);
  c.h = c.b.cast<cplx>().cwiseProduct(c.q);
  return c;
}

inline ComplexMatrix build_satellite_channel(const BeamGeometry& g, const SatelliteParams& p,
                                             RandomStream& stream) {
  return build_satellite_channel_parts(g, p, stream).h;
}

/// Places `users_per_beam[n]` users uniformly (in solid angle) inside beam n's
/// -3 dB cone, restricted to the points closer to beam n than to any other
/// beam. Users are numbered beam by beam.
inline BeamGeometry place_users(const SatelliteParams& p, const std::vector<int>& users_per_beam,
                                RandomStream& stream) {
  p.validate();
  BeamGeometry g;
  g.beam_dirs = hex_beam_directions(p);
  detail::require(static_cast<int>(users_per_beam.size()) == g.num_beams(),
                  "place_users: need one user count per beam (7)");
  const double cos_edge = std::cos(p.theta_3db());
  for (int n = 0; n < g.num_beams(); ++n) {
    detail::require(users_per_beam[n] >= 1, "place_users: every beam needs at least one user");
    for (int i = 0; i < users_per_beam[n]; ++i) {
      // Rejection keeps the user in beam n's cell, i.e. nearer to its centre
      // than to any other; adjacent -3 dB cones overlap.
      Vec3 dir;
      do {
        const double cos_off = 1.0 - stream.uniform() * (1.0 - cos_edge);
        const double off = std::acos(std::clamp(cos_off, -1.0, 1.0));
        const double az = 2.0 * std::numbers::pi * stream.uniform();
        dir = detail::offset_direction(g.beam_dirs[n], off, az);
      } while (detail::nearest_beam(g.beam_dirs, dir) != n);
      g.user_dirs.push_back(dir);
      g.serving.push_back(n);
    }
  }
  g.theta.resize(g.num_beams(), g.num_users());
  for (int k = 0; k < g.num_users(); ++k) {
    g.distance.push_back(detail::slant_range(g.user_dirs[k], p));
    for (int n = 0; n < g.num_beams(); ++n)
      g.theta(n, k) = detail::angle_between(g.beam_dirs[n], g.user_dirs[k]);
  }
  return g;
}

/// rho users in every beam.
inline BeamGeometry place_users(const SatelliteParams& p, int rho, RandomStream& stream) {
  detail::require(rho >= 1, "place_users: rho must be >= 1");
  return place_users(p, std::vector<int>(7, rho), stream);
}

// ---------------------------------------------------------------------------
// 4-colour baseline.

/// Centre beam colour 0; ring beams alternate 1, 2, 3, 1, 2, 3.
inline std::vector<int> four_coloring() { return {0, 1, 2, 3, 1, 2, 3}; }

/// Throws InvalidInput if two adjacent beams share a colour.
inline void validate_coloring(const BeamGeometry& g, const std::vector<int>& colors,
                              const SatelliteParams& p) {
  detail::require(static_cast<int>(colors.size()) == g.num_beams(),
                  "four_color: need one colour per beam");
  const double adjacent = 1.01 * std::sqrt(3.0) * p.theta_3db();
  for (int a = 0; a < g.num_beams(); ++a) {
    detail::require(colors[a] >= 0 && colors[a] < 4, "four_color: colours must be 0..3");
    for (int b = a + 1; b < g.num_beams(); ++b)
      if (colors[a] == colors[b] &&
          detail::angle_between(g.beam_dirs[a], g.beam_dirs[b]) <= adjacent)
        throw InvalidInput("four_color: adjacent beams " + std::to_string(a) + " and " +
                           std::to_string(b) + " share a colour");
  }
}

struct FourColorResult {
  std::vector<double> user_rates;  // bits/s/Hz
  std::vector<double> beam_rates;  // min over the beam's users
  double mmf = 0.0;
};

/// Each beam transmits on its own feed at full per-feed power in a quarter of
/// the band; only same-colour beams interfere and the noise is quartered.
inline FourColorResult four_color_rates(const ComplexMatrix& h, const BeamGeometry& g,
                                        const SatelliteParams& p, double per_feed_power,
                                        const std::vector<int>& colors = four_coloring()) {
  validate_coloring(g, colors, p);
  detail::require(h.rows() == g.num_beams() && h.cols() == g.num_users(),
                  "four_color: channel dimension mismatch");
  detail::require(per_feed_power > 0.0, "four_color: power must be positive");
  FourColorResult r;
  r.beam_rates.assign(g.num_beams(), std::numeric_limits<double>::infinity());
  for (int k = 0; k < g.num_users(); ++k) {
    const int b = g.serving[k];
    double interference = 0.0;
    for (int n = 0; n < g.num_beams(); ++n)
      if (n != b && colors[n] == colors[b]) interference += per_feed_power * std::norm(h(n, k));
    const double sinr = per_feed_power * std::norm(h(b, k)) / (interference + 0.25);
    const double rate = 0.25 * std::log2(1.0 + sinr);
    r.user_rates.push_back(rate);
    r.beam_rates[b] = std::min(r.beam_rates[b], rate);
  }
  r.mmf = *std::min_element(r.beam_rates.begin(), r.beam_rates.end());
  return r;
}

/// CSV export of beam centres and user positions (angles in degrees).
inline void write_geometry_csv(std::ostream& os, const BeamGeometry& g) {
  const double deg = 180.0 / std::numbers::pi;
  auto uv = [&](const Vec3& d) {
    // projection onto the satellite's angular plane (off-nadir x/y angles)
    return std::array<double, 2>{std::atan2(d.x(), -d.z()) * deg, std::atan2(d.y(), -d.z()) * deg};
  };
  os << "kind,index,beam,theta_x_deg,theta_y_deg,slant_km\n";
  os.precision(9);
  for (int n = 0; n < g.num_beams(); ++n) {
    const auto a = uv(g.beam_dirs[n]);
    os << "beam," << n << ',' << n << ',' << a[0] << ',' << a[1] << ",\n";
  }
  for (int k = 0; k < g.num_users(); ++k) {
    const auto a = uv(g.user_dirs[k]);
    os << "user," << k << ',' << g.serving[k] << ',' << a[0] << ',' << a[1] << ','
       << g.distance[k] / 1e3 << "\n";
  }
}

}  // namespace rsmmf
