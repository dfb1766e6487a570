#pragma once

#include <bathyreg/ingest.hpp>

#include <cstdint>
#include <vector>

namespace bathyreg {

struct SpectralComponent {
  double wavelength = 100.0;  // m
  double amplitude = 5.0;     // m
};

/// Procedural seafloor
///   z(x, y) = base_depth + sum_i a_i sin(2 pi x / l_i + p_i) cos(2 pi y / l_i + q_i) + r(x, y)
/// where r is a seeded Gaussian roughness field with marginal N(0, roughness_sigma^2)
/// and correlation length roughness_length. The field is a property of the
/// terrain, so two surveys of the same spot see the same roughness.
struct TerrainConfig {
  std::uint64_t seed = 1;
  double extent_x = 20000.0;  // m, along-track support starting at origin_x
  double extent_y = 2000.0;   // m, across-track support centred on origin_y
  double base_depth = -100.0;
  std::vector<SpectralComponent> spectrum = {{100.0, 5.0}};
  double roughness_sigma = 0.2;
  double roughness_length = 4.0;
  double origin_x = 0.0;  // easting of the first ping
  double origin_y = 0.0;  // northing of the survey line
  double noise_sigma = 0.0;  // per-sample measurement noise
  double dropout = 0.0;      // probability that a beam is invalid (NaN)
};

/// Straight survey line along +x: beam hits spread uniformly across a swath
/// of `swath_width` metres, pings `along_track_step` metres apart.
struct SurveyGeometry {
  std::size_t n_pings = 1000;
  std::size_t n_beams = 400;
  double swath_width = 346.0;  // 120 degree fan at ~100 m altitude
  double along_track_step = 0.8;
};

/// Noise-free seafloor height (including the roughness field) at (x, y).
double terrain_height(const TerrainConfig& cfg, double x, double y);

PingTensor generate_terrain_pings(const TerrainConfig& cfg, const SurveyGeometry& geometry);

}  // namespace bathyreg
