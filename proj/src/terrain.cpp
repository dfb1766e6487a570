#include <bathyreg/terrain.hpp>
#include <bathyreg/random.hpp>

#include <limits>
#include <numbers>

namespace bathyreg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Counter-based N(0,1) per lattice node (Box-Muller on two hashed uniforms).
double lattice_normal(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = hash_seed(seed, static_cast<std::uint64_t>(ix), static_cast<std::uint64_t>(iy));
  const double u1 = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(mix64(h) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Bilinear blend of i.i.d. N(0,1) lattice values, rescaled by the weight
// norm so the marginal stays exactly N(0,1) everywhere.
double roughness_field(std::uint64_t seed, double length, double x, double y) {
  const double gx = x / length;
  const double gy = y / length;
  const double fx = std::floor(gx);
  const double fy = std::floor(gy);
  const double tx = gx - fx;
  const double ty = gy - fy;
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
  const double v[4] = {lattice_normal(seed, ix, iy), lattice_normal(seed, ix + 1, iy),
                       lattice_normal(seed, ix, iy + 1), lattice_normal(seed, ix + 1, iy + 1)};
  double sum = 0.0, norm = 0.0;
  for (int k = 0; k < 4; ++k) {
    sum += w[k] * v[k];
    norm += w[k] * w[k];
  }
  return sum / std::sqrt(norm);
}

struct Phases {
  double x, y;
};

std::vector<Phases> component_phases(const TerrainConfig& cfg) {
  Rng rng(hash_seed(cfg.seed, "terrain-phases"));
  std::vector<Phases> out;
  for (std::size_t i = 0; i < cfg.spectrum.size(); ++i) out.push_back({rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi)});
  return out;
}

double height_with_phases(const TerrainConfig& cfg, const std::vector<Phases>& phases, double x, double y) {
  double z = cfg.base_depth;
  for (std::size_t i = 0; i < cfg.spectrum.size(); ++i) {
    const auto& c = cfg.spectrum[i];
    z += c.amplitude * std::sin(kTwoPi * x / c.wavelength + phases[i].x) *
         std::cos(kTwoPi * y / c.wavelength + phases[i].y);
  }
  if (cfg.roughness_sigma > 0.0) {
    z += cfg.roughness_sigma * roughness_field(hash_seed(cfg.seed, "roughness"), cfg.roughness_length, x, y);
  }
  return z;
}

}  // namespace

double terrain_height(const TerrainConfig& cfg, double x, double y) {
  return height_with_phases(cfg, component_phases(cfg), x, y);
}

PingTensor generate_terrain_pings(const TerrainConfig& cfg, const SurveyGeometry& g) {
  if (g.n_pings == 0 || g.n_beams == 0) throw Error("config error: n_pings and n_beams must be >= 1");
  if (!(g.along_track_step > 0.0) || !(g.swath_width >= 0.0)) throw Error("config error: invalid survey geometry");
  if (!(cfg.roughness_length > 0.0) || cfg.roughness_sigma < 0.0 || cfg.noise_sigma < 0.0) {
    throw Error("config error: invalid roughness parameters");
  }
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw Error("config error: dropout must be in [0, 1)");
  const double beam_spacing = g.n_beams > 1 ? g.swath_width / static_cast<double>(g.n_beams - 1) : 0.0;
  const double spacing = std::max(g.along_track_step, beam_spacing);
  for (const auto& c : cfg.spectrum) {
    if (c.amplitude < 0.0) throw Error("config error: amplitudes must be >= 0");
    if (!(c.wavelength > 2.0 * spacing)) throw Error("config error: wavelength must exceed twice the sample spacing");
  }
  const double length = g.along_track_step * static_cast<double>(g.n_pings - 1);
  if (length > cfg.extent_x || g.swath_width > cfg.extent_y) throw Error("config error: survey exceeds terrain extent");

  const auto phases = component_phases(cfg);
  Rng noise(hash_seed(cfg.seed, "measurement-noise"));
  std::vector<double> hits;
  hits.reserve(g.n_pings * g.n_beams * 3);
  for (std::size_t p = 0; p < g.n_pings; ++p) {
    const double x = cfg.origin_x + g.along_track_step * static_cast<double>(p);
    for (std::size_t b = 0; b < g.n_beams; ++b) {
      const double y = cfg.origin_y - 0.5 * g.swath_width + beam_spacing * static_cast<double>(b);
      double z = height_with_phases(cfg, phases, x, y);
      if (cfg.noise_sigma > 0.0) z += noise.normal(0.0, cfg.noise_sigma);
      if (cfg.dropout > 0.0 && noise.uniform() < cfg.dropout) {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        hits.insert(hits.end(), {nan, nan, nan});
      } else {
        hits.insert(hits.end(), {x, g.n_beams > 1 ? y : cfg.origin_y, z});
      }
    }
  }
  return PingTensor(g.n_pings, g.n_beams, std::move(hits));
}

}  // namespace bathyreg
