#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wgimg/error.hpp"
#include "wgimg/waveguide.hpp"

namespace wgimg {

/// Linear array of co-located sources/receivers at range x_A.
struct ArrayGeometry {
  double x_A = -2.0;
  double width = 1.0;
  double spacing = 1.0 / 60.0;
  double aperture_fraction = 1.0;
  bool include_endpoints = true;
  std::vector<double> sensor_xp;

  std::size_t size() const { return sensor_xp.size(); }
  Point sensor(std::size_t i) const { return {x_A, sensor_xp[i]}; }
  bool full_aperture() const { return aperture_fraction >= 1.0; }
};

/// Sensors at xp = i * spacing, i = 0 .. floor(aperture_fraction * width / spacing).
/// With include_endpoints = false, sensors sitting on the walls xp = 0 and
/// xp = width are dropped.
inline ArrayGeometry make_array(double x_A, double width, double spacing, double aperture_fraction = 1.0,
                                bool include_endpoints = true) {
  require(x_A < 0.0, ErrorKind::InvalidArgument, "array range x_A must be negative");
  require(width > 0.0, ErrorKind::InvalidArgument, "width must be positive");
  require(spacing > 0.0, ErrorKind::InvalidArgument, "sensor spacing must be positive");
  require(aperture_fraction > 0.0 && aperture_fraction <= 1.0, ErrorKind::InvalidArgument,
          "aperture fraction must lie in (0, 1]");
  ArrayGeometry a;
  a.x_A = x_A;
  a.width = width;
  a.spacing = spacing;
  a.aperture_fraction = aperture_fraction;
  a.include_endpoints = include_endpoints;
  const double span = aperture_fraction * width;
  const auto last = static_cast<long>(std::floor(span / spacing + 1e-9));
  for (long i = 0; i <= last; ++i) {
    const double xp = std::min(i * spacing, span);
    const bool on_wall = i == 0 || std::abs(xp - width) < 1e-12 * width;
    if (!include_endpoints && on_wall) continue;
    a.sensor_xp.push_back(xp);
  }
  return a;
}

/// True when the array has at least as many sensors as propagating modes.
inline bool array_resolves_modes(const ArrayGeometry& array, const ModeSet& modes) {
  return static_cast<int>(array.size()) >= modes.propagating_count();
}

/// Sensor-to-sensor scattered field, U[r][s] = u_sc(x_r; source x_s).
struct ResponseMatrix {
  Eigen::MatrixXcd entries;
  ArrayGeometry array;
  double k = 0.0;
  double noise_sigma_pct = 0.0;
  std::optional<std::uint64_t> seed;
};

/// Response matrix in the propagating-mode basis.
struct ProjectedResponse {
  Eigen::MatrixXcd entries;
  double k = 0.0;
  double width = 1.0;
  double x_A = -2.0;
  int J = 0;
  // provenance carried through to files
  double spacing = 0.0;
  double aperture_fraction = 1.0;
  double noise_sigma_pct = 0.0;
  std::optional<std::uint64_t> seed;
};

}  // namespace wgimg
