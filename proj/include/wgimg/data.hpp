#pragma once
//
// Sensor-data processing: noise injection, projection of the response matrix
// onto the propagating modes, and least-squares completion of partial-aperture
// data.
//

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "wgimg/array.hpp"
#include "wgimg/error.hpp"
#include "wgimg/waveguide.hpp"

namespace wgimg {

namespace detail {

// Box-Muller on mt19937_64: unlike std::normal_distribution the sequence is
// the same on every standard library.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  // 53 random bits in [0, 1)
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace detail

/// Adds iid complex Gaussian noise of standard deviation
/// sigma = sigma_pct / 100 * max |U|, split equally between real and
/// imaginary parts. Entries are perturbed in row-major order.
inline ResponseMatrix add_noise(const ResponseMatrix& U, double sigma_pct, std::uint64_t seed) {
  require(sigma_pct >= 0.0 && std::isfinite(sigma_pct), ErrorKind::InvalidArgument, "sigma_pct must be >= 0");
  ResponseMatrix out = U;
  out.noise_sigma_pct = sigma_pct;
  out.seed = seed;
  if (sigma_pct == 0.0 || U.entries.size() == 0) return out;
  const double sigma = sigma_pct / 100.0 * U.entries.cwiseAbs().maxCoeff();
  const double s = sigma / std::sqrt(2.0);
  detail::GaussianStream g(seed);
  for (Eigen::Index r = 0; r < out.entries.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.entries.cols(); ++c) {
      const double re = g.next();
      const double im = g.next();
      out.entries(r, c) += cplx(s * re, s * im);
    }
  }
  return out;
}

enum class Quadrature { Trapezoid, Riemann };

/// Quadrature weights for the sensor positions. Trapezoid halves the weight
/// of sensors sitting on the walls xp = 0 and xp = width; on a full-aperture
/// array this makes the sampled modes exactly orthonormal.
inline Eigen::VectorXd sensor_weights(const ArrayGeometry& array, Quadrature rule = Quadrature::Trapezoid) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(array.size()), array.spacing);
  if (rule == Quadrature::Trapezoid) {
    for (std::size_t i = 0; i < array.size(); ++i) {
      const double xp = array.sensor_xp[i];
      if (xp <= 1e-12 * array.width || xp >= array.width * (1.0 - 1e-12)) w(static_cast<Eigen::Index>(i)) *= 0.5;
    }
  }
  return w;
}

/// Psi[r][j] = psi_j(xp_r), j = 0..J.
inline Eigen::MatrixXd mode_sampling_matrix(const ArrayGeometry& array, const ModeSet& modes) {
  Eigen::MatrixXd psi(static_cast<Eigen::Index>(array.size()), modes.propagating_count());
  for (std::size_t r = 0; r < array.size(); ++r) {
    for (int j = 0; j <= modes.J(); ++j) {
      psi(static_cast<Eigen::Index>(r), j) = mode_eigenfunction(j, array.sensor_xp[r], modes.width());
    }
  }
  return psi;
}

namespace detail {

inline ProjectedResponse projected_shell(const ResponseMatrix& U, const ModeSet& modes) {
  require(std::abs(U.k - modes.k()) <= 1e-12 * modes.k(), ErrorKind::DataMismatch,
          "response matrix wavenumber differs from the mode set");
  require(std::abs(U.array.width - modes.width()) <= 1e-12 * modes.width(), ErrorKind::DataMismatch,
          "response matrix width differs from the mode set");
  ProjectedResponse p;
  p.k = modes.k();
  p.width = modes.width();
  p.x_A = U.array.x_A;
  p.J = modes.J();
  p.spacing = U.array.spacing;
  p.aperture_fraction = U.array.aperture_fraction;
  p.noise_sigma_pct = U.noise_sigma_pct;
  p.seed = U.seed;
  return p;
}

}  // namespace detail

/// U^P[j][l] = sum_r sum_s w_r w_s U[r][s] psi_j(xp_r) psi_l(xp_s).
inline ProjectedResponse project_to_modes(const ResponseMatrix& U, const ModeSet& modes,
                                          Quadrature rule = Quadrature::Trapezoid) {
  if (!U.array.full_aperture()) {
    fail(ErrorKind::PartialApertureError, "partial-aperture data must go through complete_partial_aperture");
  }
  require(U.entries.rows() == static_cast<Eigen::Index>(U.array.size()) && U.entries.cols() == U.entries.rows(),
          ErrorKind::DataMismatch, "response matrix size does not match the array");
  ProjectedResponse p = detail::projected_shell(U, modes);
  const Eigen::MatrixXd wpsi = sensor_weights(U.array, rule).asDiagonal() * mode_sampling_matrix(U.array, modes);
  p.entries = wpsi.transpose().cast<cplx>() * U.entries * wpsi.cast<cplx>();
  return p;
}

/// Least-squares fit of U ~ Psi X Psi^T over the available sensors, with
/// Psi[r][j] = psi_j(xp_r). Singular values of Psi below cutoff * sigma_max
/// are dropped, giving the minimum-norm fit; on a partial aperture the
/// highest modes are nearly invisible and get truncated this way.
inline ProjectedResponse complete_partial_aperture(const ResponseMatrix& U, const ModeSet& modes,
                                                   double cutoff = 1e-6) {
  require(U.entries.rows() == static_cast<Eigen::Index>(U.array.size()) && U.entries.cols() == U.entries.rows(),
          ErrorKind::DataMismatch, "response matrix size does not match the array");
  ProjectedResponse p = detail::projected_shell(U, modes);
  if (static_cast<int>(U.array.size()) < modes.propagating_count()) {
    fail(ErrorKind::UnderdeterminedAperture, std::to_string(U.array.size()) + " sensors cannot resolve " +
                                                 std::to_string(modes.propagating_count()) + " modes");
  }
  const Eigen::MatrixXd psi = mode_sampling_matrix(U.array, modes);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff * s(0)) ++rank;
  require(rank > 0, ErrorKind::UnderdeterminedAperture, "mode sampling matrix is zero");
  const Eigen::MatrixXd pinv =
      svd.matrixV().leftCols(rank) * s.head(rank).cwiseInverse().asDiagonal() * svd.matrixU().leftCols(rank).transpose();
  p.entries = pinv.cast<cplx>() * U.entries * pinv.transpose().cast<cplx>();
  return p;
}

/// Projection for any aperture: quadrature when full, least squares otherwise.
inline ProjectedResponse project_any_aperture(const ResponseMatrix& U, const ModeSet& modes) {
  return U.array.full_aperture() ? project_to_modes(U, modes) : complete_partial_aperture(U, modes);
}

/// Sub-array of a full-aperture response matrix keeping the sensors with
/// xp <= aperture_fraction * width.
inline ResponseMatrix restrict_aperture(const ResponseMatrix& U, double aperture_fraction) {
  const ArrayGeometry a = make_array(U.array.x_A, U.array.width, U.array.spacing, aperture_fraction,
                                     U.array.include_endpoints);
  std::vector<Eigen::Index> keep;
  for (double xp : a.sensor_xp) {
    Eigen::Index found = -1;
    for (std::size_t i = 0; i < U.array.size(); ++i) {
      if (std::abs(U.array.sensor_xp[i] - xp) <= 1e-12 * U.array.width) found = static_cast<Eigen::Index>(i);
    }
    require(found >= 0, ErrorKind::DataMismatch, "restricted sensor is not part of the full array");
    keep.push_back(found);
  }
  ResponseMatrix out = U;
  out.array = a;
  const auto n = static_cast<Eigen::Index>(keep.size());
  out.entries.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out.entries(r, c) = U.entries(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace wgimg
