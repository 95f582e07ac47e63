#pragma once
//
// Imaging in the propagating-mode basis: the far-field matrix, its sharpened
// Hermitian form, the factorization method with Morozov-regularized Picard
// test, and the two migration imaging functions.
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgimg/array.hpp"
#include "wgimg/data.hpp"
#include "wgimg/error.hpp"
#include "wgimg/parallel.hpp"
#include "wgimg/waveguide.hpp"

namespace wgimg {

struct FarFieldMatrix {
  Eigen::MatrixXcd entries;
  double k = 0.0;
  double width = 1.0;
  double x_A = -2.0;
  int J = 0;
};

enum class SharpVariant { AbsIm, MinusIm };
enum class MigSign { Abs, Neg };

/// Hermitian positive semi-definite combination of the real and imaginary
/// parts of F, with its eigendecomposition.
struct SharpOperator {
  Eigen::MatrixXcd entries;
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXcd eigenvectors;
  SharpVariant variant = SharpVariant::AbsIm;
};

/// Rectangular lattice of search points, endpoints included.
struct GridSpec {
  double x0 = -1.9, x1 = -0.1;
  double xp0 = 0.1, xp1 = 0.9;
  int nx = 100, nxp = 100;

  double x(int i) const { return nx == 1 ? x0 : x0 + (x1 - x0) * i / (nx - 1); }
  double xp(int i) const { return nxp == 1 ? xp0 : xp0 + (xp1 - xp0) * i / (nxp - 1); }
  Point point(int ix, int ixp) const { return {x(ix), xp(ixp)}; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(nxp); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Image values on a grid; values(ixp, ix) = raw(ixp, ix) / norm.
struct ImageGrid {
  GridSpec grid;
  std::string method;
  Eigen::MatrixXd values;
  Eigen::MatrixXd raw;
  double norm = 0.0;
  bool degenerate = false;
};

inline void validate_grid(const GridSpec& g, double x_A, double width) {
  require(g.nx >= 1 && g.nxp >= 1, ErrorKind::InvalidArgument, "grid counts must be positive");
  require(g.x0 <= g.x1 && g.xp0 <= g.xp1, ErrorKind::InvalidArgument, "grid extents must be ordered");
  require(g.x0 > x_A && g.x1 < 0.0 && g.xp0 >= 0.0 && g.xp1 <= width, ErrorKind::InvalidArgument,
          "imaging grid must lie inside (x_A, 0) x (0, width)");
}

/// Scales raw values to max 1; an all-zero grid is flagged degenerate.
inline ImageGrid normalize_image(const GridSpec& grid, std::string method, Eigen::MatrixXd raw) {
  ImageGrid img;
  img.grid = grid;
  img.method = std::move(method);
  img.raw = std::move(raw);
  img.norm = img.raw.size() ? img.raw.maxCoeff() : 0.0;
  if (!(img.norm > 0.0)) {
    img.degenerate = true;
    img.norm = 0.0;
    img.values = Eigen::MatrixXd::Zero(img.raw.rows(), img.raw.cols());
  } else {
    img.values = img.raw.cwiseMax(0.0) / img.norm;
  }
  return img;
}

inline FarFieldMatrix build_far_field(const ProjectedResponse& P, const ModeSet& modes) {
  require(P.J == modes.J() && P.entries.rows() == modes.propagating_count() && P.entries.cols() == P.entries.rows(),
          ErrorKind::DataMismatch, "projected response does not match the mode set");
  FarFieldMatrix F;
  F.k = P.k;
  F.width = P.width;
  F.x_A = P.x_A;
  F.J = P.J;
  const Eigen::Index n = P.entries.rows();
  F.entries.resize(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const cplx phase = std::exp(-2.0 * kI * (modes.beta(static_cast<int>(l)) * P.x_A));
    for (Eigen::Index j = 0; j < n; ++j) F.entries(j, l) = -std::conj(P.entries(j, l)) * phase;
  }
  return F;
}

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hermitian_eig(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) {
    fail(ErrorKind::EigenFailure, "Hermitian eigensolver did not converge (matrix norm " +
                                      std::to_string(h.norm()) + ")");
  }
  return es;
}

// |H| = V |D| V^* for Hermitian H.
inline Eigen::MatrixXcd spectral_abs(const Eigen::MatrixXcd& h) {
  const auto es = hermitian_eig(h);
  return es.eigenvectors() * es.eigenvalues().cwiseAbs().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Hermitian part (F + F^*)/2 and "imaginary" part (F - F^*)/(2i).
inline Eigen::MatrixXcd hermitian_real_part(const Eigen::MatrixXcd& F) { return 0.5 * (F + F.adjoint()); }
inline Eigen::MatrixXcd hermitian_imag_part(const Eigen::MatrixXcd& F) { return (F - F.adjoint()) / (2.0 * kI); }

inline SharpOperator sharpen(const Eigen::MatrixXcd& F, SharpVariant variant = SharpVariant::AbsIm) {
  const Eigen::MatrixXcd re = hermitian_real_part(F);
  const Eigen::MatrixXcd im = hermitian_imag_part(F);
  SharpOperator s;
  s.variant = variant;
  s.entries = detail::spectral_abs(re) + (variant == SharpVariant::AbsIm ? detail::spectral_abs(im) : Eigen::MatrixXcd(-im));
  s.entries = hermitian_real_part(s.entries);  // remove rounding asymmetry
  const auto es = detail::hermitian_eig(s.entries);
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();
  return s;
}

inline SharpOperator sharpen(const FarFieldMatrix& F, SharpVariant variant = SharpVariant::AbsIm) {
  return sharpen(F.entries, variant);
}

/// Mode coefficients of the conjugated propagating Green's function on the array:
/// b_j = -(i / beta_j) psi_j(z.xp) exp(i beta_j x_A) cos(beta_j z.x).
inline Eigen::VectorXcd rhs_vector(const Point& z, const ModeSet& modes, double x_A) {
  Eigen::VectorXcd b(modes.propagating_count());
  for (int j = 0; j <= modes.J(); ++j) {
    const double beta = modes.beta(j);
    b(j) = -(kI / beta) * mode_eigenfunction(j, z.xp, modes.width()) * std::exp(kI * (beta * x_A)) *
           std::cos(beta * z.x);
  }
  return b;
}

/// Mode coefficients of the backpropagation test function phi_z:
/// a_j = C_z (beta_j / i) psi_j(z.xp) exp(i beta_j x_A) cos(beta_j z.x).
inline Eigen::VectorXcd test_vector(const Point& z, const ModeSet& modes, double x_A) {
  require_imaging_point(z, x_A, modes);
  const double cz = phi_normalizer(z, modes);
  Eigen::VectorXcd a(modes.propagating_count());
  for (int j = 0; j <= modes.J(); ++j) {
    const double beta = modes.beta(j);
    a(j) = cz * (beta / kI) * mode_eigenfunction(j, z.xp, modes.width()) * std::exp(kI * (beta * x_A)) *
           std::cos(beta * z.x);
  }
  return a;
}

struct MorozovResult {
  double alpha = 0.0;
  double g_norm = 0.0;
  bool no_root = false;
};

namespace detail {

// Eigenvalues of a PSD operator with rounding negatives set to zero.
inline Eigen::VectorXd clamped_eigenvalues(const SharpOperator& s) { return s.eigenvalues.cwiseMax(0.0); }

}  // namespace detail

/// Tikhonov parameter for (F_#)^{1/2} g = b by the discrepancy principle
/// ||(F_#)^{1/2} g - b|| = eps ||g||, found by bisection in log(alpha).
inline MorozovResult morozov_alpha(const SharpOperator& sharp, const Eigen::VectorXcd& b, double eps) {
  require(eps > 0.0, ErrorKind::InvalidArgument, "epsilon must be positive");
  require(b.size() == sharp.eigenvalues.size(), ErrorKind::DataMismatch, "rhs size does not match the operator");
  const Eigen::VectorXd d = detail::clamped_eigenvalues(sharp);
  const double dmax = d.size() ? d.maxCoeff() : 0.0;
  require(dmax > 0.0, ErrorKind::InvalidArgument, "sharpened operator is zero");
  const Eigen::VectorXd c2 = (sharp.eigenvectors.adjoint() * b).cwiseAbs2();

  // f increases in alpha: residual^2 - eps^2 ||g||^2
  auto f = [&](double alpha) {
    double res = 0.0, g2 = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      const double q = 1.0 / (d(j) + alpha);
      res += c2(j) * alpha * alpha * q * q;
      g2 += c2(j) * d(j) * q * q;
    }
    return res - eps * eps * g2;
  };
  auto g_norm = [&](double alpha) {
    double g2 = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j) g2 += c2(j) * d(j) / ((d(j) + alpha) * (d(j) + alpha));
    return std::sqrt(g2);
  };

  MorozovResult out;
  double range_mass = 0.0;
  for (Eigen::Index j = 0; j < d.size(); ++j)
    if (d(j) > 0.0) range_mass += c2(j);
  if (range_mass == 0.0) {
    out.no_root = true;
    return out;
  }
  double lo = std::log(1e-16 * dmax), hi = std::log(1e4 * dmax);
  if (f(std::exp(lo)) > 0.0) {
    // no admissible alpha in the bracket: b is (numerically) outside the range
    out.no_root = true;
    return out;
  }
  if (f(std::exp(hi)) < 0.0) {
    out.alpha = std::exp(hi);
    out.g_norm = g_norm(out.alpha);
    return out;
  }
  const double tol = std::log1p(1e-12);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (f(std::exp(mid)) > 0.0 ? hi : lo) = mid;
  }
  out.alpha = std::exp(0.5 * (lo + hi));
  out.g_norm = g_norm(out.alpha);
  return out;
}

/// Morozov parameter used when the caller does not give one.
inline double default_epsilon(double sigma_pct) { return std::max(1e-3, sigma_pct / 100.0); }

namespace detail {

// Evaluates fn(z) over the grid concurrently; fn returns the raw value.
template <class Fn>
Eigen::MatrixXd evaluate_grid(const GridSpec& grid, Fn&& fn) {
  Eigen::MatrixXd raw(grid.nxp, grid.nx);
  parallel_for(grid.size(), [&](std::size_t idx) {
    const int ixp = static_cast<int>(idx / static_cast<std::size_t>(grid.nx));
    const int ix = static_cast<int>(idx % static_cast<std::size_t>(grid.nx));
    raw(ixp, ix) = fn(grid.point(ix, ixp));
  });
  return raw;
}

}  // namespace detail

/// J_#(z) = 1 / ||g_z|| with Morozov-regularized g_z; zero where no root exists.
inline ImageGrid factorization_image(const SharpOperator& sharp, const GridSpec& grid, const ModeSet& modes, double x_A,
                                     double eps) {
  validate_grid(grid, x_A, modes.width());
  if (!(sharp.eigenvalues.size() && sharp.eigenvalues.maxCoeff() > 0.0)) {
    fail(ErrorKind::DegenerateImage, "sharpened operator is zero");
  }
  Eigen::MatrixXd raw = detail::evaluate_grid(grid, [&](const Point& z) {
    const auto r = morozov_alpha(sharp, rhs_vector(z, modes, x_A), eps);
    return r.no_root || !(r.g_norm > 0.0) ? 0.0 : 1.0 / r.g_norm;
  });
  if (!(raw.maxCoeff() > 0.0)) fail(ErrorKind::DegenerateImage, "Morozov problem has no root at any grid point");
  return normalize_image(grid, "factorization", std::move(raw));
}

/// Real quadratic form a^* F_# a.
inline double sharp_quadratic(const SharpOperator& sharp, const Eigen::VectorXcd& a) {
  return a.dot(sharp.entries * a).real();
}

/// -Im(a^* F a), the flux form bounded above by a^* F_# a.
inline double neg_imag_quadratic(const Eigen::MatrixXcd& F, const Eigen::VectorXcd& a) {
  return -a.dot(F * a).imag();
}

/// Orthogonal projector onto a subspace given by orthonormal columns.
inline Eigen::MatrixXcd projector(const Eigen::MatrixXcd& basis) { return basis * basis.adjoint(); }

/// J_mig#(z) = a_z^* F_# a_z; with `range_projector`, a_z is first projected
/// onto that subspace.
inline ImageGrid migration_sharp_image(const SharpOperator& sharp, const GridSpec& grid, const ModeSet& modes,
                                       double x_A, const std::optional<Eigen::MatrixXcd>& range_projector = {}) {
  validate_grid(grid, x_A, modes.width());
  Eigen::MatrixXd raw = detail::evaluate_grid(grid, [&](const Point& z) {
    if (normalizer_sum(z, modes) < kDegenerateNormalizer) return 0.0;
    Eigen::VectorXcd a = test_vector(z, modes, x_A);
    if (range_projector) a = *range_projector * a;
    return sharp_quadratic(sharp, a);
  });
  if (!(raw.maxCoeff() > 0.0)) fail(ErrorKind::DegenerateImage, "mig_sharp image is identically zero");
  return normalize_image(grid, "mig_sharp", std::move(raw));
}

/// J_mig(z) = |Im(phi_z^T U phi_z)| with phi_z sampled at the sensors (plain
/// sum, no quadrature weights). MigSign::Neg keeps the signed flux value
/// clamped at zero. With the far-field convention F = -conj(U^P) e^{...} that
/// flux is +Im(phi^T U phi), the sensor-space twin of -Im(a^* F a).
inline ImageGrid migration_image(const ResponseMatrix& U, const GridSpec& grid, const ModeSet& modes,
                                 MigSign sign = MigSign::Abs) {
  require(std::abs(U.k - modes.k()) <= 1e-12 * modes.k(), ErrorKind::DataMismatch,
          "response matrix wavenumber differs from the mode set");
  const double x_A = U.array.x_A;
  validate_grid(grid, x_A, modes.width());
  const Eigen::MatrixXcd psi = mode_sampling_matrix(U.array, modes).cast<cplx>();
  Eigen::MatrixXd raw = detail::evaluate_grid(grid, [&](const Point& z) {
    if (normalizer_sum(z, modes) < kDegenerateNormalizer) return 0.0;
    const Eigen::VectorXcd phi = psi * test_vector(z, modes, x_A);
    const double im = (phi.transpose() * U.entries * phi)(0, 0).imag();
    return sign == MigSign::Abs ? std::abs(im) : std::max(0.0, im);
  });
  if (!(raw.maxCoeff() > 0.0)) fail(ErrorKind::DegenerateImage, "mig image is identically zero");
  return normalize_image(grid, "mig", std::move(raw));
}

/// Superposes raw values of images taken at different frequencies.
inline ImageGrid multifrequency_combine(const std::vector<ImageGrid>& images) {
  require(!images.empty(), ErrorKind::InvalidArgument, "no images to combine");
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(images[0].raw.rows(), images[0].raw.cols());
  for (const auto& im : images) {
    if (!(im.grid == images[0].grid) || im.method != images[0].method || im.raw.rows() != raw.rows() ||
        im.raw.cols() != raw.cols()) {
      fail(ErrorKind::GridMismatch, "images differ in grid or method");
    }
    raw += im.raw;
  }
  std::string method = images[0].method;
  if (images.size() > 1 && method.find("_multi") == std::string::npos) method += "_multi";
  return normalize_image(images[0].grid, method, std::move(raw));
}

struct SvdDiagnostics {
  int rank = 0;
  Eigen::VectorXd singular_values;
  /// Orthonormal basis of the null space P_0 (columns).
  Eigen::MatrixXcd null_basis;
  /// Orthonormal basis of its complement P_0^perp (columns).
  Eigen::MatrixXcd range_basis;
};

/// SVD of the symmetrized projected response (M + M^T)/2 = U S V^*. For a
/// complex-symmetric matrix V = conj(W) with W the Takagi vectors, so the
/// trailing columns of V span the null space.
inline SvdDiagnostics svd_diagnostics(const Eigen::MatrixXcd& P, double rank_tol = 1e-6) {
  const Eigen::MatrixXcd m = 0.5 * (P + P.transpose());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) fail(ErrorKind::EigenFailure, "SVD did not converge");
  SvdDiagnostics out;
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  int r = 0;
  if (smax > 0.0) {
    while (r < out.singular_values.size() && out.singular_values(r) > rank_tol * smax) ++r;
  }
  out.rank = r;
  const Eigen::Index n = m.cols();
  out.range_basis = svd.matrixV().leftCols(r);
  out.null_basis = svd.matrixV().rightCols(n - r);
  return out;
}

inline SvdDiagnostics svd_diagnostics(const ProjectedResponse& P, double rank_tol = 1e-6) {
  return svd_diagnostics(P.entries, rank_tol);
}

struct PicardValue {
  double g = 0.0;
  double reciprocal = std::numeric_limits<double>::infinity();
};

/// Finite Picard sum g_# = sum_{d_j > tol d_max} |v_j^* b|^2 / d_j.
inline PicardValue picard_indicator(const SharpOperator& sharp, const Eigen::VectorXcd& b, double rank_tol = 1e-6) {
  const Eigen::VectorXd d = detail::clamped_eigenvalues(sharp);
  const double dmax = d.size() ? d.maxCoeff() : 0.0;
  require(dmax > 0.0, ErrorKind::InvalidArgument, "sharpened operator is zero");
  const Eigen::VectorXd c2 = (sharp.eigenvectors.adjoint() * b).cwiseAbs2();
  PicardValue out;
  for (Eigen::Index j = 0; j < d.size(); ++j)
    if (d(j) > rank_tol * dmax) out.g += c2(j) / d(j);
  if (out.g > 0.0) out.reciprocal = 1.0 / out.g;
  return out;
}

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline Mask threshold_support(const ImageGrid& img, double tau) { return img.values.array() >= tau; }

// Summary metrics.

inline Point image_argmax(const ImageGrid& img) {
  Eigen::Index r = 0, c = 0;
  img.values.maxCoeff(&r, &c);
  return img.grid.point(static_cast<int>(c), static_cast<int>(r));
}

/// Mean position of the masked grid points; nullopt for an empty mask.
inline std::optional<Point> mask_centroid(const GridSpec& grid, const Mask& mask) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      if (mask(r, c)) {
        const Point p = grid.point(static_cast<int>(c), static_cast<int>(r));
        sx += p.x;
        sy += p.xp;
        ++n;
      }
  if (n == 0) return std::nullopt;
  return Point{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

/// Maximum over the largest value outside a disk of `radius` about the argmax.
inline double peak_to_sidelobe(const ImageGrid& img, double radius) {
  const Point peak = image_argmax(img);
  const double vmax = img.values.maxCoeff();
  double side = 0.0;
  for (Eigen::Index r = 0; r < img.values.rows(); ++r)
    for (Eigen::Index c = 0; c < img.values.cols(); ++c)
      if (distance(img.grid.point(static_cast<int>(c), static_cast<int>(r)), peak) > radius)
        side = std::max(side, img.values(r, c));
  return side > 0.0 ? vmax / side : std::numeric_limits<double>::infinity();
}

inline double pearson(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::GridMismatch, "value arrays differ in shape");
  const Eigen::ArrayXd x = a.reshaped().array() - a.mean();
  const Eigen::ArrayXd y = b.reshaped().array() - b.mean();
  const double den = std::sqrt((x * x).sum() * (y * y).sum());
  return den > 0.0 ? (x * y).sum() / den : 0.0;
}

/// |A and B| / |A or B|; two empty masks count as identical.
inline double jaccard(const Mask& a, const Mask& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::GridMismatch, "masks differ in shape");
  const auto inter = (a && b).count();
  const auto uni = (a || b).count();
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace wgimg
