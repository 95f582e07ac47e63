#pragma once
//
// Mode basis and Green's functions of the 2-D semi-infinite waveguide
// W = (-inf, 0) x (0, width) with sound-hard walls and a sound-hard end wall
// at range x = 0. Time factor exp(-i omega t) is implied and dropped.
//

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "wgimg/error.hpp"

namespace wgimg {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Default number of exact modes kept by the same-range Green's function
/// before the closed-form asymptotic tail takes over.
inline constexpr int kDefaultKummerTerms = 2048;

/// A point of the waveguide: range x <= 0 and cross-range xp in [0, width].
struct Point {
  double x = 0.0;
  double xp = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.xp - b.xp); }

struct WaveguideGeometry {
  double width = 1.0;

  explicit WaveguideGeometry(double w = 1.0) : width(w) {
    require(w > 0.0 && std::isfinite(w), ErrorKind::InvalidArgument, "waveguide width must be positive");
  }

  bool contains(const Point& p) const { return p.x <= 0.0 && p.xp >= 0.0 && p.xp <= width; }
};

struct ModeSetOptions {
  /// Evanescent truncation tolerance: exp(-|beta_Jmax| * min_sep) < tol.
  double tol = 1e-12;
  /// Smallest range separation at which the full series will be evaluated.
  double min_sep = 0.5;
  /// Relative distance to a cutoff (|k^2 - lambda_j| < eps * k^2) that is rejected.
  double cutoff_eps = 1e-10;
};

/// Cross-section eigenvalues and axial wavenumbers at a fixed wavenumber k.
/// Immutable after construction.
class ModeSet {
 public:
  double k() const { return k_; }
  double width() const { return width_; }
  double tol() const { return tol_; }
  double min_sep() const { return min_sep_; }

  /// Index of the last propagating mode.
  int J() const { return J_; }
  int J_max() const { return J_max_; }
  int propagating_count() const { return J_ + 1; }

  const std::vector<double>& lambdas() const { return lambdas_; }
  const std::vector<cplx>& betas() const { return betas_; }

  /// Real axial wavenumber of a propagating mode, j <= J.
  double beta(int j) const { return betas_[static_cast<std::size_t>(j)].real(); }
  /// Decay rate |beta_j| of an evanescent mode, j > J.
  double decay(int j) const { return betas_[static_cast<std::size_t>(j)].imag(); }

 private:
  friend ModeSet make_mode_set(double k, double width, const ModeSetOptions& opts);

  double k_ = 0.0;
  double width_ = 1.0;
  double tol_ = 1e-12;
  double min_sep_ = 0.5;
  int J_ = 0;
  int J_max_ = 0;
  std::vector<double> lambdas_;
  std::vector<cplx> betas_;
};

inline double mode_lambda(int j, double width) {
  const double kappa = j * kPi / width;
  return kappa * kappa;
}

inline ModeSet make_mode_set(double k, double width, const ModeSetOptions& opts = {}) {
  require(k > 0.0 && std::isfinite(k), ErrorKind::InvalidArgument, "wavenumber must be positive");
  require(width > 0.0 && std::isfinite(width), ErrorKind::InvalidArgument, "width must be positive");
  require(opts.min_sep > 0.0, ErrorKind::InvalidArgument, "min_sep must be positive");
  require(opts.tol > 0.0 && opts.tol < 1.0, ErrorKind::InvalidArgument, "tol must lie in (0, 1)");

  ModeSet m;
  m.k_ = k;
  m.width_ = width;
  m.tol_ = opts.tol;
  m.min_sep_ = opts.min_sep;

  const double k2 = k * k;
  int J = static_cast<int>(std::floor(k * width / kPi));
  // Guard the floor against rounding on either side.
  while (mode_lambda(J + 1, width) <= k2) ++J;
  while (J > 0 && mode_lambda(J, width) > k2) --J;
  m.J_ = J;

  for (int j : {J, J + 1}) {
    if (std::abs(k2 - mode_lambda(j, width)) < opts.cutoff_eps * k2) {
      fail(ErrorKind::CutoffResonance,
           "k = " + std::to_string(k) + " is at the cutoff of mode " + std::to_string(j));
    }
  }

  int j = J + 1;
  const double log_tol = std::log(opts.tol);
  while (-std::sqrt(mode_lambda(j, width) - k2) * opts.min_sep >= log_tol) ++j;
  m.J_max_ = j;

  m.lambdas_.resize(static_cast<std::size_t>(j + 1));
  m.betas_.resize(static_cast<std::size_t>(j + 1));
  for (int i = 0; i <= j; ++i) {
    const double lam = mode_lambda(i, width);
    m.lambdas_[static_cast<std::size_t>(i)] = lam;
    m.betas_[static_cast<std::size_t>(i)] =
        i <= J ? cplx(std::sqrt(k2 - lam), 0.0) : cplx(0.0, std::sqrt(lam - k2));
  }
  return m;
}

/// Orthonormal Neumann eigenfunction of the cross-section (0, width).
inline double mode_eigenfunction(int j, double xp, double width) {
  const double scale = j == 0 ? std::sqrt(1.0 / width) : std::sqrt(2.0 / width);
  return scale * std::cos(j * kPi * xp / width);
}

/// Values psi_0(xp) ... psi_n(xp).
inline std::vector<double> mode_values(int n, double xp, double width) {
  std::vector<double> out(static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j) out[static_cast<std::size_t>(j)] = mode_eigenfunction(j, xp, width);
  return out;
}

/// Full Green's function (propagating + truncated evanescent series).
/// Requires |p.x - q.x| >= modes.min_sep().
inline cplx greens_function(const Point& p, const Point& q, const ModeSet& modes) {
  const double sep = std::abs(p.x - q.x);
  if (sep < modes.min_sep() * (1.0 - 1e-12)) {
    fail(ErrorKind::SeparationTooSmall, "range separation " + std::to_string(sep) + " below min_sep " +
                                            std::to_string(modes.min_sep()));
  }
  const double w = modes.width();
  const double xl = std::min(p.x, q.x);
  const double xg = std::max(p.x, q.x);
  cplx sum = 0.0;
  for (int j = 0; j <= modes.J(); ++j) {
    const double b = modes.beta(j);
    const double pp = mode_eigenfunction(j, p.xp, w) * mode_eigenfunction(j, q.xp, w);
    sum += (kI / b) * pp * std::exp(-kI * (b * xl)) * std::cos(b * xg);
  }
  for (int j = modes.J() + 1; j <= modes.J_max(); ++j) {
    const double b = modes.decay(j);
    const double pp = mode_eigenfunction(j, p.xp, w) * mode_eigenfunction(j, q.xp, w);
    // exp(b xl) cosh(b xg) written without overflow
    const double term = 0.5 * (std::exp(b * (xl - xg)) + std::exp(b * (xl + xg)));
    sum += pp * term / b;
  }
  return sum;
}

/// Propagating part of the Green's function (j = 0..J); defined everywhere.
inline cplx greens_propagating(const Point& p, const Point& z, const ModeSet& modes) {
  const double w = modes.width();
  const double xl = std::min(p.x, z.x);
  const double xg = std::max(p.x, z.x);
  cplx sum = 0.0;
  for (int j = 0; j <= modes.J(); ++j) {
    const double b = modes.beta(j);
    const double pp = mode_eigenfunction(j, p.xp, w) * mode_eigenfunction(j, z.xp, w);
    sum += (kI / b) * pp * std::exp(-kI * (b * xl)) * std::cos(b * xg);
  }
  return sum;
}

namespace detail {

// Unit phasor exp(i j theta) advanced by multiplication, reseeded periodically
// so the accumulated rounding stays at a few ulps.
class Phasor {
 public:
  explicit Phasor(double theta, int j0) : theta_(theta), j_(j0), step_(std::polar(1.0, theta)) { reseed(); }
  double cos() const { return value_.real(); }
  void advance() {
    ++j_;
    if ((j_ & 31) == 0) {
      reseed();
    } else {
      value_ *= step_;
    }
  }

 private:
  void reseed() { value_ = std::polar(1.0, theta_ * j_); }
  double theta_;
  int j_;
  cplx step_;
  cplx value_;
};

}  // namespace detail

/// Per-mode constants of the same-range kernel for j = J+1 .. n_terms,
/// shared by many evaluations at one wavenumber.
struct KummerTable {
  int first = 1;
  int last = 0;
  double width = 1.0;
  std::vector<double> kappa;   // j pi / width
  std::vector<double> inv_b;   // 1 / |beta_j|
  std::vector<double> delta;   // kappa_j - |beta_j|
  std::vector<double> cross;   // delta_j / (|beta_j| kappa_j)
};

inline KummerTable make_kummer_table(const ModeSet& modes, int n_terms = kDefaultKummerTerms) {
  KummerTable t;
  t.width = modes.width();
  t.first = modes.J() + 1;
  t.last = std::max(n_terms, t.first);
  const double k2 = modes.k() * modes.k();
  for (int j = t.first; j <= t.last; ++j) {
    const double kappa = j * kPi / t.width;
    const double b = std::sqrt(kappa * kappa - k2);
    const double delta = k2 / (kappa + b);  // kappa - b, without cancellation
    t.kappa.push_back(kappa);
    t.inv_b.push_back(1.0 / b);
    t.delta.push_back(delta);
    t.cross.push_back(delta / (b * kappa));
  }
  return t;
}

/// Green's function valid at any pair of distinct points, including equal
/// range. The modal series is split as
///   exact propagating terms + exact evanescent terms minus their large-j
///   asymptote (j <= n_terms) + closed-form sum of the asymptote,
/// where the asymptote (exp(-kappa_j d) / (2 kappa_j)) psi_j psi_j sums to a
/// logarithm. Agrees with greens_function() wherever both are defined.
inline cplx greens_function_near(const Point& p, const Point& q, const ModeSet& modes, const KummerTable& tab) {
  const double w = modes.width();
  const int J = modes.J();
  const double xl = std::min(p.x, q.x);
  const double xg = std::max(p.x, q.x);
  const double d1 = xg - xl;    // direct distance in range
  const double d2 = -(xl + xg);  // distance to the end-wall image
  if (d1 == 0.0 && p.xp == q.xp) fail(ErrorKind::SeparationTooSmall, "Green's function at coincident points");

  cplx sum = 0.0;
  for (int j = 0; j <= J; ++j) {
    const double b = modes.beta(j);
    const double pp = mode_eigenfunction(j, p.xp, w) * mode_eigenfunction(j, q.xp, w);
    sum += (kI / b) * pp * std::exp(-kI * (b * xl)) * std::cos(b * xg);
  }

  const double th_minus = kPi * (p.xp - q.xp) / w;
  const double th_plus = kPi * (p.xp + q.xp) / w;

  // exact minus asymptotic, j = J+1 .. n_terms
  double tail = 0.0;
  {
    detail::Phasor cm(th_minus, J + 1);
    detail::Phasor cp(th_plus, J + 1);
    const double r1 = std::exp(-kPi * d1 / w);
    const double r2 = std::exp(-kPi * d2 / w);
    double e1 = std::pow(r1, J + 1);
    double e2 = std::pow(r2, J + 1);
    const std::size_t n = tab.kappa.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = tab.delta[i];
      // exp(-b d)/b - exp(-kappa d)/kappa = exp(-kappa d) [expm1(delta d)/b + delta/(b kappa)]
      double diff = e1 * (std::expm1(delta * d1) * tab.inv_b[i] + tab.cross[i]);
      if (e2 > 1e-300) diff += e2 * (std::expm1(delta * d2) * tab.inv_b[i] + tab.cross[i]);
      tail += 0.5 * (cm.cos() + cp.cos()) / w * diff;
      if (e1 * std::exp(delta * d1) < 1e-18 / tab.kappa[i]) break;
      e1 *= r1;
      e2 *= r2;
      cm.advance();
      cp.advance();
    }
  }

  // closed form of sum_{j>=1} asymptote, minus the j <= J part already counted exactly
  double kummer = 0.0;
  for (const double th : {th_minus, th_plus}) {
    const double s = std::sin(0.5 * th);
    for (const double d : {d1, d2}) {
      const double one_minus_r = -std::expm1(-kPi * d / w);
      const double r = 1.0 - one_minus_r;
      kummer -= std::log(one_minus_r * one_minus_r + 4.0 * r * s * s) / (4.0 * kPi);
    }
  }
  for (int j = 1; j <= J; ++j) {
    const double kappa = j * kPi / w;
    const double pp = (std::cos(j * th_minus) + std::cos(j * th_plus)) / w;
    kummer -= 0.5 * pp * (std::exp(-kappa * d1) + std::exp(-kappa * d2)) / kappa;
  }
  return sum + tail + kummer;
}

inline cplx greens_function_near(const Point& p, const Point& q, const ModeSet& modes,
                                 int n_terms = kDefaultKummerTerms) {
  return greens_function_near(p, q, modes, make_kummer_table(modes, n_terms));
}

/// sum_j psi_j(z.xp)^2 cos^2(beta_j z.x) over propagating modes; the
/// normalization constant of the backpropagation test function is its inverse.
inline double normalizer_sum(const Point& z, const ModeSet& modes) {
  double s = 0.0;
  for (int j = 0; j <= modes.J(); ++j) {
    const double psi = mode_eigenfunction(j, z.xp, modes.width());
    const double c = std::cos(modes.beta(j) * z.x);
    s += psi * psi * c * c;
  }
  return s;
}

inline constexpr double kDegenerateNormalizer = 1e-14;

inline double phi_normalizer(const Point& z, const ModeSet& modes) {
  const double s = normalizer_sum(z, modes);
  if (s < kDegenerateNormalizer) {
    fail(ErrorKind::DegenerateNormalizer, "all propagating modes vanish at the search point");
  }
  return 1.0 / s;
}

inline void require_imaging_point(const Point& z, double x_A, const ModeSet& modes) {
  require(z.x > x_A && z.x < 0.0 && z.xp >= 0.0 && z.xp <= modes.width(), ErrorKind::InvalidArgument,
          "search point must lie between the array and the end wall");
}

/// Backpropagation test function phi_z evaluated at the array point (x_A, xp):
/// C_z sum_j (beta_j / i) psi_j(z.xp) psi_j(xp) exp(i beta_j x_A) cos(beta_j z.x).
inline cplx test_function_phi(const Point& z, double xp, double x_A, const ModeSet& modes) {
  require_imaging_point(z, x_A, modes);
  const double cz = phi_normalizer(z, modes);
  const double w = modes.width();
  cplx sum = 0.0;
  for (int j = 0; j <= modes.J(); ++j) {
    const double b = modes.beta(j);
    sum += (b / kI) * mode_eigenfunction(j, z.xp, w) * mode_eigenfunction(j, xp, w) *
           std::exp(kI * (b * x_A)) * std::cos(b * z.x);
  }
  return cz * sum;
}

/// Classic migration kernel; real for propagating modes.
inline double kernel_K0(const Point& p, const Point& z, const ModeSet& modes) {
  const double w = modes.width();
  double sum = 0.0;
  for (int j = 0; j <= modes.J(); ++j) {
    const double b = modes.beta(j);
    // paired products keep K0(p, z) == K0(z, p) bit for bit
    const double pp = mode_eigenfunction(j, p.xp, w) * mode_eigenfunction(j, z.xp, w);
    const double cc = std::cos(b * p.x) * std::cos(b * z.x);
    sum += pp * cc / (b * b);
  }
  return sum;
}

/// Kernel of the modified migration function, K(z, z) = 1.
inline double kernel_K(const Point& p, const Point& z, double x_A, const ModeSet& modes) {
  require_imaging_point(z, x_A, modes);
  const double cz = phi_normalizer(z, modes);
  const double w = modes.width();
  double sum = 0.0;
  for (int j = 0; j <= modes.J(); ++j) {
    const double b = modes.beta(j);
    const double pp = mode_eigenfunction(j, p.xp, w) * mode_eigenfunction(j, z.xp, w);
    sum += pp * (std::cos(b * p.x) * std::cos(b * z.x));
  }
  return cz * sum;
}

}  // namespace wgimg
