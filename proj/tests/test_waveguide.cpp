#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "wgimg/waveguide.hpp"

using namespace wgimg;

namespace {

ModeSet modes_at(double k_over_pi, double min_sep = 0.5) {
  ModeSetOptions o;
  o.min_sep = min_sep;
  return make_mode_set(k_over_pi * kPi, 1.0, o);
}

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(ModeSet, PropagatingCounts) {
  EXPECT_EQ(modes_at(29.15).propagating_count(), 30);
  EXPECT_EQ(modes_at(49.15).propagating_count(), 50);
  EXPECT_EQ(modes_at(0.5).propagating_count(), 1);
}

TEST(ModeSet, BranchesAndOrdering) {
  const ModeSet m = modes_at(29.15);
  ASSERT_GT(m.J_max(), m.J());
  EXPECT_EQ(m.lambdas()[0], 0.0);
  for (int j = 0; j <= m.J_max(); ++j) {
    const cplx b = m.betas()[static_cast<std::size_t>(j)];
    if (j > 0) {
      EXPECT_GT(m.lambdas()[static_cast<std::size_t>(j)], m.lambdas()[static_cast<std::size_t>(j - 1)]);
    }
    if (j <= m.J()) {
      EXPECT_EQ(b.imag(), 0.0);
      EXPECT_GT(b.real(), 0.0);
      EXPECT_LE(m.lambdas()[static_cast<std::size_t>(j)], m.k() * m.k());
    } else {
      EXPECT_EQ(b.real(), 0.0);
      EXPECT_GT(b.imag(), 0.0);
    }
  }
  // tail bound at the truncation index
  EXPECT_LT(std::exp(-m.decay(m.J_max()) * m.min_sep()), m.tol());
}

TEST(ModeSet, CutoffResonanceRejected) {
  try {
    make_mode_set(3.0 * kPi, 1.0);
    FAIL() << "k on a cutoff must be rejected";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CutoffResonance);
  }
  EXPECT_THROW(make_mode_set(-1.0, 1.0), Error);
}

TEST(Eigenfunctions, ValuesAndOrthonormality) {
  EXPECT_DOUBLE_EQ(mode_eigenfunction(0, 0.37, 1.0), 1.0);
  EXPECT_NEAR(mode_eigenfunction(1, 0.5, 1.0), 0.0, 1e-15);
  for (int j = 0; j <= 6; ++j) {
    for (int l = 0; l <= 6; ++l) {
      const double g = simpson([&](double x) { return mode_eigenfunction(j, x, 1.0) * mode_eigenfunction(l, x, 1.0); },
                               0.0, 1.0, 400);
      EXPECT_NEAR(g, j == l ? 1.0 : 0.0, 1e-10) << j << "," << l;
    }
  }
}

TEST(Greens, SymmetricAndSeparationGuard) {
  const ModeSet m = modes_at(29.15);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-2.0, -0.0), uy(0.0, 1.0);
  int tested = 0;
  while (tested < 20) {
    const Point p{ux(rng), uy(rng)}, q{ux(rng), uy(rng)};
    if (std::abs(p.x - q.x) < m.min_sep()) continue;
    const cplx a = greens_function(p, q, m), b = greens_function(q, p, m);
    EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(a));
    ++tested;
  }
  try {
    greens_function({-1.0, 0.3}, {-1.1, 0.6}, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SeparationTooSmall);
  }
}

TEST(Greens, HelmholtzResidualByFiniteDifferences) {
  const ModeSet m = modes_at(29.15, 0.3);
  const double h = 1e-4, k2 = m.k() * m.k();
  const Point q{-1.6, 0.41};
  for (const Point p : {Point{-1.1, 0.3}, Point{-0.5, 0.77}, Point{-0.2, 0.5}}) {
    auto G = [&](double dx, double dy) { return greens_function({p.x + dx, p.xp + dy}, q, m); };
    const cplx lap = (G(h, 0) + G(-h, 0) + G(0, h) + G(0, -h) - 4.0 * G(0, 0)) / (h * h);
    EXPECT_LT(std::abs(lap + k2 * G(0, 0)), 1e-3 * std::abs(k2 * G(0, 0)));
  }
}

TEST(Greens, NeumannEndWall) {
  const ModeSet m = modes_at(29.15);
  const Point q{-1.3, 0.62};
  const double h = 1e-6;
  for (double xp : {0.1, 0.45, 0.8}) {
    const cplx g0 = greens_function({0.0, xp}, q, m);
    const cplx g1 = greens_function({-h, xp}, q, m);
    const cplx g2 = greens_function({-2.0 * h, xp}, q, m);
    // second-order one-sided difference
    EXPECT_LT(std::abs((3.0 * g0 - 4.0 * g1 + g2) / (2.0 * h)), 1e-6 * m.k() * std::abs(g0));
  }
}

TEST(Greens, TailDoublingBelowTolerance) {
  ModeSetOptions o;
  o.min_sep = 0.5;
  const ModeSet m = make_mode_set(29.15 * kPi, 1.0, o);
  o.tol = m.tol() * m.tol();
  const ModeSet longer = make_mode_set(29.15 * kPi, 1.0, o);
  ASSERT_GT(longer.J_max(), m.J_max());
  const Point p{-1.5, 0.2}, q{-1.0, 0.7};
  EXPECT_LT(std::abs(greens_function(p, q, m) - greens_function(p, q, longer)), m.tol());
}

TEST(Greens, PropagatingPart) {
  const ModeSet m = modes_at(29.15);
  const Point p{-2.0, 0.3}, q{-0.5, 0.55};
  const double bound = 10.0 * std::exp(-m.decay(m.J() + 1) * 1.0);
  EXPECT_LT(std::abs(greens_function(p, q, m) - greens_propagating(p, q, m)), bound);
  EXPECT_EQ(greens_propagating(p, q, m), greens_propagating(q, p, m));

  const ModeSet single = modes_at(0.5);
  const double k = single.k();
  const cplx expect = (kI / k) * std::exp(-kI * (k * p.x)) * std::cos(k * q.x);
  EXPECT_LT(std::abs(greens_propagating(p, q, single) - expect), 1e-14);
}

TEST(Greens, NearKernelMatchesSeparatedSeries) {
  // the mode-sum truncation of the accelerated kernel is bounded by k^2 W^3 / (4 pi^3 N^2)
  const ModeSet m = modes_at(29.15, 0.05);
  const double bound = m.k() * m.k() / (4.0 * kPi * kPi * kPi * kDefaultKummerTerms * kDefaultKummerTerms);
  for (const auto& [p, q] : {std::pair{Point{-1.0, 0.5}, Point{-0.9, 0.5}}, std::pair{Point{-1.2, 0.1}, Point{-1.0, 0.95}},
                             std::pair{Point{-0.06, 0.3}, Point{-0.01, 0.32}}}) {
    EXPECT_LT(std::abs(greens_function_near(p, q, m) - greens_function(p, q, m)), bound);
  }
}

TEST(Greens, NearKernelLogSingularity) {
  // G ~ -log(r) / (2 pi) at a source point in the interior
  const ModeSet m = modes_at(29.15);
  const Point q{-1.0, 0.43};
  for (double r : {1e-3, 1e-4}) {
    const cplx a = greens_function_near({q.x + r, q.xp}, q, m);
    const cplx b = greens_function_near({q.x + 0.5 * r, q.xp}, q, m);
    EXPECT_NEAR((a - b).real(), -std::log(2.0) / (2.0 * kPi), 1e-3);
    EXPECT_NEAR((a - b).imag(), 0.0, 1e-3);
  }
}

TEST(TestFunction, NormalizationAndKernelConsistency) {
  const ModeSet m = modes_at(29.15);
  const double x_A = -2.0;
  const Point z{-1.0, 0.5};
  double s = 0.0;
  for (int j = 0; j <= m.J(); ++j) {
    const double c = std::cos(m.beta(j) * z.x);
    s += std::pow(mode_eigenfunction(j, z.xp, 1.0), 2) * c * c;
  }
  EXPECT_NEAR(s * phi_normalizer(z, m), 1.0, 1e-14);
  EXPECT_NEAR(kernel_K(z, z, x_A, m), 1.0, 1e-12);

  // (G(p, .), phi_z) over the array reproduces K(p, z); trapezoid is exact here
  for (const Point p : {Point{-0.8, 0.3}, Point{-1.0, 0.5}, Point{-1.4, 0.9}}) {
    const int n = 2000;
    cplx sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double xp = static_cast<double>(i) / n;
      const double w = (i == 0 || i == n) ? 0.5 / n : 1.0 / n;
      sum += w * greens_function(p, {x_A, xp}, m) * test_function_phi(z, xp, x_A, m);
    }
    EXPECT_LT(std::abs(sum - kernel_K(p, z, x_A, m)), 1e-8);
  }
}

TEST(TestFunction, DegenerateNormalizer) {
  const ModeSet m = modes_at(0.5);
  // single mode, cosine node at z.x = -pi / (2k)
  const Point z{-kPi / (2.0 * m.k()), 0.5};
  try {
    phi_normalizer(z, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateNormalizer);
  }
}

TEST(Kernels, SymmetryAndFocus) {
  const ModeSet m = modes_at(49.15);
  const Point z{-1.0, 0.5};
  const Point p{-0.7, 0.2};
  EXPECT_EQ(kernel_K0(p, z, m), kernel_K0(z, p, m));
  double near = 0.0, far = 0.0;
  for (int ix = 0; ix < 181; ++ix) {
    for (int iy = 0; iy < 81; ++iy) {
      const Point q{-1.9 + 1.8 * ix / 180.0, 0.1 + 0.8 * iy / 80.0};
      const double v = std::abs(kernel_K(q, z, -2.0, m));
      const double d = distance(q, z);
      if (d < 0.05) near = std::max(near, v);
      if (d > 0.2) far = std::max(far, v);
    }
  }
  EXPECT_LT(far, near);
}
