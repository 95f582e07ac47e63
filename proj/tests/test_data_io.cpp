#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "wgimg/data.hpp"
#include "wgimg/io.hpp"

using namespace wgimg;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

ModeSet modes_at(double k_over_pi) { return make_mode_set(k_over_pi * kPi, 1.0); }

Eigen::MatrixXcd random_symmetric(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c <= r; ++c) m(r, c) = m(c, r) = cplx(nd(rng), nd(rng));
  return m;
}

// U = Psi X Psi^T built directly from cosines, independent of mode_sampling_matrix.
ResponseMatrix synthetic_response(const ArrayGeometry& a, const ModeSet& m, const Eigen::MatrixXcd& X) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd psi(n, m.propagating_count());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int j = 0; j <= m.J(); ++j) {
      const double norm = j == 0 ? 1.0 : std::sqrt(2.0);
      psi(r, j) = norm * std::cos(j * kPi * a.sensor_xp[static_cast<std::size_t>(r)]);
    }
  }
  ResponseMatrix U;
  U.array = a;
  U.k = m.k();
  U.entries = psi.cast<cplx>() * X * psi.transpose().cast<cplx>();
  return U;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("wgimg_io_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(Array, SensorCounts) {
  const auto full = make_array(-2.0, 1.0, 1.0 / 60.0);
  EXPECT_EQ(full.size(), 61u);
  EXPECT_DOUBLE_EQ(full.sensor_xp.front(), 0.0);
  EXPECT_NEAR(full.sensor_xp.back(), 1.0, 1e-14);
  EXPECT_TRUE(full.full_aperture());

  const auto part = make_array(-2.0, 1.0, 1.0 / 60.0, 0.75);
  EXPECT_EQ(part.size(), 46u);
  for (double xp : part.sensor_xp) EXPECT_LE(xp, 0.75 + 1e-14);
  EXPECT_FALSE(part.full_aperture());

  EXPECT_EQ(make_array(-2.0, 1.0, 1.0).size(), 2u);
  const auto inner = make_array(-2.0, 1.0, 1.0 / 60.0, 1.0, false);
  EXPECT_EQ(inner.size(), 59u);
  EXPECT_GT(inner.sensor_xp.front(), 0.0);
  EXPECT_LT(inner.sensor_xp.back(), 1.0);

  EXPECT_EQ(kind_of([] { make_array(1.0, 1.0, 0.1); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { make_array(-2.0, 1.0, 0.1, 1.5); }), ErrorKind::InvalidArgument);
}

TEST(Noise, ZeroLevelAndDeterminism) {
  const ModeSet m = modes_at(5.5);
  const auto a = make_array(-2.0, 1.0, 1.0 / 60.0);
  const auto U = synthetic_response(a, m, random_symmetric(m.propagating_count(), 3));
  const auto same = add_noise(U, 0.0, 9);
  EXPECT_EQ(same.entries, U.entries);
  EXPECT_EQ(same.seed, std::optional<std::uint64_t>(9));

  const auto n1 = add_noise(U, 10.0, 42), n2 = add_noise(U, 10.0, 42), n3 = add_noise(U, 10.0, 43);
  EXPECT_EQ(n1.entries, n2.entries);
  EXPECT_NE(n1.entries, n3.entries);
  EXPECT_DOUBLE_EQ(n1.noise_sigma_pct, 10.0);
  EXPECT_EQ(kind_of([&] { add_noise(U, -1.0, 1); }), ErrorKind::InvalidArgument);
}

TEST(Noise, EmpiricalLevel) {
  const ModeSet m = modes_at(5.5);
  const auto a = make_array(-2.0, 1.0, 1.0 / 60.0);
  const auto U = synthetic_response(a, m, random_symmetric(m.propagating_count(), 4));
  const auto N = add_noise(U, 10.0, 7);
  const Eigen::MatrixXcd e = N.entries - U.entries;
  const double sigma = 0.1 * U.entries.cwiseAbs().maxCoeff();
  const double rms = std::sqrt(e.cwiseAbs2().mean());
  EXPECT_NEAR(rms, sigma, 0.05 * sigma);
  // real and imaginary parts carry half the variance each
  const double re = std::sqrt(e.real().cwiseAbs2().mean()), im = std::sqrt(e.imag().cwiseAbs2().mean());
  EXPECT_NEAR(re, sigma / std::sqrt(2.0), 0.05 * sigma);
  EXPECT_NEAR(im, sigma / std::sqrt(2.0), 0.05 * sigma);
  EXPECT_NEAR(e.real().mean(), 0.0, 0.05 * sigma);
}

TEST(Projection, SingleModeEntry) {
  const ModeSet m = modes_at(29.15);
  const auto a = make_array(-2.0, 1.0, 1.0 / 60.0);
  ResponseMatrix U;
  U.array = a;
  U.k = m.k();
  U.entries = Eigen::MatrixXcd::Ones(61, 61);  // psi_0 (x) psi_0
  const auto P = project_to_modes(U, m);
  ASSERT_EQ(P.entries.rows(), 30);
  Eigen::MatrixXcd e00 = Eigen::MatrixXcd::Zero(30, 30);
  e00(0, 0) = 1.0;
  EXPECT_LT((P.entries - e00).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(P.J, m.J());
  EXPECT_DOUBLE_EQ(P.x_A, -2.0);
}

TEST(Projection, RecoversModeMatrixAndIsLinear) {
  const ModeSet m = modes_at(29.15);
  const auto a = make_array(-2.0, 1.0, 1.0 / 60.0);
  const Eigen::MatrixXcd X = random_symmetric(30, 11), Y = random_symmetric(30, 12);
  const auto U = synthetic_response(a, m, X);
  const auto P = project_to_modes(U, m);
  // the trapezoid rule on 60 panels integrates these cosine products exactly
  EXPECT_LT((P.entries - X).cwiseAbs().maxCoeff(), 1e-11 * X.cwiseAbs().maxCoeff());
  EXPECT_LT((P.entries - P.entries.transpose()).cwiseAbs().maxCoeff(), 1e-12);

  ResponseMatrix V = U;
  V.entries = 2.0 * U.entries + cplx(0.0, 3.0) * synthetic_response(a, m, Y).entries;
  const auto PV = project_to_modes(V, m);
  const Eigen::MatrixXcd expect = 2.0 * P.entries + cplx(0.0, 3.0) * project_to_modes(synthetic_response(a, m, Y), m).entries;
  EXPECT_LT((PV.entries - expect).cwiseAbs().maxCoeff(), 1e-11 * expect.cwiseAbs().maxCoeff());

  ResponseMatrix Z = U;
  Z.entries.setZero();
  EXPECT_EQ(project_to_modes(Z, m).entries.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Projection, RejectsPartialAndMismatch) {
  const ModeSet m = modes_at(29.15);
  const auto U = synthetic_response(make_array(-2.0, 1.0, 1.0 / 60.0, 0.75), m, random_symmetric(30, 1));
  EXPECT_EQ(kind_of([&] { project_to_modes(U, m); }), ErrorKind::PartialApertureError);
  ResponseMatrix bad = synthetic_response(make_array(-2.0, 1.0, 1.0 / 60.0), m, random_symmetric(30, 1));
  bad.entries.conservativeResize(60, 60);
  EXPECT_EQ(kind_of([&] { project_to_modes(bad, m); }), ErrorKind::DataMismatch);
}

TEST(Completion, FullApertureAgreesWithProjection) {
  const ModeSet m = modes_at(29.15);
  const auto U = synthetic_response(make_array(-2.0, 1.0, 1.0 / 60.0), m, random_symmetric(30, 5));
  const auto P = project_to_modes(U, m);
  const auto C = complete_partial_aperture(U, m);
  EXPECT_LT((P.entries - C.entries).cwiseAbs().maxCoeff(), 1e-6 * P.entries.cwiseAbs().maxCoeff());
}

TEST(Completion, PartialApertureFitsData) {
  const ModeSet m = modes_at(29.15);
  const auto a = make_array(-2.0, 1.0, 1.0 / 60.0, 0.75);
  const auto U = synthetic_response(a, m, random_symmetric(30, 6));
  const auto C = complete_partial_aperture(U, m);
  ASSERT_EQ(C.entries.rows(), 30);
  EXPECT_LT((C.entries - C.entries.transpose()).cwiseAbs().maxCoeff(), 1e-2 * C.entries.cwiseAbs().maxCoeff());
  // the fitted mode matrix reproduces the measured block
  const auto refit = synthetic_response(a, m, C.entries);
  EXPECT_LT((refit.entries - U.entries).norm(), 1e-6 * U.entries.norm());
  EXPECT_DOUBLE_EQ(C.aperture_fraction, 0.75);
}

TEST(Completion, Underdetermined) {
  const ModeSet two = modes_at(1.5);
  ASSERT_EQ(two.propagating_count(), 2);
  const auto a = make_array(-2.0, 1.0, 0.5, 0.25);
  ASSERT_EQ(a.size(), 1u);
  ResponseMatrix U;
  U.array = a;
  U.k = two.k();
  U.entries = Eigen::MatrixXcd::Ones(1, 1);
  EXPECT_EQ(kind_of([&] { complete_partial_aperture(U, two); }), ErrorKind::UnderdeterminedAperture);
}

TEST(Completion, RestrictAperture) {
  const ModeSet m = modes_at(29.15);
  const auto U = synthetic_response(make_array(-2.0, 1.0, 1.0 / 60.0), m, random_symmetric(30, 8));
  const auto R = restrict_aperture(U, 0.75);
  ASSERT_EQ(R.array.size(), 46u);
  EXPECT_EQ(R.entries, U.entries.topLeftCorner(46, 46));
  EXPECT_FALSE(R.array.full_aperture());
}

TEST(Io, ResponseRoundTripIsExact) {
  TempDir dir;
  const ModeSet m = modes_at(29.15);
  auto U = add_noise(synthetic_response(make_array(-2.0, 1.0, 1.0 / 60.0), m, random_symmetric(30, 2)), 3.0, 77);
  const fs::path file = dir.path() / "u.wgrm";
  save_response(file, U, "0123456789abcdef");
  const auto V = load_response(file, m.k());
  EXPECT_EQ(V.entries, U.entries);
  EXPECT_EQ(V.k, U.k);
  EXPECT_EQ(V.array.sensor_xp, U.array.sensor_xp);
  EXPECT_EQ(V.noise_sigma_pct, 3.0);
  EXPECT_EQ(V.seed, std::optional<std::uint64_t>(77));
  EXPECT_EQ(detail::read_text(file).config_hash, "0123456789abcdef");

  const auto P = project_to_modes(synthetic_response(make_array(-2.0, 1.0, 1.0 / 60.0), m, random_symmetric(30, 3)), m);
  save_projected(dir.path() / "p.wgpm", P);
  const auto Q = load_projected(dir.path() / "p.wgpm");
  EXPECT_EQ(Q.entries, P.entries);
  EXPECT_EQ(Q.J, P.J);
  EXPECT_FALSE(Q.seed.has_value());
}

TEST(Io, ResponseErrors) {
  TempDir dir;
  const ModeSet m = modes_at(29.15);
  const auto U = synthetic_response(make_array(-2.0, 1.0, 0.1), m, random_symmetric(30, 2));
  const fs::path file = dir.path() / "u.wgrm";
  save_response(file, U);
  EXPECT_EQ(kind_of([&] { load_response(file, modes_at(30.15).k()); }), ErrorKind::DataMismatch);

  std::ifstream in(file);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const fs::path cut = dir.path() / "cut.wgrm";
  std::ofstream(cut) << text.substr(0, text.size() / 2);
  EXPECT_EQ(kind_of([&] { load_response(cut); }), ErrorKind::MalformedFile);

  const fs::path junk = dir.path() / "junk.wgrm";
  std::ofstream(junk) << "WGRM v2\n";
  EXPECT_EQ(kind_of([&] { load_response(junk); }), ErrorKind::MalformedFile);
  EXPECT_EQ(kind_of([&] { load_response(dir.path() / "missing.wgrm"); }), ErrorKind::IoError);
}

TEST(Io, ImageAndPgm) {
  TempDir dir;
  ImageGrid img;
  img.grid = GridSpec{-1.5, -0.5, 0.2, 0.8, 4, 3};
  img.method = "mig";
  Eigen::MatrixXd raw(3, 4);
  raw << 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 0.3;
  img = normalize_image(img.grid, "mig", raw);
  save_image(dir.path() / "a.wgig", img, "feed");
  const auto back = load_image(dir.path() / "a.wgig");
  EXPECT_EQ(back.values, img.values);
  EXPECT_EQ(back.grid, img.grid);
  EXPECT_EQ(back.method, "mig");
  EXPECT_DOUBLE_EQ(back.norm, 10.0);

  const std::string pgm = serialize_pgm(img, "feed");
  std::istringstream ss(pgm);
  std::string magic, comment;
  int w = 0, h = 0, maxv = 0;
  std::getline(ss, magic);
  std::getline(ss, comment);
  ss >> w >> h >> maxv;
  EXPECT_EQ(magic, "P2");
  EXPECT_EQ(comment, "# config_hash=feed");
  EXPECT_EQ(w, 4);
  EXPECT_EQ(h, 3);
  EXPECT_EQ(maxv, 255);
  std::vector<int> px;
  for (int v; ss >> v;) px.push_back(v);
  ASSERT_EQ(px.size(), 12u);
  // top row is the largest cross-range index
  EXPECT_EQ(px[2], 255);
  EXPECT_EQ(px[8], 0);
}
