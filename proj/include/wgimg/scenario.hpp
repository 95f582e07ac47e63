#pragma once
//
// Scenario configuration (flat `key = value` text) and the four commands of
// the command-line tool: simulate, image, kernels, compare.
//

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "wgimg/array.hpp"
#include "wgimg/data.hpp"
#include "wgimg/error.hpp"
#include "wgimg/forward.hpp"
#include "wgimg/geometry.hpp"
#include "wgimg/imaging.hpp"
#include "wgimg/io.hpp"
#include "wgimg/waveguide.hpp"

namespace wgimg {

struct ScenarioConfig {
  double width = 1.0;
  /// Wavenumbers in units of pi / width.
  std::vector<double> wavenumbers{29.15};
  double x_A = -2.0;
  double spacing = 1.0 / 60.0;
  double aperture_fraction = 1.0;
  bool include_endpoints = true;
  std::vector<ShapeSpec> obstacles{Rhombus{{-1.0, 0.5}, 0.15, 0.1}};
  // discretization overrides; unset means the per-shape default
  std::optional<int> n_boundary;
  std::optional<int> n_source;
  std::optional<double> source_offset;
  std::optional<double> corner_exponent;
  double residual_tol = 1e-6;
  double sigma_pct = 0.0;
  std::uint64_t seed = 1;
  GridSpec grid{};
  int kernel_nx = 181;
  int kernel_nxp = 81;
  Point kernel_z{-1.0, 0.5};
  std::vector<std::string> methods{"factorization", "mig_sharp", "mig"};
  /// Morozov epsilon; unset means max(1e-3, sigma_pct / 100).
  std::optional<double> epsilon;
  std::vector<double> thresholds{0.5, 0.7};
  SharpVariant sharp_variant = SharpVariant::AbsIm;
  MigSign mig_sign = MigSign::Abs;
  bool project_range = false;
  std::string output = "out";
  bool write_pgm = true;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] inline void config_fail(const std::string& key, const std::string& what) {
  fail(ErrorKind::ConfigError, key + ": " + what);
}

// Accepts decimals and simple fractions such as 1/60.
inline double config_double(const std::string& key, const std::string& v) {
  const auto slash = v.find('/');
  try {
    if (slash != std::string::npos) {
      return parse_double(trim(std::string_view(v).substr(0, slash)), key) /
             parse_double(trim(std::string_view(v).substr(slash + 1)), key);
    }
    return parse_double(trim(v), key);
  } catch (const Error&) {
    config_fail(key, "expected a number, got '" + v + "'");
  }
}

inline long long config_int(const std::string& key, const std::string& v) {
  try {
    return parse_int(trim(v), key);
  } catch (const Error&) {
    config_fail(key, "expected an integer, got '" + v + "'");
  }
}

inline bool config_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  config_fail(key, "expected true or false, got '" + v + "'");
}

// Splits on commas that are not inside parentheses.
inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : v) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

inline std::vector<double> config_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(config_double(key, item));
  return out;
}

inline std::pair<double, double> config_pair(const std::string& key, const std::string& v) {
  const auto d = config_doubles(key, v);
  if (d.size() != 2) config_fail(key, "expected two comma-separated numbers");
  return {d[0], d[1]};
}

// circle(x, xp, r), square(x, xp, side), rhombus(x, xp, half_x, half_xp)
inline ShapeSpec parse_shape(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    config_fail("obstacles", "malformed shape '" + text + "'");
  }
  const std::string name = trim(std::string_view(text).substr(0, open));
  const auto args = config_doubles("obstacles", text.substr(open + 1, close - open - 1));
  auto need = [&](std::size_t n) {
    if (args.size() != n) config_fail("obstacles", name + " takes " + std::to_string(n) + " arguments");
  };
  if (name == "circle") {
    need(3);
    return Circle{{args[0], args[1]}, args[2]};
  }
  if (name == "square") {
    need(3);
    return Square{{args[0], args[1]}, args[2]};
  }
  if (name == "rhombus") {
    need(4);
    return Rhombus{{args[0], args[1]}, args[2], args[3]};
  }
  config_fail("obstacles", "unknown shape '" + name + "'");
}

inline std::string format_shape(const ShapeSpec& s) {
  struct Fmt {
    std::string operator()(const Circle& c) const {
      return "circle(" + fmt_double(c.center.x) + ", " + fmt_double(c.center.xp) + ", " + fmt_double(c.radius) + ")";
    }
    std::string operator()(const Square& c) const {
      return "square(" + fmt_double(c.center.x) + ", " + fmt_double(c.center.xp) + ", " + fmt_double(c.side) + ")";
    }
    std::string operator()(const Rhombus& c) const {
      return "rhombus(" + fmt_double(c.center.x) + ", " + fmt_double(c.center.xp) + ", " + fmt_double(c.half_diag_x) +
             ", " + fmt_double(c.half_diag_xp) + ")";
    }
  };
  return std::visit(Fmt{}, s);
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += f(v[i]);
  }
  return out;
}

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"factorization", "mig_sharp", "mig"};
  return m;
}

}  // namespace detail

inline void validate_config(const ScenarioConfig& c) {
  using detail::config_fail;
  if (!(c.width > 0.0)) config_fail("width", "must be positive");
  if (c.wavenumbers.empty()) config_fail("wavenumbers", "at least one wavenumber is required");
  for (double k : c.wavenumbers)
    if (!(k > 0.0)) config_fail("wavenumbers", "must be positive");
  if (!(c.x_A < 0.0)) config_fail("x_A", "must be negative");
  if (!(c.spacing > 0.0)) config_fail("spacing", "must be positive");
  if (!(c.aperture_fraction > 0.0 && c.aperture_fraction <= 1.0)) config_fail("aperture_fraction", "must lie in (0, 1]");
  if (!(c.sigma_pct >= 0.0)) config_fail("sigma_pct", "must be >= 0");
  if (c.epsilon && !(*c.epsilon > 0.0)) config_fail("epsilon", "must be positive");
  if (!(c.residual_tol > 0.0)) config_fail("residual_tol", "must be positive");
  for (double t : c.thresholds)
    if (!(t >= 0.0 && t <= 1.0)) config_fail("thresholds", "must lie in [0, 1]");
  for (const auto& m : c.methods) {
    if (std::find(detail::known_methods().begin(), detail::known_methods().end(), m) == detail::known_methods().end()) {
      config_fail("methods", "unknown method '" + m + "'");
    }
  }
  const auto& g = c.grid;
  if (g.nx < 1 || g.nxp < 1 || c.kernel_nx < 1 || c.kernel_nxp < 1) config_fail("grid", "counts must be positive");
  if (!(g.x0 <= g.x1 && g.xp0 <= g.xp1)) config_fail("grid", "extents must be ordered");
  if (!(g.x0 > c.x_A && g.x1 < 0.0 && g.xp0 >= 0.0 && g.xp1 <= c.width)) {
    config_fail("grid", "imaging grid must lie inside (x_A, 0) x (0, width)");
  }
  for (double k : c.wavenumbers) {
    try {
      make_mode_set(k * kPi / c.width, c.width);
    } catch (const Error& e) {
      config_fail("wavenumbers", e.what());
    }
  }
}

inline ScenarioConfig parse_config(const std::string& text) {
  using namespace detail;
  ScenarioConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string v = trim(std::string_view(line).substr(eq + 1));
    if (key == "width") c.width = config_double(key, v);
    else if (key == "wavenumbers") c.wavenumbers = config_doubles(key, v);
    else if (key == "x_A") c.x_A = config_double(key, v);
    else if (key == "spacing") c.spacing = config_double(key, v);
    else if (key == "aperture_fraction") c.aperture_fraction = config_double(key, v);
    else if (key == "include_endpoints") c.include_endpoints = config_bool(key, v);
    else if (key == "obstacles") {
      c.obstacles.clear();
      if (v != "none" && !v.empty())
        for (const auto& s : split_list(v)) c.obstacles.push_back(parse_shape(s));
    } else if (key == "n_boundary") c.n_boundary = static_cast<int>(config_int(key, v));
    else if (key == "n_source") c.n_source = static_cast<int>(config_int(key, v));
    else if (key == "source_offset") c.source_offset = config_double(key, v);
    else if (key == "corner_exponent") c.corner_exponent = config_double(key, v);
    else if (key == "residual_tol") c.residual_tol = config_double(key, v);
    else if (key == "sigma_pct") c.sigma_pct = config_double(key, v);
    else if (key == "seed") {
      const long long s = config_int(key, v);
      if (s < 0) config_fail(key, "must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "grid_x") std::tie(c.grid.x0, c.grid.x1) = config_pair(key, v);
    else if (key == "grid_xp") std::tie(c.grid.xp0, c.grid.xp1) = config_pair(key, v);
    else if (key == "nx") c.grid.nx = static_cast<int>(config_int(key, v));
    else if (key == "nxp") c.grid.nxp = static_cast<int>(config_int(key, v));
    else if (key == "kernel_nx") c.kernel_nx = static_cast<int>(config_int(key, v));
    else if (key == "kernel_nxp") c.kernel_nxp = static_cast<int>(config_int(key, v));
    else if (key == "kernel_z") {
      const auto [x, xp] = config_pair(key, v);
      c.kernel_z = {x, xp};
    } else if (key == "methods") c.methods = split_list(v);
    else if (key == "epsilon") {
      if (v == "auto") c.epsilon.reset();
      else c.epsilon = config_double(key, v);
    } else if (key == "thresholds") c.thresholds = config_doubles(key, v);
    else if (key == "sharp_variant") {
      if (v == "abs_im") c.sharp_variant = SharpVariant::AbsIm;
      else if (v == "minus_im") c.sharp_variant = SharpVariant::MinusIm;
      else config_fail(key, "expected abs_im or minus_im");
    } else if (key == "mig_sign") {
      if (v == "abs") c.mig_sign = MigSign::Abs;
      else if (v == "neg") c.mig_sign = MigSign::Neg;
      else config_fail(key, "expected abs or neg");
    } else if (key == "project_range") c.project_range = config_bool(key, v);
    else if (key == "output") c.output = v;
    else if (key == "write_pgm") c.write_pgm = config_bool(key, v);
    else fail(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  validate_config(c);
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const ScenarioConfig& c) {
  using detail::fmt_double;
  auto num = [](double d) { return fmt_double(d); };
  auto str = [](const std::string& s) { return s; };
  std::ostringstream o;
  o << "width = " << fmt_double(c.width) << '\n';
  o << "wavenumbers = " << detail::join(c.wavenumbers, num) << '\n';
  o << "x_A = " << fmt_double(c.x_A) << '\n';
  o << "spacing = " << fmt_double(c.spacing) << '\n';
  o << "aperture_fraction = " << fmt_double(c.aperture_fraction) << '\n';
  o << "include_endpoints = " << (c.include_endpoints ? "true" : "false") << '\n';
  o << "obstacles = " << (c.obstacles.empty() ? std::string("none") : detail::join(c.obstacles, detail::format_shape)) << '\n';
  if (c.n_boundary) o << "n_boundary = " << *c.n_boundary << '\n';
  if (c.n_source) o << "n_source = " << *c.n_source << '\n';
  if (c.source_offset) o << "source_offset = " << fmt_double(*c.source_offset) << '\n';
  if (c.corner_exponent) o << "corner_exponent = " << fmt_double(*c.corner_exponent) << '\n';
  o << "residual_tol = " << fmt_double(c.residual_tol) << '\n';
  o << "sigma_pct = " << fmt_double(c.sigma_pct) << '\n';
  o << "seed = " << c.seed << '\n';
  o << "grid_x = " << fmt_double(c.grid.x0) << ", " << fmt_double(c.grid.x1) << '\n';
  o << "grid_xp = " << fmt_double(c.grid.xp0) << ", " << fmt_double(c.grid.xp1) << '\n';
  o << "nx = " << c.grid.nx << '\n';
  o << "nxp = " << c.grid.nxp << '\n';
  o << "kernel_nx = " << c.kernel_nx << '\n';
  o << "kernel_nxp = " << c.kernel_nxp << '\n';
  o << "kernel_z = " << fmt_double(c.kernel_z.x) << ", " << fmt_double(c.kernel_z.xp) << '\n';
  o << "methods = " << detail::join(c.methods, str) << '\n';
  o << "epsilon = " << (c.epsilon ? fmt_double(*c.epsilon) : std::string("auto")) << '\n';
  o << "thresholds = " << detail::join(c.thresholds, num) << '\n';
  o << "sharp_variant = " << (c.sharp_variant == SharpVariant::AbsIm ? "abs_im" : "minus_im") << '\n';
  o << "mig_sign = " << (c.mig_sign == MigSign::Abs ? "abs" : "neg") << '\n';
  o << "project_range = " << (c.project_range ? "true" : "false") << '\n';
  o << "output = " << c.output << '\n';
  o << "write_pgm = " << (c.write_pgm ? "true" : "false") << '\n';
  return o.str();
}

/// 64-bit FNV-1a of the serialized config, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

inline double config_wavenumber(const ScenarioConfig& c, std::size_t i) { return c.wavenumbers[i] * kPi / c.width; }

inline std::vector<ObstacleBoundary> build_obstacles(const ScenarioConfig& c) {
  std::vector<ObstacleBoundary> out;
  for (const auto& s : c.obstacles) {
    ObstacleOptions o = default_obstacle_options(s);
    if (c.n_boundary) o.n_boundary = *c.n_boundary;
    if (c.n_source) o.n_source = *c.n_source;
    if (c.source_offset) o.source_offset = *c.source_offset;
    if (c.corner_exponent) o.corner_exponent = *c.corner_exponent;
    out.push_back(make_obstacle(s, o));
  }
  return out;
}

inline ArrayGeometry build_array(const ScenarioConfig& c) {
  return make_array(c.x_A, c.width, c.spacing, c.aperture_fraction, c.include_endpoints);
}

/// File name of the response matrix for wavenumber index i.
inline std::string response_file_name(std::size_t i) {
  std::ostringstream o;
  o << "response_" << std::setw(2) << std::setfill('0') << i << ".wgrm";
  return o.str();
}

struct SimulationRecord {
  double k = 0.0;
  std::filesystem::path file;
  SolveReport report;
};

inline std::vector<SimulationRecord> cmd_simulate(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  validate_config(c);
  std::filesystem::create_directories(out_dir);
  const auto obstacles = build_obstacles(c);
  const auto array = build_array(c);
  const std::string hash = config_hash(c);
  SolverOptions so;
  so.residual_tol = c.residual_tol;
  std::vector<SimulationRecord> records;
  std::ostringstream report;
  report << "# config_hash=" << hash << '\n';
  for (std::size_t i = 0; i < c.wavenumbers.size(); ++i) {
    SimulationRecord rec;
    rec.k = config_wavenumber(c, i);
    const ModeSet modes = scattering_mode_set(rec.k, c.width, obstacles, c.x_A);
    if (!array_resolves_modes(array, modes)) {
      report << "warning: " << array.size() << " sensors for " << modes.propagating_count() << " modes\n";
    }
    ResponseMatrix U;
    try {
      U = assemble_response_matrix(obstacles, array, modes, so, &rec.report);
    } catch (const Error& e) {
      fail(e.kind(), "wavenumber " + detail::fmt_double(c.wavenumbers[i]) + " pi/width: " + e.what());
    }
    rec.file = out_dir / response_file_name(i);
    save_response(rec.file, U, hash);
    report << "k=" << detail::fmt_double(rec.k) << " modes=" << modes.propagating_count()
           << " residual=" << detail::fmt_double(rec.report.max_relative_residual)
           << " condition=" << detail::fmt_double(rec.report.condition) << " discarded=" << rec.report.discarded
           << " kept=" << rec.report.kept << (rec.report.near_resonance ? " warning=near_interior_resonance" : "")
           << '\n';
    records.push_back(rec);
  }
  detail::write_atomic(out_dir / "simulate_report.txt", report.str());
  return records;
}

struct ImageSummary {
  std::string method;
  std::filesystem::path file;
  Point argmax;
  std::optional<double> centroid_distance;
  double pslr = 0.0;
  std::vector<std::optional<Point>> mask_centroids;
};

namespace detail {

inline std::string describe(const ImageSummary& s, const std::vector<double>& thresholds) {
  std::ostringstream o;
  o << s.method << " file=" << s.file.filename().string() << " argmax=(" << fmt_double(s.argmax.x) << ", "
    << fmt_double(s.argmax.xp) << ")";
  if (s.centroid_distance) o << " argmax_to_centroid=" << fmt_double(*s.centroid_distance);
  o << " pslr=" << fmt_double(s.pslr);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    o << " mask_centroid@" << thresholds[i] << '=';
    if (s.mask_centroids[i]) o << '(' << fmt_double(s.mask_centroids[i]->x) << ", " << fmt_double(s.mask_centroids[i]->xp) << ')';
    else o << "empty";
  }
  return o.str();
}

}  // namespace detail

/// Images every data file with each configured method; migration images are
/// also combined over frequency when several wavenumbers are given.
inline std::vector<ImageSummary> cmd_image(const ScenarioConfig& c, const std::vector<std::filesystem::path>& data_files,
                                           const std::filesystem::path& out_dir) {
  validate_config(c);
  if (data_files.size() != c.wavenumbers.size()) {
    fail(ErrorKind::DataMismatch, std::to_string(data_files.size()) + " data files for " +
                                      std::to_string(c.wavenumbers.size()) + " wavenumbers");
  }
  std::filesystem::create_directories(out_dir);
  const std::string hash = config_hash(c);
  const double eps = c.epsilon ? *c.epsilon : default_epsilon(c.sigma_pct);
  std::optional<Point> centroid;
  if (!c.obstacles.empty()) centroid = obstacles_centroid(build_obstacles(c));

  std::vector<ImageSummary> out;
  std::map<std::string, std::vector<ImageGrid>> per_method;
  auto emit = [&](const ImageGrid& img, const std::string& stem) {
    ImageSummary s;
    s.method = img.method;
    s.file = out_dir / (stem + ".wgig");
    save_image(s.file, img, hash);
    if (c.write_pgm) save_pgm(out_dir / (stem + ".pgm"), img, hash);
    s.argmax = image_argmax(img);
    if (centroid) s.centroid_distance = distance(s.argmax, *centroid);
    s.pslr = peak_to_sidelobe(img, 0.2 * c.width);
    for (double t : c.thresholds) s.mask_centroids.push_back(mask_centroid(img.grid, threshold_support(img, t)));
    out.push_back(s);
  };

  for (std::size_t i = 0; i < data_files.size(); ++i) {
    const double k = config_wavenumber(c, i);
    ResponseMatrix U = load_response(data_files[i], k);
    if (std::abs(U.array.x_A - c.x_A) > 1e-12 || std::abs(U.array.width - c.width) > 1e-12 ||
        std::abs(U.array.spacing - c.spacing) > 1e-12 * c.spacing) {
      fail(ErrorKind::DataMismatch, data_files[i].string() + ": array metadata differs from the config");
    }
    if (U.noise_sigma_pct != 0.0) fail(ErrorKind::DataMismatch, data_files[i].string() + " already carries noise");
    if (std::abs(U.array.aperture_fraction - c.aperture_fraction) > 1e-12) {
      if (!U.array.full_aperture()) {
        fail(ErrorKind::DataMismatch, data_files[i].string() + ": aperture differs from the config");
      }
      U = restrict_aperture(U, c.aperture_fraction);
    }
    if (c.sigma_pct > 0.0) U = add_noise(U, c.sigma_pct, c.seed + i);

    const ModeSet modes = make_mode_set(k, c.width);
    std::ostringstream stem_suffix;
    stem_suffix << "_k" << std::setw(2) << std::setfill('0') << i;
    const bool needs_modes =
        std::any_of(c.methods.begin(), c.methods.end(), [](const std::string& m) { return m != "mig"; });
    std::optional<SharpOperator> sharp;
    std::optional<Eigen::MatrixXcd> range_proj;
    if (needs_modes) {
      const ProjectedResponse P = project_any_aperture(U, modes);
      sharp = sharpen(build_far_field(P, modes), c.sharp_variant);
      if (c.project_range) range_proj = projector(svd_diagnostics(P).range_basis);
    }
    for (const auto& m : c.methods) {
      ImageGrid img;
      if (m == "factorization") img = factorization_image(*sharp, c.grid, modes, c.x_A, eps);
      else if (m == "mig_sharp") img = migration_sharp_image(*sharp, c.grid, modes, c.x_A, range_proj);
      else img = migration_image(U, c.grid, modes, c.mig_sign);
      emit(img, m + stem_suffix.str());
      per_method[m].push_back(std::move(img));
    }
  }
  if (c.wavenumbers.size() > 1) {
    for (const std::string m : {"mig_sharp", "mig"}) {
      auto it = per_method.find(m);
      if (it == per_method.end()) continue;
      emit(multifrequency_combine(it->second), m + "_multi");
    }
  }

  std::ostringstream summary;
  summary << "# config_hash=" << hash << '\n';
  if (centroid) summary << "obstacle_centroid=(" << detail::fmt_double(centroid->x) << ", " << detail::fmt_double(centroid->xp) << ")\n";
  for (const auto& s : out) summary << detail::describe(s, c.thresholds) << '\n';
  detail::write_atomic(out_dir / "summary.txt", summary.str());
  return out;
}

struct KernelSummary {
  ImageGrid k0;
  ImageGrid k;
  long above_half_k0 = 0;
  long above_half_k = 0;
};

/// |K_0(., z)| and |K(., z)| over the kernel grid, each normalized to max 1.
inline KernelSummary cmd_kernels(const ScenarioConfig& c, const Point& z, const std::filesystem::path& out_dir) {
  validate_config(c);
  const ModeSet modes = make_mode_set(config_wavenumber(c, 0), c.width);
  GridSpec g = c.grid;
  g.nx = c.kernel_nx;
  g.nxp = c.kernel_nxp;
  require(z.x > c.x_A && z.x < 0.0 && z.xp >= 0.0 && z.xp <= c.width, ErrorKind::ConfigError,
          "kernel point must lie inside the imaging region");
  KernelSummary s;
  const Eigen::MatrixXd k0 = detail::evaluate_grid(g, [&](const Point& p) { return std::abs(kernel_K0(p, z, modes)); });
  const Eigen::MatrixXd kk = detail::evaluate_grid(g, [&](const Point& p) { return std::abs(kernel_K(p, z, c.x_A, modes)); });
  s.k0 = normalize_image(g, "kernel_K0", k0);
  s.k = normalize_image(g, "kernel_K", kk);
  s.above_half_k0 = (s.k0.values.array() > 0.5).count();
  s.above_half_k = (s.k.values.array() > 0.5).count();
  std::filesystem::create_directories(out_dir);
  const std::string hash = config_hash(c);
  save_image(out_dir / "kernel_K0.wgig", s.k0, hash);
  save_image(out_dir / "kernel_K.wgig", s.k, hash);
  if (c.write_pgm) {
    save_pgm(out_dir / "kernel_K0.pgm", s.k0, hash);
    save_pgm(out_dir / "kernel_K.pgm", s.k, hash);
  }
  return s;
}

struct CompareReport {
  double correlation = 0.0;
  double argmax_distance = 0.0;
  std::vector<double> jaccard;
};

inline CompareReport compare_images(const ImageGrid& a, const ImageGrid& b, const std::vector<double>& thresholds) {
  if (!(a.grid == b.grid)) fail(ErrorKind::GridMismatch, "images are defined on different grids");
  CompareReport r;
  r.correlation = pearson(a.values, b.values);
  r.argmax_distance = distance(image_argmax(a), image_argmax(b));
  for (double t : thresholds) r.jaccard.push_back(jaccard(threshold_support(a, t), threshold_support(b, t)));
  return r;
}

inline CompareReport cmd_compare(const ScenarioConfig& c, const std::filesystem::path& a, const std::filesystem::path& b) {
  return compare_images(load_image(a), load_image(b), c.thresholds);
}

}  // namespace wgimg
