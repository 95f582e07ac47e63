#pragma once
//
// Line-oriented text formats for response matrices (WGRM), projected
// responses (WGPM) and image grids (WGIG). Doubles are written with 17
// significant digits, so a save/load round trip is bit-exact.
//

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "wgimg/array.hpp"
#include "wgimg/error.hpp"
#include "wgimg/imaging.hpp"

namespace wgimg {

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  // from_chars rejects a leading '+', which %.17g never writes
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) fail(ErrorKind::MalformedFile, "cannot parse " + what + " '" + std::string(s) + "'");
  if (!std::isfinite(v)) fail(ErrorKind::MalformedFile, "non-finite " + what);
  return v;
}

inline long long parse_int(std::string_view s, const std::string& what) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) fail(ErrorKind::MalformedFile, "cannot parse " + what + " '" + std::string(s) + "'");
  return v;
}

inline std::string fmt_seed(const std::optional<std::uint64_t>& seed) {
  return seed ? std::to_string(*seed) : std::string("none");
}

inline std::optional<std::uint64_t> parse_seed(std::string_view s) {
  if (s == "none") return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorKind::MalformedFile, "bad seed '" + std::string(s) + "'");
  return v;
}

/// Writes through a temporary file in the same directory and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) fail(ErrorKind::IoError, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::IoError, "cannot move " + tmp.string() + " to " + path.string());
  }
}

// Lines of a file, comment lines ('#') excluded except for the config hash.
struct TextFile {
  std::vector<std::string> lines;
  std::string config_hash;
};

inline TextFile read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  TextFile f;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') {
      constexpr std::string_view key = "# config_hash=";
      if (line.starts_with(key)) f.config_hash = line.substr(key.size());
      continue;
    }
    if (line.empty()) continue;
    f.lines.push_back(line);
  }
  return f;
}

inline std::map<std::string, std::string> parse_header(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::MalformedFile, "bad header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline const std::string& header_value(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) fail(ErrorKind::MalformedFile, "header lacks '" + key + "'");
  return it->second;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void write_complex_rows(std::ostringstream& out, const Eigen::MatrixXcd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << fmt_double(m(r, c).real()) << ':' << fmt_double(m(r, c).imag());
    }
    out << '\n';
  }
}

inline Eigen::MatrixXcd read_complex_rows(const TextFile& f, std::size_t first, Eigen::Index n) {
  if (f.lines.size() != first + static_cast<std::size_t>(n)) {
    fail(ErrorKind::MalformedFile, "expected " + std::to_string(n) + " data rows, found " +
                                       std::to_string(f.lines.size() - std::min(f.lines.size(), first)));
  }
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto cells = split(f.lines[first + static_cast<std::size_t>(r)], ',');
    if (static_cast<Eigen::Index>(cells.size()) != n) {
      fail(ErrorKind::MalformedFile, "row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                                         " entries, expected " + std::to_string(n));
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto parts = split(cells[static_cast<std::size_t>(c)], ':');
      if (parts.size() != 2) fail(ErrorKind::MalformedFile, "entry is not re:im");
      m(r, c) = cplx(parse_double(parts[0], "real part"), parse_double(parts[1], "imaginary part"));
    }
  }
  return m;
}

inline std::string comment_line(const std::string& config_hash) {
  return config_hash.empty() ? std::string() : "# config_hash=" + config_hash + "\n";
}

inline void expect_magic(const TextFile& f, std::string_view magic) {
  if (f.lines.empty() || f.lines[0] != magic) fail(ErrorKind::MalformedFile, "missing '" + std::string(magic) + "' header");
  if (f.lines.size() < 2) fail(ErrorKind::MalformedFile, "missing metadata line");
}

}  // namespace detail

inline std::string serialize_response(const ResponseMatrix& U, const std::string& config_hash = "") {
  std::ostringstream out;
  const auto& a = U.array;
  out << "WGRM v1\n";
  out << "k=" << detail::fmt_double(U.k) << " width=" << detail::fmt_double(a.width) << " xA=" << detail::fmt_double(a.x_A)
      << " nA=" << a.size() << " spacing=" << detail::fmt_double(a.spacing)
      << " aperture=" << detail::fmt_double(a.aperture_fraction) << " sigma_pct=" << detail::fmt_double(U.noise_sigma_pct)
      << " seed=" << detail::fmt_seed(U.seed) << " endpoints=" << (a.include_endpoints ? 1 : 0) << '\n';
  out << detail::comment_line(config_hash);
  detail::write_complex_rows(out, U.entries);
  return out.str();
}

inline void save_response(const std::filesystem::path& path, const ResponseMatrix& U, const std::string& config_hash = "") {
  detail::write_atomic(path, serialize_response(U, config_hash));
}

/// Loads a WGRM file; with `expected_k`, a different header wavenumber is a DataMismatch.
inline ResponseMatrix load_response(const std::filesystem::path& path, std::optional<double> expected_k = {}) {
  const auto f = detail::read_text(path);
  detail::expect_magic(f, "WGRM v1");
  const auto kv = detail::parse_header(f.lines[1]);
  ResponseMatrix U;
  U.k = detail::parse_double(detail::header_value(kv, "k"), "k");
  const double width = detail::parse_double(detail::header_value(kv, "width"), "width");
  const double x_A = detail::parse_double(detail::header_value(kv, "xA"), "xA");
  const long long n = detail::parse_int(detail::header_value(kv, "nA"), "nA");
  const double spacing = detail::parse_double(detail::header_value(kv, "spacing"), "spacing");
  const double aperture = detail::parse_double(detail::header_value(kv, "aperture"), "aperture");
  U.noise_sigma_pct = detail::parse_double(detail::header_value(kv, "sigma_pct"), "sigma_pct");
  U.seed = detail::parse_seed(detail::header_value(kv, "seed"));
  const bool endpoints = kv.count("endpoints") ? detail::parse_int(kv.at("endpoints"), "endpoints") != 0 : true;
  if (expected_k && std::abs(*expected_k - U.k) > 1e-12 * std::abs(*expected_k)) {
    fail(ErrorKind::DataMismatch, path.string() + " holds k=" + detail::fmt_double(U.k) + ", expected " +
                                      detail::fmt_double(*expected_k));
  }
  try {
    U.array = make_array(x_A, width, spacing, aperture, endpoints);
  } catch (const Error& e) {
    fail(ErrorKind::MalformedFile, std::string("invalid array metadata: ") + e.what());
  }
  if (static_cast<long long>(U.array.size()) != n) {
    fail(ErrorKind::MalformedFile, "nA=" + std::to_string(n) + " does not match the array metadata (" +
                                       std::to_string(U.array.size()) + " sensors)");
  }
  U.entries = detail::read_complex_rows(f, 2, static_cast<Eigen::Index>(n));
  return U;
}

inline std::string serialize_projected(const ProjectedResponse& P, const std::string& config_hash = "") {
  std::ostringstream out;
  out << "WGPM v1\n";
  out << "k=" << detail::fmt_double(P.k) << " width=" << detail::fmt_double(P.width) << " xA=" << detail::fmt_double(P.x_A)
      << " J=" << P.J << " spacing=" << detail::fmt_double(P.spacing) << " aperture=" << detail::fmt_double(P.aperture_fraction)
      << " sigma_pct=" << detail::fmt_double(P.noise_sigma_pct) << " seed=" << detail::fmt_seed(P.seed) << '\n';
  out << detail::comment_line(config_hash);
  detail::write_complex_rows(out, P.entries);
  return out.str();
}

inline void save_projected(const std::filesystem::path& path, const ProjectedResponse& P,
                           const std::string& config_hash = "") {
  detail::write_atomic(path, serialize_projected(P, config_hash));
}

inline ProjectedResponse load_projected(const std::filesystem::path& path, std::optional<double> expected_k = {}) {
  const auto f = detail::read_text(path);
  detail::expect_magic(f, "WGPM v1");
  const auto kv = detail::parse_header(f.lines[1]);
  ProjectedResponse P;
  P.k = detail::parse_double(detail::header_value(kv, "k"), "k");
  P.width = detail::parse_double(detail::header_value(kv, "width"), "width");
  P.x_A = detail::parse_double(detail::header_value(kv, "xA"), "xA");
  const long long J = detail::parse_int(detail::header_value(kv, "J"), "J");
  if (J < 0) fail(ErrorKind::MalformedFile, "negative J");
  P.J = static_cast<int>(J);
  P.spacing = detail::parse_double(detail::header_value(kv, "spacing"), "spacing");
  P.aperture_fraction = detail::parse_double(detail::header_value(kv, "aperture"), "aperture");
  P.noise_sigma_pct = detail::parse_double(detail::header_value(kv, "sigma_pct"), "sigma_pct");
  P.seed = detail::parse_seed(detail::header_value(kv, "seed"));
  if (expected_k && std::abs(*expected_k - P.k) > 1e-12 * std::abs(*expected_k)) {
    fail(ErrorKind::DataMismatch, path.string() + " holds k=" + detail::fmt_double(P.k) + ", expected " +
                                      detail::fmt_double(*expected_k));
  }
  P.entries = detail::read_complex_rows(f, 2, static_cast<Eigen::Index>(J + 1));
  return P;
}

inline std::string serialize_image(const ImageGrid& img, const std::string& config_hash = "") {
  std::ostringstream out;
  const auto& g = img.grid;
  out << "WGIG v1\n";
  out << "method=" << img.method << " x0=" << detail::fmt_double(g.x0) << " x1=" << detail::fmt_double(g.x1)
      << " nx=" << g.nx << " xp0=" << detail::fmt_double(g.xp0) << " xp1=" << detail::fmt_double(g.xp1)
      << " nxp=" << g.nxp << " norm=" << detail::fmt_double(img.norm) << " degenerate=" << (img.degenerate ? 1 : 0)
      << '\n';
  out << detail::comment_line(config_hash);
  // one line per cross-range index, range index varying along the line
  for (Eigen::Index r = 0; r < img.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.values.cols(); ++c) {
      if (c) out << ',';
      out << detail::fmt_double(img.values(r, c));
    }
    out << '\n';
  }
  return out.str();
}

inline void save_image(const std::filesystem::path& path, const ImageGrid& img, const std::string& config_hash = "") {
  detail::write_atomic(path, serialize_image(img, config_hash));
}

inline ImageGrid load_image(const std::filesystem::path& path) {
  const auto f = detail::read_text(path);
  detail::expect_magic(f, "WGIG v1");
  const auto kv = detail::parse_header(f.lines[1]);
  ImageGrid img;
  img.method = detail::header_value(kv, "method");
  auto& g = img.grid;
  g.x0 = detail::parse_double(detail::header_value(kv, "x0"), "x0");
  g.x1 = detail::parse_double(detail::header_value(kv, "x1"), "x1");
  g.xp0 = detail::parse_double(detail::header_value(kv, "xp0"), "xp0");
  g.xp1 = detail::parse_double(detail::header_value(kv, "xp1"), "xp1");
  const long long nx = detail::parse_int(detail::header_value(kv, "nx"), "nx");
  const long long nxp = detail::parse_int(detail::header_value(kv, "nxp"), "nxp");
  if (nx < 1 || nxp < 1) fail(ErrorKind::MalformedFile, "grid counts must be positive");
  g.nx = static_cast<int>(nx);
  g.nxp = static_cast<int>(nxp);
  img.norm = detail::parse_double(detail::header_value(kv, "norm"), "norm");
  img.degenerate = detail::parse_int(detail::header_value(kv, "degenerate"), "degenerate") != 0;
  if (f.lines.size() != 2 + static_cast<std::size_t>(nxp)) {
    fail(ErrorKind::MalformedFile, "expected " + std::to_string(nxp) + " image rows");
  }
  img.values.resize(nxp, nx);
  for (long long r = 0; r < nxp; ++r) {
    const auto cells = detail::split(f.lines[2 + static_cast<std::size_t>(r)], ',');
    if (static_cast<long long>(cells.size()) != nx) fail(ErrorKind::MalformedFile, "image row has wrong length");
    for (long long c = 0; c < nx; ++c) img.values(r, c) = detail::parse_double(cells[static_cast<std::size_t>(c)], "value");
  }
  img.raw = img.values * img.norm;
  return img;
}

/// 8-bit plain PGM, values min-max scaled; the top row is the largest cross-range.
inline std::string serialize_pgm(const ImageGrid& img, const std::string& config_hash = "") {
  std::ostringstream out;
  const auto& v = img.values;
  const double lo = v.size() ? v.minCoeff() : 0.0;
  const double hi = v.size() ? v.maxCoeff() : 0.0;
  out << "P2\n" << detail::comment_line(config_hash) << v.cols() << ' ' << v.rows() << "\n255\n";
  for (Eigen::Index r = v.rows() - 1; r >= 0; --r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      const double s = hi > lo ? (v(r, c) - lo) / (hi - lo) : 0.0;
      if (c) out << ' ';
      out << static_cast<int>(std::lround(255.0 * s));
    }
    out << '\n';
  }
  return out.str();
}

inline void save_pgm(const std::filesystem::path& path, const ImageGrid& img, const std::string& config_hash = "") {
  detail::write_atomic(path, serialize_pgm(img, config_hash));
}

}  // namespace wgimg
