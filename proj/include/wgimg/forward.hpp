#pragma once
//
// Method-of-fundamental-solutions forward solver. The scattered field is a
// sum of waveguide Green's functions with charges inside the obstacles, so
// the Helmholtz equation, the wall conditions and the radiation condition
// hold exactly; only the Dirichlet condition u_sc = -u_inc on the boundary is
// fitted, by overdetermined least squares.
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgimg/array.hpp"
#include "wgimg/error.hpp"
#include "wgimg/geometry.hpp"
#include "wgimg/parallel.hpp"
#include "wgimg/waveguide.hpp"

namespace wgimg {

struct SolverOptions {
  /// Singular values below truncation * sigma_max are discarded.
  double truncation = 1e-12;
  /// Allowed boundary misfit relative to max |u_inc| on the boundary.
  double residual_tol = 1e-6;
  double cond_limit = 1e14;
  /// Check grid density relative to the collocation grid.
  int check_refinement = 4;
  int kummer_terms = kDefaultKummerTerms;
  /// Fraction of discarded singular values that triggers the resonance warning.
  double resonance_fraction = 0.2;
  /// Throw ResidualTooLarge instead of only reporting it.
  bool strict = true;
};

struct ScatteringSolution {
  Eigen::VectorXcd coefficients;
  /// Max misfit |u_sc + u_inc| over the check grid.
  double residual = 0.0;
  /// residual / max |u_inc| over the check grid.
  double relative_residual = 0.0;
};

/// Smallest range separation between the array and any boundary, check or
/// charge node. A ModeSet built with this min_sep (or smaller) admits every
/// separated Green's function evaluation the solver performs.
inline double required_min_sep(const std::vector<ObstacleBoundary>& obstacles, double x_A, int check_refinement = 4) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& ob : obstacles) {
    for (const auto& p : ob.boundary_nodes()) m = std::min(m, p.x - x_A);
    for (const auto& p : ob.source_nodes()) m = std::min(m, p.x - x_A);
    if (!ob.boundary_nodes().empty()) {
      for (const auto& p : ob.check_nodes(check_refinement)) m = std::min(m, p.x - x_A);
    }
  }
  if (!std::isfinite(m)) return 1.0;
  require(m > 0.0, ErrorKind::GeometryError, "obstacles must lie strictly right of the array");
  return m * (1.0 - 1e-9);
}

/// Mode set for scattering simulations: min_sep from the obstacle geometry.
inline ModeSet scattering_mode_set(double k, double width, const std::vector<ObstacleBoundary>& obstacles,
                                   double x_A, double tol = 1e-12) {
  ModeSetOptions o;
  o.tol = tol;
  o.min_sep = required_min_sep(obstacles, x_A);
  return make_mode_set(k, width, o);
}

namespace detail {

// G(p_i, q_j) with the same-range kernel; rows filled concurrently.
inline Eigen::MatrixXcd near_matrix(const std::vector<Point>& p, const std::vector<Point>& q, const ModeSet& modes,
                                    int n_terms) {
  const KummerTable tab = make_kummer_table(modes, n_terms);
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(q.size()));
  parallel_for(p.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = greens_function_near(p[i], q[j], modes, tab);
    }
  });
  return m;
}

inline Eigen::MatrixXcd far_matrix(const std::vector<Point>& p, const std::vector<Point>& q, const ModeSet& modes) {
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(q.size()));
  parallel_for(p.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = greens_function(p[i], q[j], modes);
    }
  });
  return m;
}

}  // namespace detail

/// Collocation system of a fixed obstacle configuration, factored once and
/// reused for every incident source.
class MfsSolver {
 public:
  MfsSolver(std::vector<ObstacleBoundary> obstacles, ModeSet modes, SolverOptions opts = {})
      : obstacles_(std::move(obstacles)), modes_(std::move(modes)), opts_(opts) {
    require(opts_.check_refinement >= 1, ErrorKind::InvalidArgument, "check_refinement must be >= 1");
    for (const auto& ob : obstacles_) {
      const auto& b = ob.boundary_nodes();
      nodes_.insert(nodes_.end(), b.begin(), b.end());
      const auto& s = ob.source_nodes();
      charges_.insert(charges_.end(), s.begin(), s.end());
      if (!b.empty()) {
        const auto c = ob.check_nodes(opts_.check_refinement);
        checks_.insert(checks_.end(), c.begin(), c.end());
      }
    }
    if (charges_.empty()) return;

    const Eigen::MatrixXcd A = detail::near_matrix(nodes_, charges_, modes_, opts_.kummer_terms);
    check_ = detail::near_matrix(checks_, charges_, modes_, opts_.kummer_terms);

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    require(smax > 0.0, ErrorKind::IllConditioned, "collocation matrix is zero");
    Eigen::Index kept = 0;
    while (kept < s.size() && s(kept) >= opts_.truncation * smax) ++kept;
    kept_ = static_cast<int>(kept);
    discarded_ = static_cast<int>(s.size() - kept);
    condition_ = smax / s(kept - 1);
    if (condition_ > opts_.cond_limit) {
      fail(ErrorKind::IllConditioned, "collocation condition " + std::to_string(condition_) + " exceeds limit");
    }
    near_resonance_ = discarded_ > opts_.resonance_fraction * static_cast<double>(s.size());
    // truncated pseudoinverse V_k S_k^-1 U_k^*
    pinv_ = svd.matrixV().leftCols(kept) * s.head(kept).cwiseInverse().asDiagonal() *
            svd.matrixU().leftCols(kept).adjoint();
  }

  const ModeSet& modes() const { return modes_; }
  const std::vector<ObstacleBoundary>& obstacles() const { return obstacles_; }
  const std::vector<Point>& collocation_nodes() const { return nodes_; }
  const std::vector<Point>& charges() const { return charges_; }
  bool empty() const { return charges_.empty(); }

  /// Number of singular values dropped by the truncation.
  int discarded() const { return discarded_; }
  int kept() const { return kept_; }
  /// sigma_max / smallest kept singular value.
  double condition() const { return condition_; }
  /// Heuristic flag for a nearby interior resonance of the obstacle.
  bool near_resonance() const { return near_resonance_; }

  /// Densities for each column of sources.
  std::vector<ScatteringSolution> solve(const std::vector<Point>& sources) const {
    std::vector<ScatteringSolution> out(sources.size());
    if (empty()) {
      for (auto& s : out) s.coefficients = Eigen::VectorXcd::Zero(0);
      return out;
    }
    const Eigen::MatrixXcd gb = detail::far_matrix(nodes_, sources, modes_);
    const Eigen::MatrixXcd gc = detail::far_matrix(checks_, sources, modes_);
    const Eigen::MatrixXcd coef = -(pinv_ * gb);
    const Eigen::MatrixXcd mis = check_ * coef + gc;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      auto& s = out[i];
      s.coefficients = coef.col(c);
      s.residual = mis.col(c).cwiseAbs().maxCoeff();
      const double scale = gc.col(c).cwiseAbs().maxCoeff();
      s.relative_residual = scale > 0.0 ? s.residual / scale : 0.0;
      if (opts_.strict && s.relative_residual > opts_.residual_tol) {
        fail(ErrorKind::ResidualTooLarge, "source " + std::to_string(i) + ": boundary residual " +
                                              std::to_string(s.relative_residual) + " exceeds " +
                                              std::to_string(opts_.residual_tol));
      }
    }
    return out;
  }

  ScatteringSolution solve(const Point& source) const { return solve(std::vector<Point>{source}).front(); }

  /// sum_m c_m G(p, y_m); p must be range-separated from all charges.
  cplx evaluate(const ScatteringSolution& sol, const Point& p) const {
    cplx u = 0.0;
    for (std::size_t m = 0; m < charges_.size(); ++m) {
      u += sol.coefficients(static_cast<Eigen::Index>(m)) * greens_function(p, charges_[m], modes_);
    }
    return u;
  }

  /// Same as evaluate() but valid close to the obstacle.
  cplx evaluate_near(const ScatteringSolution& sol, const Point& p) const {
    const KummerTable tab = make_kummer_table(modes_, opts_.kummer_terms);
    cplx u = 0.0;
    for (std::size_t m = 0; m < charges_.size(); ++m) {
      u += sol.coefficients(static_cast<Eigen::Index>(m)) * greens_function_near(p, charges_[m], modes_, tab);
    }
    return u;
  }

  /// Matrix G(receiver_r, charge_m) for evaluating many solutions at once.
  Eigen::MatrixXcd receiver_matrix(const std::vector<Point>& receivers) const {
    return detail::far_matrix(receivers, charges_, modes_);
  }

 private:
  std::vector<ObstacleBoundary> obstacles_;
  ModeSet modes_;
  SolverOptions opts_;
  std::vector<Point> nodes_;
  std::vector<Point> charges_;
  std::vector<Point> checks_;
  Eigen::MatrixXcd check_;
  Eigen::MatrixXcd pinv_;
  int kept_ = 0;
  int discarded_ = 0;
  double condition_ = 1.0;
  bool near_resonance_ = false;
};

inline ScatteringSolution solve_scattered(const std::vector<ObstacleBoundary>& obstacles, const Point& source,
                                          const ModeSet& modes, const SolverOptions& opts = {}) {
  return MfsSolver(obstacles, modes, opts).solve(source);
}

inline cplx evaluate_scattered(const ScatteringSolution& sol, const std::vector<ObstacleBoundary>& obstacles,
                               const Point& p, const ModeSet& modes) {
  std::size_t m = 0;
  cplx u = 0.0;
  for (const auto& ob : obstacles) {
    for (const auto& y : ob.source_nodes()) u += sol.coefficients(static_cast<Eigen::Index>(m++)) * greens_function(p, y, modes);
  }
  return u;
}

/// Solver certificate gathered while assembling a response matrix.
struct SolveReport {
  double max_relative_residual = 0.0;
  double condition = 1.0;
  int discarded = 0;
  int kept = 0;
  bool near_resonance = false;
};

/// U[r][s] = u_sc(x_r; source x_s): one solve per source, reused for all receivers.
inline ResponseMatrix assemble_response_matrix(const std::vector<ObstacleBoundary>& obstacles,
                                               const ArrayGeometry& array, const ModeSet& modes,
                                               const SolverOptions& opts = {}, SolveReport* report = nullptr) {
  require(array.size() > 0, ErrorKind::EmptyArray, "array has no sensors");
  validate_obstacles(obstacles, array.width, array.x_A);
  ResponseMatrix out;
  out.array = array;
  out.k = modes.k();
  const auto n = static_cast<Eigen::Index>(array.size());
  out.entries = Eigen::MatrixXcd::Zero(n, n);

  const MfsSolver solver(obstacles, modes, opts);
  if (report) *report = {};
  if (solver.empty()) return out;

  std::vector<Point> sensors;
  for (std::size_t i = 0; i < array.size(); ++i) sensors.push_back(array.sensor(i));
  const auto sols = solver.solve(sensors);
  Eigen::MatrixXcd coef(static_cast<Eigen::Index>(solver.charges().size()), n);
  double worst = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    coef.col(s) = sols[static_cast<std::size_t>(s)].coefficients;
    worst = std::max(worst, sols[static_cast<std::size_t>(s)].relative_residual);
  }
  out.entries = solver.receiver_matrix(sensors) * coef;
  if (report) *report = {worst, solver.condition(), solver.discarded(), solver.kept(), solver.near_resonance()};
  return out;
}

}  // namespace wgimg
