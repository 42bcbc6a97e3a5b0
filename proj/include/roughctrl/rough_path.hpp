#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "roughctrl/grid.hpp"
#include "roughctrl/increments.hpp"
#include "roughctrl/rng.hpp"

namespace roughctrl {

/// Geometric rough path on a grid: first level zeta (zeta_0 = 0) plus the
/// second-level iterated integrals stored per *adjacent* interval only.
/// area[k](l, j) approximates int_{t_k}^{t_{k+1}} (zeta^l_r - zeta^l_{t_k}) dzeta^j_r.
/// Values over arbitrary pairs are reconstructed with chen_area, which makes
/// the Chen relation hold by construction. Every stored interval satisfies
/// the geometric identity area + area^T = dzeta dzeta^T exactly.
struct RoughPath {
  TimeGrid grid;
  int dim = 0;        // driver dimension d
  double alpha = 0.0; // nominal Hoelder exponent (reporting and rate formulas)
  Eigen::MatrixXd zeta;              // (n+1) x d, first row zero
  std::vector<Eigen::MatrixXd> area; // n entries, d x d

  Eigen::VectorXd increment(int k) const { return (zeta.row(k + 1) - zeta.row(k)).transpose(); }
  Eigen::VectorXd delta(int i, int j) const { return (zeta.row(j) - zeta.row(i)).transpose(); }

  /// Second-level increment over [t_i, t_j] via Chen reconstruction:
  /// A_{it} extends by A_{i,t+1} = A_{it} + area[t] + delta_{it} (x) delta_{t,t+1}.
  Eigen::MatrixXd chen_area(int i, int j) const;

  /// Restrict to every stride-th node; coarse areas are Chen-combined from the
  /// fine ones, so the restriction is exact (no re-approximation).
  RoughPath restricted(int stride) const;

  /// Dilation zeta -> c zeta, area -> c^2 area (preserves geometry and Chen).
  RoughPath scaled(double c) const;

  void validate() const;  // dimensions, zeta_0 = 0
};

/// N(zeta; C^a) + N(zeta^2; C^{2a}) with all second-level pairs reconstructed
/// through chen_area (O(n^2) scan).
struct RoughNormReport {
  double alpha = 0.0;
  double first_level = 0.0;   // sup |dzeta_st| / (t-s)^a
  double second_level = 0.0;  // sup |zeta2_st| / (t-s)^{2a}
  double total = 0.0;
};
RoughNormReport rough_norm(const RoughPath& rp, double a);

/// Lift of a sampled path: the coarse grid keeps every refine-th node of the
/// fine grid, and each coarse-interval area is the iterated integral of the
/// piecewise-linear interpolant through the fine samples. Samples are
/// translated so the path starts at zero.
RoughPath lift_sampled(const Eigen::MatrixXd& fine_samples, const TimeGrid& fine_grid,
                       int refine, double alpha);

/// Convenience lift of a smooth function t -> zeta_t: samples on an internal
/// grid with `refine` subdivisions per interval, then calls lift_sampled.
RoughPath lift_smooth(const TimeGrid& grid, const std::function<Eigen::VectorXd(double)>& path,
                      int refine, double alpha = 1.0);

/// Exact-covariance fractional Brownian motion sampler on a uniform grid.
/// Builds the dense increment covariance from
///   R(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2
/// and factorises it once (robust LDLT); each draw is one triangular product.
/// Dense factorisation is limited to grids with at most 4096 steps.
class FbmSampler {
 public:
  FbmSampler(double hurst, const TimeGrid& grid);
  /// One path (nodes() values, starts at zero).
  Eigen::VectorXd sample(Rng& rng) const;
  double hurst() const { return hurst_; }
  const TimeGrid& grid() const { return grid_; }
  /// Exact covariance of node values, for verification.
  static double covariance(double hurst, double s, double t);

 private:
  double hurst_;
  TimeGrid grid_;
  Eigen::MatrixXd factor_;  // increments = factor_ * z, z standard normal
};

/// fBm lift with Hurst index H in (1/3, 1]. Components are independent.
/// For d = 1 the Levy area is determined by geometry (diagonal = dzeta^2/2)
/// and the path is sampled on the main grid directly. For d >= 2 the path is
/// sampled on an internal grid `refine` times finer (default 8) and the area
/// comes from the piecewise-linear lift; the symmetric part is exact by
/// construction, only the antisymmetric part is approximated.
RoughPath lift_fbm(double hurst, int dim, const TimeGrid& grid, Rng& rng, int refine = 8);

/// CSV round trip: header `t, zeta_1..zeta_d, area_11..area_dd`; row k holds
/// the area of the interval [t_k, t_{k+1}] (last row zeros).
void write_rough_path_csv(const RoughPath& rp, const std::string& path);
RoughPath read_rough_path_csv(const std::string& path, double alpha);

}  // namespace roughctrl
