#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "roughctrl/grid.hpp"

namespace roughctrl {

/// Two-index increment f_{st} sampled on every grid pair s <= t.
/// Values are flattened to vectors; matrix-valued increments store vec(M).
/// Dense storage, intended for verification at modest grid sizes.
class Increment2 {
 public:
  Increment2() = default;
  Increment2(TimeGrid grid, int dim)
      : grid_(std::move(grid)), dim_(dim),
        values_(static_cast<std::size_t>(grid_.nodes()) * static_cast<std::size_t>(grid_.nodes())) {
    if (dim < 1) throw InvalidInput("Increment2: dim must be positive");
    for (auto& v : values_) v = Eigen::VectorXd::Zero(dim);
  }

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }

  Eigen::VectorXd& at(int i, int j) {
    check(i, j);
    return values_[static_cast<std::size_t>(i) * grid_.nodes() + j];
  }
  const Eigen::VectorXd& at(int i, int j) const {
    check(i, j);
    return values_[static_cast<std::size_t>(i) * grid_.nodes() + j];
  }

 private:
  void check(int i, int j) const {
    if (i < 0 || j < i || j >= grid_.nodes()) throw InvalidInput("Increment2: need 0 <= i <= j < nodes");
  }
  TimeGrid grid_;
  int dim_ = 0;
  std::vector<Eigen::VectorXd> values_;
};

/// Lazy three-index increment h_{sut}, s <= u <= t. Evaluated on demand so
/// delta of a dense Increment2 never materialises O(n^3) storage.
struct Increment3View {
  TimeGrid grid;
  int dim = 0;
  std::function<Eigen::VectorXd(int, int, int)> value;  // (i, u, j) with i <= u <= j
};

struct HolderReport {
  double exponent = 0.0;
  double norm = 0.0;
  int arg_i = 0, arg_u = -1, arg_j = 0;  // arg_u = -1 for two-index increments
};

/// delta f_{st} = f_t - f_s for a path sampled on the grid (rows = nodes).
Increment2 delta1(const Eigen::MatrixXd& path, const TimeGrid& grid);

/// delta h_{sut} = h_{st} - h_{su} - h_{ut} (vanishes on images of delta1).
Increment3View delta2(const Increment2& h);

/// (g h)_{st} = g_s h_{st} for a scalar path g; obeys
/// delta(gh)_{sut} = -delta g_{su} h_{ut} + g_s delta h_{sut}.
Increment2 product_c1_c2(const Eigen::VectorXd& g, const Increment2& h);

/// Hoelder-type seminorm sup_{s<t} |f_{st}| / (t-s)^mu over all grid pairs.
HolderReport holder_norm(const Increment2& f, double mu);

/// Same for a three-index increment over all triples s < u < t.
HolderReport holder_norm(const Increment3View& h, double mu);

/// Hoelder seminorm of a path: sup |f_t - f_s| / (t-s)^mu.
HolderReport path_holder_norm(const Eigen::MatrixXd& path, const TimeGrid& grid, double mu);

/// Compensated Riemann sum of a germ A along the sub-partition of [t_i, t_j]
/// consisting of every stride-th grid node: sum_k A_{t_k t_{k+1}}.
/// The germ is evaluated at grid index pairs.
Eigen::VectorXd sewing_sum(const std::function<Eigen::VectorXd(int, int)>& germ,
                           const TimeGrid& grid, int i, int j, int stride = 1);

}  // namespace roughctrl
