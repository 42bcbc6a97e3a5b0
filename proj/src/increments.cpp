#include "roughctrl/increments.hpp"

#include <cmath>

namespace roughctrl {

Increment2 delta1(const Eigen::MatrixXd& path, const TimeGrid& grid) {
  if (path.rows() != grid.nodes()) throw InvalidInput("delta1: path rows must match grid nodes");
  Increment2 out(grid, static_cast<int>(path.cols()));
  for (int i = 0; i < grid.nodes(); ++i)
    for (int j = i; j < grid.nodes(); ++j) out.at(i, j) = (path.row(j) - path.row(i)).transpose();
  return out;
}

Increment3View delta2(const Increment2& h) {
  Increment3View view;
  view.grid = h.grid();
  view.dim = h.dim();
  // Copy h by value into the closure: the view must outlive its source.
  Increment2 hc = h;
  view.value = [hc](int i, int u, int j) -> Eigen::VectorXd {
    if (i > u || u > j) throw InvalidInput("delta2: need i <= u <= j");
    return hc.at(i, j) - hc.at(i, u) - hc.at(u, j);
  };
  return view;
}

Increment2 product_c1_c2(const Eigen::VectorXd& g, const Increment2& h) {
  if (g.size() != h.grid().nodes()) throw InvalidInput("product_c1_c2: path length mismatch");
  Increment2 out(h.grid(), h.dim());
  for (int i = 0; i < h.grid().nodes(); ++i)
    for (int j = i; j < h.grid().nodes(); ++j) out.at(i, j) = g(i) * h.at(i, j);
  return out;
}

HolderReport holder_norm(const Increment2& f, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("holder_norm: exponent must be positive");
  HolderReport rep;
  rep.exponent = mu;
  const TimeGrid& g = f.grid();
  for (int i = 0; i < g.nodes(); ++i)
    for (int j = i + 1; j < g.nodes(); ++j) {
      const double r = f.at(i, j).norm() / std::pow(g[j] - g[i], mu);
      if (r > rep.norm) {
        rep.norm = r;
        rep.arg_i = i;
        rep.arg_j = j;
      }
    }
  return rep;
}

HolderReport holder_norm(const Increment3View& h, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("holder_norm: exponent must be positive");
  HolderReport rep;
  rep.exponent = mu;
  for (int i = 0; i < h.grid.nodes(); ++i)
    for (int u = i + 1; u < h.grid.nodes(); ++u)
      for (int j = u + 1; j < h.grid.nodes(); ++j) {
        const double r = h.value(i, u, j).norm() / std::pow(h.grid[j] - h.grid[i], mu);
        if (r > rep.norm) {
          rep.norm = r;
          rep.arg_i = i;
          rep.arg_u = u;
          rep.arg_j = j;
        }
      }
  return rep;
}

HolderReport path_holder_norm(const Eigen::MatrixXd& path, const TimeGrid& grid, double mu) {
  return holder_norm(delta1(path, grid), mu);
}

Eigen::VectorXd sewing_sum(const std::function<Eigen::VectorXd(int, int)>& germ,
                           const TimeGrid& grid, int i, int j, int stride) {
  if (i > j || i < 0 || j >= grid.nodes()) throw InvalidInput("sewing_sum: need 0 <= i <= j < nodes");
  if (stride < 1 || (j - i) % stride != 0)
    throw InvalidInput("sewing_sum: stride must divide the index span");
  Eigen::VectorXd acc;
  for (int k = i; k < j; k += stride) {
    Eigen::VectorXd term = germ(k, k + stride);
    if (acc.size() == 0)
      acc = term;
    else
      acc += term;
  }
  if (acc.size() == 0) acc = germ(i, i) * 0.0;  // empty interval: zero of the germ's dimension
  return acc;
}

}  // namespace roughctrl
