#include "roughctrl/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roughctrl/csv.hpp"

namespace roughctrl {

void ActionGrid::validate() const {
  if (u.size() < 1 || u.size() != du.size()) throw InvalidInput("ActionGrid: shape mismatch");
  for (int j = 0; j + 1 < u.size(); ++j)
    if (!(u(j) < u(j + 1))) throw InvalidInput("ActionGrid: atoms must be strictly increasing");
  for (int j = 0; j < du.size(); ++j)
    if (!(du(j) > 0.0)) throw InvalidInput("ActionGrid: cell widths must be positive");
}

ActionGrid ActionGrid::uniform(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw InvalidInput("ActionGrid::uniform: bad arguments");
  ActionGrid g;
  g.u.resize(count);
  g.du.resize(count);
  for (int j = 0; j < count; ++j) g.u(j) = lo + (hi - lo) * j / (count - 1);
  const double h = (hi - lo) / (count - 1);
  for (int j = 0; j < count; ++j) g.du(j) = (j == 0 || j == count - 1) ? 0.5 * h : h;
  g.validate();
  return g;
}

DiscreteMeasure DiscreteMeasure::uniform(const ActionGrid& grid) {
  DiscreteMeasure m;
  m.p = grid.du / grid.du.sum();  // constant density
  return m;
}

DiscreteMeasure DiscreteMeasure::dirac(const ActionGrid& grid, int atom) {
  if (atom < 0 || atom >= grid.size()) throw InvalidInput("DiscreteMeasure::dirac: atom index");
  DiscreteMeasure m;
  m.p = Eigen::VectorXd::Zero(grid.size());
  m.p(atom) = 1.0;
  return m;
}

DiscreteMeasure DiscreteMeasure::from_weights(Eigen::VectorXd w) {
  for (int j = 0; j < w.size(); ++j)
    if (w(j) < 0.0) throw InvalidInput("DiscreteMeasure: negative weight");
  const double s = w.sum();
  if (!(s > 0.0)) throw InvalidInput("DiscreteMeasure: weights must have positive mass");
  DiscreteMeasure m;
  m.p = w / s;
  return m;
}

bool DiscreteMeasure::is_valid(double tol) const {
  if (p.size() < 1) return false;
  for (int j = 0; j < p.size(); ++j)
    if (p(j) < -tol) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

double entropy(const DiscreteMeasure& m, const ActionGrid& grid) {
  if (m.size() != grid.size()) throw InvalidInput("entropy: size mismatch");
  double h = 0.0;
  for (int j = 0; j < m.size(); ++j)
    if (m.p(j) > 0.0) h -= m.p(j) * std::log(m.p(j) / grid.du(j));
  return h;
}

double kl_divergence(const DiscreteMeasure& m, const DiscreteMeasure& q) {
  if (m.size() != q.size()) throw InvalidInput("kl_divergence: size mismatch");
  double kl = 0.0;
  for (int j = 0; j < m.size(); ++j) {
    if (m.p(j) <= 0.0) continue;
    if (q.p(j) <= 0.0) return std::numeric_limits<double>::infinity();
    kl += m.p(j) * std::log(m.p(j) / q.p(j));
  }
  return kl;
}

namespace {

void check_pair(const ActionGrid& grid, const DiscreteMeasure& a, const DiscreteMeasure& b,
                const char* who) {
  if (a.size() != grid.size() || b.size() != grid.size())
    throw InvalidInput(std::string(who) + ": size mismatch");
  if (!a.is_valid(1e-9) || !b.is_valid(1e-9))
    throw InvalidInput(std::string(who) + ": arguments must be probability weights");
}

}  // namespace

double wasserstein2(const ActionGrid& grid, const DiscreteMeasure& a, const DiscreteMeasure& b) {
  check_pair(grid, a, b, "wasserstein2");
  // Quantile coupling: march through both CDFs and pair mass in order.
  double cost = 0.0;
  int i = 0, j = 0;
  double ra = a.p(0), rb = b.p(0);
  const int J = grid.size();
  while (i < J && j < J) {
    if (ra <= 0.0) {
      if (++i >= J) break;
      ra = a.p(i);
      continue;
    }
    if (rb <= 0.0) {
      if (++j >= J) break;
      rb = b.p(j);
      continue;
    }
    const double m = std::min(ra, rb);
    const double gap = grid.u(i) - grid.u(j);
    cost += m * gap * gap;
    ra -= m;
    rb -= m;
  }
  return std::sqrt(std::max(cost, 0.0));
}

double wasserstein1(const ActionGrid& grid, const DiscreteMeasure& a, const DiscreteMeasure& b) {
  check_pair(grid, a, b, "wasserstein1");
  double dist = 0.0, cum = 0.0;
  for (int j = 0; j + 1 < grid.size(); ++j) {
    cum += a.p(j) - b.p(j);
    dist += std::abs(cum) * (grid.u(j + 1) - grid.u(j));
  }
  return dist;
}

namespace {

/// Concave piecewise-linear function on [-1, 1]: breakpoints xs (increasing,
/// spanning the domain) with values vs.
struct ConcavePwl {
  std::vector<double> xs, vs;

  double eval(double x) const {
    if (x <= xs.front()) return vs.front();
    if (x >= xs.back()) return vs.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return vs[lo] + w * (vs[hi] - vs[lo]);
  }

  double max_value() const { return *std::max_element(vs.begin(), vs.end()); }
};

/// U(f) = max { V(g) : |g - f| <= width, g in [-1, 1] } for concave V.
ConcavePwl dilate(const ConcavePwl& v, double width) {
  const double vmax = v.max_value();
  // Maximiser interval [m1, m2] (concavity makes it contiguous).
  std::size_t first = v.vs.size(), last = 0;
  for (std::size_t i = 0; i < v.vs.size(); ++i)
    if (v.vs[i] == vmax) {
      if (first == v.vs.size()) first = i;
      last = i;
    }
  const double m1 = v.xs[first], m2 = v.xs[last];

  ConcavePwl out;
  const double flat_lo = std::max(-1.0, m1 - width);
  const double flat_hi = std::min(1.0, m2 + width);
  // Rising branch: U(f) = V(f + width) for f < flat_lo.
  if (flat_lo > -1.0) {
    out.xs.push_back(-1.0);
    out.vs.push_back(v.eval(-1.0 + width));
    for (std::size_t i = 0; i < first; ++i) {
      const double f = v.xs[i] - width;
      if (f > -1.0 && f < flat_lo) {
        out.xs.push_back(f);
        out.vs.push_back(v.vs[i]);
      }
    }
  }
  out.xs.push_back(flat_lo);
  out.vs.push_back(vmax);
  if (flat_hi > flat_lo) {
    out.xs.push_back(flat_hi);
    out.vs.push_back(vmax);
  }
  // Falling branch: U(f) = V(f - width) for f > flat_hi.
  if (flat_hi < 1.0) {
    for (std::size_t i = last + 1; i < v.xs.size(); ++i) {
      const double f = v.xs[i] + width;
      if (f > flat_hi && f < 1.0) {
        out.xs.push_back(f);
        out.vs.push_back(v.vs[i]);
      }
    }
    out.xs.push_back(1.0);
    out.vs.push_back(v.eval(1.0 - width));
  }
  return out;
}

void add_linear(ConcavePwl& v, double slope) {
  for (std::size_t i = 0; i < v.xs.size(); ++i) v.vs[i] += slope * v.xs[i];
}

}  // namespace

double fortet_mourier(const ActionGrid& grid, const DiscreteMeasure& a, const DiscreteMeasure& b) {
  check_pair(grid, a, b, "fortet_mourier");
  const int J = grid.size();
  const Eigen::VectorXd c = a.p - b.p;
  // Backward dynamic program over f_J, ..., f_1. V_j(f) is the best objective
  // of the tail given f_j = f; adjacent Lipschitz constraints are sufficient
  // on a sorted one-dimensional grid.
  ConcavePwl v{{-1.0, 1.0}, {-c(J - 1), c(J - 1)}};
  for (int j = J - 2; j >= 0; --j) {
    v = dilate(v, grid.u(j + 1) - grid.u(j));
    add_linear(v, c(j));
  }
  return v.max_value();
}

RelaxedControl RelaxedControl::constant(const TimeGrid& grid, const ActionGrid& actions,
                                        const DiscreteMeasure& m) {
  if (m.size() != actions.size()) throw InvalidInput("RelaxedControl: measure size mismatch");
  RelaxedControl c;
  c.grid = grid;
  c.actions = actions;
  c.gamma.assign(static_cast<std::size_t>(grid.nodes()), m);
  return c;
}

void RelaxedControl::validate() const {
  actions.validate();
  if (static_cast<int>(gamma.size()) != grid.nodes())
    throw InvalidInput("RelaxedControl: need one measure per node");
  for (const auto& m : gamma)
    if (m.size() != actions.size() || !m.is_valid(1e-9))
      throw InvalidInput("RelaxedControl: invalid node measure");
}

HolderCertificate holder_certificate(const RelaxedControl& control, double eps, double bound) {
  if (!(eps > 0.0) || !(bound >= 0.0)) throw InvalidInput("holder_certificate: bad parameters");
  HolderCertificate cert;
  const int n = control.grid.steps();
  auto consider = [&](int i, int j) {
    const double w2 = wasserstein2(control.actions, control.at(i), control.at(j));
    const double cap = bound * std::pow(control.grid[j] - control.grid[i], eps);
    const double ratio = cap > 0.0 ? w2 / cap : (w2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (ratio > cert.worst_ratio) {
      cert.worst_ratio = ratio;
      cert.arg_i = i;
      cert.arg_j = j;
    }
  };
  for (int k = 0; k < n; ++k) consider(k, k + 1);
  for (int stride = 2; stride <= n; stride *= 2)
    for (int k = 0; k + stride <= n; ++k) consider(k, k + stride);
  cert.holds = cert.worst_ratio <= 1.0 + 1e-12;
  return cert;
}

RelaxedControl spike(const RelaxedControl& control, double t0, double beta,
                     const DiscreteMeasure& mu) {
  if (mu.size() != control.actions.size()) throw InvalidInput("spike: measure size mismatch");
  const double horizon = control.grid.horizon();
  const double tol = 1e-12 * std::max(1.0, horizon);
  if (t0 < -tol || beta < 0.0 || t0 + beta > horizon + tol)
    throw InvalidInput("spike: window must lie inside [0, T]");
  RelaxedControl out = control;
  for (int k = 0; k < control.grid.nodes(); ++k) {
    const double t = control.grid[k];
    if (t >= t0 - tol && t < t0 + beta - tol) out.gamma[static_cast<std::size_t>(k)] = mu;
  }
  return out;
}

void write_control_csv(const RelaxedControl& control, const std::string& path) {
  std::vector<std::string> header{"t"};
  for (int j = 0; j < control.actions.size(); ++j) header.push_back("p_" + std::to_string(j + 1));
  CsvWriter w(path, header);
  for (int k = 0; k < control.grid.nodes(); ++k) {
    std::vector<CsvWriter::Cell> row;
    row.emplace_back(control.grid[k]);
    for (int j = 0; j < control.actions.size(); ++j) row.emplace_back(control.at(k).p(j));
    w.row(row);
  }
}

RelaxedControl read_control_csv(const std::string& path, const ActionGrid& actions) {
  const CsvTable table = read_csv(path);
  if (static_cast<int>(table.header.size()) != 1 + actions.size())
    throw InvalidInput("read_control_csv: column count does not match the action grid");
  std::vector<double> times;
  std::vector<DiscreteMeasure> gamma;
  for (const auto& row : table.rows) {
    times.push_back(std::stod(row.at(0)));
    Eigen::VectorXd w(actions.size());
    for (int j = 0; j < actions.size(); ++j)
      w(j) = std::stod(row.at(static_cast<std::size_t>(j) + 1));
    gamma.push_back(DiscreteMeasure::from_weights(w));
  }
  RelaxedControl control;
  control.grid = TimeGrid(std::move(times));
  control.actions = actions;
  control.gamma = std::move(gamma);
  control.validate();
  return control;
}

}  // namespace roughctrl
