#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "roughctrl/errors.hpp"

namespace roughctrl {

/// Strictly increasing partition 0 = t_0 < t_1 < ... < t_n = T of [0,T].
/// All paths, controls and integrators in the library live on a shared grid;
/// refinement studies restrict a fine grid by an integer stride.
class TimeGrid {
 public:
  TimeGrid() = default;

  explicit TimeGrid(std::vector<double> times) : t_(std::move(times)) {
    if (t_.size() < 2) throw InvalidInput("TimeGrid needs at least two nodes");
    if (t_.front() != 0.0) throw InvalidInput("TimeGrid must start at 0");
    for (std::size_t k = 0; k + 1 < t_.size(); ++k)
      if (!(t_[k] < t_[k + 1])) throw InvalidInput("TimeGrid must be strictly increasing");
  }

  static TimeGrid uniform(double horizon, int steps) {
    if (steps < 1 || !(horizon > 0.0)) throw InvalidInput("TimeGrid::uniform: bad arguments");
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = horizon * k / steps;
    t.front() = 0.0;
    t.back() = horizon;
    return TimeGrid(std::move(t));
  }

  int steps() const { return static_cast<int>(t_.size()) - 1; }
  int nodes() const { return static_cast<int>(t_.size()); }
  double horizon() const { return t_.back(); }
  double operator[](int i) const { return t_[static_cast<std::size_t>(i)]; }
  double dt(int k) const { return t_[static_cast<std::size_t>(k) + 1] - t_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& times() const { return t_; }

  double mesh() const {
    double m = 0.0;
    for (int k = 0; k < steps(); ++k) m = std::max(m, dt(k));
    return m;
  }

  /// Keep every stride-th node (stride must divide the step count).
  TimeGrid coarsened(int stride) const {
    if (stride < 1 || steps() % stride != 0)
      throw InvalidInput("TimeGrid::coarsened: stride must divide the step count");
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(steps() / stride) + 1);
    for (int k = 0; k <= steps(); k += stride) t.push_back(t_[static_cast<std::size_t>(k)]);
    return TimeGrid(std::move(t));
  }

  /// Largest node index i with t_i <= time (+ small slack for rounding).
  int floor_index(double time) const {
    if (time < -1e-12 || time > horizon() + 1e-12)
      throw InvalidInput("TimeGrid::floor_index: time outside [0,T]");
    const double slack = 1e-12 * std::max(1.0, horizon());
    int lo = 0;
    for (int k = nodes() - 1; k >= 0; --k)
      if (t_[static_cast<std::size_t>(k)] <= time + slack) {
        lo = k;
        break;
      }
    return lo;
  }

  bool same_nodes(const TimeGrid& other, double tol = 1e-12) const {
    if (other.nodes() != nodes()) return false;
    for (int k = 0; k < nodes(); ++k)
      if (std::abs(other[k] - (*this)[k]) > tol) return false;
    return true;
  }

 private:
  std::vector<double> t_;
};

}  // namespace roughctrl
