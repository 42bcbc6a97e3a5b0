#include "roughctrl/rough_path.hpp"

#include <cmath>

#include "roughctrl/csv.hpp"

namespace roughctrl {

void RoughPath::validate() const {
  if (dim < 1) throw InvalidInput("RoughPath: dim must be positive");
  if (zeta.rows() != grid.nodes() || zeta.cols() != dim)
    throw InvalidInput("RoughPath: zeta shape must be (nodes, dim)");
  if (static_cast<int>(area.size()) != grid.steps())
    throw InvalidInput("RoughPath: need one area block per interval");
  if (zeta.row(0).norm() != 0.0) throw InvalidInput("RoughPath: zeta must start at zero");
  for (const auto& a : area)
    if (a.rows() != dim || a.cols() != dim) throw InvalidInput("RoughPath: area block shape");
}

Eigen::MatrixXd RoughPath::chen_area(int i, int j) const {
  if (i > j || i < 0 || j >= grid.nodes()) throw InvalidInput("chen_area: need 0 <= i <= j < nodes");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = i; k < j; ++k)
    acc += area[static_cast<std::size_t>(k)] + delta(i, k) * increment(k).transpose();
  return acc;
}

RoughPath RoughPath::restricted(int stride) const {
  RoughPath out;
  out.grid = grid.coarsened(stride);
  out.dim = dim;
  out.alpha = alpha;
  out.zeta.resize(out.grid.nodes(), dim);
  for (int k = 0; k <= out.grid.steps(); ++k) out.zeta.row(k) = zeta.row(k * stride);
  out.area.reserve(static_cast<std::size_t>(out.grid.steps()));
  for (int k = 0; k < out.grid.steps(); ++k) out.area.push_back(chen_area(k * stride, (k + 1) * stride));
  return out;
}

RoughPath RoughPath::scaled(double c) const {
  RoughPath out = *this;
  out.zeta *= c;
  for (auto& a : out.area) a *= c * c;
  return out;
}

RoughNormReport rough_norm(const RoughPath& rp, double a) {
  if (!(a > 0.0)) throw InvalidInput("rough_norm: exponent must be positive");
  RoughNormReport rep;
  rep.alpha = a;
  const int n = rp.grid.steps();
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rp.dim, rp.dim);
    for (int j = i + 1; j <= n; ++j) {
      // Extend the running second-level increment by one interval.
      acc += rp.area[static_cast<std::size_t>(j - 1)] + rp.delta(i, j - 1) * rp.increment(j - 1).transpose();
      const double gap = rp.grid[j] - rp.grid[i];
      rep.first_level = std::max(rep.first_level, rp.delta(i, j).norm() / std::pow(gap, a));
      rep.second_level = std::max(rep.second_level, acc.norm() / std::pow(gap, 2.0 * a));
    }
  }
  rep.total = rep.first_level + rep.second_level;
  return rep;
}

namespace {

/// Exact symmetrisation: keep the antisymmetric part of a raw area block and
/// replace the symmetric part by dzeta dzeta^T / 2, so the geometric identity
/// holds bit-exactly on the stored interval.
Eigen::MatrixXd make_geometric(const Eigen::MatrixXd& raw, const Eigen::VectorXd& dz) {
  const Eigen::MatrixXd anti = 0.5 * (raw - raw.transpose());
  return anti + 0.5 * (dz * dz.transpose());
}

}  // namespace

RoughPath lift_sampled(const Eigen::MatrixXd& fine_samples, const TimeGrid& fine_grid,
                       int refine, double alpha) {
  if (fine_samples.rows() != fine_grid.nodes())
    throw InvalidInput("lift_sampled: sample rows must match the fine grid");
  if (refine < 1 || fine_grid.steps() % refine != 0)
    throw InvalidInput("lift_sampled: refine must divide the fine step count");
  const int d = static_cast<int>(fine_samples.cols());
  RoughPath rp;
  rp.grid = fine_grid.coarsened(refine);
  rp.dim = d;
  rp.alpha = alpha;
  rp.zeta.resize(rp.grid.nodes(), d);
  for (int k = 0; k < rp.grid.nodes(); ++k)
    rp.zeta.row(k) = fine_samples.row(k * refine) - fine_samples.row(0);
  rp.area.reserve(static_cast<std::size_t>(rp.grid.steps()));
  for (int k = 0; k < rp.grid.steps(); ++k) {
    // Iterated integral of the piecewise-linear interpolant across the fine
    // subintervals: each linear piece contributes dz dz^T / 2, plus the Chen
    // cross terms between pieces.
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd from_left = Eigen::VectorXd::Zero(d);
    for (int s = 0; s < refine; ++s) {
      const int f = k * refine + s;
      const Eigen::VectorXd dz = (fine_samples.row(f + 1) - fine_samples.row(f)).transpose();
      raw += 0.5 * (dz * dz.transpose()) + from_left * dz.transpose();
      from_left += dz;
    }
    rp.area.push_back(make_geometric(raw, from_left));
  }
  rp.validate();
  return rp;
}

RoughPath lift_smooth(const TimeGrid& grid, const std::function<Eigen::VectorXd(double)>& path,
                      int refine, double alpha) {
  if (!path) throw InvalidInput("lift_smooth: missing path function");
  if (refine < 1) throw InvalidInput("lift_smooth: refine must be >= 1");
  std::vector<double> fine;
  fine.reserve(static_cast<std::size_t>(grid.steps()) * refine + 1);
  for (int k = 0; k < grid.steps(); ++k)
    for (int s = 0; s < refine; ++s)
      fine.push_back(grid[k] + (grid[k + 1] - grid[k]) * s / refine);
  fine.push_back(grid.horizon());
  TimeGrid fine_grid(std::move(fine));
  Eigen::VectorXd probe = path(0.0);
  Eigen::MatrixXd samples(fine_grid.nodes(), probe.size());
  for (int k = 0; k < fine_grid.nodes(); ++k) samples.row(k) = path(fine_grid[k]).transpose();
  return lift_sampled(samples, fine_grid, refine, alpha);
}

double FbmSampler::covariance(double hurst, double s, double t) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

FbmSampler::FbmSampler(double hurst, const TimeGrid& grid) : hurst_(hurst), grid_(grid) {
  if (!(hurst > 1.0 / 3.0) || hurst > 1.0)
    throw UnsupportedRegularity("FbmSampler: Hurst index must lie in (1/3, 1]");
  const int n = grid.steps();
  if (n > 4096) throw InvalidInput("FbmSampler: dense factorisation limited to 4096 steps");
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double a = grid[i], b = grid[i + 1], c = grid[j], d = grid[j + 1];
      cov(i, j) = covariance(hurst, b, d) - covariance(hurst, b, c) -
                  covariance(hurst, a, d) + covariance(hurst, a, c);
    }
  // Robust factorisation (H = 1 degenerates to rank one).
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) throw Error("FbmSampler: covariance factorisation failed");
  Eigen::VectorXd diag = ldlt.vectorD();
  for (int i = 0; i < n; ++i) diag(i) = diag(i) > 0.0 ? std::sqrt(diag(i)) : 0.0;
  factor_ = ldlt.transpositionsP().transpose() * Eigen::MatrixXd(ldlt.matrixL()) * diag.asDiagonal();
}

Eigen::VectorXd FbmSampler::sample(Rng& rng) const {
  const int n = grid_.steps();
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.normal();
  Eigen::VectorXd inc = factor_ * z;
  Eigen::VectorXd path(n + 1);
  path(0) = 0.0;
  for (int i = 0; i < n; ++i) path(i + 1) = path(i) + inc(i);
  return path;
}

RoughPath lift_fbm(double hurst, int dim, const TimeGrid& grid, Rng& rng, int refine) {
  if (dim < 1) throw InvalidInput("lift_fbm: dim must be positive");
  if (!(hurst > 1.0 / 3.0) || hurst > 1.0)
    throw UnsupportedRegularity("lift_fbm: Hurst index must lie in (1/3, 1]");
  if (dim == 1) {
    // One-dimensional geometric lift: the area is dzeta^2 / 2, no internal
    // refinement required.
    FbmSampler sampler(hurst, grid);
    RoughPath rp;
    rp.grid = grid;
    rp.dim = 1;
    rp.alpha = hurst;
    rp.zeta = sampler.sample(rng);
    rp.area.reserve(static_cast<std::size_t>(grid.steps()));
    for (int k = 0; k < grid.steps(); ++k) {
      const double dz = rp.zeta(k + 1, 0) - rp.zeta(k, 0);
      rp.area.push_back(Eigen::MatrixXd::Constant(1, 1, 0.5 * dz * dz));
    }
    rp.validate();
    return rp;
  }
  if (refine < 1) throw InvalidInput("lift_fbm: refine must be >= 1");
  // Sample every component on an internal grid `refine` times finer and take
  // the piecewise-linear lift. Sub-grid: uniform refinement of each interval.
  std::vector<double> fine;
  fine.reserve(static_cast<std::size_t>(grid.steps()) * refine + 1);
  for (int k = 0; k < grid.steps(); ++k)
    for (int s = 0; s < refine; ++s)
      fine.push_back(grid[k] + (grid[k + 1] - grid[k]) * s / refine);
  fine.push_back(grid.horizon());
  TimeGrid fine_grid(std::move(fine));
  FbmSampler sampler(hurst, fine_grid);
  Eigen::MatrixXd samples(fine_grid.nodes(), dim);
  for (int c = 0; c < dim; ++c) samples.col(c) = sampler.sample(rng);
  RoughPath rp = lift_sampled(samples, fine_grid, refine, hurst);
  return rp;
}

void write_rough_path_csv(const RoughPath& rp, const std::string& path) {
  std::vector<std::string> header{"t"};
  for (int c = 0; c < rp.dim; ++c) header.push_back("zeta_" + std::to_string(c + 1));
  for (int l = 0; l < rp.dim; ++l)
    for (int j = 0; j < rp.dim; ++j)
      header.push_back("area_" + std::to_string(l + 1) + std::to_string(j + 1));
  CsvWriter w(path, header);
  for (int k = 0; k < rp.grid.nodes(); ++k) {
    std::vector<CsvWriter::Cell> row;
    row.emplace_back(rp.grid[k]);
    for (int c = 0; c < rp.dim; ++c) row.emplace_back(rp.zeta(k, c));
    for (int l = 0; l < rp.dim; ++l)
      for (int j = 0; j < rp.dim; ++j)
        row.emplace_back(k < rp.grid.steps() ? rp.area[static_cast<std::size_t>(k)](l, j) : 0.0);
    w.row(row);
  }
}

RoughPath read_rough_path_csv(const std::string& path, double alpha) {
  CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "t")
    throw InvalidInput("read_rough_path_csv: malformed header");
  int d = 0;
  while (1 + d < static_cast<int>(table.header.size()) &&
         table.header[static_cast<std::size_t>(1 + d)].rfind("zeta_", 0) == 0)
    ++d;
  if (d < 1 || static_cast<int>(table.header.size()) != 1 + d + d * d)
    throw InvalidInput("read_rough_path_csv: column count mismatch");
  const int nodes = static_cast<int>(table.rows.size());
  std::vector<double> times(static_cast<std::size_t>(nodes));
  RoughPath rp;
  rp.dim = d;
  rp.alpha = alpha;
  rp.zeta.resize(nodes, d);
  rp.area.reserve(static_cast<std::size_t>(nodes) - 1);
  for (int k = 0; k < nodes; ++k) {
    const auto& row = table.rows[static_cast<std::size_t>(k)];
    times[static_cast<std::size_t>(k)] = std::stod(row.at(0));
    for (int c = 0; c < d; ++c) rp.zeta(k, c) = std::stod(row.at(static_cast<std::size_t>(1 + c)));
    if (k < nodes - 1) {
      Eigen::MatrixXd a(d, d);
      for (int l = 0; l < d; ++l)
        for (int j = 0; j < d; ++j)
          a(l, j) = std::stod(row.at(static_cast<std::size_t>(1 + d + l * d + j)));
      rp.area.push_back(a);
    } else {
      // Parse the trailing zero block to validate the format.
      Eigen::MatrixXd a(d, d);
      for (int l = 0; l < d; ++l)
        for (int j = 0; j < d; ++j)
          a(l, j) = std::stod(row.at(static_cast<std::size_t>(1 + d + l * d + j)));
    }
  }
  rp.grid = TimeGrid(std::move(times));
  rp.validate();
  return rp;
}

}  // namespace roughctrl
