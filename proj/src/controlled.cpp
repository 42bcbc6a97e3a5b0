#include "roughctrl/controlled.hpp"

#include <cmath>

#include "roughctrl/csv.hpp"

namespace roughctrl {

Eigen::VectorXd ControlledPath::zeta2_apply(int k, const Eigen::MatrixXd& area_block) const {
  const int d = driver_dim;
  const Eigen::MatrixXd& coeff = z_zeta2[static_cast<std::size_t>(k)];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  for (int c = 0; c < dim; ++c)
    for (int l = 0; l < d; ++l)
      for (int j = 0; j < d; ++j) out(c) += coeff(c, l + d * j) * area_block(l, j);
  return out;
}

void ControlledPath::validate() const {
  if (dim < 1 || driver_dim < 1) throw InvalidInput("ControlledPath: dimensions must be positive");
  if (z.rows() != grid.nodes() || z.cols() != dim) throw InvalidInput("ControlledPath: z shape");
  if (static_cast<int>(z_zeta.size()) != grid.nodes())
    throw InvalidInput("ControlledPath: z_zeta must hold one block per node");
  for (const auto& b : z_zeta)
    if (b.rows() != dim || b.cols() != driver_dim) throw InvalidInput("ControlledPath: z_zeta shape");
  if (has_zeta2()) {
    if (static_cast<int>(z_zeta2.size()) != grid.nodes())
      throw InvalidInput("ControlledPath: z_zeta2 must hold one block per node");
    for (const auto& b : z_zeta2)
      if (b.rows() != dim || b.cols() != driver_dim * driver_dim)
        throw InvalidInput("ControlledPath: z_zeta2 shape");
  }
  if (has_tau() && (z_tau.rows() != grid.nodes() || z_tau.cols() != dim))
    throw InvalidInput("ControlledPath: z_tau shape");
}

namespace {

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* who) {
  if (!a.same_nodes(b)) throw InvalidInput(std::string(who) + ": grids must coincide");
}

}  // namespace

ControlledNorm controlled_norm(const ControlledPath& z, const RoughPath& rp, double kappa) {
  require_same_grid(z.grid, rp.grid, "controlled_norm");
  if (!(kappa > 0.0)) throw InvalidInput("controlled_norm: kappa must be positive");
  ControlledNorm out;
  const int nodes = z.grid.nodes();
  Eigen::MatrixXd zeta_flat(nodes, z.dim * z.driver_dim);
  for (int k = 0; k < nodes; ++k) {
    out.value_sup = std::max(out.value_sup, z.z.row(k).norm());
    const Eigen::MatrixXd& b = z.z_zeta[static_cast<std::size_t>(k)];
    out.zeta_sup = std::max(out.zeta_sup, b.norm());
    zeta_flat.row(k) = Eigen::Map<const Eigen::RowVectorXd>(b.data(), b.size());
  }
  out.value_holder = path_holder_norm(z.z, z.grid, kappa).norm;
  out.zeta_holder = path_holder_norm(zeta_flat, z.grid, kappa).norm;
  for (int i = 0; i < nodes; ++i)
    for (int j = i + 1; j < nodes; ++j) {
      const Eigen::VectorXd rho = (z.z.row(j) - z.z.row(i)).transpose() -
                                  z.z_zeta[static_cast<std::size_t>(i)] * rp.delta(i, j);
      out.remainder =
          std::max(out.remainder, rho.norm() / std::pow(z.grid[j] - z.grid[i], 2.0 * kappa));
    }
  return out;
}

HolderReport full_remainder_norm(const ControlledPath& z, const RoughPath& rp, double mu) {
  require_same_grid(z.grid, rp.grid, "full_remainder_norm");
  if (!z.has_zeta2()) throw InvalidInput("full_remainder_norm: needs second-level coefficients");
  HolderReport rep;
  rep.exponent = mu;
  const int n = z.grid.steps();
  for (int i = 0; i <= n; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rp.dim, rp.dim);
    for (int j = i + 1; j <= n; ++j) {
      acc += rp.area[static_cast<std::size_t>(j - 1)] + rp.delta(i, j - 1) * rp.increment(j - 1).transpose();
      Eigen::VectorXd rem = (z.z.row(j) - z.z.row(i)).transpose() -
                            z.z_zeta[static_cast<std::size_t>(i)] * rp.delta(i, j) -
                            z.zeta2_apply(i, acc);
      if (z.has_tau()) rem -= z.z_tau.row(i).transpose() * (z.grid[j] - z.grid[i]);
      const double r = rem.norm() / std::pow(z.grid[j] - z.grid[i], mu);
      if (r > rep.norm) {
        rep.norm = r;
        rep.arg_i = i;
        rep.arg_j = j;
      }
    }
  }
  return rep;
}

ControlledPath compose_smooth(const SmoothMap& map, const ControlledPath& z, const RoughPath& rp) {
  if (!map.value || !map.jacobian) throw InvalidInput("compose_smooth: missing callbacks");
  require_same_grid(z.grid, rp.grid, "compose_smooth");
  ControlledPath out;
  out.grid = z.grid;
  out.driver_dim = z.driver_dim;
  out.kappa = z.kappa;
  const Eigen::VectorXd probe = map.value(z.grid[0], z.z.row(0).transpose());
  out.dim = static_cast<int>(probe.size());
  out.z.resize(z.grid.nodes(), out.dim);
  out.z_zeta.reserve(static_cast<std::size_t>(z.grid.nodes()));
  for (int k = 0; k < z.grid.nodes(); ++k) {
    const Eigen::VectorXd zk = z.z.row(k).transpose();
    out.z.row(k) = map.value(z.grid[k], zk).transpose();
    out.z_zeta.push_back(map.jacobian(z.grid[k], zk) * z.z_zeta[static_cast<std::size_t>(k)]);
  }
  out.validate();
  return out;
}

ControlledPath rough_integral_mixed(const ControlledPath& mu, const Eigen::VectorXd& eta,
                                    const RoughPath& rp) {
  require_same_grid(mu.grid, rp.grid, "rough_integral_mixed");
  if (mu.dim != rp.dim) throw InvalidInput("rough_integral_mixed: integrand must be R^d-valued");
  if (eta.size() != 0 && eta.size() != mu.grid.nodes())
    throw InvalidInput("rough_integral_mixed: eta length mismatch");
  const int d = rp.dim;
  const int nodes = mu.grid.nodes();
  ControlledPath out;
  out.grid = mu.grid;
  out.dim = 1;
  out.driver_dim = d;
  out.kappa = mu.kappa;
  out.z.setZero(nodes, 1);
  out.z_zeta.assign(static_cast<std::size_t>(nodes), Eigen::MatrixXd::Zero(1, d));
  out.z_zeta2.assign(static_cast<std::size_t>(nodes), Eigen::MatrixXd::Zero(1, d * d));
  out.z_tau.setZero(nodes, 1);
  double acc = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const Eigen::VectorXd mu_k = mu.z.row(k).transpose();
    const Eigen::MatrixXd& dmu = mu.z_zeta[static_cast<std::size_t>(k)];  // d x d, (i, i1)
    out.z(k, 0) = acc;
    out.z_zeta[static_cast<std::size_t>(k)] = mu_k.transpose();
    // Coefficient of zeta^{2;l j} in the local model is mu^{zeta; j l}.
    for (int l = 0; l < d; ++l)
      for (int j = 0; j < d; ++j) out.z_zeta2[static_cast<std::size_t>(k)](0, l + d * j) = dmu(j, l);
    out.z_tau(k, 0) = eta.size() ? eta(k) : 0.0;
    if (k == nodes - 1) break;
    const Eigen::VectorXd dz = rp.increment(k);
    const Eigen::MatrixXd& a = rp.area[static_cast<std::size_t>(k)];
    double step = mu_k.dot(dz) + out.z_tau(k, 0) * mu.grid.dt(k);
    for (int i = 0; i < d; ++i)
      for (int i1 = 0; i1 < d; ++i1) step += dmu(i, i1) * a(i1, i);
    acc += step;
  }
  out.validate();
  return out;
}

ControlledPath rough_integral_pair(const ControlledPath& mu, const ControlledPath& nu,
                                   const Eigen::MatrixXd& eta, const RoughPath& rp) {
  require_same_grid(mu.grid, rp.grid, "rough_integral_pair");
  require_same_grid(nu.grid, rp.grid, "rough_integral_pair");
  if (!nu.has_zeta2()) throw InvalidInput("rough_integral_pair: nu must be strongly controlled");
  const int d = rp.dim;
  const int m = mu.dim, q = nu.dim;
  if (eta.rows() != 0 && (eta.rows() != mu.grid.nodes() || eta.cols() != m * q))
    throw InvalidInput("rough_integral_pair: eta shape mismatch");
  const int nodes = mu.grid.nodes();
  ControlledPath out;
  out.grid = mu.grid;
  out.dim = m * q;
  out.driver_dim = d;
  out.kappa = std::min(mu.kappa, nu.kappa);
  out.z.setZero(nodes, out.dim);
  out.z_zeta.assign(static_cast<std::size_t>(nodes), Eigen::MatrixXd::Zero(out.dim, d));
  out.z_zeta2.assign(static_cast<std::size_t>(nodes), Eigen::MatrixXd::Zero(out.dim, d * d));
  out.z_tau.setZero(nodes, out.dim);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(out.dim);
  for (int k = 0; k < nodes; ++k) {
    const Eigen::VectorXd mu_k = mu.z.row(k).transpose();
    const Eigen::MatrixXd& dmu = mu.z_zeta[static_cast<std::size_t>(k)];       // m x d
    const Eigen::MatrixXd& dnu = nu.z_zeta[static_cast<std::size_t>(k)];       // q x d
    const Eigen::MatrixXd& nu2 = nu.z_zeta2[static_cast<std::size_t>(k)];      // q x d^2
    out.z.row(k) = acc.transpose();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < q; ++j) {
        const int c = i * q + j;
        for (int i1 = 0; i1 < d; ++i1)
          out.z_zeta[static_cast<std::size_t>(k)](c, i1) = mu_k(i) * dnu(j, i1);
        for (int l = 0; l < d; ++l)
          for (int jp = 0; jp < d; ++jp)
            out.z_zeta2[static_cast<std::size_t>(k)](c, l + d * jp) =
                mu_k(i) * nu2(j, l + d * jp) + dmu(i, jp) * dnu(j, l);
        double tau = eta.rows() ? eta(k, c) : 0.0;
        if (nu.has_tau()) tau += mu_k(i) * nu.z_tau(k, j);
        out.z_tau(k, c) = tau;
      }
    if (k == nodes - 1) break;
    const Eigen::VectorXd dz = rp.increment(k);
    const Eigen::MatrixXd& a = rp.area[static_cast<std::size_t>(k)];
    for (int c = 0; c < out.dim; ++c) {
      double step = out.z_zeta[static_cast<std::size_t>(k)].row(c).dot(dz) +
                    out.z_tau(k, c) * mu.grid.dt(k);
      for (int l = 0; l < d; ++l)
        for (int jp = 0; jp < d; ++jp)
          step += out.z_zeta2[static_cast<std::size_t>(k)](c, l + d * jp) * a(l, jp);
      acc(c) += step;
    }
  }
  out.validate();
  return out;
}

Eigen::MatrixXd time_derivative(const ControlledPath& z, const RoughPath& rp) {
  require_same_grid(z.grid, rp.grid, "time_derivative");
  if (!z.has_zeta2()) throw InvalidInput("time_derivative: needs second-level coefficients");
  const int n = z.grid.steps();
  Eigen::MatrixXd out(n + 1, z.dim);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd num = (z.z.row(k + 1) - z.z.row(k)).transpose() -
                          z.z_zeta[static_cast<std::size_t>(k)] * rp.increment(k) -
                          z.zeta2_apply(k, rp.area[static_cast<std::size_t>(k)]);
    out.row(k) = num.transpose() / z.grid.dt(k);
  }
  out.row(n) = out.row(n - 1);  // one-sided copy at the terminal node
  return out;
}

namespace {

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& theta) {
  const double h = 1e-5 * (1.0 + theta.norm());
  const Eigen::VectorXd f0 = f(theta);
  Eigen::MatrixXd jac(f0.size(), theta.size());
  for (int k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp(k) += h;
    tm(k) -= h;
    jac.col(k) = (f(tp) - f(tm)) / (2.0 * h);
  }
  return jac;
}

}  // namespace

StrongFieldLevels compose_strong(const StrongField& mu, const StrongField& nu, int node,
                                 const Eigen::VectorXd& theta) {
  if (!mu.value || !mu.zeta || !mu.zeta2 || !nu.value || !nu.zeta || !nu.zeta2)
    throw InvalidInput("compose_strong: missing level callbacks");
  if (mu.space_dim != nu.dim)
    throw InvalidInput("compose_strong: inner value dimension must match outer space dimension");
  const int d = mu.driver_dim;
  const Eigen::VectorXd inner = nu.value(node, theta);
  const Eigen::MatrixXd nu_z = nu.zeta(node, theta);                    // nu.dim x d
  const std::vector<Eigen::MatrixXd> nu_z2 = nu.zeta2(node, theta);     // per comp: d x d

  // Spatial derivatives of mu at the inner point (analytic or FD fallback,
  // step 1e-5 (1 + |theta|)).
  Eigen::MatrixXd dmu;  // mu.dim x mu.space_dim
  if (mu.dvalue)
    dmu = mu.dvalue(node, inner);
  else
    dmu = fd_jacobian([&](const Eigen::VectorXd& th) { return mu.value(node, th); }, inner);

  std::vector<Eigen::MatrixXd> dmu_zeta;  // per space dim k: mu.dim x d
  if (mu.dzeta) {
    dmu_zeta = mu.dzeta(node, inner);
  } else {
    const double h = 1e-5 * (1.0 + inner.norm());
    dmu_zeta.reserve(static_cast<std::size_t>(mu.space_dim));
    for (int k = 0; k < mu.space_dim; ++k) {
      Eigen::VectorXd tp = inner, tm = inner;
      tp(k) += h;
      tm(k) -= h;
      dmu_zeta.push_back((mu.zeta(node, tp) - mu.zeta(node, tm)) / (2.0 * h));
    }
  }

  std::vector<Eigen::MatrixXd> hess;  // per comp j: space x space
  if (mu.d2value) {
    hess = mu.d2value(node, inner);
  } else {
    const double h = 1e-5 * (1.0 + inner.norm());
    hess.assign(static_cast<std::size_t>(mu.dim),
                Eigen::MatrixXd::Zero(mu.space_dim, mu.space_dim));
    const Eigen::VectorXd f0 = mu.value(node, inner);
    for (int k = 0; k < mu.space_dim; ++k)
      for (int l = k; l < mu.space_dim; ++l) {
        Eigen::VectorXd second(mu.dim);
        if (k == l) {
          Eigen::VectorXd tp = inner, tm = inner;
          tp(k) += h;
          tm(k) -= h;
          second = (mu.value(node, tp) - 2.0 * f0 + mu.value(node, tm)) / (h * h);
        } else {
          Eigen::VectorXd tpp = inner, tpm = inner, tmp = inner, tmm = inner;
          tpp(k) += h; tpp(l) += h;
          tpm(k) += h; tpm(l) -= h;
          tmp(k) -= h; tmp(l) += h;
          tmm(k) -= h; tmm(l) -= h;
          second = (mu.value(node, tpp) - mu.value(node, tpm) - mu.value(node, tmp) +
                    mu.value(node, tmm)) /
                   (4.0 * h * h);
        }
        for (int j = 0; j < mu.dim; ++j) {
          hess[static_cast<std::size_t>(j)](k, l) = second(j);
          hess[static_cast<std::size_t>(j)](l, k) = second(j);
        }
      }
  }

  StrongFieldLevels out;
  out.value = mu.value(node, inner);
  out.zeta = mu.zeta(node, inner) + dmu * nu_z;
  const std::vector<Eigen::MatrixXd> mu_z2 = mu.zeta2(node, inner);
  out.zeta2.assign(static_cast<std::size_t>(mu.dim), Eigen::MatrixXd::Zero(d, d));
  for (int j = 0; j < mu.dim; ++j) {
    Eigen::MatrixXd block = mu_z2[static_cast<std::size_t>(j)];
    for (int k = 0; k < mu.space_dim; ++k) block += dmu(j, k) * nu_z2[static_cast<std::size_t>(k)];
    for (int i1 = 0; i1 < d; ++i1)
      for (int i2 = 0; i2 < d; ++i2) {
        double v = 0.0;
        for (int k = 0; k < mu.space_dim; ++k)
          v += dmu_zeta[static_cast<std::size_t>(k)](j, i2) * nu_z(k, i1) +
               dmu_zeta[static_cast<std::size_t>(k)](j, i1) * nu_z(k, i2);
        v += nu_z.col(i1).dot(hess[static_cast<std::size_t>(j)] * nu_z.col(i2));
        block(i1, i2) += v;
      }
    out.zeta2[static_cast<std::size_t>(j)] = block;
  }
  return out;
}

void write_controlled_csv(const ControlledPath& z, const std::string& path) {
  std::vector<std::string> header{"t"};
  for (int c = 0; c < z.dim; ++c) header.push_back("z_" + std::to_string(c + 1));
  for (int c = 0; c < z.dim; ++c)
    for (int i = 0; i < z.driver_dim; ++i)
      header.push_back("zzeta_" + std::to_string(c + 1) + "_" + std::to_string(i + 1));
  if (z.has_tau())
    for (int c = 0; c < z.dim; ++c) header.push_back("ztau_" + std::to_string(c + 1));
  CsvWriter w(path, header);
  for (int k = 0; k < z.grid.nodes(); ++k) {
    std::vector<CsvWriter::Cell> row;
    row.emplace_back(z.grid[k]);
    for (int c = 0; c < z.dim; ++c) row.emplace_back(z.z(k, c));
    for (int c = 0; c < z.dim; ++c)
      for (int i = 0; i < z.driver_dim; ++i)
        row.emplace_back(z.z_zeta[static_cast<std::size_t>(k)](c, i));
    if (z.has_tau())
      for (int c = 0; c < z.dim; ++c) row.emplace_back(z.z_tau(k, c));
    w.row(row);
  }
}

}  // namespace roughctrl
