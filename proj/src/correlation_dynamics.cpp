#include "qsync/correlation_dynamics.hpp"

#include <cmath>

#include "qsync/detail/integrate.hpp"

namespace qsync {

Matrix correlation_rhs(const Matrix& z, const FrequencyEnsemble& ens,
                       double kappa) {
  const int n = static_cast<int>(z.rows());
  if (ens.size() != n)
    throw std::invalid_argument("correlation_rhs: ensemble/state size mismatch");
  const double c = kappa / (2.0 * n);
  Matrix d(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      Complex sum(0.0, 0.0);
      for (int l = 0; l < n; ++l) sum += z(j, l) + z(l, k);
      const double w = ens.omega[j] - ens.omega[k];
      d(j, k) = Complex(0.0, w) * z(j, k) + c * sum * (1.0 - z(j, k));
    }
  }
  return d;
}

SplitRates split_rhs(const Matrix& z, const FrequencyEnsemble& ens,
                     double kappa) {
  const int n = static_cast<int>(z.rows());
  if (ens.size() != n)
    throw std::invalid_argument("split_rhs: ensemble/state size mismatch");
  const auto& om = ens.omega;

  // mean-field components r_j + i s_j = (1/N) sum_l z_lj
  Eigen::VectorXd r(n), s(n);
  for (int j = 0; j < n; ++j) {
    Complex zj(0.0, 0.0);
    for (int l = 0; l < n; ++l) zj += z(l, j);
    zj /= static_cast<double>(n);
    r[j] = zj.real();
    s[j] = zj.imag();
  }

  SplitRates out;
  out.dr.resize(n, n);
  out.ds.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const double rjk = z(j, k).real(), sjk = z(j, k).imag();
      const double w = om[j] - om[k];
      out.dr(j, k) = -w * sjk + kappa / 2.0 * ((r[j] + r[k]) * (1.0 - rjk) +
                                               (s[k] - s[j]) * sjk);
      out.ds(j, k) = w * rjk + kappa / 2.0 * (-(r[j] + r[k]) * sjk +
                                              (s[k] - s[j]) * (1.0 - rjk));
    }
  }

  out.dr_avg.resize(n);
  out.ds_avg.resize(n);
  for (int j = 0; j < n; ++j) {
    double om_s = 0.0, om_r = 0.0, cross_r = 0.0, cross_s = 0.0;
    for (int l = 0; l < n; ++l) {
      om_s += om[l] * z(l, j).imag();
      om_r += om[l] * z(l, j).real();
      cross_r += r[l] - r[l] * z(l, j).real() - s[l] * z(l, j).imag();
      cross_s += s[l] * z(l, j).real() - r[l] * z(l, j).imag();
    }
    const double nn = static_cast<double>(n);
    out.dr_avg[j] = om[j] * s[j] - om_s / nn +
                    kappa / 2.0 *
                        (r[j] - r[j] * r[j] + s[j] * s[j] + cross_r / nn);
    out.ds_avg[j] = -om[j] * r[j] + om_r / nn +
                    kappa / 2.0 * (s[j] - 2.0 * r[j] * s[j] + cross_s / nn);
  }
  return out;
}

namespace {

double max_symmetry_drift(const Matrix& z) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < z.rows(); ++j)
    for (Eigen::Index k = j + 1; k < z.cols(); ++k)
      worst = std::max(worst, std::abs(z(k, j) - std::conj(z(j, k))));
  return worst;
}

}  // namespace

Trajectory integrate(const CorrelationState& z0, const FrequencyEnsemble& ens,
                     double kappa, const SolverConfig& cfg) {
  if (ens.size() != z0.size())
    throw std::invalid_argument("integrate: ensemble/state size mismatch");
  if (kappa < 0.0) throw std::invalid_argument("integrate: kappa must be >= 0");

  Trajectory traj;
  traj.kappa = kappa;

  auto rhs = [&](const Matrix& z) { return correlation_rhs(z, ens, kappa); };
  auto post = [&](Matrix& z, double) {
    for (Eigen::Index j = 0; j < z.rows(); ++j) z(j, j) = Complex(1.0, 0.0);
    for (Eigen::Index j = 0; j < z.rows(); ++j)
      for (Eigen::Index k = 0; k < z.cols(); ++k)
        if (std::abs(z(j, k)) > 1.0 + cfg.tol_ball)
          throw NumericalError("integrate: ball invariance violated");
  };
  auto record = [&](const Matrix& z, double t) {
    traj.sym_drift.push_back(max_symmetry_drift(z));
    traj.states.push_back(CorrelationState{z, t});
  };

  if (cfg.method == Method::rk4)
    detail::integrate_rk4(z0.z, z0.t, cfg, rhs, post, record);
  else
    detail::integrate_rk45(z0.z, z0.t, cfg, rhs, post, record);
  return traj;
}

Vector mean_field(const Matrix& z) {
  const int n = static_cast<int>(z.rows());
  Vector out(n);
  for (int j = 0; j < n; ++j) {
    Complex acc(0.0, 0.0);
    for (int l = 0; l < n; ++l) acc += z(l, j);
    out[j] = acc / static_cast<double>(n);
  }
  return out;
}

double order_parameter(const Matrix& z) {
  const int n = static_cast<int>(z.rows());
  double acc = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) acc += z(j, k).real();
  const double lam_sq = acc / (static_cast<double>(n) * n);
  return std::sqrt(std::max(lam_sq, 0.0));
}

}  // namespace qsync
