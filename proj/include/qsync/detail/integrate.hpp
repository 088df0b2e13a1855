#pragma once

#include <algorithm>
#include <cmath>

#include "qsync/core_model.hpp"

namespace qsync::detail {

// Fixed-step classical RK4 and adaptive Dormand-Prince RK45 over any state
// type supporting Eigen-style linear arithmetic. PostStep runs after each
// accepted step (pinning, invariant guards); Record receives (state, t) at
// every record_every-th accepted step and at t_final.
//
// The final step is shortened so the trajectory lands on t_final exactly.

template <class State>
double error_norm(const State& err, const State& y0, const State& y1,
                  double abs_tol, double rel_tol) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale =
        abs_tol + rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    worst = std::max(worst, std::abs(err(i)) / scale);
  }
  return worst;
}

template <class State, class Rhs, class PostStep, class Record>
void integrate_rk4(State y, double t0, const SolverConfig& cfg, Rhs rhs,
                   PostStep post, Record record) {
  cfg.validate();
  const double t_end = t0 + cfg.t_final;
  double t = t0;
  record(y, t);
  long step = 0;
  while (t < t_end - 1e-15 * std::max(1.0, std::abs(t_end))) {
    const double h = std::min(cfg.dt, t_end - t);
    const State k1 = rhs(y);
    const State k2 = rhs(y + (0.5 * h) * k1);
    const State k3 = rhs(y + (0.5 * h) * k2);
    const State k4 = rhs(y + h * k3);
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    post(y, t);
    ++step;
    const bool last = t >= t_end - 1e-15 * std::max(1.0, std::abs(t_end));
    if (step % cfg.record_every == 0 || last) record(y, t);
  }
}

template <class State, class Rhs, class PostStep, class Record>
void integrate_rk45(State y, double t0, const SolverConfig& cfg, Rhs rhs,
                    PostStep post, Record record) {
  cfg.validate();
  // Dormand-Prince 5(4) tableau; the stage abscissae are omitted because
  // every right-hand side here is autonomous.
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  const double t_end = t0 + cfg.t_final;
  const double h_min = 1e-12 * cfg.t_final;
  double t = t0;
  double h = cfg.dt;
  record(y, t);
  long accepted = 0;
  while (t < t_end - 1e-15 * std::max(1.0, std::abs(t_end))) {
    h = std::min(h, t_end - t);
    const State k1 = rhs(y);
    const State k2 = rhs(y + h * (a21 * k1));
    const State k3 = rhs(y + h * (a31 * k1 + a32 * k2));
    const State k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const State k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 =
        rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const State y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = rhs(y5);
    const State err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y5, cfg.abs_tol, cfg.rel_tol);
    if (en <= 1.0) {
      y = y5;
      t += h;
      post(y, t);
      ++accepted;
      const bool last = t >= t_end - 1e-15 * std::max(1.0, std::abs(t_end));
      if (accepted % cfg.record_every == 0 || last) record(y, t);
    }
    const double factor =
        std::clamp(0.9 * std::pow(1.0 / std::max(en, 1e-14), 0.2), 0.2, 5.0);
    h *= factor;
    if (h < h_min)
      throw NumericalError("rk45: step rejection floor reached");
  }
}

}  // namespace qsync::detail
