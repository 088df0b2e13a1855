#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "qsync/correlation_dynamics.hpp"
#include "qsync/fixed_point.hpp"
#include "qsync/wave_oracle.hpp"

using namespace qsync;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix two_packets(const Grid& grid) {
  Matrix psis(grid.G, 2);
  psis.col(0) = gaussian_packet(grid, -1.0, 1.0, 0.0);
  psis.col(1) = gaussian_packet(grid, 1.0, 1.0, 0.0);
  return psis;
}

}  // namespace

TEST_SUITE_BEGIN("wave");

TEST_CASE("grid construction") {
  const Grid g = make_grid(20.0, 64);
  CHECK(g.dx == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(g.x(0) == -20.0);
  CHECK(g.x(63) == doctest::Approx(20.0 - 0.625).epsilon(1e-15));
  CHECK(g.k(0) == 0.0);
  CHECK(g.k(1) == doctest::Approx(kPi / 20.0).epsilon(1e-15));
  CHECK(g.k(63) == doctest::Approx(-kPi / 20.0).epsilon(1e-15));
  CHECK(g.k(32) == doctest::Approx(-kPi * 32 / 20.0).epsilon(1e-15));
  CHECK_THROWS_AS(make_grid(20.0, 48), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(20.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.0, 64), std::invalid_argument);
}

TEST_CASE("packets and inner products") {
  const Grid g = make_grid(20.0, 256);
  const Vector psi = gaussian_packet(g, 0.5, 1.0, 0.3);
  CHECK(grid_norm(g, psi) == doctest::Approx(1.0).epsilon(1e-13));
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < g.G; ++i) mean += g.x(i) * std::norm(psi(i)) * g.dx;
  for (int i = 0; i < g.G; ++i)
    var += (g.x(i) - mean) * (g.x(i) - mean) * std::norm(psi(i)) * g.dx;
  CHECK(mean == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-10));

  const Vector phi = gaussian_packet(g, -0.5, 1.0, 0.0);
  const Complex a = grid_inner(g, phi, Complex(0.0, 1.0) * phi);
  CHECK(a.imag() == doctest::Approx(1.0).epsilon(1e-13));  // conjugate-first
  CHECK(std::abs(a.real()) < 1e-14);
  const Complex b = grid_inner(g, phi, psi);
  CHECK(std::abs(grid_inner(g, psi, phi) - std::conj(b)) < 1e-14);
}

TEST_CASE("wave ensemble validation") {
  const Grid g = make_grid(10.0, 64);
  Matrix psis(g.G, 1);
  psis.col(0) = gaussian_packet(g, 0.0, 1.0, 0.0) * 1.5;
  CHECK_THROWS_AS(make_wave_ensemble(g, psis), std::invalid_argument);
  psis.col(0) /= 1.5;
  CHECK_NOTHROW(make_wave_ensemble(g, psis));
}

TEST_CASE("derived correlations are a valid correlation matrix") {
  const Grid g = make_grid(20.0, 256);
  Matrix psis(g.G, 3);
  psis.col(0) = gaussian_packet(g, -2.0, 1.0, 0.2);
  psis.col(1) = gaussian_packet(g, 0.0, 1.5, -0.1);
  psis.col(2) = gaussian_packet(g, 2.0, 0.8, 0.0);
  const auto we = make_wave_ensemble(g, psis);
  const Matrix z = derived_correlations(we);
  for (int j = 0; j < 3; ++j) {
    CHECK(z(j, j).real() == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(z(k, j) - std::conj(z(j, k))) < 1e-14);
      CHECK(std::abs(z(j, k)) <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("free gaussian dispersion matches the closed form") {
  const Grid g = make_grid(20.0, 512);
  const double sigma0 = 1.0, k0 = 0.5, T = 1.0;
  Matrix psis(g.G, 1);
  psis.col(0) = gaussian_packet(g, 0.0, sigma0, k0);
  const auto we0 = make_wave_ensemble(g, psis);

  FrequencyEnsemble ens;  // single-wave limit, coupling term self-cancels
  ens.omega = {0.0};
  EvolveOptions opts;
  opts.dt = std::ldexp(1.0, -12);
  opts.t_final = T;
  opts.record_every = 1 << 12;
  const auto traj = evolve(we0, PotentialSpec::free_space(), ens, 4.0, opts);

  const Complex denom(1.0, T / (2.0 * sigma0 * sigma0));
  Vector exact(g.G);
  for (int i = 0; i < g.G; ++i) {
    const double x = g.x(i);
    const Complex spread = -((x - k0 * T) * (x - k0 * T)) /
                           (4.0 * sigma0 * sigma0 * denom);
    exact(i) = std::pow(2.0 * kPi * sigma0 * sigma0, -0.25) /
               std::sqrt(denom) *
               std::exp(Complex(0.0, k0 * (x - 0.5 * k0 * T)) + spread);
  }
  const Vector diff = traj.snapshots.back().psis.col(0) - exact;
  CHECK(std::sqrt(diff.squaredNorm() * g.dx) < 1e-6);
  CHECK(traj.mass_drift.back() < 1e-10);
}

TEST_CASE("harmonic eigenstates are stationary without coupling") {
  const Grid g = make_grid(20.0, 256);
  const double w = 0.2;
  Matrix psis(g.G, 2);
  for (int i = 0; i < g.G; ++i) {
    const double x = g.x(i);
    psis(i, 0) = std::exp(-0.5 * w * x * x);
    psis(i, 1) = x * std::exp(-0.5 * w * x * x);
  }
  psis.col(0) /= std::sqrt(psis.col(0).squaredNorm() * g.dx);
  psis.col(1) /= std::sqrt(psis.col(1).squaredNorm() * g.dx);
  const auto we0 = make_wave_ensemble(g, psis);
  const auto ens = make_ensemble({0.0, 0.0});

  EvolveOptions opts;
  opts.dt = std::ldexp(1.0, -13);
  opts.t_final = 1.0;
  opts.record_every = 1 << 11;
  const auto traj = evolve(we0, PotentialSpec::harmonic(w), ens, 0.0, opts);

  for (const auto& st : traj.correlations.states) {
    CHECK(std::abs(st.z(0, 1)) < 1e-8);  // orthogonal eigenstates stay so
  }
  const auto& last = traj.snapshots.back();
  for (int j = 0; j < 2; ++j) {
    const Complex overlap = grid_inner(g, psis.col(j), last.psis.col(j));
    CHECK(std::abs(overlap) == doctest::Approx(1.0).epsilon(1e-8));
  }
  // Ground-state phase advances at the trap's zero-point energy w/2.
  const Complex overlap0 = grid_inner(g, psis.col(0), last.psis.col(0));
  CHECK(std::arg(overlap0) == doctest::Approx(-0.5 * w * 1.0).epsilon(1e-6));
  CHECK(traj.mass_drift.back() < 1e-8);
}

TEST_CASE("evolve guards") {
  const Grid g = make_grid(20.0, 64);
  Matrix psis(g.G, 2);
  psis.col(0) = gaussian_packet(g, -1.0, 1.0, 0.0);
  psis.col(1) = gaussian_packet(g, 1.0, 1.0, 0.0);
  const auto we0 = make_wave_ensemble(g, psis);
  const auto ens = make_ensemble({1.0, -1.0});

  EvolveOptions opts;
  opts.dt = 1e-3;  // cap for kappa = 4 is 2.5e-4
  opts.t_final = 0.1;
  CHECK_THROWS_AS(evolve(we0, PotentialSpec::free_space(), ens, 4.0, opts),
                  std::invalid_argument);

  opts.dt = 2.5e-4;
  opts.t_final = 0.1001;  // not an integer number of steps
  CHECK_THROWS_AS(evolve(we0, PotentialSpec::free_space(), ens, 4.0, opts),
                  std::invalid_argument);

  opts.dt = std::ldexp(1.0, -12);
  opts.t_final = 3.0 * opts.dt;
  opts.accumulate_asymptotic = true;  // odd interval count
  CHECK_THROWS_AS(evolve(we0, PotentialSpec::free_space(), ens, 4.0, opts),
                  std::invalid_argument);

  EvolveOptions bad;
  bad.record_every = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("derived correlations follow the autonomous reduction") {
  const Grid g = make_grid(20.0, 256);
  const auto we0 = make_wave_ensemble(g, two_packets(g));
  const auto ens = make_ensemble({1.0, -1.0});
  const double kappa = 4.0;

  EvolveOptions opts;
  opts.dt = std::ldexp(1.0, -13);
  opts.t_final = 2.0;
  opts.record_every = 1 << 11;  // every 0.25
  const auto traj = evolve(we0, PotentialSpec::free_space(), ens, kappa, opts);

  SolverConfig cfg;
  cfg.dt = 2.5e-4;
  cfg.t_final = 2.0;
  cfg.record_every = 1000;  // every 0.25
  const auto ode = integrate(traj.correlations.states.front(), ens, kappa, cfg);

  REQUIRE(ode.states.size() == traj.correlations.states.size());
  double max_dev = 0.0;
  for (std::size_t i = 0; i < ode.states.size(); ++i) {
    REQUIRE(std::abs(ode.states[i].t - traj.correlations.states[i].t) < 1e-9);
    max_dev = std::max(max_dev,
                       (ode.states[i].z - traj.correlations.states[i].z)
                           .cwiseAbs()
                           .maxCoeff());
  }
  CHECK(max_dev < 1e-5);
  for (double d : traj.mass_drift) CHECK(d < 1e-8);
  for (const auto& st : traj.correlations.states) {
    CHECK(st.z.cwiseAbs().maxCoeff() <= 1.0 + 1e-10);
  }
}

TEST_CASE("mixed potential run stays mass-conserving") {
  const Grid g = make_grid(20.0, 256);
  const auto we0 = make_wave_ensemble(g, two_packets(g));
  const auto ens = make_ensemble({1.0, -1.0});
  EvolveOptions opts;
  opts.dt = std::ldexp(1.0, -13);
  opts.t_final = 0.5;
  opts.record_every = 1 << 10;
  const auto traj = evolve(we0, PotentialSpec::harmonic(0.2), ens, 4.0, opts);
  for (double d : traj.mass_drift) CHECK(d < 1e-8);
  for (const auto& st : traj.correlations.states) {
    CHECK(st.z.cwiseAbs().maxCoeff() <= 1.0 + 1e-10);
  }
}

TEST_CASE("synchronization error and its correlation identity") {
  const Grid g = make_grid(20.0, 256);
  const auto ens = make_ensemble({1.0, -1.0});
  const double kappa = 4.0;
  const auto pls = solve_phase_locked(ens, kappa);
  REQUIRE(pls.has_value());

  SUBCASE("identical waves at zero angles") {
    Matrix psis(g.G, 2);
    psis.col(0) = gaussian_packet(g, 0.0, 1.0, 0.0);
    psis.col(1) = psis.col(0);
    const auto we0 = make_wave_ensemble(g, psis);
    EvolveOptions opts;
    opts.dt = std::ldexp(1.0, -12);
    opts.t_final = 2.0 * opts.dt;
    const auto traj =
        evolve(we0, PotentialSpec::free_space(), make_ensemble({0.0, 0.0}), 0.0,
               opts);
    const auto series =
        sync_error(traj, make_phase_locked_state({0.0, 0.0}, 1.0));
    CHECK(series.direct.front() == 0.0);
    CHECK(series.via_identity.front() < 1e-10);
  }

  SUBCASE("generic run: both forms agree and the error decays") {
    const auto we0 = make_wave_ensemble(g, two_packets(g));
    EvolveOptions opts;
    opts.dt = std::ldexp(1.0, -13);
    opts.t_final = 2.0;
    opts.snapshot_every = 1 << 12;  // every 0.5
    const auto traj = evolve(we0, PotentialSpec::free_space(), ens, kappa, opts);
    const auto series = sync_error(traj, *pls);
    REQUIRE(series.t.size() == traj.snapshots.size());
    for (std::size_t i = 0; i < series.t.size(); ++i) {
      CHECK(std::abs(series.direct[i] - series.via_identity[i]) < 1e-10);
    }
    CHECK(series.direct.back() < 0.1 * series.direct.front());
  }
}

TEST_CASE("asymptotic wave functions") {
  const Grid g = make_grid(20.0, 256);

  SUBCASE("zero coupling keeps the initial data exactly") {
    const auto we0 = make_wave_ensemble(g, two_packets(g));
    const auto ens = make_ensemble({0.0, 0.0});
    EvolveOptions opts;
    opts.dt = std::ldexp(1.0, -12);
    opts.t_final = 0.5;
    opts.accumulate_asymptotic = true;
    opts.sample_every = 2;
    const auto traj = evolve(we0, PotentialSpec::free_space(), ens, 0.0, opts);
    CHECK(traj.tail_norm == 0.0);
    const auto res = asymptotic_wavefunctions(traj);
    CHECK((res.psi_tilde - we0.psis).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.trap_simpson_diff == 0.0);
    for (double e : res.scattering_error) CHECK(e < 1e-10);
  }

  SUBCASE("requires the accumulators") {
    const auto we0 = make_wave_ensemble(g, two_packets(g));
    const auto ens = make_ensemble({0.0, 0.0});
    EvolveOptions opts;
    opts.dt = std::ldexp(1.0, -12);
    opts.t_final = 0.5;
    const auto traj = evolve(we0, PotentialSpec::free_space(), ens, 0.0, opts);
    CHECK_THROWS_AS(asymptotic_wavefunctions(traj), std::invalid_argument);
  }

  SUBCASE("synchronized pair scatters onto free states") {
    const auto we0 = make_wave_ensemble(g, two_packets(g));
    const auto ens = make_ensemble({1.0, -1.0});
    const double kappa = 6.0;
    EvolveOptions opts;
    opts.dt = std::ldexp(1.0, -13);
    opts.t_final = 8.0;
    opts.record_every = 1 << 13;
    opts.accumulate_asymptotic = true;
    opts.sample_every = 1;
    const auto traj = evolve(we0, PotentialSpec::free_space(), ens, kappa, opts);
    CHECK(traj.tail_norm < 1e-8);
    const auto res = asymptotic_wavefunctions(traj);
    CHECK(res.trap_simpson_diff < 1e-7);
    for (double e : res.scattering_error) CHECK(e < 1e-4);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(grid_norm(g, res.psi_tilde.col(j)) - 1.0) < 1e-3);
    }
  }
}

TEST_SUITE_END();
