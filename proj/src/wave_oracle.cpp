#include "qsync/wave_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <fftw3.h>

#include <Eigen/Eigenvalues>

namespace qsync {

namespace {

// Self-contained in-place transforms on a private fftw_malloc'd buffer;
// plans are created once with FFTW_ESTIMATE so results are reproducible
// across runs (no wisdom-dependent algorithm choice). A batch of columns
// shares one plan execution per direction.
class Fft {
 public:
  explicit Fft(int G, int batch = 1) : G_(G), batch_(batch) {
    buf_ = static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * G * batch));
    if (!buf_) throw std::bad_alloc();
    fwd_ = fftw_plan_dft_1d(G, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(G, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (batch > 1) {
      fwd_many_ = fftw_plan_many_dft(1, &G_, batch, buf_, nullptr, 1, G_, buf_,
                                     nullptr, 1, G_, FFTW_FORWARD,
                                     FFTW_ESTIMATE);
      bwd_many_ = fftw_plan_many_dft(1, &G_, batch, buf_, nullptr, 1, G_, buf_,
                                     nullptr, 1, G_, FFTW_BACKWARD,
                                     FFTW_ESTIMATE);
      if (!fwd_many_ || !bwd_many_)
        throw NumericalError("fft: plan creation failed");
    }
    if (!fwd_ || !bwd_) throw NumericalError("fft: plan creation failed");
  }
  ~Fft() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    if (fwd_many_) fftw_destroy_plan(fwd_many_);
    if (bwd_many_) fftw_destroy_plan(bwd_many_);
    fftw_free(buf_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  // data <- ifft(phase .* fft(data)) with 1/G normalization.
  void filter(Complex* data, const Complex* phase) {
    auto* b = reinterpret_cast<Complex*>(buf_);
    std::memcpy(b, data, sizeof(Complex) * G_);
    fftw_execute(fwd_);
    for (int i = 0; i < G_; ++i) b[i] *= phase[i];
    fftw_execute(bwd_);
    const double scale = 1.0 / G_;
    for (int i = 0; i < G_; ++i) data[i] = b[i] * scale;
  }

  // The batched filter: ncols contiguous columns, one phase vector.
  void filter_cols(Complex* data, int ncols, const Complex* phase) {
    if (ncols != batch_)
      throw std::logic_error("fft: batch size mismatch");
    if (ncols == 1) return filter(data, phase);
    auto* b = reinterpret_cast<Complex*>(buf_);
    std::memcpy(b, data, sizeof(Complex) * G_ * ncols);
    fftw_execute(fwd_many_);
    for (int c = 0; c < ncols; ++c) {
      Complex* col = b + static_cast<std::ptrdiff_t>(c) * G_;
      for (int i = 0; i < G_; ++i) col[i] *= phase[i];
    }
    fftw_execute(bwd_many_);
    const double scale = 1.0 / G_;
    for (int i = 0; i < G_ * ncols; ++i) data[i] = b[i] * scale;
  }

  void forward(const Complex* in, Complex* out) {
    auto* b = reinterpret_cast<Complex*>(buf_);
    std::memcpy(b, in, sizeof(Complex) * G_);
    fftw_execute(fwd_);
    std::memcpy(out, b, sizeof(Complex) * G_);
  }

  void backward_scaled(const Complex* in, Complex* out) {
    auto* b = reinterpret_cast<Complex*>(buf_);
    std::memcpy(b, in, sizeof(Complex) * G_);
    fftw_execute(bwd_);
    const double scale = 1.0 / G_;
    for (int i = 0; i < G_; ++i) out[i] = b[i] * scale;
  }

 private:
  int G_;
  int batch_;
  fftw_complex* buf_;
  fftw_plan fwd_;
  fftw_plan bwd_;
  fftw_plan fwd_many_ = nullptr;
  fftw_plan bwd_many_ = nullptr;
};

Vector kinetic_phase(const Grid& grid, double tau) {
  Vector phase(grid.G);
  for (int i = 0; i < grid.G; ++i) {
    const double w = 0.5 * grid.k(i) * grid.k(i);
    phase(i) = std::exp(Complex(0.0, -w * tau));
  }
  return phase;
}

Matrix correlations_of(const Grid& grid, const Matrix& psis) {
  const int n = static_cast<int>(psis.cols());
  Matrix z(n, n);
  for (int j = 0; j < n; ++j) {
    z(j, j) = psis.col(j).squaredNorm() * grid.dx;
    for (int k = j + 1; k < n; ++k) {
      const Complex v = psis.col(j).dot(psis.col(k)) * grid.dx;
      z(j, k) = v;
      z(k, j) = std::conj(v);
    }
  }
  return z;
}

}  // namespace

Grid make_grid(double L, int G) {
  if (!(L > 0.0)) throw std::invalid_argument("make_grid: need L > 0");
  if (G < 8 || (G & (G - 1)) != 0)
    throw std::invalid_argument("make_grid: need G a power of two, >= 8");
  Grid grid;
  grid.L = L;
  grid.G = G;
  grid.dx = 2.0 * L / G;
  grid.x.resize(G);
  grid.k.resize(G);
  for (int i = 0; i < G; ++i) {
    grid.x(i) = -L + i * grid.dx;
    const int m = i < G / 2 ? i : i - G;
    grid.k(i) = M_PI * m / L;
  }
  return grid;
}

PotentialSpec PotentialSpec::free_space() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::harmonic(double omega_trap) {
  if (!(omega_trap > 0.0))
    throw std::invalid_argument("PotentialSpec: need omega_trap > 0");
  PotentialSpec V;
  V.kind = Kind::harmonic;
  V.omega_trap = omega_trap;
  return V;
}

RealVector potential_values(const PotentialSpec& V, const Grid& grid) {
  RealVector v = RealVector::Zero(grid.G);
  if (V.kind == PotentialSpec::Kind::harmonic)
    v = 0.5 * V.omega_trap * V.omega_trap * grid.x.array().square();
  return v;
}

WaveEnsemble make_wave_ensemble(Grid grid, Matrix psis, double t,
                                double tol_mass) {
  if (psis.rows() != grid.G)
    throw std::invalid_argument("make_wave_ensemble: grid size mismatch");
  if (psis.cols() < 1)
    throw std::invalid_argument("make_wave_ensemble: need at least one wave");
  for (Eigen::Index j = 0; j < psis.cols(); ++j) {
    const double norm = std::sqrt(psis.col(j).squaredNorm() * grid.dx);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > tol_mass)
      throw std::invalid_argument("make_wave_ensemble: column not unit mass");
  }
  return WaveEnsemble{std::move(grid), std::move(psis), t};
}

Vector gaussian_packet(const Grid& grid, double x0, double sigma, double k0) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_packet: need sigma > 0");
  Vector psi(grid.G);
  for (int i = 0; i < grid.G; ++i) {
    const double d = grid.x(i) - x0;
    psi(i) = std::exp(Complex(-d * d / (4.0 * sigma * sigma), k0 * grid.x(i)));
  }
  psi /= std::sqrt(psi.squaredNorm() * grid.dx);
  return psi;
}

Complex grid_inner(const Grid& grid, const Vector& f, const Vector& g) {
  if (f.size() != grid.G || g.size() != grid.G)
    throw std::invalid_argument("grid_inner: size mismatch");
  return f.dot(g) * grid.dx;
}

double grid_norm(const Grid& grid, const Vector& f) {
  if (f.size() != grid.G) throw std::invalid_argument("grid_norm: size mismatch");
  return std::sqrt(f.squaredNorm() * grid.dx);
}

Matrix derived_correlations(const WaveEnsemble& we) {
  return correlations_of(we.grid, we.psis);
}

double dt_cap(double kappa, const FrequencyEnsemble& ens, const PotentialSpec& V,
              const Grid& grid) {
  double v_sup = 0.0;
  if (V.kind == PotentialSpec::Kind::harmonic)
    v_sup = 0.5 * V.omega_trap * V.omega_trap * grid.L * grid.L;
  return 1e-3 / std::max({kappa, ens.max_abs(), v_sup, 1e-12});
}

struct Propagator::Impl {
  Grid grid;
  bool is_free = true;
  std::unique_ptr<Fft> fft;  // free
  mutable std::unique_ptr<Fft> fft_cols;  // free, batched; sized on first use
  mutable int fft_cols_n = 0;
  Matrix U;       // harmonic eigenbasis
  RealVector gen;  // mode frequencies: k^2/2, or the eigenvalues

  // Calls at regularly spaced times advance the cached phase vector by one
  // precomputed multiplier instead of G fresh exponentials. The slack covers
  // rounding in the caller's t = m*dt times; a direct rebuild every 4096
  // steps stops the multiplicative error from piling up.
  mutable Vector phase;
  mutable Vector step;
  mutable double phase_t = std::numeric_limits<double>::quiet_NaN();
  mutable double step_dt = std::numeric_limits<double>::quiet_NaN();
  mutable int age = 0;

  const Vector& phases_for(double t) const {
    if (phase.size() == gen.size() && t == phase_t) return phase;
    const double d = t - phase_t;
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                         (std::abs(t) + std::abs(phase_t) + std::abs(step_dt));
    const bool stepped = phase.size() == gen.size() && std::isfinite(d) &&
                         std::isfinite(step_dt) &&
                         std::abs(d - step_dt) <= slack && age < 4096;
    if (stepped) {
      phase.array() *= step.array();
      ++age;
    } else {
      if (phase.size() == gen.size() && std::isfinite(d) && d != 0.0 &&
          !(std::abs(d - step_dt) <= slack)) {
        step.resize(gen.size());
        for (Eigen::Index i = 0; i < gen.size(); ++i)
          step(i) = std::exp(Complex(0.0, -gen(i) * d));
        step_dt = d;
      }
      phase.resize(gen.size());
      for (Eigen::Index i = 0; i < gen.size(); ++i)
        phase(i) = std::exp(Complex(0.0, -gen(i) * t));
      age = 0;
    }
    phase_t = t;
    return phase;
  }
};

Propagator::Propagator(const Grid& grid, const PotentialSpec& V)
    : impl_(std::make_unique<Impl>()) {
  impl_->grid = grid;
  impl_->is_free = V.kind == PotentialSpec::Kind::free_space;
  if (impl_->is_free) {
    impl_->fft = std::make_unique<Fft>(grid.G);
    impl_->gen.resize(grid.G);
    for (int i = 0; i < grid.G; ++i)
      impl_->gen(i) = 0.5 * grid.k(i) * grid.k(i);
    return;
  }
  // Dense discretized H = spectral kinetic + diag(V); built column by
  // column through the transform, then eigendecomposed once.
  Fft fft(grid.G);
  const int G = grid.G;
  Matrix H(G, G);
  Vector kin_phase(G);
  for (int i = 0; i < G; ++i) kin_phase(i) = 0.5 * grid.k(i) * grid.k(i);
  Vector col = Vector::Zero(G), hat(G);
  for (int n = 0; n < G; ++n) {
    col.setZero();
    col(n) = 1.0;
    fft.forward(col.data(), hat.data());
    hat.array() *= kin_phase.array();
    fft.backward_scaled(hat.data(), H.col(n).data());
  }
  const RealVector v = potential_values(V, grid);
  for (int n = 0; n < G; ++n) H(n, n) += v(n);
  const Matrix herm = 0.5 * (H + H.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(herm);
  if (solver.info() != Eigen::Success)
    throw NumericalError("Propagator: eigendecomposition failed");
  impl_->U = solver.eigenvectors();
  impl_->gen = solver.eigenvalues();
}

Propagator::~Propagator() = default;

Vector Propagator::apply(const Vector& f, double t) const {
  const Grid& grid = impl_->grid;
  if (f.size() != grid.G) throw std::invalid_argument("Propagator: size mismatch");
  if (impl_->is_free) {
    Vector out = f;
    impl_->fft->filter(out.data(), impl_->phases_for(t).data());
    return out;
  }
  Vector coeff = impl_->U.adjoint() * f;
  coeff.array() *= impl_->phases_for(t).array();
  return impl_->U * coeff;
}

Matrix Propagator::apply(const Matrix& fs, double t) const {
  const Grid& grid = impl_->grid;
  if (fs.rows() != grid.G)
    throw std::invalid_argument("Propagator: size mismatch");
  const int n = static_cast<int>(fs.cols());
  if (impl_->is_free) {
    if (!impl_->fft_cols || impl_->fft_cols_n != n) {
      impl_->fft_cols = std::make_unique<Fft>(grid.G, n);
      impl_->fft_cols_n = n;
    }
    Matrix out = fs;
    impl_->fft_cols->filter_cols(out.data(), n, impl_->phases_for(t).data());
    return out;
  }
  Matrix coeff = impl_->U.adjoint() * fs;
  coeff.array().colwise() *= impl_->phases_for(t).array();
  return impl_->U * coeff;
}

void EvolveOptions::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
  if (!(t_final > 0.0))
    throw std::invalid_argument("evolve: t_final must be positive");
  if (record_every < 1)
    throw std::invalid_argument("evolve: record_every must be >= 1");
  if (snapshot_every < 0)
    throw std::invalid_argument("evolve: snapshot_every must be >= 0");
  if (sample_every < 1)
    throw std::invalid_argument("evolve: sample_every must be >= 1");
  if (!(abort_mass_drift > 0.0))
    throw std::invalid_argument("evolve: abort_mass_drift must be positive");
}

WaveTrajectory evolve(const WaveEnsemble& we0, const PotentialSpec& V,
                      const FrequencyEnsemble& ens, double kappa,
                      const EvolveOptions& opts) {
  opts.validate();
  const Grid& grid = we0.grid;
  const int N = we0.size();
  const int G = grid.G;
  if (ens.size() != N) throw std::invalid_argument("evolve: ensemble size mismatch");
  if (kappa < 0.0) throw std::invalid_argument("evolve: kappa must be >= 0");

  const double cap = dt_cap(kappa, ens, V, grid);
  if (opts.dt > cap * (1.0 + 1e-9))
    throw std::invalid_argument("evolve: dt exceeds the stability cap " +
                                std::to_string(cap));

  const long steps = std::lround(opts.t_final / opts.dt);
  if (steps < 1 || std::abs(steps * opts.dt - opts.t_final) >
                       1e-9 * std::max(1.0, opts.t_final))
    throw std::invalid_argument(
        "evolve: t_final must be an integer number of dt steps");
  if (opts.accumulate_asymptotic) {
    if (steps % opts.sample_every != 0 || (steps / opts.sample_every) % 2 != 0)
      throw std::invalid_argument(
          "evolve: asymptotic quadrature needs an even number of sample "
          "intervals");
  }

  WaveTrajectory traj;
  traj.grid = grid;
  traj.potential = V;
  traj.ens = ens;
  traj.kappa = kappa;
  traj.dt = opts.dt;
  traj.correlations.kappa = kappa;
  traj.has_asymptotic = opts.accumulate_asymptotic;

  Fft fft(G, N);
  const Vector half_phase = kinetic_phase(grid, 0.5 * opts.dt);
  const Vector full_phase = kinetic_phase(grid, opts.dt);
  const RealVector vx = potential_values(V, grid);

  Matrix psis = we0.psis;
  const double t0 = we0.t;

  std::unique_ptr<Propagator> prop;
  const long n_samples = steps / opts.sample_every;  // intervals, even
  const double delta = opts.sample_every * opts.dt;
  if (opts.accumulate_asymptotic) {
    traj.psi0 = psis;
    traj.integral_trap = Matrix::Zero(G, N);
    traj.integral_simpson = Matrix::Zero(G, N);
    prop = std::make_unique<Propagator>(grid, V);
  }

  Matrix rhs(G, N), half(G, N), w(G, N);
  Vector zeta(G);

  auto coupling_rhs = [&](const Matrix& p, Matrix& out) {
    zeta = p.rowwise().mean();
    for (int j = 0; j < N; ++j) {
      const Complex ip = zeta.dot(p.col(j)) * grid.dx;
      out.col(j) =
          Complex(0.0, -1.0) *
              ((vx.array() + ens.omega[j]).cast<Complex>() * p.col(j).array())
                  .matrix() +
          (0.5 * kappa) * (zeta - ip * p.col(j));
    }
  };

  auto apply_kinetic = [&](const Vector& phase) {
    fft.filter_cols(psis.data(), N, phase.data());
  };

  auto record_correlations = [&](double t) {
    double drift = 0.0;
    for (int j = 0; j < N; ++j)
      drift = std::max(
          drift, std::abs(std::sqrt(psis.col(j).squaredNorm() * grid.dx) - 1.0));
    if (drift > opts.abort_mass_drift)
      throw NumericalError("evolve: mass drift " + std::to_string(drift) +
                           " exceeds limit; dt too large");
    traj.mass_drift.push_back(drift);
    traj.correlations.sym_drift.push_back(0.0);
    traj.correlations.states.push_back(make_correlation_state(
        correlations_of(grid, psis), t, 1e-6, 1e-6, 1e-6));
  };

  auto record_snapshot = [&](double t) {
    traj.snapshots.push_back(WaveEnsemble{grid, psis, t});
  };

  Matrix moved(G, opts.accumulate_asymptotic ? N : 0);
  auto sample_asymptotic = [&](long m, double t) {
    // W_j = Omega_j psi_j + (i kappa/2)(zeta - <zeta,psi_j> psi_j),
    // accumulated as e^{+iH(t-t0)} W_j with trapezoid and Simpson weights.
    zeta = psis.rowwise().mean();
    for (int j = 0; j < N; ++j) {
      const Complex ip = zeta.dot(psis.col(j)) * grid.dx;
      w.col(j) = ens.omega[j] * psis.col(j) +
                 Complex(0.0, 0.5 * kappa) * (zeta - ip * psis.col(j));
    }
    const long q = m / opts.sample_every;
    if (q == n_samples) {
      double tail = 0.0;
      for (int j = 0; j < N; ++j)
        tail = std::max(tail, std::sqrt(w.col(j).squaredNorm() * grid.dx));
      traj.tail_norm = tail;
    }
    const bool endpoint = q == 0 || q == n_samples;
    const double w_trap = endpoint ? 0.5 * delta : delta;
    const double w_simp =
        endpoint ? delta / 3.0 : (q % 2 == 1 ? 4.0 * delta / 3.0 : 2.0 * delta / 3.0);
    moved = prop->apply(w, -(t - t0));
    traj.integral_trap += w_trap * moved;
    traj.integral_simpson += w_simp * moved;
  };

  // Step 0 observations, then the split loop. Consecutive kinetic
  // half-steps fuse into full steps except where an observation needs the
  // state at a step boundary.
  record_correlations(t0);
  record_snapshot(t0);
  if (opts.accumulate_asymptotic) sample_asymptotic(0, t0);

  apply_kinetic(half_phase);
  for (long m = 1; m <= steps; ++m) {
    coupling_rhs(psis, rhs);
    half = psis + (0.5 * opts.dt) * rhs;
    coupling_rhs(half, rhs);
    psis += opts.dt * rhs;

    const double t = t0 + m * opts.dt;
    const bool corr_due = m == steps || m % opts.record_every == 0;
    const bool snap_due =
        m == steps || (opts.snapshot_every > 0 && m % opts.snapshot_every == 0);
    const bool samp_due =
        opts.accumulate_asymptotic && m % opts.sample_every == 0;

    if (corr_due || snap_due || samp_due) {
      apply_kinetic(half_phase);
      if (corr_due) record_correlations(t);
      if (snap_due) record_snapshot(t);
      if (samp_due) sample_asymptotic(m, t);
      if (m < steps) apply_kinetic(half_phase);
    } else {
      apply_kinetic(full_phase);
    }
  }
  return traj;
}

SyncErrorSeries sync_error(const WaveTrajectory& traj,
                           const PhaseLockedState& pls) {
  const int N = pls.size();
  if (traj.snapshots.empty())
    throw std::invalid_argument("sync_error: no snapshots");
  if (traj.snapshots.front().size() != N)
    throw std::invalid_argument("sync_error: size mismatch");

  SyncErrorSeries series;
  for (const auto& snap : traj.snapshots) {
    const Matrix z = derived_correlations(snap);
    double direct = 0.0, via = 0.0;
    for (int j = 0; j < N; ++j) {
      for (int k = j + 1; k < N; ++k) {
        const double da = pls.alpha[j] - pls.alpha[k];
        const Complex rot = std::exp(Complex(0.0, da));
        const Vector diff = rot * snap.psis.col(j) - snap.psis.col(k);
        direct = std::max(direct,
                          std::sqrt(diff.squaredNorm() * snap.grid.dx));
        const double nj = z(j, j).real();
        const double nk = z(k, k).real();
        const double sq = nj + nk -
                          2.0 * (std::cos(da) * z(j, k).real() +
                                 std::sin(da) * z(j, k).imag());
        via = std::max(via, std::sqrt(std::max(sq, 0.0)));
      }
    }
    series.t.push_back(snap.t);
    series.direct.push_back(direct);
    series.via_identity.push_back(via);
  }
  return series;
}

AsymptoticResult asymptotic_wavefunctions(const WaveTrajectory& traj) {
  if (!traj.has_asymptotic)
    throw std::invalid_argument(
        "asymptotic_wavefunctions: trajectory lacks quadrature accumulators");
  if (traj.tail_norm >= 1e-8)
    throw NumericalError("asymptotic_wavefunctions: integrand tail " +
                         std::to_string(traj.tail_norm) +
                         " has not converged; extend t_final");

  const Grid& grid = traj.grid;
  const int N = static_cast<int>(traj.psi0.cols());
  AsymptoticResult result;
  result.tail_norm = traj.tail_norm;
  result.psi_tilde =
      traj.psi0 - Complex(0.0, 1.0) * traj.integral_simpson;

  for (int j = 0; j < N; ++j) {
    const Vector d = traj.integral_trap.col(j) - traj.integral_simpson.col(j);
    result.trap_simpson_diff = std::max(
        result.trap_simpson_diff, std::sqrt(d.squaredNorm() * grid.dx));
  }

  const WaveEnsemble& last = traj.snapshots.back();
  const double T = last.t - traj.snapshots.front().t;
  Propagator prop(grid, traj.potential);
  for (int j = 0; j < N; ++j) {
    const Vector back = prop.apply(Vector(result.psi_tilde.col(j)), T);
    const Vector diff = last.psis.col(j) - back;
    result.scattering_error.push_back(
        std::sqrt(diff.squaredNorm() * grid.dx));
  }
  return result;
}

}  // namespace qsync
