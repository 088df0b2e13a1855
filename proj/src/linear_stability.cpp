#include "qsync/linear_stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace qsync {

int IndexMap::pair_to_flat(int j, int k, int N) {
  if (j == k || j < 0 || k < 0 || j >= N || k >= N)
    throw std::invalid_argument("IndexMap: bad pair");
  return j * (N - 1) + k - (k > j ? 1 : 0);
}

std::pair<int, int> IndexMap::flat_to_pair(int n, int N) {
  if (n < 0 || n >= N * (N - 1)) throw std::invalid_argument("IndexMap: bad flat index");
  const int j = n / (N - 1);
  const int r = n % (N - 1);
  const int k = r + (r >= j ? 1 : 0);
  return {j, k};
}

Matrix build_jacobian(const CorrelationState& state, const FrequencyEnsemble& ens,
                      double kappa) {
  const int n = state.size();
  if (n != ens.size()) throw std::invalid_argument("build_jacobian: size mismatch");
  if (!(kappa > 0.0))
    throw std::invalid_argument("build_jacobian: kappa must be positive");

  const Matrix& z = state.z;
  const int dim = n * (n - 1);
  Matrix jac = Matrix::Zero(dim, dim);
  const double half = 1.0 / (2.0 * static_cast<double>(n));

  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const int row = IndexMap::pair_to_flat(j, k, n);
      Complex sum(0.0, 0.0);
      for (int l = 0; l < n; ++l) sum += z(j, l) + z(l, k);
      jac(row, row) = Complex(0.0, -(ens.omega[j] - ens.omega[k]) / kappa) +
                      half * sum -
                      (1.0 / static_cast<double>(n)) * (1.0 - z(j, k));
      const Complex off = -half * (1.0 - z(j, k));
      for (int i = 0; i < n; ++i) {
        if (i == j || i == k) continue;
        jac(row, IndexMap::pair_to_flat(j, i, n)) += off;
        jac(row, IndexMap::pair_to_flat(i, k, n)) += off;
      }
    }
  }
  return jac;
}

double SpectrumReport::min_re() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& ev : eigenvalues) m = std::min(m, ev.real());
  return m;
}

int SpectrumReport::zero_modes() const {
  int count = 0;
  for (const auto& ev : eigenvalues)
    if (std::abs(ev.real()) <= zero_tolerance) ++count;
  return count;
}

SpectrumReport spectrum(const Matrix& m, double zero_tolerance) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectrum: matrix not square");
  Eigen::ComplexEigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw NumericalError("spectrum: eigensolver did not converge");

  SpectrumReport report;
  report.zero_tolerance = zero_tolerance;
  report.eigenvalues.assign(solver.eigenvalues().data(),
                            solver.eigenvalues().data() + m.rows());
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
            [](const Complex& a, const Complex& b) {
              if (a.real() != b.real()) return a.real() < b.real();
              return a.imag() < b.imag();
            });

  bool any_pos = false, any_neg = false, all_pos = true, all_neg = true;
  for (const auto& ev : report.eigenvalues) {
    if (ev.real() > zero_tolerance)
      any_pos = true;
    else
      all_pos = false;
    if (ev.real() < -zero_tolerance)
      any_neg = true;
    else
      all_neg = false;
  }
  if (all_pos)
    report.classification = StabilityClass::stable;
  else if (all_neg)
    report.classification = StabilityClass::repulsive;
  else if (any_pos && any_neg)
    report.classification = StabilityClass::saddle;
  else
    report.classification = StabilityClass::marginal;
  return report;
}

CorrelationState make_homogeneous_state(HomogeneousKind kind, int N, int I_size) {
  if (N < 2) throw std::invalid_argument("make_homogeneous_state: need N >= 2");
  Matrix z(N, N);
  switch (kind) {
    case HomogeneousKind::full_sync:
      z.setOnes();
      break;
    case HomogeneousKind::bipolar: {
      if (I_size < 1 || I_size >= N)
        throw std::invalid_argument("make_homogeneous_state: need 1 <= I_size < N");
      for (int j = 0; j < N; ++j) {
        const double sj = j < I_size ? -1.0 : 1.0;
        for (int k = 0; k < N; ++k) {
          const double sk = k < I_size ? -1.0 : 1.0;
          z(j, k) = sj * sk;
        }
      }
      break;
    }
    case HomogeneousKind::incoherent: {
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k)
          z(j, k) = std::exp(Complex(0.0, 2.0 * M_PI * (j - k) / N));
      break;
    }
    case HomogeneousKind::trivial:
      z.setIdentity();
      break;
  }
  return make_correlation_state(std::move(z));
}

ReferenceSpectrum homogeneous_reference_spectrum(HomogeneousKind kind, int N,
                                                 int I_size) {
  if (N < 2)
    throw std::invalid_argument("homogeneous_reference_spectrum: need N >= 2");
  ReferenceSpectrum ref;
  switch (kind) {
    case HomogeneousKind::full_sync:
      ref.eigenvalues.assign(static_cast<std::size_t>(N * (N - 1)),
                             Complex(1.0, 0.0));
      break;
    case HomogeneousKind::bipolar: {
      if (I_size != 1)
        throw std::invalid_argument(
            "homogeneous_reference_spectrum: bipolar table covers I_size = 1 only");
      const double n = static_cast<double>(N);
      ref.eigenvalues.push_back(Complex(0.0, 0.0));
      for (int i = 0; i < (N - 1) * (N - 2) - 1; ++i)
        ref.eigenvalues.push_back(Complex(-2.0 / n, 0.0));
      for (int i = 0; i < 2 * (N - 1); ++i)
        ref.eigenvalues.push_back(Complex((n - 2.0) / n, 0.0));
      break;
    }
    case HomogeneousKind::incoherent:
    case HomogeneousKind::trivial:
      ref.qualitative = true;
      ref.claim = "all Re < 0";
      break;
  }
  return ref;
}

std::vector<PerturbedEigenvalue> perturbed_eigenvalues(
    const PhaseLockedState& pls) {
  const int n = pls.size();
  std::vector<PerturbedEigenvalue> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (int flat = 0; flat < n * (n - 1); ++flat) {
    const auto [j, k] = IndexMap::flat_to_pair(flat, n);
    PerturbedEigenvalue pe;
    pe.j = j;
    pe.k = k;
    pe.re_estimate =
        0.5 * pls.lam * (std::cos(pls.alpha[k]) + std::cos(pls.alpha[j])) -
        (1.0 - std::cos(pls.alpha[j] - pls.alpha[k])) / static_cast<double>(n);
    out.push_back(pe);
  }
  return out;
}

bool assumption_check(const FrequencyEnsemble& ens) {
  const int n = ens.size();
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (j != k) diffs.push_back(ens.omega[j] - ens.omega[k]);
  std::sort(diffs.begin(), diffs.end());
  for (std::size_t i = 1; i < diffs.size(); ++i)
    if (diffs[i] - diffs[i - 1] <= 1e-12) return false;
  return true;
}

}  // namespace qsync
