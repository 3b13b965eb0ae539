#include "spinxfer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

namespace spinxfer {

namespace {

void apply_real(const SectorBlock& block, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  const auto n = static_cast<Eigen::Index>(block.diagonal.size());
  for (Eigen::Index i = 0; i < n; ++i) y[i] = block.diagonal[static_cast<std::size_t>(i)] * x[i];
  for (const Hop& h : block.hops) y[h.row] += h.amplitude * x[h.col];
}

// splitmix64; fixed seed so every run starts from the same vector.
Eigen::VectorXd start_vector(Eigen::Index n) {
  std::uint64_t state = 0x5eed5eed2024ULL;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    v[i] = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  return v.normalized();
}

void fix_phase(Eigen::VectorXd& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0) v = -v;
}

SectorGroundState dense_ground(const SparseHamiltonian& h, int excitations) {
  const Eigen::MatrixXd m = h.dense_block(excitations);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  SectorGroundState out;
  out.energy = solver.eigenvalues()[0];
  out.vector = solver.eigenvectors().col(0);
  out.residual = (m * out.vector - out.energy * out.vector).norm();
  return out;
}

}  // namespace

SectorGroundState sector_ground_state(const SparseHamiltonian& h, int excitations,
                                      const LanczosOptions& options) {
  const auto& block = h.sector(excitations);
  const auto n = static_cast<Eigen::Index>(block.diagonal.size());
  if (static_cast<std::size_t>(n) <= options.dense_threshold) return dense_ground(h, excitations);

  std::vector<Eigen::VectorXd> q;
  std::vector<double> alpha;
  std::vector<double> beta;
  q.push_back(start_vector(n));
  Eigen::VectorXd w(n);
  Eigen::VectorXd y;
  double theta = 0.0;
  double estimate = std::numeric_limits<double>::infinity();
  bool converged = false;

  for (int j = 0; j < options.max_iterations; ++j) {
    apply_real(block, q.back(), w);
    alpha.push_back(q.back().dot(w));
    w -= alpha.back() * q.back();
    if (j > 0) w -= beta.back() * q[q.size() - 2];
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& qi : q) w -= qi.dot(w) * qi;
    }
    const double b = w.norm();

    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), m - 1))
                                : Eigen::VectorXd();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    theta = tri.eigenvalues()[0];
    y = tri.eigenvectors().col(0);
    estimate = b * std::abs(y[m - 1]);

    const bool invariant = b < 1e-13 * std::max(1.0, std::abs(theta));
    if (invariant || (m >= 3 && estimate < options.tolerance * std::max(1.0, std::abs(theta)))) {
      converged = true;
      break;
    }
    beta.push_back(b);
    q.emplace_back(w / b);
  }
  if (!converged) {
    throw NumericalError("Lanczos did not converge in sector " + std::to_string(excitations) +
                         " after " + std::to_string(options.max_iterations) +
                         " iterations; residual estimate " + std::to_string(estimate));
  }

  SectorGroundState out;
  out.energy = theta;
  out.vector = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < y.size(); ++i) out.vector += y[i] * q[static_cast<std::size_t>(i)];
  out.vector.normalize();
  apply_real(block, out.vector, w);
  out.energy = out.vector.dot(w);
  out.residual = (w - out.energy * out.vector).norm();
  out.iterations = static_cast<int>(y.size());
  return out;
}

GroundState ground_state(const SparseHamiltonian& h, const LanczosOptions& options) {
  std::vector<std::pair<int, SectorGroundState>> candidates;
  for (const auto& block : h.blocks()) {
    const int n = block.basis->excitations();
    candidates.emplace_back(n, sector_ground_state(h, n, options));
  }
  double emin = std::numeric_limits<double>::infinity();
  for (const auto& [n, g] : candidates) emin = std::min(emin, g.energy);
  const double tol = options.degeneracy_tolerance * std::max(1.0, std::abs(emin));

  std::vector<int> tied;
  const SectorGroundState* chosen = nullptr;
  int chosen_sector = -1;
  for (const auto& [n, g] : candidates) {
    if (g.energy <= emin + tol) {
      tied.push_back(n);
      if (!chosen) {
        chosen = &g;
        chosen_sector = n;
      }
    }
  }
  Eigen::VectorXd v = chosen->vector;
  fix_phase(v);
  return GroundState{chosen->energy,
                     StateVector(h.sector(chosen_sector).basis, v.cast<Complex>()),
                     chosen_sector,
                     std::move(tied),
                     chosen->residual};
}

std::vector<EigenDecomposition> sector_eigendecompositions(const SparseHamiltonian& h,
                                                           std::size_t cap) {
  std::vector<EigenDecomposition> out;
  for (const auto& block : h.blocks()) {
    out.push_back(full_eigendecomposition(h, block.basis->excitations(), cap));
  }
  return out;
}

EigenDecomposition full_eigendecomposition(const SparseHamiltonian& h, std::optional<int> sector,
                                           std::size_t cap) {
  if (sector) {
    const auto& block = h.sector(*sector);
    if (block.basis->size() > cap) {
      throw DomainError("sector dimension " + std::to_string(block.basis->size()) +
                        " exceeds dense cap " + std::to_string(cap) + "; use the Krylov path");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.dense_block(*sector));
    return {block.basis, solver.eigenvalues(), solver.eigenvectors()};
  }
  if (!h.covers_full_space()) throw DomainError("full decomposition needs every sector");
  const std::size_t dim = std::size_t{1} << h.sites();
  if (dim > cap) {
    throw DomainError("dimension " + std::to_string(dim) + " exceeds dense cap " +
                      std::to_string(cap) + "; use the Krylov path");
  }
  const auto parts = sector_eigendecompositions(h, cap);
  struct Entry {
    double value;
    std::size_t part;
    Eigen::Index column;
  };
  std::vector<Entry> entries;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (Eigen::Index k = 0; k < parts[p].eigenvalues.size(); ++k) {
      entries.push_back({parts[p].eigenvalues[k], p, k});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.value < b.value; });
  const auto n = static_cast<Eigen::Index>(dim);
  EigenDecomposition out{full_basis(h.sites()), Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index col = 0; col < n; ++col) {
    const Entry& e = entries[static_cast<std::size_t>(col)];
    const auto& part = parts[e.part];
    out.eigenvalues[col] = e.value;
    for (std::size_t i = 0; i < part.basis->size(); ++i) {
      out.eigenvectors((*part.basis)[i], col) = part.eigenvectors(static_cast<Eigen::Index>(i), e.column);
    }
  }
  return out;
}

ThermalState thermal_state(const SparseHamiltonian& h, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw DomainError("inverse temperature must be finite and >= 0");
  }
  if (!h.covers_full_space()) throw DomainError("thermal state needs every sector");
  const std::size_t dim = std::size_t{1} << h.sites();
  if (dim > kDenseCap) throw DomainError("thermal state dimension exceeds dense cap");
  const auto parts = sector_eigendecompositions(h);

  double emin = std::numeric_limits<double>::infinity();
  for (const auto& p : parts) emin = std::min(emin, p.eigenvalues[0]);
  double weight_sum = 0.0;
  for (const auto& p : parts) weight_sum += (-beta * (p.eigenvalues.array() - emin)).exp().sum();

  const auto n = static_cast<Eigen::Index>(dim);
  ComplexMatrix rho = ComplexMatrix::Zero(n, n);
  for (const auto& p : parts) {
    const Eigen::VectorXd w = (-beta * (p.eigenvalues.array() - emin)).exp() / weight_sum;
    const Eigen::MatrixXd block = p.eigenvectors * w.asDiagonal() * p.eigenvectors.transpose();
    const auto& states = p.basis->states();
    for (std::size_t c = 0; c < states.size(); ++c) {
      for (std::size_t r = 0; r < states.size(); ++r) {
        rho(states[r], states[c]) = block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  return ThermalState{beta, DensityOperator(full_basis(h.sites()), std::move(rho), true),
                      -beta * emin + std::log(weight_sum)};
}

}  // namespace spinxfer
