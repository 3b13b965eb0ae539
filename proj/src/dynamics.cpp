#include "spinxfer/dynamics.hpp"

#include "spinxfer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace spinxfer {

namespace {

constexpr Complex kI{0.0, 1.0};

// Per-step Krylov target: error per unit time, so a whole trajectory stays
// within krylov_tol.
double step_target(const PropagatorConfig& cfg, double dt) {
  return std::max(0.1 * cfg.krylov_tol * dt, 1e-15);
}

}  // namespace

void PropagatorConfig::validate() const {
  if (krylov_dim < 4) throw DomainError("krylov_dim must be >= 4");
  if (!(krylov_tol > 0.0)) throw DomainError("krylov_tol must be positive");
  if (!(max_substep > 0.0)) throw DomainError("max_substep must be positive");
}

PureEvolution::PureEvolution(const SparseHamiltonian& h, const StateVector& psi0,
                             PropagatorConfig config)
    : h_(&h), config_(config), basis_(psi0.basis()) {
  config_.validate();
  if (psi0.sites() != h.sites()) throw DomainError("state and Hamiltonian differ in chain length");
  const auto& basis = *psi0.basis();
  if (!basis.is_full()) {
    components_.push_back({&h.sector(basis.excitations()), psi0.amplitudes(), {}, {}, {}});
  } else {
    for (const auto& block : h.blocks()) {
      const auto& sb = *block.basis;
      ComplexVector amp(static_cast<Eigen::Index>(sb.size()));
      for (std::size_t i = 0; i < sb.size(); ++i) amp[static_cast<Eigen::Index>(i)] = psi0.amplitudes()[sb[i]];
      if (amp.squaredNorm() > 0.0) components_.push_back({&block, std::move(amp), {}, {}, {}});
    }
    double covered = 0.0;
    for (const auto& c : components_) covered += c.amplitudes.squaredNorm();
    if (std::abs(covered - psi0.amplitudes().squaredNorm()) > 1e-12 * std::max(1.0, covered)) {
      throw DomainError("state has weight outside the Hamiltonian's sectors");
    }
  }
  if (config_.method == PropagatorConfig::Method::DenseEig) {
    for (auto& c : components_) {
      const auto eig = full_eigendecomposition(h, c.block->basis->excitations());
      c.energies = eig.eigenvalues;
      c.vectors = eig.eigenvectors;
      c.coefficients = c.vectors.transpose().cast<Complex>() * c.amplitudes;
    }
  }
}

const ComplexVector& PureEvolution::sector_amplitudes() const {
  if (components_.size() != 1) throw DomainError("evolution is not confined to one sector");
  return components_.front().amplitudes;
}

StateVector PureEvolution::state() const {
  if (!basis_->is_full()) return {basis_, components_.front().amplitudes};
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(basis_->size()));
  for (const auto& c : components_) {
    const auto& sb = *c.block->basis;
    for (std::size_t i = 0; i < sb.size(); ++i) out[sb[i]] = c.amplitudes[static_cast<Eigen::Index>(i)];
  }
  return {basis_, std::move(out)};
}

void PureEvolution::advance_to(double t) {
  if (t < time_) throw DomainError("PureEvolution only propagates forward in time");
  const double interval = t - time_;
  if (interval == 0.0) return;
  if (config_.method == PropagatorConfig::Method::DenseEig) {
    for (auto& c : components_) {
      const ComplexVector phased =
          ((-kI * t) * c.energies.cast<Complex>().array()).exp() * c.coefficients.array();
      c.amplitudes = c.vectors.cast<Complex>() * phased;
    }
  } else {
    const auto substeps = static_cast<int>(std::ceil(interval / config_.max_substep - 1e-12));
    const double dt = interval / std::max(substeps, 1);
    for (auto& c : components_) {
      for (int s = 0; s < std::max(substeps, 1); ++s) krylov_step(c, dt);
    }
  }
  time_ = t;
}

void PureEvolution::krylov_step(Component& c, double dt) const {
  if (krylov_attempt(c, dt)) return;
  // Not converged within krylov_dim: halve and retry.
  if (dt < 1e-8) {
    throw NumericalError("Krylov propagation did not converge even for dt=" + std::to_string(dt));
  }
  krylov_step(c, dt / 2);
  krylov_step(c, dt / 2);
}

bool PureEvolution::krylov_attempt(Component& c, double dt) const {
  const double beta0 = c.amplitudes.norm();
  if (beta0 == 0.0) return true;
  const Eigen::Index n = c.amplitudes.size();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(config_.krylov_dim, n));
  const double target = step_target(config_, dt);

  std::vector<ComplexVector> v;
  v.reserve(static_cast<std::size_t>(m_max) + 1);
  v.push_back(c.amplitudes / beta0);
  std::vector<double> alpha;
  std::vector<double> beta;
  ComplexVector w(n);

  for (int j = 0; j < m_max; ++j) {
    h_->apply(*c.block, v.back().data(), w.data());
    alpha.push_back(v.back().dot(w).real());
    w -= alpha.back() * v.back();
    if (j > 0) w -= beta.back() * v[v.size() - 2];
    for (const auto& vi : v) w -= vi.dot(w) * vi;
    const double b = w.norm();

    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), m - 1))
                                : Eigen::VectorXd();
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const Eigen::MatrixXd& s = tri.eigenvectors();
    const ComplexVector phased =
        ((-kI * dt) * tri.eigenvalues().cast<Complex>().array()).exp() * s.row(0).transpose().cast<Complex>().array();
    const ComplexVector coeff = s.cast<Complex>() * phased;

    const bool exhausted = b < 1e-14 * beta0 || m == n;
    const double estimate = beta0 * b * std::abs(coeff[m - 1]);
    if (exhausted || (m >= 4 && estimate < target)) {
      ComplexVector out = ComplexVector::Zero(n);
      for (Eigen::Index i = 0; i < m; ++i) out += coeff[i] * v[static_cast<std::size_t>(i)];
      c.amplitudes = beta0 * out;
      return true;
    }
    beta.push_back(b);
    v.emplace_back(w / b);
  }
  return false;
}

StateVector evolve_pure(const SparseHamiltonian& h, const StateVector& psi, double t,
                        const PropagatorConfig& config) {
  if (t < 0.0) throw DomainError("evolve_pure expects t >= 0");
  PureEvolution evo(h, psi, config);
  evo.advance_to(t);
  return evo.state();
}

DensityOperator evolve_density_unitary(const SparseHamiltonian& h, const DensityOperator& rho,
                                       double t) {
  if (!rho.basis()->is_full() || rho.sites() != h.sites()) {
    throw DomainError("evolve_density_unitary needs a full-basis operator on the same chain");
  }
  const auto eig = full_eigendecomposition(h);
  const ComplexMatrix v = eig.eigenvectors.cast<Complex>();
  const ComplexVector phase = ((-kI * t) * eig.eigenvalues.cast<Complex>().array()).exp();
  ComplexMatrix inner = v.adjoint() * rho.matrix() * v;
  inner = phase.asDiagonal() * inner * phase.conjugate().asDiagonal();
  ComplexMatrix out = v * inner * v.adjoint();
  if (rho.hermitian()) out = 0.5 * (out + out.adjoint()).eval();
  return {rho.basis(), std::move(out), rho.hermitian()};
}

void LindbladConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be >= 0");
  if (!(dt > 0.0)) throw DomainError("Lindblad dt must be positive");
  if (!(trace_drift_tol > 0.0)) throw DomainError("trace_drift_tol must be positive");
}

DensityOperator lindblad_rhs(const SparseHamiltonian& h, const DensityOperator& x, double gamma) {
  if (!x.basis()->is_full() || x.sites() != h.sites()) {
    throw DomainError("lindblad_rhs needs a full-basis operator on the same chain");
  }
  const int sites = h.sites();
  const SectorBlock terms = h.full_space_terms();
  const auto& xm = x.matrix();
  const Eigen::Index dim = xm.rows();

  // -i (H X - X H); H is real symmetric.
  ComplexMatrix out(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    for (Eigen::Index a = 0; a < dim; ++a) {
      out(a, b) = -kI * (terms.diagonal[static_cast<std::size_t>(a)] -
                         terms.diagonal[static_cast<std::size_t>(b)]) * xm(a, b);
    }
  }
  for (const Hop& hop : terms.hops) {
    // (H X)_{row,:} += H_{row,col} X_{col,:};  (X H)_{:,col} += X_{:,row} H_{row,col}
    out.row(hop.row) += (-kI * hop.amplitude) * xm.row(hop.col);
    out.col(hop.col) += (kI * hop.amplitude) * xm.col(hop.row);
  }

  // s^x X s^x, s^y X s^y and s^z X s^z written with explicit Pauli matrices.
  const Matrix2 sx{{0, 1}, {1, 0}};
  const Matrix2 sy{{0, -kI}, {kI, 0}};
  const Matrix2 sz{{1, 0}, {0, -1}};
  if (gamma != 0.0) {
    ComplexMatrix sandwich = ComplexMatrix::Zero(dim, dim);
    for (int site = 1; site <= sites; ++site) {
      const SpinConfiguration mask = site_mask(site);
      for (const Matrix2* s : {&sx, &sy, &sz}) {
        for (Eigen::Index b = 0; b < dim; ++b) {
          for (Eigen::Index a = 0; a < dim; ++a) {
            // (S X S)_{ab} = sum_{a'b'} S_{a a'} X_{a' b'} S_{b' b}, S acting on `site`.
            const int ia = site_value(static_cast<SpinConfiguration>(a), site);
            const int ib = site_value(static_cast<SpinConfiguration>(b), site);
            Complex acc{};
            for (int ja = 0; ja < 2; ++ja) {
              const Complex sa = (*s)(ia, ja);
              if (sa == Complex{}) continue;
              const Eigen::Index ap = ja == ia ? a : (a ^ mask);
              for (int jb = 0; jb < 2; ++jb) {
                const Complex sb = (*s)(jb, ib);
                if (sb == Complex{}) continue;
                const Eigen::Index bp = jb == ib ? b : (b ^ mask);
                acc += sa * xm(ap, bp) * sb;
              }
            }
            sandwich(a, b) += acc;
          }
        }
      }
    }
    out -= (gamma / 3.0) * (3.0 * sites * xm - sandwich);
  }
  return {x.basis(), std::move(out), false};
}

GradedLiouvillian::GradedLiouvillian(const SparseHamiltonian& h, double gamma, int grade)
    : sites_(h.sites()), grade_(grade) {
  if (grade < -sites_ || grade > sites_) throw DomainError("operator grade out of range");
  const SpinConfiguration dim = SpinConfiguration{1} << sites_;
  column_offset_.assign(static_cast<std::size_t>(dim) + 1, 0);
  for (SpinConfiguration b = 0; b < dim; ++b) {
    const int target = excitation_count(b) + grade;
    column_offset_[b + 1] = column_offset_[b];
    if (target < 0 || target > sites_) continue;
    const auto basis = build_sector_basis(sites_, target);
    for (const SpinConfiguration a : basis->states()) {
      rows_.push_back(a);
      cols_.push_back(b);
    }
    column_offset_[b + 1] += basis->size();
  }

  const SectorBlock terms = h.full_space_terms();
  std::vector<std::size_t> hop_start(static_cast<std::size_t>(dim) + 1, 0);
  for (const Hop& hop : terms.hops) ++hop_start[hop.row + 1];
  for (std::size_t i = 0; i < dim; ++i) hop_start[i + 1] += hop_start[i];

  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(rows_.size() * static_cast<std::size_t>(2 * sites_ + 1));
  const double rate = gamma / 3.0;
  for (std::size_t e = 0; e < rows_.size(); ++e) {
    const SpinConfiguration a = rows_[e];
    const SpinConfiguration b = cols_[e];
    const auto r = static_cast<Eigen::Index>(e);
    const int differing = excitation_count(a ^ b);
    // Per site: 4 X_ab where a, b differ; 2 (X_ab - X_{a^k b^k}) where they agree.
    const Complex diag = -kI * (terms.diagonal[a] - terms.diagonal[b]) -
                         rate * (2.0 * sites_ + 2.0 * differing);
    triplets.emplace_back(r, r, diag);
    for (std::size_t k = hop_start[a]; k < hop_start[a + 1]; ++k) {
      const Hop& hop = terms.hops[k];
      triplets.emplace_back(r, static_cast<Eigen::Index>(*index_of(hop.col, b)), -kI * hop.amplitude);
    }
    for (std::size_t k = hop_start[b]; k < hop_start[b + 1]; ++k) {
      const Hop& hop = terms.hops[k];
      triplets.emplace_back(r, static_cast<Eigen::Index>(*index_of(a, hop.col)), kI * hop.amplitude);
    }
    if (gamma != 0.0) {
      for (int site = 1; site <= sites_; ++site) {
        const SpinConfiguration mask = site_mask(site);
        if ((a ^ b) & mask) continue;
        triplets.emplace_back(r, static_cast<Eigen::Index>(*index_of(a ^ mask, b ^ mask)), 2.0 * rate);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(rows_.size());
  generator_.resize(n, n);
  generator_.setFromTriplets(triplets.begin(), triplets.end());
}

std::optional<std::size_t> GradedLiouvillian::index_of(SpinConfiguration a, SpinConfiguration b) const {
  if (excitation_count(a) - excitation_count(b) != grade_) return std::nullopt;
  const auto basis = build_sector_basis(sites_, excitation_count(a));
  const auto rank = basis->index_of(a);
  if (!rank) return std::nullopt;
  return column_offset_[b] + *rank;
}

ComplexVector GradedLiouvillian::gather(const ComplexMatrix& x) const {
  ComplexVector v(static_cast<Eigen::Index>(rows_.size()));
  for (std::size_t e = 0; e < rows_.size(); ++e) v[static_cast<Eigen::Index>(e)] = x(rows_[e], cols_[e]);
  return v;
}

void GradedLiouvillian::scatter(const ComplexVector& v, ComplexMatrix& x) const {
  for (std::size_t e = 0; e < rows_.size(); ++e) x(rows_[e], cols_[e]) = v[static_cast<Eigen::Index>(e)];
}

namespace {

struct GradedComponent {
  GradedLiouvillian generator;
  ComplexVector state;
  std::vector<std::size_t> diagonal_entries;  // grade 0 only
  // Index into the partner grade (-q) of the adjoint entry, for hermitization.
  std::vector<std::size_t> adjoint_index;
  int partner = -1;
};

void rk4_step(GradedComponent& c, double h, ComplexVector& k1, ComplexVector& k2,
              ComplexVector& k3, ComplexVector& k4, ComplexVector& tmp) {
  c.generator.apply(c.state, k1);
  tmp = c.state + (0.5 * h) * k1;
  c.generator.apply(tmp, k2);
  tmp = c.state + (0.5 * h) * k2;
  c.generator.apply(tmp, k3);
  tmp = c.state + h * k3;
  c.generator.apply(tmp, k4);
  c.state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void hermitize(std::vector<GradedComponent>& parts) {
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto& c = parts[p];
    if (c.partner < 0 || static_cast<std::size_t>(c.partner) < p) continue;
    auto& d = parts[static_cast<std::size_t>(c.partner)];
    ComplexVector mixed(c.state.size());
    for (Eigen::Index e = 0; e < c.state.size(); ++e) {
      mixed[e] = 0.5 * (c.state[e] + std::conj(d.state[static_cast<Eigen::Index>(c.adjoint_index[static_cast<std::size_t>(e)])]));
    }
    c.state = mixed;
    if (&c != &d) {
      for (Eigen::Index e = 0; e < d.state.size(); ++e) {
        d.state[e] = std::conj(c.state[static_cast<Eigen::Index>(d.adjoint_index[static_cast<std::size_t>(e)])]);
      }
    }
  }
}

Complex graded_trace(const std::vector<GradedComponent>& parts) {
  Complex tr{};
  for (const auto& c : parts) {
    for (const std::size_t e : c.diagonal_entries) tr += c.state[static_cast<Eigen::Index>(e)];
  }
  return tr;
}

}  // namespace

void integrate_lindblad(const SparseHamiltonian& h, const DensityOperator& x0,
                        std::span<const double> times, const LindbladConfig& config,
                        const LindbladObserver& observer) {
  config.validate();
  if (h.sites() > config.max_sites) {
    throw DomainError("Lindblad integration capped at N=" + std::to_string(config.max_sites));
  }
  if (!x0.basis()->is_full() || x0.sites() != h.sites()) {
    throw DomainError("integrate_lindblad needs a full-basis operator on the same chain");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) {
      throw DomainError("Lindblad time grid must be ascending and non-negative");
    }
  }

  // The flow preserves the grade, so each homogeneous part evolves alone.
  std::vector<GradedComponent> parts;
  std::map<int, std::size_t> slot;
  std::vector<bool> present(2 * static_cast<std::size_t>(h.sites()) + 1, false);
  const auto& xm = x0.matrix();
  for (Eigen::Index b = 0; b < xm.cols(); ++b) {
    for (Eigen::Index a = 0; a < xm.rows(); ++a) {
      if (xm(a, b) == Complex{}) continue;
      const int q = excitation_count(static_cast<SpinConfiguration>(a)) -
                    excitation_count(static_cast<SpinConfiguration>(b));
      present[static_cast<std::size_t>(q + h.sites())] = true;
    }
  }
  for (int q = -h.sites(); q <= h.sites(); ++q) {
    if (!present[static_cast<std::size_t>(q + h.sites())]) continue;
    GradedLiouvillian gen(h, config.gamma, q);
    ComplexVector v = gen.gather(x0.matrix());
    if (v.cwiseAbs().maxCoeff() == 0.0) continue;
    GradedComponent c{std::move(gen), std::move(v), {}, {}, -1};
    if (q == 0) {
      for (std::size_t e = 0; e < c.generator.size(); ++e) {
        if (c.generator.row(e) == c.generator.col(e)) c.diagonal_entries.push_back(e);
      }
    }
    slot[q] = parts.size();
    parts.push_back(std::move(c));
  }
  const bool hermitize_steps = x0.hermitian() && config.hermitize_each_step;
  if (hermitize_steps) {
    for (auto& [q, p] : slot) {
      const auto it = slot.find(-q);
      if (it == slot.end()) continue;
      auto& c = parts[p];
      const auto& other = parts[it->second].generator;
      c.partner = static_cast<int>(it->second);
      c.adjoint_index.resize(c.generator.size());
      for (std::size_t e = 0; e < c.generator.size(); ++e) {
        c.adjoint_index[e] = *other.index_of(c.generator.col(e), c.generator.row(e));
      }
    }
  }

  const Complex trace0 = x0.trace();
  std::size_t largest = 0;
  for (const auto& c : parts) largest = std::max(largest, c.generator.size());
  const auto cap = static_cast<Eigen::Index>(largest);
  ComplexVector k1(cap), k2(cap), k3(cap), k4(cap), tmp(cap);

  const auto step_all = [&](double step) {
    for (auto& c : parts) {
      const Eigen::Index n = c.state.size();
      k1.resize(n), k2.resize(n), k3.resize(n), k4.resize(n), tmp.resize(n);
      rk4_step(c, step, k1, k2, k3, k4, tmp);
    }
    if (hermitize_steps) hermitize(parts);
  };

  const Eigen::Index dim = x0.matrix().rows();
  double now = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double remaining = times[i] - now;
    while (remaining > config.dt * (1.0 + 1e-9)) {
      step_all(config.dt);
      remaining -= config.dt;
    }
    if (remaining > 1e-15) step_all(remaining);
    now = times[i];

    const Complex tr = graded_trace(parts);
    if (std::abs(tr - trace0) > config.trace_drift_tol) {
      throw NumericalError("Lindblad trace drifted by " + std::to_string(std::abs(tr - trace0)) +
                           " at t=" + std::to_string(now) + "; reduce dt");
    }
    ComplexMatrix dense = ComplexMatrix::Zero(dim, dim);
    for (const auto& c : parts) c.generator.scatter(c.state, dense);
    observer(i, DensityOperator(x0.basis(), std::move(dense), x0.hermitian()));
  }
}

std::vector<DensityOperator> integrate_lindblad(const SparseHamiltonian& h,
                                                const DensityOperator& x0,
                                                std::span<const double> times,
                                                const LindbladConfig& config) {
  std::vector<DensityOperator> out;
  out.reserve(times.size());
  integrate_lindblad(h, x0, times, config,
                     [&](std::size_t, const DensityOperator& x) { out.push_back(x); });
  return out;
}

}  // namespace spinxfer
