#include "spinxfer/hilbert.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace spinxfer {

namespace {

constexpr int kBinomialRows = 33;

const std::array<std::array<std::uint64_t, kBinomialRows>, kBinomialRows>& binomial_table() {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, kBinomialRows>, kBinomialRows> t{};
    for (int n = 0; n < kBinomialRows; ++n) {
      t[n][0] = 1;
      for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0);
    }
    return t;
  }();
  return table;
}

void check_site(int site, int sites) {
  if (site < 1 || site > sites) {
    throw DomainError("site " + std::to_string(site) + " outside [1, " +
                      std::to_string(sites) + "]");
  }
}

// Map a configuration of sites 2..N back to a channel configuration.
constexpr SpinConfiguration without_sender(SpinConfiguration config) { return config >> 1; }
constexpr SpinConfiguration with_sender(SpinConfiguration channel, int bit) {
  return (channel << 1) | static_cast<SpinConfiguration>(bit);
}

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n || n >= kBinomialRows) return 0;
  return binomial_table()[n][k];
}

SectorBasis::SectorBasis(int sites, int excitations) : sites_(sites), excitations_(excitations) {
  if (sites < 1 || sites > kMaxSites) {
    throw DomainError("chain length " + std::to_string(sites) + " outside [1, " +
                      std::to_string(kMaxSites) + "]");
  }
  if (excitations != kFull && (excitations < 0 || excitations > sites)) {
    throw DomainError("excitation number " + std::to_string(excitations) + " outside [0, " +
                      std::to_string(sites) + "]");
  }
  if (is_full()) {
    states_.resize(std::size_t{1} << sites);
    for (std::size_t i = 0; i < states_.size(); ++i) states_[i] = static_cast<SpinConfiguration>(i);
    return;
  }
  states_.reserve(binomial(sites, excitations));
  if (excitations == 0) {
    states_.push_back(0);
    return;
  }
  // Gosper's hack enumerates fixed-weight words in increasing order.
  const std::uint64_t limit = std::uint64_t{1} << sites;
  std::uint64_t v = (std::uint64_t{1} << excitations) - 1;
  while (v < limit) {
    states_.push_back(static_cast<SpinConfiguration>(v));
    const std::uint64_t t = v | (v - 1);
    v = (t + 1) | (((~t & (t + 1)) - 1) >> (std::countr_zero(v) + 1));
  }
}

std::optional<std::size_t> SectorBasis::index_of(SpinConfiguration config) const {
  if (sites_ < 32 && (config >> sites_) != 0) return std::nullopt;
  if (is_full()) return static_cast<std::size_t>(config);
  if (excitation_count(config) != excitations_) return std::nullopt;
  // Colex rank: sum over set bits p_0 < p_1 < ... of C(p_i, i + 1).
  std::size_t rank = 0;
  int i = 0;
  for (SpinConfiguration rest = config; rest != 0; rest &= rest - 1, ++i) {
    rank += binomial(std::countr_zero(rest), i + 1);
  }
  return rank;
}

BasisPtr build_sector_basis(int sites, int excitations) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, BasisPtr> cache;
  const std::lock_guard lock(mutex);
  auto& slot = cache[{sites, excitations}];
  if (!slot) slot = std::make_shared<const SectorBasis>(sites, excitations);
  return slot;
}

BasisPtr full_basis(int sites) { return build_sector_basis(sites, SectorBasis::kFull); }

StateVector::StateVector(BasisPtr basis, ComplexVector amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
  if (!basis_) throw DomainError("state vector without basis");
  if (static_cast<std::size_t>(amplitudes_.size()) != basis_->size()) {
    throw DomainError("amplitude count " + std::to_string(amplitudes_.size()) +
                      " does not match basis size " + std::to_string(basis_->size()));
  }
}

StateVector StateVector::to_full() const {
  if (basis_->is_full()) return *this;
  ComplexVector out = ComplexVector::Zero(Eigen::Index{1} << sites());
  for (std::size_t i = 0; i < size(); ++i) out[(*basis_)[i]] = amplitudes_[i];
  return {full_basis(sites()), std::move(out)};
}

DensityOperator::DensityOperator(BasisPtr basis, ComplexMatrix matrix, bool hermitian)
    : basis_(std::move(basis)), matrix_(std::move(matrix)), hermitian_(hermitian) {
  if (!basis_) throw DomainError("density operator without basis");
  const auto n = static_cast<Eigen::Index>(basis_->size());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw DomainError("operator shape does not match basis size " + std::to_string(n));
  }
}

DensityOperator DensityOperator::from_pure(const StateVector& state) {
  const auto& a = state.amplitudes();
  return {state.basis(), a * a.adjoint(), true};
}

void DensityOperator::check_physical() const {
  if (!hermitian_) throw NumericalError("operator is not flagged as a physical state");
  const double asym = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw NumericalError("density operator not Hermitian: " + std::to_string(asym));
  const Complex tr = matrix_.trace();
  if (std::abs(tr - 1.0) > 1e-10) throw NumericalError("density operator trace != 1");
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(matrix_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -1e-9) {
    throw NumericalError("density operator has negative eigenvalue");
  }
}

QubitState::QubitState(double theta, double phi) : theta_(theta), phi_(phi) {
  constexpr double pi = std::numbers::pi;
  if (!(theta >= 0.0 && theta <= pi)) throw DomainError("theta outside [0, pi]");
  if (!(phi >= 0.0 && phi < 2.0 * pi)) throw DomainError("phi outside [0, 2 pi)");
}

Qubit QubitState::ket() const {
  const Complex phase = std::polar(1.0, phi_);
  return Qubit(std::cos(theta_ / 2), phase * std::sin(theta_ / 2));
}

Qubit QubitState::orthogonal() const {
  const Complex phase = std::polar(1.0, phi_);
  return Qubit(std::sin(theta_ / 2), -phase * std::cos(theta_ / 2));
}

StateVector product_state(const Qubit& sender, const StateVector& channel) {
  const int sites = channel.sites() + 1;
  ComplexVector out = ComplexVector::Zero(Eigen::Index{1} << sites);
  const auto& basis = *channel.basis();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Complex amp = channel.amplitudes()[i];
    out[with_sender(basis[i], 0)] = sender[0] * amp;
    out[with_sender(basis[i], 1)] = sender[1] * amp;
  }
  return {full_basis(sites), std::move(out)};
}

StateVector product_state(const QubitState& sender, const StateVector& channel) {
  return product_state(sender.ket(), channel);
}

StateVector attach_basis_ket(int sender_bit, const StateVector& channel) {
  if (sender_bit != 0 && sender_bit != 1) throw DomainError("sender bit must be 0 or 1");
  const int sites = channel.sites() + 1;
  const auto& in_basis = *channel.basis();
  if (in_basis.is_full()) {
    Qubit ket = Qubit::Zero();
    ket[sender_bit] = 1.0;
    return product_state(ket, channel);
  }
  auto basis = build_sector_basis(sites, in_basis.excitations() + sender_bit);
  ComplexVector out(static_cast<Eigen::Index>(basis->size()));
  out.setZero();
  for (std::size_t i = 0; i < in_basis.size(); ++i) {
    out[*basis->index_of(with_sender(in_basis[i], sender_bit))] = channel.amplitudes()[i];
  }
  return {std::move(basis), std::move(out)};
}

DensityOperator product_operator(const Matrix2& sender_op, const DensityOperator& channel,
                                 bool hermitian) {
  if (!channel.basis()->is_full()) throw DomainError("channel operator must use the full basis");
  const int sites = channel.sites() + 1;
  const Eigen::Index dim = Eigen::Index{1} << sites;
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  const auto& ch = channel.matrix();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Complex s = sender_op(i, j);
      if (s == Complex{}) continue;
      // Rows with site 1 = i, columns with site 1 = j form a strided slice.
      for (Eigen::Index c = 0; c < ch.cols(); ++c) {
        for (Eigen::Index r = 0; r < ch.rows(); ++r) {
          out(2 * r + i, 2 * c + j) = s * ch(r, c);
        }
      }
    }
  }
  return {full_basis(sites), std::move(out), hermitian};
}

Matrix2 reduce_to_site(const StateVector& state, int site) {
  check_site(site, state.sites());
  const auto& basis = *state.basis();
  const auto& amp = state.amplitudes();
  const SpinConfiguration mask = site_mask(site);
  Matrix2 rho = Matrix2::Zero();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const SpinConfiguration c = basis[i];
    const int bit = site_value(c, site);
    rho(bit, bit) += std::norm(amp[i]);
    if (bit == 0) {
      // Partner with the site flipped lives in a neighbouring sector, so it is
      // only present in a full basis.
      if (const auto j = basis.index_of(c | mask)) rho(0, 1) += amp[i] * std::conj(amp[*j]);
    }
  }
  rho(1, 0) = std::conj(rho(0, 1));
  return rho;
}

Matrix2 reduce_to_site(const DensityOperator& rho, int site) {
  check_site(site, rho.sites());
  const auto& basis = *rho.basis();
  const auto& m = rho.matrix();
  const SpinConfiguration mask = site_mask(site);
  Matrix2 out = Matrix2::Zero();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const SpinConfiguration c = basis[i];
    const int bit = site_value(c, site);
    const auto ii = static_cast<Eigen::Index>(i);
    out(bit, bit) += m(ii, ii);
    if (const auto j = basis.index_of(c ^ mask)) {
      out(bit, 1 - bit) += m(ii, static_cast<Eigen::Index>(*j));
    }
  }
  return out;
}

std::array<MeasurementBranch, 2> measure_site_z(const StateVector& state, int site) {
  check_site(site, state.sites());
  const auto& basis = *state.basis();
  std::array<MeasurementBranch, 2> branches{};
  std::array<ComplexVector, 2> projected{ComplexVector::Zero(state.amplitudes().size()),
                                         ComplexVector::Zero(state.amplitudes().size())};
  for (std::size_t i = 0; i < basis.size(); ++i) {
    projected[site_value(basis[i], site)][static_cast<Eigen::Index>(i)] = state.amplitudes()[i];
  }
  for (int b = 0; b < 2; ++b) {
    branches[b].outcome = b;
    branches[b].probability = projected[b].squaredNorm();
    if (branches[b].probability >= kAbsentBranchProbability) {
      projected[b] /= std::sqrt(branches[b].probability);
      branches[b].collapsed.emplace(state.basis(), std::move(projected[b]));
    }
  }
  return branches;
}

StateVector drop_sender(const StateVector& state, int sender_bit) {
  if (state.sites() < 2) throw DomainError("need at least two sites to drop the sender");
  const auto& basis = *state.basis();
  const int sites = state.sites() - 1;
  BasisPtr out_basis = basis.is_full() ? full_basis(sites)
                                       : build_sector_basis(sites, basis.excitations() - sender_bit);
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(out_basis->size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const SpinConfiguration c = basis[i];
    if (site_value(c, 1) != sender_bit) {
      if (std::abs(state.amplitudes()[i]) > 0.0) {
        throw DomainError("state has weight on the other sender value");
      }
      continue;
    }
    out[*out_basis->index_of(without_sender(c))] = state.amplitudes()[i];
  }
  return {std::move(out_basis), std::move(out)};
}

std::array<DensityBranch, 2> measure_sender_z(const DensityOperator& rho) {
  if (!rho.basis()->is_full()) throw DomainError("measure_sender_z needs a full-basis operator");
  if (rho.sites() < 2) throw DomainError("need at least two sites");
  const auto& m = rho.matrix();
  const Eigen::Index half = m.rows() / 2;
  std::array<DensityBranch, 2> branches{};
  for (int b = 0; b < 2; ++b) {
    branches[b].outcome = b;
    ComplexMatrix block(half, half);
    for (Eigen::Index c = 0; c < half; ++c) {
      for (Eigen::Index r = 0; r < half; ++r) block(r, c) = m(2 * r + b, 2 * c + b);
    }
    branches[b].probability = block.trace().real();
    if (branches[b].probability >= kAbsentBranchProbability) {
      block /= branches[b].probability;
      branches[b].channel.emplace(full_basis(rho.sites() - 1), std::move(block), true);
    }
  }
  return branches;
}

std::pair<Matrix2, Matrix2> rotation_operators(const QubitState& state) {
  const Qubit psi = state.ket();
  const Qubit tilde = state.orthogonal();
  Matrix2 r0;
  Matrix2 r1;
  r0.col(0) = psi;
  r0.col(1) = tilde;
  r1.col(0) = tilde;
  r1.col(1) = psi;
  return {r0, r1};
}

StateVector apply_single_qubit_unitary(const StateVector& state, int site, const Matrix2& u) {
  check_site(site, state.sites());
  if ((u.adjoint() * u - Matrix2::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
    std::clog << "warning: single-qubit operator on site " << site << " is not unitary\n";
  }
  const StateVector full = state.to_full();
  const auto& in = full.amplitudes();
  ComplexVector out(in.size());
  const SpinConfiguration mask = site_mask(site);
  for (SpinConfiguration c = 0; c < static_cast<SpinConfiguration>(in.size()); ++c) {
    if (c & mask) continue;
    const Complex a0 = in[c];
    const Complex a1 = in[c | mask];
    out[c] = u(0, 0) * a0 + u(0, 1) * a1;
    out[c | mask] = u(1, 0) * a0 + u(1, 1) * a1;
  }
  return {full.basis(), std::move(out)};
}

}  // namespace spinxfer
