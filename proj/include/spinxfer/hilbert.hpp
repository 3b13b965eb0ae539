#pragma once

// Bitstring-indexed Hilbert space of an open spin-1/2 chain.
//
// Site s (1-based) is stored in bit s-1 of a SpinConfiguration, so site 1 is
// the lowest-order bit. Bit value 0 is |0> (spin up, sigma_z = +1) and bit
// value 1 is |1> (spin down, one excitation).

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spinxfer {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Qubit = Eigen::Vector2cd;
using Matrix2 = Eigen::Matrix2cd;

/// Invalid argument in the physics domain (bad site, sector, parameter).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to meet its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxSites = 20;

using SpinConfiguration = std::uint32_t;

constexpr SpinConfiguration site_mask(int site) {
  return SpinConfiguration{1} << (site - 1);
}

constexpr int site_value(SpinConfiguration config, int site) {
  return static_cast<int>((config >> (site - 1)) & 1u);
}

constexpr int excitation_count(SpinConfiguration config) {
  return std::popcount(config);
}

/// Ordered list of configurations with a fixed excitation number, or of all
/// 2^N configurations for the full basis. States are strictly increasing.
class SectorBasis {
 public:
  static constexpr int kFull = -1;

  SectorBasis(int sites, int excitations);

  int sites() const noexcept { return sites_; }
  /// Excitation number, or kFull.
  int excitations() const noexcept { return excitations_; }
  bool is_full() const noexcept { return excitations_ == kFull; }
  std::size_t size() const noexcept { return states_.size(); }

  SpinConfiguration operator[](std::size_t index) const { return states_[index]; }
  std::span<const SpinConfiguration> states() const noexcept { return states_; }

  /// Ordinal of `config`, or nullopt when it is not a member of this basis.
  std::optional<std::size_t> index_of(SpinConfiguration config) const;

  bool operator==(const SectorBasis& other) const noexcept {
    return sites_ == other.sites_ && excitations_ == other.excitations_;
  }

 private:
  int sites_;
  int excitations_;
  std::vector<SpinConfiguration> states_;
};

using BasisPtr = std::shared_ptr<const SectorBasis>;

/// Cached, immutable sector basis. Throws DomainError for an invalid sector
/// or when `sites` exceeds kMaxSites.
BasisPtr build_sector_basis(int sites, int excitations);
BasisPtr full_basis(int sites);

std::uint64_t binomial(int n, int k);

/// Amplitudes over a (sector or full) basis.
class StateVector {
 public:
  StateVector(BasisPtr basis, ComplexVector amplitudes);

  const BasisPtr& basis() const noexcept { return basis_; }
  const ComplexVector& amplitudes() const noexcept { return amplitudes_; }
  ComplexVector& amplitudes() noexcept { return amplitudes_; }
  int sites() const noexcept { return basis_->sites(); }
  std::size_t size() const noexcept { return basis_->size(); }

  double norm() const { return amplitudes_.norm(); }
  StateVector to_full() const;

 private:
  BasisPtr basis_;
  ComplexVector amplitudes_;
};

/// Square operator over a basis. `hermitian` marks a physical state; the
/// Omega_01 blocks used by the mixed-state fidelity are not.
class DensityOperator {
 public:
  DensityOperator(BasisPtr basis, ComplexMatrix matrix, bool hermitian);

  static DensityOperator from_pure(const StateVector& state);

  const BasisPtr& basis() const noexcept { return basis_; }
  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  ComplexMatrix& matrix() noexcept { return matrix_; }
  bool hermitian() const noexcept { return hermitian_; }
  int sites() const noexcept { return basis_->sites(); }
  std::size_t size() const noexcept { return basis_->size(); }
  Complex trace() const { return matrix_.trace(); }

  /// Throws NumericalError unless Hermitian, unit trace (1e-10) and positive
  /// semidefinite (eigenvalues >= -1e-9).
  void check_physical() const;

 private:
  BasisPtr basis_;
  ComplexMatrix matrix_;
  bool hermitian_;
};

/// cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>, theta in [0, pi],
/// phi in [0, 2 pi).
class QubitState {
 public:
  QubitState(double theta, double phi);

  double theta() const noexcept { return theta_; }
  double phi() const noexcept { return phi_; }

  Qubit ket() const;
  /// sin(theta/2)|0> - e^{i phi} cos(theta/2)|1>.
  Qubit orthogonal() const;

 private:
  double theta_;
  double phi_;
};

/// sender (site 1) tensor channel (sites 2..N), in the full basis.
StateVector product_state(const Qubit& sender, const StateVector& channel);
StateVector product_state(const QubitState& sender, const StateVector& channel);

/// |bit> tensor channel. Stays in a sector basis when the channel does.
StateVector attach_basis_ket(int sender_bit, const StateVector& channel);

/// sender_op tensor channel over the full basis of N = channel.sites()+1.
DensityOperator product_operator(const Matrix2& sender_op, const DensityOperator& channel,
                                 bool hermitian);

/// Reduced 2x2 density matrix of one site (partial trace over the rest).
Matrix2 reduce_to_site(const StateVector& state, int site);
Matrix2 reduce_to_site(const DensityOperator& rho, int site);

struct MeasurementBranch {
  int outcome = 0;
  double probability = 0.0;
  /// Normalized post-measurement state; empty when probability < 1e-14.
  std::optional<StateVector> collapsed;
};

inline constexpr double kAbsentBranchProbability = 1e-14;

/// Projective sigma_z measurement of `site` on a normalized state.
std::array<MeasurementBranch, 2> measure_site_z(const StateVector& state, int site);

/// Channel part (sites 2..N) of a state whose site 1 is fixed to `sender_bit`.
StateVector drop_sender(const StateVector& state, int sender_bit);

struct DensityBranch {
  int outcome = 0;
  double probability = 0.0;
  /// Normalized channel operator on sites 2..N; empty for an absent branch.
  std::optional<DensityOperator> channel;
};

/// sigma_z measurement of site 1 of a full-basis density operator,
/// rho_b = <b|rho|b>_1 / p_b.
std::array<DensityBranch, 2> measure_sender_z(const DensityOperator& rho);

/// R0 = |psi><0| + |psi~><1|,  R1 = |psi~><0| + |psi><1|.
std::pair<Matrix2, Matrix2> rotation_operators(const QubitState& state);

/// U acting on `site`; returns a full-basis vector. Warns on std::clog when
/// U is not unitary to 1e-10.
StateVector apply_single_qubit_unitary(const StateVector& state, int site, const Matrix2& u);

}  // namespace spinxfer
