#pragma once

#include "spinxfer/hamiltonian.hpp"

#include <optional>
#include <vector>

namespace spinxfer {

inline constexpr std::size_t kDenseCap = 4096;

/// Eigenpairs of a real symmetric operator, eigenvalues ascending.
struct EigenDecomposition {
  BasisPtr basis;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // orthonormal columns
};

struct LanczosOptions {
  double tolerance = 1e-10;
  int max_iterations = 500;
  /// Sectors up to this dimension are diagonalized densely instead.
  std::size_t dense_threshold = 256;
  /// Energies within this (relative to max(1,|E|)) count as degenerate.
  double degeneracy_tolerance = 1e-8;
};

struct SectorGroundState {
  double energy = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int iterations = 0;
};

struct GroundState {
  double energy = 0.0;
  StateVector state;
  int sector = 0;
  /// Every sector whose lowest energy ties the global minimum.
  std::vector<int> degenerate_sectors;
  double residual = 0.0;
};

/// Lowest eigenpair of one sector. Lanczos with full reorthogonalization from
/// a fixed pseudo-random start vector; throws NumericalError on
/// non-convergence with the achieved residual.
SectorGroundState sector_ground_state(const SparseHamiltonian& h, int excitations,
                                      const LanczosOptions& options = {});

/// Lowest eigenpair over all built sectors. A cross-sector tie resolves to
/// the lowest excitation number. The returned vector is real, normalized and
/// has its largest-magnitude amplitude positive.
GroundState ground_state(const SparseHamiltonian& h, const LanczosOptions& options = {});

/// Dense eigendecomposition of one sector, or of the full space (assembled
/// from the sector blocks) when `sector` is empty. Throws DomainError above
/// `cap`; use the Krylov path for larger spaces.
EigenDecomposition full_eigendecomposition(const SparseHamiltonian& h,
                                           std::optional<int> sector = std::nullopt,
                                           std::size_t cap = kDenseCap);

/// Per-sector decompositions, ordered by excitation number.
std::vector<EigenDecomposition> sector_eigendecompositions(const SparseHamiltonian& h,
                                                           std::size_t cap = kDenseCap);

struct ThermalState {
  double beta = 0.0;
  DensityOperator rho;
  double log_partition = 0.0;
};

/// e^{-beta H} / Z over the full space, K_B = 1 and T in units of J.
/// beta = infinity is not representable; use ground_state instead.
ThermalState thermal_state(const SparseHamiltonian& h, double beta);

}  // namespace spinxfer
