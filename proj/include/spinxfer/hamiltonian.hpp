#pragma once

// Open-boundary XXZ chain in the Pauli convention,
//
//   H = J sum_k (X_k X_{k+1} + Y_k Y_{k+1} + Delta Z_k Z_{k+1}),
//
// stored block-diagonally by excitation number. A flip-flop between adjacent
// antiparallel spins has amplitude 2J; the diagonal is J Delta sum_k z_k z_{k+1}
// with z = +1 for |0> and -1 for |1>.

#include "spinxfer/hilbert.hpp"

#include <optional>
#include <span>
#include <vector>

namespace spinxfer {

struct XXZParams {
  int sites = 2;
  double coupling = 1.0;    // J > 0
  double anisotropy = 1.0;  // Delta >= 0

  /// Throws DomainError naming the violated restriction.
  void validate() const;
};

struct Hop {
  std::uint32_t row;
  std::uint32_t col;
  double amplitude;
};

/// One excitation sector: dense diagonal plus a row-sorted hopping list that
/// contains both (i, j) and (j, i).
struct SectorBlock {
  BasisPtr basis;
  std::vector<double> diagonal;
  std::vector<Hop> hops;
};

class SparseHamiltonian {
 public:
  SparseHamiltonian(int sites, double coupling, double anisotropy, std::vector<SectorBlock> blocks);

  int sites() const noexcept { return sites_; }
  double coupling() const noexcept { return coupling_; }
  double anisotropy() const noexcept { return anisotropy_; }

  std::span<const SectorBlock> blocks() const noexcept { return blocks_; }
  bool has_sector(int excitations) const;
  /// Throws DomainError when the sector was not built.
  const SectorBlock& sector(int excitations) const;
  bool covers_full_space() const noexcept { return blocks_.size() == std::size_t(sites_) + 1; }

  /// y = H_block x for raw amplitude arrays of the block's dimension.
  void apply(const SectorBlock& block, const Complex* x, Complex* y) const;

  Eigen::MatrixXd dense_block(int excitations) const;
  /// Dense 2^N x 2^N matrix in configuration order; needs every sector.
  Eigen::MatrixXd dense_full() const;

  /// Diagonal and hopping list indexed by configuration (full space).
  SectorBlock full_space_terms() const;

 private:
  int sites_;
  double coupling_;
  double anisotropy_;
  std::vector<SectorBlock> blocks_;
  std::vector<int> sector_slot_;  // excitation number -> index in blocks_, or -1
};

/// All sectors when `sector` is empty.
SparseHamiltonian build_xxz(const XXZParams& params, std::optional<int> sector = std::nullopt);

/// XXZ chain on sites 2..N with the same J and Delta. For N = 2 the channel
/// is a single free site and the result is the 2x2 zero operator.
SparseHamiltonian channel_hamiltonian(const XXZParams& params);

StateVector matvec(const SparseHamiltonian& h, const StateVector& v);

}  // namespace spinxfer
