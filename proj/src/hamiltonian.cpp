#include "spinxfer/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spinxfer {

namespace {

// Any site count is admitted internally so the single-site channel of an
// N = 2 chain is representable.
SectorBlock build_block(int sites, double coupling, double anisotropy, int excitations) {
  SectorBlock block;
  block.basis = build_sector_basis(sites, excitations);
  const auto& basis = *block.basis;
  block.diagonal.resize(basis.size());
  block.hops.reserve(basis.size() * static_cast<std::size_t>(std::max(sites - 1, 0)) / 2);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const SpinConfiguration c = basis[i];
    double ising = 0.0;
    for (int k = 1; k < sites; ++k) {
      const bool parallel = site_value(c, k) == site_value(c, k + 1);
      ising += parallel ? 1.0 : -1.0;
      if (!parallel) {
        const SpinConfiguration flipped = c ^ (site_mask(k) | site_mask(k + 1));
        block.hops.push_back({static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(*basis.index_of(flipped)),
                              2.0 * coupling});
      }
    }
    block.diagonal[i] = coupling * anisotropy * ising;
  }
  return block;
}

}  // namespace

void XXZParams::validate() const {
  if (sites < 2 || sites > kMaxSites) {
    throw DomainError("chain length N=" + std::to_string(sites) + " outside [2, " +
                      std::to_string(kMaxSites) + "]");
  }
  if (!(coupling > 0.0) || !std::isfinite(coupling)) {
    throw DomainError("exchange coupling J must be positive (antiferromagnetic regime), got " +
                      std::to_string(coupling));
  }
  if (!(anisotropy >= 0.0) || !std::isfinite(anisotropy)) {
    throw DomainError("anisotropy Delta must be >= 0 (only the Delta > 0 side is modelled), got " +
                      std::to_string(anisotropy));
  }
}

SparseHamiltonian::SparseHamiltonian(int sites, double coupling, double anisotropy,
                                     std::vector<SectorBlock> blocks)
    : sites_(sites),
      coupling_(coupling),
      anisotropy_(anisotropy),
      blocks_(std::move(blocks)),
      sector_slot_(static_cast<std::size_t>(sites) + 1, -1) {
  std::sort(blocks_.begin(), blocks_.end(), [](const SectorBlock& a, const SectorBlock& b) {
    return a.basis->excitations() < b.basis->excitations();
  });
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& basis = *blocks_[i].basis;
    if (basis.sites() != sites || basis.is_full()) {
      throw DomainError("Hamiltonian block does not match the chain");
    }
    sector_slot_[static_cast<std::size_t>(basis.excitations())] = static_cast<int>(i);
  }
}

bool SparseHamiltonian::has_sector(int excitations) const {
  return excitations >= 0 && excitations <= sites_ &&
         sector_slot_[static_cast<std::size_t>(excitations)] >= 0;
}

const SectorBlock& SparseHamiltonian::sector(int excitations) const {
  if (!has_sector(excitations)) {
    throw DomainError("sector " + std::to_string(excitations) + " not present in Hamiltonian");
  }
  return blocks_[static_cast<std::size_t>(sector_slot_[static_cast<std::size_t>(excitations)])];
}

void SparseHamiltonian::apply(const SectorBlock& block, const Complex* x, Complex* y) const {
  const std::size_t n = block.diagonal.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = block.diagonal[i] * x[i];
  for (const Hop& h : block.hops) y[h.row] += h.amplitude * x[h.col];
}

Eigen::MatrixXd SparseHamiltonian::dense_block(int excitations) const {
  const auto& block = sector(excitations);
  const auto n = static_cast<Eigen::Index>(block.diagonal.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = block.diagonal[static_cast<std::size_t>(i)];
  for (const Hop& h : block.hops) m(h.row, h.col) += h.amplitude;
  return m;
}

Eigen::MatrixXd SparseHamiltonian::dense_full() const {
  const SectorBlock terms = full_space_terms();
  const auto n = static_cast<Eigen::Index>(terms.diagonal.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = terms.diagonal[static_cast<std::size_t>(i)];
  for (const Hop& h : terms.hops) m(h.row, h.col) += h.amplitude;
  return m;
}

SectorBlock SparseHamiltonian::full_space_terms() const {
  if (!covers_full_space()) throw DomainError("full-space view needs every sector");
  SectorBlock out;
  out.basis = full_basis(sites_);
  out.diagonal.assign(out.basis->size(), 0.0);
  for (const auto& block : blocks_) {
    const auto& basis = *block.basis;
    for (std::size_t i = 0; i < basis.size(); ++i) out.diagonal[basis[i]] = block.diagonal[i];
    for (const Hop& h : block.hops) out.hops.push_back({basis[h.row], basis[h.col], h.amplitude});
  }
  std::sort(out.hops.begin(), out.hops.end(), [](const Hop& a, const Hop& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return out;
}

SparseHamiltonian build_xxz(const XXZParams& params, std::optional<int> sector) {
  params.validate();
  std::vector<SectorBlock> blocks;
  if (sector) {
    blocks.push_back(build_block(params.sites, params.coupling, params.anisotropy, *sector));
  } else {
    for (int n = 0; n <= params.sites; ++n) {
      blocks.push_back(build_block(params.sites, params.coupling, params.anisotropy, n));
    }
  }
  return {params.sites, params.coupling, params.anisotropy, std::move(blocks)};
}

SparseHamiltonian channel_hamiltonian(const XXZParams& params) {
  params.validate();
  const int sites = params.sites - 1;
  std::vector<SectorBlock> blocks;
  for (int n = 0; n <= sites; ++n) {
    blocks.push_back(build_block(sites, params.coupling, params.anisotropy, n));
  }
  return {sites, params.coupling, params.anisotropy, std::move(blocks)};
}

StateVector matvec(const SparseHamiltonian& h, const StateVector& v) {
  const auto& basis = *v.basis();
  if (basis.sites() != h.sites()) throw DomainError("state and Hamiltonian differ in chain length");
  if (!basis.is_full()) {
    const auto& block = h.sector(basis.excitations());
    ComplexVector out(v.amplitudes().size());
    h.apply(block, v.amplitudes().data(), out.data());
    return {v.basis(), std::move(out)};
  }
  ComplexVector out = ComplexVector::Zero(v.amplitudes().size());
  for (const auto& block : h.blocks()) {
    const auto& sb = *block.basis;
    ComplexVector x(static_cast<Eigen::Index>(sb.size()));
    ComplexVector y(x.size());
    for (std::size_t i = 0; i < sb.size(); ++i) x[static_cast<Eigen::Index>(i)] = v.amplitudes()[sb[i]];
    h.apply(block, x.data(), y.data());
    for (std::size_t i = 0; i < sb.size(); ++i) out[sb[i]] = y[static_cast<Eigen::Index>(i)];
  }
  if (!h.covers_full_space()) {
    // Components outside the stored sectors would silently vanish otherwise.
    for (std::size_t c = 0; c < basis.size(); ++c) {
      if (!h.has_sector(excitation_count(static_cast<SpinConfiguration>(c))) &&
          v.amplitudes()[static_cast<Eigen::Index>(c)] != Complex{}) {
        throw DomainError("state has weight outside the Hamiltonian's sectors");
      }
    }
  }
  return {v.basis(), std::move(out)};
}

}  // namespace spinxfer
