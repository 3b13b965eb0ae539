#pragma once

// Dense reference constructions shared by the unit tests. They work on the
// full 2^N space with explicit Kronecker products and never touch the
// sector machinery.

#include "spinxfer/hilbert.hpp"

#include <random>

namespace testing_support {

using spinxfer::Complex;
using spinxfer::ComplexMatrix;
using spinxfer::ComplexVector;

inline ComplexMatrix pauli(char axis) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  switch (axis) {
    case 'x': m(0, 1) = m(1, 0) = 1.0; break;
    case 'y': m(0, 1) = Complex(0, -1); m(1, 0) = Complex(0, 1); break;
    case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: m = ComplexMatrix::Identity(2, 2);
  }
  return m;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Operator acting on `site` (1-based). Site 1 is the least significant bit,
// so it is the rightmost factor of the Kronecker product.
inline ComplexMatrix on_site(const ComplexMatrix& op, int site, int sites) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int s = sites; s >= 1; --s) out = kron(out, s == site ? op : ComplexMatrix::Identity(2, 2));
  return out;
}

inline ComplexMatrix xxz_dense(int sites, double j, double delta) {
  const Eigen::Index dim = Eigen::Index{1} << sites;
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (int k = 1; k < sites; ++k) {
    h += j * on_site(pauli('x'), k, sites) * on_site(pauli('x'), k + 1, sites);
    h += j * on_site(pauli('y'), k, sites) * on_site(pauli('y'), k + 1, sites);
    h += j * delta * on_site(pauli('z'), k, sites) * on_site(pauli('z'), k + 1, sites);
  }
  return h;
}

// Reduced state of one site by explicit summation over the other bits.
inline ComplexMatrix partial_trace_site(const ComplexMatrix& rho, int site) {
  const unsigned mask = 1u << (site - 1);
  ComplexMatrix out = ComplexMatrix::Zero(2, 2);
  for (Eigen::Index a = 0; a < rho.rows(); ++a)
    for (Eigen::Index b = 0; b < rho.cols(); ++b) {
      if ((static_cast<unsigned>(a) & ~mask) != (static_cast<unsigned>(b) & ~mask)) continue;
      out((a & mask) ? 1 : 0, (b & mask) ? 1 : 0) += rho(a, b);
    }
  return out;
}

inline ComplexVector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(gen), g(gen));
  return v.normalized();
}

inline ComplexMatrix random_density(Eigen::Index n, unsigned seed) {
  ComplexMatrix a(n, n);
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(g(gen), g(gen));
  ComplexMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

inline ComplexMatrix expm_hermitian(const ComplexMatrix& h, Complex factor) {
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const ComplexVector d = (factor * es.eigenvalues().cast<Complex>().array()).exp();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace testing_support
