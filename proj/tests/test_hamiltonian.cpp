#include "doctest.h"
#include "support.hpp"

#include "spinxfer/hamiltonian.hpp"

using namespace spinxfer;
namespace ts = testing_support;

TEST_CASE("sector assembly matches the Kronecker construction") {
  for (int n = 2; n <= 7; ++n) {
    for (double delta : {0.0, 0.5, 1.0, 1.1, 2.0}) {
      for (double j : {1.0, 0.37}) {
        const auto h = build_xxz({n, j, delta});
        const ComplexMatrix ref = ts::xxz_dense(n, j, delta);
        CHECK((h.dense_full().cast<Complex>() - ref).cwiseAbs().maxCoeff() < 1e-13);
      }
    }
  }
}

TEST_CASE("sector blocks are symmetric and conserve excitations") {
  const auto h = build_xxz({8, 1.0, 1.3});
  CHECK(h.covers_full_space());
  for (const auto& block : h.blocks()) {
    const int k = block.basis->excitations();
    const Eigen::MatrixXd m = h.dense_block(k);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& hop : block.hops) {
      CHECK(excitation_count((*block.basis)[hop.row]) == k);
      CHECK(hop.amplitude == doctest::Approx(2.0));
    }
  }
  const auto single = build_xxz({8, 1.0, 1.3}, 3);
  CHECK_FALSE(single.covers_full_space());
  CHECK(single.has_sector(3));
  CHECK_FALSE(single.has_sector(4));
  CHECK_THROWS_AS(single.sector(4), DomainError);
}

TEST_CASE("sparse product equals the dense product") {
  const auto h = build_xxz({9, 0.8, 0.6});
  const auto basis = build_sector_basis(9, 4);
  const StateVector v(basis, ts::random_vector(static_cast<Eigen::Index>(basis->size()), 17));
  const StateVector hv = matvec(h, v);
  const ComplexVector ref = h.dense_block(4).cast<Complex>() * v.amplitudes();
  CHECK((hv.amplitudes() - ref).norm() < 1e-12);
  const StateVector f(full_basis(9), ts::random_vector(512, 3));
  CHECK((matvec(h, f).amplitudes() - h.dense_full().cast<Complex>() * f.amplitudes()).norm() < 1e-12);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(build_xxz({1, 1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(build_xxz({21, 1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(build_xxz({4, 0.0, 1.0}), DomainError);
  try {
    build_xxz({4, 1.0, -0.5});
    FAIL("negative anisotropy accepted");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("Delta must be >= 0") != std::string::npos);
  }
}

TEST_CASE("channel Hamiltonian drops the sender") {
  const auto ch = channel_hamiltonian({6, 1.0, 0.7});
  CHECK(ch.sites() == 5);
  CHECK((ch.dense_full().cast<Complex>() - ts::xxz_dense(5, 1.0, 0.7)).cwiseAbs().maxCoeff() < 1e-13);
  const auto trivial = channel_hamiltonian({2, 1.0, 0.7});
  CHECK(trivial.sites() == 1);
  CHECK(trivial.dense_full().cwiseAbs().maxCoeff() == 0.0);
}
