#include "doctest.h"
#include "support.hpp"

#include "spinxfer/dynamics.hpp"
#include "spinxfer/spectral.hpp"

#include <cmath>
#include <numbers>

using namespace spinxfer;
namespace ts = testing_support;

TEST_CASE("two-site XX swap") {
  const auto h = build_xxz({2, 1.0, 0.0});
  const auto basis = build_sector_basis(2, 1);
  ComplexVector v = ComplexVector::Zero(2);
  v[*basis->index_of(0b01)] = 1.0;  // excitation on site 1
  for (auto method : {PropagatorConfig::Method::DenseEig, PropagatorConfig::Method::Krylov}) {
    PropagatorConfig cfg;
    cfg.method = method;
    const auto out = evolve_pure(h, StateVector(basis, v), std::numbers::pi / 4, cfg);
    CHECK(std::abs(out.amplitudes()[*basis->index_of(0b10)] - Complex(0, -1)) < 1e-12);
    CHECK(std::abs(out.amplitudes()[*basis->index_of(0b01)]) < 1e-12);
  }
}

TEST_CASE("Krylov and dense propagation agree") {
  const auto h = build_xxz({10, 1.0, 1.1});
  const auto basis = build_sector_basis(10, 4);
  const StateVector psi(basis, ts::random_vector(static_cast<Eigen::Index>(basis->size()), 8));
  PropagatorConfig dense;
  dense.method = PropagatorConfig::Method::DenseEig;
  PureEvolution a(h, psi, dense);
  PureEvolution b(h, psi);
  for (double t : {0.05, 0.5, 1.7, 4.0, 9.95}) {
    a.advance_to(t);
    b.advance_to(t);
    CHECK((a.sector_amplitudes() - b.sector_amplitudes()).norm() < 1e-9);
    CHECK(b.state().norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS(b.advance_to(1.0));
}

TEST_CASE("full-basis states evolve sector by sector") {
  const int n = 5;
  const auto h = build_xxz({n, 1.0, 0.3});
  const StateVector psi(full_basis(n), ts::random_vector(32, 4));
  const ComplexMatrix u = ts::expm_hermitian(ts::xxz_dense(n, 1.0, 0.3), Complex(0, -2.3));
  CHECK((evolve_pure(h, psi, 2.3).amplitudes() - u * psi.amplitudes()).norm() < 1e-10);
  const DensityOperator rho(full_basis(n), ts::random_density(32, 6), true);
  const auto evolved = evolve_density_unitary(h, rho, 2.3);
  CHECK((evolved.matrix() - u * rho.matrix() * u.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dissipator against explicit Pauli sandwiches") {
  const int n = 3;
  const double gamma = 0.17;
  const auto h = build_xxz({n, 1.0, 0.8});
  ComplexMatrix x = ts::random_density(8, 2);
  x(0, 5) += Complex(0.3, 0.1);  // not Hermitian on purpose
  const DensityOperator op(full_basis(n), x, false);
  const ComplexMatrix hd = ts::xxz_dense(n, 1.0, 0.8);
  ComplexMatrix ref = Complex(0, -1) * (hd * x - x * hd);
  for (int k = 1; k <= n; ++k) {
    for (char a : {'x', 'y', 'z'}) {
      const ComplexMatrix s = ts::on_site(ts::pauli(a), k, n);
      ref -= (gamma / 3.0) * (x - s * x * s);
    }
  }
  CHECK((lindblad_rhs(h, op, gamma).matrix() - ref).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("graded generator reproduces the dense right-hand side") {
  const int n = 4;
  const auto h = build_xxz({n, 1.0, 1.2});
  const ComplexMatrix x = ts::random_density(16, 12) + ts::random_density(16, 13) * Complex(0, 0.4);
  const auto dense = lindblad_rhs(h, DensityOperator(full_basis(n), x, false), 0.09).matrix();
  std::size_t covered = 0;
  for (int q = -n; q <= n; ++q) {
    const GradedLiouvillian g(h, 0.09, q);
    covered += g.size();
    ComplexVector out(static_cast<Eigen::Index>(g.size()));
    g.apply(g.gather(x), out);
    CHECK((out - g.gather(dense)).norm() < 1e-12);
    for (std::size_t e = 0; e < g.size(); ++e) {
      CHECK(excitation_count(g.row(e)) - excitation_count(g.col(e)) == q);
      CHECK(*g.index_of(g.row(e), g.col(e)) == e);
    }
  }
  CHECK(covered == 256);
}

TEST_CASE("depolarizing a product of identical qubits") {
  // The all-up state is annihilated by the commutator at every time (the
  // state stays a function of the excitation number), so each site follows
  // the single-qubit law.
  const int n = 3;
  const double gamma = 0.1;
  const auto h = build_xxz({n, 1.0, 1.0});
  ComplexMatrix x = ComplexMatrix::Zero(8, 8);
  x(0, 0) = 1.0;
  const std::vector<double> times{1.0, 4.0, 9.0};
  LindbladConfig cfg;
  cfg.gamma = gamma;
  const auto out = integrate_lindblad(h, DensityOperator(full_basis(n), x, true), times, cfg);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double p0 = 0.5 + 0.5 * std::exp(-4.0 * gamma * times[i] / 3.0);
    for (int site = 1; site <= n; ++site) {
      CHECK(std::abs(reduce_to_site(out[i], site)(0, 0).real() - p0) < 1e-10);
    }
    out[i].check_physical();
  }
}

TEST_CASE("noiseless Lindblad integration follows the unitary flow") {
  const int n = 4;
  const auto h = build_xxz({n, 1.0, 0.9});
  const DensityOperator rho(full_basis(n), ts::random_density(16, 30), true);
  LindbladConfig cfg;
  const std::vector<double> times{0.0, 0.7, 3.0, 6.1};
  const auto out = integrate_lindblad(h, rho, times, cfg);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK((out[i].matrix() - evolve_density_unitary(h, rho, times[i]).matrix()).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("Lindblad configuration checks") {
  LindbladConfig cfg;
  cfg.gamma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.gamma = 0.1;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.dt = 0.01;
  const auto big = build_xxz({11, 1.0, 1.0});
  const DensityOperator rho(full_basis(11), ComplexMatrix::Identity(2048, 2048) / 2048.0, true);
  const std::vector<double> times{1.0};
  CHECK_THROWS_AS(integrate_lindblad(big, rho, times, cfg), DomainError);
}

TEST_CASE("single qubit: closed form and fourth-order convergence") {
  const auto h = channel_hamiltonian({2, 1.0, 1.0});  // one site, H = 0
  REQUIRE(h.sites() == 1);
  ComplexMatrix x(2, 2);
  x << 0.8, Complex(0.1, 0.3), Complex(0.1, -0.3), 0.2;
  const DensityOperator rho(full_basis(1), x, true);
  const std::vector<double> times{5.0, 10.0, 20.0};
  for (double gamma : {0.05, 0.1}) {
    const auto error = [&](double dt) {
      LindbladConfig cfg;
      cfg.gamma = gamma;
      cfg.dt = dt;
      double worst = 0.0;
      const auto out = integrate_lindblad(h, rho, times, cfg);
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double decay = std::exp(-4.0 * gamma * times[i] / 3.0);
        worst = std::max(worst, std::abs(out[i].matrix()(0, 0).real() - (0.5 + 0.3 * decay)));
        // Coherences shrink at the same rate.
        worst = std::max(worst, std::abs(out[i].matrix()(0, 1) - x(0, 1) * decay));
      }
      return worst;
    };
    CHECK(error(0.005) < 1e-8);
    const double ratio = error(0.5) / error(0.25);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
  }
}
