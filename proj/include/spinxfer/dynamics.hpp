#pragma once

// Time evolution: pure states (dense eigenbasis or Krylov), density operators
// under the unitary flow, and the isotropic depolarizing Lindblad equation
//
//   dX/dt = -i [H, X] - (gamma / 3) sum_k sum_{a = x,y,z} (X - s^a_k X s^a_k)
//
// integrated with fixed-step classical RK4. Times are in units of 1/J.

#include "spinxfer/hamiltonian.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <span>
#include <vector>

namespace spinxfer {

struct PropagatorConfig {
  enum class Method { DenseEig, Krylov };

  Method method = Method::Krylov;
  int krylov_dim = 30;
  double krylov_tol = 1e-10;
  /// Long intervals are split into uniform substeps no longer than this.
  double max_substep = 1.0;

  void validate() const;
};

/// Incremental propagation of one pure state. The Hamiltonian must outlive
/// the object. Full-basis states are split into their sector components.
class PureEvolution {
 public:
  PureEvolution(const SparseHamiltonian& h, const StateVector& psi0, PropagatorConfig config = {});

  /// Propagate forward to absolute time t (t >= time()).
  void advance_to(double t);
  double time() const noexcept { return time_; }
  StateVector state() const;

  /// Amplitudes of a single-sector evolution (no copy).
  const ComplexVector& sector_amplitudes() const;

 private:
  struct Component {
    const SectorBlock* block;
    ComplexVector amplitudes;
    // Dense-eig path only.
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
    ComplexVector coefficients;
  };

  void krylov_step(Component& c, double dt) const;
  bool krylov_attempt(Component& c, double dt) const;

  const SparseHamiltonian* h_;
  PropagatorConfig config_;
  BasisPtr basis_;
  std::vector<Component> components_;
  double time_ = 0.0;
};

StateVector evolve_pure(const SparseHamiltonian& h, const StateVector& psi, double t,
                        const PropagatorConfig& config = {});

/// e^{-iHt} rho e^{iHt} through the dense eigenbasis (dimension cap applies).
DensityOperator evolve_density_unitary(const SparseHamiltonian& h, const DensityOperator& rho,
                                       double t);

struct LindbladConfig {
  double gamma = 0.0;
  double dt = 0.005;
  /// X <- (X + X^dagger)/2 after every step; only for Hermitian-flagged input.
  bool hermitize_each_step = true;
  double trace_drift_tol = 1e-8;
  int max_sites = 10;

  void validate() const;
};

/// Right-hand side of the Lindblad equation for a general (not necessarily
/// Hermitian) full-basis operator, evaluated entrywise on the dense matrix.
DensityOperator lindblad_rhs(const SparseHamiltonian& h, const DensityOperator& x, double gamma);

/// The Lindbladian restricted to operators of one grade q, i.e. entries
/// X_ab with popcount(a) - popcount(b) = q. The isotropic dissipator and the
/// commutator with an excitation-conserving H both preserve the grade.
class GradedLiouvillian {
 public:
  GradedLiouvillian(const SparseHamiltonian& h, double gamma, int grade);

  int grade() const noexcept { return grade_; }
  std::size_t size() const noexcept { return rows_.size(); }
  std::uint32_t row(std::size_t e) const { return rows_[e]; }
  std::uint32_t col(std::size_t e) const { return cols_[e]; }
  /// Compact index of entry (a, b), or nullopt when it has another grade.
  std::optional<std::size_t> index_of(SpinConfiguration a, SpinConfiguration b) const;

  ComplexVector gather(const ComplexMatrix& x) const;
  void scatter(const ComplexVector& v, ComplexMatrix& x) const;
  void apply(const ComplexVector& in, ComplexVector& out) const { out.noalias() = generator_ * in; }

 private:
  int sites_;
  int grade_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> cols_;
  std::vector<std::size_t> column_offset_;
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> generator_;
};

using LindbladObserver = std::function<void(std::size_t, const DensityOperator&)>;

/// Fixed-step RK4 from t = 0, landing exactly on each ascending grid time
/// (the last step of each interval may be shorter). Throws NumericalError if
/// the trace drifts from its initial value by more than trace_drift_tol.
void integrate_lindblad(const SparseHamiltonian& h, const DensityOperator& x0,
                        std::span<const double> times, const LindbladConfig& config,
                        const LindbladObserver& observer);

std::vector<DensityOperator> integrate_lindblad(const SparseHamiltonian& h,
                                                const DensityOperator& x0,
                                                std::span<const double> times,
                                                const LindbladConfig& config);

}  // namespace spinxfer
