#pragma once

// Quantum state transfer through the XXZ chain: the attaching and
// measurement-induced (MIT) protocols, Bloch-averaged fidelity at the
// receiver (site N), and first-peak extraction.
//
// For a channel state with definite excitation number the Bloch average
// reduces to
//
//   F_av(t) = (b00 + a11) / 6 + (a00 + b11) / 3 + g(X) / 3,
//
// where a_kk (b_kk) are the site-N populations of the evolved |0,ch>
// (|1,ch>), X = <1,ch(t)| P10 |0,ch(t)> and g is |.| (receiver phase
// corrected, the default) or Re (literal average).

#include "spinxfer/dynamics.hpp"
#include "spinxfer/spectral.hpp"

#include <array>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace spinxfer {

inline constexpr int kPureCap = 16;
inline constexpr int kThermalCap = 12;
inline constexpr int kLindbladCap = 10;

enum class Protocol { Attach, Mit };
enum class OutcomePolicy { Outcome0, Outcome1, ProbabilityWeighted };
enum class FidelityVariant { Abs, Re };

struct TimeGrid {
  /// Window length in 1/J; empty means 2N/J.
  std::optional<double> window;
  double sample_step = 0.05;

  double resolved_window(const XXZParams& chain) const;
  /// 0, dt, 2 dt, ..., window.
  std::vector<double> times(const XXZParams& chain) const;
};

struct ScenarioSpec {
  Protocol protocol = Protocol::Mit;
  XXZParams chain;
  /// K_B T in units of J; empty for the pure ground-state preparation.
  std::optional<double> temperature;
  /// Environment coupling; empty for closed (unitary) dynamics.
  std::optional<double> gamma;
  OutcomePolicy mit_outcome_policy = OutcomePolicy::ProbabilityWeighted;
  TimeGrid grid;
  FidelityVariant variant = FidelityVariant::Abs;
  PropagatorConfig propagator;
  LindbladConfig lindblad;  // its gamma is taken from `gamma`

  /// Throws DomainError naming the offending parameter (including caps:
  /// pure N <= 16, thermal N <= 12, Lindblad N <= 10).
  void validate() const;
};

/// Site-N expectation values feeding the closed-form average.
struct FidelityComponents {
  double a00 = 0.0;
  double a11 = 0.0;
  double b00 = 0.0;
  double b11 = 0.0;
  Complex cross{};

  double value(FidelityVariant variant = FidelityVariant::Abs) const;
};

struct ChannelState {
  StateVector state;  // sites 2..N
  int sector = 0;
  std::vector<int> degenerate_sectors;
  double energy = 0.0;
};

/// Ground state of the channel Hamiltonian (lowest sector on a tie).
ChannelState prepare_attach_pure(const XXZParams& chain);

struct MitBranch {
  int outcome = 0;
  double probability = 0.0;
  std::optional<StateVector> channel;  // Phi_b on sites 2..N
};

struct MitPreparation {
  double ground_energy = 0.0;
  int ground_sector = 0;
  std::array<MitBranch, 2> branches;
};

/// sigma_z measurement of site 1 on the full-chain ground state. The
/// outcome-conditioned rotation puts site 1 exactly in the sender state, so
/// only the collapsed channel states are returned.
MitPreparation prepare_mit_pure(const XXZParams& chain);

FidelityComponents fidelity_components_pure(const SparseHamiltonian& h, const StateVector& channel,
                                            double t, const PropagatorConfig& config = {});
double average_fidelity_pure(const SparseHamiltonian& h, const StateVector& channel, double t,
                             FidelityVariant variant = FidelityVariant::Abs,
                             const PropagatorConfig& config = {});
std::vector<FidelityComponents> pure_fidelity_series(const SparseHamiltonian& h,
                                                     const StateVector& channel,
                                                     std::span<const double> times,
                                                     const PropagatorConfig& config = {});

/// Mixed channel: Omega_ij = |i><j| (x) rho_ch propagated unitarily (no
/// noise) or through the Lindblad equation.
std::vector<FidelityComponents> mixed_fidelity_series(const SparseHamiltonian& h,
                                                      const DensityOperator& rho_channel,
                                                      std::span<const double> times,
                                                      const std::optional<LindbladConfig>& noise);
double average_fidelity_mixed(const SparseHamiltonian& h, const DensityOperator& rho_channel,
                              double t, const std::optional<LindbladConfig>& noise,
                              FidelityVariant variant = FidelityVariant::Abs);

using ChannelPreparation = std::variant<StateVector, DensityOperator>;

/// Direct Bloch-sphere average: Gauss-Legendre (16 nodes) in cos(theta)
/// times a 32-point trapezoid in phi; every input state is built, evolved in
/// the full space and reduced to site N. With `phase_corrected` a site-N
/// z-rotation aligns the receiver coherence with the sender's before the
/// overlap is taken.
double bloch_average_oracle(const SparseHamiltonian& h, const ChannelPreparation& channel, double t,
                            bool phase_corrected);

struct Peak {
  double t_max = 0.0;
  double f_max = 0.0;
  std::size_t index = 0;
  double global_max = 0.0;
  std::vector<std::size_t> local_maxima;
};

inline constexpr double kPeakGate = 0.9;

/// Earliest interior local maximum reaching kPeakGate times the window
/// maximum, refined by the parabola through it and its two neighbours.
/// Throws NumericalError when the window holds no local maximum.
Peak find_first_peak(std::span<const double> times, std::span<const double> values);

struct FidelityTrace {
  std::vector<double> times;
  std::vector<double> f_av;
  std::optional<Peak> peak;
};

struct BranchResult {
  int outcome = 0;
  double probability = 0.0;
  std::optional<FidelityTrace> trace;  // empty for an absent branch
};

struct ScenarioResult {
  ScenarioSpec scenario;
  FidelityTrace trace;  // headline: attach, or MIT per outcome policy
  std::vector<BranchResult> branches;  // MIT only, always both outcomes
  /// Attach: channel ground sector. MIT: full-chain ground sector (empty
  /// for thermal preparations).
  std::optional<int> ground_sector;
  std::vector<int> degenerate_sectors;
};

ScenarioResult run_scenario(const ScenarioSpec& spec);

const char* to_string(Protocol p);
const char* to_string(OutcomePolicy p);
const char* to_string(FidelityVariant v);

}  // namespace spinxfer
