#include "spinxfer/transfer.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spinxfer {

namespace {

constexpr Complex kI{0.0, 1.0};

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

// Site-N populations of a state and the P10 overlap <b|P10|a>.
struct ReceiverMap {
  SpinConfiguration mask = 0;
  std::vector<std::uint8_t> bit_a;                     // site-N bit per entry of a
  std::vector<std::uint8_t> bit_b;
  std::vector<std::pair<std::size_t, std::size_t>> raise;  // (index in a, index in b)
};

ReceiverMap receiver_map(const SectorBasis& a, const SectorBasis& b, int receiver) {
  ReceiverMap map;
  map.mask = site_mask(receiver);
  map.bit_a.resize(a.size());
  map.bit_b.resize(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    map.bit_a[i] = static_cast<std::uint8_t>(site_value(a[i], receiver));
    if (map.bit_a[i] == 0) {
      if (const auto j = b.index_of(a[i] | map.mask)) map.raise.emplace_back(i, *j);
    }
  }
  for (std::size_t i = 0; i < b.size(); ++i) map.bit_b[i] = static_cast<std::uint8_t>(site_value(b[i], receiver));
  return map;
}

FidelityComponents components_from_states(const ReceiverMap& map, const ComplexVector& a,
                                          const ComplexVector& b) {
  FidelityComponents out;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    (map.bit_a[static_cast<std::size_t>(i)] ? out.a11 : out.a00) += std::norm(a[i]);
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    (map.bit_b[static_cast<std::size_t>(i)] ? out.b11 : out.b00) += std::norm(b[i]);
  }
  for (const auto& [i, j] : map.raise) {
    out.cross += std::conj(b[static_cast<Eigen::Index>(j)]) * a[static_cast<Eigen::Index>(i)];
  }
  return out;
}

void require_definite_excitations(const StateVector& channel) {
  if (!channel.basis()->is_full()) return;
  int sector = -1;
  for (std::size_t c = 0; c < channel.size(); ++c) {
    if (channel.amplitudes()[static_cast<Eigen::Index>(c)] == Complex{}) continue;
    const int n = excitation_count(static_cast<SpinConfiguration>(c));
    if (sector >= 0 && n != sector) {
      throw DomainError("channel state must have a definite excitation number");
    }
    sector = n;
  }
}

// Unitary propagation of the Omega blocks in the eigenbasis of each sector.
// Only the sector blocks that meet the receiver observables are formed:
// (n, n) for the populations and (n, n+1) for the P10 coherence.
class EigenbasisFidelity {
 public:
  EigenbasisFidelity(const SparseHamiltonian& h, const DensityOperator& rho_channel)
      : parts_(sector_eigendecompositions(h)), sites_(h.sites()) {
    if (!rho_channel.basis()->is_full() || rho_channel.sites() != sites_ - 1) {
      throw DomainError("channel operator must be full-basis on sites 2..N");
    }
    const auto& rho = rho_channel.matrix();
    const SpinConfiguration mask = site_mask(sites_);
    for (int n = 0; n <= sites_; ++n) {
      const auto& p = parts_[static_cast<std::size_t>(n)];
      const auto& states = p.basis->states();
      const Eigen::MatrixXd v = p.eigenvectors;
      const auto d = static_cast<Eigen::Index>(states.size());
      Eigen::VectorXd population0(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        population0[i] = (states[static_cast<std::size_t>(i)] & mask) ? 0.0 : 1.0;
      }
      const Eigen::MatrixXd p00 = v.transpose() * population0.asDiagonal() * v;
      diag0_.push_back(rotated_block(rho, n, n, 0, 0).cwiseProduct(p00.cast<Complex>()));
      diag1_.push_back(rotated_block(rho, n, n, 1, 1).cwiseProduct(p00.cast<Complex>()));
      if (n < sites_) {
        // P10 lifts sector n into n+1; its transpose pairs with Omega_01[n, n+1].
        const auto& up = parts_[static_cast<std::size_t>(n + 1)];
        Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(up.basis->size()), d);
        for (Eigen::Index j = 0; j < d; ++j) {
          const SpinConfiguration c = states[static_cast<std::size_t>(j)];
          if (c & mask) continue;
          lift(static_cast<Eigen::Index>(*up.basis->index_of(c | mask)), j) = 1.0;
        }
        const Eigen::MatrixXd p10 = up.eigenvectors.transpose() * lift * v;
        cross_.push_back(rotated_block(rho, n, n + 1, 0, 1).cwiseProduct(p10.transpose().cast<Complex>()));
      }
    }
    trace0_ = rho.trace().real();
  }

  FidelityComponents at(double t) const {
    std::vector<ComplexVector> phase;
    phase.reserve(parts_.size());
    for (const auto& p : parts_) phase.push_back(((-kI * t) * p.eigenvalues.cast<Complex>().array()).exp());
    FidelityComponents out;
    for (std::size_t n = 0; n < parts_.size(); ++n) {
      const ComplexVector right = phase[n].conjugate();
      out.a00 += (phase[n].transpose() * diag0_[n] * right).value().real();
      out.b00 += (phase[n].transpose() * diag1_[n] * right).value().real();
      if (n + 1 < parts_.size()) {
        out.cross += (phase[n].transpose() * cross_[n] * phase[n + 1].conjugate()).value();
      }
    }
    out.a11 = trace0_ - out.a00;
    out.b11 = trace0_ - out.b00;
    return out;
  }

 private:
  // V_n^T Omega_ij[n, m] V_m with Omega_ij = |i><j| (x) rho.
  ComplexMatrix rotated_block(const ComplexMatrix& rho, int n, int m, int i, int j) const {
    const auto& rows = parts_[static_cast<std::size_t>(n)];
    const auto& cols = parts_[static_cast<std::size_t>(m)];
    const auto& rs = rows.basis->states();
    const auto& cs = cols.basis->states();
    ComplexMatrix block = ComplexMatrix::Zero(static_cast<Eigen::Index>(rs.size()),
                                              static_cast<Eigen::Index>(cs.size()));
    for (std::size_t c = 0; c < cs.size(); ++c) {
      if (site_value(cs[c], 1) != j) continue;
      for (std::size_t r = 0; r < rs.size(); ++r) {
        if (site_value(rs[r], 1) != i) continue;
        block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rho(rs[r] >> 1, cs[c] >> 1);
      }
    }
    return rows.eigenvectors.transpose().cast<Complex>() * block * cols.eigenvectors.cast<Complex>();
  }

  std::vector<EigenDecomposition> parts_;
  int sites_;
  std::vector<ComplexMatrix> diag0_;
  std::vector<ComplexMatrix> diag1_;
  std::vector<ComplexMatrix> cross_;
  double trace0_ = 1.0;
};

std::vector<FidelityComponents> lindblad_series(const SparseHamiltonian& h,
                                                const DensityOperator& rho_channel,
                                                std::span<const double> times,
                                                const LindbladConfig& config) {
  const int receiver = h.sites();
  const SpinConfiguration mask = site_mask(receiver);
  std::vector<FidelityComponents> out(times.size());

  Matrix2 p00 = Matrix2::Zero();
  p00(0, 0) = 1.0;
  Matrix2 p11 = Matrix2::Zero();
  p11(1, 1) = 1.0;
  Matrix2 e01 = Matrix2::Zero();
  e01(0, 1) = 1.0;

  const auto populations = [&](const DensityOperator& x) {
    std::pair<double, double> p{0.0, 0.0};
    for (Eigen::Index a = 0; a < x.matrix().rows(); ++a) {
      ((static_cast<SpinConfiguration>(a) & mask) ? p.second : p.first) += x.matrix()(a, a).real();
    }
    return p;
  };
  integrate_lindblad(h, product_operator(p00, rho_channel, true), times, config,
                     [&](std::size_t i, const DensityOperator& x) {
                       std::tie(out[i].a00, out[i].a11) = populations(x);
                     });
  integrate_lindblad(h, product_operator(p11, rho_channel, true), times, config,
                     [&](std::size_t i, const DensityOperator& x) {
                       std::tie(out[i].b00, out[i].b11) = populations(x);
                     });
  integrate_lindblad(h, product_operator(e01, rho_channel, false), times, config,
                     [&](std::size_t i, const DensityOperator& x) {
                       Complex acc{};
                       for (Eigen::Index a = 0; a < x.matrix().rows(); ++a) {
                         const auto c = static_cast<SpinConfiguration>(a);
                         if (c & mask) continue;
                         acc += x.matrix()(a, static_cast<Eigen::Index>(c | mask));
                       }
                       out[i].cross = acc;
                     });
  return out;
}

std::vector<double> values_of(const std::vector<FidelityComponents>& comps, FidelityVariant variant) {
  std::vector<double> out;
  out.reserve(comps.size());
  for (const auto& c : comps) out.push_back(c.value(variant));
  return out;
}

FidelityTrace make_trace(std::vector<double> times, std::vector<double> values, bool require_peak) {
  FidelityTrace trace{std::move(times), std::move(values), std::nullopt};
  if (require_peak) {
    trace.peak = find_first_peak(trace.times, trace.f_av);
  } else {
    try {
      trace.peak = find_first_peak(trace.times, trace.f_av);
    } catch (const NumericalError&) {
    }
  }
  return trace;
}

}  // namespace

double TimeGrid::resolved_window(const XXZParams& chain) const {
  return window ? *window : 2.0 * chain.sites / chain.coupling;
}

std::vector<double> TimeGrid::times(const XXZParams& chain) const {
  const double w = resolved_window(chain);
  if (!(sample_step > 0.0) || !(w > 0.0)) throw DomainError("time grid needs positive step and window");
  const auto count = static_cast<std::size_t>(std::floor(w / sample_step + 1e-9));
  std::vector<double> t(count + 1);
  for (std::size_t k = 0; k <= count; ++k) t[k] = static_cast<double>(k) * sample_step;
  return t;
}

void ScenarioSpec::validate() const {
  chain.validate();
  propagator.validate();
  if (temperature && (!(*temperature >= 0.0) || !std::isfinite(*temperature))) {
    throw DomainError("temperature must be finite and >= 0, got " + fmt_double(*temperature));
  }
  if (gamma && (!(*gamma >= 0.0) || !std::isfinite(*gamma))) {
    throw DomainError("gamma must be finite and >= 0, got " + fmt_double(*gamma));
  }
  if (!(grid.sample_step > 0.0)) throw DomainError("sample_step must be positive");
  if (grid.window && !(*grid.window > 2.0 * grid.sample_step)) {
    throw DomainError("time window must span at least three samples");
  }
  const bool thermal = temperature && *temperature > 0.0;
  if (gamma) {
    if (chain.sites > kLindbladCap) {
      throw DomainError("N=" + std::to_string(chain.sites) + " exceeds the Lindblad cap N<=" +
                        std::to_string(kLindbladCap));
    }
    LindbladConfig cfg = lindblad;
    cfg.gamma = *gamma;
    cfg.validate();
  } else if (thermal) {
    if (chain.sites > kThermalCap) {
      throw DomainError("N=" + std::to_string(chain.sites) + " exceeds the thermal cap N<=" +
                        std::to_string(kThermalCap));
    }
  } else if (chain.sites > kPureCap) {
    throw DomainError("N=" + std::to_string(chain.sites) + " exceeds the pure-state cap N<=" +
                      std::to_string(kPureCap));
  }
}

double FidelityComponents::value(FidelityVariant variant) const {
  const double coherence = variant == FidelityVariant::Abs ? std::abs(cross) : cross.real();
  return (b00 + a11) / 6.0 + (a00 + b11) / 3.0 + coherence / 3.0;
}

ChannelState prepare_attach_pure(const XXZParams& chain) {
  const auto h = channel_hamiltonian(chain);
  auto g = ground_state(h);
  return ChannelState{std::move(g.state), g.sector, std::move(g.degenerate_sectors), g.energy};
}

MitPreparation prepare_mit_pure(const XXZParams& chain) {
  const auto h = build_xxz(chain);
  const auto g = ground_state(h);
  const auto measured = measure_site_z(g.state, 1);
  MitPreparation out{g.energy, g.sector, {}};
  for (int b = 0; b < 2; ++b) {
    auto& branch = out.branches[static_cast<std::size_t>(b)];
    branch.outcome = b;
    branch.probability = measured[static_cast<std::size_t>(b)].probability;
    if (measured[static_cast<std::size_t>(b)].collapsed) {
      branch.channel = drop_sender(*measured[static_cast<std::size_t>(b)].collapsed, b);
    }
  }
  return out;
}

std::vector<FidelityComponents> pure_fidelity_series(const SparseHamiltonian& h,
                                                     const StateVector& channel,
                                                     std::span<const double> times,
                                                     const PropagatorConfig& config) {
  if (channel.sites() != h.sites() - 1) throw DomainError("channel must cover sites 2..N");
  require_definite_excitations(channel);
  const StateVector zero = attach_basis_ket(0, channel);
  const StateVector one = attach_basis_ket(1, channel);
  PureEvolution a(h, zero, config);
  PureEvolution b(h, one, config);
  const ReceiverMap map = receiver_map(*zero.basis(), *one.basis(), h.sites());
  std::vector<FidelityComponents> out;
  out.reserve(times.size());
  for (const double t : times) {
    a.advance_to(t);
    b.advance_to(t);
    out.push_back(components_from_states(map, a.state().amplitudes(), b.state().amplitudes()));
  }
  return out;
}

FidelityComponents fidelity_components_pure(const SparseHamiltonian& h, const StateVector& channel,
                                            double t, const PropagatorConfig& config) {
  const double times[] = {t};
  return pure_fidelity_series(h, channel, times, config).front();
}

double average_fidelity_pure(const SparseHamiltonian& h, const StateVector& channel, double t,
                             FidelityVariant variant, const PropagatorConfig& config) {
  return fidelity_components_pure(h, channel, t, config).value(variant);
}

std::vector<FidelityComponents> mixed_fidelity_series(const SparseHamiltonian& h,
                                                      const DensityOperator& rho_channel,
                                                      std::span<const double> times,
                                                      const std::optional<LindbladConfig>& noise) {
  if (rho_channel.sites() != h.sites() - 1) throw DomainError("channel must cover sites 2..N");
  if (noise) return lindblad_series(h, rho_channel, times, *noise);
  const EigenbasisFidelity engine(h, rho_channel);
  std::vector<FidelityComponents> out;
  out.reserve(times.size());
  for (const double t : times) out.push_back(engine.at(t));
  return out;
}

double average_fidelity_mixed(const SparseHamiltonian& h, const DensityOperator& rho_channel,
                              double t, const std::optional<LindbladConfig>& noise,
                              FidelityVariant variant) {
  const double times[] = {t};
  return mixed_fidelity_series(h, rho_channel, times, noise).front().value(variant);
}

double bloch_average_oracle(const SparseHamiltonian& h, const ChannelPreparation& channel, double t,
                            bool phase_corrected) {
  using Quadrature = boost::math::quadrature::gauss<double, 16>;
  constexpr int kPhiNodes = 32;
  const int receiver = h.sites();

  const auto eig = full_eigendecomposition(h);
  const ComplexMatrix v = eig.eigenvectors.cast<Complex>();
  const ComplexVector phase = ((-kI * t) * eig.eigenvalues.cast<Complex>().array()).exp();
  const ComplexMatrix propagator = v * phase.asDiagonal() * v.adjoint();

  std::vector<std::pair<double, double>> nodes;  // (cos theta, weight)
  for (std::size_t k = 0; k < Quadrature::abscissa().size(); ++k) {
    const double x = Quadrature::abscissa()[k];
    const double w = Quadrature::weights()[k];
    nodes.emplace_back(x, w);
    if (x != 0.0) nodes.emplace_back(-x, w);
  }

  double total = 0.0;
  for (const auto& [x, w] : nodes) {
    for (int l = 0; l < kPhiNodes; ++l) {
      const QubitState sender(std::acos(x), 2.0 * std::numbers::pi * l / kPhiNodes);
      const Qubit psi = sender.ket();
      Matrix2 rho_n;
      if (const auto* pure = std::get_if<StateVector>(&channel)) {
        const StateVector initial = product_state(psi, pure->to_full());
        rho_n = reduce_to_site(StateVector(initial.basis(), propagator * initial.amplitudes()), receiver);
      } else {
        const auto& rho_ch = std::get<DensityOperator>(channel);
        const DensityOperator initial = product_operator(psi * psi.adjoint(), rho_ch, true);
        const DensityOperator evolved(initial.basis(),
                                      propagator * initial.matrix() * propagator.adjoint(), true);
        rho_n = reduce_to_site(evolved, receiver);
      }
      if (phase_corrected && std::abs(rho_n(0, 1)) > 0.0) {
        // diag(1, e^{i chi}) moves the coherence phase onto -phi, the phase of
        // the sender's own |0><1| element.
        const double chi = std::arg(rho_n(0, 1)) + sender.phi();
        Matrix2 rz = Matrix2::Identity();
        rz(1, 1) = std::polar(1.0, chi);
        rho_n = (rz * rho_n * rz.adjoint()).eval();
      }
      const double fidelity = (psi.adjoint() * rho_n * psi).value().real();
      total += 0.5 * w * fidelity / kPhiNodes;
    }
  }
  return total;
}

Peak find_first_peak(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw DomainError("times and values differ in length");
  Peak peak;
  if (values.size() < 3) throw NumericalError("trace too short to hold a local maximum");
  peak.global_max = *std::max_element(values.begin(), values.end());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    if (values[i] >= values[i - 1] && values[i] >= values[i + 1]) peak.local_maxima.push_back(i);
  }
  const auto chosen = std::find_if(peak.local_maxima.begin(), peak.local_maxima.end(),
                                   [&](std::size_t i) { return values[i] >= kPeakGate * peak.global_max; });
  if (chosen == peak.local_maxima.end()) {
    throw NumericalError("no local maximum of F_av in the time window; increase the window");
  }
  const std::size_t i = *chosen;
  peak.index = i;
  peak.t_max = times[i];
  peak.f_max = values[i];
  // Vertex of the parabola through (t_{i-1}, f_{i-1}), (t_i, f_i), (t_{i+1}, f_{i+1}).
  const double t0 = times[i - 1], t1 = times[i], t2 = times[i + 1];
  const double f0 = values[i - 1], f1 = values[i], f2 = values[i + 1];
  const double d01 = (f1 - f0) / (t1 - t0);
  const double d12 = (f2 - f1) / (t2 - t1);
  const double curvature = (d12 - d01) / (t2 - t0);
  if (curvature < 0.0) {
    const double vertex = 0.5 * (t0 + t1) - d01 / (2.0 * curvature);
    peak.t_max = vertex;
    peak.f_max = f1 + d01 * (vertex - t1) + curvature * (vertex - t0) * (vertex - t1);
  }
  return peak;
}

ScenarioResult run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const auto times = spec.grid.times(spec.chain);
  const auto h = build_xxz(spec.chain);
  const bool thermal = spec.temperature && *spec.temperature > 0.0;
  std::optional<LindbladConfig> noise;
  if (spec.gamma) {
    noise = spec.lindblad;
    noise->gamma = *spec.gamma;
    noise->max_sites = kLindbladCap;
  }

  // Pure channels under noise are propagated as density operators.
  const auto pure_series = [&](const StateVector& channel) {
    if (noise) return mixed_fidelity_series(h, DensityOperator::from_pure(channel.to_full()), times, noise);
    return pure_fidelity_series(h, channel, times, spec.propagator);
  };

  ScenarioResult result{spec, {}, {}, std::nullopt, {}};
  if (spec.protocol == Protocol::Attach) {
    std::vector<FidelityComponents> comps;
    if (thermal) {
      const auto rho = thermal_state(channel_hamiltonian(spec.chain), 1.0 / *spec.temperature);
      comps = mixed_fidelity_series(h, rho.rho, times, noise);
    } else {
      const auto channel = prepare_attach_pure(spec.chain);
      result.ground_sector = channel.sector;
      result.degenerate_sectors = channel.degenerate_sectors;
      comps = pure_series(channel.state);
    }
    result.trace = make_trace(times, values_of(comps, spec.variant), true);
    return result;
  }

  std::array<double, 2> probability{};
  std::array<std::optional<std::vector<FidelityComponents>>, 2> comps;
  if (thermal) {
    const auto rho = thermal_state(h, 1.0 / *spec.temperature);
    const auto measured = measure_sender_z(rho.rho);
    for (std::size_t b = 0; b < 2; ++b) {
      probability[b] = measured[b].probability;
      if (measured[b].channel) comps[b] = mixed_fidelity_series(h, *measured[b].channel, times, noise);
    }
  } else {
    const auto prep = prepare_mit_pure(spec.chain);
    result.ground_sector = prep.ground_sector;
    for (std::size_t b = 0; b < 2; ++b) {
      probability[b] = prep.branches[b].probability;
      if (prep.branches[b].channel) comps[b] = pure_series(*prep.branches[b].channel);
    }
  }

  std::array<std::optional<std::vector<double>>, 2> values;
  for (std::size_t b = 0; b < 2; ++b) {
    BranchResult branch{static_cast<int>(b), probability[b], std::nullopt};
    if (comps[b]) {
      values[b] = values_of(*comps[b], spec.variant);
      branch.trace = make_trace(times, *values[b], false);
    }
    result.branches.push_back(std::move(branch));
  }

  std::vector<double> headline;
  switch (spec.mit_outcome_policy) {
    case OutcomePolicy::Outcome0:
    case OutcomePolicy::Outcome1: {
      const std::size_t b = spec.mit_outcome_policy == OutcomePolicy::Outcome0 ? 0 : 1;
      if (!values[b]) {
        throw NumericalError("measurement outcome " + std::to_string(b) + " has probability " +
                             fmt_double(probability[b]) + "; branch absent");
      }
      headline = *values[b];
      break;
    }
    case OutcomePolicy::ProbabilityWeighted:
      headline.assign(times.size(), 0.0);
      for (std::size_t b = 0; b < 2; ++b) {
        if (!values[b]) continue;
        for (std::size_t k = 0; k < times.size(); ++k) headline[k] += probability[b] * (*values[b])[k];
      }
      break;
  }
  result.trace = make_trace(times, std::move(headline), true);
  return result;
}

const char* to_string(Protocol p) { return p == Protocol::Attach ? "attach" : "mit"; }

const char* to_string(OutcomePolicy p) {
  switch (p) {
    case OutcomePolicy::Outcome0:
      return "outcome0";
    case OutcomePolicy::Outcome1:
      return "outcome1";
    case OutcomePolicy::ProbabilityWeighted:
      return "weighted";
  }
  return "weighted";
}

const char* to_string(FidelityVariant v) { return v == FidelityVariant::Abs ? "abs" : "re"; }

}  // namespace spinxfer
