#include "nvecho/model.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <functional>
#include <string>
#include <thread>

#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"

namespace nvecho {

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void check_shape(const SystemState& state, std::size_t classes) {
  if (state.sigma12.size() != classes || state.sigma22.size() != classes) {
    throw StructuralError("state has " + std::to_string(state.sigma12.size()) + "/" +
                          std::to_string(state.sigma22.size()) +
                          " coherence/population entries for " + std::to_string(classes) +
                          " sub-ensembles");
  }
}

void check_finite(const SystemState& state) {
  if (!finite(state.a)) throw NumericError("non-finite cavity amplitude", -1);
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!finite(state.sigma12[i]) || !std::isfinite(state.sigma22[i])) {
      throw NumericError("non-finite spin state in sub-ensemble " + std::to_string(i),
                         static_cast<std::ptrdiff_t>(i));
    }
  }
}

double fixed_point_population(const SubEnsemble& e, double eta) {
  const double denom = 2.0 * e.gamma + eta;
  // With neither relaxation nor pumping every population is stationary; keep the
  // high-temperature value.
  if (denom == 0.0) return 0.5;
  return e.gamma / denom;
}

}  // namespace

void CavityParams::validate() const {
  if (!(omega_c > 0.0)) throw StructuralError("cavity frequency must be positive");
  if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0)) throw StructuralError("cavity losses must be >= 0");
  if (!(kappa1 + kappa2 > 0.0)) throw StructuralError("total cavity loss must be positive");
  if (!(temperature > 0.0)) throw StructuralError("temperature must be positive");
}

void SubEnsemble::validate() const {
  if (!(n_spins >= 0.0)) throw StructuralError("spin count must be >= 0");
  if (!(g >= 0.0) || !(gamma >= 0.0) || !(eta >= 0.0) || !(chi >= 0.0)) {
    throw StructuralError("sub-ensemble rates must be >= 0");
  }
  if (!std::isfinite(omega_a)) throw StructuralError("transition frequency must be finite");
}

double SystemState::bloch_excess() const {
  double worst = -0.25;
  for (std::size_t i = 0; i < size(); ++i) {
    const double p = sigma22[i];
    worst = std::max(worst, std::norm(sigma12[i]) - p * (1.0 - p));
  }
  return worst;
}

double DriveParams::amplitude(double t) const {
  for (const auto& s : segments) {
    if (t >= s.t_start && t < s.t_end) return s.amplitude;
  }
  return 0.0;
}

void DriveParams::validate() const {
  double last_end = -INFINITY;
  for (const auto& s : segments) {
    if (!(s.t_end > s.t_start)) throw StructuralError("drive segment has non-positive length");
    if (s.t_start < last_end) throw StructuralError("drive segments overlap or are out of order");
    if (!(s.amplitude >= 0.0)) throw StructuralError("drive amplitude must be >= 0");
    last_end = s.t_end;
  }
}

struct MeanFieldSystem::Pool {
  explicit Pool(unsigned n) : size(n), start(n), done(n) {
    for (unsigned w = 1; w < n; ++w) threads.emplace_back([this, w] { loop(w); });
  }

  ~Pool() {
    stop.store(true);
    start.arrive_and_wait();
    for (auto& t : threads) t.join();
  }

  void run(const std::function<void(unsigned)>& job) {
    current = &job;
    start.arrive_and_wait();
    job(0);
    done.arrive_and_wait();
  }

  void loop(unsigned w) {
    for (;;) {
      start.arrive_and_wait();
      if (stop.load()) return;
      (*current)(w);
      done.arrive_and_wait();
    }
  }

  unsigned size;
  std::barrier<> start;
  std::barrier<> done;
  std::vector<std::thread> threads;
  const std::function<void(unsigned)>* current = nullptr;
  std::atomic<bool> stop{false};
};

MeanFieldSystem::MeanFieldSystem(const CavityParams& cavity,
                                 std::span<const SubEnsemble> ensembles, double omega_d,
                                 unsigned workers)
    : cavity_(cavity),
      omega_d_(omega_d),
      cavity_detuning_(cavity.omega_c - omega_d),
      half_kappa_(0.5 * cavity.kappa()),
      sqrt_kappa1_(std::sqrt(cavity.kappa1)) {
  cavity.validate();
  const std::size_t n = ensembles.size();
  detuning_.reserve(n);
  coherence_decay_.reserve(n);
  population_decay_.reserve(n);
  gamma_.reserve(n);
  g_.reserve(n);
  gn_.reserve(n);
  for (const auto& e : ensembles) {
    e.validate();
    detuning_.push_back(e.omega_a - omega_d);
    coherence_decay_.push_back(e.coherence_decay());
    population_decay_.push_back(e.population_decay());
    gamma_.push_back(e.gamma);
    g_.push_back(e.g);
    gn_.push_back(e.g * e.n_spins);
  }
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  partial_.assign(std::max<std::size_t>(blocks, 1), Complex{});
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(std::max<std::size_t>(blocks, 1)));
  if (workers > 1) pool_ = std::make_unique<Pool>(workers);
}

MeanFieldSystem::~MeanFieldSystem() = default;
MeanFieldSystem::MeanFieldSystem(MeanFieldSystem&&) noexcept = default;
MeanFieldSystem& MeanFieldSystem::operator=(MeanFieldSystem&&) noexcept = default;

unsigned MeanFieldSystem::workers() const { return pool_ ? pool_->size : 1u; }

double MeanFieldSystem::max_spin_detuning() const {
  double m = 0.0;
  for (double d : detuning_) m = std::max(m, std::abs(d));
  return m;
}

double MeanFieldSystem::max_coupling() const {
  double m = 0.0;
  for (double g : g_) m = std::max(m, g);
  return m;
}

void MeanFieldSystem::kernel(const SystemState& state, double /*omega_drive*/,
                             StateDerivative& out, std::size_t block_begin,
                             std::size_t block_end) const {
  const double ar = state.a.real();
  const double ai = state.a.imag();
  const std::size_t n = size();
  for (std::size_t b = block_begin; b < block_end; ++b) {
    const std::size_t lo = b * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double x = state.sigma12[i].real();
      const double y = state.sigma12[i].imag();
      const double p22 = state.sigma22[i];
      const double inversion = 1.0 - 2.0 * p22;
      const double g = g_[i];
      const double det = detuning_[i];
      const double dec = coherence_decay_[i];
      // d sigma12 = -(i det + dec) sigma12 - i g a (1 - 2 sigma22)
      out.dsigma12[i] = Complex(-dec * x + det * y + g * inversion * ai,
                                -det * x - dec * y - g * inversion * ar);
      // d sigma22 = gamma - (2 gamma + eta) sigma22 + i g (a* sigma12 - a sigma21)
      out.dsigma22[i] = gamma_[i] - population_decay_[i] * p22 - 2.0 * g * (ar * y - ai * x);
      sx += gn_[i] * x;
      sy += gn_[i] * y;
    }
    partial_[b] = Complex(sx, sy);
  }
}

void MeanFieldSystem::derivative(const SystemState& state, double omega_drive,
                                 StateDerivative& out) const {
  const std::size_t n = size();
  if (out.dsigma12.size() != n) {
    out.dsigma12.resize(n);
    out.dsigma22.resize(n);
  }
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  if (pool_ && blocks > 1) {
    const unsigned w = pool_->size;
    const std::function<void(unsigned)> job = [&](unsigned k) {
      kernel(state, omega_drive, out, blocks * k / w, blocks * (k + 1) / w);
    };
    pool_->run(job);
  } else {
    kernel(state, omega_drive, out, 0, blocks);
  }

  // Fixed-shape pairwise combination of the block partial sums.
  std::size_t count = blocks;
  while (count > 1) {
    const std::size_t half = count / 2;
    for (std::size_t i = 0; i < half; ++i) partial_[i] = partial_[2 * i] + partial_[2 * i + 1];
    if (count % 2 == 1) partial_[half] = partial_[count - 1];
    count = half + count % 2;
  }
  const Complex source = blocks > 0 ? partial_[0] : Complex{};

  const double ar = state.a.real();
  const double ai = state.a.imag();
  // da = -i (wc - wd) a - (kappa/2) a - i sqrt(kappa1) Omega - i S
  out.da = Complex(cavity_detuning_ * ai - half_kappa_ * ar + source.imag(),
                   -cavity_detuning_ * ar - half_kappa_ * ai - sqrt_kappa1_ * omega_drive -
                       source.real());
}

void MeanFieldSystem::checked_derivative(const SystemState& state, double omega_drive,
                                         StateDerivative& out) const {
  check_shape(state, size());
  check_finite(state);
  if (!std::isfinite(omega_drive)) throw NumericError("non-finite drive amplitude", -1);
  derivative(state, omega_drive, out);
}

StateDerivative rhs(const SystemState& state, const CavityParams& cavity,
                    std::span<const SubEnsemble> ensembles, const DriveParams& drive, double t) {
  check_shape(state, ensembles.size());
  MeanFieldSystem system(cavity, ensembles, drive.omega_d);
  StateDerivative out(ensembles.size());
  system.checked_derivative(state, drive.amplitude(t), out);
  return out;
}

SystemState thermal_steady_state(std::span<const SubEnsemble> ensembles, bool eta_off) {
  SystemState s(ensembles.size());
  for (std::size_t i = 0; i < ensembles.size(); ++i) {
    s.sigma22[i] = fixed_point_population(ensembles[i], eta_off ? 0.0 : ensembles[i].eta);
  }
  return s;
}

SystemState cooled_steady_state(std::span<const SubEnsemble> ensembles) {
  return thermal_steady_state(ensembles, false);
}

double thermal_photon_number(const CavityParams& cavity) {
  if (!(cavity.temperature > 0.0)) throw StructuralError("temperature must be positive");
  const double x = kHbar * cavity.omega_c / (kBoltzmann * cavity.temperature);
  return 1.0 / std::expm1(x);
}

}  // namespace nvecho
