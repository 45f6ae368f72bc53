#include "nvecho/analysis.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"

namespace nvecho {

namespace {

struct Vertex {
  double x = 0.0;
  double y = 0.0;
};

/// Interpolated extremum at sample i of (xs, ys); falls back to the sample at the edges.
Vertex interpolate(std::span<const double> xs, std::span<const double> ys, std::size_t i) {
  if (i == 0 || i + 1 >= ys.size()) return {xs[i], ys[i]};
  const double d = parabolic_offset(ys[i - 1], ys[i], ys[i + 1]);
  const double step = d >= 0.0 ? xs[i + 1] - xs[i] : xs[i] - xs[i - 1];
  const double y = ys[i] - 0.25 * (ys[i - 1] - ys[i + 1]) * d;
  return {xs[i] + d * step, y};
}

std::size_t lower_index(std::span<const double> xs, double x) {
  return static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
}

bool is_local_max(std::span<const double> v, std::size_t i) {
  return i > 0 && i + 1 < v.size() && v[i] > v[i - 1] && v[i] >= v[i + 1];
}

/// Empty-cavity-plus-spins steady-state amplitude per unit drive, a_ss / Omega.
Complex linear_response(const CavityParams& cavity, std::span<const SubEnsemble> ens,
                        std::span<const double> polarization, double detuning) {
  const double omega_d = cavity.omega_c + detuning;
  Complex denom(0.5 * cavity.kappa(), cavity.omega_c - omega_d);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto& e = ens[i];
    const Complex spin(e.coherence_decay(), e.omega_a - omega_d);
    denom += e.n_spins * e.g * e.g * polarization[i] / spin;
  }
  return Complex(0.0, -std::sqrt(cavity.kappa1)) / denom;
}

double reflectance_of(const CavityParams& cavity, Complex a_per_omega) {
  const Complex r = 1.0 - Complex(0.0, std::sqrt(cavity.kappa1)) * a_per_omega;
  return std::norm(r);
}

}  // namespace

std::string to_string(CouplingRegime r) {
  switch (r) {
    case CouplingRegime::kWeak: return "weak";
    case CouplingRegime::kCrossover: return "crossover";
    case CouplingRegime::kStrong: return "strong";
  }
  return "weak";
}

std::string to_string(SpectrumMethod m) {
  return m == SpectrumMethod::kLinearized ? "linearized" : "time-domain";
}

SpectrumMethod parse_spectrum_method(const std::string& s) {
  if (s == "linearized") return SpectrumMethod::kLinearized;
  if (s == "time-domain") return SpectrumMethod::kTimeDomain;
  throw ConfigError("method", "expected linearized or time-domain, got '" + s + "'");
}

double parabolic_offset(double left, double center, double right) {
  const double curvature = left - 2.0 * center + right;
  if (curvature == 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / curvature, -1.0, 1.0);
}

double peak_fwhm(std::span<const double> times, std::span<const double> values, std::size_t index,
                 std::size_t lo, std::size_t hi) {
  if (values.empty() || index >= values.size()) throw AnalysisError("peak index out of range");
  hi = std::min(hi, values.size());
  const double half = 0.5 * values[index];
  auto cross = [&](std::size_t inside, std::size_t outside) {
    const double f = (values[inside] - half) / (values[inside] - values[outside]);
    return times[inside] + f * (times[outside] - times[inside]);
  };
  double left = times[lo];
  for (std::size_t i = index; i > lo; --i) {
    if (values[i - 1] < half) {
      left = cross(i, i - 1);
      break;
    }
  }
  double right = times[hi - 1];
  for (std::size_t i = index; i + 1 < hi; ++i) {
    if (values[i + 1] < half) {
      right = cross(i, i + 1);
      break;
    }
  }
  return right - left;
}

EchoReport detect_echoes(const PowerTrace& power, const HahnSequence& seq) {
  EchoReport rep;
  rep.noise_floor_dbm = power.noise_floor_dbm;
  const std::span<const double> t = power.times;
  const std::span<const double> n = power.photon_number;
  if (t.size() != n.size() || t.size() != power.power_dbm.size()) {
    throw StructuralError("power trace arrays differ in length");
  }
  if (t.size() < 3) return rep;

  const double tc = seq.pi_center();
  const double half_tau = 0.5 * seq.tau;
  // The pi-pulse spike decays monotonically, so starting half a gap later excludes both spikes.
  const std::size_t first = lower_index(t, tc + half_tau);
  for (std::size_t i = std::max<std::size_t>(first, 1); i + 1 < n.size(); ++i) {
    if (!is_local_max(n, i)) continue;
    const std::size_t lo = std::max(first, lower_index(t, t[i] - half_tau));
    const std::size_t hi = std::min(n.size(), lower_index(t, t[i] + half_tau));
    const auto top = std::max_element(n.begin() + static_cast<std::ptrdiff_t>(lo),
                                      n.begin() + static_cast<std::ptrdiff_t>(hi));
    if (*top > n[i]) continue;
    if (!rep.peak_times.empty() && t[i] - tc - rep.peak_times.back() < half_tau) continue;
    const Vertex v = interpolate(t, n, i);
    const double photons = std::max(v.y, n[i]);
    rep.peak_times.push_back(v.x - tc);
    rep.peak_photons.push_back(photons);
    rep.peak_powers.push_back(power.power_dbm[i] + 10.0 * std::log10(photons / n[i]));
    rep.peak_fwhm.push_back(peak_fwhm(t, n, i, lo, hi));
    const bool seen = rep.peak_powers.back() > power.noise_floor_dbm;
    rep.visible.push_back(seen);
    if (seen) ++rep.n_visible;
  }

  std::vector<double> used;
  for (std::size_t k = 0; k < rep.peak_times.size(); ++k) {
    if (rep.visible[k]) used.push_back(rep.peak_times[k]);
  }
  if (used.size() < 2) used = rep.peak_times;
  if (used.size() >= 2) {
    rep.period_estimate = (used.back() - used.front()) / static_cast<double>(used.size() - 1);
  }
  return rep;
}

GratingReport extract_grating(std::span<const ProfilePoint> profile, double window) {
  if (!(window > 0.0)) throw AnalysisError("grating window must be positive");
  const double half_width = ordinary(window);
  std::vector<double> x, y;
  for (const auto& p : profile) {
    if (std::abs(p.detuning_hz) <= half_width) {
      x.push_back(p.detuning_hz);
      y.push_back(p.value);
    }
  }
  const std::size_t m = x.size();
  if (m < 8) throw AnalysisError("fewer than 8 profile points inside the grating window");
  const double d = (x.back() - x.front()) / static_cast<double>(m - 1);
  if (!(d > 0.0)) throw AnalysisError("profile detunings must increase");
  for (std::size_t k = 0; k + 1 < m; ++k) {
    if (std::abs(x[k + 1] - x[k] - d) > 1e-6 * d) {
      throw AnalysisError("profile is not uniformly sampled");
    }
  }
  const double span = d * static_cast<double>(m);

  // Quadratic detrend removes the smooth envelope before the transform.
  const double x0 = 0.5 * (x.front() + x.back());
  double s[5] = {0, 0, 0, 0, 0};
  double r[3] = {0, 0, 0};
  for (std::size_t k = 0; k < m; ++k) {
    const double u = (x[k] - x0) / span;
    double p = 1.0;
    for (int j = 0; j < 5; ++j) {
      s[j] += p;
      if (j < 3) r[j] += p * y[k];
      p *= u;
    }
  }
  // Solve the 3x3 normal equations by Cramer's rule.
  auto det3 = [](double a, double b, double c, double d_, double e, double f, double g, double h,
                 double i) { return a * (e * i - f * h) - b * (d_ * i - f * g) + c * (d_ * h - e * g); };
  const double D = det3(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
  std::array<double, 3> coef{0.0, 0.0, 0.0};
  if (std::abs(D) > 0.0) {
    coef[0] = det3(r[0], s[1], s[2], r[1], s[2], s[3], r[2], s[3], s[4]) / D;
    coef[1] = det3(s[0], r[0], s[2], s[1], r[1], s[3], s[2], r[2], s[4]) / D;
    coef[2] = det3(s[0], s[1], r[0], s[1], s[2], r[1], s[2], s[3], r[2]) / D;
  }
  std::vector<double> w(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double u = (x[k] - x0) / span;
    const double hann = 0.5 - 0.5 * std::cos(kTwoPi * (static_cast<double>(k) + 0.5) /
                                             static_cast<double>(m));
    w[k] = hann * (y[k] - coef[0] - coef[1] * u - coef[2] * u * u);
  }

  std::size_t padded = 1;
  while (padded < 16 * m) padded <<= 1;
  const double scale = static_cast<double>(padded) * d;
  const auto k_min = static_cast<std::size_t>(std::ceil(1.5 * scale / span));
  const std::size_t k_max = padded / 2;
  if (k_min + 2 >= k_max) throw AnalysisError("grating window too short for a spectral estimate");
  std::vector<double> mag(k_max + 1, 0.0);
  for (std::size_t k = k_min - 1; k <= k_max; ++k) {
    const double omega = kTwoPi * static_cast<double>(k) / static_cast<double>(padded);
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      re += w[j] * std::cos(omega * static_cast<double>(j));
      im -= w[j] * std::sin(omega * static_cast<double>(j));
    }
    mag[k] = std::hypot(re, im);
  }
  std::size_t best = k_min;
  for (std::size_t k = k_min; k < k_max; ++k) {
    if (mag[k] > mag[best]) best = k;
  }
  double kk = static_cast<double>(best);
  if (best > k_min - 1 && best < k_max) kk += parabolic_offset(mag[best - 1], mag[best], mag[best + 1]);
  const double conjugate = kk / scale;  // s

  GratingReport rep;
  rep.inverse_f = conjugate;
  rep.f = 1.0 / conjugate;
  rep.low_confidence = span * conjugate < 3.0;

  // Half peak-to-valley over one period centred on zero detuning.
  const double reach = 0.5 * rep.f + 0.5 * d;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(x[k]) > reach) continue;
    const bool inner = k > 0 && k + 1 < m;
    double v = y[k];
    if (inner && ((y[k] >= y[k - 1] && y[k] >= y[k + 1]) || (y[k] <= y[k - 1] && y[k] <= y[k + 1]))) {
      v = interpolate(x, y, k).y;
    }
    hi = std::max(hi, v);
    lo = std::min(lo, v);
  }
  rep.R = std::isfinite(hi) ? 0.5 * (hi - lo) : 0.0;
  return rep;
}

GratingReport jx_grating(const Trajectory& traj, double t, double window) {
  const auto profile = snapshot_jx_profile(traj, t);
  return extract_grating(profile, window);
}

double jx_grating_period(const Trajectory& traj, double t, double window) {
  return jx_grating(traj, t, window).f;
}

LineFit fit_f_tau(std::span<const double> taus, std::span<const double> fs) {
  if (taus.size() != fs.size()) throw AnalysisError("tau and f lists differ in length");
  const std::size_t n = taus.size();
  if (n < 3) throw AnalysisError("fit needs at least 3 points");
  std::vector<double> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(fs[i] > 0.0)) throw AnalysisError("grating frequencies must be positive");
    inv[i] = 1.0 / fs[i];
  }
  const double xm = std::accumulate(taus.begin(), taus.end(), 0.0) / static_cast<double>(n);
  const double ym = std::accumulate(inv.begin(), inv.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (taus[i] - xm) * (taus[i] - xm);
    sxy += (taus[i] - xm) * (inv[i] - ym);
  }
  if (!(sxx > 1e-12 * xm * xm * static_cast<double>(n))) {
    throw AnalysisError("degenerate tau spread");
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = inv[i] - fit.intercept - fit.slope * taus[i];
    ssr += e * e;
  }
  const double var = n > 2 ? ssr / static_cast<double>(n - 2) : 0.0;
  fit.slope_stderr = std::sqrt(var / sxx);
  fit.intercept_stderr = std::sqrt(var * (1.0 / static_cast<double>(n) + xm * xm / sxx));
  return fit;
}

std::vector<double> probe_grid(double span, double step) {
  if (!(span > 0.0) || !(step > 0.0)) throw AnalysisError("probe grid needs positive span and step");
  const auto half = static_cast<long>(std::floor(span / step + 1e-9));
  std::vector<double> out;
  for (long k = -half; k <= half; ++k) out.push_back(static_cast<double>(k) * step);
  return out;
}

ReflectionSpectrum reflection_spectrum(const CavityParams& cavity,
                                       std::span<const SubEnsemble> ensembles,
                                       std::span<const double> grid,
                                       const SpectrumOptions& opt) {
  cavity.validate();
  if (grid.empty()) throw AnalysisError("empty probe grid");
  const SystemState cooled = cooled_steady_state(ensembles);
  std::vector<double> pol(ensembles.size());
  for (std::size_t i = 0; i < pol.size(); ++i) pol[i] = 1.0 - 2.0 * cooled.sigma22[i];

  ReflectionSpectrum out;
  out.method = opt.method;
  out.detunings.assign(grid.begin(), grid.end());

  std::vector<Complex> linear(grid.size());
  double max_gain = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    linear[k] = linear_response(cavity, ensembles, pol, grid[k]);
    max_gain = std::max(max_gain, std::norm(linear[k]));
  }

  // Far-detuned reference well outside both the cavity line and the spin line.
  double reach = cavity.kappa();
  double spin_weight = 0.0, mean = 0.0;
  double saturation = std::numeric_limits<double>::infinity();
  for (const auto& e : ensembles) {
    reach = std::max(reach, std::abs(e.omega_a - cavity.omega_c) + e.coherence_decay());
    if (e.g > 0.0 && e.n_spins > 0.0) {
      saturation = std::min(saturation,
                            e.population_decay() * e.coherence_decay() / (4.0 * e.g * e.g));
    }
    spin_weight += e.n_spins;
    mean += e.n_spins * e.omega_a;
  }
  out.normalization =
      reflectance_of(cavity, linear_response(cavity, ensembles, pol, 1e3 * reach));

  out.probe_amplitude = 1.0;
  if (std::isfinite(saturation) && max_gain > 0.0) {
    out.probe_amplitude = std::sqrt(opt.probe_saturation_fraction * saturation / max_gain);
  }

  std::vector<double> raw(grid.size());
  if (opt.method == SpectrumMethod::kLinearized) {
    for (std::size_t k = 0; k < grid.size(); ++k) raw[k] = reflectance_of(cavity, linear[k]);
  } else {
    double slowest = 0.5 * cavity.kappa();
    for (const auto& e : ensembles) slowest = std::min(slowest, e.coherence_decay());
    if (!(slowest > 0.0)) throw AnalysisError("time-domain spectrum needs damped coherences");
    const double settle = opt.settle_lifetimes / slowest;
    const double extra = 1e-6;
    std::vector<double> residual(grid.size(), 0.0);
    std::vector<std::string> failure(grid.size());
    const double omega = out.probe_amplitude;

    auto solve = [&](std::size_t k) {
      const double omega_d = cavity.omega_c + grid[k];
      double worst = std::abs(grid[k]);
      for (const auto& e : ensembles) worst = std::max(worst, std::abs(e.omega_a - omega_d));
      if (opt.dt * worst >= 0.3) {
        failure[k] = "time-domain step too coarse for the probe detuning";
        return;
      }
      SystemState s = cooled;
      s = run_continuous_drive(cavity, ensembles, s, omega_d, omega, settle, opt.dt);
      const Complex a1 = s.a;
      s = run_continuous_drive(cavity, ensembles, s, omega_d, omega, extra, opt.dt);
      residual[k] = std::abs(s.a - a1) / std::max(std::abs(s.a), 1e-300);
      raw[k] = reflectance_of(cavity, s.a / omega);
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opt.workers,
                                                             static_cast<unsigned>(grid.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < grid.size(); k = next++) solve(k);
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!failure[k].empty()) throw AnalysisError(failure[k]);
      out.max_residual = std::max(out.max_residual, residual[k]);
    }
    if (out.max_residual > opt.residual_tolerance) {
      throw AnalysisError("time-domain steady state did not converge: residual " +
                          std::to_string(out.max_residual));
    }
  }
  out.reflectance.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out.reflectance[k] = raw[k] / out.normalization;

  const CouplingEstimate est = extract_geff(out);
  out.g_eff = est.g_eff;
  out.splitting = est.splitting;
  double fwhm = 0.0;
  if (spin_weight > 0.0) {
    mean /= spin_weight;
    double var = 0.0;
    for (const auto& e : ensembles) var += e.n_spins * (e.omega_a - mean) * (e.omega_a - mean);
    fwhm = 2.0 * std::sqrt(2.0 * std::log(2.0)) * std::sqrt(var / spin_weight);
  }
  out.regime = classify_regime(out.g_eff, cavity.kappa(), fwhm);
  return out;
}

CouplingEstimate extract_geff(const ReflectionSpectrum& spec, double min_prominence) {
  const std::span<const double> x = spec.detunings;
  const std::span<const double> v = spec.reflectance;
  CouplingEstimate est;
  struct Dip {
    double prominence;
    double position;
  };
  std::vector<Dip> dips;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (!(v[i] < v[i - 1] && v[i] <= v[i + 1])) continue;
    double left = v[i];
    for (std::size_t j = i; j-- > 0;) {
      if (v[j] < v[i]) break;
      left = std::max(left, v[j]);
    }
    double right = v[i];
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (v[j] < v[i]) break;
      right = std::max(right, v[j]);
    }
    const double prominence = std::min(left, right) - v[i];
    if (prominence >= min_prominence) dips.push_back({prominence, interpolate(x, v, i).x});
  }
  std::stable_sort(dips.begin(), dips.end(),
                   [](const Dip& a, const Dip& b) { return a.prominence > b.prominence; });
  for (const auto& d : dips) est.dips.push_back(d.position);
  if (dips.size() >= 2) {
    est.single_dip = false;
    est.splitting = std::abs(dips[0].position - dips[1].position);
    est.g_eff = 0.5 * est.splitting;
  }
  return est;
}

CouplingRegime classify_regime(double g_eff, double kappa, double fwhm) {
  const double split = 2.0 * g_eff;
  const double lo = std::min(kappa, fwhm);
  const double hi = std::max(kappa, fwhm);
  if (split < lo) return CouplingRegime::kWeak;
  if (split < hi) return CouplingRegime::kCrossover;
  return CouplingRegime::kStrong;
}

BeatsReport analyze_beats(const PowerTrace& power, double tau) {
  if (!(tau > 0.0)) throw AnalysisError("tau must be positive");
  const std::span<const double> t = power.times;
  const std::span<const double> n = power.photon_number;
  BeatsReport rep;
  if (t.size() < 3) return rep;
  const double quarter = 0.25 * tau;
  for (int k = 1; k * tau + quarter <= t.back(); ++k) {
    const double c = k * tau;
    const std::size_t lo = lower_index(t, c - quarter);
    const std::size_t hi = lower_index(t, c + quarter);
    if (hi <= lo + 2) break;
    std::size_t best = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (n[i] > n[best]) best = i;
    }
    if (!is_local_max(n, best)) continue;
    const Vertex v = interpolate(t, n, best);
    rep.strong_times.push_back(v.x);
    rep.strong_photons.push_back(std::max(v.y, n[best]));
    rep.strong_fwhm.push_back(
        peak_fwhm(t, n, best, lower_index(t, c - 0.5 * tau), lower_index(t, c + 0.5 * tau)));

    const std::size_t glo = lower_index(t, c - tau + quarter);
    const std::size_t ghi = lo;
    std::size_t weak = ghi;
    for (std::size_t i = std::max<std::size_t>(glo, 1); i < ghi; ++i) {
      if (is_local_max(n, i) && (weak == ghi || n[i] > n[weak])) weak = i;
    }
    if (weak != ghi) {
      const Vertex w = interpolate(t, n, weak);
      rep.weak_times.push_back(w.x);
      rep.weak_photons.push_back(std::max(w.y, n[weak]));
    }
  }
  return rep;
}

}  // namespace nvecho
