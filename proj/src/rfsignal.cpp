#include "dataneeds/rfsignal.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "dataneeds/errors.hpp"

namespace dataneeds::rfsignal {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<cplx> make_psk(int order, double phase0) {
  std::vector<cplx> pts(order);
  for (int k = 0; k < order; ++k) {
    const double a = phase0 + 2.0 * kPi * k / order;
    pts[k] = {std::cos(a), std::sin(a)};
  }
  return pts;
}

std::vector<cplx> make_qam(int side) {
  std::vector<cplx> pts;
  pts.reserve(side * side);
  double power = 0.0;
  for (int i = 0; i < side; ++i) {
    for (int q = 0; q < side; ++q) {
      const double re = 2.0 * i - (side - 1);
      const double im = 2.0 * q - (side - 1);
      pts.emplace_back(re, im);
      power += re * re + im * im;
    }
  }
  const double scale = 1.0 / std::sqrt(power / pts.size());
  for (cplx& p : pts) p *= scale;
  return pts;
}

const std::array<ModulationScheme, 5>& scheme_table() {
  static const std::array<ModulationScheme, 5> table = {{
      {"BPSK", 1, {{1.0, 0.0}, {-1.0, 0.0}}},
      {"QPSK", 2, make_psk(4, kPi / 4.0)},
      {"PSK8", 3, make_psk(8, 0.0)},
      {"QAM16", 4, make_qam(4)},
      {"QAM64", 6, make_qam(8)},
  }};
  return table;
}

double mean_power(const std::vector<cplx>& x) {
  double p = 0.0;
  for (const cplx& v : x) p += std::norm(v);
  return p / static_cast<double>(x.size());
}

void normalize_power(std::vector<cplx>& x) {
  const double rms = std::sqrt(mean_power(x));
  if (rms > 0.0)
    for (cplx& v : x) v /= rms;
}

// ---- windowed-sinc resampler ------------------------------------------------

constexpr int kTapsPerPhase = 32;
constexpr int kHalfTaps = kTapsPerPhase / 2;  // taps cover [-15, 16] around n0
constexpr int kPhases = 128;
constexpr double kKaiserBeta = 8.0;

double bessel_i0(double x) {
  // power series; converges quickly for the argument range used here
  double term = 1.0, sum = 1.0;
  const double h = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (h / k) * (h / k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

// Kaiser window over normalized argument in [-1, 1], cached on a fine grid.
double kaiser(double u) {
  constexpr int kGrid = 8192;
  static const std::vector<double> table = [] {
    std::vector<double> t(kGrid + 1);
    const double inv_i0 = 1.0 / bessel_i0(kKaiserBeta);
    for (int i = 0; i <= kGrid; ++i) {
      const double v = static_cast<double>(i) / kGrid;  // |u|
      t[i] = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - v * v))) * inv_i0;
    }
    return t;
  }();
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  const double pos = a * kGrid;
  const int idx = static_cast<int>(pos);
  const double f = pos - idx;
  return table[idx] * (1.0 - f) + table[std::min(idx + 1, kGrid)] * f;
}

// taps[p][j]: kernel at argument (j - kHalfTaps + 1) - p/kPhases for cutoff fc.
// Phase 0 of the fc = 0.5 bank is an exact unit impulse, which is what makes
// ratio 1 a pass-through.
std::vector<double> build_phase_bank(double fc) {
  std::vector<double> taps((kPhases + 1) * kTapsPerPhase);
  const double gain = 2.0 * fc;
  for (int p = 0; p <= kPhases; ++p) {
    const double frac = static_cast<double>(p) / kPhases;
    for (int j = 0; j < kTapsPerPhase; ++j) {
      const double t = (j - (kHalfTaps - 1)) - frac;
      const double arg = 2.0 * fc * t;
      double sinc;
      if (std::abs(arg) < 1e-12)
        sinc = 1.0;
      else
        sinc = std::sin(kPi * arg) / (kPi * arg);
      taps[p * kTapsPerPhase + j] = gain * sinc * kaiser(t / kHalfTaps);
    }
  }
  return taps;
}

}  // namespace

const ModulationScheme& scheme_info(Scheme s) {
  return scheme_table()[static_cast<std::size_t>(s)];
}

std::optional<Scheme> scheme_from_name(std::string_view name) {
  const auto& table = scheme_table();
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table[i].name == name) return static_cast<Scheme>(i);
  return std::nullopt;
}

std::vector<double> rrc_taps(int sps, double beta, int span) {
  const int n = span * sps + 1;
  std::vector<double> h(n);
  const int mid = span * sps / 2;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i - mid) / sps;  // in symbol periods
    const double four_bt = 4.0 * beta * t;
    if (t == 0.0) {
      h[i] = 1.0 + beta * (4.0 / kPi - 1.0);
    } else if (std::abs(std::abs(four_bt) - 1.0) < 1e-9) {
      h[i] = beta / std::sqrt(2.0) *
             ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) +
              (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
    } else {
      h[i] = (std::sin(kPi * t * (1.0 - beta)) +
              four_bt * std::cos(kPi * t * (1.0 + beta))) /
             (kPi * t * (1.0 - four_bt * four_bt));
    }
  }
  return h;
}

Observation modulate(Scheme scheme, int n_symbols, int sps, PulseShape pulse,
                     RandomStream& rng) {
  if (n_symbols < 1) throw ValidationError("modulate: n_symbols must be >= 1");
  if (sps < 1) throw ValidationError("modulate: sps must be >= 1");
  const ModulationScheme& info = scheme_info(scheme);

  std::vector<cplx> symbols(n_symbols);
  for (int s = 0; s < n_symbols; ++s)
    symbols[s] = info.constellation[rng.uniform_int(info.constellation.size())];

  Observation obs;
  obs.label = static_cast<int>(scheme);
  const std::size_t len = static_cast<std::size_t>(n_symbols) * sps;
  obs.samples.assign(len, cplx{0.0, 0.0});

  if (pulse == PulseShape::kRectangular) {
    for (int s = 0; s < n_symbols; ++s)
      for (int k = 0; k < sps; ++k) obs.samples[s * sps + k] = symbols[s];
  } else {
    const std::vector<double> h = rrc_taps(sps);
    const int delay = static_cast<int>(h.size()) / 2;
    for (int s = 0; s < n_symbols; ++s) {
      const std::size_t base = static_cast<std::size_t>(s) * sps;
      for (std::size_t k = 0; k < h.size(); ++k) {
        const std::int64_t idx = static_cast<std::int64_t>(base + k) - delay;
        if (idx >= 0 && idx < static_cast<std::int64_t>(len))
          obs.samples[idx] += symbols[s] * h[k];
      }
    }
  }
  normalize_power(obs.samples);
  return obs;
}

Observation add_awgn(Observation obs, double snr_db, RandomStream& rng) {
  obs.meta.snr_db = snr_db;
  if (std::isinf(snr_db) && snr_db > 0) return obs;
  const double noise_power = std::pow(10.0, -snr_db / 10.0);
  const double s = std::sqrt(noise_power / 2.0);
  for (cplx& v : obs.samples) v += cplx{s * rng.normal(), s * rng.normal()};
  return obs;
}

Observation apply_freq_offset(Observation obs, double freq_offset) {
  obs.meta.freq_offset = freq_offset;
  if (freq_offset == 0.0) return obs;
  // phase recurrence: one complex multiply per sample
  const cplx step{std::cos(2.0 * kPi * freq_offset), std::sin(2.0 * kPi * freq_offset)};
  cplx rot{1.0, 0.0};
  for (std::size_t n = 0; n < obs.samples.size(); ++n) {
    // recompute the rotator periodically to stop drift from accumulating
    if ((n & 0x3ff) == 0) {
      const double a = 2.0 * kPi * freq_offset * static_cast<double>(n);
      rot = {std::cos(a), std::sin(a)};
    }
    obs.samples[n] *= rot;
    rot *= step;
  }
  return obs;
}

Observation apply_srm(Observation obs, double ratio) {
  if (!(ratio >= 0.5 && ratio <= 2.0))
    throw ValidationError("apply_srm: ratio must lie in [0.5, 2]");
  obs.meta.srm = ratio;

  const std::size_t in_len = obs.samples.size();
  const std::size_t out_len =
      static_cast<std::size_t>(std::floor(static_cast<double>(in_len) * ratio));
  if (out_len == 0) throw ValidationError("apply_srm: output would be empty");

  const double fc = ratio >= 1.0 ? 0.5 : 0.45 * ratio;
  const std::vector<double> bank = build_phase_bank(fc);
  const std::vector<cplx>& x = obs.samples;
  std::vector<cplx> y(out_len);

  const double step = 1.0 / ratio;
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) * step;
    const auto n0 = static_cast<std::int64_t>(std::floor(t));
    const double frac = t - static_cast<double>(n0);
    const double pos = frac * kPhases;
    const int p = std::min(static_cast<int>(pos), kPhases - 1);
    const double blend = pos - p;
    const double* t0 = &bank[static_cast<std::size_t>(p) * kTapsPerPhase];
    const double* t1 = t0 + kTapsPerPhase;

    cplx acc{0.0, 0.0};
    for (int j = 0; j < kTapsPerPhase; ++j) {
      const std::int64_t idx = n0 - (kHalfTaps - 1) + j;
      if (idx < 0 || idx >= static_cast<std::int64_t>(in_len)) continue;
      const double w = t0[j] * (1.0 - blend) + t1[j] * blend;
      acc += x[static_cast<std::size_t>(idx)] * w;
    }
    y[m] = acc;
  }
  normalize_power(y);
  obs.samples = std::move(y);
  return obs;
}

Observation apply_iqi(Observation obs, double g_tx, double g_rx, double phi_tx,
                      double phi_rx) {
  obs.meta.g_tx = g_tx;
  obs.meta.g_rx = g_rx;
  obs.meta.phi_tx = phi_tx;
  obs.meta.phi_rx = phi_rx;
  const cplx re_coef{0.0, -g_rx * std::sin(phi_rx)};
  const cplx im_coef{-g_tx * std::sin(phi_tx),
                     g_tx * g_rx * std::cos(phi_tx - phi_rx) - 1.0};
  for (cplx& v : obs.samples) v += v.real() * re_coef + v.imag() * im_coef;
  return obs;
}

namespace {

Observation synth_one(const SynthConfig& config, std::uint64_t seed, int class_idx,
                      int obs_idx) {
  RandomStream rng = RandomStream::derive(
      seed, {stream_tag::kSynth, static_cast<std::uint64_t>(class_idx),
             static_cast<std::uint64_t>(obs_idx)});
  const double snr = rng.uniform(config.snr_db.lo, config.snr_db.hi);
  const double fo = rng.uniform(config.freq_offset.lo, config.freq_offset.hi);
  const double ratio = rng.uniform(config.srm.lo, config.srm.hi);
  const double g_tx = rng.uniform(config.iqi_g.lo, config.iqi_g.hi);
  const double g_rx = rng.uniform(config.iqi_g.lo, config.iqi_g.hi);
  const double phi_tx = rng.uniform(config.iqi_phi.lo, config.iqi_phi.hi);
  const double phi_rx = rng.uniform(config.iqi_phi.lo, config.iqi_phi.hi);

  // synthesize enough pre-resampling samples that the trim always succeeds
  const auto pre_len =
      static_cast<int>(std::ceil((config.obs_len + kTapsPerPhase) / ratio));
  const int n_symbols = (pre_len + config.sps - 1) / config.sps;

  Observation obs =
      modulate(config.schemes[class_idx], n_symbols, config.sps, config.pulse, rng);
  obs = apply_iqi(std::move(obs), g_tx, g_rx, phi_tx, phi_rx);
  obs = apply_freq_offset(std::move(obs), fo);
  obs = apply_srm(std::move(obs), ratio);
  obs.samples.resize(config.obs_len);
  normalize_power(obs.samples);
  obs = add_awgn(std::move(obs), snr, rng);
  obs.label = class_idx;
  return obs;
}

void validate_synth(const SynthConfig& config) {
  if (config.schemes.empty()) throw ValidationError("synth: no schemes configured");
  if (config.per_class < 0) throw ValidationError("synth: per_class must be >= 0");
  if (config.obs_len < 64) throw ValidationError("synth: obs_len must be >= 64");
  if (config.sps < 1) throw ValidationError("synth: sps must be >= 1");
  if (!(config.srm.lo >= 0.5 && config.srm.hi <= 2.0 && config.srm.lo <= config.srm.hi))
    throw ValidationError("synth: srm range must lie in [0.5, 2]");
}

}  // namespace

Dataset synth_dataset(const SynthConfig& config, std::uint64_t seed, int jobs) {
  validate_synth(config);
  const int n_classes = static_cast<int>(config.schemes.size());
  const std::int64_t total = static_cast<std::int64_t>(n_classes) * config.per_class;
  Dataset ds;
  ds.n_classes = n_classes;
  ds.observations.resize(total);

  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  bool failed = false;
  std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < total; ++i) {
    try {
      const int class_idx = static_cast<int>(i / config.per_class);
      const int obs_idx = static_cast<int>(i % config.per_class);
      ds.observations[i] = synth_one(config, seed, class_idx, obs_idx);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("synth_dataset: " + error);
  return ds;
}

Dataset synth_dataset_serial(const SynthConfig& config, std::uint64_t seed) {
  validate_synth(config);
  const int n_classes = static_cast<int>(config.schemes.size());
  Dataset ds;
  ds.n_classes = n_classes;
  ds.observations.reserve(static_cast<std::size_t>(n_classes) * config.per_class);
  for (int c = 0; c < n_classes; ++c)
    for (int i = 0; i < config.per_class; ++i)
      ds.observations.push_back(synth_one(config, seed, c, i));
  return ds;
}

Dataset augment_dataset(const Dataset& base, const AugmentRanges& ranges,
                        std::uint64_t seed, int jobs) {
  if (base.observations.empty())
    throw ValidationError("augment_dataset: base dataset is empty");
  if (ranges.n_augments < 1)
    throw ValidationError("augment_dataset: n_augments must be >= 1");

  const std::int64_t n_base = static_cast<std::int64_t>(base.observations.size());
  const std::int64_t total = n_base * ranges.n_augments;
  Dataset out;
  out.n_classes = base.n_classes;
  out.observations.resize(total);

  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  bool failed = false;
  std::string error;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < total; ++i) {
    try {
      const std::int64_t a = i / n_base;
      const std::int64_t b = i % n_base;
      RandomStream rng = RandomStream::derive(
          seed, {stream_tag::kAugment, static_cast<std::uint64_t>(a),
                 static_cast<std::uint64_t>(b)});
      Observation obs = base.observations[static_cast<std::size_t>(b)];
      obs.source_index = b;
      const double snr = rng.uniform(ranges.snr_db.lo, ranges.snr_db.hi);
      const double fo = rng.uniform(ranges.freq_offset.lo, ranges.freq_offset.hi);
      const double ratio = rng.uniform(ranges.srm.lo, ranges.srm.hi);
      if (fo != 0.0) obs = apply_freq_offset(std::move(obs), fo);
      if (ratio != 1.0) obs = apply_srm(std::move(obs), ratio);
      if (!(std::isinf(snr) && snr > 0)) obs = add_awgn(std::move(obs), snr, rng);
      out.observations[i] = std::move(obs);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("augment_dataset: " + error);
  return out;
}

}  // namespace dataneeds::rfsignal
