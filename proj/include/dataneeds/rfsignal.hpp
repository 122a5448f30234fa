#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dataneeds/rng.hpp"

namespace dataneeds::rfsignal {

using cplx = std::complex<double>;

// Impairment parameters applied to one observation. snr_db of +infinity
// means no additive noise.
struct ChannelParams {
  double snr_db = std::numeric_limits<double>::infinity();
  double freq_offset = 0.0;  // cycles per sample
  double srm = 1.0;          // resample ratio
  double g_tx = 1.0;         // magnitude ratio imbalances
  double g_rx = 1.0;
  double phi_tx = 0.0;  // quadrature/in-phase mixer phase differences, radians
  double phi_rx = 0.0;
  double gain = 1.0;   // static channel unknowns; identity by default
  double phase = 0.0;
  std::uint32_t delay_samples = 0;
};

struct Observation {
  std::vector<cplx> samples;  // complex baseband, unit average power by convention
  int label = 0;
  ChannelParams meta;
  std::int64_t source_index = -1;  // augmentation provenance; -1 = synthesized
};

enum class Scheme { kBpsk = 0, kQpsk, kPsk8, kQam16, kQam64 };

struct ModulationScheme {
  std::string name;
  int bits_per_symbol;
  std::vector<cplx> constellation;  // unit average power
};

const ModulationScheme& scheme_info(Scheme s);
std::optional<Scheme> scheme_from_name(std::string_view name);

enum class PulseShape { kRectangular, kRootRaisedCosine };

// Root-raised-cosine taps, roll-off 0.35, span 8 symbols.
std::vector<double> rrc_taps(int sps, double beta = 0.35, int span = 8);

// Random symbols mapped onto the constellation, upsampled, pulse shaped,
// normalized to unit average power.
Observation modulate(Scheme scheme, int n_symbols, int sps, PulseShape pulse,
                     RandomStream& rng);

// Circularly symmetric complex Gaussian noise at the given SNR relative to a
// unit-power signal. +infinity bypasses.
Observation add_awgn(Observation obs, double snr_db, RandomStream& rng);

// samples[n] *= exp(j 2 pi f n)
Observation apply_freq_offset(Observation obs, double freq_offset);

// Band-limited arbitrary-ratio resampling (windowed-sinc polyphase kernel,
// Kaiser beta=8, 32 taps per phase). Output length floor(len * ratio),
// renormalized to unit average power. Ratio 1 is an exact pass-through of
// unit-power input.
Observation apply_srm(Observation obs, double ratio);

// Additive frequency-independent IQ imbalance:
//   x += re(x)*(-j g_rx sin(phi_rx))
//      + im(x)*(-g_tx sin(phi_tx) + j(g_tx g_rx cos(phi_tx - phi_rx) - 1))
Observation apply_iqi(Observation obs, double g_tx, double g_rx, double phi_tx,
                      double phi_rx);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool zero_width() const { return lo == hi; }
};

struct SynthConfig {
  std::vector<Scheme> schemes;
  int per_class = 0;
  int obs_len = 1024;
  int sps = 4;
  PulseShape pulse = PulseShape::kRootRaisedCosine;
  Range snr_db{10.0, 10.0};
  Range freq_offset{0.0, 0.0};
  Range srm{1.0, 1.0};
  Range iqi_g{1.0, 1.0};    // shared range for g_tx and g_rx
  Range iqi_phi{0.0, 0.0};  // shared range for phi_tx and phi_rx
};

struct Dataset {
  std::vector<Observation> observations;
  int n_classes = 0;
};

// Per-observation chain modulate -> IQI -> FO -> SRM -> trim -> AWGN, each
// observation on its own derived stream so the result does not depend on the
// thread count. jobs <= 0 uses all available threads.
Dataset synth_dataset(const SynthConfig& config, std::uint64_t seed, int jobs = 0);
Dataset synth_dataset_serial(const SynthConfig& config, std::uint64_t seed);

struct AugmentRanges {
  Range snr_db{std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
  Range freq_offset{0.0, 0.0};
  Range srm{1.0, 1.0};
  int n_augments = 1;
};

// Fresh SNR/FO/SRM permutations of stored observations (no IQI
// re-application). Impairments drawn exactly at their identity value are
// skipped, so zero-width identity ranges reproduce the base observations.
Dataset augment_dataset(const Dataset& base, const AugmentRanges& ranges,
                        std::uint64_t seed, int jobs = 0);

}  // namespace dataneeds::rfsignal
