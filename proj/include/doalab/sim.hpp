#pragma once

#include <array>
#include <vector>

#include "doalab/geometry.hpp"
#include "doalab/neural/tensor.hpp"
#include "doalab/rng.hpp"
#include "doalab/stft.hpp"
#include "doalab/wav.hpp"

namespace doalab {

struct RoomSpec {
    double length = 0.0, width = 0.0, height = 0.0;  // meters
    double t60 = 0.0;                                // seconds
    std::array<double, 3> array_center{};            // meters
    ArrayGeometry geometry;
};

struct SourcePlacement {
    double azimuth_rad = 0.0;  // relative to array center
    double distance_m = 0.0;   // horizontal; source shares the array height
};

struct RIR {
    std::vector<std::vector<double>> h;  // [M][L]
    double sample_rate = 0.0;
};

struct ImageMethodConfig {
    double sample_rate = 16000.0;
    double duration_s = 0.0;   // 0 = auto: enough tail for a Schroeder fit
    int sinc_halfwidth = 32;   // taps each side of the fractional-delay kernel
};

std::array<double, 3> mic_position(const RoomSpec& room, int m);
std::array<double, 3> source_position(const RoomSpec& room, const SourcePlacement& p);

// Allen-Berkley image method with uniform wall reflectivity from Eyring's
// formula. t60 = 0 gives the free-field response (direct path only).
RIR image_method_rir(const RoomSpec& room, const SourcePlacement& src,
                     const ImageMethodConfig& cfg = {});

struct MixtureExample {
    Waveform mixture;                 // M channels
    std::vector<Waveform> images;     // per-source reverberant images, M channels
    Waveform noise;                   // scaled noise actually added (may be empty)
    std::vector<double> doas_rad;
    double snr_db = 0.0;
    RoomSpec room;
};

// images = source (x) RIR per mic; noise is scaled so the ratio of summed
// image power to noise power hits snr_db. Empty noise skips the noise term.
MixtureExample synthesize_mixture(const std::vector<std::vector<double>>& sources,
                                  const RoomSpec& room,
                                  const std::vector<SourcePlacement>& placements,
                                  const Waveform& noise, double snr_db,
                                  const ImageMethodConfig& cfg = {});

// Speech-shaped modulated noise burst, unit RMS.
std::vector<double> speech_burst(size_t num_samples, double fs, Rng& rng);

// Cylindrically isotropic speech-shaped noise: independent spectra shaped to
// the J0 inter-mic coherence of a diffuse horizontal field.
Waveform isotropic_noise(const ArrayGeometry& g, size_t num_samples, double fs, Rng& rng);

// mask_n(t,f) = 1 iff source n strictly dominates at the reference channel;
// ties go to the lowest index, so the masks partition every bin.
std::vector<neural::Matf> ideal_binary_mask(const std::vector<MultichannelSpectrogram>& images,
                                            int ref_channel);

}  // namespace doalab
