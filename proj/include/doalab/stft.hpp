#pragma once

#include <complex>
#include <vector>

#include "doalab/common.hpp"
#include "doalab/wav.hpp"

namespace doalab {

struct STFTConfig {
    double window_ms = 25.0;
    double hop_ms = 10.0;
    int fft_size = 512;

    int window_samples(double fs) const { return static_cast<int>(window_ms * fs / 1000.0 + 0.5); }
    int hop_samples(double fs) const { return static_cast<int>(hop_ms * fs / 1000.0 + 0.5); }
    int num_bins() const { return fft_size / 2 + 1; }
};

// Dense (T, M, F) complex array, frame-major.
struct MultichannelSpectrogram {
    int T = 0;  // frames
    int M = 0;  // channels
    int F = 0;  // bins
    std::vector<std::complex<double>> data;  // t*M*F + m*F + f
    STFTConfig cfg;
    double sample_rate = 0.0;
    size_t orig_samples = 0;  // for exact-length inversion

    std::complex<double>& at(int t, int m, int f) {
        return data[(static_cast<size_t>(t) * M + m) * F + f];
    }
    const std::complex<double>& at(int t, int m, int f) const {
        return data[(static_cast<size_t>(t) * M + m) * F + f];
    }
};

// Periodic Hann, w[n] = 0.5 (1 - cos(2 pi n / N)).
std::vector<double> hann_window(int n);

// Analysis pads win-hop zeros in front so the first window is not dominated
// by onset samples; synthesis removes the pad again.
MultichannelSpectrogram stft(const Waveform& w, const STFTConfig& cfg = {});
Waveform istft(const MultichannelSpectrogram& s);

// Angles wrapped to [0, 2 pi).
std::vector<double> phase_spectrum(const MultichannelSpectrogram& s);  // same (T,M,F) layout

}  // namespace doalab
