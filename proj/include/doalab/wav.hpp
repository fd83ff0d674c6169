#pragma once

#include <string>
#include <vector>

namespace doalab {

// Deinterleaved multichannel audio, samples in [-1, 1] by convention.
struct Waveform {
    std::vector<std::vector<double>> channels;  // [M][N]
    double sample_rate = 0.0;

    int num_channels() const { return static_cast<int>(channels.size()); }
    size_t num_samples() const { return channels.empty() ? 0 : channels[0].size(); }
};

enum class WavFormat { Pcm16, Float32 };

// RIFF/WAVE reader; accepts PCM16 and IEEE float32 chunks only.
Waveform wav_read(const std::string& path);

// Float32 keeps samples bit-exact through a round trip; PCM16 clamps and
// rounds to nearest.
void wav_write(const std::string& path, const Waveform& w, WavFormat fmt = WavFormat::Float32);

}  // namespace doalab
