#pragma once

#include "doalab/geometry.hpp"
#include "doalab/neural/tensor.hpp"
#include "doalab/stft.hpp"

namespace doalab {

// Per-frame phase map for the convolutional models: row t holds the wrapped
// phases of all mics, flattened mic-major (m*F + f). Shape T x (M*F).
neural::Matf phase_features(const MultichannelSpectrogram& s);

// Inter-channel phase differences for the recurrent models. For each mic
// pair (a, b) the angle d = arg(Y_a * conj(Y_b)) enters as cos(d)/M and
// sin(d)/M blocks of F columns each; the magnitude spectrum of mic 1 is
// appended. Shape T x (2*I*F + F).
neural::Matf ipd_features(const MultichannelSpectrogram& s, const ArrayGeometry& g);

// 80-band log-mel (HTK mel scale, 0..Nyquist) of the reference channel,
// mean/variance normalized per utterance. Shape T x n_mels.
neural::Matf logmel_mvn(const MultichannelSpectrogram& s, int channel = 0, int n_mels = 80);

}  // namespace doalab
