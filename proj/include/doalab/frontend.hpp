#pragma once

#include <Eigen/Dense>

#include "doalab/geometry.hpp"
#include "doalab/neural/tensor.hpp"
#include "doalab/stft.hpp"
#include "doalab/wav.hpp"

namespace doalab {

// Far-field UCA steering at one frequency: d_m = exp(j 2 pi f tau_m) with
// tau_m = (r/c) cos(theta - psi_m). Unit modulus per entry.
Eigen::VectorXcd steering_vector(const ArrayGeometry& g, double freq_hz, double theta_rad);

// a~^n = |d^n(f)^H y(t,f)|^2, then zeroed wherever some other source's a~
// is strictly larger (exact ties keep both). One T x F map per source.
std::vector<neural::Matf> angle_features(const MultichannelSpectrogram& s,
                                         const std::vector<double>& doas_rad,
                                         const ArrayGeometry& g);

// Angle features normalized per bin into soft masks summing to one;
// bins where every feature is zero fall back to 1/N.
std::vector<neural::Matf> angle_mask(const MultichannelSpectrogram& s,
                                     const std::vector<double>& doas_rad,
                                     const ArrayGeometry& g);

struct SpatialCovariance {
    std::vector<Eigen::MatrixXcd> phi;  // one M x M Hermitian matrix per bin
};

// Phi(f) = sum_t l(t,f) y y^H / sum_t l(t,f); an all-zero mask column gives
// the zero matrix rather than 0/0.
SpatialCovariance scm_from_mask(const MultichannelSpectrogram& s, const neural::Matf& mask);

struct BeamformerWeights {
    std::vector<Eigen::VectorXcd> b;  // one M-vector per bin
    int ref_mic = 0;
};

// Souden MVDR: b = [(Phi_i + Phi_n)^-1 Phi_t / Tr(...)] u. A null noise
// pointer means the all-zero noise SCM. Near-singular denominators get
// diagonal loading 1e-6 trace/M and one retry.
BeamformerWeights mvdr_weights(const SpatialCovariance& target,
                               const SpatialCovariance& interference,
                               const SpatialCovariance* noise, int ref_mic);

// x(t,f) = b(f)^H y(t,f); keeps stft metadata so the result can be inverted.
MultichannelSpectrogram apply_beamformer(const MultichannelSpectrogram& s,
                                         const BeamformerWeights& w);

// Full chain per source: mask -> SCM -> MVDR (interference = sum of the
// other sources' SCMs, zero noise) -> apply -> istft.
std::vector<Waveform> separate(const MultichannelSpectrogram& s,
                               const std::vector<neural::Matf>& masks, int ref_mic = 1);

}  // namespace doalab
