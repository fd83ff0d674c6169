#include "doalab/frontend.hpp"

#include <algorithm>
#include <cmath>

namespace doalab {

using neural::Matf;

Eigen::VectorXcd steering_vector(const ArrayGeometry& g, double freq_hz, double theta_rad) {
    const int M = g.num_mics();
    Eigen::VectorXcd d(M);
    for (int m = 0; m < M; ++m) {
        const double tau = g.radius_m / kSpeedOfSound * std::cos(theta_rad - g.mic_angle(m));
        const double ph = kTwoPi * freq_hz * tau;
        d(m) = std::complex<double>(std::cos(ph), std::sin(ph));
    }
    return d;
}

std::vector<Matf> angle_features(const MultichannelSpectrogram& s,
                                 const std::vector<double>& doas_rad, const ArrayGeometry& g) {
    const auto N = doas_rad.size();
    DOALAB_CHECK(N >= 1, "angle_features: no directions");
    DOALAB_CHECK(s.M == g.num_mics(), "angle_features: geometry mismatch");
    std::vector<Matf> maps(N, Matf(s.T, s.F));

    // steering per (source, bin)
    std::vector<Eigen::MatrixXcd> steer(N);
    for (size_t n = 0; n < N; ++n) {
        steer[n].resize(s.M, s.F);
        for (int f = 0; f < s.F; ++f)
            steer[n].col(f) = steering_vector(g, s.sample_rate * f / s.cfg.fft_size, doas_rad[n]);
    }
    Eigen::VectorXcd y(s.M);
    std::vector<double> raw(N);
    for (int t = 0; t < s.T; ++t)
        for (int f = 0; f < s.F; ++f) {
            for (int m = 0; m < s.M; ++m) y(m) = s.at(t, m, f);
            for (size_t n = 0; n < N; ++n) raw[n] = std::norm(steer[n].col(f).dot(y));
            const double best = *std::max_element(raw.begin(), raw.end());
            for (size_t n = 0; n < N; ++n)
                maps[n](t, f) = raw[n] >= best ? static_cast<float>(raw[n]) : 0.0f;
        }
    return maps;
}

std::vector<Matf> angle_mask(const MultichannelSpectrogram& s, const std::vector<double>& doas_rad,
                             const ArrayGeometry& g) {
    auto maps = angle_features(s, doas_rad, g);
    const auto N = maps.size();
    for (int t = 0; t < s.T; ++t)
        for (int f = 0; f < s.F; ++f) {
            double sum = 0.0;
            for (const auto& m : maps) sum += m(t, f);
            for (auto& m : maps)
                m(t, f) = sum > 0.0 ? static_cast<float>(m(t, f) / sum)
                                    : 1.0f / static_cast<float>(N);
        }
    return maps;
}

SpatialCovariance scm_from_mask(const MultichannelSpectrogram& s, const Matf& mask) {
    DOALAB_CHECK(mask.rows() == s.T && mask.cols() == s.F, "scm_from_mask: mask shape mismatch");
    SpatialCovariance out;
    out.phi.assign(static_cast<size_t>(s.F), Eigen::MatrixXcd::Zero(s.M, s.M));
    Eigen::VectorXcd y(s.M);
    for (int f = 0; f < s.F; ++f) {
        auto& phi = out.phi[static_cast<size_t>(f)];
        double wsum = 0.0;
        for (int t = 0; t < s.T; ++t) {
            const double l = mask(t, f);
            if (l == 0.0) continue;
            for (int m = 0; m < s.M; ++m) y(m) = s.at(t, m, f);
            phi.noalias() += l * (y * y.adjoint());
            wsum += l;
        }
        if (wsum > 0.0)
            phi /= wsum;
        else
            phi.setZero();
    }
    return out;
}

BeamformerWeights mvdr_weights(const SpatialCovariance& target,
                               const SpatialCovariance& interference,
                               const SpatialCovariance* noise, int ref_mic) {
    const size_t F = target.phi.size();
    DOALAB_CHECK(F > 0 && interference.phi.size() == F, "mvdr_weights: SCM length mismatch");
    DOALAB_CHECK(!noise || noise->phi.size() == F, "mvdr_weights: noise SCM length mismatch");
    const auto M = target.phi[0].rows();
    DOALAB_CHECK(ref_mic >= 0 && ref_mic < M, "mvdr_weights: bad reference mic");

    BeamformerWeights out;
    out.ref_mic = ref_mic;
    out.b.assign(F, Eigen::VectorXcd::Zero(M));
    for (size_t f = 0; f < F; ++f) {
        const auto& tgt = target.phi[f];
        if (tgt.cwiseAbs().maxCoeff() == 0.0) continue;  // silent bin, keep b = 0
        Eigen::MatrixXcd den = interference.phi[f];
        if (noise) den += noise->phi[f];

        auto solve = [&](const Eigen::MatrixXcd& d) -> Eigen::VectorXcd {
            Eigen::MatrixXcd x = d.fullPivLu().solve(tgt);
            const std::complex<double> tr = x.trace();
            return x.col(ref_mic) / tr;
        };
        // loading scale: the denominator's own trace, or the target's when the
        // denominator is all-zero (interference-free bin)
        double base = std::abs(den.trace()) / static_cast<double>(M);
        if (base == 0.0) base = std::abs(tgt.trace()) / static_cast<double>(M);
        Eigen::VectorXcd b = solve(den);
        if (!b.allFinite()) {
            den += 1e-6 * base * Eigen::MatrixXcd::Identity(M, M);
            b = solve(den);
            DOALAB_CHECK(b.allFinite(), "mvdr_weights: denominator singular after loading");
        }
        out.b[f] = b;
    }
    return out;
}

MultichannelSpectrogram apply_beamformer(const MultichannelSpectrogram& s,
                                         const BeamformerWeights& w) {
    DOALAB_CHECK(static_cast<int>(w.b.size()) == s.F, "apply_beamformer: bin count mismatch");
    MultichannelSpectrogram out;
    out.T = s.T;
    out.M = 1;
    out.F = s.F;
    out.cfg = s.cfg;
    out.sample_rate = s.sample_rate;
    out.orig_samples = s.orig_samples;
    out.data.assign(static_cast<size_t>(s.T) * s.F, {0.0, 0.0});
    Eigen::VectorXcd y(s.M);
    for (int t = 0; t < s.T; ++t)
        for (int f = 0; f < s.F; ++f) {
            for (int m = 0; m < s.M; ++m) y(m) = s.at(t, m, f);
            out.at(t, 0, f) = w.b[static_cast<size_t>(f)].dot(y);  // b^H y
        }
    return out;
}

std::vector<Waveform> separate(const MultichannelSpectrogram& s, const std::vector<Matf>& masks,
                               int ref_mic) {
    const auto N = masks.size();
    DOALAB_CHECK(N >= 1, "separate: no masks");
    std::vector<SpatialCovariance> scms;
    scms.reserve(N);
    for (const auto& m : masks) scms.push_back(scm_from_mask(s, m));

    std::vector<Waveform> out;
    out.reserve(N);
    for (size_t n = 0; n < N; ++n) {
        SpatialCovariance intf;
        intf.phi.assign(static_cast<size_t>(s.F), Eigen::MatrixXcd::Zero(s.M, s.M));
        for (size_t i = 0; i < N; ++i) {
            if (i == n) continue;
            for (int f = 0; f < s.F; ++f) intf.phi[static_cast<size_t>(f)] += scms[i].phi[static_cast<size_t>(f)];
        }
        auto w = mvdr_weights(scms[n], intf, nullptr, ref_mic);
        out.push_back(istft(apply_beamformer(s, w)));
    }
    return out;
}

}  // namespace doalab
