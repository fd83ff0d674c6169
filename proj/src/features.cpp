#include "doalab/features.hpp"

#include <cmath>

namespace doalab {

using neural::Matf;

Matf phase_features(const MultichannelSpectrogram& s) {
    Matf out(s.T, s.M * s.F);
    for (int t = 0; t < s.T; ++t)
        for (int m = 0; m < s.M; ++m)
            for (int f = 0; f < s.F; ++f) {
                const auto& v = s.at(t, m, f);
                double a = std::atan2(v.imag(), v.real());
                if (a < 0) a += kTwoPi;
                out(t, m * s.F + f) = static_cast<float>(a);
            }
    return out;
}

Matf ipd_features(const MultichannelSpectrogram& s, const ArrayGeometry& g) {
    DOALAB_CHECK(s.M == g.num_mics(), "ipd_features: channel count does not match geometry");
    const int I = static_cast<int>(g.ipd_pairs.size());
    const int F = s.F;
    const double inv_m = 1.0 / g.num_mics();
    Matf out(s.T, 2 * I * F + F);
    for (int t = 0; t < s.T; ++t) {
        for (int i = 0; i < I; ++i) {
            const auto [a, b] = g.ipd_pairs[static_cast<size_t>(i)];
            for (int f = 0; f < F; ++f) {
                const auto r = s.at(t, a, f) * std::conj(s.at(t, b, f));
                const double d = std::atan2(r.imag(), r.real());
                out(t, 2 * i * F + f) = static_cast<float>(inv_m * std::cos(d));
                out(t, (2 * i + 1) * F + f) = static_cast<float>(inv_m * std::sin(d));
            }
        }
        for (int f = 0; f < F; ++f)
            out(t, 2 * I * F + f) = static_cast<float>(std::abs(s.at(t, 0, f)));
    }
    return out;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

Matf logmel_mvn(const MultichannelSpectrogram& s, int channel, int n_mels) {
    DOALAB_CHECK(channel >= 0 && channel < s.M, "logmel_mvn: bad channel");
    DOALAB_CHECK(n_mels > 0, "logmel_mvn: bad band count");
    const int F = s.F;
    const double nyquist = s.sample_rate / 2.0;
    const double mel_hi = hz_to_mel(nyquist);

    // triangular filterbank on FFT bin centers
    std::vector<double> centers(static_cast<size_t>(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i)
        centers[static_cast<size_t>(i)] = mel_to_hz(mel_hi * i / (n_mels + 1));
    Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, F);
    for (int b = 0; b < n_mels; ++b) {
        const double lo = centers[static_cast<size_t>(b)];
        const double mid = centers[static_cast<size_t>(b) + 1];
        const double hi = centers[static_cast<size_t>(b) + 2];
        for (int f = 0; f < F; ++f) {
            const double hz = nyquist * f / (F - 1);
            if (hz > lo && hz < mid)
                fb(b, f) = (hz - lo) / (mid - lo);
            else if (hz >= mid && hz < hi)
                fb(b, f) = (hi - hz) / (hi - mid);
        }
    }

    Matf out(s.T, n_mels);
    Eigen::VectorXd power(F);
    for (int t = 0; t < s.T; ++t) {
        for (int f = 0; f < F; ++f) power(f) = std::norm(s.at(t, channel, f));
        Eigen::VectorXd mel = fb * power;
        for (int b = 0; b < n_mels; ++b)
            out(t, b) = static_cast<float>(std::log(std::max(mel(b), 1e-10)));
    }
    // per-utterance mean/variance normalization, per band
    for (int b = 0; b < n_mels; ++b) {
        const double mean = out.col(b).cast<double>().mean();
        double var = 0.0;
        for (int t = 0; t < s.T; ++t) {
            const double d = out(t, b) - mean;
            var += d * d;
        }
        const double sd = std::max(std::sqrt(var / s.T), 1e-8);
        for (int t = 0; t < s.T; ++t)
            out(t, b) = static_cast<float>((out(t, b) - mean) / sd);
    }
    return out;
}

}  // namespace doalab
