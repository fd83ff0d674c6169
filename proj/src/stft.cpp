#include "doalab/stft.hpp"

#include <cmath>

#include "doalab/fft.hpp"

namespace doalab {

std::vector<double> hann_window(int n) {
    DOALAB_CHECK(n > 0, "hann_window: n must be positive");
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(kTwoPi * i / n));
    return w;
}

MultichannelSpectrogram stft(const Waveform& wav, const STFTConfig& cfg) {
    DOALAB_CHECK(wav.num_channels() > 0 && wav.num_samples() > 0, "stft: empty input");
    const double fs = wav.sample_rate;
    DOALAB_CHECK(fs > 0, "stft: sample_rate not set");
    const int win = cfg.window_samples(fs);
    const int hop = cfg.hop_samples(fs);
    DOALAB_CHECK(hop > 0 && win >= hop, "stft: window must cover the hop");
    DOALAB_CHECK(cfg.fft_size >= win, "stft: fft_size smaller than window");

    const int pad = win - hop;
    const size_t n = wav.num_samples();
    const int T = static_cast<int>((n + static_cast<size_t>(pad) + hop - 1) / hop);
    const auto window = hann_window(win);

    MultichannelSpectrogram s;
    s.T = T;
    s.M = wav.num_channels();
    s.F = cfg.num_bins();
    s.cfg = cfg;
    s.sample_rate = fs;
    s.orig_samples = n;
    s.data.assign(static_cast<size_t>(T) * s.M * s.F, {0.0, 0.0});

    std::vector<double> frame(static_cast<size_t>(win));
    for (int m = 0; m < s.M; ++m) {
        const auto& x = wav.channels[static_cast<size_t>(m)];
        for (int t = 0; t < T; ++t) {
            const long start = static_cast<long>(t) * hop - pad;  // padded index 0 = -pad
            for (int i = 0; i < win; ++i) {
                const long src = start + i;
                frame[static_cast<size_t>(i)] =
                    (src >= 0 && src < static_cast<long>(n))
                        ? x[static_cast<size_t>(src)] * window[static_cast<size_t>(i)]
                        : 0.0;
            }
            auto spec = rfft(frame, cfg.fft_size);
            for (int f = 0; f < s.F; ++f) s.at(t, m, f) = spec[static_cast<size_t>(f)];
        }
    }
    return s;
}

Waveform istft(const MultichannelSpectrogram& s) {
    DOALAB_CHECK(s.T > 0 && s.M > 0 && s.F == s.cfg.num_bins(), "istft: malformed spectrogram");
    const double fs = s.sample_rate;
    const int win = s.cfg.window_samples(fs);
    const int hop = s.cfg.hop_samples(fs);
    const int pad = win - hop;
    const auto window = hann_window(win);

    const size_t padded = static_cast<size_t>(s.T - 1) * hop + win;
    std::vector<double> wsum(padded, 0.0);
    for (int t = 0; t < s.T; ++t)
        for (int i = 0; i < win; ++i)
            wsum[static_cast<size_t>(t) * hop + i] +=
                window[static_cast<size_t>(i)] * window[static_cast<size_t>(i)];

    Waveform out;
    out.sample_rate = fs;
    out.channels.assign(static_cast<size_t>(s.M), std::vector<double>(s.orig_samples, 0.0));

    std::vector<cplx> half(static_cast<size_t>(s.F));
    std::vector<double> acc(padded);
    for (int m = 0; m < s.M; ++m) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int t = 0; t < s.T; ++t) {
            for (int f = 0; f < s.F; ++f) half[static_cast<size_t>(f)] = s.at(t, m, f);
            auto frame = irfft(half, s.cfg.fft_size);
            for (int i = 0; i < win; ++i)
                acc[static_cast<size_t>(t) * hop + i] +=
                    frame[static_cast<size_t>(i)] * window[static_cast<size_t>(i)];
        }
        auto& ch = out.channels[static_cast<size_t>(m)];
        for (size_t i = 0; i < s.orig_samples; ++i) {
            const size_t p = i + static_cast<size_t>(pad);
            if (p < padded && wsum[p] > 1e-12) ch[i] = acc[p] / wsum[p];
        }
    }
    return out;
}

std::vector<double> phase_spectrum(const MultichannelSpectrogram& s) {
    std::vector<double> ph(s.data.size());
    for (size_t i = 0; i < s.data.size(); ++i) {
        double a = std::atan2(s.data[i].imag(), s.data[i].real());
        if (a < 0) a += kTwoPi;
        ph[i] = a;
    }
    return ph;
}

}  // namespace doalab
