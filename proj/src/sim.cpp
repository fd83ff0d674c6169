#include "doalab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "doalab/fft.hpp"

namespace doalab {

std::array<double, 3> mic_position(const RoomSpec& room, int m) {
    double dx, dy;
    room.geometry.mic_offset(m, dx, dy);
    return {room.array_center[0] + dx, room.array_center[1] + dy, room.array_center[2]};
}

std::array<double, 3> source_position(const RoomSpec& room, const SourcePlacement& p) {
    return {room.array_center[0] + p.distance_m * std::cos(p.azimuth_rad),
            room.array_center[1] + p.distance_m * std::sin(p.azimuth_rad),
            room.array_center[2]};
}

namespace {

bool inside_room(const RoomSpec& room, const std::array<double, 3>& p, double margin) {
    return p[0] > margin && p[0] < room.length - margin && p[1] > margin &&
           p[1] < room.width - margin && p[2] > margin && p[2] < room.height - margin;
}

}  // namespace

namespace {

// Visits every image of the lattice within max_dist of the receiver with its
// accumulated reflection exponent.
template <class Visit>
void for_each_image(const std::array<double, 3>& spos, const std::array<double, 3>& rpos,
                    const double dims[3], double max_dist, Visit&& visit) {
    int qmax[3];
    for (int d = 0; d < 3; ++d)
        qmax[d] = static_cast<int>(std::ceil(max_dist / (2.0 * dims[d]))) + 1;
    for (int px = 0; px <= 1; ++px)
        for (int py = 0; py <= 1; ++py)
            for (int pz = 0; pz <= 1; ++pz) {
                const double ix0 = (1 - 2 * px) * spos[0] - rpos[0];
                const double iy0 = (1 - 2 * py) * spos[1] - rpos[1];
                const double iz0 = (1 - 2 * pz) * spos[2] - rpos[2];
                for (int qx = -qmax[0]; qx <= qmax[0]; ++qx) {
                    const double dx = ix0 + 2.0 * qx * dims[0];
                    if (std::fabs(dx) > max_dist) continue;
                    const int ex = std::abs(qx - px) + std::abs(qx);
                    for (int qy = -qmax[1]; qy <= qmax[1]; ++qy) {
                        const double dy = iy0 + 2.0 * qy * dims[1];
                        const double dxy2 = dx * dx + dy * dy;
                        if (dxy2 > max_dist * max_dist) continue;
                        const int exy = ex + std::abs(qy - py) + std::abs(qy);
                        for (int qz = -qmax[2]; qz <= qmax[2]; ++qz) {
                            const double dz = iz0 + 2.0 * qz * dims[2];
                            const double dist = std::sqrt(dxy2 + dz * dz);
                            if (dist > max_dist) continue;
                            visit(exy + std::abs(qz - pz) + std::abs(qz), dist);
                        }
                    }
                }
            }
}

// Straight-line Schroeder fit between -5 and -35 dB of an energy-by-sample
// histogram, extrapolated to -60; 0 when the span is too short to fit.
double schroeder_fit(const std::vector<double>& energy, double fs) {
    const size_t n = energy.size();
    std::vector<double> edc(n);
    double acc = 0.0;
    for (size_t i = n; i-- > 0;) {
        acc += energy[i];
        edc[i] = acc;
    }
    if (acc <= 0.0) return 0.0;
    size_t lo = 0, hi = 0;
    auto db = [&](size_t i) { return 10.0 * std::log10(edc[i] / edc[0] + 1e-300); };
    while (lo < n && db(lo) > -5.0) ++lo;
    hi = lo;
    while (hi < n && db(hi) > -35.0) ++hi;
    if (hi <= lo + 2 || hi >= n) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto cnt = static_cast<double>(hi - lo);
    for (size_t i = lo; i < hi; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double y = db(i);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return slope < 0 ? -60.0 / slope : 0.0;
}

// The image sum decays slower than the Eyring mean-rate prediction
// (reflection counts vary with direction), by a room-shape-dependent factor.
// Solve for the reflectivity whose realized Schroeder fit hits the request.
double calibrate_beta(const RoomSpec& room, const std::array<double, 3>& spos, int len,
                      double fs, double max_dist) {
    const double dims[3] = {room.length, room.width, room.height};
    // exponent x delay-bin energy histogram of the undamped lattice
    int max_e = 0;
    for_each_image(spos, room.array_center, dims, max_dist,
                   [&](int e, double) { max_e = std::max(max_e, e); });
    std::vector<std::vector<double>> hist(static_cast<size_t>(max_e) + 1,
                                          std::vector<double>(static_cast<size_t>(len), 0.0));
    for_each_image(spos, room.array_center, dims, max_dist, [&](int e, double dist) {
        const auto bin = static_cast<long>(dist / kSpeedOfSound * fs + 0.5);
        if (bin >= len) return;
        const double a = 1.0 / (4.0 * kPi * std::max(dist, 1e-3));
        hist[static_cast<size_t>(e)][static_cast<size_t>(bin)] += a * a;
    });

    const double V = room.length * room.width * room.height;
    const double S =
        2.0 * (room.length * room.width + room.length * room.height + room.width * room.height);
    const double ln_beta_eyring = -0.0805 * V / (S * room.t60);

    std::vector<double> energy(static_cast<size_t>(len));
    auto measured = [&](double scale) {
        std::fill(energy.begin(), energy.end(), 0.0);
        for (int e = 0; e <= max_e; ++e) {
            const double w = std::exp(2.0 * e * scale * ln_beta_eyring);
            const auto& row = hist[static_cast<size_t>(e)];
            for (int i = 0; i < len; ++i) energy[static_cast<size_t>(i)] += w * row[static_cast<size_t>(i)];
        }
        return schroeder_fit(energy, fs);
    };

    double lo = 0.7, hi = 4.0;
    DOALAB_CHECK(measured(lo) > room.t60, "calibrate_beta: bracket failure (low)");
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double t = measured(mid);
        if (t > room.t60 || t == 0.0)
            lo = mid;  // too reflective (or fit window fell off the tail)
        else
            hi = mid;
    }
    return std::exp(0.5 * (lo + hi) * ln_beta_eyring);
}

}  // namespace

RIR image_method_rir(const RoomSpec& room, const SourcePlacement& src,
                     const ImageMethodConfig& cfg) {
    DOALAB_CHECK(room.t60 >= 0.0, "image_method_rir: negative t60");
    DOALAB_CHECK(room.length > 0 && room.width > 0 && room.height > 0,
                 "image_method_rir: degenerate room");
    const auto spos = source_position(room, src);
    DOALAB_CHECK(inside_room(room, spos, 1e-6), "image_method_rir: source outside room");
    const int M = room.geometry.num_mics();
    DOALAB_CHECK(M > 0, "image_method_rir: no microphones");
    for (int m = 0; m < M; ++m)
        DOALAB_CHECK(inside_room(room, mic_position(room, m), 1e-6),
                     "image_method_rir: microphone outside room");

    const double fs = cfg.sample_rate;
    // Enough tail to fit the decay well past -40 dB; free field needs only
    // the direct path plus kernel support.
    double dur = cfg.duration_s;
    if (dur <= 0.0) dur = room.t60 > 0 ? 0.8 * room.t60 + 0.02 : 0.05;
    const int len = static_cast<int>(std::ceil(dur * fs));
    const int W = cfg.sinc_halfwidth;
    const double max_dist = (len + W) / fs * kSpeedOfSound;
    const double dims[3] = {room.length, room.width, room.height};

    const double beta = room.t60 > 0 ? calibrate_beta(room, spos, len, fs, max_dist) : 0.0;

    // beta^e lookup
    std::vector<double> bpow(1, 1.0);
    auto bpow_at = [&](int e) {
        while (static_cast<size_t>(e) >= bpow.size()) bpow.push_back(bpow.back() * beta);
        return bpow[static_cast<size_t>(e)];
    };

    RIR out;
    out.sample_rate = fs;
    out.h.assign(static_cast<size_t>(M), std::vector<double>(static_cast<size_t>(len), 0.0));

    for (int m = 0; m < M; ++m) {
        auto& h = out.h[static_cast<size_t>(m)];
        for_each_image(spos, mic_position(room, m), dims, max_dist, [&](int e, double dist) {
            if (beta == 0.0 && e > 0) return;
            const double amp = bpow_at(e) / (4.0 * kPi * std::max(dist, 1e-3));
            const double delay = dist / kSpeedOfSound * fs;
            const int lo = std::max(0, static_cast<int>(std::ceil(delay)) - W);
            const int hi = std::min(len - 1, static_cast<int>(std::floor(delay)) + W);
            for (int n = lo; n <= hi; ++n) {
                const double x = n - delay;
                // Hann-windowed sinc, zero-phase at the true delay
                const double wdw = 0.5 * (1.0 + std::cos(kPi * x / (W + 1)));
                const double s = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
                h[static_cast<size_t>(n)] += amp * wdw * s;
            }
        });
        // The all-positive image amplitudes build up a DC drift in the dense
        // late field, which would dominate the energy decay; block everything
        // below the audio band (ramp 40..80 Hz) as usual for this method.
        if (beta > 0.0) {
            size_t n2 = 1;
            while (n2 < 2 * static_cast<size_t>(len)) n2 <<= 1;
            auto spec = rfft(h, static_cast<int>(n2));
            for (size_t k = 0; k < spec.size(); ++k) {
                const double f = fs * static_cast<double>(k) / static_cast<double>(n2);
                if (f <= 40.0)
                    spec[k] = 0.0;
                else if (f < 80.0)
                    spec[k] *= 0.5 * (1.0 - std::cos(kPi * (f - 40.0) / 40.0));
            }
            auto filtered = irfft(spec, static_cast<int>(n2));
            std::copy(filtered.begin(), filtered.begin() + len, h.begin());
        }
    }
    return out;
}

MixtureExample synthesize_mixture(const std::vector<std::vector<double>>& sources,
                                  const RoomSpec& room,
                                  const std::vector<SourcePlacement>& placements,
                                  const Waveform& noise, double snr_db,
                                  const ImageMethodConfig& cfg) {
    const size_t N = sources.size();
    DOALAB_CHECK(N >= 1, "synthesize_mixture: no sources");
    DOALAB_CHECK(placements.size() == N, "synthesize_mixture: placement count mismatch");
    const int M = room.geometry.num_mics();

    MixtureExample ex;
    ex.room = room;
    ex.snr_db = snr_db;
    size_t max_len = 0;

    for (size_t n = 0; n < N; ++n) {
        const auto& s = sources[n];
        DOALAB_CHECK(!s.empty(), "synthesize_mixture: empty source");
        double p = 0.0;
        for (double v : s) p += v * v;
        DOALAB_CHECK(p > 0.0, "synthesize_mixture: silent source");
        auto rir = image_method_rir(room, placements[n], cfg);
        Waveform img;
        img.sample_rate = cfg.sample_rate;
        img.channels.resize(static_cast<size_t>(M));
        for (int m = 0; m < M; ++m)
            img.channels[static_cast<size_t>(m)] = fft_convolve(s, rir.h[static_cast<size_t>(m)]);
        max_len = std::max(max_len, img.channels[0].size());
        ex.images.push_back(std::move(img));
        ex.doas_rad.push_back(wrap_deg(rad2deg(placements[n].azimuth_rad)) * kPi / 180.0);
    }
    for (auto& img : ex.images)
        for (auto& ch : img.channels) ch.resize(max_len, 0.0);

    ex.mixture.sample_rate = cfg.sample_rate;
    ex.mixture.channels.assign(static_cast<size_t>(M), std::vector<double>(max_len, 0.0));
    for (const auto& img : ex.images)
        for (int m = 0; m < M; ++m)
            for (size_t i = 0; i < max_len; ++i)
                ex.mixture.channels[static_cast<size_t>(m)][i] +=
                    img.channels[static_cast<size_t>(m)][i];

    if (noise.num_channels() > 0) {
        DOALAB_CHECK(noise.num_channels() == M, "synthesize_mixture: noise channel mismatch");
        DOALAB_CHECK(noise.num_samples() >= max_len, "synthesize_mixture: noise too short");
        double sp = 0.0, np = 0.0;
        for (int m = 0; m < M; ++m)
            for (size_t i = 0; i < max_len; ++i) {
                sp += ex.mixture.channels[static_cast<size_t>(m)][i] *
                      ex.mixture.channels[static_cast<size_t>(m)][i];
                np += noise.channels[static_cast<size_t>(m)][i] *
                      noise.channels[static_cast<size_t>(m)][i];
            }
        DOALAB_CHECK(np > 0.0, "synthesize_mixture: silent noise");
        const double gain = std::sqrt(sp / (np * std::pow(10.0, snr_db / 10.0)));
        ex.noise.sample_rate = cfg.sample_rate;
        ex.noise.channels.assign(static_cast<size_t>(M), std::vector<double>(max_len));
        for (int m = 0; m < M; ++m)
            for (size_t i = 0; i < max_len; ++i) {
                const double v = gain * noise.channels[static_cast<size_t>(m)][i];
                ex.noise.channels[static_cast<size_t>(m)][i] = v;
                ex.mixture.channels[static_cast<size_t>(m)][i] += v;
            }
    }
    return ex;
}

std::vector<double> speech_burst(size_t num_samples, double fs, Rng& rng) {
    DOALAB_CHECK(num_samples > 0, "speech_burst: empty request");
    size_t n = 1;
    while (n < num_samples) n <<= 1;
    // white spectrum shaped to a speech-like long-term envelope: flat below
    // 500 Hz, -6 dB/oct above, rolled off under 100 Hz
    std::vector<cplx> spec(n / 2 + 1);
    for (size_t k = 0; k <= n / 2; ++k) {
        const double f = fs * static_cast<double>(k) / static_cast<double>(n);
        double g = 1.0 / std::sqrt(1.0 + (f / 500.0) * (f / 500.0));
        g *= f / (f + 100.0);
        spec[k] = cplx(rng.normal() * g, rng.normal() * g);
    }
    spec[0] = 0.0;
    spec[n / 2] = cplx(spec[n / 2].real(), 0.0);
    auto carrier = irfft(spec, static_cast<int>(n));

    // syllabic-rate envelope: |lowpassed noise| with a floor
    std::vector<cplx> env_spec(n / 2 + 1, cplx(0.0, 0.0));
    const double f_mod = 8.0;
    for (size_t k = 1; k <= n / 2; ++k) {
        const double f = fs * static_cast<double>(k) / static_cast<double>(n);
        if (f < f_mod) env_spec[k] = cplx(rng.normal(), rng.normal());
    }
    auto env = irfft(env_spec, static_cast<int>(n));
    double erms = 0.0;
    for (double v : env) erms += v * v;
    erms = std::sqrt(erms / static_cast<double>(n)) + 1e-12;

    std::vector<double> out(num_samples);
    double rms = 0.0;
    for (size_t i = 0; i < num_samples; ++i) {
        out[i] = carrier[i] * (0.2 + std::fabs(env[i]) / erms);
        rms += out[i] * out[i];
    }
    rms = std::sqrt(rms / static_cast<double>(num_samples));
    DOALAB_CHECK(rms > 0.0, "speech_burst: degenerate burst");
    for (auto& v : out) v /= rms;
    return out;
}

Waveform isotropic_noise(const ArrayGeometry& g, size_t num_samples, double fs, Rng& rng) {
    const int M = g.num_mics();
    DOALAB_CHECK(M > 0 && num_samples > 0, "isotropic_noise: empty request");
    size_t n = 1;
    while (n < num_samples) n <<= 1;
    const size_t bins = n / 2 + 1;

    // independent speech-shaped spectra per mic
    std::vector<std::vector<cplx>> spec(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m) {
        spec[static_cast<size_t>(m)].resize(bins);
        for (size_t k = 0; k < bins; ++k) {
            const double f = fs * static_cast<double>(k) / static_cast<double>(n);
            double gn = 1.0 / std::sqrt(1.0 + (f / 500.0) * (f / 500.0));
            gn *= f / (f + 100.0);
            spec[static_cast<size_t>(m)][k] = cplx(rng.normal() * gn, rng.normal() * gn);
        }
        spec[static_cast<size_t>(m)][0] = 0.0;
    }

    // mix through the symmetric square root of the J0 coherence matrix of a
    // cylindrically diffuse field; roots depend only on (geometry, n, fs) and
    // are cached across calls
    static std::mutex cache_mu;
    static std::map<std::tuple<std::string, size_t, double>, std::vector<Eigen::MatrixXd>> cache;
    const std::vector<Eigen::MatrixXd>* roots = nullptr;
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto key = std::make_tuple(g.name, n, fs);
        auto it = cache.find(key);
        if (it == cache.end()) {
            Eigen::MatrixXd dist(M, M);
            for (int a = 0; a < M; ++a)
                for (int b = 0; b < M; ++b) {
                    double ax, ay, bx, by;
                    g.mic_offset(a, ax, ay);
                    g.mic_offset(b, bx, by);
                    dist(a, b) = std::hypot(ax - bx, ay - by);
                }
            std::vector<Eigen::MatrixXd> built(bins);
            Eigen::MatrixXd gamma(M, M);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
            for (size_t k = 0; k < bins; ++k) {
                const double f = fs * static_cast<double>(k) / static_cast<double>(n);
                for (int a = 0; a < M; ++a)
                    for (int b = 0; b < M; ++b)
                        gamma(a, b) =
                            std::cyl_bessel_j(0, kTwoPi * f * dist(a, b) / kSpeedOfSound);
                eig.compute(gamma);
                built[k] = eig.eigenvectors() *
                           eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                           eig.eigenvectors().transpose();
            }
            it = cache.emplace(key, std::move(built)).first;
        }
        roots = &it->second;
    }

    std::vector<std::vector<cplx>> mixed(static_cast<size_t>(M),
                                         std::vector<cplx>(bins, cplx(0, 0)));
    for (size_t k = 0; k < bins; ++k) {
        const Eigen::MatrixXd& root = (*roots)[k];
        for (int a = 0; a < M; ++a) {
            cplx acc(0.0, 0.0);
            for (int b = 0; b < M; ++b) acc += root(a, b) * spec[static_cast<size_t>(b)][k];
            mixed[static_cast<size_t>(a)][k] = acc;
        }
    }

    Waveform out;
    out.sample_rate = fs;
    out.channels.resize(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m) {
        auto x = irfft(mixed[static_cast<size_t>(m)], static_cast<int>(n));
        x.resize(num_samples);
        out.channels[static_cast<size_t>(m)] = std::move(x);
    }
    return out;
}

std::vector<neural::Matf> ideal_binary_mask(const std::vector<MultichannelSpectrogram>& images,
                                            int ref_channel) {
    const size_t N = images.size();
    DOALAB_CHECK(N >= 2, "ideal_binary_mask: need at least two sources");
    const int T = images[0].T, F = images[0].F;
    for (const auto& s : images) {
        DOALAB_CHECK(s.T == T && s.F == F, "ideal_binary_mask: shape mismatch");
        DOALAB_CHECK(ref_channel >= 0 && ref_channel < s.M, "ideal_binary_mask: bad channel");
    }
    std::vector<neural::Matf> masks(N, neural::Matf::Zero(T, F));
    for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) {
            size_t best = 0;
            double best_mag = std::abs(images[0].at(t, ref_channel, f));
            for (size_t nn = 1; nn < N; ++nn) {
                const double mag = std::abs(images[nn].at(t, ref_channel, f));
                if (mag > best_mag) {
                    best_mag = mag;
                    best = nn;
                }
            }
            masks[best](t, f) = 1.0f;
        }
    return masks;
}

}  // namespace doalab
