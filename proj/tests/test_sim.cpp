#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "doalab/dataset.hpp"
#include "doalab/fft.hpp"
#include "doalab/sim.hpp"
#include "oracles.hpp"

using namespace doalab;
namespace fs = std::filesystem;

namespace {

RoomSpec basic_room(double t60, const ArrayGeometry& g) {
    RoomSpec room;
    room.length = 6.0;
    room.width = 5.0;
    room.height = 3.0;
    room.t60 = t60;
    room.array_center = {2.8, 2.4, 1.3};
    room.geometry = g;
    return room;
}

int argmax_abs(const std::vector<double>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (std::fabs(v[i]) > std::fabs(v[static_cast<size_t>(best)]))
            best = static_cast<int>(i);
    return best;
}

}  // namespace

TEST_CASE("free-field rir is a lone direct-path spike") {
    auto room = basic_room(0.0, ArrayGeometry::qa10());
    SourcePlacement src{deg2rad(30.0), 1.5};
    auto rir = image_method_rir(room, src);
    REQUIRE(rir.h.size() == 3);
    const auto spos = source_position(room, src);
    for (int m = 0; m < 3; ++m) {
        const auto mpos = mic_position(room, m);
        const double d = std::sqrt(std::pow(spos[0] - mpos[0], 2) + std::pow(spos[1] - mpos[1], 2) +
                                   std::pow(spos[2] - mpos[2], 2));
        const double delay = d / kSpeedOfSound * 16000.0;
        const int peak = argmax_abs(rir.h[static_cast<size_t>(m)]);
        CHECK(std::fabs(peak - delay) <= 1.0);
        // 1/(4 pi d) spreading at the peak
        CHECK(rir.h[static_cast<size_t>(m)][static_cast<size_t>(peak)] ==
              doctest::Approx(1.0 / (4.0 * kPi * d)).epsilon(0.02));
        // energy elsewhere is only the interpolation kernel tail
        double energy = 0.0, peak_e = 0.0;
        for (int i = 0; i < static_cast<int>(rir.h[static_cast<size_t>(m)].size()); ++i) {
            const double v = rir.h[static_cast<size_t>(m)][static_cast<size_t>(i)];
            if (std::abs(i - peak) <= 33)
                peak_e += v * v;
            else
                energy += v * v;
        }
        CHECK(energy < 1e-10 * peak_e);
    }
}

TEST_CASE("equidistant mics see identical delays") {
    auto room = basic_room(0.0, ArrayGeometry::uca10());
    // source along the bisector of mics 0 (0 deg) and 4 (180 deg) is
    // equidistant from both
    SourcePlacement src{deg2rad(90.0), 1.2};
    auto rir = image_method_rir(room, src);
    CHECK(argmax_abs(rir.h[0]) == argmax_abs(rir.h[4]));
}

TEST_CASE("inter-channel direct-path delay matches the far-field formula") {
    auto g = ArrayGeometry::uca10();
    auto room = basic_room(0.0, g);
    const double theta = deg2rad(57.0);
    SourcePlacement src{theta, 1.9};
    ImageMethodConfig cfg;
    cfg.sample_rate = 48000.0;  // finer sampling tightens the one-sample bound
    auto rir = image_method_rir(room, src, cfg);
    for (auto [a, b] : g.ipd_pairs) {
        const double want =
            g.radius_m / kSpeedOfSound *
            (std::cos(theta - g.mic_angle(a)) - std::cos(theta - g.mic_angle(b))) * 48000.0;
        const double got = argmax_abs(rir.h[static_cast<size_t>(b)]) -
                           argmax_abs(rir.h[static_cast<size_t>(a)]);
        CHECK(std::fabs(got - want) <= 1.0);
    }
}

TEST_CASE("schroeder decay of a generated rir hits the requested t60") {
    auto room = basic_room(0.5, ArrayGeometry::qa10());
    SourcePlacement src{deg2rad(120.0), 1.4};
    auto rir = image_method_rir(room, src);
    for (int m = 0; m < 3; ++m) {
        const double t60 = oracles::schroeder_t60(rir.h[static_cast<size_t>(m)], 16000.0);
        CHECK(t60 > 0.4);
        CHECK(t60 < 0.6);
    }
}

TEST_CASE("decay tracks the request across sampled scenarios") {
    GenConfig cfg;
    auto g = ArrayGeometry::qa10();
    Rng rng(17);
    for (int i = 0; i < 4; ++i) {
        auto room = sample_room(rng, g, cfg);
        room.geometry = g;
        auto ps = sample_placements(rng, room, cfg);
        auto rir = image_method_rir(room, ps[0]);
        const double t60 = oracles::schroeder_t60(rir.h[0], 16000.0);
        CHECK(t60 > 0.8 * room.t60);
        CHECK(t60 < 1.2 * room.t60);
    }
}

TEST_CASE("rir input validation") {
    auto room = basic_room(0.3, ArrayGeometry::qa10());
    CHECK_THROWS_AS(image_method_rir(room, SourcePlacement{0.0, 10.0}), Error);
    room.t60 = -0.1;
    CHECK_THROWS_AS(image_method_rir(room, SourcePlacement{0.0, 1.0}), Error);
}

TEST_CASE("mixture without noise equals the image sum") {
    auto g = ArrayGeometry::qa10();
    auto room = basic_room(0.26, g);
    Rng rng(1);
    std::vector<std::vector<double>> sources = {speech_burst(3200, 16000.0, rng),
                                                speech_burst(3200, 16000.0, rng)};
    std::vector<SourcePlacement> ps = {{deg2rad(20.0), 1.1}, {deg2rad(200.0), 1.6}};
    auto ex = synthesize_mixture(sources, room, ps, Waveform{}, 0.0);
    REQUIRE(ex.images.size() == 2);
    for (int m = 0; m < 3; ++m)
        for (size_t i = 0; i < ex.mixture.num_samples(); ++i) {
            const double sum = ex.images[0].channels[static_cast<size_t>(m)][i] +
                               ex.images[1].channels[static_cast<size_t>(m)][i];
            CHECK(ex.mixture.channels[static_cast<size_t>(m)][i] == sum);
        }
    CHECK(ex.doas_rad[0] == doctest::Approx(deg2rad(20.0)));
    CHECK(ex.doas_rad[1] == doctest::Approx(deg2rad(200.0)));
}

TEST_CASE("noise scaling hits the requested snr") {
    auto g = ArrayGeometry::qa10();
    auto room = basic_room(0.26, g);
    Rng rng(2);
    std::vector<std::vector<double>> sources = {speech_burst(3200, 16000.0, rng),
                                                speech_burst(3200, 16000.0, rng)};
    std::vector<SourcePlacement> ps = {{deg2rad(45.0), 1.0}, {deg2rad(300.0), 1.8}};
    const size_t need = 3200 + static_cast<size_t>(0.8 * 0.26 * 16000.0 + 0.02 * 16000.0) + 8;
    auto noise = isotropic_noise(g, need, 16000.0, rng);
    for (double snr : {0.0, 12.5}) {
        auto ex = synthesize_mixture(sources, room, ps, noise, snr);
        double sp = 0.0, np = 0.0;
        for (int m = 0; m < 3; ++m)
            for (size_t i = 0; i < ex.mixture.num_samples(); ++i) {
                const double s = ex.images[0].channels[static_cast<size_t>(m)][i] +
                                 ex.images[1].channels[static_cast<size_t>(m)][i];
                sp += s * s;
                np += ex.noise.channels[static_cast<size_t>(m)][i] *
                      ex.noise.channels[static_cast<size_t>(m)][i];
            }
        CHECK(10.0 * std::log10(sp / np) == doctest::Approx(snr).epsilon(1e-4));
        // reconstruction: mixture - images - noise = 0
        for (int m = 0; m < 3; ++m)
            for (size_t i = 0; i < ex.mixture.num_samples(); i += 37) {
                const double resid = ex.mixture.channels[static_cast<size_t>(m)][i] -
                                     ex.images[0].channels[static_cast<size_t>(m)][i] -
                                     ex.images[1].channels[static_cast<size_t>(m)][i] -
                                     ex.noise.channels[static_cast<size_t>(m)][i];
                CHECK(std::fabs(resid) < 1e-6);
            }
    }
}

TEST_CASE("silent source is rejected") {
    auto g = ArrayGeometry::qa10();
    auto room = basic_room(0.26, g);
    std::vector<std::vector<double>> sources = {std::vector<double>(1000, 0.0),
                                                std::vector<double>(1000, 1.0)};
    std::vector<SourcePlacement> ps = {{0.1, 1.0}, {2.0, 1.5}};
    CHECK_THROWS_AS(synthesize_mixture(sources, room, ps, Waveform{}, 0.0), Error);
}

TEST_CASE("speech burst has unit rms and low-frequency emphasis") {
    Rng rng(3);
    auto s = speech_burst(16000, 16000.0, rng);
    double rms = 0.0;
    for (double v : s) rms += v * v;
    CHECK(std::sqrt(rms / 16000.0) == doctest::Approx(1.0).epsilon(1e-6));
    // energy below 1 kHz should dominate energy above 4 kHz
    auto spec = rfft(s, 16384);
    double lo = 0.0, hi = 0.0;
    for (size_t k = 0; k < spec.size(); ++k) {
        const double f = 16000.0 * static_cast<double>(k) / 16384.0;
        if (f < 1000.0) lo += std::norm(spec[k]);
        if (f > 4000.0) hi += std::norm(spec[k]);
    }
    CHECK(lo > 4.0 * hi);
}

TEST_CASE("isotropic noise coheres at low frequency, decorrelates at high") {
    auto g = ArrayGeometry::uca10();
    Rng rng(4);
    auto w = isotropic_noise(g, 65536, 16000.0, rng);
    REQUIRE(w.num_channels() == 8);
    // magnitude-squared coherence between opposite mics, averaged per band
    auto sa = rfft(w.channels[0], 65536);
    auto sb = rfft(w.channels[4], 65536);
    auto band_coh = [&](double f_lo, double f_hi) {
        std::complex<double> cross(0.0, 0.0);
        double pa = 0.0, pb = 0.0;
        for (size_t k = 0; k < sa.size(); ++k) {
            const double f = 16000.0 * static_cast<double>(k) / 65536.0;
            if (f < f_lo || f > f_hi) continue;
            cross += sa[k] * std::conj(sb[k]);
            pa += std::norm(sa[k]);
            pb += std::norm(sb[k]);
        }
        return std::abs(cross) / std::sqrt(pa * pb);
    };
    CHECK(band_coh(50.0, 200.0) > 0.8);    // wavelengths >> aperture
    CHECK(band_coh(6000.0, 8000.0) < 0.3);  // beyond the first J0 zeros
}

TEST_CASE("ideal binary masks partition and follow the tie rule") {
    MultichannelSpectrogram a, b;
    a.T = b.T = 2;
    a.M = b.M = 1;
    a.F = b.F = 3;
    a.sample_rate = b.sample_rate = 16000.0;
    a.data = {{1, 0}, {0, 0}, {2, 0}, {5, 0}, {1, 0}, {3, 0}};
    b.data = {{1, 0}, {4, 0}, {1, 0}, {5, 0}, {2, 0}, {3, 0}};
    auto masks = ideal_binary_mask({a, b}, 0);
    REQUIRE(masks.size() == 2);
    // ties at (0,0) and (1,0) and (1,2) go to source 0
    CHECK(masks[0](0, 0) == 1.0f);
    CHECK(masks[1](0, 0) == 0.0f);
    CHECK(masks[0](0, 1) == 0.0f);
    CHECK(masks[1](0, 1) == 1.0f);
    CHECK(masks[0](0, 2) == 1.0f);
    CHECK(masks[0](1, 0) == 1.0f);
    CHECK(masks[1](1, 1) == 1.0f);
    CHECK(masks[0](1, 2) == 1.0f);
    for (int t = 0; t < 2; ++t)
        for (int f = 0; f < 3; ++f) CHECK(masks[0](t, f) + masks[1](t, f) == 1.0f);
}

TEST_CASE("ibm with a silent source gives the other everything") {
    MultichannelSpectrogram a, b;
    a.T = b.T = 3;
    a.M = b.M = 1;
    a.F = b.F = 4;
    a.sample_rate = b.sample_rate = 16000.0;
    a.data.assign(12, {0.5, 0.5});
    b.data.assign(12, {0.0, 0.0});
    auto masks = ideal_binary_mask({a, b}, 0);
    for (int t = 0; t < 3; ++t)
        for (int f = 0; f < 4; ++f) {
            CHECK(masks[0](t, f) == 1.0f);
            CHECK(masks[1](t, f) == 0.0f);
        }
}

TEST_CASE("sampled t60 is uniform over its range") {
    GenConfig cfg;
    auto g = ArrayGeometry::uca10();
    std::vector<double> t60s;
    Rng rng(99);
    for (int i = 0; i < 1000; ++i) t60s.push_back(sample_room(rng, g, cfg).t60);
    CHECK(oracles::ks_uniform_pvalue(t60s, 0.25, 0.7) > 0.01);
}

TEST_CASE("sampled placements respect separation and the room") {
    GenConfig cfg;
    auto g = ArrayGeometry::uca10();
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        auto room = sample_room(rng, g, cfg);
        auto ps = sample_placements(rng, room, cfg);
        REQUIRE(ps.size() == 2);
        CHECK(cyclic_diff_deg(rad2deg(ps[0].azimuth_rad), rad2deg(ps[1].azimuth_rad)) >= 10.0);
        for (const auto& p : ps) {
            auto pos = source_position(room, p);
            CHECK(pos[0] > 0.0);
            CHECK(pos[0] < room.length);
            CHECK(pos[1] > 0.0);
            CHECK(pos[1] < room.width);
        }
    }
}

TEST_CASE("dataset generation reproduces byte-identical manifests") {
    GenConfig cfg;
    cfg.geometry = "qa10";
    cfg.train = 3;
    cfg.dev = 1;
    cfg.test = 1;
    cfg.duration_lo_s = 0.2;
    cfg.duration_hi_s = 0.3;
    cfg.t60_lo = 0.25;
    cfg.t60_hi = 0.3;
    auto read_all = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    };
    cfg.out_dir = "test_tmp_ds_a";
    auto ma = dataset_generate(cfg, 123);
    cfg.out_dir = "test_tmp_ds_b";
    auto mb = dataset_generate(cfg, 123);
    for (const char* split : {"train", "dev", "test"}) {
        auto a = read_all(std::string("test_tmp_ds_a/") + split + ".jsonl");
        auto b = read_all(std::string("test_tmp_ds_b/") + split + ".jsonl");
        CHECK(a == b);
        CHECK(!a.empty());
    }
    // referenced audio exists; labels in range; round trip through the reader
    auto records = manifest_read("test_tmp_ds_a/train.jsonl");
    REQUIRE(records.size() == 3);
    for (const auto& r : records) {
        CHECK(fs::exists(fs::path("test_tmp_ds_a") / r.mixture));
        REQUIRE(r.images.size() == 2);
        for (const auto& p : r.images) CHECK(fs::exists(fs::path("test_tmp_ds_a") / p));
        REQUIRE(r.doas_deg.size() == 2);
        for (double d : r.doas_deg) {
            CHECK(d >= 0.0);
            CHECK(d < 360.0);
        }
        CHECK(cyclic_diff_deg(r.doas_deg[0], r.doas_deg[1]) >= 10.0);
        CHECK(r.geometry == "qa10");
    }
    // same seed, same config: the mixtures themselves are identical too
    auto rb = manifest_read("test_tmp_ds_b/train.jsonl");
    for (size_t i = 0; i < records.size(); ++i) {
        auto wa = read_all((fs::path("test_tmp_ds_a") / records[i].mixture).string());
        auto wb = read_all((fs::path("test_tmp_ds_b") / rb[i].mixture).string());
        CHECK(wa == wb);
    }
    fs::remove_all("test_tmp_ds_a");
    fs::remove_all("test_tmp_ds_b");
}
