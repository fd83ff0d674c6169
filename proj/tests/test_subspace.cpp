#include <algorithm>
#include <cmath>

#include "doalab/frontend.hpp"
#include "doalab/sim.hpp"
#include "doalab/subspace.hpp"
#include "doctest.h"

using namespace doalab;

namespace {

MultichannelSpectrogram blank_spec(int T, int M) {
    MultichannelSpectrogram s;
    s.T = T;
    s.M = M;
    s.F = 257;
    s.cfg = STFTConfig{};
    s.sample_rate = 16000.0;
    s.orig_samples = 0;
    s.data.assign(static_cast<size_t>(T) * M * s.F, {0.0, 0.0});
    return s;
}

double bin_freq(const MultichannelSpectrogram& s, int f) {
    return s.sample_rate * f / s.cfg.fft_size;
}

// y(t,f) = sum_n a_n(t,f) d(f, theta_n) + sigma * noise
MultichannelSpectrogram synth_sources(const ArrayGeometry& g, const std::vector<double>& doas_rad,
                                      int T, double sigma, uint64_t seed) {
    auto s = blank_spec(T, g.num_mics());
    Rng rng(seed);
    for (int f = 1; f < s.F; ++f) {
        std::vector<Eigen::VectorXcd> d;
        for (double th : doas_rad) d.push_back(steering_vector(g, bin_freq(s, f), th));
        for (int t = 0; t < T; ++t) {
            for (size_t n = 0; n < doas_rad.size(); ++n) {
                const std::complex<double> a(rng.normal(), rng.normal());
                for (int m = 0; m < s.M; ++m) s.at(t, m, f) += a * d[n](m);
            }
            for (int m = 0; m < s.M; ++m)
                s.at(t, m, f) += sigma * std::complex<double>(rng.normal(), rng.normal());
        }
    }
    return s;
}

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("narrowband scm of one frame is the outer product") {
    auto s = blank_spec(1, 3);
    Eigen::VectorXcd y(3);
    y << std::complex<double>(1.0, 2.0), std::complex<double>(-0.5, 0.25),
        std::complex<double>(0.0, -1.5);
    for (int m = 0; m < 3; ++m) s.at(0, m, 7) = y(m);
    const auto phi = narrowband_scm(s, 7);
    CHECK((phi - y * y.adjoint()).norm() <= 1e-15);
}

TEST_CASE("scm is hermitian with near-nonnegative eigenvalues") {
    Rng rng(11);
    auto s = blank_spec(16, 8);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    for (int f : {0, 63, 256}) {
        const auto phi = narrowband_scm(s, f);
        CHECK((phi - phi.adjoint()).norm() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(phi);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("music finds a single grid-aligned source exactly") {
    const auto g = ArrayGeometry::uca10();
    const AngularGrid grid(10);
    const int idx = 21;  // 215.5 deg
    auto s = synth_sources(g, {deg2rad(grid.class_angle_deg(idx))}, 48, 1e-3, 21);
    const auto sp = music_spectrum(s, g, grid, 1);
    REQUIRE(static_cast<int>(sp.values.size()) == 36);
    CHECK(argmax(sp.values) == idx);
    const auto peaks = pick_peaks(sp, 1);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0] == doctest::Approx(215.5));
}

TEST_CASE("music separates two grid-aligned sources") {
    const auto g = ArrayGeometry::uca10();
    const AngularGrid grid(10);
    auto s = synth_sources(
        g, {deg2rad(grid.class_angle_deg(9)), deg2rad(grid.class_angle_deg(21))}, 64, 1e-3, 5);
    const auto peaks = pick_peaks(music_spectrum(s, g, grid, 2), 2);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0] == doctest::Approx(95.5));
    CHECK(peaks[1] == doctest::Approx(215.5));
}

TEST_CASE("music spectrum is insensitive to a global complex gain") {
    const auto g = ArrayGeometry::uca10();
    const AngularGrid grid(10);
    auto s = synth_sources(g, {deg2rad(grid.class_angle_deg(3))}, 32, 1e-3, 77);
    auto scaled = s;
    for (auto& v : scaled.data) v *= std::complex<double>(0.7, 2.1);
    const auto a = music_spectrum(s, g, grid, 1);
    const auto b = music_spectrum(scaled, g, grid, 1);
    for (int i = 0; i < grid.size; ++i)
        CHECK(b.values[static_cast<size_t>(i)] ==
              doctest::Approx(a.values[static_cast<size_t>(i)]).epsilon(1e-6));
}

TEST_CASE("white noise gives a nearly flat fused spectrum") {
    Rng rng(3);
    auto s = blank_spec(200, 8);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    const auto sp = music_spectrum(s, ArrayGeometry::uca10(), AngularGrid(10), 2);
    const double hi = *std::max_element(sp.values.begin(), sp.values.end());
    const double lo = *std::min_element(sp.values.begin(), sp.values.end());
    CHECK(hi / lo < 1.5);
}

TEST_CASE("nam equals music normalized by its grid mean on a single band") {
    const auto g = ArrayGeometry::uca10();
    const AngularGrid grid(10);
    auto s = synth_sources(g, {deg2rad(140.0)}, 24, 0.1, 9);
    SubspaceConfig one_bin;
    one_bin.f_lo_hz = one_bin.f_hi_hz = bin_freq(s, 40);
    const auto plain = music_spectrum(s, g, grid, 1, one_bin);
    const auto nam = music_nam_spectrum(s, g, grid, 1, one_bin);
    double mean = 0.0;
    for (double v : plain.values) mean += v;
    mean /= plain.values.size();
    for (size_t i = 0; i < plain.values.size(); ++i)
        CHECK(nam.values[i] == doctest::Approx(plain.values[i] / mean).epsilon(1e-12));
}

TEST_CASE("nam fused spectrum has unit mean by construction") {
    Rng rng(4);
    auto s = blank_spec(64, 8);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    const auto sp = music_nam_spectrum(s, ArrayGeometry::uca10(), AngularGrid(1), 3);
    double mean = 0.0;
    for (double v : sp.values) mean += v;
    mean /= sp.values.size();
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tops finds a single grid-aligned source") {
    const auto g = ArrayGeometry::uca10();
    const AngularGrid grid(10);
    const int idx = 13;  // 135.5 deg
    auto s = synth_sources(g, {deg2rad(grid.class_angle_deg(idx))}, 48, 1e-3, 31);
    const auto sp = tops_spectrum(s, g, grid, 1);
    CHECK(argmax(sp.values) == idx);
}

TEST_CASE("subspace estimators recover the azimuth of a simulated free-field source") {
    ImageMethodConfig im;
    for (double az : {33.0, 211.0, 347.0}) {
        RoomSpec room;
        room.length = 6.0;
        room.width = 5.0;
        room.height = 3.0;
        room.t60 = 0.0;
        room.array_center = {2.8, 2.4, 1.3};
        room.geometry = ArrayGeometry::uca10();
        Rng rng(static_cast<uint64_t>(az));
        const auto burst = speech_burst(8000, 16000.0, rng);
        const auto mix = synthesize_mixture({burst}, room, {SourcePlacement{deg2rad(az), 1.5}},
                                            Waveform{}, 0.0, im);
        const auto s = stft(mix.mixture, STFTConfig{});
        const AngularGrid grid(1);
        const auto music = pick_peaks(music_nam_spectrum(s, room.geometry, grid, 1), 1);
        REQUIRE(music.size() == 1);
        CHECK(cyclic_diff_deg(music[0], az) <= 1.0);
        const auto tops = pick_peaks(tops_spectrum(s, room.geometry, grid, 1), 1);
        REQUIRE(tops.size() == 1);
        CHECK(cyclic_diff_deg(tops[0], az) <= 2.0);
    }
}

TEST_CASE("pick_peaks orders by height then fills, ascending output") {
    SpatialSpectrum sp{AngularGrid(1), {}};
    sp.values.assign(360, 0.0);
    sp.values[199] = 9.0;  // 200 deg, tallest
    sp.values[39] = 5.0;   // 40 deg
    CHECK(pick_peaks(sp, 1) == std::vector<double>{200.0});
    CHECK(pick_peaks(sp, 2) == std::vector<double>{40.0, 200.0});
}

TEST_CASE("pick_peaks handles a peak wrapping index zero") {
    SpatialSpectrum sp{AngularGrid(1), {}};
    sp.values.assign(360, 0.0);
    sp.values[0] = 7.0;
    sp.values[359] = 3.0;
    sp.values[1] = 3.0;
    const auto p = pick_peaks(sp, 1);
    CHECK(p == std::vector<double>{1.0});  // class angle of index 0
}

TEST_CASE("pick_peaks counts a plateau once at its leftmost index") {
    SpatialSpectrum sp{AngularGrid(1), {}};
    sp.values.assign(360, 0.0);
    sp.values[10] = sp.values[11] = sp.values[12] = 4.0;
    sp.values[100] = 2.0;
    const auto p = pick_peaks(sp, 2);
    CHECK(p == std::vector<double>{11.0, 101.0});
}

TEST_CASE("pick_peaks on a flat spectrum falls back to lowest indices") {
    SpatialSpectrum sp{AngularGrid(1), {}};
    sp.values.assign(360, 2.5);
    CHECK(pick_peaks(sp, 2) == std::vector<double>{1.0, 2.0});
}

TEST_CASE("degenerate band or source count is rejected") {
    auto s = blank_spec(4, 8);
    const auto g = ArrayGeometry::uca10();
    const AngularGrid grid(10);
    CHECK_THROWS_AS(music_spectrum(s, g, grid, 0), Error);
    CHECK_THROWS_AS(music_spectrum(s, g, grid, 8), Error);
    SubspaceConfig empty;
    empty.f_lo_hz = 9000.0;
    empty.f_hi_hz = 9500.0;
    CHECK_THROWS_AS(music_spectrum(s, g, grid, 1, empty), Error);
}
