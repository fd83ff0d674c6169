#include <cmath>

#include "doalab/frontend.hpp"
#include "doalab/sim.hpp"
#include "doalab/subspace.hpp"
#include "doctest.h"

using namespace doalab;
using neural::Matf;

namespace {

MultichannelSpectrogram blank_spec(int T, int M, int F = 257) {
    MultichannelSpectrogram s;
    s.T = T;
    s.M = M;
    s.F = F;
    s.cfg = STFTConfig{};
    s.sample_rate = 16000.0;
    s.orig_samples = 0;
    s.data.assign(static_cast<size_t>(T) * M * F, {0.0, 0.0});
    return s;
}

Eigen::MatrixXcd random_psd(int M, Rng& rng) {
    Eigen::MatrixXcd a(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) a(i, j) = std::complex<double>(rng.normal(), rng.normal());
    return a * a.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(M, M);
}

}  // namespace

TEST_CASE("steering phase follows the propagation delay") {
    const auto g = ArrayGeometry::uca10();
    const double f = 1000.0;
    const auto d = steering_vector(g, f, 0.0);
    // mic 0 sits on the 0 deg axis: tau = r/c
    const double ph = kTwoPi * f * g.radius_m / kSpeedOfSound;
    CHECK(d(0).real() == doctest::Approx(std::cos(ph)).epsilon(1e-12));
    CHECK(d(0).imag() == doctest::Approx(std::sin(ph)).epsilon(1e-12));
    for (int m = 0; m < g.num_mics(); ++m) CHECK(std::abs(d(m)) == doctest::Approx(1.0));
    // broadside mic (90 deg away) sees zero delay
    const auto d2 = steering_vector(g, f, g.mic_angle(2) + kPi / 2.0);
    CHECK(d2(2).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(d2(2).imag()) <= 1e-12);
}

TEST_CASE("angle feature of a plane wave equals squared-mic-count power") {
    const auto g = ArrayGeometry::uca10();
    const double theta = deg2rad(123.0);
    auto s = blank_spec(2, 8);
    for (int f = 1; f < s.F; ++f) {
        const auto d = steering_vector(g, s.sample_rate * f / s.cfg.fft_size, theta);
        for (int m = 0; m < 8; ++m) s.at(1, m, f) = 0.5 * d(m);
    }
    const auto maps = angle_features(s, {theta}, g);
    REQUIRE(maps.size() == 1);
    CHECK(maps[0](1, 100) == doctest::Approx(64.0 * 0.25).epsilon(1e-6));
    CHECK(maps[0](0, 100) == 0.0f);  // silent frame
}

TEST_CASE("angle features keep at most one source per bin") {
    const auto g = ArrayGeometry::uca10();
    Rng rng(8);
    auto s = blank_spec(6, 8);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    const auto maps = angle_features(s, {deg2rad(10.0), deg2rad(100.0), deg2rad(250.0)}, g);
    for (int t = 0; t < s.T; ++t) {
        // dc steering is direction-blind, so the three-way tie keeps all maps
        int at_dc = 0;
        for (const auto& m : maps) at_dc += m(t, 0) > 0.0f;
        CHECK(at_dc == 3);
        for (int f = 1; f < s.F; ++f) {
            int nonzero = 0;
            for (const auto& m : maps) nonzero += m(t, f) > 0.0f;
            CHECK(nonzero <= 1);
        }
    }
}

TEST_CASE("exactly tied angle features keep both sources") {
    const auto g = ArrayGeometry::uca10();
    Rng rng(2);
    auto s = blank_spec(2, 8);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    const double theta = deg2rad(42.0);
    const auto maps = angle_features(s, {theta, theta}, g);
    for (int f = 0; f < s.F; ++f) {
        CHECK(maps[0](0, f) == maps[1](0, f));
        if (std::abs(s.at(0, 0, f)) > 0.0) CHECK(maps[0](0, f) > 0.0f);
    }
}

TEST_CASE("true steering dominates a quarter-turn offset on a plane wave") {
    const auto g = ArrayGeometry::uca10();
    const double theta = deg2rad(77.0);
    Rng rng(5);
    auto s = blank_spec(8, 8);
    for (int f = 1; f < s.F; ++f) {
        const auto d = steering_vector(g, s.sample_rate * f / s.cfg.fft_size, theta);
        for (int t = 0; t < s.T; ++t) {
            const std::complex<double> a(rng.normal(), rng.normal());
            for (int m = 0; m < 8; ++m)
                s.at(t, m, f) = a * d(m) + 0.01 * std::complex<double>(rng.normal(), rng.normal());
        }
    }
    // score each direction alone so zeroing cannot hide the comparison
    const auto at_true = angle_features(s, {theta}, g);
    const auto at_off = angle_features(s, {theta + kPi / 2.0}, g);
    double sum_true = 0.0, sum_off = 0.0;
    for (int t = 0; t < s.T; ++t)
        for (int f = 0; f < s.F; ++f) {
            sum_true += at_true[0](t, f);
            sum_off += at_off[0](t, f);
        }
    CHECK(sum_true > sum_off);
}

TEST_CASE("angle masks are a per-bin partition of unity") {
    const auto g = ArrayGeometry::uca10();
    Rng rng(14);
    auto s = blank_spec(4, 8);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    // silence one bin everywhere to hit the 0/0 fallback
    for (int t = 0; t < s.T; ++t)
        for (int m = 0; m < 8; ++m) s.at(t, m, 33) = 0.0;
    const auto masks = angle_mask(s, {deg2rad(20.0), deg2rad(200.0)}, g);
    for (int t = 0; t < s.T; ++t)
        for (int f = 0; f < s.F; ++f) {
            const double sum = masks[0](t, f) + masks[1](t, f);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
        }
    CHECK(masks[0](0, 33) == 0.5f);
    CHECK(masks[1](0, 33) == 0.5f);
}

TEST_CASE("scm from a uniform mask matches the narrowband scm") {
    Rng rng(6);
    auto s = blank_spec(10, 3, 17);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    Matf ones = Matf::Ones(s.T, s.F);
    const auto sc = scm_from_mask(s, ones);
    REQUIRE(sc.phi.size() == 17);
    for (int f = 0; f < s.F; ++f)
        CHECK((sc.phi[static_cast<size_t>(f)] - narrowband_scm(s, f)).norm() <= 1e-12);
}

TEST_CASE("an all-zero mask column yields the zero matrix") {
    Rng rng(7);
    auto s = blank_spec(5, 3, 9);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    Matf mask = Matf::Ones(s.T, s.F);
    mask.col(4).setZero();
    const auto sc = scm_from_mask(s, mask);
    CHECK(sc.phi[4].norm() == 0.0);
    CHECK(sc.phi[3].norm() > 0.0);
}

TEST_CASE("identity target and interference give the averaging beamformer") {
    for (int M : {2, 4}) {
        SpatialCovariance tgt, intf;
        tgt.phi.assign(3, Eigen::MatrixXcd::Identity(M, M));
        intf.phi.assign(3, Eigen::MatrixXcd::Identity(M, M));
        const auto w = mvdr_weights(tgt, intf, nullptr, 0);
        for (const auto& b : w.b) {
            CHECK(b(0).real() == doctest::Approx(1.0 / M).epsilon(1e-14));
            for (int m = 1; m < M; ++m) CHECK(std::abs(b(m)) <= 1e-14);
        }
    }
}

TEST_CASE("weights are invariant to scaling the target covariance") {
    Rng rng(19);
    SpatialCovariance tgt, intf, tgt4, tgt73;
    tgt.phi.push_back(random_psd(4, rng));
    intf.phi.push_back(random_psd(4, rng));
    tgt4.phi.push_back(4.0 * tgt.phi[0]);
    tgt73.phi.push_back(7.3 * tgt.phi[0]);
    const auto w = mvdr_weights(tgt, intf, nullptr, 1);
    const auto w4 = mvdr_weights(tgt4, intf, nullptr, 1);
    const auto w73 = mvdr_weights(tgt73, intf, nullptr, 1);
    CHECK((w4.b[0] - w.b[0]).norm() == 0.0);  // power-of-two scale is exact
    CHECK((w73.b[0] - w.b[0]).norm() <= 1e-12 * w.b[0].norm());
}

TEST_CASE("rank-one target passes its reference channel undistorted") {
    const auto g = ArrayGeometry::uca10();
    Rng rng(23);
    const int ref = 1;
    SpatialCovariance tgt, intf;
    std::vector<Eigen::VectorXcd> dirs;
    for (int f = 0; f < 4; ++f) {
        const auto d = steering_vector(g, 400.0 + 970.0 * f, deg2rad(61.0));
        dirs.push_back(d);
        tgt.phi.push_back(2.5 * d * d.adjoint());
        intf.phi.push_back(random_psd(8, rng));
    }
    const auto w = mvdr_weights(tgt, intf, nullptr, ref);
    for (int f = 0; f < 4; ++f) {
        const std::complex<double> resp = w.b[static_cast<size_t>(f)].dot(dirs[static_cast<size_t>(f)]);
        CHECK(std::abs(resp - dirs[static_cast<size_t>(f)](ref)) <= 1e-9);
    }
}

TEST_CASE("zero denominator falls back to loading and stays distortionless") {
    const auto g = ArrayGeometry::uca10();
    SpatialCovariance tgt, intf;
    const auto d = steering_vector(g, 1250.0, deg2rad(300.0));
    tgt.phi.push_back(d * d.adjoint());
    intf.phi.push_back(Eigen::MatrixXcd::Zero(8, 8));
    const auto w = mvdr_weights(tgt, intf, nullptr, 2);
    REQUIRE(w.b[0].allFinite());
    CHECK(std::abs(w.b[0].dot(d) - d(2)) <= 1e-9);
}

TEST_CASE("a silent target bin yields zero weights") {
    Rng rng(29);
    SpatialCovariance tgt, intf;
    tgt.phi.push_back(Eigen::MatrixXcd::Zero(3, 3));
    intf.phi.push_back(random_psd(3, rng));
    const auto w = mvdr_weights(tgt, intf, nullptr, 0);
    CHECK(w.b[0].norm() == 0.0);
}

TEST_CASE("applying a one-hot beamformer selects that channel") {
    Rng rng(31);
    auto s = blank_spec(3, 4, 6);
    for (auto& v : s.data) v = {rng.normal(), rng.normal()};
    BeamformerWeights w;
    w.ref_mic = 2;
    w.b.assign(6, Eigen::VectorXcd::Zero(4));
    for (auto& b : w.b) b(2) = 1.0;
    const auto out = apply_beamformer(s, w);
    REQUIRE(out.M == 1);
    for (int t = 0; t < s.T; ++t)
        for (int f = 0; f < s.F; ++f) CHECK(std::abs(out.at(t, 0, f) - s.at(t, 2, f)) <= 1e-15);
}

TEST_CASE("separate passes a lone source through near-unchanged") {
    Rng rng(37);
    const auto burst = speech_burst(4800, 16000.0, rng);
    Waveform w;
    w.sample_rate = 16000.0;
    w.channels.assign(3, burst);
    const auto s = stft(w, STFTConfig{});
    std::vector<Matf> masks = {Matf::Ones(s.T, s.F), Matf::Zero(s.T, s.F)};
    const auto out = separate(s, masks, 1);
    REQUIRE(out.size() == 2);
    // active source reconstructs its reference channel
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < burst.size(); ++i) {
        const double d = out[0].channels[0][i] - w.channels[1][i];
        num += d * d;
        den += w.channels[1][i] * w.channels[1][i];
    }
    CHECK(num / den <= 1e-8);
    // masked-out source is exactly silent
    for (double v : out[1].channels[0]) CHECK(v == 0.0);
    // deterministic
    const auto again = separate(s, masks, 1);
    CHECK(again[0].channels[0] == out[0].channels[0]);
}
