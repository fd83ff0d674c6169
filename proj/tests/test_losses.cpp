#include <cmath>
#include <vector>

#include "doalab/neural/losses.hpp"
#include "doalab/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace doalab;
using namespace doalab::neural;

namespace {

Vec<double> random_simplex(int k, Rng& rng) {
    Vec<double> p(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        p(i) = -std::log(1.0 - rng.uniform());
        sum += p(i);
    }
    return p / sum;
}

std::vector<double> to_std(const Vec<double>& v) {
    return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST_CASE("emd between one-hot vectors is the index distance") {
    const int k = 36;
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            const auto pa = one_hot<double>(a, k);
            const auto pb = one_hot<double>(b, k);
            const double got = emd_loss(pa, pb);
            CHECK(got == doctest::Approx(std::abs(a - b)).epsilon(1e-12));
            const double oracle = oracles::transport_distance(to_std(pa), to_std(pb));
            CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
}

TEST_CASE("sce with a uniform prediction equals log K") {
    for (int k : {36, 360}) {
        const Vec<double> p = Vec<double>::Constant(k, 1.0 / k);
        const auto t = soft_target<double>(k / 3, k);
        CHECK(std::abs(ce_loss(p, t) - std::log(static_cast<double>(k))) < 1e-9);
    }
}

TEST_CASE("losses are non-negative and vanish only at the target") {
    const int k = 36;
    Rng rng(77);
    for (int a = 0; a < k; ++a) {
        const auto t = one_hot<double>(a, k);
        CHECK(ce_loss(t, t) == 0.0);
        CHECK(emd_loss(t, t) == 0.0);
        const int b = (a + 1 + static_cast<int>(rng.uniform_int(k - 1))) % k;
        const auto p = one_hot<double>(b, k);
        CHECK(ce_loss(p, t) > 0.0);
        CHECK(emd_loss(p, t) > 0.0);
    }
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_simplex(k, rng);
        const auto t = one_hot<double>(static_cast<int>(rng.uniform_int(k)), k);
        CHECK(ce_loss(p, t) >= 0.0);
        CHECK(emd_loss(p, t) >= 0.0);
        CHECK(bce_loss(p, t) >= 0.0);
    }
    Vec<double> bits(5);
    bits << 1, 0, 1, 0, 0;
    CHECK(bce_loss(bits, bits) == 0.0);
    Vec<double> off(5);
    off << 0.9, 0.1, 0.8, 0.2, 0.1;
    CHECK(bce_loss(off, bits) > 0.0);
}

TEST_CASE("loss gradients match finite differences") {
    const int k = 12;
    Rng rng(31);
    const double h = 1e-6;
    for (LossKind kind : {LossKind::Bce, LossKind::Ce, LossKind::Sce, LossKind::Emd,
                          LossKind::Semd}) {
        Vec<double> p = random_simplex(k, rng);
        Vec<double> t;
        if (kind == LossKind::Bce)
            t = multi_hot<double>({2, 7}, k);
        else
            t = make_target<double>(kind, 4, k);
        const Vec<double> g = loss_grad(kind, p, t);
        for (int i = 0; i < k; ++i) {
            Vec<double> pp = p, pm = p;
            pp(i) += h;
            pm(i) -= h;
            const double num = (loss_value(kind, pp, t) - loss_value(kind, pm, t)) / (2 * h);
            CHECK(g(i) == doctest::Approx(num).epsilon(1e-5));
        }
    }
}

TEST_CASE("soft target spreads mass with cyclic wrap") {
    const auto t = soft_target<double>(0, 360);
    CHECK(t(0) == doctest::Approx(0.4));
    CHECK(t(1) == doctest::Approx(0.2));
    CHECK(t(2) == doctest::Approx(0.1));
    CHECK(t(359) == doctest::Approx(0.2));
    CHECK(t(358) == doctest::Approx(0.1));
    CHECK(t.sum() == doctest::Approx(1.0).epsilon(1e-12));
    int nonzero = 0;
    for (int i = 0; i < 360; ++i) nonzero += t(i) != 0.0;
    CHECK(nonzero == 5);

    const auto w = soft_target<double>(35, 36);
    CHECK(w(35) == doctest::Approx(0.4));
    CHECK(w(0) == doctest::Approx(0.2));
    CHECK(w(1) == doctest::Approx(0.1));

    CHECK_THROWS_AS(soft_target<double>(0, 4), Error);
}

TEST_CASE("make_target dispatches on loss kind") {
    CHECK_THROWS_AS(make_target<double>(LossKind::Bce, 0, 36), Error);
    CHECK(make_target<double>(LossKind::Ce, 3, 36)(3) == 1.0);
    CHECK(make_target<double>(LossKind::Emd, 3, 36)(3) == 1.0);
    CHECK(make_target<double>(LossKind::Sce, 3, 36)(3) == doctest::Approx(0.4));
    CHECK(make_target<double>(LossKind::Semd, 3, 36)(3) == doctest::Approx(0.4));
}

TEST_CASE("pit picks the cheaper assignment") {
    Mat<double> a(2, 2);
    a << 1, 4, 4, 1;
    auto r = pit_loss(a);
    CHECK(r.loss == 2.0);
    CHECK(r.perm == std::vector<int>{0, 1});

    Mat<double> b(2, 2);
    b << 4, 1, 1, 4;
    r = pit_loss(b);
    CHECK(r.loss == 2.0);
    CHECK(r.perm == std::vector<int>{1, 0});

    Mat<double> c(3, 2);
    CHECK_THROWS_AS(pit_loss(c), Error);
    Mat<double> d = Mat<double>::Zero(5, 5);
    CHECK_THROWS_AS(pit_loss(d), Error);
}

TEST_CASE("pit never exceeds the fixed-order loss") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(3));
        Mat<double> m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(0.0, 10.0);
        double diag = 0.0;
        for (int i = 0; i < n; ++i) diag += m(i, i);
        CHECK(pit_loss(m).loss <= diag + 1e-15);
    }
}

TEST_CASE("fixed-order targets sort ascending") {
    CHECK(fixed_order_targets({200.0, 10.0}) == std::vector<double>{10.0, 200.0});
    CHECK(fixed_order_targets({0.0, 359.0}) == std::vector<double>{0.0, 359.0});
    CHECK(fixed_order_targets({5.0, 5.0, 1.0}) == std::vector<double>{1.0, 5.0, 5.0});
}

TEST_CASE("loss names round-trip") {
    for (const char* n : {"bce", "ce", "sce", "emd", "semd"})
        CHECK(loss_name(loss_from_name(n)) == std::string(n));
    CHECK_THROWS_AS(loss_from_name("mse"), Error);
}
