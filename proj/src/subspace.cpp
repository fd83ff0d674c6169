#include "doalab/subspace.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "doalab/frontend.hpp"

namespace doalab {

namespace {

std::vector<int> band_bins(const MultichannelSpectrogram& s, const SubspaceConfig& cfg) {
    const double df = static_cast<double>(s.sample_rate) / s.cfg.fft_size;
    std::vector<int> bins;
    for (int f = 1; f < s.F; ++f) {
        const double hz = f * df;
        if (hz >= cfg.f_lo_hz - 1e-9 && hz <= cfg.f_hi_hz + 1e-9) bins.push_back(f);
    }
    DOALAB_CHECK(!bins.empty(), "subspace: analysis band holds no bins");
    return bins;
}

Eigen::MatrixXcd loaded_scm(const MultichannelSpectrogram& s, int f, double loading) {
    Eigen::MatrixXcd phi = narrowband_scm(s, f);
    const double tr = phi.real().trace();
    phi += loading * tr / s.M * Eigen::MatrixXcd::Identity(s.M, s.M);
    return phi;
}

// columns of the steering matrix: one unit-modulus vector per grid angle
Eigen::MatrixXcd steering_grid(const ArrayGeometry& g, const AngularGrid& grid, double freq_hz) {
    Eigen::MatrixXcd d(g.num_mics(), grid.size);
    for (int i = 0; i < grid.size; ++i)
        d.col(i) = steering_vector(g, freq_hz, deg2rad(grid.class_angle_deg(i)));
    return d;
}

SpatialSpectrum music_impl(const MultichannelSpectrogram& s, const ArrayGeometry& g,
                           const AngularGrid& grid, int n_sources, const SubspaceConfig& cfg,
                           bool normalize_bands) {
    DOALAB_CHECK(s.M == g.num_mics(), "music: geometry mismatch");
    DOALAB_CHECK(n_sources >= 1 && n_sources < s.M, "music: need 1 <= sources < mics");
    const auto bins = band_bins(s, cfg);
    const double df = static_cast<double>(s.sample_rate) / s.cfg.fft_size;

    SpatialSpectrum out{grid, {}};
    out.values.assign(static_cast<size_t>(grid.size), 0.0);
    std::vector<double> band(static_cast<size_t>(grid.size));
    for (int f : bins) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(loaded_scm(s, f, cfg.loading));
        const auto noise = eig.eigenvectors().leftCols(s.M - n_sources);
        const Eigen::MatrixXcd d = steering_grid(g, grid, f * df);
        for (int i = 0; i < grid.size; ++i)
            band[static_cast<size_t>(i)] = 1.0 / ((noise.adjoint() * d.col(i)).squaredNorm() + cfg.eps);
        if (normalize_bands) {
            double mean = 0.0;
            for (double v : band) mean += v;
            mean /= grid.size;
            for (double& v : band) v /= mean;
        }
        for (int i = 0; i < grid.size; ++i) out.values[static_cast<size_t>(i)] += band[static_cast<size_t>(i)];
    }
    for (double& v : out.values) v /= bins.size();
    return out;
}

}  // namespace

Eigen::MatrixXcd narrowband_scm(const MultichannelSpectrogram& s, int f) {
    DOALAB_CHECK(f >= 0 && f < s.F, "narrowband_scm: bin out of range");
    DOALAB_CHECK(s.T > 0, "narrowband_scm: empty spectrogram");
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(s.M, s.M);
    Eigen::VectorXcd y(s.M);
    for (int t = 0; t < s.T; ++t) {
        for (int m = 0; m < s.M; ++m) y(m) = s.at(t, m, f);
        phi.noalias() += y * y.adjoint();
    }
    return phi / static_cast<double>(s.T);
}

SpatialSpectrum music_spectrum(const MultichannelSpectrogram& s, const ArrayGeometry& g,
                               const AngularGrid& grid, int n_sources,
                               const SubspaceConfig& cfg) {
    return music_impl(s, g, grid, n_sources, cfg, false);
}

SpatialSpectrum music_nam_spectrum(const MultichannelSpectrogram& s, const ArrayGeometry& g,
                                   const AngularGrid& grid, int n_sources,
                                   const SubspaceConfig& cfg) {
    return music_impl(s, g, grid, n_sources, cfg, true);
}

SpatialSpectrum tops_spectrum(const MultichannelSpectrogram& s, const ArrayGeometry& g,
                              const AngularGrid& grid, int n_sources, const SubspaceConfig& cfg) {
    DOALAB_CHECK(s.M == g.num_mics(), "tops: geometry mismatch");
    DOALAB_CHECK(n_sources >= 1 && n_sources < s.M, "tops: need 1 <= sources < mics");
    const auto bins = band_bins(s, cfg);
    const double df = static_cast<double>(s.sample_rate) / s.cfg.fft_size;
    const int M = s.M, N = n_sources;

    // reference bin: largest SCM trace; its signal subspace gets shifted everywhere else
    std::vector<Eigen::MatrixXcd> noise(bins.size());
    int ref = 0;
    double best_tr = -1.0;
    Eigen::MatrixXcd signal;
    for (size_t i = 0; i < bins.size(); ++i) {
        const Eigen::MatrixXcd phi = loaded_scm(s, bins[i], cfg.loading);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(phi);
        noise[i] = eig.eigenvectors().leftCols(M - N);
        const double tr = phi.real().trace();
        if (tr > best_tr) {
            best_tr = tr;
            ref = static_cast<int>(i);
            signal = eig.eigenvectors().rightCols(N);
        }
    }

    const double tau_scale = g.radius_m / kSpeedOfSound;
    SpatialSpectrum out{grid, {}};
    out.values.assign(static_cast<size_t>(grid.size), 0.0);
    Eigen::MatrixXcd shifted(M, N), proj(M, N);
    for (int a = 0; a < grid.size; ++a) {
        const double theta = deg2rad(grid.class_angle_deg(a));
        Eigen::MatrixXcd gmat = Eigen::MatrixXcd::Zero(N, N);
        for (size_t i = 0; i < bins.size(); ++i) {
            if (static_cast<int>(i) == ref) continue;
            const double dfreq = (bins[i] - bins[static_cast<size_t>(ref)]) * df;
            for (int m = 0; m < M; ++m) {
                const double ph = kTwoPi * dfreq * tau_scale * std::cos(theta - g.mic_angle(m));
                shifted.row(m) = std::complex<double>(std::cos(ph), std::sin(ph)) * signal.row(m);
            }
            // deflate the candidate direction so a true source still nulls the
            // noise subspace despite subspace leakage
            const Eigen::VectorXcd d = steering_vector(g, bins[i] * df, theta);
            proj = shifted - d * ((d.adjoint() * shifted) / static_cast<double>(M));
            const Eigen::MatrixXcd a_i = proj.adjoint() * noise[i];
            gmat.noalias() += a_i * a_i.adjoint();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gmat);
        const double lam = std::max(eig.eigenvalues()(0), 0.0);
        out.values[static_cast<size_t>(a)] = 1.0 / (std::sqrt(lam) + cfg.eps);
    }
    return out;
}

std::vector<double> pick_peaks(const SpatialSpectrum& sp, int n) {
    const int K = sp.grid.size;
    DOALAB_CHECK(n >= 1 && n <= K, "pick_peaks: bad peak count");
    const auto& v = sp.values;
    DOALAB_CHECK(static_cast<int>(v.size()) == K, "pick_peaks: spectrum size mismatch");

    // circular runs of equal value; a run is a peak iff both neighbor runs are lower
    std::vector<int> cand;
    int anchor = -1;
    for (int i = 0; i < K; ++i)
        if (v[static_cast<size_t>(i)] != v[static_cast<size_t>((i + K - 1) % K)]) {
            anchor = i;
            break;
        }
    if (anchor >= 0) {
        int i = anchor;
        do {
            const int start = i;
            const double val = v[static_cast<size_t>(i)];
            do
                i = (i + 1) % K;
            while (v[static_cast<size_t>(i)] == val && i != anchor);
            const double prev = v[static_cast<size_t>((start + K - 1) % K)];
            if (val > prev && val > v[static_cast<size_t>(i)]) cand.push_back(start);
        } while (i != anchor);
    }
    auto by_value = [&](int a, int b) {
        const double va = v[static_cast<size_t>(a)], vb = v[static_cast<size_t>(b)];
        return va != vb ? va > vb : a < b;
    };
    std::sort(cand.begin(), cand.end(), by_value);
    if (static_cast<int>(cand.size()) > n) cand.resize(static_cast<size_t>(n));

    if (static_cast<int>(cand.size()) < n) {
        std::vector<char> taken(static_cast<size_t>(K), 0);
        for (int i : cand) taken[static_cast<size_t>(i)] = 1;
        std::vector<int> rest;
        for (int i = 0; i < K; ++i)
            if (!taken[static_cast<size_t>(i)]) rest.push_back(i);
        std::sort(rest.begin(), rest.end(), by_value);
        for (int i : rest) {
            if (static_cast<int>(cand.size()) == n) break;
            cand.push_back(i);
        }
    }
    std::vector<double> out;
    out.reserve(cand.size());
    for (int i : cand) out.push_back(sp.grid.class_angle_deg(i));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace doalab
