#pragma once

// Independent oracles used by the test suite only: implementations favor
// directness over speed and share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracles {

// Reverberation time from Schroeder backward integration: straight-line fit
// of the decay between -5 and -35 dB, extrapolated to -60.
inline double schroeder_t60(const std::vector<double>& h, double fs) {
    const size_t n = h.size();
    std::vector<double> edc(n);
    double acc = 0.0;
    for (size_t i = n; i-- > 0;) {
        acc += h[i] * h[i];
        edc[i] = acc;
    }
    if (acc <= 0.0) return 0.0;
    std::vector<double> db(n);
    for (size_t i = 0; i < n; ++i) db[i] = 10.0 * std::log10(edc[i] / edc[0] + 1e-300);
    size_t lo = 0, hi = 0;
    while (lo < n && db[lo] > -5.0) ++lo;
    hi = lo;
    while (hi < n && db[hi] > -35.0) ++hi;
    if (hi <= lo + 2 || hi >= n) return 0.0;
    // least squares of db against time over [lo, hi)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto cnt = static_cast<double>(hi - lo);
    for (size_t i = lo; i < hi; ++i) {
        const double t = static_cast<double>(i) / fs;
        sx += t;
        sy += db[i];
        sxx += t * t;
        sxy += t * db[i];
    }
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return slope < 0 ? -60.0 / slope : 0.0;
}

// Kolmogorov-Smirnov p-value (asymptotic) for samples against U(lo, hi).
inline double ks_uniform_pvalue(std::vector<double> samples, double lo, double hi) {
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double cdf = (samples[i] - lo) / (hi - lo);
        const double e0 = static_cast<double>(i) / n;
        const double e1 = static_cast<double>(i + 1) / n;
        d = std::max({d, std::fabs(cdf - e0), std::fabs(cdf - e1)});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

// Minimum-cost transport between two discrete distributions on a line with
// |i - j| ground cost, solved greedily (exact for this cost).
inline double transport_distance(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> supply = a, demand = b;
    double cost = 0.0;
    size_t i = 0, j = 0;
    while (i < supply.size() && j < demand.size()) {
        if (supply[i] <= 1e-15) {
            ++i;
            continue;
        }
        if (demand[j] <= 1e-15) {
            ++j;
            continue;
        }
        const double moved = std::min(supply[i], demand[j]);
        cost += moved * std::fabs(static_cast<double>(i) - static_cast<double>(j));
        supply[i] -= moved;
        demand[j] -= moved;
    }
    return cost;
}

}  // namespace oracles
