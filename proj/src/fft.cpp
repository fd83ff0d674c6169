#include "doalab/fft.hpp"

#include <cmath>

#include "doalab/common.hpp"

namespace doalab {

static bool is_pow2(size_t n) { return n && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    DOALAB_CHECK(is_pow2(n), "fft: size must be a power of two");
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = kTwoPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        cplx wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

std::vector<cplx> fft(const std::vector<cplx>& a) {
    auto out = a;
    fft_inplace(out, false);
    return out;
}

std::vector<cplx> ifft(const std::vector<cplx>& a) {
    auto out = a;
    fft_inplace(out, true);
    return out;
}

std::vector<cplx> rfft(const std::vector<double>& x, int n) {
    std::vector<cplx> buf(static_cast<size_t>(n), cplx(0.0, 0.0));
    const size_t m = std::min(x.size(), static_cast<size_t>(n));
    for (size_t i = 0; i < m; ++i) buf[i] = cplx(x[i], 0.0);
    fft_inplace(buf, false);
    buf.resize(static_cast<size_t>(n) / 2 + 1);
    return buf;
}

std::vector<double> irfft(const std::vector<cplx>& half, int n) {
    DOALAB_CHECK(static_cast<int>(half.size()) == n / 2 + 1, "irfft: bad spectrum size");
    std::vector<cplx> buf(static_cast<size_t>(n));
    for (int k = 0; k <= n / 2; ++k) buf[static_cast<size_t>(k)] = half[static_cast<size_t>(k)];
    for (int k = n / 2 + 1; k < n; ++k)
        buf[static_cast<size_t>(k)] = std::conj(half[static_cast<size_t>(n - k)]);
    fft_inplace(buf, true);
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)].real();
    return out;
}

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    DOALAB_CHECK(!a.empty() && !b.empty(), "fft_convolve: empty input");
    const size_t out_len = a.size() + b.size() - 1;
    size_t n = 1;
    while (n < out_len) n <<= 1;
    auto fa = rfft(a, static_cast<int>(n));
    auto fb = rfft(b, static_cast<int>(n));
    for (size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    auto full = irfft(fa, static_cast<int>(n));
    full.resize(out_len);
    return full;
}

}  // namespace doalab
