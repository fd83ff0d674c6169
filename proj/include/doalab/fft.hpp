#pragma once

#include <complex>
#include <vector>

namespace doalab {

using cplx = std::complex<double>;

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<cplx>& a, bool inverse);

std::vector<cplx> fft(const std::vector<cplx>& a);
std::vector<cplx> ifft(const std::vector<cplx>& a);

// Real input zero-padded/truncated to n (power of two); returns bins 0..n/2.
std::vector<cplx> rfft(const std::vector<double>& x, int n);

// Inverse of rfft: rebuilds the conjugate-symmetric spectrum and returns n
// real samples.
std::vector<double> irfft(const std::vector<cplx>& half, int n);

// Linear convolution via FFT; output size a+b-1.
std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace doalab
