#pragma once

#include <complex>
#include <vector>

namespace neurodenoise {

/// In-place radix-2 complex FFT. Size must be a power of two.
/// The inverse transform includes the 1/N normalization.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

/// Real-input FFT returning the n/2+1 one-sided bins.
std::vector<std::complex<double>> rfft(const double* x, int n);

/// Inverse of rfft: one-sided spectrum (nfft/2+1 bins) back to nfft real samples.
std::vector<double> irfft(const std::complex<double>* bins, int nfft);

/// Adjoint of irfft viewed as a linear map over (re, im) components:
/// given d(loss)/d(time samples), returns d(loss)/d(bins).
/// The imaginary parts of the DC and Nyquist bins receive zero gradient.
std::vector<std::complex<double>> irfft_adjoint(const double* d_time, int nfft);

}  // namespace neurodenoise
