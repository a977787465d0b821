#include "neurodenoise/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace neurodenoise {

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("FFT size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
}

std::vector<std::complex<double>> rfft(const double* x, int n) {
    std::vector<std::complex<double>> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[i] = std::complex<double>(x[i], 0.0);
    fft_inplace(a, false);
    a.resize(static_cast<std::size_t>(n / 2 + 1));
    return a;
}

std::vector<double> irfft(const std::complex<double>* bins, int nfft) {
    std::vector<std::complex<double>> a(static_cast<std::size_t>(nfft));
    a[0] = std::complex<double>(bins[0].real(), 0.0);
    a[static_cast<std::size_t>(nfft / 2)] = std::complex<double>(bins[nfft / 2].real(), 0.0);
    for (int f = 1; f < nfft / 2; ++f) {
        a[static_cast<std::size_t>(f)] = bins[f];
        a[static_cast<std::size_t>(nfft - f)] = std::conj(bins[f]);
    }
    fft_inplace(a, true);
    std::vector<double> out(static_cast<std::size_t>(nfft));
    for (int i = 0; i < nfft; ++i) out[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)].real();
    return out;
}

std::vector<std::complex<double>> irfft_adjoint(const double* d_time, int nfft) {
    // irfft is linear in the (re, im) components; its adjoint is a scaled rfft:
    // interior bins pick up 2/N, DC and Nyquist 1/N, and the hermitian fold
    // flips the sign convention so the rfft output lands directly on (re, im).
    std::vector<std::complex<double>> spec = rfft(d_time, nfft);
    const double scale_edge = 1.0 / static_cast<double>(nfft);
    const double scale_mid = 2.0 / static_cast<double>(nfft);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(nfft / 2 + 1));
    out[0] = std::complex<double>(spec[0].real() * scale_edge, 0.0);
    out[static_cast<std::size_t>(nfft / 2)] =
        std::complex<double>(spec[static_cast<std::size_t>(nfft / 2)].real() * scale_edge, 0.0);
    for (int f = 1; f < nfft / 2; ++f) {
        out[static_cast<std::size_t>(f)] = std::complex<double>(
            spec[static_cast<std::size_t>(f)].real() * scale_mid,
            spec[static_cast<std::size_t>(f)].imag() * scale_mid);
    }
    return out;
}

}  // namespace neurodenoise
