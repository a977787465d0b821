#include "neurodenoise/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "neurodenoise/fft.hpp"

namespace neurodenoise {

namespace {
constexpr double kColaEps = 1e-12;
}

void StftConfig::validate() const {
    if (window_len <= 0 || hop_len <= 0 || fft_size <= 0)
        throw std::invalid_argument("StftConfig: sizes must be positive");
    if (window_len % hop_len != 0)
        throw std::invalid_argument("StftConfig: hop_len must divide window_len");
    if (fft_size < window_len)
        throw std::invalid_argument("StftConfig: fft_size must be >= window_len");
    if ((fft_size & (fft_size - 1)) != 0)
        throw std::invalid_argument("StftConfig: fft_size must be a power of two");
}

int StftConfig::num_frames(std::size_t num_samples) const {
    if (num_samples < static_cast<std::size_t>(window_len)) return 0;
    return 1 + static_cast<int>((num_samples - static_cast<std::size_t>(window_len)) /
                                static_cast<std::size_t>(hop_len));
}

std::vector<double> hann_window(int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] =
            0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n));
    return w;
}

void stft_frame(const double* samples, const StftConfig& cfg, const std::vector<double>& window,
                std::complex<double>* out_bins) {
    std::vector<double> buf(static_cast<std::size_t>(cfg.fft_size), 0.0);
    for (int k = 0; k < cfg.window_len; ++k)
        buf[static_cast<std::size_t>(k)] = samples[k] * window[static_cast<std::size_t>(k)];
    std::vector<std::complex<double>> bins = rfft(buf.data(), cfg.fft_size);
    for (int f = 0; f < cfg.num_bins(); ++f) out_bins[f] = bins[static_cast<std::size_t>(f)];
}

ComplexSpectrogram stft(const AudioBuffer& audio, const StftConfig& cfg) {
    cfg.validate();
    if (audio.samples.size() < static_cast<std::size_t>(cfg.window_len))
        throw std::invalid_argument("stft: audio shorter than one analysis window");
    for (double s : audio.samples)
        if (!std::isfinite(s)) throw std::invalid_argument("stft: non-finite sample");

    const int frames = cfg.num_frames(audio.samples.size());
    std::vector<double> window = hann_window(cfg.window_len);
    ComplexSpectrogram spec(frames, cfg.num_bins());
    for (int n = 0; n < frames; ++n) {
        stft_frame(audio.samples.data() + static_cast<std::size_t>(n) * cfg.hop_len, cfg, window,
                   &spec.at(n, 0));
    }
    return spec;
}

AudioBuffer istft(const ComplexSpectrogram& spec, const StftConfig& cfg) {
    cfg.validate();
    if (spec.num_bins != cfg.num_bins())
        throw std::invalid_argument("istft: spectrogram bin count does not match config");

    const int frames = spec.num_frames;
    const std::size_t out_len =
        static_cast<std::size_t>(frames > 0 ? (frames - 1) * cfg.hop_len + cfg.window_len : 0);
    std::vector<double> window = hann_window(cfg.window_len);
    std::vector<double> acc(out_len, 0.0);
    std::vector<double> wsum(out_len, 0.0);

    for (int n = 0; n < frames; ++n) {
        std::vector<double> t = irfft(&spec.at(n, 0), cfg.fft_size);
        const std::size_t base = static_cast<std::size_t>(n) * cfg.hop_len;
        for (int k = 0; k < cfg.window_len; ++k) {
            double w = window[static_cast<std::size_t>(k)];
            acc[base + static_cast<std::size_t>(k)] += t[static_cast<std::size_t>(k)] * w;
            wsum[base + static_cast<std::size_t>(k)] += w * w;
        }
    }

    AudioBuffer out;
    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i)
        out.samples[i] = acc[i] / std::max(wsum[i], kColaEps);
    return out;
}

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec) {
    MagnitudeSpectrogram mag(spec.num_frames, spec.num_bins);
    for (std::size_t i = 0; i < spec.data.size(); ++i) mag.data[i] = std::abs(spec.data[i]);
    return mag;
}

ComplexSpectrogram istft_adjoint(const std::vector<double>& d_wave, int num_frames,
                                 const StftConfig& cfg) {
    cfg.validate();
    const std::size_t out_len = static_cast<std::size_t>(
        num_frames > 0 ? (num_frames - 1) * cfg.hop_len + cfg.window_len : 0);
    if (d_wave.size() != out_len)
        throw std::invalid_argument("istft_adjoint: waveform gradient length mismatch");

    std::vector<double> window = hann_window(cfg.window_len);
    std::vector<double> wsum(out_len, 0.0);
    for (int n = 0; n < num_frames; ++n) {
        const std::size_t base = static_cast<std::size_t>(n) * cfg.hop_len;
        for (int k = 0; k < cfg.window_len; ++k) {
            double w = window[static_cast<std::size_t>(k)];
            wsum[base + static_cast<std::size_t>(k)] += w * w;
        }
    }

    ComplexSpectrogram grad(num_frames, cfg.num_bins());
    std::vector<double> d_frame(static_cast<std::size_t>(cfg.fft_size), 0.0);
    for (int n = 0; n < num_frames; ++n) {
        const std::size_t base = static_cast<std::size_t>(n) * cfg.hop_len;
        std::fill(d_frame.begin(), d_frame.end(), 0.0);
        for (int k = 0; k < cfg.window_len; ++k) {
            double w = window[static_cast<std::size_t>(k)];
            double d_acc = d_wave[base + static_cast<std::size_t>(k)] /
                           std::max(wsum[base + static_cast<std::size_t>(k)], kColaEps);
            d_frame[static_cast<std::size_t>(k)] = d_acc * w;
        }
        std::vector<std::complex<double>> d_bins = irfft_adjoint(d_frame.data(), cfg.fft_size);
        for (int f = 0; f < cfg.num_bins(); ++f) grad.at(n, f) = d_bins[static_cast<std::size_t>(f)];
    }
    return grad;
}

}  // namespace neurodenoise
