#pragma once

#include <complex>
#include <vector>

#include "neurodenoise/audio.hpp"

namespace neurodenoise {

/// Causal STFT framing: frame n covers samples [n*hop, n*hop + window_len),
/// no center padding.
struct StftConfig {
    int window_len = 512;
    int hop_len = 128;
    int fft_size = 512;

    int num_bins() const { return fft_size / 2 + 1; }
    /// Frequency bins carried into the model (DC excluded, Nyquist included).
    int modeled_bins() const { return fft_size / 2; }
    int num_frames(std::size_t num_samples) const;
    void validate() const;
};

/// T x num_bins grid of complex STFT values, row-major by frame.
/// Bin 0 is DC; bins 1..fft/2 are the modeled range.
struct ComplexSpectrogram {
    int num_frames = 0;
    int num_bins = 0;
    std::vector<std::complex<double>> data;

    ComplexSpectrogram() = default;
    ComplexSpectrogram(int frames, int bins)
        : num_frames(frames), num_bins(bins), data(static_cast<std::size_t>(frames) * bins) {}

    std::complex<double>& at(int n, int f) { return data[static_cast<std::size_t>(n) * num_bins + f]; }
    const std::complex<double>& at(int n, int f) const {
        return data[static_cast<std::size_t>(n) * num_bins + f];
    }
};

struct MagnitudeSpectrogram {
    int num_frames = 0;
    int num_bins = 0;
    std::vector<double> data;

    MagnitudeSpectrogram() = default;
    MagnitudeSpectrogram(int frames, int bins)
        : num_frames(frames), num_bins(bins), data(static_cast<std::size_t>(frames) * bins, 0.0) {}

    double& at(int n, int f) { return data[static_cast<std::size_t>(n) * num_bins + f]; }
    double at(int n, int f) const { return data[static_cast<std::size_t>(n) * num_bins + f]; }
};

/// Periodic Hann taper of length n.
std::vector<double> hann_window(int n);

ComplexSpectrogram stft(const AudioBuffer& audio, const StftConfig& cfg);

/// Windowed overlap-add synthesis with squared-window COLA normalization.
/// Output length is (T-1)*hop + window_len.
AudioBuffer istft(const ComplexSpectrogram& spec, const StftConfig& cfg);

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec);

/// Adjoint of istft: maps d(loss)/d(waveform) to d(loss)/d(spectrogram).
ComplexSpectrogram istft_adjoint(const std::vector<double>& d_wave, int num_frames,
                                 const StftConfig& cfg);

/// Computes the single STFT frame starting at `samples` (window_len values).
void stft_frame(const double* samples, const StftConfig& cfg, const std::vector<double>& window,
                std::complex<double>* out_bins);

}  // namespace neurodenoise
