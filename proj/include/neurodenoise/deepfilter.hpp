#pragma once

#include <complex>
#include <vector>

#include "neurodenoise/neurons.hpp"
#include "neurodenoise/spectral.hpp"
#include "neurodenoise/subband.hpp"

namespace neurodenoise {

/// g x (d+1) grid of historical noisy bins: row m, column j holds
/// x(n - j, f + m). Frames before the first are zero.
struct MultiFrameBlock {
    int group_width = 0;
    int taps = 0;
    std::vector<std::complex<double>> data;  // row-major (bin, tap)

    MultiFrameBlock() = default;
    MultiFrameBlock(int g, int t)
        : group_width(g), taps(t), data(static_cast<std::size_t>(g) * t) {}
    std::complex<double>& at(int m, int j) { return data[static_cast<std::size_t>(m) * taps + j]; }
    const std::complex<double>& at(int m, int j) const {
        return data[static_cast<std::size_t>(m) * taps + j];
    }
};

/// Complex MFDF taps, same shape as the block they multiply.
struct DeepFilter {
    int group_width = 0;
    int taps = 0;
    std::vector<std::complex<double>> data;

    DeepFilter() = default;
    DeepFilter(int g, int t) : group_width(g), taps(t), data(static_cast<std::size_t>(g) * t) {}
    std::complex<double>& at(int m, int j) { return data[static_cast<std::size_t>(m) * taps + j]; }
    const std::complex<double>& at(int m, int j) const {
        return data[static_cast<std::size_t>(m) * taps + j];
    }
};

/// Gathers the historical frames for one group at frame n. `spec` is the full
/// spectrogram including the DC column; modeled bin f lives at column f.
MultiFrameBlock build_multiframe(const ComplexSpectrogram& spec, const PartitionScheme& scheme,
                                 int k, int group, int n);

/// Unpacks readout logits into complex taps: interleaved (re, im) pairs per
/// tap, row-major over (bin, tap).
DeepFilter logits_to_filter(const Vector& logits, int group_width, int taps);

/// Inverse packing of logits_to_filter.
Vector filter_to_logits(const DeepFilter& filt);

/// Row-wise sum of the complex Hadamard product: enhanced bin m is
/// sum_j w(m, j) * x(m, j).
std::vector<std::complex<double>> apply_filter(const MultiFrameBlock& block,
                                               const DeepFilter& filt);

/// Applies every group's filter at every frame and writes the enhanced grid.
/// The DC bin is passed through unmodified. `filters[n][group_index]` is the
/// filter for global group `group_index` at frame n.
ComplexSpectrogram assemble_enhanced(const ComplexSpectrogram& spec, const PartitionScheme& scheme,
                                     const std::vector<std::vector<DeepFilter>>& filters);

}  // namespace neurodenoise
