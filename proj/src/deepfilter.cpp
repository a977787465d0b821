#include "neurodenoise/deepfilter.hpp"

#include <stdexcept>

namespace neurodenoise {

MultiFrameBlock build_multiframe(const ComplexSpectrogram& spec, const PartitionScheme& scheme,
                                 int k, int group, int n) {
    const auto& p = scheme.partitions[static_cast<std::size_t>(k)];
    const int start = scheme.group_start_bin(k, group);
    MultiFrameBlock block(p.group_width, p.taps());
    for (int m = 0; m < p.group_width; ++m) {
        for (int j = 0; j < p.taps(); ++j) {
            int frame = n - j;
            block.at(m, j) = frame >= 0 ? spec.at(frame, start + m) : std::complex<double>(0.0, 0.0);
        }
    }
    return block;
}

DeepFilter logits_to_filter(const Vector& logits, int group_width, int taps) {
    if (logits.size() != static_cast<Eigen::Index>(2 * group_width * taps))
        throw std::invalid_argument("logits_to_filter: logit count mismatch");
    DeepFilter filt(group_width, taps);
    for (int m = 0; m < group_width; ++m) {
        for (int j = 0; j < taps; ++j) {
            int base = 2 * (m * taps + j);
            filt.at(m, j) = std::complex<double>(logits[base], logits[base + 1]);
        }
    }
    return filt;
}

Vector filter_to_logits(const DeepFilter& filt) {
    Vector logits(2 * filt.group_width * filt.taps);
    for (int m = 0; m < filt.group_width; ++m) {
        for (int j = 0; j < filt.taps; ++j) {
            int base = 2 * (m * filt.taps + j);
            logits[base] = filt.at(m, j).real();
            logits[base + 1] = filt.at(m, j).imag();
        }
    }
    return logits;
}

std::vector<std::complex<double>> apply_filter(const MultiFrameBlock& block,
                                               const DeepFilter& filt) {
    if (block.group_width != filt.group_width || block.taps != filt.taps)
        throw std::invalid_argument("apply_filter: shape mismatch");
    std::vector<std::complex<double>> out(static_cast<std::size_t>(block.group_width));
    for (int m = 0; m < block.group_width; ++m) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < block.taps; ++j) acc += filt.at(m, j) * block.at(m, j);
        out[static_cast<std::size_t>(m)] = acc;
    }
    return out;
}

ComplexSpectrogram assemble_enhanced(const ComplexSpectrogram& spec, const PartitionScheme& scheme,
                                     const std::vector<std::vector<DeepFilter>>& filters) {
    if (scheme.modeled_bins != spec.num_bins - 1)
        throw std::invalid_argument("assemble_enhanced: scheme does not match spectrogram bins");
    if (filters.size() != static_cast<std::size_t>(spec.num_frames))
        throw std::invalid_argument("assemble_enhanced: missing frames in filter set");

    ComplexSpectrogram out(spec.num_frames, spec.num_bins);
    const int total_groups = scheme.total_groups();
    for (int n = 0; n < spec.num_frames; ++n) {
        if (filters[static_cast<std::size_t>(n)].size() != static_cast<std::size_t>(total_groups))
            throw std::invalid_argument("assemble_enhanced: missing group output");
        out.at(n, 0) = spec.at(n, 0);  // DC bypass
        int group_index = 0;
        for (int k = 0; k < static_cast<int>(scheme.partitions.size()); ++k) {
            const auto& p = scheme.partitions[static_cast<std::size_t>(k)];
            for (int g = 0; g < p.num_groups(); ++g, ++group_index) {
                const DeepFilter& filt = filters[static_cast<std::size_t>(n)][static_cast<std::size_t>(group_index)];
                MultiFrameBlock block = build_multiframe(spec, scheme, k, g, n);
                auto bins = apply_filter(block, filt);
                int start = scheme.group_start_bin(k, g);
                for (int m = 0; m < p.group_width; ++m)
                    out.at(n, start + m) = bins[static_cast<std::size_t>(m)];
            }
        }
    }
    return out;
}

}  // namespace neurodenoise
