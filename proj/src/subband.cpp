#include "neurodenoise/subband.hpp"

#include <stdexcept>

namespace neurodenoise {

int PartitionScheme::total_groups() const {
    int n = 0;
    for (const auto& p : partitions) n += p.num_groups();
    return n;
}

int PartitionScheme::feature_dim(int k) const {
    return 2 * context + 2 * partitions[static_cast<std::size_t>(k)].group_width;
}

int PartitionScheme::logits_dim(int k) const {
    const auto& p = partitions[static_cast<std::size_t>(k)];
    return 2 * p.group_width * p.taps();
}

int PartitionScheme::group_start_bin(int k, int g) const {
    const auto& p = partitions[static_cast<std::size_t>(k)];
    return p.first_bin + g * p.group_width;
}

PartitionScheme make_partition(const std::vector<int>& cutoffs, const std::vector<int>& groupings,
                               const std::vector<int>& orders, int context, int modeled_bins) {
    if (groupings.empty()) throw std::invalid_argument("make_partition: no partitions");
    if (cutoffs.size() + 1 != groupings.size() || groupings.size() != orders.size())
        throw std::invalid_argument("make_partition: cutoffs/groupings/orders size mismatch");
    if (context < 0) throw std::invalid_argument("make_partition: context must be >= 0");
    if (modeled_bins < 1) throw std::invalid_argument("make_partition: modeled_bins must be >= 1");

    PartitionScheme scheme;
    scheme.context = context;
    scheme.modeled_bins = modeled_bins;

    int prev_end = 0;
    for (std::size_t k = 0; k < groupings.size(); ++k) {
        Partition p;
        p.first_bin = prev_end + 1;
        p.last_bin = k + 1 < groupings.size() ? cutoffs[k] : modeled_bins;
        p.group_width = groupings[k];
        p.filter_order = orders[k];
        if (p.last_bin <= prev_end || p.last_bin > modeled_bins)
            throw std::invalid_argument("make_partition: cutoffs must be strictly ascending and < F");
        if (p.group_width < 1) throw std::invalid_argument("make_partition: grouping must be >= 1");
        if (p.filter_order < 0) throw std::invalid_argument("make_partition: filter order must be >= 0");
        if (p.size() % p.group_width != 0)
            throw std::invalid_argument("make_partition: partition size not divisible by grouping");
        prev_end = p.last_bin;
        scheme.partitions.push_back(p);
    }
    if (prev_end != modeled_bins)
        throw std::invalid_argument("make_partition: partitions do not tile [1..F]");
    return scheme;
}

Vector build_subband_input(const Matrix& mag, const Matrix& embedding,
                           const PartitionScheme& scheme, int k, int group, int n) {
    const auto& p = scheme.partitions[static_cast<std::size_t>(k)];
    const int N = scheme.context;
    const int g = p.group_width;
    const int F = scheme.modeled_bins;
    const int start = scheme.group_start_bin(k, group);

    Vector v = Vector::Zero(2 * N + 2 * g);
    int idx = 0;
    for (int f = start - N; f < start; ++f, ++idx)
        if (f >= 1 && f <= F) v[idx] = mag(n, f - 1);
    for (int f = start; f < start + g; ++f, ++idx) v[idx] = mag(n, f - 1);
    for (int f = start; f < start + g; ++f, ++idx) v[idx] = embedding(n, f - 1);
    for (int f = start + g; f < start + g + N; ++f, ++idx)
        if (f >= 1 && f <= F) v[idx] = mag(n, f - 1);
    return v;
}

double subband_frame_macs(const PartitionScheme& scheme, const std::vector<int>& widths) {
    if (widths.size() != scheme.partitions.size())
        throw std::invalid_argument("subband_frame_macs: widths/partitions size mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < scheme.partitions.size(); ++k) {
        const auto& p = scheme.partitions[k];
        const double w = widths[k];
        const double in = scheme.feature_dim(static_cast<int>(k));
        const double out = scheme.logits_dim(static_cast<int>(k));
        const double per_group = w * in + w * w + out * w;
        total += per_group * p.num_groups();
    }
    return total;
}

}  // namespace neurodenoise
