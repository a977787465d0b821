#pragma once

#include <vector>

#include "neurodenoise/neurons.hpp"

namespace neurodenoise {

/// One contiguous frequency partition with its grouping and filter order.
/// Bin indices are 1-based over the modeled range [1..F] (DC excluded).
struct Partition {
    int first_bin = 1;    // inclusive
    int last_bin = 1;     // inclusive
    int group_width = 1;  // g_k
    int filter_order = 0; // d_k; taps span frames n .. n - d_k

    int size() const { return last_bin - first_bin + 1; }
    int num_groups() const { return size() / group_width; }
    int taps() const { return filter_order + 1; }
};

struct PartitionScheme {
    std::vector<Partition> partitions;
    int context = 15;  // N neighboring bins on each side
    int modeled_bins = 256;

    int total_groups() const;
    /// Input feature width for partition k: 2N + 2 g_k.
    int feature_dim(int k) const;
    /// Readout width for partition k: 2 g_k (d_k + 1).
    int logits_dim(int k) const;
    /// First modeled bin of group g within partition k.
    int group_start_bin(int k, int g) const;
};

/// Builds and validates a partition scheme. Cutoffs are the last bin of each
/// partition except the final one, which extends to modeled_bins.
PartitionScheme make_partition(const std::vector<int>& cutoffs, const std::vector<int>& groupings,
                               const std::vector<int>& orders, int context, int modeled_bins);

/// Assembles the sub-band input for one group at frame row n:
/// [N lower context magnitudes, g in-group magnitudes, g embedding values,
///  N upper context magnitudes]; out-of-range context bins are zero.
/// `mag` and `embedding` are T x F grids over the modeled range, modeled bin
/// f stored in column f-1.
Vector build_subband_input(const Matrix& mag, const Matrix& embedding,
                           const PartitionScheme& scheme, int k, int group, int n);

/// Per-frame multiply-accumulate count of the sub-band stage for the given
/// per-partition hidden widths (one spiking layer plus readout per partition).
double subband_frame_macs(const PartitionScheme& scheme, const std::vector<int>& widths);

}  // namespace neurodenoise
