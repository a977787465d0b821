#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "neurodenoise/deepfilter.hpp"
#include "neurodenoise/layers.hpp"
#include "neurodenoise/losses.hpp"
#include "neurodenoise/profiler.hpp"
#include "neurodenoise/spectral.hpp"
#include "neurodenoise/subband.hpp"

namespace neurodenoise {

struct ModelConfig {
    StftConfig stft;

    // frequency partitioning
    std::vector<int> cutoffs{32, 128};
    std::vector<int> groupings{8, 32, 64};
    std::vector<int> filter_orders{5, 3, 1};
    int context = 15;

    std::vector<int> fullband_widths{384, 288};
    std::vector<int> subband_widths{256, 256, 256};

    std::string neuron_kind = "gsn";
    double theta = 1.0;
    double lif_tau = 5.0;
    double readout_leak = 0.5;

    std::string norm_mode = "ema";  // "ema" or "utterance"
    double ema_beta = 0.98;

    LossWeights loss;

    double enc_dec_latency_s = 0.00002;

    int modeled_bins() const { return stft.modeled_bins(); }
    PartitionScheme scheme() const;
    double algorithmic_latency_s() const;
    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json_text(const std::string& text);
    static ModelConfig load(const std::string& path);
    void save(const std::string& path) const;
    uint64_t hash() const;
};

struct SubbandNet {
    std::vector<SpikingLayer> layers;
    ReadoutLayer readout;
};

/// Per-stream recurrent state for streaming inference.
struct StreamState {
    std::vector<LayerState> fb_states;
    Vector fb_readout_u;
    std::vector<std::vector<std::vector<LayerState>>> sb_states;  // [k][group][layer]
    std::vector<std::vector<Vector>> sb_readout_u;                // [k][group]
    std::deque<std::vector<std::complex<double>>> frame_history;  // newest first
    double ema_mean = 0.0;
    bool ema_started = false;
};

/// Spike/decay accumulators for the profiler, parallel to Model::topology().
struct ActivityCollector {
    std::vector<LayerActivity> activity;
    DecayStats decay;
    long steps = 0;
};

class Model {
public:
    ModelConfig cfg;
    PartitionScheme scheme;
    std::vector<SpikingLayer> fb_layers;
    ReadoutLayer fb_readout;
    std::vector<SubbandNet> sb;

    void init(const ModelConfig& config, uint64_t seed);
    /// Debug construction: zero weights, readout leak 0, sub-band readout
    /// biases set so every group emits a unit tap at j=0 (pipeline identity
    /// when filter orders are 0).
    void make_identity(const ModelConfig& config);

    std::vector<ParamRef> params();
    void zero_grads();
    std::map<std::string, long> parameter_counts() const;
    long parameter_count() const;

    std::vector<LayerTopology> topology() const;
    ActivityCollector make_collector() const;

    NeuronKind kind() const { return neuron_kind_from_string(cfg.neuron_kind); }

    // ---- streaming / inference ----
    StreamState make_stream_state() const;
    /// Processes one STFT frame (num_bins complex values) and returns the
    /// enhanced frame. Purely causal; identical math to the offline path.
    std::vector<std::complex<double>> step_frame(const std::complex<double>* frame,
                                                 StreamState& state,
                                                 ActivityCollector* collector = nullptr) const;
    ComplexSpectrogram enhance_spectrogram(const ComplexSpectrogram& noisy,
                                           ActivityCollector* collector = nullptr) const;
    AudioBuffer enhance(const AudioBuffer& noisy, ActivityCollector* collector = nullptr) const;

    // ---- training ----
    struct Trace {
        ComplexSpectrogram noisy;
        Matrix norm_mag;  // T x F normalized magnitudes
        std::vector<SpikingLayer::Tape> fb_tapes;
        Matrix embedding;  // T x F
        std::vector<std::vector<std::vector<SpikingLayer::Tape>>> sb_tapes;  // [k][group][layer]
        std::vector<std::vector<Matrix>> sb_logits;                          // [k][group]
        ComplexSpectrogram enhanced;
        bool relaxed = false;
    };

    ComplexSpectrogram forward_train(const ComplexSpectrogram& noisy, bool relaxed,
                                     Trace& trace) const;
    /// Differentiable SynOPs surrogate over the trace (spike totals weighted
    /// by fan-out).
    double synops_penalty(const Trace& trace) const;
    void backward(const Trace& trace, const ComplexSpectrogram& d_enhanced, double synops_weight);

    PowerReport make_report(const ActivityCollector& collector,
                            const CostModel& cost = CostModel{}) const;
    /// Decay-factor histogram of a profiled run; errors when the model has no
    /// GSN layers.
    Histogram decay_histogram(const ActivityCollector& collector) const;

private:
    Matrix normalize_offline(const Matrix& mag) const;
    void structure(const ModelConfig& config);  // allocates layers (no init)
    std::vector<std::complex<double>> step_frame_normalized(const std::complex<double>* frame,
                                                            const Vector& norm_input,
                                                            StreamState& state,
                                                            ActivityCollector* collector) const;
};

// ---- checkpoint I/O ----
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, Model& model);
/// Throws CheckpointError on header/shape/config-hash mismatch.
void load_checkpoint(const std::string& path, Model& model);

/// Chunk-driven streaming front end: ring-buffers input samples, advances the
/// model one hop at a time, and emits finalized overlap-add output samples.
class StreamingEnhancer {
public:
    explicit StreamingEnhancer(const Model& model, ActivityCollector* collector = nullptr);
    /// Feeds samples; returns any output samples finalized by this chunk.
    std::vector<double> feed(const double* samples, std::size_t count);
    /// Emits the remaining tail after the last full frame.
    std::vector<double> flush();
    const ComplexSpectrogram& enhanced_frames() const { return enhanced_; }

private:
    void process_frame();

    const Model& model_;
    ActivityCollector* collector_;
    StreamState state_;
    std::vector<double> window_;
    std::vector<double> pending_;  // samples not yet consumed by a frame
    std::size_t absolute_pos_ = 0;
    int frame_index_ = 0;
    ComplexSpectrogram enhanced_;
    std::vector<double> ola_acc_;
    std::vector<double> ola_wsum_;
    std::size_t emitted_ = 0;
};

}  // namespace neurodenoise
