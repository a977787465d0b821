#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neurodenoise/model.hpp"

namespace neurodenoise {

struct TrainingConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;  // decoupled
    double grad_clip_norm = 10.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 4;
    int max_epochs = 10;
    uint64_t seed = 0;
    bool relaxed = false;  // relaxed spikes exist for gradient verification only

    void validate() const;
};

struct TrainItem {
    AudioBuffer noisy;
    AudioBuffer clean;
};

/// Adaptive-moment optimizer with decoupled weight decay over a fixed
/// parameter registry.
class AdamW {
public:
    AdamW(std::vector<ParamRef> params, const TrainingConfig& cfg);
    /// Applies one update from the gradients currently stored in the registry.
    void step();

private:
    std::vector<ParamRef> params_;
    TrainingConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long t_ = 0;
};

struct LossBreakdown {
    double total = 0.0;
    double tf = 0.0;
    double si_sdr_db = 0.0;
    double penalty = 0.0;
};

/// Forward + backward for one (noisy, clean) pair; accumulates parameter
/// gradients into the model. The waveform reference is istft(stft(clean)) so
/// the SI-SDR term compares like with like.
LossBreakdown compute_loss_and_grads(Model& model, const TrainItem& item, bool relaxed);

/// Loss only (no gradients); used for evaluation and finite differences.
LossBreakdown compute_loss(const Model& model, const TrainItem& item, bool relaxed);

/// One optimizer step over a batch: deterministic per-item gradient
/// accumulation (item order fixed regardless of thread count), global
/// grad-norm clipping, AdamW update. Returns the mean loss. Throws on
/// non-finite loss with diagnostics.
LossBreakdown bptt_step(Model& model, const std::vector<TrainItem>& batch, AdamW& opt,
                        const TrainingConfig& cfg);

/// Scales the registered gradients so their global L2 norm is at most
/// max_norm; returns the pre-clip norm.
double clip_grad_norm(std::vector<ParamRef>& params, double max_norm);

/// Mean SI-SNR improvement over the given pairs.
double evaluate_si_snr_i(const Model& model, const std::vector<TrainItem>& items);

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
    std::string worst_param;
};

/// Relaxed-mode gradient verification: compares analytic BPTT gradients with
/// central finite differences on up to max_params randomly chosen parameters,
/// resampling the probe input when any membrane potential sits within
/// 10*eps of a surrogate kink. The model must be small (runs 2 forward
/// passes per checked parameter).
GradCheckResult grad_check(Model& model, const TrainItem& item, double eps = 1e-4,
                           int max_params = 200, uint64_t seed = 1);

/// Worker-thread cap: min(hardware_concurrency, NEURODENOISE_THREADS if set).
int max_threads();

}  // namespace neurodenoise
