#pragma once

#include <vector>

#include "neurodenoise/spectral.hpp"

namespace neurodenoise {

struct LossWeights {
    double alpha = 0.5;
    double gamma1 = 0.5;
    double gamma2 = 0.001;
    double synops_weight = 0.0;
};

/// SI-SDR values are clamped to +-kSiSdrCapDb to avoid infinities at perfect
/// or degenerate estimates.
constexpr double kSiSdrCapDb = 60.0;

/// TF-domain loss: alpha * magnitude MSE + (1 - alpha) * (real MSE + imag MSE),
/// means over all T x F bins.
double loss_tf(const ComplexSpectrogram& clean, const ComplexSpectrogram& est, double alpha);

/// Gradient of loss_tf w.r.t. the estimate.
ComplexSpectrogram loss_tf_grad(const ComplexSpectrogram& clean, const ComplexSpectrogram& est,
                                double alpha);

/// Negated SI-SDR in dB (capped).
double loss_sisdr(const std::vector<double>& clean, const std::vector<double>& est);

/// SI-SDR in dB (capped); errors on an all-zero reference.
double si_snr(const std::vector<double>& est, const std::vector<double>& clean);

/// Improvement of the estimate over the unprocessed noisy input.
double si_snr_i(const std::vector<double>& noisy, const std::vector<double>& clean,
                const std::vector<double>& est);

/// Gradient of si_snr w.r.t. the estimate (zero inside the cap region).
std::vector<double> si_snr_grad(const std::vector<double>& est, const std::vector<double>& clean);

/// Combined objective: gamma1 * L_TF + gamma2 * (100 - SI-SDR) +
/// synops_weight * penalty. The penalty value is supplied by the caller
/// (see profiler/trainer).
double total_loss(double tf_loss, double si_sdr_db, double synops_penalty,
                  const LossWeights& weights);

}  // namespace neurodenoise
