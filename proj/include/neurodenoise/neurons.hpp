#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace neurodenoise {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class NeuronKind { GSN, LIF, PLIF, ALIF };

NeuronKind neuron_kind_from_string(const std::string& s);
std::string to_string(NeuronKind kind);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Triangular pseudo-derivative of the spike function: max(0, 1 - |u - theta|).
inline double surrogate_grad(double u, double theta) {
    return std::max(0.0, 1.0 - std::abs(u - theta));
}

/// Smooth clamp whose derivative is surrogate_grad; used only in relaxed
/// (gradient-checking) mode in place of the hard spike.
inline double relaxed_spike(double u, double theta) {
    double v = u - theta;
    if (v <= -1.0) return 0.0;
    if (v < 0.0) return 0.5 * (v + 1.0) * (v + 1.0);
    if (v < 1.0) return 1.0 - 0.5 * (1.0 - v) * (1.0 - v);
    return 1.0;
}

/// Per-stream recurrent state of one layer.
struct LayerState {
    Vector u;       // membrane potential
    Vector o_prev;  // previous-step spikes
    Vector adapt;   // ALIF threshold adaptation a(t-1); unused otherwise

    explicit LayerState(int width = 0)
        : u(Vector::Zero(width)), o_prev(Vector::Zero(width)), adapt(Vector::Zero(width)) {}
};

struct GsnLayerParams {
    Matrix w_in;        // out x in, shared between current and gate paths
    Matrix w_rec;       // out x out
    Vector bias;        // current-path bias b
    Vector gate_bias;   // decay-gate bias b~
    double theta = 1.0;
};

struct LifLayerParams {
    Matrix w_in;
    Matrix w_rec;
    Vector bias;
    double lambda = std::exp(-1.0 / 5.0);  // exp(-1/tau)
    double theta = 1.0;
};

/// One GSN update: input current + input-dependent decay gate + subtraction
/// reset. Returns the spike vector; `lambda_out`, when non-null, receives the
/// per-neuron decay factors of this step.
Vector gsn_step(const GsnLayerParams& params, LayerState& state, const Vector& o_in,
                Vector* lambda_out = nullptr);

/// One LIF update with constant decay and subtraction reset.
Vector lif_step(const LifLayerParams& params, LayerState& state, const Vector& o_in);

/// PLIF: LIF whose decay is sigmoid of a learnable per-layer scalar.
Vector plif_step(const LifLayerParams& params, double raw_decay, LayerState& state,
                 const Vector& o_in);

/// ALIF: LIF with adaptive threshold theta(t) = theta0 + beta * a(t),
/// a(t) = rho * a(t-1) + o(t-1).
Vector alif_step(const LifLayerParams& params, double beta, double rho, LayerState& state,
                 const Vector& o_in);

}  // namespace neurodenoise
