#pragma once

#include <random>
#include <string>
#include <vector>

#include "neurodenoise/neurons.hpp"

namespace neurodenoise {

/// Named view onto one trainable tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    Eigen::Index size = 0;
};

/// Trainable recurrent spiking layer. Sequences are handled row-wise:
/// a T x dim matrix holds one time step per row.
struct SpikingLayer {
    NeuronKind kind = NeuronKind::GSN;
    Matrix w_in;
    Matrix w_rec;
    Vector bias;
    Vector gate_bias;  // GSN only
    double theta = 1.0;
    double plif_raw = 0.0;                       // PLIF learnable decay logit
    double lif_lambda = std::exp(-1.0 / 5.0);    // LIF/ALIF fixed decay
    double alif_beta = 1.8;
    double alif_rho = std::exp(-1.0 / 200.0);

    Matrix g_w_in;
    Matrix g_w_rec;
    Vector g_bias;
    Vector g_gate_bias;
    double g_plif_raw = 0.0;

    int in_dim() const { return static_cast<int>(w_in.cols()); }
    int width() const { return static_cast<int>(w_in.rows()); }

    void init(int in, int out, NeuronKind neuron_kind, std::mt19937_64& rng);
    void zero_grads();
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

    /// Everything backward_seq needs from the forward pass.
    struct Tape {
        Matrix x;        // T x in
        Matrix current;  // T x w, input current i(t)
        Matrix lam;      // T x w, GSN decay factors
        Matrix u_pre;    // T x w, pre-reset membrane
        Matrix u_post;   // T x w, post-reset membrane
        Matrix o;        // T x w, spikes (relaxed values in relaxed mode)
        Matrix adapt;    // T x w, ALIF adaptation a(t)
        bool relaxed = false;
    };

    void forward_seq(const Matrix& x, bool relaxed, Tape& tape) const;

    /// Reverse pass over the whole sequence. `d_o_out` is the gradient w.r.t.
    /// the output spikes; `spike_bonus` is added to it at every step and
    /// neuron (SynOPs penalty weight times fan-out). Accumulates parameter
    /// gradients and returns the gradient w.r.t. the inputs.
    Matrix backward_seq(const Tape& tape, const Matrix& d_o_out, double spike_bonus = 0.0);

    /// Single-step streaming inference with hard spikes; matches forward_seq
    /// row-for-row.
    Vector step(LayerState& state, const Vector& x, Vector* lambda_out = nullptr) const;
};

/// Non-spiking leaky-integrator readout emitting its membrane potential:
/// u(t) = leak * u(t-1) + (1 - leak) * (W x(t) + b).
struct ReadoutLayer {
    Matrix w;
    Vector b;
    double leak = 0.5;

    Matrix g_w;
    Vector g_b;

    int in_dim() const { return static_cast<int>(w.cols()); }
    int width() const { return static_cast<int>(w.rows()); }

    void init(int in, int out, std::mt19937_64& rng);
    void zero_grads();
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

    void forward_seq(const Matrix& x, Matrix& y) const;
    Matrix backward_seq(const Matrix& x, const Matrix& d_y);
    Vector step(Vector& u, const Vector& x) const;
};

}  // namespace neurodenoise
