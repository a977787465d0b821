#include "neurodenoise/neurons.hpp"

#include <stdexcept>

namespace neurodenoise {

NeuronKind neuron_kind_from_string(const std::string& s) {
    if (s == "gsn") return NeuronKind::GSN;
    if (s == "lif") return NeuronKind::LIF;
    if (s == "plif") return NeuronKind::PLIF;
    if (s == "alif") return NeuronKind::ALIF;
    throw std::invalid_argument("unknown neuron kind: " + s);
}

std::string to_string(NeuronKind kind) {
    switch (kind) {
        case NeuronKind::GSN: return "gsn";
        case NeuronKind::LIF: return "lif";
        case NeuronKind::PLIF: return "plif";
        case NeuronKind::ALIF: return "alif";
    }
    return "gsn";
}

namespace {

void check_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw std::runtime_error(std::string("non-finite membrane update in ") + what);
}

Vector fire_and_reset(Vector& u, const Vector& theta) {
    Vector o(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) o[i] = u[i] >= theta[i] ? 1.0 : 0.0;
    u -= theta.cwiseProduct(o);
    return o;
}

}  // namespace

Vector gsn_step(const GsnLayerParams& params, LayerState& state, const Vector& o_in,
                Vector* lambda_out) {
    Vector pre = params.w_in * o_in + params.w_rec * state.o_prev;
    Vector current = pre + params.bias;
    Vector lambda = (pre + params.gate_bias).unaryExpr([](double x) { return sigmoid(x); });
    state.u = lambda.cwiseProduct(state.u) + (Vector::Ones(lambda.size()) - lambda).cwiseProduct(current);
    check_finite(state.u, "gsn_step");
    Vector o = fire_and_reset(state.u, Vector::Constant(state.u.size(), params.theta));
    state.o_prev = o;
    if (lambda_out) *lambda_out = lambda;
    return o;
}

Vector lif_step(const LifLayerParams& params, LayerState& state, const Vector& o_in) {
    Vector current = params.w_in * o_in + params.w_rec * state.o_prev + params.bias;
    state.u = params.lambda * state.u + current;
    check_finite(state.u, "lif_step");
    Vector o = fire_and_reset(state.u, Vector::Constant(state.u.size(), params.theta));
    state.o_prev = o;
    return o;
}

Vector plif_step(const LifLayerParams& params, double raw_decay, LayerState& state,
                 const Vector& o_in) {
    LifLayerParams p = params;
    p.lambda = sigmoid(raw_decay);
    return lif_step(p, state, o_in);
}

Vector alif_step(const LifLayerParams& params, double beta, double rho, LayerState& state,
                 const Vector& o_in) {
    state.adapt = rho * state.adapt + state.o_prev;
    Vector theta = Vector::Constant(state.u.size(), params.theta) + beta * state.adapt;
    Vector current = params.w_in * o_in + params.w_rec * state.o_prev + params.bias;
    state.u = params.lambda * state.u + current;
    check_finite(state.u, "alif_step");
    Vector o = fire_and_reset(state.u, theta);
    state.o_prev = o;
    return o;
}

}  // namespace neurodenoise
