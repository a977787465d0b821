#include "neurodenoise/layers.hpp"

#include <stdexcept>

namespace neurodenoise {

namespace {

double uniform_init_bound(int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

Matrix random_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = dist(rng);
    return m;
}

}  // namespace

void SpikingLayer::init(int in, int out, NeuronKind neuron_kind, std::mt19937_64& rng) {
    kind = neuron_kind;
    double bound = uniform_init_bound(in + out);
    w_in = random_matrix(out, in, bound, rng);
    w_rec = random_matrix(out, out, bound, rng);
    bias = Vector::Zero(out);
    gate_bias = Vector::Zero(out);
    plif_raw = 0.0;
    zero_grads();
}

void SpikingLayer::zero_grads() {
    g_w_in = Matrix::Zero(w_in.rows(), w_in.cols());
    g_w_rec = Matrix::Zero(w_rec.rows(), w_rec.cols());
    g_bias = Vector::Zero(bias.size());
    g_gate_bias = Vector::Zero(gate_bias.size());
    g_plif_raw = 0.0;
}

void SpikingLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w_in", w_in.data(), g_w_in.data(), w_in.size()});
    out.push_back({prefix + ".w_rec", w_rec.data(), g_w_rec.data(), w_rec.size()});
    out.push_back({prefix + ".bias", bias.data(), g_bias.data(), bias.size()});
    if (kind == NeuronKind::GSN)
        out.push_back({prefix + ".gate_bias", gate_bias.data(), g_gate_bias.data(), gate_bias.size()});
    if (kind == NeuronKind::PLIF) out.push_back({prefix + ".plif_raw", &plif_raw, &g_plif_raw, 1});
}

void SpikingLayer::forward_seq(const Matrix& x, bool relaxed, Tape& tape) const {
    if (x.cols() != w_in.cols()) throw std::invalid_argument("SpikingLayer: input width mismatch");
    const Eigen::Index T = x.rows();
    const int w = width();
    tape.x = x;
    tape.current.resize(T, w);
    tape.u_pre.resize(T, w);
    tape.u_post.resize(T, w);
    tape.o.resize(T, w);
    tape.relaxed = relaxed;
    if (kind == NeuronKind::GSN) tape.lam.resize(T, w);
    if (kind == NeuronKind::ALIF) tape.adapt.resize(T, w);

    const double lambda = kind == NeuronKind::PLIF ? sigmoid(plif_raw) : lif_lambda;
    Vector u = Vector::Zero(w);
    Vector o_prev = Vector::Zero(w);
    Vector adapt = Vector::Zero(w);

    for (Eigen::Index t = 0; t < T; ++t) {
        Vector pre = w_in * x.row(t).transpose() + w_rec * o_prev;
        Vector current = pre + bias;
        Vector theta_t = Vector::Constant(w, theta);
        switch (kind) {
            case NeuronKind::GSN: {
                Vector lam = (pre + gate_bias).unaryExpr([](double v) { return sigmoid(v); });
                u = lam.cwiseProduct(u) + (Vector::Ones(w) - lam).cwiseProduct(current);
                tape.lam.row(t) = lam.transpose();
                break;
            }
            case NeuronKind::ALIF:
                adapt = alif_rho * adapt + o_prev;
                theta_t += alif_beta * adapt;
                tape.adapt.row(t) = adapt.transpose();
                u = lambda * u + current;
                break;
            case NeuronKind::LIF:
            case NeuronKind::PLIF:
                u = lambda * u + current;
                break;
        }
        if (!u.allFinite()) throw std::runtime_error("SpikingLayer: non-finite membrane update");

        Vector o(w);
        if (relaxed) {
            for (int i = 0; i < w; ++i) o[i] = relaxed_spike(u[i], theta_t[i]);
        } else {
            for (int i = 0; i < w; ++i) o[i] = u[i] >= theta_t[i] ? 1.0 : 0.0;
        }
        tape.current.row(t) = current.transpose();
        tape.u_pre.row(t) = u.transpose();
        u -= theta_t.cwiseProduct(o);
        tape.u_post.row(t) = u.transpose();
        tape.o.row(t) = o.transpose();
        o_prev = o;
    }
}

Matrix SpikingLayer::backward_seq(const Tape& tape, const Matrix& d_o_out, double spike_bonus) {
    const Eigen::Index T = tape.o.rows();
    const int w = width();
    if (d_o_out.rows() != T || d_o_out.cols() != w)
        throw std::invalid_argument("SpikingLayer: output gradient shape mismatch");

    const double lambda = kind == NeuronKind::PLIF ? sigmoid(plif_raw) : lif_lambda;
    Matrix d_x = Matrix::Zero(T, in_dim());
    Vector d_u_carry = Vector::Zero(w);     // grad w.r.t. u_post(t)
    Vector d_o_carry = Vector::Zero(w);     // grad w.r.t. o(t) from step t+1
    Vector d_adapt_carry = Vector::Zero(w); // ALIF, grad w.r.t. adapt(t)

    for (Eigen::Index t = T - 1; t >= 0; --t) {
        Vector u_pre = tape.u_pre.row(t).transpose();
        Vector o = tape.o.row(t).transpose();
        Vector current = tape.current.row(t).transpose();
        Vector u_prev = t > 0 ? Vector(tape.u_post.row(t - 1).transpose()) : Vector::Zero(w);
        Vector o_prev = t > 0 ? Vector(tape.o.row(t - 1).transpose()) : Vector::Zero(w);

        Vector theta_t = Vector::Constant(w, theta);
        if (kind == NeuronKind::ALIF) theta_t += alif_beta * tape.adapt.row(t).transpose();

        Vector sg(w);
        for (int i = 0; i < w; ++i) sg[i] = surrogate_grad(u_pre[i], theta_t[i]);

        Vector d_o_ext = d_o_out.row(t).transpose() + d_o_carry +
                         Vector::Constant(w, spike_bonus);
        Vector d_u_post = d_u_carry;
        // o feeds both the output and the subtraction reset.
        Vector d_o_full = d_o_ext - theta_t.cwiseProduct(d_u_post);
        Vector d_u_pre = d_u_post + d_o_full.cwiseProduct(sg);

        Vector d_o_prev_extra = Vector::Zero(w);
        if (kind == NeuronKind::ALIF) {
            // theta_t enters the spike condition and the reset amount.
            Vector d_theta = -d_u_post.cwiseProduct(o) - d_o_full.cwiseProduct(sg);
            Vector d_adapt = alif_beta * d_theta + d_adapt_carry;
            d_adapt_carry = alif_rho * d_adapt;
            d_o_prev_extra = d_adapt;
        }

        Vector d_current(w);
        if (kind == NeuronKind::GSN) {
            Vector lam = tape.lam.row(t).transpose();
            Vector d_lam = d_u_pre.cwiseProduct(u_prev - current);
            Vector d_gate = d_lam.cwiseProduct(lam).cwiseProduct(Vector::Ones(w) - lam);
            d_current = d_u_pre.cwiseProduct(Vector::Ones(w) - lam);
            d_u_carry = d_u_pre.cwiseProduct(lam);
            g_bias += d_current;
            g_gate_bias += d_gate;
            Vector d_pre = d_current + d_gate;
            g_w_in += d_pre * tape.x.row(t);
            g_w_rec += d_pre * o_prev.transpose();
            d_x.row(t) = (w_in.transpose() * d_pre).transpose();
            d_o_carry = w_rec.transpose() * d_pre + d_o_prev_extra;
        } else {
            d_current = d_u_pre;
            if (kind == NeuronKind::PLIF)
                g_plif_raw += d_u_pre.dot(u_prev) * lambda * (1.0 - lambda);
            d_u_carry = lambda * d_u_pre;
            g_bias += d_current;
            g_w_in += d_current * tape.x.row(t);
            g_w_rec += d_current * o_prev.transpose();
            d_x.row(t) = (w_in.transpose() * d_current).transpose();
            d_o_carry = w_rec.transpose() * d_current + d_o_prev_extra;
        }
    }
    return d_x;
}

Vector SpikingLayer::step(LayerState& state, const Vector& x, Vector* lambda_out) const {
    const int w = width();
    Vector pre = w_in * x + w_rec * state.o_prev;
    Vector current = pre + bias;
    Vector theta_t = Vector::Constant(w, theta);
    switch (kind) {
        case NeuronKind::GSN: {
            Vector lam = (pre + gate_bias).unaryExpr([](double v) { return sigmoid(v); });
            state.u = lam.cwiseProduct(state.u) + (Vector::Ones(w) - lam).cwiseProduct(current);
            if (lambda_out) *lambda_out = lam;
            break;
        }
        case NeuronKind::ALIF:
            state.adapt = alif_rho * state.adapt + state.o_prev;
            theta_t += alif_beta * state.adapt;
            state.u = lif_lambda * state.u + current;
            break;
        case NeuronKind::PLIF:
            state.u = sigmoid(plif_raw) * state.u + current;
            break;
        case NeuronKind::LIF:
            state.u = lif_lambda * state.u + current;
            break;
    }
    if (!state.u.allFinite()) throw std::runtime_error("SpikingLayer: non-finite membrane update");
    Vector o(w);
    for (int i = 0; i < w; ++i) o[i] = state.u[i] >= theta_t[i] ? 1.0 : 0.0;
    state.u -= theta_t.cwiseProduct(o);
    state.o_prev = o;
    return o;
}

void ReadoutLayer::init(int in, int out, std::mt19937_64& rng) {
    w = random_matrix(out, in, uniform_init_bound(in), rng);
    b = Vector::Zero(out);
    zero_grads();
}

void ReadoutLayer::zero_grads() {
    g_w = Matrix::Zero(w.rows(), w.cols());
    g_b = Vector::Zero(b.size());
}

void ReadoutLayer::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", w.data(), g_w.data(), w.size()});
    out.push_back({prefix + ".b", b.data(), g_b.data(), b.size()});
}

void ReadoutLayer::forward_seq(const Matrix& x, Matrix& y) const {
    if (x.cols() != w.cols()) throw std::invalid_argument("ReadoutLayer: input width mismatch");
    const Eigen::Index T = x.rows();
    y.resize(T, w.rows());
    Vector u = Vector::Zero(w.rows());
    for (Eigen::Index t = 0; t < T; ++t) {
        u = leak * u + (1.0 - leak) * (w * x.row(t).transpose() + b);
        y.row(t) = u.transpose();
    }
}

Matrix ReadoutLayer::backward_seq(const Matrix& x, const Matrix& d_y) {
    const Eigen::Index T = x.rows();
    Matrix d_x = Matrix::Zero(T, w.cols());
    Vector d_u = Vector::Zero(w.rows());
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        d_u = leak * d_u + d_y.row(t).transpose();
        Vector d_lin = (1.0 - leak) * d_u;
        g_w += d_lin * x.row(t);
        g_b += d_lin;
        d_x.row(t) = (w.transpose() * d_lin).transpose();
    }
    return d_x;
}

Vector ReadoutLayer::step(Vector& u, const Vector& x) const {
    u = leak * u + (1.0 - leak) * (w * x + b);
    return u;
}

}  // namespace neurodenoise
