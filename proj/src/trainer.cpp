#include "neurodenoise/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace neurodenoise {

void TrainingConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("trainer: learning_rate must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("trainer: weight_decay must be >= 0");
    if (grad_clip_norm <= 0.0) throw std::invalid_argument("trainer: grad_clip_norm must be > 0");
    if (batch_size < 1) throw std::invalid_argument("trainer: batch_size must be >= 1");
    if (max_epochs < 0) throw std::invalid_argument("trainer: max_epochs must be >= 0");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
        throw std::invalid_argument("trainer: adam betas must be in (0, 1)");
    if (adam_eps <= 0.0) throw std::invalid_argument("trainer: adam_eps must be > 0");
}

int max_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("NEURODENOISE_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

AdamW::AdamW(std::vector<ParamRef> params, const TrainingConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    for (const auto& p : params_) {
        m_.emplace_back(static_cast<std::size_t>(p.size), 0.0);
        v_.emplace_back(static_cast<std::size_t>(p.size), 0.0);
    }
}

void AdamW::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        auto& m = m_[p];
        auto& v = v_[p];
        const auto& ref = params_[p];
        for (Eigen::Index i = 0; i < ref.size; ++i) {
            double g = ref.grad[i];
            m[static_cast<std::size_t>(i)] =
                cfg_.adam_beta1 * m[static_cast<std::size_t>(i)] + (1.0 - cfg_.adam_beta1) * g;
            v[static_cast<std::size_t>(i)] =
                cfg_.adam_beta2 * v[static_cast<std::size_t>(i)] + (1.0 - cfg_.adam_beta2) * g * g;
            double m_hat = m[static_cast<std::size_t>(i)] / bc1;
            double v_hat = v[static_cast<std::size_t>(i)] / bc2;
            ref.value[i] -= cfg_.learning_rate *
                            (m_hat / (std::sqrt(v_hat) + cfg_.adam_eps) +
                             cfg_.weight_decay * ref.value[i]);
        }
    }
}

// ---------------------------------------------------------------------------
// Loss plumbing
// ---------------------------------------------------------------------------

namespace {

struct ForwardResult {
    Model::Trace trace;
    ComplexSpectrogram clean_spec;
    LossBreakdown loss;
};

// istft normalizes by the squared-window overlap sum, which decays to zero over
// the first and last window of the clip. A modified spectrogram is not a valid
// STFT there, so those samples blow up under the normalization and would swamp
// the waveform SI term. Score and differentiate the interior only.
std::vector<double> interior(const std::vector<double>& x, int window_len) {
    const std::size_t w = static_cast<std::size_t>(window_len);
    if (x.size() <= 2 * w) return x;
    return std::vector<double>(x.begin() + static_cast<long>(w), x.end() - static_cast<long>(w));
}

ForwardResult run_forward(const Model& model, const TrainItem& item, bool relaxed) {
    if (item.noisy.samples.size() != item.clean.samples.size())
        throw std::invalid_argument("trainer: noisy/clean length mismatch");
    ForwardResult r;
    ComplexSpectrogram noisy_spec = stft(item.noisy, model.cfg.stft);
    r.clean_spec = stft(item.clean, model.cfg.stft);
    model.forward_train(noisy_spec, relaxed, r.trace);

    const LossWeights& w = model.cfg.loss;
    r.loss.tf = loss_tf(r.clean_spec, r.trace.enhanced, w.alpha);
    AudioBuffer est = istft(r.trace.enhanced, model.cfg.stft);
    AudioBuffer ref = istft(r.clean_spec, model.cfg.stft);
    r.loss.si_sdr_db = si_snr(interior(est.samples, model.cfg.stft.window_len),
                              interior(ref.samples, model.cfg.stft.window_len));
    r.loss.penalty = model.synops_penalty(r.trace);
    r.loss.total = total_loss(r.loss.tf, r.loss.si_sdr_db, r.loss.penalty, w);
    return r;
}

}  // namespace

LossBreakdown compute_loss(const Model& model, const TrainItem& item, bool relaxed) {
    return run_forward(model, item, relaxed).loss;
}

LossBreakdown compute_loss_and_grads(Model& model, const TrainItem& item, bool relaxed) {
    ForwardResult r = run_forward(model, item, relaxed);
    const LossWeights& w = model.cfg.loss;

    ComplexSpectrogram d_enh = loss_tf_grad(r.clean_spec, r.trace.enhanced, w.alpha);
    for (auto& v : d_enh.data) v *= w.gamma1;

    // SI-SDR path: total has gamma2 * (100 - si_snr(est, ref)).
    AudioBuffer est = istft(r.trace.enhanced, model.cfg.stft);
    AudioBuffer ref = istft(r.clean_spec, model.cfg.stft);
    const int win = model.cfg.stft.window_len;
    std::vector<double> d_int = si_snr_grad(interior(est.samples, win), interior(ref.samples, win));
    std::vector<double> d_si(est.samples.size(), 0.0);
    const std::size_t off = est.samples.size() > d_int.size()
                                ? static_cast<std::size_t>(win)
                                : 0;
    for (std::size_t i = 0; i < d_int.size(); ++i) d_si[off + i] = -w.gamma2 * d_int[i];
    ComplexSpectrogram d_from_wave =
        istft_adjoint(d_si, r.trace.enhanced.num_frames, model.cfg.stft);
    for (std::size_t i = 0; i < d_enh.data.size(); ++i) d_enh.data[i] += d_from_wave.data[i];

    model.backward(r.trace, d_enh, w.synops_weight);
    return r.loss;
}

double clip_grad_norm(std::vector<ParamRef>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        for (Eigen::Index i = 0; i < p.size; ++i) sq += p.grad[i] * p.grad[i];
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (const auto& p : params)
            for (Eigen::Index i = 0; i < p.size; ++i) p.grad[i] *= scale;
    }
    return norm;
}

LossBreakdown bptt_step(Model& model, const std::vector<TrainItem>& batch, AdamW& opt,
                        const TrainingConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("trainer: empty batch");
    const std::size_t n = batch.size();
    std::vector<std::vector<double>> item_grads(n);
    std::vector<LossBreakdown> item_losses(n);
    std::vector<std::string> item_errors(n);

    const int workers = std::min<int>(max_threads(), static_cast<int>(n));
    auto worker = [&](int w) {
        Model local = model;  // thread-private weights + grad buffers
        auto refs = local.params();
        for (std::size_t idx = static_cast<std::size_t>(w); idx < n;
             idx += static_cast<std::size_t>(workers)) {
            try {
                local.zero_grads();
                item_losses[idx] = compute_loss_and_grads(local, batch[idx], cfg.relaxed);
                std::vector<double>& flat = item_grads[idx];
                for (const auto& p : refs)
                    flat.insert(flat.end(), p.grad, p.grad + p.size);
            } catch (const std::exception& e) {
                item_errors[idx] = e.what();
            }
        }
    };
    if (workers <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!item_errors[i].empty())
            throw std::runtime_error("trainer: item " + std::to_string(i) + ": " + item_errors[i]);

    // deterministic reduction: accumulate in item order, scaled to the mean
    model.zero_grads();
    auto refs = model.params();
    LossBreakdown mean;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(item_losses[i].total)) {
            std::ostringstream ss;
            ss << "trainer: non-finite loss on item " << i << " (tf=" << item_losses[i].tf
               << ", si_sdr=" << item_losses[i].si_sdr_db
               << ", penalty=" << item_losses[i].penalty << ")";
            throw std::runtime_error(ss.str());
        }
        std::size_t off = 0;
        for (const auto& p : refs) {
            for (Eigen::Index k = 0; k < p.size; ++k)
                p.grad[k] += inv * item_grads[i][off + static_cast<std::size_t>(k)];
            off += static_cast<std::size_t>(p.size);
        }
        mean.total += inv * item_losses[i].total;
        mean.tf += inv * item_losses[i].tf;
        mean.si_sdr_db += inv * item_losses[i].si_sdr_db;
        mean.penalty += inv * item_losses[i].penalty;
    }
    for (const auto& p : refs)
        for (Eigen::Index k = 0; k < p.size; ++k)
            if (!std::isfinite(p.grad[k]))
                throw std::runtime_error("trainer: non-finite gradient in " + p.name);

    clip_grad_norm(refs, cfg.grad_clip_norm);
    opt.step();
    return mean;
}

double evaluate_si_snr_i(const Model& model, const std::vector<TrainItem>& items) {
    if (items.empty()) throw std::invalid_argument("trainer: no evaluation items");
    double acc = 0.0;
    for (const auto& item : items) {
        AudioBuffer est = model.enhance(item.noisy);
        // compare over the reconstructable span so all three share a length
        ComplexSpectrogram clean_spec = stft(item.clean, model.cfg.stft);
        ComplexSpectrogram noisy_spec = stft(item.noisy, model.cfg.stft);
        AudioBuffer ref = istft(clean_spec, model.cfg.stft);
        AudioBuffer noisy = istft(noisy_spec, model.cfg.stft);
        const int win = model.cfg.stft.window_len;
        acc += si_snr_i(interior(noisy.samples, win), interior(ref.samples, win),
                        interior(est.samples, win));
    }
    return acc / static_cast<double>(items.size());
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

namespace {

double tape_kink_margin(const SpikingLayer::Tape& tape, double theta) {
    double margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < tape.u_pre.rows(); ++n) {
        for (Eigen::Index i = 0; i < tape.u_pre.cols(); ++i) {
            double d = tape.u_pre(n, i) - theta;
            margin = std::min(margin, std::min({std::abs(d), std::abs(d - 1.0), std::abs(d + 1.0)}));
        }
    }
    return margin;
}

double trace_kink_margin(const Model& model, const Model::Trace& trace) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.fb_tapes.size(); ++i)
        margin = std::min(margin, tape_kink_margin(trace.fb_tapes[i], model.fb_layers[i].theta));
    for (std::size_t p = 0; p < trace.sb_tapes.size(); ++p)
        for (const auto& group : trace.sb_tapes[p])
            for (std::size_t l = 0; l < group.size(); ++l)
                margin = std::min(margin, tape_kink_margin(group[l], model.sb[p].layers[l].theta));
    return margin;
}

}  // namespace

GradCheckResult grad_check(Model& model, const TrainItem& item, double eps, int max_params,
                           uint64_t seed) {
    std::mt19937_64 rng(seed);
    TrainItem probe = item;

    // keep every membrane potential away from the surrogate kinks so central
    // differences see a locally smooth objective
    const double min_margin = 10.0 * eps;
    for (int attempt = 0;; ++attempt) {
        ComplexSpectrogram spec = stft(probe.noisy, model.cfg.stft);
        Model::Trace trace;
        model.forward_train(spec, true, trace);
        if (trace_kink_margin(model, trace) > min_margin) break;
        if (attempt >= 50)
            throw std::runtime_error("grad_check: could not find a kink-free probe input");
        std::normal_distribution<double> jitter(0.0, 1e-3);
        for (auto& s : probe.noisy.samples) s += jitter(rng);
    }

    model.zero_grads();
    compute_loss_and_grads(model, probe, true);
    auto refs = model.params();

    std::vector<std::pair<std::size_t, Eigen::Index>> picks;
    std::size_t per_tensor =
        std::max<std::size_t>(1, static_cast<std::size_t>(max_params) / std::max<std::size_t>(refs.size(), 1));
    for (std::size_t p = 0; p < refs.size(); ++p) {
        std::uniform_int_distribution<Eigen::Index> pick(0, refs[p].size - 1);
        for (std::size_t j = 0; j < per_tensor && j < static_cast<std::size_t>(refs[p].size); ++j)
            picks.emplace_back(p, pick(rng));
    }
    std::shuffle(picks.begin(), picks.end(), rng);
    if (picks.size() > static_cast<std::size_t>(max_params))
        picks.resize(static_cast<std::size_t>(max_params));

    GradCheckResult result;
    for (const auto& [p, i] : picks) {
        double saved = refs[p].value[i];
        refs[p].value[i] = saved + eps;
        double lp = compute_loss(model, probe, true).total;
        refs[p].value[i] = saved - eps;
        double lm = compute_loss(model, probe, true).total;
        refs[p].value[i] = saved;
        double numeric = (lp - lm) / (2.0 * eps);
        double analytic = refs[p].grad[i];
        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        double rel = std::abs(analytic - numeric) / denom;
        if (rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_param = refs[p].name + "[" + std::to_string(i) + "]";
        }
        ++result.checked;
    }
    return result;
}

}  // namespace neurodenoise
