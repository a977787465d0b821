#include "neurodenoise/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "neurodenoise/fft.hpp"

namespace neurodenoise {

namespace {
constexpr double kNormEps = 1e-10;
}

// ---------------------------------------------------------------------------
// ModelConfig
// ---------------------------------------------------------------------------

PartitionScheme ModelConfig::scheme() const {
    return make_partition(cutoffs, groupings, filter_orders, context, modeled_bins());
}

double ModelConfig::algorithmic_latency_s() const {
    return static_cast<double>(stft.window_len) / kSampleRate + enc_dec_latency_s;
}

void ModelConfig::validate() const {
    stft.validate();
    scheme();  // throws on bad partitioning
    if (groupings.size() != subband_widths.size())
        throw std::invalid_argument("config: subband widths must match partition count");
    if (fullband_widths.empty()) throw std::invalid_argument("config: fullband needs >= 1 layer");
    for (int w : fullband_widths)
        if (w < 1) throw std::invalid_argument("config: fullband width must be >= 1");
    for (int w : subband_widths)
        if (w < 1) throw std::invalid_argument("config: subband width must be >= 1");
    neuron_kind_from_string(neuron_kind);  // throws on bad kind
    if (theta <= 0.0) throw std::invalid_argument("config: theta must be > 0");
    if (lif_tau <= 0.0) throw std::invalid_argument("config: lif_tau must be > 0");
    if (readout_leak < 0.0 || readout_leak >= 1.0)
        throw std::invalid_argument("config: readout_leak must be in [0, 1)");
    if (norm_mode != "ema" && norm_mode != "utterance")
        throw std::invalid_argument("config: norm_mode must be 'ema' or 'utterance'");
    if (ema_beta <= 0.0 || ema_beta >= 1.0)
        throw std::invalid_argument("config: ema_beta must be in (0, 1)");
    if (loss.alpha < 0.0 || loss.alpha > 1.0)
        throw std::invalid_argument("config: loss alpha must be in [0, 1]");
    if (loss.gamma1 < 0.0 || loss.gamma2 < 0.0 || loss.synops_weight < 0.0)
        throw std::invalid_argument("config: loss weights must be >= 0");
    if (enc_dec_latency_s < 0.0)
        throw std::invalid_argument("config: enc_dec_latency_s must be >= 0");
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["stft"] = {{"window_len", stft.window_len},
                 {"hop_len", stft.hop_len},
                 {"fft_size", stft.fft_size}};
    j["partition"] = {{"cutoffs", cutoffs},
                      {"groupings", groupings},
                      {"filter_orders", filter_orders},
                      {"context", context}};
    j["fullband"] = {{"widths", fullband_widths}};
    j["subband"] = {{"widths", subband_widths}};
    j["neuron"] = {{"kind", neuron_kind}, {"theta", theta}, {"lif_tau", lif_tau}};
    j["readout"] = {{"leak", readout_leak}};
    j["normalization"] = {{"mode", norm_mode}, {"ema_beta", ema_beta}};
    j["loss"] = {{"alpha", loss.alpha},
                 {"gamma1", loss.gamma1},
                 {"gamma2", loss.gamma2},
                 {"synops_weight", loss.synops_weight}};
    j["latency"] = {{"enc_dec_s", enc_dec_latency_s}};
    return j.dump(2);
}

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& section, const std::string& key, T fallback) {
    if (!j.contains(section)) return fallback;
    const auto& s = j.at(section);
    if (!s.contains(key)) return fallback;
    try {
        return s.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("config: bad type for " + section + "." + key);
    }
}

}  // namespace

ModelConfig ModelConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

    ModelConfig cfg;
    cfg.stft.window_len = get_field(j, "stft", "window_len", cfg.stft.window_len);
    cfg.stft.hop_len = get_field(j, "stft", "hop_len", cfg.stft.hop_len);
    cfg.stft.fft_size = get_field(j, "stft", "fft_size", cfg.stft.fft_size);
    cfg.cutoffs = get_field(j, "partition", "cutoffs", cfg.cutoffs);
    cfg.groupings = get_field(j, "partition", "groupings", cfg.groupings);
    cfg.filter_orders = get_field(j, "partition", "filter_orders", cfg.filter_orders);
    cfg.context = get_field(j, "partition", "context", cfg.context);
    cfg.fullband_widths = get_field(j, "fullband", "widths", cfg.fullband_widths);
    cfg.subband_widths = get_field(j, "subband", "widths", cfg.subband_widths);
    cfg.neuron_kind = get_field(j, "neuron", "kind", cfg.neuron_kind);
    cfg.theta = get_field(j, "neuron", "theta", cfg.theta);
    cfg.lif_tau = get_field(j, "neuron", "lif_tau", cfg.lif_tau);
    cfg.readout_leak = get_field(j, "readout", "leak", cfg.readout_leak);
    cfg.norm_mode = get_field(j, "normalization", "mode", cfg.norm_mode);
    cfg.ema_beta = get_field(j, "normalization", "ema_beta", cfg.ema_beta);
    cfg.loss.alpha = get_field(j, "loss", "alpha", cfg.loss.alpha);
    cfg.loss.gamma1 = get_field(j, "loss", "gamma1", cfg.loss.gamma1);
    cfg.loss.gamma2 = get_field(j, "loss", "gamma2", cfg.loss.gamma2);
    cfg.loss.synops_weight = get_field(j, "loss", "synops_weight", cfg.loss.synops_weight);
    cfg.enc_dec_latency_s = get_field(j, "latency", "enc_dec_s", cfg.enc_dec_latency_s);
    cfg.validate();
    return cfg;
}

ModelConfig ModelConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json_text(ss.str());
}

void ModelConfig::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot create config file: " + path);
    f << to_json() << "\n";
}

uint64_t ModelConfig::hash() const {
    // FNV-1a over the canonical serialization (keys are emitted sorted).
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : to_json()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

void Model::structure(const ModelConfig& config) {
    config.validate();
    cfg = config;
    scheme = config.scheme();
    fb_layers.assign(config.fullband_widths.size(), SpikingLayer{});
    sb.assign(scheme.partitions.size(), SubbandNet{});
    for (auto& net : sb) net.layers.assign(1, SpikingLayer{});
}

void Model::init(const ModelConfig& config, uint64_t seed) {
    structure(config);
    std::mt19937_64 rng(seed);
    const NeuronKind k = kind();
    const int F = cfg.modeled_bins();
    const double lambda = std::exp(-1.0 / cfg.lif_tau);

    int in = F;
    for (std::size_t i = 0; i < fb_layers.size(); ++i) {
        fb_layers[i].init(in, cfg.fullband_widths[i], k, rng);
        fb_layers[i].theta = cfg.theta;
        fb_layers[i].lif_lambda = lambda;
        in = cfg.fullband_widths[i];
    }
    fb_readout.init(in, F, rng);
    fb_readout.leak = cfg.readout_leak;

    for (std::size_t p = 0; p < sb.size(); ++p) {
        int kk = static_cast<int>(p);
        int feat = scheme.feature_dim(kk);
        int width = cfg.subband_widths[p];
        sb[p].layers[0].init(feat, width, k, rng);
        sb[p].layers[0].theta = cfg.theta;
        sb[p].layers[0].lif_lambda = lambda;
        sb[p].readout.init(width, scheme.logits_dim(kk), rng);
        sb[p].readout.leak = cfg.readout_leak;
        // bias each group toward the identity filter (unit real tap at lag 0) so
        // the untrained model passes the mixture through instead of emitting
        // near-silence; training then learns a residual on top of it
        const auto& part = scheme.partitions[p];
        for (int m = 0; m < part.group_width; ++m)
            sb[p].readout.b[2 * (m * part.taps() + 0)] += 1.0;
    }
}

void Model::make_identity(const ModelConfig& config) {
    init(config, 0);
    for (auto& layer : fb_layers) {
        layer.w_in.setZero();
        layer.w_rec.setZero();
        layer.bias.setZero();
        layer.gate_bias.setZero();
    }
    fb_readout.w.setZero();
    fb_readout.b.setZero();
    fb_readout.leak = 0.0;
    for (std::size_t p = 0; p < sb.size(); ++p) {
        auto& net = sb[p];
        for (auto& layer : net.layers) {
            layer.w_in.setZero();
            layer.w_rec.setZero();
            layer.bias.setZero();
            layer.gate_bias.setZero();
        }
        net.readout.w.setZero();
        net.readout.b.setZero();
        net.readout.leak = 0.0;
        const auto& part = scheme.partitions[p];
        for (int m = 0; m < part.group_width; ++m)
            net.readout.b[2 * (m * part.taps() + 0)] = 1.0;  // unit tap at j = 0
    }
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> refs;
    for (std::size_t i = 0; i < fb_layers.size(); ++i)
        fb_layers[i].collect_params("fullband.layer" + std::to_string(i), refs);
    fb_readout.collect_params("fullband.readout", refs);
    for (std::size_t p = 0; p < sb.size(); ++p) {
        std::string prefix = "subband" + std::to_string(p);
        for (std::size_t l = 0; l < sb[p].layers.size(); ++l)
            sb[p].layers[l].collect_params(prefix + ".layer" + std::to_string(l), refs);
        sb[p].readout.collect_params(prefix + ".readout", refs);
    }
    return refs;
}

void Model::zero_grads() {
    for (auto& l : fb_layers) l.zero_grads();
    fb_readout.zero_grads();
    for (auto& net : sb) {
        for (auto& l : net.layers) l.zero_grads();
        net.readout.zero_grads();
    }
}

std::map<std::string, long> Model::parameter_counts() const {
    std::map<std::string, long> counts;
    long fb = 0;
    for (const auto& l : fb_layers) {
        fb += l.w_in.size() + l.w_rec.size() + l.bias.size();
        if (l.kind == NeuronKind::GSN) fb += l.gate_bias.size();
        if (l.kind == NeuronKind::PLIF) fb += 1;
    }
    fb += fb_readout.w.size() + fb_readout.b.size();
    counts["fullband"] = fb;
    long sb_total = 0;
    for (const auto& net : sb) {
        for (const auto& l : net.layers) {
            sb_total += l.w_in.size() + l.w_rec.size() + l.bias.size();
            if (l.kind == NeuronKind::GSN) sb_total += l.gate_bias.size();
            if (l.kind == NeuronKind::PLIF) sb_total += 1;
        }
        sb_total += net.readout.w.size() + net.readout.b.size();
    }
    counts["subband"] = sb_total;
    counts["total"] = fb + sb_total;
    return counts;
}

long Model::parameter_count() const { return parameter_counts().at("total"); }

std::vector<LayerTopology> Model::topology() const {
    std::vector<LayerTopology> topo;
    const int F = cfg.modeled_bins();
    for (std::size_t i = 0; i < fb_layers.size(); ++i) {
        int fan = i + 1 < fb_layers.size() ? fb_layers[i + 1].width() : F;
        topo.push_back({fb_layers[i].width(), fan, true, true, "fullband.layer" + std::to_string(i)});
    }
    topo.push_back({F, 0, false, false, "fullband.readout"});
    for (std::size_t p = 0; p < sb.size(); ++p) {
        const auto& part = scheme.partitions[p];
        int logits = scheme.logits_dim(static_cast<int>(p));
        for (int g = 0; g < part.num_groups(); ++g) {
            std::string prefix = "subband" + std::to_string(p) + ".group" + std::to_string(g);
            for (std::size_t l = 0; l < sb[p].layers.size(); ++l) {
                int fan = l + 1 < sb[p].layers.size() ? sb[p].layers[l + 1].width() : logits;
                topo.push_back({sb[p].layers[l].width(), fan, true, true,
                                prefix + ".layer" + std::to_string(l)});
            }
            topo.push_back({logits, 0, false, false, prefix + ".readout"});
        }
    }
    return topo;
}

ActivityCollector Model::make_collector() const {
    ActivityCollector c;
    for (const auto& t : topology()) {
        LayerActivity a;
        a.spike_counts.assign(static_cast<std::size_t>(t.neurons), 0.0);
        c.activity.push_back(std::move(a));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

StreamState Model::make_stream_state() const {
    StreamState s;
    for (const auto& l : fb_layers) s.fb_states.emplace_back(l.width());
    s.fb_readout_u = Vector::Zero(fb_readout.width());
    s.sb_states.resize(sb.size());
    s.sb_readout_u.resize(sb.size());
    for (std::size_t p = 0; p < sb.size(); ++p) {
        int groups = scheme.partitions[p].num_groups();
        s.sb_states[p].resize(static_cast<std::size_t>(groups));
        s.sb_readout_u[p].resize(static_cast<std::size_t>(groups));
        for (int g = 0; g < groups; ++g) {
            for (const auto& l : sb[p].layers)
                s.sb_states[p][static_cast<std::size_t>(g)].emplace_back(l.width());
            s.sb_readout_u[p][static_cast<std::size_t>(g)] = Vector::Zero(sb[p].readout.width());
        }
    }
    return s;
}

std::vector<std::complex<double>> Model::step_frame(const std::complex<double>* frame,
                                                    StreamState& state,
                                                    ActivityCollector* collector) const {
    const int F = cfg.modeled_bins();
    Vector mags(F);
    for (int f = 1; f <= F; ++f) mags[f - 1] = std::abs(frame[f]);
    double frame_mean = mags.mean();
    if (!state.ema_started) {
        state.ema_mean = frame_mean;
        state.ema_started = true;
    } else {
        state.ema_mean = cfg.ema_beta * state.ema_mean + (1.0 - cfg.ema_beta) * frame_mean;
    }
    Vector x = mags / (state.ema_mean + kNormEps);
    return step_frame_normalized(frame, x, state, collector);
}

std::vector<std::complex<double>> Model::step_frame_normalized(const std::complex<double>* frame,
                                                               const Vector& norm_input,
                                                               StreamState& state,
                                                               ActivityCollector* collector) const {
    const int F = cfg.modeled_bins();
    int max_taps = 1;
    for (const auto& p : scheme.partitions) max_taps = std::max(max_taps, p.taps());
    state.frame_history.emplace_front(frame, frame + cfg.stft.num_bins());
    while (state.frame_history.size() > static_cast<std::size_t>(max_taps))
        state.frame_history.pop_back();

    int topo_index = 0;
    auto record_spikes = [&](const Vector& o) {
        if (collector) {
            auto& counts = collector->activity[static_cast<std::size_t>(topo_index)].spike_counts;
            for (Eigen::Index i = 0; i < o.size(); ++i) counts[static_cast<std::size_t>(i)] += o[i];
            collector->activity[static_cast<std::size_t>(topo_index)].steps += 1;
        }
        ++topo_index;
    };
    auto skip_layer = [&]() {
        if (collector) collector->activity[static_cast<std::size_t>(topo_index)].steps += 1;
        ++topo_index;
    };

    // full-band stack
    Vector h = norm_input;
    Vector lam;
    for (std::size_t i = 0; i < fb_layers.size(); ++i) {
        h = fb_layers[i].step(state.fb_states[i], h,
                              fb_layers[i].kind == NeuronKind::GSN ? &lam : nullptr);
        if (collector && fb_layers[i].kind == NeuronKind::GSN)
            for (Eigen::Index j = 0; j < lam.size(); ++j) collector->decay.record(lam[j]);
        record_spikes(h);
    }
    Vector embedding = fb_readout.step(state.fb_readout_u, h);
    skip_layer();

    // sub-band groups + deep filtering
    std::vector<std::complex<double>> out(static_cast<std::size_t>(cfg.stft.num_bins()));
    out[0] = frame[0];  // DC bypass
    for (std::size_t p = 0; p < sb.size(); ++p) {
        const auto& part = scheme.partitions[p];
        const int N = scheme.context;
        const int g_w = part.group_width;
        for (int g = 0; g < part.num_groups(); ++g) {
            const int start = scheme.group_start_bin(static_cast<int>(p), g);
            Vector feat = Vector::Zero(2 * N + 2 * g_w);
            int idx = 0;
            for (int f = start - N; f < start; ++f, ++idx)
                if (f >= 1 && f <= F) feat[idx] = norm_input[f - 1];
            for (int f = start; f < start + g_w; ++f, ++idx) feat[idx] = norm_input[f - 1];
            for (int f = start; f < start + g_w; ++f, ++idx) feat[idx] = embedding[f - 1];
            for (int f = start + g_w; f < start + g_w + N; ++f, ++idx)
                if (f >= 1 && f <= F) feat[idx] = norm_input[f - 1];

            Vector sh = feat;
            for (std::size_t l = 0; l < sb[p].layers.size(); ++l) {
                const auto& layer = sb[p].layers[l];
                sh = layer.step(state.sb_states[p][static_cast<std::size_t>(g)][l], sh,
                                layer.kind == NeuronKind::GSN ? &lam : nullptr);
                if (collector && layer.kind == NeuronKind::GSN)
                    for (Eigen::Index j = 0; j < lam.size(); ++j) collector->decay.record(lam[j]);
                record_spikes(sh);
            }
            Vector logits = sb[p].readout.step(state.sb_readout_u[p][static_cast<std::size_t>(g)], sh);
            skip_layer();

            DeepFilter filt = logits_to_filter(logits, g_w, part.taps());
            for (int m = 0; m < g_w; ++m) {
                std::complex<double> acc(0.0, 0.0);
                for (int j = 0; j < part.taps(); ++j) {
                    if (j < static_cast<int>(state.frame_history.size()))
                        acc += filt.at(m, j) *
                               state.frame_history[static_cast<std::size_t>(j)]
                                                  [static_cast<std::size_t>(start + m)];
                }
                out[static_cast<std::size_t>(start + m)] = acc;
            }
        }
    }
    if (collector) ++collector->steps;
    return out;
}

Matrix Model::normalize_offline(const Matrix& mag) const {
    Matrix out(mag.rows(), mag.cols());
    if (cfg.norm_mode == "utterance") {
        double mean = mag.mean();
        out = mag / (mean + kNormEps);
    } else {
        double running = 0.0;
        for (Eigen::Index n = 0; n < mag.rows(); ++n) {
            double frame_mean = mag.row(n).mean();
            running = n == 0 ? frame_mean : cfg.ema_beta * running + (1.0 - cfg.ema_beta) * frame_mean;
            out.row(n) = mag.row(n) / (running + kNormEps);
        }
    }
    return out;
}

ComplexSpectrogram Model::enhance_spectrogram(const ComplexSpectrogram& noisy,
                                              ActivityCollector* collector) const {
    if (noisy.num_bins != cfg.stft.num_bins())
        throw std::invalid_argument("enhance: spectrogram bins do not match model config");
    ComplexSpectrogram out(noisy.num_frames, noisy.num_bins);
    StreamState state = make_stream_state();
    if (cfg.norm_mode == "ema") {
        for (int n = 0; n < noisy.num_frames; ++n) {
            auto enhanced = step_frame(&noisy.at(n, 0), state, collector);
            for (int f = 0; f < noisy.num_bins; ++f) out.at(n, f) = enhanced[static_cast<std::size_t>(f)];
        }
    } else {
        const int F = cfg.modeled_bins();
        Matrix mag(noisy.num_frames, F);
        for (int n = 0; n < noisy.num_frames; ++n)
            for (int f = 1; f <= F; ++f) mag(n, f - 1) = std::abs(noisy.at(n, f));
        Matrix norm = normalize_offline(mag);
        for (int n = 0; n < noisy.num_frames; ++n) {
            Vector x = norm.row(n).transpose();
            auto enhanced = step_frame_normalized(&noisy.at(n, 0), x, state, collector);
            for (int f = 0; f < noisy.num_bins; ++f) out.at(n, f) = enhanced[static_cast<std::size_t>(f)];
        }
    }
    return out;
}

AudioBuffer Model::enhance(const AudioBuffer& noisy, ActivityCollector* collector) const {
    ComplexSpectrogram spec = stft(noisy, cfg.stft);
    ComplexSpectrogram enhanced = enhance_spectrogram(spec, collector);
    return istft(enhanced, cfg.stft);
}

// ---------------------------------------------------------------------------
// Training forward / backward
// ---------------------------------------------------------------------------

ComplexSpectrogram Model::forward_train(const ComplexSpectrogram& noisy, bool relaxed,
                                        Trace& trace) const {
    if (noisy.num_bins != cfg.stft.num_bins())
        throw std::invalid_argument("forward_train: spectrogram bins do not match model config");
    const int T = noisy.num_frames;
    const int F = cfg.modeled_bins();

    trace.noisy = noisy;
    trace.relaxed = relaxed;

    Matrix mag(T, F);
    for (int n = 0; n < T; ++n)
        for (int f = 1; f <= F; ++f) mag(n, f - 1) = std::abs(noisy.at(n, f));
    trace.norm_mag = normalize_offline(mag);

    // full-band stack
    trace.fb_tapes.assign(fb_layers.size(), SpikingLayer::Tape{});
    const Matrix* input = &trace.norm_mag;
    for (std::size_t i = 0; i < fb_layers.size(); ++i) {
        fb_layers[i].forward_seq(*input, relaxed, trace.fb_tapes[i]);
        input = &trace.fb_tapes[i].o;
    }
    fb_readout.forward_seq(*input, trace.embedding);

    // sub-band nets
    const std::size_t P = sb.size();
    trace.sb_tapes.assign(P, {});
    trace.sb_logits.assign(P, {});
    std::vector<std::vector<DeepFilter>> filters(
        static_cast<std::size_t>(T), std::vector<DeepFilter>(static_cast<std::size_t>(scheme.total_groups())));
    int group_base = 0;
    for (std::size_t p = 0; p < P; ++p) {
        const auto& part = scheme.partitions[p];
        const int groups = part.num_groups();
        trace.sb_tapes[p].assign(static_cast<std::size_t>(groups), {});
        trace.sb_logits[p].assign(static_cast<std::size_t>(groups), Matrix{});
        for (int g = 0; g < groups; ++g) {
            Matrix feat(T, scheme.feature_dim(static_cast<int>(p)));
            for (int n = 0; n < T; ++n)
                feat.row(n) = build_subband_input(trace.norm_mag, trace.embedding, scheme,
                                                  static_cast<int>(p), g, n)
                                  .transpose();
            auto& tapes = trace.sb_tapes[p][static_cast<std::size_t>(g)];
            tapes.assign(sb[p].layers.size(), SpikingLayer::Tape{});
            const Matrix* in = &feat;
            for (std::size_t l = 0; l < sb[p].layers.size(); ++l) {
                sb[p].layers[l].forward_seq(*in, relaxed, tapes[l]);
                in = &tapes[l].o;
            }
            Matrix& logits = trace.sb_logits[p][static_cast<std::size_t>(g)];
            sb[p].readout.forward_seq(*in, logits);
            for (int n = 0; n < T; ++n)
                filters[static_cast<std::size_t>(n)][static_cast<std::size_t>(group_base + g)] =
                    logits_to_filter(logits.row(n).transpose(), part.group_width, part.taps());
        }
        group_base += groups;
    }

    trace.enhanced = assemble_enhanced(noisy, scheme, filters);
    return trace.enhanced;
}

double Model::synops_penalty(const Trace& trace) const {
    const int F = cfg.modeled_bins();
    double total = 0.0;
    for (std::size_t i = 0; i < fb_layers.size(); ++i) {
        int fan = (i + 1 < fb_layers.size() ? fb_layers[i + 1].width() : F) + fb_layers[i].width();
        total += trace.fb_tapes[i].o.sum() * fan;
    }
    for (std::size_t p = 0; p < sb.size(); ++p) {
        int logits = scheme.logits_dim(static_cast<int>(p));
        for (const auto& tapes : trace.sb_tapes[p]) {
            for (std::size_t l = 0; l < tapes.size(); ++l) {
                int fan = (l + 1 < tapes.size() ? sb[p].layers[l + 1].width() : logits) +
                          sb[p].layers[l].width();
                total += tapes[l].o.sum() * fan;
            }
        }
    }
    return total;
}

void Model::backward(const Trace& trace, const ComplexSpectrogram& d_enhanced,
                     double synops_weight) {
    const int T = trace.noisy.num_frames;
    const int F = cfg.modeled_bins();
    if (d_enhanced.num_frames != T || d_enhanced.num_bins != trace.noisy.num_bins)
        throw std::invalid_argument("backward: enhanced gradient shape mismatch");

    Matrix d_embedding = Matrix::Zero(T, F);

    for (std::size_t p = 0; p < sb.size(); ++p) {
        const auto& part = scheme.partitions[p];
        const int taps = part.taps();
        const int g_w = part.group_width;
        const int ld = scheme.logits_dim(static_cast<int>(p));
        int fan_readout = ld;
        for (int g = 0; g < part.num_groups(); ++g) {
            const int start = scheme.group_start_bin(static_cast<int>(p), g);
            Matrix d_logits = Matrix::Zero(T, ld);
            for (int n = 0; n < T; ++n) {
                MultiFrameBlock block =
                    build_multiframe(trace.noisy, scheme, static_cast<int>(p), g, n);
                for (int m = 0; m < g_w; ++m) {
                    const std::complex<double>& d_s = d_enhanced.at(n, start + m);
                    for (int j = 0; j < taps; ++j) {
                        const std::complex<double>& x = block.at(m, j);
                        int base = 2 * (m * taps + j);
                        d_logits(n, base) += d_s.real() * x.real() + d_s.imag() * x.imag();
                        d_logits(n, base + 1) += -d_s.real() * x.imag() + d_s.imag() * x.real();
                    }
                }
            }
            const auto& tapes = trace.sb_tapes[p][static_cast<std::size_t>(g)];
            Matrix d = sb[p].readout.backward_seq(tapes.back().o, d_logits);
            for (std::size_t l = tapes.size(); l-- > 0;) {
                int fan = (l + 1 < tapes.size() ? sb[p].layers[l + 1].width() : fan_readout) +
                          sb[p].layers[l].width();
                d = sb[p].layers[l].backward_seq(tapes[l], d, synops_weight * fan);
            }
            // scatter the embedding slots; magnitude entries are constants
            const int N = scheme.context;
            for (int n = 0; n < T; ++n)
                for (int m = 0; m < g_w; ++m)
                    d_embedding(n, start + m - 1) += d(n, N + g_w + m);
        }
    }

    Matrix d_fb = fb_readout.backward_seq(trace.fb_tapes.back().o, d_embedding);
    for (std::size_t i = fb_layers.size(); i-- > 0;) {
        int fan = (i + 1 < fb_layers.size() ? fb_layers[i + 1].width() : F) + fb_layers[i].width();
        d_fb = fb_layers[i].backward_seq(trace.fb_tapes[i], d_fb, synops_weight * fan);
    }
}

// ---------------------------------------------------------------------------
// Profiling
// ---------------------------------------------------------------------------

PowerReport Model::make_report(const ActivityCollector& collector, const CostModel& cost) const {
    auto topo = topology();
    PowerReport r;
    r.steps = collector.steps;
    r.audio_seconds =
        static_cast<double>(collector.steps) * cfg.stft.hop_len / static_cast<double>(kSampleRate);
    r.synops = count_synops(collector.activity, topo);
    r.neuronops = count_neuronops(topo, collector.steps);
    double readout_macs = 0.0;
    readout_macs += static_cast<double>(fb_readout.in_dim()) * fb_readout.width();
    for (std::size_t p = 0; p < sb.size(); ++p)
        readout_macs += static_cast<double>(sb[p].readout.in_dim()) * sb[p].readout.width() *
                        scheme.partitions[p].num_groups();
    r.readout_macs = readout_macs * static_cast<double>(collector.steps);
    if (r.audio_seconds > 0.0)
        r.power_proxy_ops_per_s = power_proxy(r.synops, r.neuronops, r.audio_seconds, cost);
    r.latency_s = cfg.algorithmic_latency_s();
    r.pdp_proxy_ops = pdp_proxy(r.power_proxy_ops_per_s, r.latency_s);
    r.energy_j = energy_cost(r.pdp_proxy_ops, OpClass::AC, cost);

    FiringStats fs = firing_stats(collector.activity, topo);
    r.firing_histogram = fs.per_neuron;
    r.silent_fraction = fs.silent_fraction;
    r.low_rate_fraction = fs.low_rate_fraction;
    std::vector<double> sample_rates;
    if (collector.steps > 0) sample_rates.push_back(fs.mean_rate);
    {
        Histogram h;
        int bins = 20;
        h.edges.resize(static_cast<std::size_t>(bins) + 1);
        for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = i / static_cast<double>(bins);
        h.masses.assign(static_cast<std::size_t>(bins), 0.0);
        for (double v : sample_rates) {
            int idx = std::clamp(static_cast<int>(v * bins), 0, bins - 1);
            h.masses[static_cast<std::size_t>(idx)] += 1.0 / static_cast<double>(sample_rates.size());
        }
        r.sample_rate_histogram = h;
    }
    if (!collector.decay.empty()) r.decay_histogram = collector.decay.histogram();
    return r;
}

Histogram Model::decay_histogram(const ActivityCollector& collector) const {
    bool has_gsn = false;
    for (const auto& l : fb_layers) has_gsn = has_gsn || l.kind == NeuronKind::GSN;
    for (const auto& net : sb)
        for (const auto& l : net.layers) has_gsn = has_gsn || l.kind == NeuronKind::GSN;
    if (!has_gsn) throw std::runtime_error("decay_histogram: model has no GSN layers");
    return collector.decay.histogram();
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, Model& model) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot create checkpoint file: " + path);
    auto refs = model.params();
    f << "NEURODENOISE-CKPT 1\n";
    f << "config_hash " << std::hex << model.cfg.hash() << std::dec << "\n";
    for (const auto& r : refs) f << "tensor " << r.name << " " << r.size << "\n";
    f << "DATA\n";
    for (const auto& r : refs) {
        for (Eigen::Index i = 0; i < r.size; ++i) {
            float v = static_cast<float>(r.value[i]);
            f.write(reinterpret_cast<const char*>(&v), sizeof(float));
        }
    }
    if (!f) throw std::runtime_error("failed writing checkpoint: " + path);
}

void load_checkpoint(const std::string& path, Model& model) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint file: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "NEURODENOISE-CKPT 1")
        throw CheckpointError("checkpoint: bad magic header");
    if (!std::getline(f, line) || line.rfind("config_hash ", 0) != 0)
        throw CheckpointError("checkpoint: missing config hash");
    uint64_t stored_hash = std::stoull(line.substr(12), nullptr, 16);
    if (stored_hash != model.cfg.hash())
        throw CheckpointError("checkpoint: config hash mismatch (checkpoint was trained with a different config)");

    auto refs = model.params();
    std::size_t next = 0;
    while (std::getline(f, line)) {
        if (line == "DATA") break;
        std::istringstream ss(line);
        std::string tag, name;
        long size = 0;
        ss >> tag >> name >> size;
        if (tag != "tensor") throw CheckpointError("checkpoint: malformed header line: " + line);
        if (next >= refs.size() || refs[next].name != name || refs[next].size != size)
            throw CheckpointError("checkpoint: tensor mismatch at " + name);
        ++next;
    }
    if (next != refs.size()) throw CheckpointError("checkpoint: missing tensors");
    for (const auto& r : refs) {
        for (Eigen::Index i = 0; i < r.size; ++i) {
            float v = 0.0f;
            f.read(reinterpret_cast<char*>(&v), sizeof(float));
            if (!f) throw CheckpointError("checkpoint: truncated data section");
            r.value[i] = static_cast<double>(v);
        }
    }
}

// ---------------------------------------------------------------------------
// StreamingEnhancer
// ---------------------------------------------------------------------------

StreamingEnhancer::StreamingEnhancer(const Model& model, ActivityCollector* collector)
    : model_(model), collector_(collector), state_(model.make_stream_state()) {
    if (model.cfg.norm_mode != "ema")
        throw std::invalid_argument("streaming requires EMA normalization mode");
    window_ = hann_window(model.cfg.stft.window_len);
    enhanced_.num_bins = model.cfg.stft.num_bins();
}

void StreamingEnhancer::process_frame() {
    const auto& cfg = model_.cfg.stft;
    const std::size_t base = static_cast<std::size_t>(frame_index_) * cfg.hop_len;
    std::vector<std::complex<double>> bins(static_cast<std::size_t>(cfg.num_bins()));
    stft_frame(pending_.data() + base, cfg, window_, bins.data());
    auto enhanced = model_.step_frame(bins.data(), state_, collector_);
    enhanced_.data.insert(enhanced_.data.end(), enhanced.begin(), enhanced.end());
    enhanced_.num_frames += 1;

    std::vector<double> t = irfft(enhanced.data(), cfg.fft_size);
    const std::size_t need = base + static_cast<std::size_t>(cfg.window_len);
    if (ola_acc_.size() < need) {
        ola_acc_.resize(need, 0.0);
        ola_wsum_.resize(need, 0.0);
    }
    for (int k = 0; k < cfg.window_len; ++k) {
        double w = window_[static_cast<std::size_t>(k)];
        ola_acc_[base + static_cast<std::size_t>(k)] += t[static_cast<std::size_t>(k)] * w;
        ola_wsum_[base + static_cast<std::size_t>(k)] += w * w;
    }
    ++frame_index_;
}

std::vector<double> StreamingEnhancer::feed(const double* samples, std::size_t count) {
    pending_.insert(pending_.end(), samples, samples + count);
    const auto& cfg = model_.cfg.stft;
    while (pending_.size() >= static_cast<std::size_t>(frame_index_) * cfg.hop_len +
                                  static_cast<std::size_t>(cfg.window_len)) {
        process_frame();
    }
    std::vector<double> out;
    // samples before the next frame's start are final
    std::size_t final_until = frame_index_ > 0
                                  ? static_cast<std::size_t>(frame_index_) * cfg.hop_len
                                  : 0;
    final_until = std::min(final_until, ola_acc_.size());
    for (std::size_t i = emitted_; i < final_until; ++i)
        out.push_back(ola_acc_[i] / std::max(ola_wsum_[i], 1e-12));
    emitted_ = std::max(emitted_, final_until);
    return out;
}

std::vector<double> StreamingEnhancer::flush() {
    std::vector<double> out;
    for (std::size_t i = emitted_; i < ola_acc_.size(); ++i)
        out.push_back(ola_acc_[i] / std::max(ola_wsum_[i], 1e-12));
    emitted_ = ola_acc_.size();
    return out;
}

}  // namespace neurodenoise
