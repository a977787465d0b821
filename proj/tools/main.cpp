// neurodenoise — real-time spiking speech enhancement CLI.
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neurodenoise/datasynth.hpp"
#include "neurodenoise/model.hpp"
#include "neurodenoise/trainer.hpp"

namespace nd = neurodenoise;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitCheckpoint = 4;

nd::ModelConfig load_config_or_default(const std::string& path) {
    if (path.empty()) {
        nd::ModelConfig cfg;
        cfg.validate();
        return cfg;
    }
    return nd::ModelConfig::load(path);
}

struct NamedPairs {
    std::vector<nd::TrainItem> items;
};

NamedPairs load_pairs(const std::string& manifest_path) {
    NamedPairs out;
    for (const auto& e : nd::read_manifest(manifest_path)) {
        nd::TrainItem item;
        item.noisy = nd::read_wav(e.noisy_path);
        item.clean = nd::read_wav(e.clean_path);
        out.items.push_back(std::move(item));
    }
    return out;
}

int cmd_enhance(const std::string& model_path, const std::string& config_path,
                const std::string& in_path, const std::string& out_path, bool stream,
                const std::string& report_path) {
    nd::ModelConfig cfg = load_config_or_default(config_path);
    nd::Model model;
    model.init(cfg, 0);
    if (!model_path.empty()) nd::load_checkpoint(model_path, model);

    nd::AudioBuffer in = nd::read_wav(in_path);
    nd::ActivityCollector collector = model.make_collector();
    nd::AudioBuffer out;
    if (stream) {
        nd::StreamingEnhancer enhancer(model, &collector);
        const std::size_t chunk = static_cast<std::size_t>(cfg.stft.hop_len);
        for (std::size_t pos = 0; pos < in.samples.size(); pos += chunk) {
            std::size_t take = std::min(chunk, in.samples.size() - pos);
            auto emitted = enhancer.feed(in.samples.data() + pos, take);
            out.samples.insert(out.samples.end(), emitted.begin(), emitted.end());
        }
        auto tail = enhancer.flush();
        out.samples.insert(out.samples.end(), tail.begin(), tail.end());
    } else {
        out = model.enhance(in, &collector);
    }
    nd::write_wav(out_path, out);

    if (!report_path.empty()) {
        nd::PowerReport report = model.make_report(collector);
        std::ofstream f(report_path);
        if (!f) throw std::runtime_error("cannot create report file: " + report_path);
        f << nd::report_to_json(report) << "\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_path, int epochs, uint64_t seed, int batch_size, double lr,
              double max_seconds, const std::string& log_path) {
    nd::ModelConfig cfg = load_config_or_default(config_path);
    nd::Model model;
    model.init(cfg, seed);

    NamedPairs data = load_pairs(data_path);
    if (data.items.empty()) throw std::runtime_error("training manifest is empty: " + data_path);
    std::size_t holdout = std::max<std::size_t>(1, data.items.size() / 10);
    if (holdout >= data.items.size()) holdout = data.items.size() > 1 ? 1 : 0;
    std::vector<nd::TrainItem> eval_items(data.items.end() - static_cast<long>(holdout),
                                          data.items.end());
    std::vector<nd::TrainItem> train_items(data.items.begin(),
                                           data.items.end() - static_cast<long>(holdout));
    if (train_items.empty()) train_items = data.items;
    if (eval_items.empty()) eval_items = data.items;

    nd::TrainingConfig tcfg;
    tcfg.learning_rate = lr;
    tcfg.batch_size = batch_size;
    tcfg.max_epochs = epochs;
    tcfg.seed = seed;
    tcfg.validate();

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw std::runtime_error("cannot create metrics log: " + log_path);
    }
    auto emit = [&](const std::string& line) {
        std::cout << line << "\n";
        if (log) log << line << "\n";
    };

    double baseline = nd::evaluate_si_snr_i(model, eval_items);
    emit("epoch 0 loss nan si_snr_i " + std::to_string(baseline));

    nd::AdamW opt(model.params(), tcfg);
    std::mt19937_64 shuffle_rng(seed);
    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        std::vector<std::size_t> order(train_items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_acc = 0.0;
        int steps = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(tcfg.batch_size)) {
            std::vector<nd::TrainItem> batch;
            for (std::size_t i = pos;
                 i < std::min(order.size(), pos + static_cast<std::size_t>(tcfg.batch_size)); ++i)
                batch.push_back(train_items[order[i]]);
            nd::LossBreakdown lb = nd::bptt_step(model, batch, opt, tcfg);
            loss_acc += lb.total;
            ++steps;
        }
        double si = nd::evaluate_si_snr_i(model, eval_items);
        emit("epoch " + std::to_string(epoch) + " loss " + std::to_string(loss_acc / steps) +
             " si_snr_i " + std::to_string(si));
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (max_seconds > 0.0 && elapsed > max_seconds) {
            emit("time budget reached after epoch " + std::to_string(epoch));
            break;
        }
    }
    nd::save_checkpoint(out_path, model);
    return 0;
}

int cmd_profile(const std::string& model_path, const std::string& config_path,
                const std::string& in_path, const std::string& json_path) {
    nd::ModelConfig cfg = load_config_or_default(config_path);
    nd::Model model;
    model.init(cfg, 0);
    if (!model_path.empty()) nd::load_checkpoint(model_path, model);
    nd::AudioBuffer in = nd::read_wav(in_path);
    nd::ActivityCollector collector = model.make_collector();
    model.enhance(in, &collector);
    nd::PowerReport report = model.make_report(collector);
    std::cout << nd::report_to_table(report);
    if (!json_path.empty()) {
        std::ofstream f(json_path);
        if (!f) throw std::runtime_error("cannot create report file: " + json_path);
        f << nd::report_to_json(report) << "\n";
    }
    return 0;
}

nd::ModelConfig gradcheck_config() {
    nd::ModelConfig cfg;
    cfg.cutoffs = {32, 128};
    cfg.groupings = {32, 48, 64};
    cfg.filter_orders = {2, 1, 0};
    cfg.fullband_widths = {6};
    cfg.subband_widths = {4, 4, 4};
    // the magnitude loss term is ill-conditioned for finite differences near
    // zero bins; the probe objective checks the smooth terms
    cfg.loss.alpha = 0.0;
    cfg.validate();
    return cfg;
}

int cmd_gradcheck(const std::string& config_path, uint64_t seed) {
    nd::ModelConfig cfg = config_path.empty() ? gradcheck_config() : nd::ModelConfig::load(config_path);
    nd::Model model;
    model.init(cfg, seed);
    nd::TrainItem item;
    item.clean = nd::toy_speech(0.12, seed + 1);
    nd::AudioBuffer noise = nd::toy_noise(0.12, seed + 2);
    auto [noisy, scaled] = nd::mix_at_snr(item.clean, noise, 5.0);
    item.noisy = noisy;
    nd::GradCheckResult r = nd::grad_check(model, item, 1e-4, 200, seed);
    std::cout << "gradcheck: checked " << r.checked << " params, max rel error "
              << r.max_rel_error << " (worst: " << r.worst_param << ")\n";
    return r.max_rel_error < 1e-4 ? 0 : 1;
}

int cmd_synth_data(const std::string& out_dir, int pairs, uint64_t seed, double clip_seconds,
                   double snr_min, double snr_max, double loud_min, double loud_max) {
    nd::MixSpec spec;
    spec.num_pairs = pairs;
    spec.seed = seed;
    spec.clip_seconds = clip_seconds;
    spec.snr_db_min = snr_min;
    spec.snr_db_max = snr_max;
    spec.loudness_dbfs_min = loud_min;
    spec.loudness_dbfs_max = loud_max;
    auto manifest = nd::synth_toy_pairset(spec, out_dir);
    std::cout << "wrote " << manifest.size() << " pairs to " << out_dir << "\n";
    return 0;
}

int cmd_params(const std::string& config_path) {
    nd::ModelConfig cfg = load_config_or_default(config_path);
    nd::Model model;
    model.init(cfg, 0);
    for (const auto& [name, count] : model.parameter_counts())
        std::cout << name << " " << count << "\n";
    return 0;
}

int cmd_init(const std::string& config_path, const std::string& out_path, bool identity,
             uint64_t seed) {
    nd::ModelConfig cfg = load_config_or_default(config_path);
    nd::Model model;
    if (identity) {
        model.make_identity(cfg);
    } else {
        model.init(cfg, seed);
    }
    nd::save_checkpoint(out_path, model);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"neurodenoise: spiking full-band/sub-band speech enhancement"};
    app.require_subcommand(1);

    std::string model_path, config_path, in_path, out_path, report_path, data_path, log_path,
        json_path, out_dir;
    bool stream = false, identity = false;
    int epochs = 10, batch_size = 4, pairs = 16;
    uint64_t seed = 0;
    double lr = 1e-3, max_seconds = 0.0, clip_seconds = 4.0;
    double snr_min = -5.0, snr_max = 20.0, loud_min = -35.0, loud_max = -15.0;

    auto* enhance = app.add_subcommand("enhance", "Enhance a WAV file");
    enhance->add_option("--model", model_path, "checkpoint file");
    enhance->add_option("--config", config_path, "model config JSON");
    enhance->add_option("--in", in_path, "input WAV")->required();
    enhance->add_option("--out", out_path, "output WAV")->required();
    enhance->add_flag("--stream", stream, "process hop-sized chunks with state carry");
    enhance->add_option("--report", report_path, "write a PowerReport JSON");

    auto* train = app.add_subcommand("train", "Train on a pairset manifest");
    train->add_option("--config", config_path, "model config JSON");
    train->add_option("--data", data_path, "manifest file")->required();
    train->add_option("--out", out_path, "output checkpoint")->required();
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--seed", seed, "RNG seed");
    train->add_option("--batch", batch_size, "batch size");
    train->add_option("--lr", lr, "learning rate");
    train->add_option("--max-seconds", max_seconds, "wall-clock budget (0 = unlimited)");
    train->add_option("--log", log_path, "metrics log file");

    auto* profile = app.add_subcommand("profile", "Profile SynOPs/NeuronOPs/power on a WAV");
    profile->add_option("--model", model_path, "checkpoint file");
    profile->add_option("--config", config_path, "model config JSON");
    profile->add_option("--in", in_path, "input WAV")->required();
    profile->add_option("--json", json_path, "write the report as JSON");

    auto* gradcheck = app.add_subcommand("gradcheck", "Relaxed-mode gradient verification");
    gradcheck->add_option("--config", config_path, "model config JSON (default: tiny probe)");
    gradcheck->add_option("--seed", seed, "RNG seed");

    auto* synth = app.add_subcommand("synth-data", "Generate a toy (noisy, clean) pairset");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--pairs", pairs, "number of pairs");
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--clip-seconds", clip_seconds, "clip length in seconds");
    synth->add_option("--snr-min", snr_min, "minimum SNR (dB)");
    synth->add_option("--snr-max", snr_max, "maximum SNR (dB)");
    synth->add_option("--loudness-min", loud_min, "minimum loudness (dBFS)");
    synth->add_option("--loudness-max", loud_max, "maximum loudness (dBFS)");

    auto* params = app.add_subcommand("params", "Print trainable parameter counts");
    params->add_option("--config", config_path, "model config JSON");

    auto* init = app.add_subcommand("init", "Write an initialized checkpoint");
    init->add_option("--config", config_path, "model config JSON");
    init->add_option("--out", out_path, "output checkpoint")->required();
    init->add_flag("--identity", identity, "zero weights + unit j=0 taps (debug passthrough)");
    init->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(enhance))
            return cmd_enhance(model_path, config_path, in_path, out_path, stream, report_path);
        if (app.got_subcommand(train))
            return cmd_train(config_path, data_path, out_path, epochs, seed, batch_size, lr,
                             max_seconds, log_path);
        if (app.got_subcommand(profile))
            return cmd_profile(model_path, config_path, in_path, json_path);
        if (app.got_subcommand(gradcheck)) return cmd_gradcheck(config_path, seed);
        if (app.got_subcommand(synth))
            return cmd_synth_data(out_dir, pairs, seed, clip_seconds, snr_min, snr_max, loud_min,
                                  loud_max);
        if (app.got_subcommand(params)) return cmd_params(config_path);
        if (app.got_subcommand(init)) return cmd_init(config_path, out_path, identity, seed);
    } catch (const nd::CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
