#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "neurodenoise/datasynth.hpp"
#include "neurodenoise/fft.hpp"
#include "neurodenoise/model.hpp"

using namespace neurodenoise;

namespace {

ModelConfig small_config(const std::string& kind = "gsn") {
    ModelConfig cfg;
    cfg.fullband_widths = {8};
    cfg.subband_widths = {6, 6, 6};
    cfg.groupings = {32, 48, 64};
    cfg.filter_orders = {1, 1, 0};
    cfg.neuron_kind = kind;
    return cfg;
}

AudioBuffer probe_audio(double seconds, uint64_t seed) {
    AudioBuffer speech = toy_speech(seconds, seed);
    AudioBuffer noise = toy_noise(seconds, seed + 99);
    auto [noisy, scaled] = mix_at_snr(speech, noise, 5.0);
    return noisy;
}

std::string temp_path(const std::string& name) {
    return std::string("/tmp/nd_model_test_") + name;
}

}  // namespace

TEST_CASE("config JSON round trip preserves every field and the hash") {
    ModelConfig cfg = small_config();
    cfg.theta = 1.25;
    cfg.ema_beta = 0.95;
    cfg.loss.alpha = 0.4;
    cfg.loss.synops_weight = 1e-7;
    std::string text = cfg.to_json();
    ModelConfig rt = ModelConfig::from_json_text(text);
    CHECK(rt.fullband_widths == cfg.fullband_widths);
    CHECK(rt.subband_widths == cfg.subband_widths);
    CHECK(rt.groupings == cfg.groupings);
    CHECK(rt.filter_orders == cfg.filter_orders);
    CHECK(rt.cutoffs == cfg.cutoffs);
    CHECK(rt.neuron_kind == cfg.neuron_kind);
    CHECK(rt.theta == cfg.theta);
    CHECK(rt.ema_beta == cfg.ema_beta);
    CHECK(rt.norm_mode == cfg.norm_mode);
    CHECK(rt.loss.alpha == cfg.loss.alpha);
    CHECK(rt.loss.synops_weight == cfg.loss.synops_weight);
    CHECK(rt.hash() == cfg.hash());

    // hash is sensitive to structural changes
    ModelConfig other = cfg;
    other.fullband_widths = {10};
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("config save/load files and validation errors") {
    ModelConfig cfg = small_config();
    std::string path = temp_path("config.json");
    cfg.save(path);
    ModelConfig loaded = ModelConfig::load(path);
    CHECK(loaded.hash() == cfg.hash());
    std::remove(path.c_str());
    CHECK_THROWS(ModelConfig::load(temp_path("missing.json")));

    ModelConfig bad = small_config();
    bad.cutoffs = {128, 32};  // descending
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config();
    bad.groupings = {7, 48, 64};  // 7 does not divide 32
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config();
    bad.neuron_kind = "bogus";
    CHECK_THROWS(bad.validate());
    bad = small_config();
    bad.filter_orders = {1, 1};  // wrong length
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("default configuration parameter budget") {
    Model m;
    m.init(ModelConfig{}, 1);
    auto counts = m.parameter_counts();
    long total = counts.at("total");
    CHECK(total == counts.at("fullband") + counts.at("subband"));
    CHECK(total >= 900000);
    CHECK(total <= 1030000);

    long registry = 0;
    for (const auto& p : m.params()) registry += static_cast<long>(p.size);
    CHECK(registry == total);
}

TEST_CASE("identity model passes the spectrogram through untouched") {
    Model m;
    m.make_identity(small_config());
    AudioBuffer x = probe_audio(0.35, 3);
    ComplexSpectrogram noisy = stft(x, m.cfg.stft);
    ComplexSpectrogram out = m.enhance_spectrogram(noisy);
    REQUIRE(out.num_frames == noisy.num_frames);
    REQUIRE(out.num_bins == noisy.num_bins);
    for (int n = 0; n < out.num_frames; ++n)
        for (int f = 0; f < out.num_bins; ++f) {
            CHECK(out.at(n, f).real() == doctest::Approx(noisy.at(n, f).real()).epsilon(1e-12));
            CHECK(out.at(n, f).imag() == doctest::Approx(noisy.at(n, f).imag()).epsilon(1e-12));
        }

    // enhance() then equals the STFT round trip of the input on the interior
    AudioBuffer y = m.enhance(x);
    AudioBuffer ref = istft(noisy, m.cfg.stft);
    REQUIRE(y.samples.size() == ref.samples.size());
    for (std::size_t i = 0; i < y.samples.size(); ++i)
        CHECK(y.samples[i] == doctest::Approx(ref.samples[i]).epsilon(1e-10));
}

TEST_CASE("checkpoint round trip restores float32-cast parameters") {
    Model m;
    m.init(small_config(), 7);
    std::string path = temp_path("ckpt.bin");
    std::vector<double> saved;
    for (auto& p : m.params())
        for (Eigen::Index i = 0; i < p.size; ++i) saved.push_back(p.value[i]);
    save_checkpoint(path, m);

    Model m2;
    m2.init(small_config(), 99);  // different weights, same structure
    load_checkpoint(path, m2);
    std::size_t idx = 0;
    for (auto& p : m2.params())
        for (Eigen::Index i = 0; i < p.size; ++i, ++idx)
            CHECK(p.value[i] == static_cast<double>(static_cast<float>(saved[idx])));

    SUBCASE("config hash mismatch is rejected") {
        Model m3;
        ModelConfig other = small_config();
        other.theta = 2.0;
        m3.init(other, 7);
        CHECK_THROWS_AS(load_checkpoint(path, m3), CheckpointError);
    }
    SUBCASE("truncated file is rejected") {
        std::ifstream in(path, std::ios::binary);
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(all.data(), static_cast<std::streamsize>(all.size() - 64));
        out.close();
        Model m4;
        m4.init(small_config(), 7);
        CHECK_THROWS_AS(load_checkpoint(path, m4), CheckpointError);
    }
    SUBCASE("bad magic is rejected") {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "NOT-A-CHECKPOINT\n";
        out.close();
        Model m5;
        m5.init(small_config(), 7);
        CHECK_THROWS_AS(load_checkpoint(path, m5), CheckpointError);
    }
    std::remove(path.c_str());
}

TEST_CASE("streaming matches the offline path bit for bit") {
    Model m;
    m.init(small_config(), 21);
    AudioBuffer x = probe_audio(0.5, 5);

    ComplexSpectrogram noisy = stft(x, m.cfg.stft);
    ComplexSpectrogram offline = m.enhance_spectrogram(noisy);
    AudioBuffer offline_wave = istft(offline, m.cfg.stft);

    StreamingEnhancer stream(m);
    std::vector<double> out;
    std::mt19937_64 rng(17);
    std::size_t pos = 0;
    while (pos < x.samples.size()) {
        std::size_t chunk = 1 + rng() % 700;  // irregular chunk sizes
        chunk = std::min(chunk, x.samples.size() - pos);
        auto part = stream.feed(x.samples.data() + pos, chunk);
        out.insert(out.end(), part.begin(), part.end());
        pos += chunk;
    }
    auto tail = stream.flush();
    out.insert(out.end(), tail.begin(), tail.end());

    const ComplexSpectrogram& frames = stream.enhanced_frames();
    REQUIRE(frames.num_frames == offline.num_frames);
    for (int n = 0; n < frames.num_frames; ++n)
        for (int f = 0; f < frames.num_bins; ++f)
            CHECK(frames.at(n, f) == offline.at(n, f));  // bit-identical

    REQUIRE(out.size() == offline_wave.samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == offline_wave.samples[i]);
}

TEST_CASE("training forward agrees with the inference path") {
    Model m;
    m.init(small_config(), 31);
    AudioBuffer x = probe_audio(0.3, 9);
    ComplexSpectrogram noisy = stft(x, m.cfg.stft);
    Model::Trace trace;
    ComplexSpectrogram trained = m.forward_train(noisy, /*relaxed=*/false, trace);
    ComplexSpectrogram inferred = m.enhance_spectrogram(noisy);
    REQUIRE(trained.num_frames == inferred.num_frames);
    for (int n = 0; n < trained.num_frames; ++n)
        for (int f = 0; f < trained.num_bins; ++f) {
            CHECK(trained.at(n, f).real() ==
                  doctest::Approx(inferred.at(n, f).real()).epsilon(1e-12));
            CHECK(trained.at(n, f).imag() ==
                  doctest::Approx(inferred.at(n, f).imag()).epsilon(1e-12));
        }
}

TEST_CASE("topology and collector shapes are consistent") {
    Model m;
    m.init(small_config(), 1);
    auto topo = m.topology();
    auto collector = m.make_collector();
    REQUIRE(collector.activity.size() == topo.size());
    for (std::size_t i = 0; i < topo.size(); ++i) {
        if (topo[i].spiking)
            CHECK(collector.activity[i].spike_counts.size() ==
                  static_cast<std::size_t>(topo[i].neurons));
    }

    // running inference fills the collector and yields a finite report
    AudioBuffer x = probe_audio(0.3, 13);
    m.enhance(x, &collector);
    CHECK(collector.steps > 0);
    PowerReport report = m.make_report(collector);
    CHECK(report.audio_seconds == doctest::Approx(collector.steps * 128.0 / 16000.0));
    CHECK(report.synops >= 0.0);
    CHECK(report.neuronops > 0.0);
    CHECK(report.power_proxy_ops_per_s > 0.0);
    CHECK(std::isfinite(report.energy_j));
}

TEST_CASE("decay histogram requires gated neurons") {
    Model gsn;
    gsn.init(small_config("gsn"), 1);
    auto c = gsn.make_collector();
    gsn.enhance(probe_audio(0.2, 2), &c);
    Histogram h = gsn.decay_histogram(c);
    double mass = 0.0;
    for (double v : h.masses) mass += v;
    CHECK(mass == doctest::Approx(1.0));

    Model lif;
    lif.init(small_config("lif"), 1);
    auto c2 = lif.make_collector();
    lif.enhance(probe_audio(0.2, 2), &c2);
    CHECK_THROWS(lif.decay_histogram(c2));
}

TEST_CASE("algorithmic latency of the default configuration") {
    ModelConfig cfg;
    CHECK(cfg.algorithmic_latency_s() == doctest::Approx(0.03202).epsilon(1e-12));
}
