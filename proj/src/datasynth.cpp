#include "neurodenoise/datasynth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace neurodenoise {

namespace {

constexpr double kSilenceFloor = 1e-20;  // mean-square power

double mean_square(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

void MixSpec::validate() const {
    if (snr_db_min > snr_db_max) throw std::invalid_argument("datasynth: SNR range ill-ordered");
    if (loudness_dbfs_min > loudness_dbfs_max)
        throw std::invalid_argument("datasynth: loudness range ill-ordered");
    if (clip_seconds <= 0.0) throw std::invalid_argument("datasynth: clip length must be > 0");
    if (gap_seconds < 0.0) throw std::invalid_argument("datasynth: gap must be >= 0");
    if (num_pairs < 1) throw std::invalid_argument("datasynth: num_pairs must be >= 1");
}

std::pair<AudioBuffer, AudioBuffer> mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise,
                                               double snr_db) {
    if (clean.samples.size() != noise.samples.size())
        throw std::invalid_argument("mix_at_snr: length mismatch");
    double p_c = mean_square(clean.samples);
    double p_n = mean_square(noise.samples);
    if (p_c <= kSilenceFloor) throw std::invalid_argument("mix_at_snr: silent clean signal");
    if (p_n <= kSilenceFloor) throw std::invalid_argument("mix_at_snr: silent noise signal");
    double scale = std::sqrt(p_c / (p_n * std::pow(10.0, snr_db / 10.0)));
    AudioBuffer scaled = noise;
    for (auto& v : scaled.samples) v *= scale;
    AudioBuffer noisy = clean;
    for (std::size_t i = 0; i < noisy.samples.size(); ++i) noisy.samples[i] += scaled.samples[i];
    return {noisy, scaled};
}

double measure_dbfs(const AudioBuffer& audio) {
    double p = mean_square(audio.samples);
    if (p <= kSilenceFloor) throw std::invalid_argument("measure_dbfs: silent signal");
    return 10.0 * std::log10(p);
}

AudioBuffer loudness_normalize(const AudioBuffer& audio, double target_dbfs) {
    double gain = std::pow(10.0, (target_dbfs - measure_dbfs(audio)) / 20.0);
    AudioBuffer out = audio;
    for (auto& v : out.samples) v *= gain;
    return out;
}

// ---------------------------------------------------------------------------
// Toy corpora
// ---------------------------------------------------------------------------

AudioBuffer toy_speech(double seconds, uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x5f3759df));
    AudioBuffer out;
    out.samples.assign(static_cast<std::size_t>(seconds * kSampleRate), 0.0);
    std::uniform_real_distribution<double> f0_pick(80.0, 220.0);
    std::uniform_real_distribution<double> burst_len(0.15, 0.40);
    std::uniform_real_distribution<double> gap_len(0.05, 0.15);
    std::uniform_real_distribution<double> drift(-0.3, 0.3);

    std::size_t pos = 0;
    while (pos < out.samples.size()) {
        std::size_t len = static_cast<std::size_t>(burst_len(rng) * kSampleRate);
        len = std::min(len, out.samples.size() - pos);
        double f0 = f0_pick(rng);
        double slope = drift(rng) * f0;  // pitch glide over the burst
        double phase = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            double frac = static_cast<double>(i) / std::max<std::size_t>(len - 1, 1);
            double f = f0 + slope * frac;
            phase += 2.0 * M_PI * f / kSampleRate;
            // band-limited sawtooth: harmonics up to 4 kHz
            int harmonics = static_cast<int>(4000.0 / f);
            double v = 0.0;
            for (int k = 1; k <= harmonics; ++k) v += std::sin(k * phase) / k;
            double env = std::sin(M_PI * frac);  // smooth attack/decay
            out.samples[pos + i] = 0.35 * env * v;
        }
        pos += len;
        pos += static_cast<std::size_t>(gap_len(rng) * kSampleRate);
    }
    return out;
}

AudioBuffer toy_noise(double seconds, uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed ^ 0xa5a5a5a5));
    AudioBuffer out;
    out.samples.assign(static_cast<std::size_t>(seconds * kSampleRate), 0.0);
    std::normal_distribution<double> white(0.0, 1.0);
    std::uniform_real_distribution<double> phase_pick(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> carrier_pick(6500.0, 7200.0);
    std::uniform_real_distribution<double> hold_pick(0.05, 0.30);
    const double phi = phase_pick(rng);
    const double fc = carrier_pick(rng);  // band center, above the speech band
    // narrowband noise shifted up to fc, plus a weak low-frequency floor;
    // both gated by a random telegraph envelope with sharp on/off transitions
    const double a_band = 0.85;
    const double a_low = 0.95;
    const double ramp_len = 0.005 * kSampleRate;  // 5 ms raised-cosine edges
    double band_state = 0.0;
    double low_state = 0.0;
    bool on = true;
    std::size_t next_toggle = static_cast<std::size_t>(hold_pick(rng) * kSampleRate);
    double env = 1.0;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        if (i >= next_toggle) {
            on = !on;
            next_toggle = i + static_cast<std::size_t>(hold_pick(rng) * kSampleRate);
        }
        double target = on ? 1.0 : 0.05;
        env += std::clamp(target - env, -1.0 / ramp_len, 1.0 / ramp_len);
        band_state = a_band * band_state + (1.0 - a_band) * white(rng);
        low_state = a_low * low_state + (1.0 - a_low) * white(rng);
        double t = static_cast<double>(i) / kSampleRate;
        double band = band_state * std::cos(2.0 * M_PI * fc * t + phi);
        out.samples[i] = 2.0 * env * (band + 0.5 * low_state);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pair synthesis
// ---------------------------------------------------------------------------

MixedPair synth_pair(const std::vector<AudioBuffer>& sources, const std::vector<AudioBuffer>& noises,
                     const MixSpec& spec, int index) {
    spec.validate();
    if (sources.empty() || noises.empty())
        throw std::invalid_argument("synth_pair: empty corpus");
    for (const auto& s : sources)
        if (mean_square(s.samples) <= kSilenceFloor)
            throw std::invalid_argument("synth_pair: silent source clip");
    for (const auto& n : noises)
        if (mean_square(n.samples) <= kSilenceFloor)
            throw std::invalid_argument("synth_pair: silent noise clip");

    const uint64_t pair_seed = splitmix64(spec.seed * 0x100000001B3ULL + static_cast<uint64_t>(index));
    std::mt19937_64 rng(pair_seed);
    const std::size_t clip_len = static_cast<std::size_t>(spec.clip_seconds * kSampleRate);
    const std::size_t gap_len = static_cast<std::size_t>(spec.gap_seconds * kSampleRate);

    // clean: concatenated source clips separated by silence gaps
    AudioBuffer clean;
    clean.samples.assign(clip_len, 0.0);
    std::size_t pos = 0;
    while (pos < clip_len) {
        const auto& src = sources[rng() % sources.size()].samples;
        std::size_t offset = src.size() > 1 ? rng() % src.size() : 0;
        std::size_t take = std::min(src.size() - offset, clip_len - pos);
        std::copy(src.begin() + static_cast<long>(offset),
                  src.begin() + static_cast<long>(offset + take), clean.samples.begin() + static_cast<long>(pos));
        pos += take + gap_len;
    }
    if (mean_square(clean.samples) <= kSilenceFloor)
        throw std::invalid_argument("synth_pair: assembled clean clip is silent");

    // noise: gapless concatenation with wraparound and re-randomized offsets
    AudioBuffer noise;
    noise.samples.assign(clip_len, 0.0);
    pos = 0;
    while (pos < clip_len) {
        const auto& src = noises[rng() % noises.size()].samples;
        std::size_t offset = src.size() > 1 ? rng() % src.size() : 0;
        std::size_t take = std::min(src.size() - offset, clip_len - pos);
        std::copy(src.begin() + static_cast<long>(offset),
                  src.begin() + static_cast<long>(offset + take), noise.samples.begin() + static_cast<long>(pos));
        pos += take;
    }

    std::uniform_real_distribution<double> snr_pick(spec.snr_db_min, spec.snr_db_max);
    std::uniform_real_distribution<double> loud_pick(spec.loudness_dbfs_min, spec.loudness_dbfs_max);
    MixedPair out;
    out.snr_db = snr_pick(rng);
    out.loudness_dbfs = loud_pick(rng);
    out.seed = pair_seed;

    auto [noisy, scaled] = mix_at_snr(clean, noise, out.snr_db);
    double gain = std::pow(10.0, (out.loudness_dbfs - measure_dbfs(noisy)) / 20.0);
    double peak = 0.0;
    for (double v : noisy.samples) peak = std::max(peak, std::abs(v) * gain);
    if (peak > 0.99) {  // back off so 16-bit WAV I/O never clips the pair
        gain *= 0.99 / peak;
        out.loudness_dbfs = measure_dbfs(noisy) + 20.0 * std::log10(gain);
    }
    out.noisy = noisy;
    out.clean = clean;
    for (auto& v : out.noisy.samples) v *= gain;
    for (auto& v : out.clean.samples) v *= gain;
    return out;
}

std::vector<ManifestEntry> synth_pairset(const std::vector<AudioBuffer>& sources,
                                         const std::vector<AudioBuffer>& noises,
                                         const MixSpec& spec, const std::string& out_dir) {
    spec.validate();
    std::filesystem::create_directories(out_dir);
    std::vector<ManifestEntry> manifest;
    for (int i = 0; i < spec.num_pairs; ++i) {
        MixedPair pair = synth_pair(sources, noises, spec, i);
        std::ostringstream stem;
        stem << "pair_" << std::setw(4) << std::setfill('0') << i;
        ManifestEntry e;
        e.noisy_path = (std::filesystem::path(out_dir) / (stem.str() + "_noisy.wav")).string();
        e.clean_path = (std::filesystem::path(out_dir) / (stem.str() + "_clean.wav")).string();
        e.snr_db = pair.snr_db;
        e.loudness_dbfs = pair.loudness_dbfs;
        e.seed = pair.seed;
        write_wav(e.noisy_path, pair.noisy);
        write_wav(e.clean_path, pair.clean);
        manifest.push_back(e);
    }
    write_manifest((std::filesystem::path(out_dir) / "manifest.txt").string(), manifest);
    return manifest;
}

std::vector<ManifestEntry> synth_toy_pairset(const MixSpec& spec, const std::string& out_dir) {
    std::vector<AudioBuffer> sources;
    std::vector<AudioBuffer> noises;
    for (int i = 0; i < 8; ++i) sources.push_back(toy_speech(3.0, spec.seed * 131 + i));
    for (int i = 0; i < 8; ++i) noises.push_back(toy_noise(3.0, spec.seed * 137 + i));
    return synth_pairset(sources, noises, spec, out_dir);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open manifest: " + path);
    std::vector<ManifestEntry> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        ManifestEntry e;
        if (!(ss >> e.noisy_path >> e.clean_path >> e.snr_db >> e.loudness_dbfs >> e.seed))
            throw std::runtime_error("malformed manifest line: " + line);
        out.push_back(e);
    }
    return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot create manifest: " + path);
    f.precision(17);
    for (const auto& e : entries)
        f << e.noisy_path << " " << e.clean_path << " " << e.snr_db << " " << e.loudness_dbfs
          << " " << e.seed << "\n";
}

}  // namespace neurodenoise
