#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "neurodenoise/audio.hpp"

namespace neurodenoise {

struct MixSpec {
    double snr_db_min = -5.0;
    double snr_db_max = 20.0;
    double loudness_dbfs_min = -35.0;
    double loudness_dbfs_max = -15.0;
    double clip_seconds = 4.0;
    double gap_seconds = 0.2;
    int num_pairs = 16;
    uint64_t seed = 0;

    void validate() const;
};

/// One line of a pairset manifest.
struct ManifestEntry {
    std::string noisy_path;
    std::string clean_path;
    double snr_db = 0.0;
    double loudness_dbfs = 0.0;
    uint64_t seed = 0;
};

/// Scales `noise` so 10*log10(P_clean / P_noise) == snr_db and returns
/// (clean + scaled noise, scaled noise). Errors on length mismatch or a
/// silent input.
std::pair<AudioBuffer, AudioBuffer> mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise,
                                               double snr_db);

/// Pure gain so that 20*log10(rms) == target_dbfs. Errors on silence.
AudioBuffer loudness_normalize(const AudioBuffer& audio, double target_dbfs);

/// RMS level in dBFS.
double measure_dbfs(const AudioBuffer& audio);

/// Band-limited sawtooth bursts with pitch/amplitude contours — a stand-in
/// for speech with strong harmonic structure and temporal gaps.
AudioBuffer toy_speech(double seconds, uint64_t seed);

/// Amplitude-modulated shaped noise — a stand-in for nonstationary noise.
AudioBuffer toy_noise(double seconds, uint64_t seed);

/// Builds one (noisy, clean) pair from corpora: clean clips concatenated with
/// silence gaps up to the clip length (wrapping around with re-randomized
/// offsets on exhaustion), noise mixed at a sampled SNR, both scaled to a
/// sampled loudness. Deterministic under (spec.seed, index).
struct MixedPair {
    AudioBuffer noisy;
    AudioBuffer clean;
    double snr_db = 0.0;
    double loudness_dbfs = 0.0;
    uint64_t seed = 0;
};

MixedPair synth_pair(const std::vector<AudioBuffer>& sources, const std::vector<AudioBuffer>& noises,
                     const MixSpec& spec, int index);

/// Writes num_pairs WAV pairs plus `manifest.txt` into out_dir; returns the
/// manifest. Line format: noisy clean snr_db loudness_dbfs seed.
std::vector<ManifestEntry> synth_pairset(const std::vector<AudioBuffer>& sources,
                                         const std::vector<AudioBuffer>& noises,
                                         const MixSpec& spec, const std::string& out_dir);

/// Generates a fully self-contained toy corpus (toy_speech/toy_noise sources)
/// and synthesizes a pairset from it.
std::vector<ManifestEntry> synth_toy_pairset(const MixSpec& spec, const std::string& out_dir);

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

}  // namespace neurodenoise
