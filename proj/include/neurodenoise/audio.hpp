#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace neurodenoise {

constexpr int kSampleRate = 16000;

/// Mono waveform at 16 kHz, samples nominally in [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = kSampleRate;

    std::size_t size() const { return samples.size(); }
    double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Reads a RIFF PCM WAV file. Requires 16-bit signed mono at 16 kHz;
/// samples are mapped to [-1, 1) by division by 32768.
AudioBuffer read_wav(const std::string& path);

/// Writes 16-bit signed mono PCM at 16 kHz. Samples are clamped to [-1, 1).
void write_wav(const std::string& path, const AudioBuffer& audio);

}  // namespace neurodenoise
