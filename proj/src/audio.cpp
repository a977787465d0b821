#include "neurodenoise/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace neurodenoise {

namespace {

uint32_t read_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ofstream& f, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open WAV file: " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
        std::memcmp(raw.data() + 8, "WAVE", 4) != 0) {
        throw std::runtime_error("not a RIFF/WAVE file: " + path);
    }

    int channels = 0;
    int sample_rate = 0;
    int bits = 0;
    int format = 0;
    const unsigned char* pcm = nullptr;
    std::size_t pcm_bytes = 0;

    std::size_t pos = 12;
    while (pos + 8 <= raw.size()) {
        const unsigned char* hdr = raw.data() + pos;
        uint32_t chunk_size = read_u32(hdr + 4);
        const unsigned char* body = hdr + 8;
        if (pos + 8 + chunk_size > raw.size()) break;
        if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_size >= 16) {
            format = read_u16(body);
            channels = read_u16(body + 2);
            sample_rate = static_cast<int>(read_u32(body + 4));
            bits = read_u16(body + 14);
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            pcm = body;
            pcm_bytes = chunk_size;
        }
        pos += 8 + chunk_size + (chunk_size & 1);
    }

    if (!pcm) throw std::runtime_error("WAV file has no data chunk: " + path);
    if (format != 1 || bits != 16)
        throw std::runtime_error("unsupported WAV encoding (need 16-bit PCM): " + path);
    if (channels != 1) throw std::runtime_error("unsupported channel count (need mono): " + path);
    if (sample_rate != kSampleRate)
        throw std::runtime_error("unsupported sample rate (need 16 kHz): " + path);

    AudioBuffer out;
    out.sample_rate = sample_rate;
    std::size_t n = pcm_bytes / 2;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int16_t v = static_cast<int16_t>(pcm[2 * i] | (pcm[2 * i + 1] << 8));
        out.samples[i] = static_cast<double>(v) / 32768.0;
    }
    return out;
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot create WAV file: " + path);

    uint32_t data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
    f.write("RIFF", 4);
    write_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    write_u32(f, 16);
    write_u16(f, 1);  // PCM
    write_u16(f, 1);  // mono
    write_u32(f, static_cast<uint32_t>(audio.sample_rate));
    write_u32(f, static_cast<uint32_t>(audio.sample_rate * 2));
    write_u16(f, 2);
    write_u16(f, 16);
    f.write("data", 4);
    write_u32(f, data_bytes);
    for (double s : audio.samples) {
        double v = std::clamp(s, -1.0, 32767.0 / 32768.0);
        int16_t q = static_cast<int16_t>(std::lrint(v * 32768.0));
        unsigned char b[2] = {static_cast<unsigned char>(q & 0xff),
                              static_cast<unsigned char>((q >> 8) & 0xff)};
        f.write(reinterpret_cast<const char*>(b), 2);
    }
    if (!f) throw std::runtime_error("failed writing WAV file: " + path);
}

}  // namespace neurodenoise
