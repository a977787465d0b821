#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "neurodenoise/audio.hpp"

using namespace neurodenoise;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("wav round trip preserves samples to 16-bit resolution") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-0.9, 0.9);
    AudioBuffer in;
    in.samples.resize(4000);
    for (auto& s : in.samples) s = dist(rng);

    std::string path = temp_path("nd_test_roundtrip.wav");
    write_wav(path, in);
    AudioBuffer out = read_wav(path);
    REQUIRE(out.samples.size() == in.samples.size());
    CHECK(out.sample_rate == kSampleRate);
    for (std::size_t i = 0; i < in.samples.size(); ++i)
        CHECK(std::abs(out.samples[i] - in.samples[i]) <= 0.5 / 32768.0 + 1e-12);
    std::filesystem::remove(path);
}

TEST_CASE("quantization maps known values exactly") {
    AudioBuffer in;
    in.samples = {0.0, 0.5, -0.5, 1.0, -1.0};
    std::string path = temp_path("nd_test_quant.wav");
    write_wav(path, in);
    AudioBuffer out = read_wav(path);
    CHECK(out.samples[0] == 0.0);
    CHECK(out.samples[1] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(out.samples[2] == doctest::Approx(-0.5).epsilon(1e-4));
    CHECK(out.samples[3] == doctest::Approx(32767.0 / 32768.0));  // clamped below +1
    CHECK(out.samples[4] == -1.0);
    std::filesystem::remove(path);
}

TEST_CASE("read_wav rejects missing and malformed files") {
    CHECK_THROWS_AS(read_wav(temp_path("nd_does_not_exist.wav")), std::runtime_error);

    std::string path = temp_path("nd_test_bad.wav");
    std::ofstream f(path, std::ios::binary);
    f << "this is not a wav file at all, just filler text padding";
    f.close();
    CHECK_THROWS_AS(read_wav(path), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("write then hand-check header layout") {
    AudioBuffer in;
    in.samples.assign(10, 0.25);
    std::string path = temp_path("nd_test_header.wav");
    write_wav(path, in);
    std::ifstream f(path, std::ios::binary);
    std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    REQUIRE(raw.size() == 44 + 20);
    CHECK(std::string(raw.begin(), raw.begin() + 4) == "RIFF");
    CHECK(std::string(raw.begin() + 8, raw.begin() + 12) == "WAVE");
    std::filesystem::remove(path);
}
