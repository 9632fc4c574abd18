#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "aperture/errors.hpp"
#include "aperture/recording.hpp"

using namespace aperture;
namespace fs = std::filesystem;

namespace {

MultichannelRecording random_recording(std::size_t channels, std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MultichannelRecording r{450e3, std::vector<std::vector<double>>(channels, std::vector<double>(frames))};
  for (auto& ch : r.channels)
    for (double& x : ch) x = u(rng);
  return r;
}

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("aperture_test_" + name); }

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

}  // namespace

TEST_CASE("WAV round trip keeps float32 precision") {
  const auto rec = random_recording(30, 1200, 1);
  const auto path = scratch("roundtrip.wav");
  write_wav(path, rec);
  const auto back = read_wav(path);
  CHECK(back.sample_rate == 450e3);
  REQUIRE(back.channel_count() == 30);
  REQUIRE(back.frames() == 1200);
  for (std::size_t c = 0; c < 30; ++c)
    for (std::size_t i = 0; i < 1200; ++i)
      CHECK(back.channels[c][i] == static_cast<double>(static_cast<float>(rec.channels[c][i])));
  fs::remove(path);
}

TEST_CASE("raw round trip with sidecar header") {
  const auto rec = random_recording(4, 333, 2);
  const auto path = scratch("roundtrip.raw");
  write_recording(path, rec);
  CHECK(fs::exists(path.string() + ".hdr"));
  const auto back = read_recording(path);
  REQUIRE(back.channel_count() == 4);
  REQUIRE(back.frames() == 333);
  CHECK(back.sample_rate == 450e3);
  CHECK(back.channels[3][100] == static_cast<double>(static_cast<float>(rec.channels[3][100])));
  fs::remove(path);
  fs::remove(path.string() + ".hdr");
}

TEST_CASE("16-bit PCM WAV is scaled to [-1, 1)") {
  const auto path = scratch("pcm16.wav");
  {
    std::ofstream out(path, std::ios::binary);
    const std::int16_t samples[] = {0, 16384, -32768, 32767};  // 2 channels x 2 frames
    out.write("RIFF", 4);
    put<std::uint32_t>(out, 36 + sizeof samples);
    out.write("WAVEfmt ", 8);
    put<std::uint32_t>(out, 16);
    put<std::uint16_t>(out, 1);
    put<std::uint16_t>(out, 2);
    put<std::uint32_t>(out, 48000);
    put<std::uint32_t>(out, 48000 * 4);
    put<std::uint16_t>(out, 4);
    put<std::uint16_t>(out, 16);
    out.write("data", 4);
    put<std::uint32_t>(out, sizeof samples);
    out.write(reinterpret_cast<const char*>(samples), sizeof samples);
  }
  const auto r = read_wav(path);
  CHECK(r.sample_rate == 48000.0);
  REQUIRE(r.channel_count() == 2);
  REQUIRE(r.frames() == 2);
  CHECK(r.channels[0][0] == 0.0);
  CHECK(r.channels[1][0] == 0.5);
  CHECK(r.channels[0][1] == -1.0);
  CHECK(r.channels[1][1] == doctest::Approx(32767.0 / 32768.0));
  fs::remove(path);
}

TEST_CASE("malformed and missing recordings raise IoError") {
  const auto path = scratch("garbage.wav");
  {
    std::ofstream out(path, std::ios::binary);
    out << "this is not a wav file";
  }
  CHECK_THROWS_AS(read_wav(path), IoError);
  fs::remove(path);
  CHECK_THROWS_AS(read_recording(scratch("does_not_exist.wav")), IoError);
}

TEST_CASE("average_recordings and validation") {
  auto a = random_recording(2, 10, 3);
  auto b = a;
  for (auto& ch : b.channels)
    for (double& x : ch) x = -x;
  const std::vector<MultichannelRecording> reps{a, b};
  const auto m = average_recordings(reps);
  for (const auto& ch : m.channels)
    for (double x : ch) CHECK(x == 0.0);

  auto ragged = a;
  ragged.channels[1].pop_back();
  CHECK_THROWS_AS(ragged.validate(), ValidationError);
  const std::vector<MultichannelRecording> mismatch{a, random_recording(3, 10, 4)};
  CHECK_THROWS_AS(average_recordings(mismatch), ValidationError);
}
