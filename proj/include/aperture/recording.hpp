#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "aperture/signals.hpp"

namespace aperture {

/// N equally long channels sharing one sample rate.
struct MultichannelRecording {
  double sample_rate = kDefaultSampleRate;
  std::vector<std::vector<double>> channels;

  std::size_t channel_count() const { return channels.size(); }
  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
  Signal channel(std::size_t i) const { return {sample_rate, channels[i]}; }
  void validate() const;
};

/// Sample-wise mean of repetitions with identical shape.
MultichannelRecording average_recordings(std::span<const MultichannelRecording> recordings);

/// 32-bit IEEE float WAV (format tag 3), interleaved frames.
void write_wav(const std::filesystem::path& path, const MultichannelRecording& recording);
/// Reads float32/float64 and 16/24/32-bit PCM WAV, including the extensible
/// header variant. PCM is scaled to [-1, 1).
MultichannelRecording read_wav(const std::filesystem::path& path);

/// Raw little-endian float32 interleaved samples plus a sidecar text header
/// `<path>.hdr` with `channels`, `sample_rate` and `frames` lines.
void write_raw(const std::filesystem::path& path, const MultichannelRecording& recording);
MultichannelRecording read_raw(const std::filesystem::path& path);

/// Dispatches on extension: `.wav` is WAV, anything else raw + sidecar.
MultichannelRecording read_recording(const std::filesystem::path& path);
void write_recording(const std::filesystem::path& path, const MultichannelRecording& recording);

}  // namespace aperture
