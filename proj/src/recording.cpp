#include "aperture/recording.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "aperture/errors.hpp"

namespace aperture {

static_assert(std::endian::native == std::endian::little, "WAV/raw I/O assumes a little-endian host");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
void put(std::string& buf, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t offset) {
  if (offset + sizeof(T) > buf.size()) throw IoError("truncated file");
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string interleave_float32(const MultichannelRecording& rec) {
  std::string data;
  data.reserve(rec.frames() * rec.channel_count() * 4);
  for (std::size_t n = 0; n < rec.frames(); ++n) {
    for (const auto& ch : rec.channels) put(data, static_cast<float>(ch[n]));
  }
  return data;
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".hdr";
  return p;
}

}  // namespace

void MultichannelRecording::validate() const {
  if (!(std::isfinite(sample_rate) && sample_rate > 0.0)) throw ValidationError("recording sample rate must be > 0");
  if (channels.empty()) throw ValidationError("recording has no channels");
  for (const auto& ch : channels) {
    if (ch.size() != channels.front().size()) throw ValidationError("recording channels differ in length");
    for (double x : ch) {
      if (!std::isfinite(x)) throw ValidationError("recording contains non-finite samples");
    }
  }
}

MultichannelRecording average_recordings(std::span<const MultichannelRecording> recordings) {
  if (recordings.empty()) throw ValidationError("nothing to average");
  MultichannelRecording out = recordings.front();
  for (std::size_t r = 1; r < recordings.size(); ++r) {
    const auto& rec = recordings[r];
    if (rec.channel_count() != out.channel_count() || rec.frames() != out.frames() ||
        rec.sample_rate != out.sample_rate) {
      throw ValidationError("repetitions differ in shape or sample rate");
    }
    for (std::size_t c = 0; c < out.channel_count(); ++c) {
      for (std::size_t n = 0; n < out.frames(); ++n) out.channels[c][n] += rec.channels[c][n];
    }
  }
  const double inv = 1.0 / static_cast<double>(recordings.size());
  for (auto& ch : out.channels) {
    for (double& x : ch) x *= inv;
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const MultichannelRecording& recording) {
  recording.validate();
  const auto channels = static_cast<std::uint16_t>(recording.channel_count());
  const auto rate = static_cast<std::uint32_t>(std::lround(recording.sample_rate));
  if (static_cast<double>(rate) != recording.sample_rate) {
    throw ValidationError("WAV requires an integer sample rate");
  }
  const std::string data = interleave_float32(recording);

  std::string buf;
  buf += "RIFF";
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(4 + (8 + 18) + (8 + 4) + (8 + data.size())));
  buf += "WAVE";
  buf += "fmt ";
  put<std::uint32_t>(buf, 18);
  put<std::uint16_t>(buf, kFormatFloat);
  put<std::uint16_t>(buf, channels);
  put<std::uint32_t>(buf, rate);
  put<std::uint32_t>(buf, rate * channels * 4u);
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(channels * 4));
  put<std::uint16_t>(buf, 32);
  put<std::uint16_t>(buf, 0);
  buf += "fact";
  put<std::uint32_t>(buf, 4);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(recording.frames()));
  buf += "data";
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(data.size()));
  buf += data;
  dump(path, buf);
}

MultichannelRecording read_wav(const std::filesystem::path& path) {
  const std::string buf = slurp(path);
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0) {
    throw IoError(path.string() + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_offset = 0, data_size = 0;
  bool have_fmt = false, have_data = false;

  for (std::size_t pos = 12; pos + 8 <= buf.size();) {
    const std::string id = buf.substr(pos, 4);
    const auto size = get<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = get<std::uint16_t>(buf, body);
      channels = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw IoError(path.string() + ": short extensible fmt chunk");
        format = get<std::uint16_t>(buf, body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data_offset = body;
      data_size = std::min<std::size_t>(size, buf.size() - body);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || !have_data) throw IoError(path.string() + ": missing fmt or data chunk");
  if (channels == 0 || rate == 0) throw IoError(path.string() + ": invalid channel count or sample rate");

  const std::size_t bytes = bits / 8;
  const bool is_float = format == kFormatFloat && (bits == 32 || bits == 64);
  const bool is_pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  if (!is_float && !is_pcm) {
    throw IoError(path.string() + ": unsupported WAV encoding (format " + std::to_string(format) + ", " +
                  std::to_string(bits) + " bits)");
  }
  const std::size_t frames = data_size / (bytes * channels);
  MultichannelRecording rec{static_cast<double>(rate),
                            std::vector<std::vector<double>>(channels, std::vector<double>(frames))};
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = data_offset + (n * channels + c) * bytes;
      double v = 0.0;
      if (is_float) {
        v = bits == 32 ? static_cast<double>(get<float>(buf, off)) : get<double>(buf, off);
      } else if (bits == 16) {
        v = get<std::int16_t>(buf, off) / 32768.0;
      } else if (bits == 24) {
        const auto b0 = static_cast<std::uint8_t>(buf[off]);
        const auto b1 = static_cast<std::uint8_t>(buf[off + 1]);
        const auto b2 = static_cast<std::uint8_t>(buf[off + 2]);
        std::int32_t s = b0 | (b1 << 8) | (b2 << 16);
        if (s & 0x800000) s -= 0x1000000;
        v = s / 8388608.0;
      } else {
        v = get<std::int32_t>(buf, off) / 2147483648.0;
      }
      rec.channels[c][n] = v;
    }
  }
  return rec;
}

void write_raw(const std::filesystem::path& path, const MultichannelRecording& recording) {
  recording.validate();
  dump(path, interleave_float32(recording));
  std::ostringstream hdr;
  hdr.precision(17);
  hdr << "channels " << recording.channel_count() << "\n"
      << "sample_rate " << recording.sample_rate << "\n"
      << "frames " << recording.frames() << "\n";
  dump(sidecar(path), hdr.str());
}

MultichannelRecording read_raw(const std::filesystem::path& path) {
  std::istringstream hdr(slurp(sidecar(path)));
  std::size_t channels = 0, frames = 0;
  double rate = 0.0;
  std::string line;
  while (std::getline(hdr, line)) {
    for (char& ch : line) {
      if (ch == '=' || ch == ':') ch = ' ';
    }
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    if (key == "channels") fields >> channels;
    else if (key == "sample_rate") fields >> rate;
    else if (key == "frames") fields >> frames;
  }
  if (channels == 0 || !(rate > 0.0)) throw IoError(sidecar(path).string() + ": missing channels or sample_rate");
  const std::string data = slurp(path);
  if (data.size() != channels * frames * 4) {
    throw IoError(path.string() + ": size does not match header (" + std::to_string(channels) + " x " +
                  std::to_string(frames) + " float32)");
  }
  MultichannelRecording rec{rate, std::vector<std::vector<double>>(channels, std::vector<double>(frames))};
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      rec.channels[c][n] = get<float>(data, (n * channels + c) * 4);
    }
  }
  return rec;
}

MultichannelRecording read_recording(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  return path.extension() == ".wav" ? read_wav(path) : read_raw(path);
}

void write_recording(const std::filesystem::path& path, const MultichannelRecording& recording) {
  if (path.extension() == ".wav") write_wav(path, recording);
  else write_raw(path, recording);
}

}  // namespace aperture
