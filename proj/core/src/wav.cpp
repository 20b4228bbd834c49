#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "fbsd/audio.hpp"

namespace fbsd {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;
constexpr std::size_t kChunk = 4096;

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::size_t bytes_per_sample(SampleFormat f) {
  switch (f) {
    case SampleFormat::kPcm16: return 2;
    case SampleFormat::kPcm24: return 3;
    case SampleFormat::kFloat32: return 4;
  }
  return 4;
}

float decode(SampleFormat f, const unsigned char* p) {
  switch (f) {
    case SampleFormat::kPcm16:
      return static_cast<float>(static_cast<std::int16_t>(le16(p))) / 32768.0f;
    case SampleFormat::kPcm24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(v) / 8388608.0f;
    }
    case SampleFormat::kFloat32: {
      const std::uint32_t bits = le32(p);
      float v = 0.0f;
      std::memcpy(&v, &bits, sizeof(float));
      return v;
    }
  }
  return 0.0f;
}

void encode(SampleFormat f, float s, std::string& out) {
  if (f == SampleFormat::kFloat32) {
    std::uint32_t u = 0;
    std::memcpy(&u, &s, sizeof(float));
    put32(out, u);
    return;
  }
  const double clipped = std::clamp(static_cast<double>(s), -1.0, 1.0);
  if (f == SampleFormat::kPcm16) {
    const long v = std::clamp(std::lround(clipped * 32768.0), -32768L, 32767L);
    put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
  } else {
    const long v = std::clamp(std::lround(clipped * 8388608.0), -8388608L, 8388607L);
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

struct WavReader::Impl {
  std::ifstream in;
  std::string where;
  int sample_rate = 0;
  SampleFormat format = SampleFormat::kFloat32;
  std::size_t total = 0;
  std::size_t consumed = 0;
  std::vector<unsigned char> scratch;
};

WavReader::WavReader(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.where = path.string() + ": ";
  s.in.open(path, std::ios::binary);
  if (!s.in) throw WavError("cannot open " + path.string());
  s.in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::size_t>(s.in.tellg());
  s.in.seekg(0);

  unsigned char riff[12];
  if (!s.in.read(reinterpret_cast<char*>(riff), 12) || std::memcmp(riff, "RIFF", 4) != 0 ||
      std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw WavError(s.where + "not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t tag = 0, channels = 0, bits = 0;
  std::size_t pos = 12;
  while (true) {
    unsigned char head[8];
    if (!s.in.read(reinterpret_cast<char*>(head), 8)) {
      throw WavError(s.where + "missing data chunk");
    }
    const std::uint32_t size = le32(head + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(head, "fmt ", 4) == 0) {
      if (size < 16) throw WavError(s.where + "short fmt chunk");
      std::vector<unsigned char> f(size);
      if (!s.in.read(reinterpret_cast<char*>(f.data()), size)) {
        throw WavError(s.where + "truncated fmt chunk");
      }
      tag = le16(f.data());
      channels = le16(f.data() + 2);
      s.sample_rate = static_cast<int>(le32(f.data() + 4));
      bits = le16(f.data() + 14);
      if (tag == kFormatExtensible) {
        if (size < 40) throw WavError(s.where + "short extensible fmt chunk");
        tag = le16(f.data() + 24);
      }
      have_fmt = true;
      if (size & 1u) s.in.seekg(1, std::ios::cur);
    } else if (std::memcmp(head, "data", 4) == 0) {
      if (!have_fmt) throw WavError(s.where + "data chunk before fmt chunk");
      const std::size_t avail = file_size > body ? file_size - body : 0;
      // Streaming writers sometimes leave the size at 0 or 0xFFFFFFFF.
      const std::size_t data_size = (size == 0 || size > avail) ? avail : size;
      if (channels != 1) {
        throw WavError(s.where + "expected mono audio, file has " + std::to_string(channels) +
                       " channels");
      }
      if (tag == kFormatPcm && bits == 16) {
        s.format = SampleFormat::kPcm16;
      } else if (tag == kFormatPcm && bits == 24) {
        s.format = SampleFormat::kPcm24;
      } else if (tag == kFormatFloat && bits == 32) {
        s.format = SampleFormat::kFloat32;
      } else {
        throw WavError(s.where + "unsupported sample format (tag " + std::to_string(tag) +
                       ", " + std::to_string(bits) + " bits)");
      }
      if (s.sample_rate <= 0) throw WavError(s.where + "invalid sample rate");
      s.total = data_size / bytes_per_sample(s.format);
      return;
    } else {
      s.in.seekg(size + (size & 1u), std::ios::cur);
    }
    pos = body + size + (size & 1u);
  }
}

WavReader::~WavReader() = default;

int WavReader::sample_rate() const { return impl_->sample_rate; }
SampleFormat WavReader::format() const { return impl_->format; }
std::size_t WavReader::total_samples() const { return impl_->total; }
std::size_t WavReader::remaining() const { return impl_->total - impl_->consumed; }

std::size_t WavReader::read(std::span<float> out) {
  Impl& s = *impl_;
  const std::size_t n = std::min(out.size(), remaining());
  const std::size_t width = bytes_per_sample(s.format);
  s.scratch.resize(n * width);
  if (n > 0 && !s.in.read(reinterpret_cast<char*>(s.scratch.data()),
                          static_cast<std::streamsize>(n * width))) {
    throw WavError(s.where + "unexpected end of data");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const float v = decode(s.format, s.scratch.data() + i * width);
    if (!std::isfinite(v)) throw WavError(s.where + "non-finite sample");
    out[i] = v;
  }
  s.consumed += n;
  return n;
}

// ---------------------------------------------------------------------------

struct WavWriter::Impl {
  std::ofstream out;
  std::string path;
  SampleFormat format = SampleFormat::kFloat32;
  std::size_t written = 0;
  bool open = false;
  std::string buffer;
};

WavWriter::WavWriter(const std::filesystem::path& path, int sample_rate, SampleFormat format)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  if (sample_rate <= 0) throw std::invalid_argument("WavWriter: sample rate must be positive");
  s.path = path.string();
  s.format = format;
  s.out.open(path, std::ios::binary | std::ios::trunc);
  if (!s.out) throw WavError("cannot open " + s.path + " for writing");

  const auto block = static_cast<std::uint32_t>(bytes_per_sample(format));
  std::string h;
  h += "RIFF";
  put32(h, 36);
  h += "WAVEfmt ";
  put32(h, 16);
  put16(h, format == SampleFormat::kFloat32 ? kFormatFloat : kFormatPcm);
  put16(h, 1);
  put32(h, static_cast<std::uint32_t>(sample_rate));
  put32(h, static_cast<std::uint32_t>(sample_rate) * block);
  put16(h, static_cast<std::uint16_t>(block));
  put16(h, static_cast<std::uint16_t>(8 * block));
  h += "data";
  put32(h, 0);
  s.out.write(h.data(), static_cast<std::streamsize>(h.size()));
  s.open = true;
}

WavWriter::~WavWriter() {
  try {
    close();
  } catch (...) {
  }
}

void WavWriter::write(std::span<const float> samples) {
  Impl& s = *impl_;
  if (!s.open) throw WavError("write on closed WAV writer: " + s.path);
  s.buffer.clear();
  for (float v : samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("WavWriter: non-finite sample");
    encode(s.format, v, s.buffer);
  }
  s.out.write(s.buffer.data(), static_cast<std::streamsize>(s.buffer.size()));
  if (!s.out) throw WavError("write failed: " + s.path);
  s.written += samples.size();
}

void WavWriter::close() {
  Impl& s = *impl_;
  if (!s.open) return;
  s.open = false;
  const auto data_size =
      static_cast<std::uint32_t>(s.written * bytes_per_sample(s.format));
  std::string v;
  put32(v, 36 + data_size);
  s.out.seekp(4);
  s.out.write(v.data(), 4);
  v.clear();
  put32(v, data_size);
  s.out.seekp(40);
  s.out.write(v.data(), 4);
  s.out.close();
  if (!s.out) throw WavError("failed to finalize " + s.path);
}

std::size_t WavWriter::samples_written() const { return impl_->written; }

// ---------------------------------------------------------------------------

AudioBuffer read_wav(const std::filesystem::path& path) {
  WavReader reader(path);
  AudioBuffer audio;
  audio.sample_rate = reader.sample_rate();
  audio.samples.resize(reader.total_samples());
  std::size_t got = 0;
  while (got < audio.samples.size()) {
    const std::size_t n = reader.read(
        std::span<float>(audio.samples).subspan(got, std::min(kChunk, audio.samples.size() - got)));
    if (n == 0) break;
    got += n;
  }
  audio.samples.resize(got);
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               SampleFormat format) {
  audio.validate();
  WavWriter writer(path, audio.sample_rate, format);
  writer.write(audio.samples);
  writer.close();
}

}  // namespace fbsd
