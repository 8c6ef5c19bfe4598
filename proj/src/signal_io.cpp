// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "auxive/signal_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace auxive {

namespace {

constexpr uint16_t kFormatPcm = 0x0001;
constexpr uint16_t kFormatFloat = 0x0003;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

int32_t sign_extend_24(uint32_t v) {
  if (v & 0x800000) v |= 0xFF000000u;
  return static_cast<int32_t>(v);
}

[[noreturn]] void bad_wav(const std::filesystem::path& path,
                          const std::string& what) {
  throw std::runtime_error("read_wav: " + path.string() + ": " + what);
}

}  // namespace

MultichannelSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad_wav(path, "cannot open file");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    bad_wav(path, "not a RIFF/WAVE file");

  uint16_t format = 0, num_channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  size_t data_off = 0, data_len = 0;

  size_t off = 12;
  while (off + 8 <= n) {
    const char* id = bytes.data() + off;
    uint32_t len = read_u32(p + off + 4);
    size_t body = off + 8;
    if (body + len > n) len = static_cast<uint32_t>(n - body);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) bad_wav(path, "fmt chunk too short");
      format = read_u16(p + body);
      num_channels = read_u16(p + body + 2);
      sample_rate = read_u32(p + body + 4);
      bits = read_u16(p + body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) bad_wav(path, "extensible fmt chunk too short");
        format = read_u16(p + body + 24);  // first two bytes of the subformat
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    off = body + len + (len & 1);  // chunks are word aligned
  }

  if (!have_fmt) bad_wav(path, "missing fmt chunk");
  if (data_off == 0) bad_wav(path, "missing data chunk");
  if (num_channels == 0) bad_wav(path, "zero channels");
  if (sample_rate == 0) bad_wav(path, "zero sample rate");

  const int bytes_per_sample = bits / 8;
  if (bytes_per_sample == 0) bad_wav(path, "zero bits per sample");
  const size_t frame_bytes =
      static_cast<size_t>(bytes_per_sample) * num_channels;
  const size_t num_frames = data_len / frame_bytes;
  if (num_frames == 0) bad_wav(path, "zero-length audio");

  MultichannelSignal out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.channels.assign(num_channels, std::vector<double>(num_frames));

  const unsigned char* d = p + data_off;
  auto decode = [&](size_t idx) -> double {
    const unsigned char* s = d + idx * bytes_per_sample;
    if (format == kFormatPcm) {
      switch (bits) {
        case 16:
          return static_cast<int16_t>(read_u16(s)) / 32768.0;
        case 24:
          return sign_extend_24(static_cast<uint32_t>(s[0]) | s[1] << 8 |
                                s[2] << 16) /
                 8388608.0;
        case 32:
          return static_cast<int32_t>(read_u32(s)) / 2147483648.0;
        default:
          bad_wav(path, "unsupported PCM depth " + std::to_string(bits));
      }
    } else if (format == kFormatFloat) {
      if (bits == 32) {
        float f;
        std::memcpy(&f, s, 4);
        return f;
      }
      if (bits == 64) {
        double f;
        std::memcpy(&f, s, 8);
        return f;
      }
      bad_wav(path, "unsupported float depth " + std::to_string(bits));
    }
    bad_wav(path, "unsupported codec " + std::to_string(format));
  };

  for (size_t t = 0; t < num_frames; ++t)
    for (int c = 0; c < num_channels; ++c)
      out.channels[c][t] = decode(t * num_channels + c);
  return out;
}

std::size_t write_wav(const MultichannelSignal& signal,
                      const std::filesystem::path& path, WavEncoding encoding) {
  const int nc = signal.num_channels();
  const size_t ns = signal.num_samples();
  if (nc == 0 || ns == 0)
    throw std::invalid_argument("write_wav: empty signal");
  for (const auto& ch : signal.channels)
    if (ch.size() != ns)
      throw std::invalid_argument("write_wav: channel length mismatch");
  if (signal.sample_rate <= 0)
    throw std::invalid_argument("write_wav: invalid sample rate");

  uint16_t format = kFormatPcm, bits = 16;
  switch (encoding) {
    case WavEncoding::Pcm16: bits = 16; break;
    case WavEncoding::Pcm24: bits = 24; break;
    case WavEncoding::Pcm32: bits = 32; break;
    case WavEncoding::Float32: format = kFormatFloat; bits = 32; break;
  }
  const int bytes_per_sample = bits / 8;
  const uint32_t data_len =
      static_cast<uint32_t>(ns * nc * static_cast<size_t>(bytes_per_sample));

  std::string out;
  out.reserve(44 + data_len);
  out.append("RIFF");
  put_u32(out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, static_cast<uint16_t>(nc));
  put_u32(out, static_cast<uint32_t>(signal.sample_rate));
  put_u32(out, static_cast<uint32_t>(signal.sample_rate) * nc *
                   bytes_per_sample);
  put_u16(out, static_cast<uint16_t>(nc * bytes_per_sample));
  put_u16(out, bits);
  out.append("data");
  put_u32(out, data_len);

  std::size_t clipped = 0;
  auto encode = [&](double x) {
    if (format == kFormatFloat) {
      float f = static_cast<float>(x);
      char b[4];
      std::memcpy(b, &f, 4);
      out.append(b, 4);
      return;
    }
    if (x > 1.0 || x < -1.0) ++clipped;
    switch (bits) {
      case 16: {
        double v = std::rint(x * 32768.0);
        int32_t q = static_cast<int32_t>(std::clamp(v, -32768.0, 32767.0));
        put_u16(out, static_cast<uint16_t>(q & 0xFFFF));
        break;
      }
      case 24: {
        double v = std::rint(x * 8388608.0);
        int32_t q = static_cast<int32_t>(std::clamp(v, -8388608.0, 8388607.0));
        out.push_back(static_cast<char>(q & 0xFF));
        out.push_back(static_cast<char>((q >> 8) & 0xFF));
        out.push_back(static_cast<char>((q >> 16) & 0xFF));
        break;
      }
      case 32: {
        double v = std::rint(x * 2147483648.0);
        int64_t q = static_cast<int64_t>(
            std::clamp(v, -2147483648.0, 2147483647.0));
        put_u32(out, static_cast<uint32_t>(q & 0xFFFFFFFF));
        break;
      }
    }
  };

  for (size_t t = 0; t < ns; ++t)
    for (int c = 0; c < nc; ++c) encode(signal.channels[c][t]);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_wav: write failed " + path.string());

  if (clipped > 0)
    std::clog << "write_wav: clipped " << clipped << " samples in "
              << path.string() << "\n";
  return clipped;
}

ScoreTable read_score_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("read_score_table: cannot open " + path.string());

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
  };

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_score_table: empty table " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line);
  if (header.size() < 2 || header[0] != "frame")
    throw std::runtime_error("read_score_table: bad header in " +
                             path.string());

  ScoreTable table;
  table.speaker_ids.assign(header.begin() + 1, header.end());

  size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw std::runtime_error("read_score_table: ragged row " +
                               std::to_string(row) + " in " + path.string());
    std::vector<double> vals(cells.size() - 1);
    long frame = 0;
    try {
      size_t pos = 0;
      frame = std::stol(cells[0], &pos);
      if (pos != cells[0].size()) throw std::invalid_argument("trailing");
      for (size_t j = 1; j < cells.size(); ++j) {
        vals[j - 1] = std::stod(cells[j], &pos);
        if (pos != cells[j].size()) throw std::invalid_argument("trailing");
      }
    } catch (const std::exception&) {
      throw std::runtime_error("read_score_table: non-numeric cell in row " +
                               std::to_string(row) + " of " + path.string());
    }
    if (!table.frames.empty() && frame <= table.frames.back())
      throw std::runtime_error(
          "read_score_table: frame indices not increasing at row " +
          std::to_string(row) + " of " + path.string());
    table.frames.push_back(frame);
    table.scores.push_back(std::move(vals));
    ++row;
  }
  if (table.frames.empty())
    throw std::runtime_error("read_score_table: empty table " + path.string());
  return table;
}

}  // namespace auxive
