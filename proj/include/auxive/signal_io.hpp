// Copyright 2026 The auxive authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef AUXIVE_SIGNAL_IO_HPP
#define AUXIVE_SIGNAL_IO_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace auxive {

// Multichannel audio held as one vector of samples per channel, in [-1, 1]
// nominal range (values outside are legal in memory and clipped on PCM write).
struct MultichannelSignal {
  std::vector<std::vector<double>> channels;
  int sample_rate = 0;

  int num_channels() const { return static_cast<int>(channels.size()); }
  std::size_t num_samples() const {
    return channels.empty() ? 0 : channels.front().size();
  }
};

enum class WavEncoding { Pcm16, Pcm24, Pcm32, Float32 };

// Reads a RIFF/WAVE file (PCM 16/24/32-bit or IEEE float 32/64-bit).
// Integer samples are normalized by 2^(bits-1). Throws std::runtime_error on
// malformed headers, unsupported codecs, or zero-length audio.
MultichannelSignal read_wav(const std::filesystem::path& path);

// Writes a RIFF/WAVE file. PCM samples outside [-1, 1] are clipped and a
// single warning line with the clip count goes to stderr. Returns the number
// of clipped samples.
std::size_t write_wav(const MultichannelSignal& signal,
                      const std::filesystem::path& path,
                      WavEncoding encoding = WavEncoding::Pcm16);

// Per-frame scores for a set of enrolled speakers, one column per speaker.
struct ScoreTable {
  std::vector<std::string> speaker_ids;
  std::vector<long> frames;                 // strictly increasing
  std::vector<std::vector<double>> scores;  // [row][speaker]

  std::size_t num_frames() const { return frames.size(); }
  std::size_t num_speakers() const { return speaker_ids.size(); }
};

// Reads a CSV score table with header "frame,<id1>,<id2>,...". Throws on an
// empty table, ragged rows, non-numeric cells, or non-increasing frame
// indices.
ScoreTable read_score_table(const std::filesystem::path& path);

}  // namespace auxive

#endif
