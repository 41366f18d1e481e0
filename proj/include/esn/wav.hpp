#pragma once

#include <filesystem>
#include <vector>

namespace esn::dsp {

/// Mono audio in [-1, 1] with its sampling rate.
struct AudioSignal {
    std::vector<double> samples;
    int sample_rate = 0;
};

/// Reads a mono 16-bit signed little-endian PCM WAV file. The sample rate is
/// taken from the header; no resampling is performed. Multi-channel or
/// non-PCM files are rejected.
AudioSignal read_wav(const std::filesystem::path& path);

/// Writes a mono 16-bit PCM WAV file. Samples are clamped to [-1, 1].
void write_wav16(const std::filesystem::path& path, const AudioSignal& signal);

}  // namespace esn::dsp
