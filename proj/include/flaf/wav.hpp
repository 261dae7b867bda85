#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace flaf {

struct WavData {
    std::uint32_t sample_rate = 0;
    std::vector<std::int16_t> samples;
};

/// Reads a RIFF/WAVE file holding 16-bit PCM mono audio.
WavData read_wav_pcm16(const std::filesystem::path& path);
void write_wav_pcm16(const std::filesystem::path& path, const WavData& wav);

} // namespace flaf
