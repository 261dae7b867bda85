#include "flaf/wav.hpp"

#include "flaf/error.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

namespace flaf {

namespace {

std::uint32_t le32(const unsigned char* p)
{
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p)
{
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::ostream& os, std::uint32_t v)
{
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

void put16(std::ostream& os, std::uint16_t v)
{
    const std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    os.write(b.data(), 2);
}

} // namespace

WavData read_wav_pcm16(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open WAV file: " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const auto bad = [&](const std::string& why) { return IoError(path.string() + ": " + why); };

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw bad("not a RIFF/WAVE file");

    WavData out;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        const std::size_t size = le32(hdr + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) throw bad("truncated chunk");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (size < 16) throw bad("short fmt chunk");
            const unsigned char* f = bytes.data() + body;
            if (le16(f) != 1) throw bad("only PCM encoding is supported");
            if (le16(f + 2) != 1) throw bad("only mono files are supported");
            if (le16(f + 14) != 16) throw bad("only 16-bit samples are supported");
            out.sample_rate = le32(f + 4);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (!have_fmt) throw bad("data chunk before fmt chunk");
            out.samples.resize(size / 2);
            for (std::size_t i = 0; i < out.samples.size(); ++i)
                out.samples[i] = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
            return out;
        }
        pos = body + size + (size & 1);
    }
    throw bad("no data chunk");
}

void write_wav_pcm16(const std::filesystem::path& path, const WavData& wav)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot create WAV file: " + path.string());
    const auto data_bytes = static_cast<std::uint32_t>(wav.samples.size() * 2);
    os.write("RIFF", 4);
    put32(os, 36 + data_bytes);
    os.write("WAVEfmt ", 8);
    put32(os, 16);
    put16(os, 1);
    put16(os, 1);
    put32(os, wav.sample_rate);
    put32(os, wav.sample_rate * 2);
    put16(os, 2);
    put16(os, 16);
    os.write("data", 4);
    put32(os, data_bytes);
    for (const auto s : wav.samples) put16(os, static_cast<std::uint16_t>(s));
    if (!os) throw IoError("failed writing WAV file: " + path.string());
}

} // namespace flaf
