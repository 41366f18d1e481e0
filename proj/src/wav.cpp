#include "esn/wav.hpp"

#include "esn/binary_io.hpp"
#include "esn/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

namespace esn::dsp {

using esn::detail::read_raw;
using esn::detail::write_raw;

namespace {

struct ChunkHeader {
    char id[4];
    std::uint32_t size;
};

ChunkHeader read_chunk_header(std::istream& in, const std::string& file)
{
    ChunkHeader h{};
    in.read(h.id, 4);
    if (!in) throw io_error(file + ": truncated chunk header");
    h.size = esn::detail::read_u32(in, file + " chunk size");
    return h;
}

bool id_is(const ChunkHeader& h, const char* tag)
{
    return std::memcmp(h.id, tag, 4) == 0;
}

}  // namespace

AudioSignal read_wav(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open WAV file " + path.string());
    const std::string name = path.string();

    char riff[4], wave[4];
    in.read(riff, 4);
    if (!in || std::memcmp(riff, "RIFF", 4) != 0) throw io_error(name + ": not a RIFF file");
    esn::detail::read_u32(in, name + " RIFF size");
    in.read(wave, 4);
    if (!in || std::memcmp(wave, "WAVE", 4) != 0) throw io_error(name + ": not a WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;

    AudioSignal signal;
    while (in.peek() != EOF) {
        const ChunkHeader chunk = read_chunk_header(in, name);
        if (id_is(chunk, "fmt ")) {
            if (chunk.size < 16) throw io_error(name + ": fmt chunk too small");
            format = esn::detail::read_u16(in, name + " format");
            channels = esn::detail::read_u16(in, name + " channels");
            rate = esn::detail::read_u32(in, name + " sample rate");
            esn::detail::read_u32(in, name + " byte rate");
            esn::detail::read_u16(in, name + " block align");
            bits = esn::detail::read_u16(in, name + " bits per sample");
            in.ignore(chunk.size - 16);
            have_fmt = true;
        } else if (id_is(chunk, "data")) {
            if (!have_fmt) throw io_error(name + ": data chunk before fmt chunk");
            if (format != 1) throw io_error(name + ": only PCM WAV is supported");
            if (channels != 1) throw io_error(name + ": only mono WAV is supported");
            if (bits != 16) throw io_error(name + ": only 16-bit WAV is supported");
            const std::size_t n = chunk.size / 2;
            signal.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto s = read_raw<std::int16_t>(in, name + " sample data");
                signal.samples[i] = static_cast<double>(s) / 32768.0;
            }
            signal.sample_rate = static_cast<int>(rate);
            return signal;
        } else {
            // Skip unknown chunks (LIST, fact, ...); chunks are word-aligned.
            in.ignore(chunk.size + (chunk.size & 1));
            if (!in) throw io_error(name + ": truncated chunk body");
        }
    }
    throw io_error(name + ": no data chunk found");
}

void write_wav16(const std::filesystem::path& path, const AudioSignal& signal)
{
    if (signal.sample_rate <= 0) throw config_error("write_wav16: sample_rate must be positive");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot create WAV file " + path.string());

    const std::uint32_t data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
    out.write("RIFF", 4);
    esn::detail::write_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    esn::detail::write_u32(out, 16);
    esn::detail::write_u16(out, 1);  // PCM
    esn::detail::write_u16(out, 1);  // mono
    esn::detail::write_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
    esn::detail::write_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
    esn::detail::write_u16(out, 2);
    esn::detail::write_u16(out, 16);
    out.write("data", 4);
    esn::detail::write_u32(out, data_bytes);
    for (double v : signal.samples) {
        const double clamped = std::clamp(v, -1.0, 1.0);
        const auto s = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
        write_raw(out, s);
    }
    if (!out) throw io_error("failed writing WAV file " + path.string());
}

}  // namespace esn::dsp
