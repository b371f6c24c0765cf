#pragma once

// Minimal RIFF/WAVE reader for linear PCM: 16-bit integer or 32-bit float,
// mono or stereo (stereo is averaged to mono). 16-bit samples are scaled by
// 1/32768 exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "automode/error.hpp"

namespace automode {

struct PcmAudio {
    std::vector<double> samples;  // mono, in [-1, 1]
    double sample_rate = 0.0;
};

namespace detail {

inline std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::string offset_str(std::size_t off) { return "at byte offset " + std::to_string(off); }

}  // namespace detail

inline PcmAudio parse_wav(std::span<const std::uint8_t> bytes) {
    using detail::le16;
    using detail::le32;
    using detail::offset_str;
    const std::uint8_t* b = bytes.data();
    if (bytes.size() < 12) throw ParseError("wav: truncated RIFF header " + offset_str(bytes.size()));
    if (std::memcmp(b, "RIFF", 4) != 0) throw ParseError("wav: bad RIFF magic " + offset_str(0));
    if (std::memcmp(b + 8, "WAVE", 4) != 0) throw ParseError("wav: bad WAVE form type " + offset_str(8));

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t size = le32(b + pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            if (std::memcmp(b + pos, "data", 4) != 0)
                throw ParseError("wav: truncated chunk " + offset_str(pos));
        }
        if (std::memcmp(b + pos, "fmt ", 4) == 0) {
            if (size < 16) throw ParseError("wav: fmt chunk too short " + offset_str(pos));
            format = le16(b + body);
            channels = le16(b + body + 2);
            rate = le32(b + body + 4);
            bits = le16(b + body + 14);
            if (format == 0xFFFE) {
                if (size < 40) throw ParseError("wav: extensible fmt chunk too short " + offset_str(pos));
                format = le16(b + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(b + pos, "data", 4) == 0) {
            if (!have_fmt) throw ParseError("wav: data chunk before fmt chunk " + offset_str(pos));
            const bool pcm16 = format == 1 && bits == 16;
            const bool f32 = format == 3 && bits == 32;
            if (!pcm16 && !f32)
                throw ParseError("wav: unsupported codec (format " + std::to_string(format) + ", " +
                                 std::to_string(bits) + " bits)");
            if (channels != 1 && channels != 2)
                throw ParseError("wav: unsupported channel count " + std::to_string(channels));
            if (rate == 0) throw ParseError("wav: zero sample rate");
            const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
            const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
            const std::size_t frames = avail / frame_bytes;
            if (frames == 0) throw ParseError("wav: zero-length data chunk " + offset_str(pos));

            PcmAudio out;
            out.sample_rate = rate;
            out.samples.reserve(frames);
            for (std::size_t f = 0; f < frames; ++f) {
                double acc = 0.0;
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::uint8_t* p = b + body + f * frame_bytes + c * (bits / 8);
                    if (pcm16) {
                        acc += static_cast<double>(static_cast<std::int16_t>(le16(p))) / 32768.0;
                    } else {
                        const std::uint32_t u = le32(p);
                        float v;
                        std::memcpy(&v, &u, sizeof v);
                        acc += static_cast<double>(v);
                    }
                }
                out.samples.push_back(channels == 2 ? acc / 2.0 : acc);
            }
            return out;
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt) throw ParseError("wav: missing fmt chunk");
    throw ParseError("wav: missing data chunk");
}

inline PcmAudio read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open wav file '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_wav(bytes);
}

/// Encodes interleaved samples as 16-bit PCM (clipped to [-1, 1]).
inline std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> interleaved, std::uint32_t sample_rate,
                                                  std::uint16_t channels = 1) {
    std::vector<std::uint8_t> out;
    auto put32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto put16 = [&](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    };
    auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
    tag("RIFF");
    put32(36 + data_bytes);
    tag("WAVE");
    tag("fmt ");
    put32(16);
    put16(1);
    put16(channels);
    put32(sample_rate);
    put32(sample_rate * channels * 2);
    put16(static_cast<std::uint16_t>(channels * 2));
    put16(16);
    tag("data");
    put32(data_bytes);
    for (double x : interleaved) {
        const double c = std::clamp(x, -1.0, 1.0);
        const auto v = static_cast<std::int16_t>(std::clamp(std::lround(c * 32768.0), -32768L, 32767L));
        put16(static_cast<std::uint16_t>(v));
    }
    return out;
}

}  // namespace automode
