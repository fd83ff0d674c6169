#include "doalab/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "doalab/common.hpp"

namespace doalab {

namespace {

void put_u32(std::string& s, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    s.append(b, 4);
}

void put_u16(std::string& s, uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
    s.append(b, 2);
}

uint32_t get_u32(const char* p) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;  // little-endian hosts only, matching the rest of the on-disk formats
}

uint16_t get_u16(const char* p) {
    uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

}  // namespace

Waveform wav_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    DOALAB_CHECK(f.good(), "wav_read: cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    DOALAB_CHECK(data.size() >= 44, "wav_read: truncated file " + path);
    DOALAB_CHECK(data.compare(0, 4, "RIFF") == 0 && data.compare(8, 4, "WAVE") == 0,
                 "wav_read: not a RIFF/WAVE file: " + path);

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    size_t data_off = 0, data_len = 0;
    size_t pos = 12;
    while (pos + 8 <= data.size()) {
        std::string id = data.substr(pos, 4);
        uint32_t len = get_u32(data.data() + pos + 4);
        size_t body = pos + 8;
        if (id == "fmt ") {
            DOALAB_CHECK(len >= 16 && body + 16 <= data.size(), "wav_read: bad fmt chunk");
            format = get_u16(data.data() + body);
            channels = get_u16(data.data() + body + 2);
            rate = get_u32(data.data() + body + 4);
            bits = get_u16(data.data() + body + 14);
        } else if (id == "data") {
            data_off = body;
            data_len = std::min(static_cast<size_t>(len), data.size() - body);
        }
        pos = body + len + (len & 1);
    }
    DOALAB_CHECK(channels > 0 && rate > 0, "wav_read: missing fmt chunk in " + path);
    DOALAB_CHECK(data_off > 0, "wav_read: missing data chunk in " + path);
    const bool pcm16 = (format == 1 && bits == 16);
    const bool f32 = (format == 3 && bits == 32);
    DOALAB_CHECK(pcm16 || f32, "wav_read: unsupported encoding in " + path +
                                   " (want PCM16 or float32)");

    const size_t bytes_per = bits / 8u;
    const size_t frames = data_len / (bytes_per * channels);
    Waveform w;
    w.sample_rate = static_cast<double>(rate);
    w.channels.assign(channels, std::vector<double>(frames));
    const char* p = data.data() + data_off;
    for (size_t n = 0; n < frames; ++n) {
        for (uint16_t c = 0; c < channels; ++c) {
            if (pcm16) {
                int16_t v;
                std::memcpy(&v, p, 2);
                w.channels[c][n] = static_cast<double>(v) / 32768.0;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                w.channels[c][n] = static_cast<double>(v);
            }
            p += bytes_per;
        }
    }
    return w;
}

void wav_write(const std::string& path, const Waveform& w, WavFormat fmt) {
    DOALAB_CHECK(w.num_channels() > 0, "wav_write: no channels");
    DOALAB_CHECK(w.sample_rate > 0, "wav_write: sample_rate not set");
    const size_t frames = w.num_samples();
    for (const auto& ch : w.channels)
        DOALAB_CHECK(ch.size() == frames, "wav_write: ragged channel lengths");

    const uint16_t channels = static_cast<uint16_t>(w.num_channels());
    const bool pcm16 = (fmt == WavFormat::Pcm16);
    const uint16_t bits = pcm16 ? 16 : 32;
    const uint32_t rate = static_cast<uint32_t>(w.sample_rate);
    const uint32_t block = channels * bits / 8u;
    const uint32_t data_len = static_cast<uint32_t>(frames * block);

    std::string out;
    out.reserve(44 + data_len);
    out += "RIFF";
    put_u32(out, 36 + data_len);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, pcm16 ? 1 : 3);
    put_u16(out, channels);
    put_u32(out, rate);
    put_u32(out, rate * block);
    put_u16(out, static_cast<uint16_t>(block));
    put_u16(out, bits);
    out += "data";
    put_u32(out, data_len);
    for (size_t n = 0; n < frames; ++n) {
        for (uint16_t c = 0; c < channels; ++c) {
            double v = w.channels[c][n];
            if (pcm16) {
                double s = std::round(v * 32768.0);
                if (s > 32767.0) s = 32767.0;
                if (s < -32768.0) s = -32768.0;
                auto iv = static_cast<int16_t>(s);
                char b[2];
                std::memcpy(b, &iv, 2);
                out.append(b, 2);
            } else {
                auto fv = static_cast<float>(v);
                char b[4];
                std::memcpy(b, &fv, 4);
                out.append(b, 4);
            }
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    DOALAB_CHECK(f.good(), "wav_write: cannot open " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    DOALAB_CHECK(f.good(), "wav_write: write failed for " + path);
}

}  // namespace doalab
