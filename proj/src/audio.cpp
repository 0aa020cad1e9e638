#include "voiceclone/audio.hpp"

#include <cmath>
#include <numbers>

namespace voiceclone {

Pcm tone_pcm(double frequency_hz, std::size_t frames, int amplitude) {
    const std::size_t samples = frames * kFrameBytes / kBytesPerSample;
    Pcm out(samples * kBytesPerSample, '\0');
    for (std::size_t i = 0; i < samples; ++i) {
        const double phase = 2.0 * std::numbers::pi * frequency_hz * static_cast<double>(i) / kSampleRate;
        const auto v = static_cast<std::int16_t>(std::lround(amplitude * std::sin(phase)));
        const auto u = static_cast<std::uint16_t>(v);
        out[2 * i] = static_cast<char>(u & 0xff);
        out[2 * i + 1] = static_cast<char>(u >> 8);
    }
    return out;
}

}  // namespace voiceclone
