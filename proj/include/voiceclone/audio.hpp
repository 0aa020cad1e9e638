#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace voiceclone {

// Wire audio: 16-bit little-endian mono PCM at 16 kHz.
inline constexpr int kSampleRate = 16000;
inline constexpr int kBytesPerSample = 2;
inline constexpr int kFrameMs = 20;
inline constexpr std::size_t kFrameBytes = kSampleRate / 1000 * kFrameMs * kBytesPerSample;  // 640
inline constexpr std::size_t kMaxPayloadBytes = 64 * 1024;

// PCM bytes are carried in std::string so they can go to the socket without
// copying.
using Pcm = std::string;

inline std::int64_t pcm_duration_ms(std::size_t bytes) {
    return static_cast<std::int64_t>(bytes / kBytesPerSample) * 1000 / kSampleRate;
}

inline double pcm_duration_s(std::size_t bytes) {
    return static_cast<double>(bytes / kBytesPerSample) / kSampleRate;
}

// Sine tone, `frames` whole 20 ms frames long. Sample i is
// round(amplitude * sin(2 pi f i / 16000)).
Pcm tone_pcm(double frequency_hz, std::size_t frames, int amplitude = 8000);

}  // namespace voiceclone
