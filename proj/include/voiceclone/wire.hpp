#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "voiceclone/audio.hpp"

namespace voiceclone {

// Binary frame layout shared by both directions:
//   byte 0      type tag (0x01 = audio)
//   bytes 1-4   seq, big-endian
//   bytes 5-12  pts_ms, big-endian
//   bytes 13-   PCM payload
inline constexpr std::uint8_t kAudioTag = 0x01;
inline constexpr std::size_t kFrameHeaderBytes = 13;

struct AudioFrame {
    std::uint32_t seq = 0;
    std::uint64_t pts_ms = 0;
    Pcm pcm;

    friend bool operator==(const AudioFrame&, const AudioFrame&) = default;
};

// Empty when the payload is acceptable, otherwise the protocol error code
// ("odd_payload" or "frame_too_large").
std::string_view payload_problem(std::size_t bytes);

// Throws ProtocolError when the payload is invalid.
std::string encode_frame(const AudioFrame& frame);

struct DecodedFrame {
    AudioFrame frame;
    std::string problem;  // payload_problem() of the payload, header was fine
};

// Throws ProtocolError("malformed_frame") when the header cannot be read.
// Payload problems are reported, not thrown, so the caller can still account
// for the sequence number.
DecodedFrame decode_frame(std::string_view bytes);

}  // namespace voiceclone
