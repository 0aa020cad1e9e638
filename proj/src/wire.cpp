#include "voiceclone/wire.hpp"

#include "voiceclone/error.hpp"

namespace voiceclone {

std::string_view payload_problem(std::size_t bytes) {
    if (bytes > kMaxPayloadBytes) return "frame_too_large";
    if (bytes % 2 != 0) return "odd_payload";
    return {};
}

std::string encode_frame(const AudioFrame& frame) {
    if (auto problem = payload_problem(frame.pcm.size()); !problem.empty()) {
        throw ProtocolError(std::string(problem), "invalid audio payload of " + std::to_string(frame.pcm.size()) +
                                                      " bytes");
    }
    std::string out;
    out.reserve(kFrameHeaderBytes + frame.pcm.size());
    out.push_back(static_cast<char>(kAudioTag));
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((frame.seq >> shift) & 0xff));
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((frame.pts_ms >> shift) & 0xff));
    out += frame.pcm;
    return out;
}

DecodedFrame decode_frame(std::string_view bytes) {
    if (bytes.size() < kFrameHeaderBytes) {
        throw ProtocolError("malformed_frame", "frame shorter than its " + std::to_string(kFrameHeaderBytes) +
                                                   "-byte header");
    }
    if (static_cast<std::uint8_t>(bytes[0]) != kAudioTag) {
        throw ProtocolError("malformed_frame", "unknown frame type " + std::to_string(static_cast<std::uint8_t>(bytes[0])));
    }
    DecodedFrame d;
    for (std::size_t i = 1; i <= 4; ++i) d.frame.seq = (d.frame.seq << 8) | static_cast<std::uint8_t>(bytes[i]);
    for (std::size_t i = 5; i <= 12; ++i) d.frame.pts_ms = (d.frame.pts_ms << 8) | static_cast<std::uint8_t>(bytes[i]);
    const std::string_view payload = bytes.substr(kFrameHeaderBytes);
    d.problem = std::string(payload_problem(payload.size()));
    if (d.problem.empty()) d.frame.pcm.assign(payload);
    return d;
}

}  // namespace voiceclone
