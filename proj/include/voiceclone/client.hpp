#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "voiceclone/io.hpp"
#include "voiceclone/wire.hpp"

namespace voiceclone {

struct ClientMessage {
    bool binary = false;
    Json json;         // text messages
    AudioFrame frame;  // binary messages
    std::string raw;
};

// Headless gateway client: what a browser client does, minus the audio
// devices. Owns one connection and a background I/O thread.
class HeadlessClient {
public:
    using Query = std::map<std::string, std::string>;

    // Throws Error when the connection or the WebSocket handshake fails.
    HeadlessClient(const std::string& host, std::uint16_t port, const Query& query = {},
                   const std::string& path = "/v1/session");
    ~HeadlessClient();

    HeadlessClient(const HeadlessClient&) = delete;
    HeadlessClient& operator=(const HeadlessClient&) = delete;

    void send_json(const Json& message);
    void send_frame(const AudioFrame& frame);
    void send_binary(std::string bytes);

    // Sends `pcm` as consecutive 640-byte frames (the last one may be
    // shorter), continuing the client's seq and pts. Returns the frame count.
    std::size_t send_audio(const std::string& pcm);
    std::uint32_t last_seq_sent() const { return seq_; }

    // Next message, or nullopt on timeout or once the connection has closed
    // and everything received has been consumed.
    std::optional<ClientMessage> next(std::chrono::milliseconds timeout);

    // Waits for a text message of the given type, collecting everything seen
    // before it. Throws Error on timeout or disconnect.
    ClientMessage expect(const std::string& type, std::chrono::milliseconds timeout,
                         std::vector<ClientMessage>* before = nullptr);

    bool closed() const;
    void close();

    static std::string url_encode(const std::string& s);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint32_t seq_ = 0;
    std::uint64_t pts_ms_ = 0;
};

}  // namespace voiceclone
