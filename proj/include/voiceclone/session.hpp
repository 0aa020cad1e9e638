#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "voiceclone/adapters.hpp"
#include "voiceclone/io.hpp"
#include "voiceclone/wire.hpp"

namespace voiceclone {

enum class SessionState { idle, listening, speaking, closing, closed };

std::string_view to_string(SessionState s);

// idle->listening, listening->speaking, speaking->listening, any->closing,
// closing->closed.
bool legal_transition(SessionState from, SessionState to);

struct SessionMetrics {
    std::optional<std::int64_t> first_response_latency_ms;
    std::vector<std::int64_t> turn_latencies_ms;
    std::int64_t p50_latency_ms = 0;
    std::int64_t p95_latency_ms = 0;
    double rtf = 0.0;
    double processing_s = 0.0;
    double agent_audio_s = 0.0;
    std::uint64_t frames_in = 0;
    std::uint64_t frames_out = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t frames_cancelled = 0;
};

Json to_json(const SessionMetrics& m);

// Nearest-rank percentile: the value at 1-based rank ceil(q/100 * n) of the
// sorted sample. Zero for an empty sample.
std::int64_t nearest_rank(std::vector<std::int64_t> values, double q);

// Fills the derived fields (percentiles, first latency, rtf) from the raw ones.
void finalize_metrics(SessionMetrics& m);

struct SessionOptions {
    std::size_t queue_capacity = 100;  // queued agent audio frames
};

// One item waiting to be written to the client.
struct Outbound {
    bool binary = false;
    std::string data;
};

// Transport-independent session: protocol checks, the state machine, the
// bounded outbound queue, barge-in and metrics. Not synchronized; the owner
// serializes every call.
class Session {
public:
    using Clock = std::chrono::steady_clock;

    Session(std::string id, std::unique_ptr<SpeechAdapter> adapter, SessionOptions options = {});

    // idle -> listening, then delivers the context to the adapter. Throws
    // AdapterError when the adapter cannot start; the session is then closed.
    void open(const SessionContext& context);

    // Binary message from the client.
    void ingest_binary(std::string_view bytes);
    void ingest_audio(const AudioFrame& frame);

    // JSON text message from the client (barge_in, audio.end, session.close).
    void handle_control(const Json& message);

    void audio_end();
    void barge_in();

    // Applies one adapter event as if the adapter had just emitted it.
    void handle_upstream_event(const AdapterEvent& event);

    // Moves to closing and queues the final session.metrics message.
    void begin_close(const std::string& reason);

    // closing -> closed once the transport has flushed the queue.
    SessionMetrics finish();

    // Next message for the client. Audio gets its seq here so the downstream
    // sequence stays gapless whatever was discarded.
    std::optional<Outbound> pop();
    bool has_outbound() const { return !queue_.empty(); }
    bool next_is_audio() const { return !queue_.empty() && queue_.front().kind == Item::Kind::audio; }
    std::size_t queued_audio() const { return queued_audio_; }

    const std::string& id() const { return id_; }
    SessionState state() const { return state_; }
    const SpeechAdapter& adapter() const { return *adapter_; }
    SessionMetrics metrics() const;
    std::uint32_t last_seq_in() const { return last_seq_in_; }

private:
    struct Item {
        enum class Kind { audio, text, metrics } kind = Kind::text;
        std::string data;  // PCM for audio, serialized JSON for text
        std::uint64_t pts_ms = 0;
        std::uint64_t turn = 0;  // agent turn the item belongs to, 0 for none
        bool ends_turn = false;  // agent.turn.complete; popping it ends speaking
    };

    void transition(SessionState to);
    void call_adapter(std::vector<AdapterEvent> (SpeechAdapter::*fn)(const Pcm&), const Pcm& pcm);
    void call_adapter_end();
    void apply(const std::vector<AdapterEvent>& events);
    void start_turn();
    void send_json(const Json& message, std::uint64_t turn = 0);
    void send_error(const std::string& code, const std::string& message);
    void warn(const std::string& message);

    std::string id_;
    std::unique_ptr<SpeechAdapter> adapter_;
    SessionOptions options_;
    SessionState state_ = SessionState::idle;

    std::deque<Item> queue_;
    std::size_t queued_audio_ = 0;

    std::uint32_t last_seq_in_ = 0;
    std::uint32_t seq_out_ = 0;
    std::uint64_t pts_out_ms_ = 0;
    std::uint64_t turn_ = 0;
    bool turn_has_audio_ = false;
    bool turn_open_ = false;  // the adapter is still producing turn_
    Clock::time_point call_started_{};

    std::uint64_t agent_audio_bytes_ = 0;
    Clock::duration processing_{};
    SessionMetrics raw_;
};

}  // namespace voiceclone
