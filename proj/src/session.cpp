#include "voiceclone/session.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "voiceclone/error.hpp"

namespace voiceclone {

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::idle: return "idle";
        case SessionState::listening: return "listening";
        case SessionState::speaking: return "speaking";
        case SessionState::closing: return "closing";
        case SessionState::closed: return "closed";
    }
    return "?";
}

bool legal_transition(SessionState from, SessionState to) {
    using S = SessionState;
    switch (to) {
        case S::listening: return from == S::idle || from == S::speaking;
        case S::speaking: return from == S::listening;
        case S::closing: return from != S::closing && from != S::closed;
        case S::closed: return from == S::closing;
        case S::idle: return false;
    }
    return false;
}

Json to_json(const SessionMetrics& m) {
    return Json{{"first_response_latency_ms",
                 m.first_response_latency_ms ? Json(*m.first_response_latency_ms) : Json(nullptr)},
                {"turn_latencies_ms", m.turn_latencies_ms},
                {"p50_latency_ms", m.p50_latency_ms},
                {"p95_latency_ms", m.p95_latency_ms},
                {"rtf", m.rtf},
                {"processing_s", m.processing_s},
                {"agent_audio_s", m.agent_audio_s},
                {"frames_in", m.frames_in},
                {"frames_out", m.frames_out},
                {"frames_dropped", m.frames_dropped},
                {"frames_cancelled", m.frames_cancelled}};
}

std::int64_t nearest_rank(std::vector<std::int64_t> values, double q) {
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

void finalize_metrics(SessionMetrics& m) {
    m.first_response_latency_ms.reset();
    if (!m.turn_latencies_ms.empty()) m.first_response_latency_ms = m.turn_latencies_ms.front();
    m.p50_latency_ms = nearest_rank(m.turn_latencies_ms, 50);
    m.p95_latency_ms = nearest_rank(m.turn_latencies_ms, 95);
    m.rtf = m.agent_audio_s > 0.0 ? m.processing_s / m.agent_audio_s : 0.0;
}

Session::Session(std::string id, std::unique_ptr<SpeechAdapter> adapter, SessionOptions options)
    : id_(std::move(id)), adapter_(std::move(adapter)), options_(options) {
    if (!adapter_) throw std::invalid_argument("session needs an adapter");
    if (options_.queue_capacity == 0) throw std::invalid_argument("queue capacity must be positive");
}

void Session::transition(SessionState to) {
    if (!legal_transition(state_, to)) {
        throw std::logic_error("illegal session transition " + std::string(to_string(state_)) + " -> " +
                               std::string(to_string(to)));
    }
    state_ = to;
}

void Session::open(const SessionContext& context) {
    transition(SessionState::listening);
    send_json({{"type", "session.started"},
               {"session_id", id_},
               {"playbook_id", context.playbook_id},
               {"adapter", adapter_->name()},
               {"state", "listening"},
               {"audio",
                {{"encoding", "pcm_s16le"},
                 {"sample_rate", kSampleRate},
                 {"channels", 1},
                 {"frame_ms", kFrameMs}}}});
    std::vector<AdapterEvent> events;
    const auto start = Clock::now();
    call_started_ = start;
    try {
        events = adapter_->open(context);
    } catch (const AdapterError&) {
        processing_ += Clock::now() - start;
        queue_.clear();
        queued_audio_ = 0;
        transition(SessionState::closing);
        transition(SessionState::closed);
        throw;
    }
    processing_ += Clock::now() - start;
    apply(events);
}

void Session::ingest_binary(std::string_view bytes) {
    DecodedFrame decoded;
    try {
        decoded = decode_frame(bytes);
    } catch (const ProtocolError& e) {
        send_error(e.code(), e.what());
        return;
    }
    if (decoded.problem.empty()) {
        ingest_audio(decoded.frame);
        return;
    }
    if (state_ != SessionState::listening && state_ != SessionState::speaking) {
        send_error("invalid_state", "audio received while " + std::string(to_string(state_)));
        return;
    }
    const std::uint32_t seq = decoded.frame.seq;
    if (seq != last_seq_in_ + 1) {
        send_error("seq_gap", "seq gap at " + std::to_string(seq));
        begin_close("seq gap");
        return;
    }
    last_seq_in_ = seq;
    const std::size_t payload = bytes.size() - kFrameHeaderBytes;
    send_error(decoded.problem, "frame " + std::to_string(seq) + " rejected: payload of " +
                                    std::to_string(payload) + " bytes");
}

void Session::ingest_audio(const AudioFrame& frame) {
    if (state_ != SessionState::listening && state_ != SessionState::speaking) {
        send_error("invalid_state", "audio received while " + std::string(to_string(state_)));
        return;
    }
    if (frame.seq != last_seq_in_ + 1) {
        send_error("seq_gap", "seq gap at " + std::to_string(frame.seq));
        begin_close("seq gap");
        return;
    }
    if (auto problem = payload_problem(frame.pcm.size()); !problem.empty()) {
        last_seq_in_ = frame.seq;
        send_error(std::string(problem), "frame " + std::to_string(frame.seq) + " rejected");
        return;
    }
    last_seq_in_ = frame.seq;
    ++raw_.frames_in;
    call_adapter(&SpeechAdapter::on_audio, frame.pcm);
}

void Session::handle_control(const Json& message) {
    if (!message.is_object() || !message.contains("type") || !message.at("type").is_string()) {
        send_error("bad_message", "control message needs a string \"type\"");
        return;
    }
    const std::string type = message.at("type").get<std::string>();
    if (type == "barge_in") {
        barge_in();
    } else if (type == "audio.end") {
        audio_end();
    } else if (type == "session.close") {
        begin_close("client closed");
    } else if (type == "session.start") {
        warn("session already started");
    } else {
        send_error("bad_message", "unknown message type '" + type + "'");
    }
}

void Session::audio_end() {
    if (state_ != SessionState::listening && state_ != SessionState::speaking) {
        send_error("invalid_state", "audio.end received while " + std::string(to_string(state_)));
        return;
    }
    call_adapter_end();
}

void Session::barge_in() {
    if (state_ != SessionState::speaking) {
        warn("barge_in ignored while " + std::string(to_string(state_)));
        return;
    }
    const std::uint64_t turn = turn_;
    std::erase_if(queue_, [&](const Item& item) {
        if (item.turn != turn) return false;
        if (item.kind == Item::Kind::audio) {
            --queued_audio_;
            ++raw_.frames_cancelled;
        }
        return true;
    });
    send_json({{"type", "playback.cancel"}, {"turn", turn}});
    turn_open_ = false;
    transition(SessionState::listening);
    adapter_->on_barge_in();
}

void Session::handle_upstream_event(const AdapterEvent& event) { apply({event}); }

void Session::call_adapter(std::vector<AdapterEvent> (SpeechAdapter::*fn)(const Pcm&), const Pcm& pcm) {
    const auto start = Clock::now();
    call_started_ = start;
    std::vector<AdapterEvent> events;
    try {
        events = (adapter_.get()->*fn)(pcm);
    } catch (const AdapterError& e) {
        processing_ += Clock::now() - start;
        send_error("adapter_error", e.what());
        begin_close("adapter error");
        return;
    }
    processing_ += Clock::now() - start;
    apply(events);
}

void Session::call_adapter_end() {
    const auto start = Clock::now();
    call_started_ = start;
    std::vector<AdapterEvent> events;
    try {
        events = adapter_->on_audio_end();
    } catch (const AdapterError& e) {
        processing_ += Clock::now() - start;
        send_error("adapter_error", e.what());
        begin_close("adapter error");
        return;
    }
    processing_ += Clock::now() - start;
    apply(events);
}

void Session::start_turn() {
    ++turn_;
    turn_has_audio_ = false;
    turn_open_ = true;
    if (state_ == SessionState::listening) transition(SessionState::speaking);
}

void Session::apply(const std::vector<AdapterEvent>& events) {
    using K = AdapterEvent::Kind;
    for (const auto& e : events) {
        if (state_ == SessionState::closing || state_ == SessionState::closed) return;
        switch (e.kind) {
            case K::audio_delta: {
                std::string_view problem = payload_problem(e.audio.size());
                if (e.audio.empty()) problem = "empty_payload";
                if (!problem.empty()) {
                    send_error("adapter_error", "adapter produced invalid audio (" + std::string(problem) + ")");
                    begin_close("adapter error");
                    return;
                }
                if (!turn_open_) start_turn();
                if (!turn_has_audio_) {
                    turn_has_audio_ = true;
                    raw_.turn_latencies_ms.push_back(
                        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - call_started_)
                            .count());
                }
                if (queued_audio_ >= options_.queue_capacity) {
                    auto oldest = std::find_if(queue_.begin(), queue_.end(),
                                               [](const Item& i) { return i.kind == Item::Kind::audio; });
                    queue_.erase(oldest);
                    --queued_audio_;
                    ++raw_.frames_dropped;
                }
                queue_.push_back({Item::Kind::audio, e.audio, pts_out_ms_, turn_});
                ++queued_audio_;
                pts_out_ms_ += static_cast<std::uint64_t>(pcm_duration_ms(e.audio.size()));
                agent_audio_bytes_ += e.audio.size();
                break;
            }
            case K::transcript_delta:
                if (!turn_open_) start_turn();
                send_json({{"type", "agent.transcript.delta"}, {"text", e.text}, {"turn", turn_}}, turn_);
                break;
            case K::turn_complete:
                if (!turn_open_) start_turn();
                send_json({{"type", "agent.turn.complete"}, {"turn", turn_}}, turn_);
                queue_.back().ends_turn = true;
                turn_open_ = false;
                break;
            case K::error:
                send_error("adapter_error", e.text);
                begin_close("adapter error");
                break;
            case K::session_end:
                send_json({{"type", "session.end"}, {"reason", e.text}});
                begin_close(e.text);
                break;
        }
    }
}

void Session::send_json(const Json& message, std::uint64_t turn) {
    queue_.push_back({Item::Kind::text, message.dump(), 0, turn});
}

void Session::send_error(const std::string& code, const std::string& message) {
    send_json({{"type", "error"}, {"code", code}, {"message", message}});
}

void Session::warn(const std::string& message) { send_json({{"type", "warning"}, {"message", message}}); }

void Session::begin_close(const std::string& reason) {
    if (state_ == SessionState::closing || state_ == SessionState::closed) return;
    transition(SessionState::closing);
    queue_.push_back({Item::Kind::metrics, reason, 0, 0});
}

SessionMetrics Session::finish() {
    if (state_ != SessionState::closed) {
        if (state_ != SessionState::closing) transition(SessionState::closing);
        transition(SessionState::closed);
    }
    return metrics();
}

SessionMetrics Session::metrics() const {
    SessionMetrics m = raw_;
    m.processing_s = std::chrono::duration<double>(processing_).count();
    m.agent_audio_s = pcm_duration_s(agent_audio_bytes_);
    finalize_metrics(m);
    return m;
}

std::optional<Outbound> Session::pop() {
    if (queue_.empty()) return std::nullopt;
    Item item = std::move(queue_.front());
    queue_.pop_front();
    switch (item.kind) {
        case Item::Kind::audio: {
            --queued_audio_;
            ++raw_.frames_out;
            AudioFrame frame{++seq_out_, item.pts_ms, std::move(item.data)};
            return Outbound{true, encode_frame(frame)};
        }
        case Item::Kind::metrics: {
            Json j = to_json(metrics());
            j["type"] = "session.metrics";
            j["session_id"] = id_;
            j["reason"] = item.data;
            return Outbound{false, j.dump()};
        }
        case Item::Kind::text:
            if (item.ends_turn && item.turn == turn_ && !turn_open_ && state_ == SessionState::speaking) {
                transition(SessionState::listening);
            }
            break;
    }
    return Outbound{false, std::move(item.data)};
}

}  // namespace voiceclone
