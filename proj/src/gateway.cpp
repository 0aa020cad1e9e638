#include "voiceclone/gateway.hpp"

#include <condition_variable>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <spdlog/spdlog.h>

#include "voiceclone/error.hpp"
#include "voiceclone/text.hpp"

namespace voiceclone {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

// ---- core ---------------------------------------------------------------------

GatewayCore::GatewayCore(GatewayConfig config)
    : config_(std::move(config)),
      playbooks_(config_.playbook_dir, [](const std::filesystem::path& p) { return load_playbook(p); }),
      scenarios_(config_.scenario_dir, [](const std::filesystem::path& p) { return load_scenario(p); }) {}

std::unique_ptr<SpeechAdapter> GatewayCore::make_adapter(const std::string& kind, const std::string& scenario) {
    const std::chrono::milliseconds delay(config_.processing_delay_ms);
    if (kind == "echo") return std::make_unique<EchoAdapter>(delay);
    if (kind == "scripted") {
        if (scenario.empty()) throw ProtocolError("unknown_scenario", "scripted adapter needs a scenario");
        std::shared_ptr<const ScenarioScript> script;
        try {
            script = scenarios_.find(scenario);
        } catch (const ValidationError& e) {
            throw ProtocolError("unknown_scenario", "scenario '" + scenario + "' does not load: " + e.what());
        }
        if (!script) throw ProtocolError("unknown_scenario", "unknown scenario '" + scenario + "'");
        return std::make_unique<ScriptedAdapter>(*script, delay);
    }
    if (kind == "external") return std::make_unique<ExternalSpeechAdapter>(ExternalSpeechConfig::from_env());
    throw ProtocolError("unknown_adapter", "unknown adapter '" + kind + "'");
}

std::unique_ptr<Session> GatewayCore::open_session(const OpenRequest& request) {
    std::shared_ptr<const AgentPlaybook> playbook;
    try {
        playbook = playbooks_.find(request.playbook_id);
    } catch (const ValidationError& e) {
        throw ProtocolError("unknown_playbook", "playbook '" + request.playbook_id + "' does not load: " + e.what());
    }
    if (!playbook) throw ProtocolError("unknown_playbook", "unknown playbook '" + request.playbook_id + "'");

    auto adapter = make_adapter(request.adapter, request.scenario);

    SlotValues slots = config_.slot_values;
    for (const auto& [k, v] : request.slots) slots[k] = v;
    SessionContext context;
    context.playbook_id = request.playbook_id;
    try {
        context.system_prompt = render_system_prompt(*playbook, slots);
    } catch (const ValidationError& e) {
        throw ProtocolError("render_failed", e.what());
    }

    auto session = std::make_unique<Session>("s" + std::to_string(next_id_++), std::move(adapter),
                                             SessionOptions{config_.queue_capacity});
    try {
        session->open(context);
    } catch (const AdapterError& e) {
        std::string message = e.what();
        if (!e.diagnostics().empty()) message += " (" + e.diagnostics() + ")";
        throw ProtocolError("adapter_init_failed", message);
    }
    return session;
}

// ---- transport ----------------------------------------------------------------

namespace {

std::string url_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out.push_back(' ');
        } else if (s[i] == '%' && i + 2 < s.size()) {
            const std::string hex(s.substr(i + 1, 2));
            char* end = nullptr;
            const long v = std::strtol(hex.c_str(), &end, 16);
            if (end != hex.c_str() + 2) {
                out.push_back('%');
                continue;
            }
            out.push_back(static_cast<char>(v));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::map<std::string, std::string> parse_query(std::string_view q) {
    std::map<std::string, std::string> out;
    while (!q.empty()) {
        const auto amp = q.find('&');
        const std::string_view pair = q.substr(0, amp);
        const auto eq = pair.find('=');
        if (!pair.empty()) {
            out[url_decode(pair.substr(0, eq))] = eq == std::string_view::npos ? "" : url_decode(pair.substr(eq + 1));
        }
        if (amp == std::string_view::npos) break;
        q.remove_prefix(amp + 1);
    }
    return out;
}

struct Counters {
    std::atomic<std::size_t> active{0};
    std::atomic<std::size_t> completed{0};
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, std::shared_ptr<GatewayCore> core, std::shared_ptr<Counters> counters)
        : stream_(std::move(socket)),
          core_(std::move(core)),
          counters_(std::move(counters)),
          timer_(stream_.get_executor()) {
        ++counters_->active;
    }

    ~Connection() {
        --counters_->active;
        ++counters_->completed;
    }

    void run() {
        net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read_request(); });
    }

private:
    void read_request() {
        beast::get_lowest_layer(stream_).expires_after(std::chrono::seconds(30));
        http::async_read(beast::get_lowest_layer(stream_), http_buffer_, request_,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
    }

    void on_request(beast::error_code ec) {
        if (ec) return;
        const std::string_view target(request_.target().data(), request_.target().size());
        const auto qpos = target.find('?');
        const std::string_view path = target.substr(0, qpos);
        if (path != "/v1/session" || !websocket::is_upgrade(request_)) {
            reply_not_found();
            return;
        }
        if (qpos != std::string_view::npos) {
            const auto query = parse_query(target.substr(qpos + 1));
            if (auto it = query.find("playbook_id"); it != query.end()) open_.playbook_id = it->second;
            if (auto it = query.find("adapter"); it != query.end()) open_.adapter = it->second;
            if (auto it = query.find("scenario"); it != query.end()) open_.scenario = it->second;
        }
        beast::get_lowest_layer(stream_).expires_never();
        stream_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        stream_.read_message_max(1 << 20);
        stream_.async_accept(request_, [self = shared_from_this()](beast::error_code e) {
            if (!e) self->read();
        });
    }

    void reply_not_found() {
        auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
        res->set(http::field::content_type, "text/plain");
        res->body() = "no such endpoint, use /v1/session\n";
        res->prepare_payload();
        http::async_write(beast::get_lowest_layer(stream_), *res,
                          [self = shared_from_this(), res](beast::error_code, std::size_t) {
                              beast::error_code ignored;
                              beast::get_lowest_layer(self->stream_).socket().shutdown(tcp::socket::shutdown_send,
                                                                                        ignored);
                          });
    }

    void read() {
        stream_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_read(ec);
        });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            on_disconnect();
            return;
        }
        const std::string data = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        const bool text_message = stream_.got_text();
        try {
            if (text_message) {
                handle_text(data);
            } else if (session_) {
                session_->ingest_binary(data);
            } else {
                push_error("not_started", "send session.start before audio");
            }
        } catch (const std::exception& e) {
            spdlog::error("session {}: {}", session_ ? session_->id() : "-", e.what());
            push_error("internal_error", e.what());
            if (session_) session_->begin_close("internal error");
            else close_after_flush_ = true;
        }
        pump();
        read();
    }

    void handle_text(const std::string& data) {
        Json message;
        try {
            message = Json::parse(data);
        } catch (const Json::parse_error&) {
            push_error("bad_message", "control message is not valid JSON");
            return;
        }
        if (session_) {
            session_->handle_control(message);
            return;
        }
        if (close_after_flush_) return;
        if (!message.is_object() || message.value("type", "") != "session.start") {
            push_error("not_started", "expected session.start");
            return;
        }
        try {
            OpenRequest req = open_;
            if (message.contains("playbook_id")) req.playbook_id = message.at("playbook_id").get<std::string>();
            if (message.contains("adapter")) req.adapter = message.at("adapter").get<std::string>();
            if (message.contains("scenario")) req.scenario = message.at("scenario").get<std::string>();
            if (message.contains("slots")) {
                for (const auto& [k, v] : message.at("slots").items()) req.slots[k] = v.get<std::string>();
            }
            session_ = core_->open_session(req);
            spdlog::info("session {} opened: playbook={} adapter={}", session_->id(), req.playbook_id, req.adapter);
        } catch (const ProtocolError& e) {
            push_error(e.code(), e.what());
            close_after_flush_ = true;
        } catch (const Json::exception& e) {
            push_error("bad_message", e.what());
        }
    }

    void push_error(const std::string& code, const std::string& message) {
        pre_.push_back({false, Json{{"type", "error"}, {"code", code}, {"message", message}}.dump()});
    }

    bool next_is_audio_blocked() {
        if (!session_ || !pre_.empty() || core_->config().pacing_ms <= 0) return false;
        if (!session_->next_is_audio()) return false;
        return std::chrono::steady_clock::now() < next_audio_at_;
    }

    void pump() {
        if (writing_ || waiting_ || closing_) return;
        if (next_is_audio_blocked()) {
            waiting_ = true;
            timer_.expires_at(next_audio_at_);
            timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
                self->waiting_ = false;
                if (!ec) self->pump();
            });
            return;
        }
        std::optional<Outbound> item;
        if (!pre_.empty()) {
            item = std::move(pre_.front());
            pre_.pop_front();
        } else if (session_) {
            item = session_->pop();
        }
        if (!item) {
            const bool done = close_after_flush_ || (session_ && session_->state() == SessionState::closing);
            if (done) close();
            return;
        }
        writing_ = true;
        current_ = std::move(*item);
        stream_.binary(current_.binary);
        stream_.async_write(net::buffer(current_.data), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_write(ec);
        });
    }

    void on_write(beast::error_code ec) {
        writing_ = false;
        if (ec) {
            on_disconnect();
            return;
        }
        if (current_.binary) {
            next_audio_at_ = std::chrono::steady_clock::now() + std::chrono::milliseconds(core_->config().pacing_ms);
        }
        pump();
    }

    void close() {
        closing_ = true;
        stream_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {
            self->finish("closed");
        });
    }

    void on_disconnect() {
        timer_.cancel();
        finish("client disconnected");
    }

    void finish(const std::string& why) {
        if (finished_) return;
        finished_ = true;
        if (!session_) return;
        if (session_->state() != SessionState::closing && session_->state() != SessionState::closed) {
            session_->begin_close(why);
        }
        const SessionMetrics m = session_->finish();
        spdlog::info("session {} {}: frames in={} out={} dropped={} rtf={:.3f} p50={}ms p95={}ms", session_->id(),
                     why, m.frames_in, m.frames_out, m.frames_dropped, m.rtf, m.p50_latency_ms, m.p95_latency_ms);
    }

    websocket::stream<beast::tcp_stream> stream_;
    std::shared_ptr<GatewayCore> core_;
    std::shared_ptr<Counters> counters_;
    net::steady_timer timer_;
    beast::flat_buffer http_buffer_;
    http::request<http::string_body> request_;
    beast::flat_buffer buffer_;

    OpenRequest open_;
    std::unique_ptr<Session> session_;
    std::deque<Outbound> pre_;
    Outbound current_;
    std::chrono::steady_clock::time_point next_audio_at_{};
    bool writing_ = false;
    bool waiting_ = false;
    bool closing_ = false;
    bool close_after_flush_ = false;
    bool finished_ = false;
};

}  // namespace

struct GatewayServer::Impl {
    std::shared_ptr<GatewayCore> core;
    net::io_context ioc;
    std::optional<tcp::acceptor> acceptor;
    std::vector<std::thread> threads;
    std::shared_ptr<Counters> counters = std::make_shared<Counters>();
    std::mutex mutex;
    std::condition_variable stopped_cv;
    bool stopped = false;
    std::uint16_t port = 0;

    explicit Impl(std::shared_ptr<GatewayCore> c)
        : core(std::move(c)), ioc(std::max(1, core->config().threads)) {}

    void accept() {
        acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) {
                if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
            } else {
                std::make_shared<Connection>(std::move(socket), core, counters)->run();
            }
            if (acceptor && acceptor->is_open()) accept();
        });
    }
};

GatewayServer::GatewayServer(std::shared_ptr<GatewayCore> core) : impl_(std::make_unique<Impl>(std::move(core))) {}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
    const auto& cfg = impl_->core->config();
    beast::error_code ec;
    const auto address = net::ip::make_address(cfg.bind, ec);
    if (ec) throw Error("invalid bind address '" + cfg.bind + "'");
    tcp::endpoint endpoint(address, cfg.port);
    auto& acceptor = impl_->acceptor.emplace(impl_->ioc);
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw Error("cannot listen on " + cfg.bind + ":" + std::to_string(cfg.port) + ": " + ec.message());
    impl_->port = acceptor.local_endpoint().port();
    impl_->accept();
    for (int i = 0; i < std::max(1, cfg.threads); ++i) {
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    }
    spdlog::info("gateway listening on {}:{}", cfg.bind, impl_->port);
}

void GatewayServer::stop() {
    if (!impl_) return;
    {
        std::lock_guard lock(impl_->mutex);
        if (impl_->stopped) return;
        impl_->stopped = true;
    }
    net::post(impl_->ioc, [this] {
        beast::error_code ignored;
        if (impl_->acceptor) impl_->acceptor->close(ignored);
    });
    impl_->ioc.stop();
    for (auto& t : impl_->threads) {
        if (t.joinable()) t.join();
    }
    impl_->threads.clear();
    impl_->stopped_cv.notify_all();
}

void GatewayServer::wait() {
    std::unique_lock lock(impl_->mutex);
    impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

std::uint16_t GatewayServer::port() const { return impl_->port; }
std::size_t GatewayServer::active_sessions() const { return impl_->counters->active; }
std::size_t GatewayServer::completed_sessions() const { return impl_->counters->completed; }

}  // namespace voiceclone
