#include "voiceclone/client.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "voiceclone/error.hpp"

namespace voiceclone {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct HeadlessClient::Impl {
    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    beast::flat_buffer buffer;
    std::thread thread;

    // I/O thread only
    std::deque<std::pair<bool, std::string>> outbox;
    bool writing = false;

    std::mutex mutex;
    std::condition_variable cv;
    std::deque<ClientMessage> inbox;
    bool closed = false;

    void read() {
        ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
            if (ec) {
                std::lock_guard lock(mutex);
                closed = true;
                cv.notify_all();
                return;
            }
            ClientMessage m;
            m.binary = !ws.got_text();
            m.raw = beast::buffers_to_string(buffer.data());
            buffer.consume(buffer.size());
            if (m.binary) {
                try {
                    m.frame = decode_frame(m.raw).frame;
                } catch (const ProtocolError&) {
                }
            } else {
                m.json = Json::parse(m.raw, nullptr, false);
            }
            {
                std::lock_guard lock(mutex);
                inbox.push_back(std::move(m));
            }
            cv.notify_all();
            read();
        });
    }

    void enqueue(bool binary, std::string data) {
        net::post(ioc, [this, binary, data = std::move(data)]() mutable {
            outbox.emplace_back(binary, std::move(data));
            write();
        });
    }

    void write() {
        if (writing || outbox.empty()) return;
        writing = true;
        ws.binary(outbox.front().first);
        ws.async_write(net::buffer(outbox.front().second), [this](beast::error_code ec, std::size_t) {
            writing = false;
            outbox.pop_front();
            if (ec) {
                outbox.clear();
                return;
            }
            write();
        });
    }
};

HeadlessClient::HeadlessClient(const std::string& host, std::uint16_t port, const Query& query,
                               const std::string& path)
    : impl_(std::make_unique<Impl>()) {
    std::string target = path;
    char sep = '?';
    for (const auto& [k, v] : query) {
        target += sep + url_encode(k) + "=" + url_encode(v);
        sep = '&';
    }
    try {
        tcp::resolver resolver(impl_->ioc);
        const auto results = resolver.resolve(host, std::to_string(port));
        beast::get_lowest_layer(impl_->ws).expires_after(std::chrono::seconds(10));
        beast::get_lowest_layer(impl_->ws).connect(results);
        beast::get_lowest_layer(impl_->ws).socket().set_option(tcp::no_delay(true));
        impl_->ws.handshake(host + ":" + std::to_string(port), target);
        beast::get_lowest_layer(impl_->ws).expires_never();
    } catch (const beast::system_error& e) {
        throw Error("cannot connect to gateway at " + host + ":" + std::to_string(port) + ": " + e.code().message());
    }
    impl_->ws.read_message_max(1 << 20);
    impl_->read();
    impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

HeadlessClient::~HeadlessClient() {
    try {
        close();
    } catch (...) {
    }
    impl_->ioc.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void HeadlessClient::send_json(const Json& message) { impl_->enqueue(false, message.dump()); }

void HeadlessClient::send_frame(const AudioFrame& frame) { impl_->enqueue(true, encode_frame(frame)); }

void HeadlessClient::send_binary(std::string bytes) { impl_->enqueue(true, std::move(bytes)); }

std::size_t HeadlessClient::send_audio(const std::string& pcm) {
    std::size_t frames = 0;
    for (std::size_t off = 0; off < pcm.size(); off += kFrameBytes) {
        AudioFrame f{++seq_, pts_ms_, pcm.substr(off, kFrameBytes)};
        pts_ms_ += static_cast<std::uint64_t>(pcm_duration_ms(f.pcm.size()));
        send_frame(f);
        ++frames;
    }
    return frames;
}

std::optional<ClientMessage> HeadlessClient::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(impl_->mutex);
    impl_->cv.wait_for(lock, timeout, [this] { return !impl_->inbox.empty() || impl_->closed; });
    if (impl_->inbox.empty()) return std::nullopt;
    ClientMessage m = std::move(impl_->inbox.front());
    impl_->inbox.pop_front();
    return m;
}

ClientMessage HeadlessClient::expect(const std::string& type, std::chrono::milliseconds timeout,
                                     std::vector<ClientMessage>* before) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        auto m = next(std::max(left, std::chrono::milliseconds(0)));
        if (!m) {
            throw Error(closed() ? "connection closed while waiting for " + type : "timed out waiting for " + type);
        }
        if (!m->binary && m->json.is_object() && m->json.value("type", "") == type) return std::move(*m);
        if (before) before->push_back(std::move(*m));
    }
}

bool HeadlessClient::closed() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->closed;
}

void HeadlessClient::close() {
    {
        std::lock_guard lock(impl_->mutex);
        if (impl_->closed) return;
    }
    net::post(impl_->ioc, [this] {
        impl_->ws.async_close(websocket::close_code::normal, [](beast::error_code) {});
    });
    std::unique_lock lock(impl_->mutex);
    impl_->cv.wait_for(lock, std::chrono::seconds(5), [this] { return impl_->closed; });
}

std::string HeadlessClient::url_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
            c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

}  // namespace voiceclone
