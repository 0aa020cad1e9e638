#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "voiceclone/gateway.hpp"
#include "voiceclone/playbook.hpp"

namespace vc_test {

std::filesystem::path source_path(const std::string& relative);

// Fresh scratch directory under the build tree, emptied on each call.
std::filesystem::path scratch_dir(const std::string& name);

voiceclone::AgentPlaybook golden_playbook();

// The canonical defect for each lint code, applied to a copy of `pb`.
voiceclone::AgentPlaybook inject_defect(const voiceclone::AgentPlaybook& pb, voiceclone::LintCode code);

// In-process gateway on an ephemeral port with the golden playbook
// registered as "golden" and the committed scenarios available.
struct LocalGateway {
    std::shared_ptr<voiceclone::GatewayCore> core;
    std::unique_ptr<voiceclone::GatewayServer> server;

    explicit LocalGateway(voiceclone::GatewayConfig config);
    ~LocalGateway();
    std::uint16_t port() const { return server->port(); }
};

voiceclone::GatewayConfig test_gateway_config();

struct EchoRun {
    std::size_t frames_sent = 0;
    std::size_t frames_received = 0;
    bool audio_identical = false;
    bool seq_gapless = false;
    std::uint64_t frames_dropped = 0;
    double rtf = 0.0;
    std::size_t turns_completed = 0;
    double wall_s = 0.0;
    std::string error;
};

// Streams `seconds` of the fixture PCM through the echo adapter in
// utterances of `utterance_frames`, each closed by audio.end.
EchoRun run_echo_loopback(std::uint16_t port, int seconds, std::size_t utterance_frames = 100,
                          std::size_t window = 50);

struct BargeInRun {
    std::size_t audio_before_cancel = 0;
    std::size_t audio_after_cancel = 0;
    bool cancel_seen = false;
    std::string error;
};

// Scripted 10-frame opening, barge_in sent once the 4th frame arrives.
BargeInRun run_barge_in(std::uint16_t port, std::size_t barge_after = 4);

}  // namespace vc_test
