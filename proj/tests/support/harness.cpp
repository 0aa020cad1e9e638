#include "harness.hpp"

#include <map>

#include "voiceclone/client.hpp"
#include "voiceclone/error.hpp"
#include "voiceclone/io.hpp"

namespace fs = std::filesystem;
using namespace voiceclone;
using namespace std::chrono_literals;

namespace vc_test {

fs::path source_path(const std::string& relative) { return fs::path(VC_SOURCE_DIR) / relative; }

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::path(VC_BINARY_DIR) / "test_scratch" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

AgentPlaybook golden_playbook() { return load_playbook(source_path("tests/golden/playbook.json")); }

AgentPlaybook inject_defect(const AgentPlaybook& pb, LintCode code) {
    AgentPlaybook out = pb;
    switch (code) {
        case LintCode::AMBIGUOUS_OBJECTIVE:
            out.role_definition.primary_goal = "help customers with their internet needs";
            break;
        case LintCode::REDUNDANT_INSTRUCTIONS:
            out.persona_style.push_back("Keep each turn short and conversational");
            break;
        case LintCode::FORMATTING_ARTEFACTS:
            out.stage(FlowStage::pitch)->guidance = "1. Say hello. " + out.stage(FlowStage::pitch)->guidance;
            break;
        case LintCode::OVERCAUTIOUS_POLITENESS: {
            std::erase_if(out.persona_style, [](const std::string& s) { return is_steering_example(s); });
            for (auto& step : out.conversation_flow) {
                if (is_steering_example(step.guidance)) {
                    step.guidance = "Acknowledge each concern and respond with empathy and concrete value.";
                }
            }
            for (auto& tactic : out.objection_tactics) {
                if (is_steering_example(tactic.tactic)) tactic.tactic = "Acknowledge the concern with empathy.";
            }
            for (auto& dialogue : out.example_dialogues) {
                std::erase_if(dialogue.turns, [](const Turn& t) {
                    return t.speaker == Speaker::agent && is_steering_example(t.text);
                });
            }
            out.persona_style.push_back("Apologize whenever the customer sounds unhappy");
            break;
        }
    }
    return out;
}

GatewayConfig test_gateway_config() {
    GatewayConfig g;
    g.port = 0;
    g.threads = 2;
    g.playbook_dir = source_path("playbooks");
    g.scenario_dir = source_path("data/scenarios");
    return g;
}

LocalGateway::LocalGateway(GatewayConfig config) {
    core = std::make_shared<GatewayCore>(std::move(config));
    core->scenarios().add("barge_in_10", load_scenario(source_path("fixtures/scenarios/barge_in_10.json")));
    server = std::make_unique<GatewayServer>(core);
    server->start();
}

LocalGateway::~LocalGateway() { server->stop(); }

EchoRun run_echo_loopback(std::uint16_t port, int seconds, std::size_t utterance_frames, std::size_t window) {
    EchoRun run;
    const auto started = std::chrono::steady_clock::now();
    try {
        const std::string fixture = read_text_file(source_path("fixtures/audio/customer_10s.pcm"));
        const std::size_t total_bytes = static_cast<std::size_t>(seconds) * kSampleRate * kBytesPerSample;
        std::string pcm;
        while (pcm.size() < total_bytes) pcm += fixture;
        pcm.resize(total_bytes);
        const std::size_t total_frames = pcm.size() / kFrameBytes;

        HeadlessClient client("127.0.0.1", port, {{"playbook_id", "golden"}, {"adapter", "echo"}});
        client.send_json({{"type", "session.start"}});
        client.expect("session.started", 5s);

        std::string received;
        std::uint32_t expected_seq = 1;
        bool gapless = true;
        auto handle = [&](const ClientMessage& m) {
            if (m.binary) {
                gapless = gapless && m.frame.seq == expected_seq;
                ++expected_seq;
                received += m.frame.pcm;
                ++run.frames_received;
            } else if (m.json.value("type", "") == "agent.turn.complete") {
                ++run.turns_completed;
            } else if (m.json.value("type", "") == "error") {
                throw Error("gateway error: " + m.json.dump());
            }
        };

        for (std::size_t f = 0; f < total_frames; ++f) {
            while (run.frames_sent - run.frames_received >= window) {
                auto m = client.next(10s);
                if (!m) throw Error("timed out waiting for echoed audio");
                handle(*m);
            }
            AudioFrame frame{static_cast<std::uint32_t>(f + 1), f * kFrameMs, pcm.substr(f * kFrameBytes, kFrameBytes)};
            client.send_frame(frame);
            ++run.frames_sent;
            if ((f + 1) % utterance_frames == 0 || f + 1 == total_frames) client.send_json({{"type", "audio.end"}});
        }
        const std::size_t turns = (total_frames + utterance_frames - 1) / utterance_frames;
        while (run.turns_completed < turns) {
            auto m = client.next(10s);
            if (!m) throw Error("timed out waiting for turn completion");
            handle(*m);
        }
        client.send_json({{"type", "session.close"}});
        std::vector<ClientMessage> before;
        const ClientMessage metrics = client.expect("session.metrics", 10s, &before);
        for (const auto& m : before) handle(m);

        run.audio_identical = received == pcm;
        run.seq_gapless = gapless && run.frames_received == total_frames;
        run.frames_dropped = metrics.json.at("frames_dropped").get<std::uint64_t>();
        run.rtf = metrics.json.at("rtf").get<double>();
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    run.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return run;
}

BargeInRun run_barge_in(std::uint16_t port, std::size_t barge_after) {
    BargeInRun run;
    try {
        HeadlessClient client("127.0.0.1", port,
                              {{"playbook_id", "golden"}, {"adapter", "scripted"}, {"scenario", "barge_in_10"}});
        client.send_json({{"type", "session.start"}});
        client.expect("session.started", 5s);
        bool sent = false;
        while (!run.cancel_seen) {
            auto m = client.next(5s);
            if (!m) throw Error("timed out before playback.cancel");
            if (m->binary) {
                ++run.audio_before_cancel;
                if (!sent && run.audio_before_cancel == barge_after) {
                    client.send_json({{"type", "barge_in"}});
                    sent = true;
                }
            } else {
                const std::string type = m->json.value("type", "");
                if (type == "playback.cancel") run.cancel_seen = true;
                if (type == "agent.turn.complete") throw Error("turn completed before the cancel");
                if (type == "error") throw Error("gateway error: " + m->json.dump());
            }
        }
        // Anything of the cancelled turn still arriving would show up here.
        const auto until = std::chrono::steady_clock::now() + 60ms;
        while (std::chrono::steady_clock::now() < until) {
            auto m = client.next(20ms);
            if (m && m->binary) ++run.audio_after_cancel;
        }
        client.send_json({{"type", "session.close"}});
        client.expect("session.metrics", 5s);
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    return run;
}

}  // namespace vc_test
