#include <doctest.h>

#include "../support/harness.hpp"
#include "voiceclone/error.hpp"
#include "voiceclone/io.hpp"
#include "voiceclone/wire.hpp"

using namespace voiceclone;
using vc_test::source_path;

TEST_CASE("frames encode byte-identical to the conformance vectors") {
    const Json manifest = parse_json_file(source_path("fixtures/wire/manifest.json"));
    REQUIRE(manifest.at("vectors").size() == 7);
    for (const auto& v : manifest.at("vectors")) {
        const std::string name = v.at("name").get<std::string>();
        CAPTURE(name);
        const std::string bytes = read_text_file(source_path("fixtures/wire/" + name + ".bin"));
        REQUIRE(bytes.size() == v.at("total_bytes").get<std::size_t>());

        const DecodedFrame d = decode_frame(bytes);
        CHECK(d.problem.empty());
        CHECK(d.frame.seq == v.at("seq").get<std::uint32_t>());
        CHECK(d.frame.pts_ms == v.at("pts_ms").get<std::uint64_t>());
        CHECK(d.frame.pcm.size() == v.at("payload_bytes").get<std::size_t>());
        CHECK(encode_frame(d.frame) == bytes);
    }
}

TEST_CASE("synthetic tone matches the independent encoder") {
    const std::string bytes = read_text_file(source_path("fixtures/wire/tone_440.bin"));
    CHECK(encode_frame({3, 40, tone_pcm(440, 1)}) == bytes);
}

TEST_CASE("header layout") {
    const std::string b = encode_frame({0x01020304, 0x0A0B0C0D0E0F1011ULL, std::string("\x34\x12", 2)});
    REQUIRE(b.size() == kFrameHeaderBytes + 2);
    CHECK(static_cast<unsigned char>(b[0]) == 0x01);
    CHECK(b.substr(1, 4) == std::string("\x01\x02\x03\x04", 4));
    CHECK(b.substr(5, 8) == std::string("\x0A\x0B\x0C\x0D\x0E\x0F\x10\x11", 8));
    CHECK(b.substr(13) == std::string("\x34\x12", 2));
}

TEST_CASE("payload problems") {
    CHECK(payload_problem(0).empty());
    CHECK(payload_problem(640).empty());
    CHECK(payload_problem(kMaxPayloadBytes).empty());
    CHECK(payload_problem(641) == "odd_payload");
    CHECK(payload_problem(kMaxPayloadBytes + 2) == "frame_too_large");
    CHECK_THROWS_AS(encode_frame({1, 0, std::string(3, 'x')}), ProtocolError);
    CHECK_THROWS_AS(encode_frame({1, 0, std::string(kMaxPayloadBytes + 2, 'x')}), ProtocolError);

    const std::string odd = encode_frame({5, 0, "ab"}) + "c";
    const DecodedFrame d = decode_frame(odd);
    CHECK(d.problem == "odd_payload");
    CHECK(d.frame.seq == 5);
}

TEST_CASE("malformed headers") {
    try {
        decode_frame(std::string("\x01\x00\x00", 3));
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(e.code() == "malformed_frame");
    }
    std::string wrong_tag = encode_frame({1, 0, ""});
    wrong_tag[0] = 0x02;
    CHECK_THROWS_AS(decode_frame(wrong_tag), ProtocolError);
}
