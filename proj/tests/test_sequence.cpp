#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "sse/errors.hpp"
#include "sse/sequence.hpp"

using namespace sse;

TEST_CASE("two-pulse Hahn sequence parses with inferred tau") {
    const auto seq = parse_sequence("pulse 0 2 1.0 0\npulse 25 2 1.0 0\nend 160\n");
    REQUIRE(seq.drives.size() == 2);
    CHECK(seq.tau == doctest::Approx(25.0));
    CHECK(seq.total_duration == doctest::Approx(160.0));
    CHECK(seq.drives[1].t_start == doctest::Approx(25.0));
}

TEST_CASE("empty body with end line is a valid event-free sequence") {
    const auto seq = parse_sequence("# nothing here\nend 10\n");
    CHECK(seq.drives.empty());
    CHECK(seq.detunes.empty());
    CHECK(seq.total_duration == doctest::Approx(10.0));
}

TEST_CASE("overlapping drive pulses are rejected with both events named") {
    CHECK_THROWS_WITH_AS(parse_sequence("pulse 0 5 1 0\npulse 3 5 1 0\nend 20\n"),
                         doctest::Contains("overlap"), SequenceError);
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse_sequence("pulse 0 2 1 0\npulse 25 x 1 0\nend 160\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.col == 10);
    }
    CHECK_THROWS_AS(parse_sequence("pulse 0 2 1 0\nend"), ParseError);
    CHECK_THROWS_AS(parse_sequence("bogus 1 2\nend 10\n"), ParseError);
    CHECK_THROWS_AS(parse_sequence("pulse 0 2 1 0\n"), ParseError);  // missing end
}

TEST_CASE("events past the end are rejected") {
    CHECK_THROWS_AS(parse_sequence("pulse 0 2 1 0\npulse 5 2 1 0\nend 6\n"), SequenceError);
    CHECK_THROWS_AS(parse_sequence("detune 8 5 3\nend 10\n"), SequenceError);
}

TEST_CASE("round-trip of the fig2a preset is identical") {
    PresetParams p;
    p.detune_mhz = 4.0;
    const auto seq = make_preset("fig2a", p);
    CHECK(parse_sequence(serialize_sequence(seq)) == seq);
    CHECK(sequence_from_json(sequence_to_json(seq)) == seq);
}

TEST_CASE("serialized detune window appears as one detune line") {
    PulseSequence seq;
    seq.drives.push_back({0.0, 2.0, 1.0, 0.0});
    seq.detunes.push_back({10.0, 20.0, 5.5});
    seq.total_duration = 40.0;
    seq.tau = 8.0;
    const std::string text = serialize_sequence(seq);
    CHECK(text.find("detune 10 20 5.5\n") != std::string::npos);
}

TEST_CASE("property: parse(serialize) is the identity on random sequences") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        PulseSequence seq;
        double t = uni(rng) * 3.0;
        const int n_drives = 1 + static_cast<int>(uni(rng) * 4);
        for (int i = 0; i < n_drives; ++i) {
            DrivePulse p;
            p.t_start = t;
            p.duration = 0.1 + uni(rng) * 5.0;
            p.amplitude_rel = uni(rng) * 2.0;
            p.phase_deg = (uni(rng) - 0.5) * 720.0;
            seq.drives.push_back(p);
            t += p.duration + 0.1 + uni(rng) * 10.0;
        }
        double td = 0.5;
        const int n_windows = static_cast<int>(uni(rng) * 3);
        for (int i = 0; i < n_windows; ++i) {
            DetuneWindow w;
            w.t_start = t + td;
            w.duration = 0.1 + uni(rng) * 8.0;
            w.delta_mhz = (uni(rng) - 0.5) * 30.0;
            seq.detunes.push_back(w);
            td += w.duration + 0.1 + uni(rng) * 5.0;
        }
        seq.total_duration = t + td + 20.0;
        seq.tau = (trial % 3 == 0) ? 1.0 + uni(rng) * 30.0
                                   : (seq.drives.size() >= 2
                                          ? seq.drives[1].t_start - seq.drives[0].t_start
                                          : seq.total_duration / 2.0);
        const auto text_rt = parse_sequence(serialize_sequence(seq));
        CHECK(text_rt == seq);
        const auto json_rt = sequence_from_json(sequence_to_json(seq));
        CHECK(json_rt == seq);
    }
}

TEST_CASE("fig2a with zero detuning equals the plain two-pulse sequence plus a null window") {
    PresetParams p;
    const auto seq = make_preset("fig2a", p);
    REQUIRE(seq.detunes.size() == 1);
    CHECK(seq.detunes[0].delta_mhz == 0.0);
    CHECK(seq.detunes[0].t_start == doctest::Approx(2 * 25.0 - 10.0));
    const auto plain = make_preset("fig3e", p);
    CHECK(plain.drives == seq.drives);
    CHECK(plain.detunes.empty());
}

TEST_CASE("fig1b suppression window is centered on the requested echo") {
    PresetParams p;
    p.suppress_echo = 2;  // echo2 at 3τ
    const auto seq = make_preset("fig1b", p);
    REQUIRE(seq.detunes.size() == 1);
    const auto& w = seq.detunes[0];
    CHECK(w.t_start + w.duration / 2.0 == doctest::Approx(3.0 * p.tau));
}

TEST_CASE("fig1b between-echo variant avoids both echo windows") {
    PresetParams p;
    p.tau = 25.0;
    p.suppress_echo = 1;
    p.between_echoes = true;
    p.window_duration = 8.0;
    const auto seq = make_preset("fig1b", p);
    const auto& w = seq.detunes[0];
    CHECK(w.t_start + w.duration / 2.0 == doctest::Approx(2.5 * p.tau));
    // does not touch the ±5 µs echo windows at 2τ and 3τ
    CHECK(w.t_start > 2.0 * p.tau + 5.0);
    CHECK(w.t_end() < 3.0 * p.tau - 5.0);
}

TEST_CASE("preset parameters implying overlap are rejected") {
    PresetParams p;
    p.tau = 1.0;  // second pulse would start inside the first
    p.pulse_duration = 2.0;
    CHECK_THROWS_AS(make_preset("fig3e", p), SequenceError);
    CHECK_THROWS_AS(make_preset("nope", p), SequenceError);
}
