#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sse/units.hpp"

namespace sse {

// Rectangular drive pulse. Amplitude is a dimensionless multiplier of the
// config-level reference drive rate ε₀; phase is kept in file units (degrees)
// so round-trips are exact.
struct DrivePulse {
    double t_start = 0.0;       // µs
    double duration = 0.0;      // µs
    double amplitude_rel = 1.0;
    double phase_deg = 0.0;

    double t_end() const { return t_start + duration; }
    double phase_rad() const { return deg_to_rad(phase_deg); }
    // Drive rate ε entering the cavity equation, rad/µs.
    double drive_rate(double eps0) const { return eps0 * amplitude_rel; }

    bool operator==(const DrivePulse&) const = default;
};

// Resonator detuning window (fast-tuning channel), step transitions.
struct DetuneWindow {
    double t_start = 0.0;   // µs
    double duration = 0.0;  // µs
    double delta_mhz = 0.0; // cavity detuning while active, linear MHz

    double t_end() const { return t_start + duration; }
    double delta_rad_per_us() const { return mhz_to_rad_per_us(delta_mhz); }

    bool operator==(const DetuneWindow&) const = default;
};

struct PulseSequence {
    std::vector<DrivePulse> drives;
    std::vector<DetuneWindow> detunes;
    double total_duration = 0.0;  // µs
    double tau = 0.0;             // µs, nominal delay for echo bookkeeping

    // Echo k (1-based) is expected at (k+1)·τ from the first pulse's start.
    double echo_time(int k) const { return (k + 1) * tau; }

    void validate() const;  // throws SequenceError

    bool operator==(const PulseSequence&) const = default;
};

// Line-oriented text format, one event per line:
//   pulse <t_start_us> <dur_us> <amp_rel> <phase_deg>
//   detune <t_start_us> <dur_us> <delta_MHz>
//   tau <us>              (optional; default: gap between first two pulses)
//   end <total_us>
// '#' starts a comment. Throws ParseError (syntax) or SequenceError (semantics).
PulseSequence parse_sequence(std::string_view text);

// Inverse of parse_sequence; values formatted so the round-trip is bit-exact.
std::string serialize_sequence(const PulseSequence& seq);

// Equivalent JSON form, also bit-exact round-trip.
nlohmann::json sequence_to_json(const PulseSequence& seq);
PulseSequence sequence_from_json(const nlohmann::json& j);

struct PresetParams {
    double tau = 25.0;             // µs
    double pulse_duration = 2.0;   // µs
    double amp1 = 1.0;             // first control pulse, relative amplitude
    double amp2 = 1.0;             // second control pulse
    double detune_mhz = 0.0;       // Δω of the detune window, linear MHz
    double window_duration = 20.0; // µs
    double window_offset = 0.0;    // µs, shift of the window from its nominal center
    int suppress_echo = 1;         // fig1b: which echo the window sits on
    bool between_echoes = false;   // fig1b dashed variant: window between echoes
    double total_duration = 0.0;   // 0 → automatic (6τ + 10)
};

// Named protocols: fig1b (silencing / between-echo control), fig2a (silencing
// sweep across echo1), fig2e (β₁ variation), fig3e (plain two-pulse train).
PulseSequence make_preset(std::string_view name, const PresetParams& p);

}  // namespace sse
