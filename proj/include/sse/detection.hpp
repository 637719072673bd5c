#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "sse/dynamics.hpp"

namespace sse {

struct EchoRecord {
    int k = 0;              // echo number, 1-based: echo1 at 2τ
    double t_peak = 0.0;    // µs, argmax of |emitted|
    // Amplitude-weighted centroid of the samples at or above half the peak.
    // Robust position estimate for flat-topped echo pulses, whose argmax can
    // sit on an edge ripple.
    double t_centroid = 0.0;
    double peak_mag = 0.0;  // max |emitted| in the window
    std::complex<double> area;  // ∫ emitted dt over the window
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool flagged = false;   // below the noise floor
};

struct DetectionOptions {
    double noise_mult = 3.0;  // noise floor = noise_mult × RMS over the quiet segment
    // Quiet segment for the noise estimate; NaN → default [1.5τ, 1.9τ].
    double quiet_lo = std::numeric_limits<double>::quiet_NaN();
    double quiet_hi = std::numeric_limits<double>::quiet_NaN();
    // When given, echo windows are checked against these drive pulses.
    std::span<const DrivePulse> drives;
};

// One record per k = 1..n_max, window centered at (k+1)·τ. Records below the
// noise floor are flagged, not dropped.
std::vector<EchoRecord> extract_echoes(const Trace& trace, double tau, int n_max,
                                       double window_halfwidth,
                                       const DetectionOptions& opts = {});

// Argument of the integrated complex area, in (-π, π]. Rejects flagged records.
double echo_phase(const EchoRecord& record);

// CSV export: k, t_peak_us, t_centroid_us, peak_mag, area_re, area_im, flagged.
std::string echoes_to_csv(std::span<const EchoRecord> records);

}  // namespace sse
