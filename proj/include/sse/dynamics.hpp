#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "sse/ensemble.hpp"
#include "sse/sequence.hpp"

namespace sse {

struct CavityParams {
    double kappa_c = 0.0;         // rad/µs, external (coupling) loss
    double kappa_int = 0.0;       // rad/µs, internal loss
    double drive_rate_ref = 1.0;  // ε₀, rad/µs; pulses scale this by amp_rel

    double kappa_tot() const { return kappa_c + kappa_int; }
    void validate() const;
};

// Phenomenological relaxation shared by all bins.
struct Relaxation {
    double t1 = kInf;     // µs
    double t2 = kInf;     // µs
    double sz_eq = -0.5;  // equilibrium s_z = -p₀/2
};

struct SimConfig {
    double dt = 1e-3;        // µs, fixed RK4 step
    int output_stride = 1;   // steps per stored sample
};

// Uniformly sampled time series of the intra-cavity field.
struct Trace {
    std::vector<double> times;               // µs, uniform stride
    std::vector<std::complex<double>> a;     // intra-cavity amplitude
    double kappa_c = 0.0;
    std::vector<SpinBin> final_bins;         // bin states at sequence end
    std::vector<std::string> warnings;

    std::complex<double> emitted(std::size_t i) const {
        return std::sqrt(kappa_c) * a[i];
    }
    double dt_sample() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

// Integrate the mean-field cavity/spin equations of motion over the sequence:
//   da/dt    = -(κ_tot/2 + iΔc(t))·a - i·Σ_j w_j g_j s⁻_j + ε(t)
//   ds⁻_j/dt = -(1/T2 + iδ_j)·s⁻_j + 2i·g_j·a·s^z_j
//   ds^z_j/dt = -(s^z_j - s^z_eq)/T1 + i·g_j·(conj(a)·s⁻_j - a·conj(s⁻_j))
// Rotating frame at the bare cavity frequency; detune windows enter Δc(t) only.
// Classic fixed-step RK4 with steps snapped to event edges; the per-bin free
// precession exp(-iδ_j t) is factored out analytically so the step size is not
// limited by accuracy of the fastest detuned bins. Input bins are not modified.
Trace integrate(std::span<const SpinBin> bins, const Relaxation& relax,
                const CavityParams& cavity, const PulseSequence& seq,
                const SimConfig& cfg);

enum class SpinState { Saturated, Polarized };

// Resonant weak-drive steady-state intra-cavity amplitude, by direct linear
// solve. Saturated: all s_z = 0 → a = 2ε/κ_tot. Polarized: all s_z = -1/2.
std::complex<double> steady_state_field(std::span<const SpinBin> bins,
                                        const CavityParams& cavity, double drive,
                                        SpinState state, double t2);

// CSV export with columns time_us, re_a, im_a, abs_a, re_out, im_out.
std::string trace_to_csv(const Trace& trace);

}  // namespace sse
