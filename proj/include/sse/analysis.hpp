#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "sse/detection.hpp"
#include "sse/units.hpp"

namespace sse {

// Resonator filtering of off-resonant emission: (κ/2)/sqrt(Δω² + κ²/4).
double filter_function(double delta_omega, double kappa_tot);

// Three-pulse stimulated-echo amplitude law, sin β₁ · sin β₂ · sin β₃.
double ste_amplitude(double beta1, double beta2, double beta3);

// Geometric echo train A_{i+1} = η·A_i·sin β₁·sin β₂, n amplitudes from A1.
std::vector<double> predict_sse(double a1, double eta, double beta1, double beta2, int n);

struct EtaFit {
    double eta = 0.0;
    double residual_rms = 0.0;  // log domain
    std::vector<double> predicted;  // per-echo predicted amplitudes
};

// Least squares on log A_i vs i; η = exp(slope)/(sin β₁ sin β₂).
// Flagged records are excluded; needs >= 3 usable records.
EtaFit fit_eta(std::span<const EchoRecord> records, double beta1, double beta2);

// Same fit on raw amplitude values (1-indexed by position).
EtaFit fit_eta_amplitudes(std::span<const double> amplitudes, double beta1, double beta2);

struct LinearFit {
    double slope = 0.0;
    double r_squared = 0.0;  // computed about zero
};

// Ordinary least squares with zero intercept.
LinearFit fit_linear_through_origin(std::span<const double> x, std::span<const double> y);

struct CwFit {
    double g_ens = 0.0;   // rad/µs
    double gamma = 0.0;   // rad/µs
    double kappa = 0.0;   // rad/µs
    std::vector<double> cov_diag;  // (g_ens, Γ, κ)
    double residual_rms = 0.0;
    bool gamma_unidentifiable = false;
    bool converged = true;
};

// Fit κ_tot(Δω_s) = κ + g_ens²·Γ/(Δω_s² + Γ²/4) by damped least squares.
CwFit fit_cw_sweep(std::span<const double> delta_s, std::span<const double> kappa_tot_obs,
                   std::uint64_t seed = 0);

enum class RecoveryModel { Mono, Bi };

struct RecoveryFit {
    RecoveryModel model = RecoveryModel::Mono;
    std::vector<double> amplitudes;    // one (mono) or two (bi)
    std::vector<double> t1_constants;  // µs; bi ordered fast < slow
    double baseline = 0.0;
    double residual_rms = 0.0;
    bool t1_unidentifiable = false;
    bool converged = true;
};

// Inversion-recovery fit: Σ_m A_m (1 - 2 e^{-t/T1_m}) + B.
RecoveryFit fit_recovery(std::span<const double> t, std::span<const double> signal,
                         RecoveryModel model, std::uint64_t seed = 0);

// Matched-absorber relation C = |a_sat|/|a_pol| - 1 (resonant drive).
double cooperativity_from_fields(std::complex<double> a_sat, std::complex<double> a_pol);

struct AngleModel {
    double gamma_c = 0.0;           // rad/µs per mT
    double gamma_ab = 0.0;          // rad/µs per mT
    double misalignment_deg = 0.0;  // φ₀
    double omega0 = 0.0;            // rad/µs
};

// B_res(φ) = ω₀ / sqrt(γ_c² cos²(φ-φ₀) + γ_ab² sin²(φ-φ₀)), in mT.
double resonance_field(double phi_deg, const AngleModel& model);

}  // namespace sse
