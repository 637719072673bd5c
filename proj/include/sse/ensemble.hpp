#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sse/units.hpp"

namespace sse {

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// One discretized sub-population of the spin ensemble.
struct SpinBin {
    double detuning = 0.0;  // rad/µs, relative to the bare cavity frequency
    double coupling = 0.0;  // rad/µs, single-bin coupling rate
    double weight = 0.0;    // number of spins this bin stands for
    BlochVector bloch;      // spin-1/2 expectation values, |S| <= 1/2
};

enum class Lineshape { Lorentzian, Gaussian };
enum class CouplingDist { Uniform, Annulus };
enum class DetuningSampling { QuantileGrid, Random };

struct EnsembleSpec {
    int n_bins = 1000;
    Lineshape lineshape = Lineshape::Lorentzian;
    double linewidth_fwhm = 0.0;        // Γ, rad/µs (FWHM convention)
    double truncation_halfwidth = 5.0;  // in multiples of Γ
    CouplingDist coupling_dist = CouplingDist::Uniform;
    double g_min = 0.0;  // rad/µs
    double g_max = 0.0;  // rad/µs
    DetuningSampling sampling = DetuningSampling::QuantileGrid;
    // Coupling quantile nodes per detuning bin. With > 1 the ensemble is a
    // tensor grid of n_bins detunings × coupling_subbins couplings, so every
    // detuning sees the same coupling average and the spectral source profile
    // stays smooth even for strongly inhomogeneous Rabi angles.
    int coupling_subbins = 1;
    double n_effective = 1.0;          // total weight Σ w_j
    double t1 = kInf;                  // µs
    double t2 = kInf;                  // µs
    double initial_polarization = 1.0; // p₀ ∈ [-1, 1]
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError naming the bad field
};

struct EnsembleQuantities {
    double g_ens = 0.0;        // rad/µs, weighted RMS coupling
    double n_effective = 0.0;  // Σ w_j
    double cooperativity = 0.0;
};

// Discretize the spec into bins. Deterministic for a given (spec, seed).
// Bloch vectors start at (0, 0, -p₀/2).
std::vector<SpinBin> build_ensemble(const EnsembleSpec& spec);

// Coupling density for spins uniform in a 2-D annulus with g ∝ 1/r:
// pdf(g) ∝ 1/g³ on [g_min, g_max], normalized.
double annulus_coupling_pdf(double g, double g_min, double g_max);

// g_ens = sqrt(Σ w g²), C = 4 g_ens² / (Γ κ_tot).
EnsembleQuantities ensemble_quantities(std::span<const SpinBin> bins,
                                       double linewidth_fwhm, double kappa_tot);

// Multiply every bin coupling by `factor` (used for cooperativity sweeps).
void scale_couplings(std::vector<SpinBin>& bins, double factor);

// Factor that scale_couplings needs to reach a target g_ens.
double coupling_scale_for_target(std::span<const SpinBin> bins, double g_ens_target);

namespace detail {
// Inverse CDF helpers, exposed for tests.
double normal_quantile(double p);  // Φ⁻¹, p ∈ (0, 1)
double lorentzian_quantile_truncated(double u, double fwhm, double halfwidth);
double gaussian_quantile_truncated(double u, double fwhm, double halfwidth);
double annulus_coupling_quantile(double u, double g_min, double g_max);
}  // namespace detail

}  // namespace sse
