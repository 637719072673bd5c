#include <doctest.h>

#include <cmath>
#include <complex>

#include "sse/dynamics.hpp"
#include "sse/ensemble.hpp"
#include "sse/errors.hpp"
#include "sse/sequence.hpp"

using namespace sse;
using cplx = std::complex<double>;

namespace {

PulseSequence drive_and_window() {
    PulseSequence seq;
    seq.drives.push_back({0.0, 2.0, 0.8, 30.0});
    seq.detunes.push_back({4.0, 2.0, 3.0});
    seq.total_duration = 10.0;
    seq.tau = 5.0;
    return seq;
}

// Piecewise-exponential solution of da/dt = -(κ/2 + iΔc)a + ε between samples,
// with ε and Δc looked up at the interval midpoint (they are constant there as
// long as event edges align with the sample grid).
std::vector<cplx> analytic_empty_cavity(const PulseSequence& seq, const CavityParams& cav,
                                        double dt_out, std::size_t n_samp) {
    std::vector<cplx> a(n_samp, 0.0);
    for (std::size_t k = 1; k < n_samp; ++k) {
        const double tm = (k - 0.5) * dt_out;
        cplx eps(0.0, 0.0);
        for (const auto& p : seq.drives) {
            if (tm >= p.t_start && tm < p.t_end()) {
                const double e = p.drive_rate(cav.drive_rate_ref);
                eps = {e * std::cos(p.phase_rad()), e * std::sin(p.phase_rad())};
            }
        }
        double dcav = 0.0;
        for (const auto& w : seq.detunes) {
            if (tm >= w.t_start && tm < w.t_end()) dcav = w.delta_rad_per_us();
        }
        const cplx lam(cav.kappa_tot() / 2.0, dcav);
        const cplx decay = std::exp(-lam * dt_out);
        a[k] = a[k - 1] * decay + eps * (1.0 - decay) / lam;
    }
    return a;
}

// Small band-limited ensemble with strongly inhomogeneous couplings.
std::vector<SpinBin> small_ensemble(double n_effective) {
    EnsembleSpec s;
    s.n_bins = 100;
    s.coupling_subbins = 4;
    s.lineshape = Lineshape::Lorentzian;
    s.linewidth_fwhm = mhz_to_rad_per_us(10.0);
    s.truncation_halfwidth = 0.3;  // ±3 MHz band
    s.coupling_dist = CouplingDist::Annulus;
    s.g_min = 0.02;
    s.g_max = 0.2;
    s.n_effective = n_effective;
    return build_ensemble(s);
}

double bloch_norm(const BlochVector& b) {
    return std::sqrt(b.x * b.x + b.y * b.y + b.z * b.z);
}

}  // namespace

TEST_CASE("empty cavity follows the analytic damped driven response to 1e-8") {
    const auto seq = drive_and_window();
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.0);
    cav.drive_rate_ref = 5.0;

    SimConfig cfg;
    cfg.dt = 2e-4;
    cfg.output_stride = 10;
    const auto trace = integrate({}, Relaxation{}, cav, seq, cfg);

    const auto ref = analytic_empty_cavity(seq, cav, cfg.dt * cfg.output_stride,
                                           trace.a.size());
    double max_ref = 0.0, max_err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        max_ref = std::max(max_ref, std::abs(ref[i]));
        max_err = std::max(max_err, std::abs(trace.a[i] - ref[i]));
    }
    REQUIRE(max_ref > 0.1);  // the drive actually rings the mode up
    CHECK(max_err <= 1e-8 * max_ref);
}

TEST_CASE("zero-coupling spins leave the field and themselves untouched") {
    const auto seq = drive_and_window();
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.0);
    cav.drive_rate_ref = 5.0;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.output_stride = 5;

    std::vector<SpinBin> bins(3);
    for (int j = 0; j < 3; ++j) {
        bins[j].detuning = 2.0 * j - 2.0;
        bins[j].coupling = 0.0;
        bins[j].weight = 100.0;
        bins[j].bloch = {0.0, 0.0, -0.5};
    }
    const auto with_bins = integrate(bins, Relaxation{}, cav, seq, cfg);
    const auto empty = integrate({}, Relaxation{}, cav, seq, cfg);
    REQUIRE(with_bins.a.size() == empty.a.size());
    for (std::size_t i = 0; i < empty.a.size(); ++i)
        CHECK(std::abs(with_bins.a[i] - empty.a[i]) <= 1e-12);
    for (const auto& b : with_bins.final_bins) {
        CHECK(b.bloch.x == 0.0);
        CHECK(b.bloch.y == 0.0);
        CHECK(b.bloch.z == doctest::Approx(-0.5).epsilon(1e-12));
    }
}

TEST_CASE("resonant spin rotation equals twice the coupling times the field area") {
    // One resonant spin with negligible weight probing the field: the polar
    // rotation angle is 2g ∫ a dt for a drive of constant phase.
    PulseSequence seq;
    seq.drives.push_back({0.0, 2.0, 1.0, 0.0});
    seq.total_duration = 10.0;
    seq.tau = 5.0;
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    cav.drive_rate_ref = 40.0;

    SpinBin probe;
    probe.detuning = 0.0;
    probe.coupling = 0.05;
    probe.weight = 1e-6;
    probe.bloch = {0.0, 0.0, -0.5};

    SimConfig cfg;
    cfg.dt = 5e-4;
    cfg.output_stride = 1;
    const auto trace = integrate({&probe, 1}, Relaxation{}, cav, seq, cfg);

    cplx area(0.0, 0.0);
    for (std::size_t i = 0; i < trace.a.size(); ++i) {
        const double w = (i == 0 || i + 1 == trace.a.size()) ? 0.5 : 1.0;
        area += w * trace.a[i];
    }
    const double theta = 2.0 * probe.coupling * std::abs(area) * trace.dt_sample();
    REQUIRE(theta > 0.5);  // an appreciable rotation, well below π
    REQUIRE(theta < 2.5);
    const double cos_theta = -2.0 * trace.final_bins[0].bloch.z;
    CHECK(cos_theta == doctest::Approx(std::cos(theta)).epsilon(1e-4));
}

TEST_CASE("bloch norms are conserved to 1e-6 without relaxation") {
    auto bins = small_ensemble(2000.0);
    PresetParams p;
    p.tau = 10.0;
    p.detune_mhz = 4.0;
    p.window_duration = 8.0;
    const auto seq = make_preset("fig2a", p);
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    cav.drive_rate_ref = 20.0;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.output_stride = 10;

    const auto trace = integrate(bins, Relaxation{}, cav, seq, cfg);
    CHECK(trace.warnings.empty());
    double worst = 0.0;
    for (const auto& b : trace.final_bins)
        worst = std::max(worst, std::abs(bloch_norm(b.bloch) - 0.5));
    CHECK(worst <= 1e-6);
}

TEST_CASE("free precession and relaxation match the closed-form solution") {
    SpinBin b;
    b.detuning = mhz_to_rad_per_us(0.5);
    b.coupling = 0.0;
    b.weight = 1.0;
    b.bloch = {0.3, -0.1, -0.2};
    Relaxation relax;
    relax.t1 = 7.0;
    relax.t2 = 3.0;
    PulseSequence seq;
    seq.total_duration = 5.0;
    seq.tau = 2.5;
    CavityParams cav;
    cav.kappa_c = 1.0;
    cav.drive_rate_ref = 0.0;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.output_stride = 100;

    const auto trace = integrate({&b, 1}, relax, cav, seq, cfg);
    const double t = seq.total_duration;
    const cplx sm0(b.bloch.x, -b.bloch.y);  // s⁻ = Sx - i Sy
    const cplx sm = sm0 * std::exp(cplx(-t / relax.t2, -b.detuning * t));
    const double z = relax.sz_eq + (b.bloch.z - relax.sz_eq) * std::exp(-t / relax.t1);
    const auto& f = trace.final_bins[0].bloch;
    CHECK(f.x == doctest::Approx(sm.real()).epsilon(1e-9));
    CHECK(f.y == doctest::Approx(-sm.imag()).epsilon(1e-9));
    CHECK(f.z == doctest::Approx(z).epsilon(1e-9));
}

TEST_CASE("weak drive response is linear in the drive amplitude") {
    auto bins = small_ensemble(2000.0);
    PulseSequence seq;
    seq.drives.push_back({0.0, 2.0, 1.0, 0.0});
    seq.drives.push_back({10.0, 2.0, 1.0, 0.0});
    seq.total_duration = 30.0;
    seq.tau = 10.0;
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.output_stride = 10;

    cav.drive_rate_ref = 1e-4;  // max Rabi angle ≪ 0.01 rad
    const auto t1 = integrate(bins, Relaxation{}, cav, seq, cfg);
    cav.drive_rate_ref = 2e-4;
    const auto t2 = integrate(bins, Relaxation{}, cav, seq, cfg);

    double max_a = 0.0;
    for (const auto& a : t1.a) max_a = std::max(max_a, std::abs(a));
    REQUIRE(max_a > 0.0);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < t1.a.size(); ++i)
        max_dev = std::max(max_dev, std::abs(t2.a[i] - 2.0 * t1.a[i]));
    CHECK(max_dev <= 1e-3 * 2.0 * max_a);
}

TEST_CASE("a detune window cannot affect the trace before it starts") {
    auto bins = small_ensemble(5000.0);
    PresetParams p;
    p.tau = 10.0;
    const auto base = make_preset("fig3e", p);
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    cav.drive_rate_ref = 20.0;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.output_stride = 5;

    const double t_w = 24.0;
    PulseSequence with_a = base, with_b = base;
    with_a.detunes.push_back({t_w, 6.0, 5.0});
    with_b.detunes.push_back({t_w, 6.0, -11.0});
    const auto ta = integrate(bins, Relaxation{}, cav, with_a, cfg);
    const auto tb = integrate(bins, Relaxation{}, cav, with_b, cfg);

    bool differ_after = false;
    for (std::size_t i = 0; i < ta.a.size(); ++i) {
        if (ta.times[i] < t_w - 1e-12) {
            // bitwise identical before the window opens
            CHECK(ta.a[i].real() == tb.a[i].real());
            CHECK(ta.a[i].imag() == tb.a[i].imag());
        } else if (ta.a[i] != tb.a[i]) {
            differ_after = true;
        }
    }
    CHECK(differ_after);
}

TEST_CASE("halving the step changes the solution by far less than 0.5%") {
    auto bins = small_ensemble(20000.0);
    PresetParams p;
    p.tau = 8.0;
    p.total_duration = 30.0;
    const auto seq = make_preset("fig3e", p);
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    cav.drive_rate_ref = 20.0;

    SimConfig coarse{2e-3, 2};
    SimConfig fine{1e-3, 4};
    const auto tc = integrate(bins, Relaxation{}, cav, seq, coarse);
    const auto tf = integrate(bins, Relaxation{}, cav, seq, fine);
    REQUIRE(tc.times.size() == tf.times.size());

    double max_a = 0.0, max_dev = 0.0;
    for (std::size_t i = 0; i < tc.a.size(); ++i) {
        max_a = std::max(max_a, std::abs(tf.a[i]));
        max_dev = std::max(max_dev, std::abs(tc.a[i] - tf.a[i]));
    }
    CHECK(max_dev <= 5e-3 * max_a);
}

TEST_CASE("step-size sanity: error when hopeless, warning when marginal") {
    PulseSequence seq;
    seq.drives.push_back({0.0, 1.0, 1.0, 0.0});
    seq.total_duration = 4.0;
    seq.tau = 2.0;
    CavityParams cav;
    cav.kappa_c = 1.0;
    cav.drive_rate_ref = 100.0;

    SimConfig cfg;
    cfg.dt = 6e-3;  // dt*eps = 0.6
    CHECK_THROWS_AS(integrate({}, Relaxation{}, cav, seq, cfg), NumericalError);

    cfg.dt = 2e-3;  // dt*eps = 0.2: warn but run
    const auto trace = integrate({}, Relaxation{}, cav, seq, cfg);
    REQUIRE(trace.warnings.size() == 1);
    CHECK(trace.warnings[0].find("may lose accuracy") != std::string::npos);
}

TEST_CASE("a numerically unstable spin is reported, not returned as garbage") {
    // The step-size guard only sees fixed rates (κ, detunings, drive). A spin
    // whose Rabi rate 2 g |a| lands far beyond the RK4 stability limit blows
    // up numerically; the integrator must throw instead of emitting NaNs.
    SpinBin b;
    b.detuning = 0.0;
    b.coupling = 500.0;
    b.weight = 1e-6;
    b.bloch = {0.0, 0.0, -0.5};
    PulseSequence seq;
    seq.drives.push_back({0.0, 4.0, 1.0, 0.0});
    seq.total_duration = 4.0;
    seq.tau = 2.0;
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    cav.drive_rate_ref = 20.0;
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.output_stride = 10;
    CHECK_THROWS_AS(integrate({&b, 1}, Relaxation{}, cav, seq, cfg), NumericalError);
}

TEST_CASE("steady state fields: saturated value, kappa scaling, matched absorber") {
    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    const double eps = 3.0;

    SUBCASE("no spins: saturated equals polarized equals 2 eps / kappa") {
        const auto sat = steady_state_field({}, cav, eps, SpinState::Saturated, kInf);
        const auto pol = steady_state_field({}, cav, eps, SpinState::Polarized, kInf);
        CHECK(std::abs(sat - cplx(2.0 * eps / cav.kappa_tot(), 0.0)) <= 1e-15);
        CHECK(std::abs(sat - pol) <= 1e-15);
    }

    SUBCASE("doubling kappa halves the saturated field") {
        const auto s1 = steady_state_field({}, cav, eps, SpinState::Saturated, kInf);
        CavityParams cav2 = cav;
        cav2.kappa_c *= 2.0;
        const auto s2 = steady_state_field({}, cav2, eps, SpinState::Saturated, kInf);
        CHECK(std::abs(s1) == doctest::Approx(2.0 * std::abs(s2)).epsilon(1e-12));
    }

    SUBCASE("saturated/polarized ratio minus one recovers the cooperativity") {
        // Wide truncation and a small homogeneous width keep the discretized
        // line close to the ideal Lorentzian continuum.
        EnsembleSpec s;
        s.n_bins = 20001;
        s.lineshape = Lineshape::Lorentzian;
        s.linewidth_fwhm = mhz_to_rad_per_us(10.0);
        s.truncation_halfwidth = 20.0;
        s.coupling_dist = CouplingDist::Uniform;
        s.g_min = 0.05;
        s.g_max = 0.05;
        s.n_effective = 1.0;
        auto bins = build_ensemble(s);
        // pick N_eff for C = 1.5
        const double target_c = 1.5;
        const double neff =
            target_c * s.linewidth_fwhm * cav.kappa_tot() / (4.0 * 0.05 * 0.05);
        for (auto& b : bins) b.weight *= neff;
        const double t2 = 2.0;  // 1/T2 well below the linewidth
        const auto sat = steady_state_field(bins, cav, eps, SpinState::Saturated, t2);
        const auto pol = steady_state_field(bins, cav, eps, SpinState::Polarized, t2);
        CHECK(std::abs(sat) / std::abs(pol) - 1.0 ==
              doctest::Approx(target_c).epsilon(0.02));
    }

    SUBCASE("resonant spin with infinite T2 makes the system singular") {
        SpinBin b;
        b.detuning = 0.0;
        b.coupling = 0.1;
        b.weight = 10.0;
        CHECK_THROWS_AS(steady_state_field({&b, 1}, cav, eps, SpinState::Polarized, kInf),
                        NumericalError);
    }
}

TEST_CASE("trace csv exposes the documented columns") {
    PulseSequence seq;
    seq.total_duration = 0.01;
    seq.tau = 0.005;
    CavityParams cav;
    cav.kappa_c = 4.0;
    cav.drive_rate_ref = 0.0;
    SimConfig cfg;
    cfg.dt = 1e-3;
    const auto trace = integrate({}, Relaxation{}, cav, seq, cfg);
    const auto csv = trace_to_csv(trace);
    CHECK(csv.rfind("time_us,re_a,im_a,abs_a,re_out,im_out\n", 0) == 0);
    CHECK(csv.find("\n0,0,0,0,0,0\n") != std::string::npos);
}
