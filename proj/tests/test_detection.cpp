#include <doctest.h>

#include <cmath>
#include <complex>

#include "sse/detection.hpp"
#include "sse/dynamics.hpp"
#include "sse/ensemble.hpp"
#include "sse/errors.hpp"
#include "sse/sequence.hpp"

using namespace sse;
using cplx = std::complex<double>;

namespace {

// Trace with Gaussian |emitted| blips at the given (center, height) pairs.
Trace blip_trace(const std::vector<std::pair<double, double>>& blips, double t_end,
                 double kappa_c = 4.0, double sigma = 0.5, double phase = 0.0,
                 double dt = 0.01) {
    Trace tr;
    tr.kappa_c = kappa_c;
    const double scale = 1.0 / std::sqrt(kappa_c);
    const cplx rot(std::cos(phase), std::sin(phase));
    const std::size_t n = static_cast<std::size_t>(t_end / dt) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = i * dt;
        double v = 0.0;
        for (const auto& [c, h] : blips) v += h * std::exp(-(t - c) * (t - c) / (2 * sigma * sigma));
        tr.times.push_back(t);
        tr.a.push_back(scale * v * rot);
    }
    return tr;
}

}  // namespace

TEST_CASE("a synthetic gaussian echo is located and measured") {
    const double tau = 25.0, sigma = 0.5;
    const auto tr = blip_trace({{2 * tau, 0.7}}, 100.0, 4.0, sigma);
    const auto recs = extract_echoes(tr, tau, 1, 5.0);
    REQUIRE(recs.size() == 1);
    const auto& r = recs[0];
    CHECK(r.k == 1);
    CHECK(r.flagged == false);
    CHECK(r.peak_mag == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(r.t_peak == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(r.t_centroid == doctest::Approx(50.0).epsilon(1e-6));
    CHECK(r.window_lo == doctest::Approx(45.0));
    CHECK(r.window_hi == doctest::Approx(55.0));
    // ∫ |emitted| dt of the gaussian
    CHECK(std::abs(r.area) == doctest::Approx(0.7 * sigma * std::sqrt(kTwoPi)).epsilon(1e-4));
    CHECK(echo_phase(r) == doctest::Approx(0.0));
}

TEST_CASE("an all-zero trace yields flagged records") {
    Trace tr;
    tr.kappa_c = 4.0;
    for (int i = 0; i <= 10000; ++i) {
        tr.times.push_back(i * 0.01);
        tr.a.push_back(0.0);
    }
    const auto recs = extract_echoes(tr, 25.0, 2, 5.0);
    REQUIRE(recs.size() == 2);
    for (const auto& r : recs) {
        CHECK(r.flagged);
        CHECK(r.peak_mag == 0.0);
    }
    CHECK_THROWS_AS(echo_phase(recs[0]), ValidationError);
}

TEST_CASE("echo phase reads the complex area argument") {
    const auto tr = blip_trace({{50.0, 0.3}}, 100.0, 4.0, 0.5, kPi / 3.0);
    const auto recs = extract_echoes(tr, 25.0, 1, 5.0);
    REQUIRE(!recs[0].flagged);
    CHECK(echo_phase(recs[0]) == doctest::Approx(kPi / 3.0).epsilon(1e-9));
}

TEST_CASE("noise floor flags echoes below noise_mult times the quiet RMS") {
    // Constant background 0.1 everywhere plus a 0.25 echo.
    Trace tr;
    tr.kappa_c = 1.0;
    for (int i = 0; i <= 10000; ++i) {
        const double t = i * 0.01;
        double v = 0.1;
        v += 0.25 * std::exp(-(t - 50.0) * (t - 50.0) / (2 * 0.25));
        tr.times.push_back(t);
        tr.a.push_back(v);
    }
    DetectionOptions strict;
    strict.noise_mult = 4.0;  // floor = 0.4+ > 0.35 peak
    auto recs = extract_echoes(tr, 25.0, 1, 5.0, strict);
    CHECK(recs[0].flagged);
    DetectionOptions loose;
    loose.noise_mult = 2.0;  // floor ≈ 0.2 < peak
    recs = extract_echoes(tr, 25.0, 1, 5.0, loose);
    CHECK(!recs[0].flagged);
}

TEST_CASE("echo windows that touch a drive pulse are rejected") {
    const auto tr = blip_trace({{50.0, 0.5}}, 100.0);
    std::vector<DrivePulse> drives{{0.0, 2.0, 1.0, 0.0}, {46.0, 2.0, 1.0, 0.0}};
    DetectionOptions opts;
    opts.drives = drives;
    CHECK_THROWS_AS(extract_echoes(tr, 25.0, 1, 5.0, opts), SequenceError);
    // narrower windows clear the pulse
    const auto recs = extract_echoes(tr, 25.0, 1, 1.5, opts);
    CHECK(recs[0].peak_mag == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("argument validation names the offending input") {
    const auto tr = blip_trace({{50.0, 0.5}}, 100.0);
    CHECK_THROWS_AS(extract_echoes(tr, -1.0, 1, 5.0), ValidationError);
    CHECK_THROWS_AS(extract_echoes(tr, 25.0, 0, 5.0), ValidationError);
    CHECK_THROWS_AS(extract_echoes(tr, 25.0, 1, 20.0), ValidationError);  // >= tau/2
    CHECK_THROWS_AS(extract_echoes(tr, 25.0, 4, 5.0), ValidationError);   // past trace end
    Trace empty;
    CHECK_THROWS_AS(extract_echoes(empty, 25.0, 1, 5.0), ValidationError);
}

TEST_CASE("peak and area rank echo trains identically") {
    const double tau = 20.0;
    std::vector<std::pair<double, double>> blips;
    for (int k = 1; k <= 4; ++k) blips.push_back({(k + 1) * tau, 0.8 * std::pow(0.4, k - 1)});
    const auto tr = blip_trace(blips, 120.0);
    const auto recs = extract_echoes(tr, tau, 4, 5.0);
    REQUIRE(recs.size() == 4);
    for (int i = 1; i < 4; ++i) {
        CHECK(recs[i].peak_mag < recs[i - 1].peak_mag);
        CHECK(std::abs(recs[i].area) < std::abs(recs[i - 1].area));
        CHECK(std::abs(recs[i].area) / recs[i].peak_mag ==
              doctest::Approx(std::abs(recs[0].area) / recs[0].peak_mag).epsilon(1e-6));
    }
}

TEST_CASE("echoes csv exposes the documented columns") {
    const auto tr = blip_trace({{50.0, 0.5}, {75.0, 0.2}}, 100.0);
    const auto recs = extract_echoes(tr, 25.0, 2, 5.0);
    const auto csv = echoes_to_csv(recs);
    CHECK(csv.rfind("k,t_peak_us,t_centroid_us,peak_mag,area_re,area_im,flagged\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("\n1,50,") != std::string::npos);
    CHECK(csv.find("\n2,75,") != std::string::npos);
}

TEST_CASE("shifting both drive phases shifts echo phases but not magnitudes") {
    EnsembleSpec s;
    s.n_bins = 240;
    s.coupling_subbins = 4;
    s.lineshape = Lineshape::Lorentzian;
    s.linewidth_fwhm = mhz_to_rad_per_us(10.0);
    s.truncation_halfwidth = 0.3;
    s.coupling_dist = CouplingDist::Annulus;
    s.g_min = 0.02;
    s.g_max = 0.2;
    s.n_effective = 50000.0;
    auto bins = build_ensemble(s);

    CavityParams cav;
    cav.kappa_c = mhz_to_rad_per_us(1.9);
    cav.drive_rate_ref = 15.0;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.output_stride = 5;

    const double tau = 8.0, shift_deg = 40.0;
    PresetParams p;
    p.tau = tau;
    p.total_duration = 3 * tau + 6;
    auto seq0 = make_preset("fig3e", p);
    auto seq1 = seq0;
    for (auto& d : seq1.drives) d.phase_deg += shift_deg;

    const auto tr0 = integrate(bins, Relaxation{}, cav, seq0, cfg);
    const auto tr1 = integrate(bins, Relaxation{}, cav, seq1, cfg);
    const auto r0 = extract_echoes(tr0, tau, 1, 3.0);
    const auto r1 = extract_echoes(tr1, tau, 1, 3.0);
    REQUIRE(!r0[0].flagged);
    REQUIRE(!r1[0].flagged);
    CHECK(r1[0].peak_mag == doctest::Approx(r0[0].peak_mag).epsilon(1e-6));
    double dphi = echo_phase(r1[0]) - echo_phase(r0[0]);
    dphi = std::remainder(dphi - deg_to_rad(shift_deg), kTwoPi);
    CHECK(std::abs(dphi) <= 1e-6);
}
