#include "sse/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sse/errors.hpp"
#include "sse/format.hpp"

namespace sse {

void CavityParams::validate() const {
    if (!(kappa_c > 0.0)) throw ValidationError("kappa_c", "must be > 0");
    if (!(kappa_int >= 0.0)) throw ValidationError("kappa_int", "must be >= 0");
    if (!(drive_rate_ref >= 0.0)) throw ValidationError("drive_rate_ref", "must be >= 0");
}

namespace {

constexpr double kEdgeTol = 1e-12;

// Piecewise-constant drive and cavity detuning, looked up at an interval
// midpoint (events never cross a step thanks to edge snapping).
struct EventLookup {
    const PulseSequence& seq;
    double eps0;

    std::complex<double> drive_at(double t) const {
        for (const auto& p : seq.drives) {
            if (t >= p.t_start && t < p.t_end()) {
                const double eps = p.drive_rate(eps0);
                const double ph = p.phase_rad();
                return {eps * std::cos(ph), eps * std::sin(ph)};
            }
        }
        return {0.0, 0.0};
    }
    double cavity_detuning_at(double t) const {
        for (const auto& w : seq.detunes) {
            if (t >= w.t_start && t < w.t_end()) return w.delta_rad_per_us();
        }
        return 0.0;
    }
};

}  // namespace

Trace integrate(std::span<const SpinBin> bins, const Relaxation& relax,
                const CavityParams& cavity, const PulseSequence& seq,
                const SimConfig& cfg) {
    cavity.validate();
    seq.validate();
    if (!(cfg.dt > 0.0)) throw ValidationError("dt", "must be > 0");
    if (cfg.output_stride < 1) throw ValidationError("output_stride", "must be >= 1");

    const int n = static_cast<int>(bins.size());
    const double kappa = cavity.kappa_tot();

    // Step-size sanity: dt times the largest rate in the problem.
    double max_rate = kappa;
    for (const auto& b : bins) max_rate = std::max(max_rate, std::abs(b.detuning));
    for (const auto& w : seq.detunes)
        max_rate = std::max(max_rate, std::abs(w.delta_rad_per_us()));
    for (const auto& p : seq.drives)
        max_rate = std::max(max_rate, std::abs(p.drive_rate(cavity.drive_rate_ref)));
    Trace out;
    out.kappa_c = cavity.kappa_c;
    const double dt_rate = cfg.dt * max_rate;
    if (dt_rate >= 0.5) {
        std::ostringstream os;
        os << "dt too coarse: dt*max_rate = " << dt_rate << " >= 0.5; require dt < "
           << 0.5 / max_rate << " us";
        throw NumericalError(os.str());
    }
    if (dt_rate >= 0.1) {
        std::ostringstream os;
        os << "dt*max_rate = " << dt_rate << " >= 0.1; results may lose accuracy";
        out.warnings.push_back(os.str());
    }

    const double invT1 = (relax.t1 == kInf) ? 0.0 : 1.0 / relax.t1;
    const double invT2 = (relax.t2 == kInf) ? 0.0 : 1.0 / relax.t2;
    const double sz_eq = relax.sz_eq;
    const double half_kappa = kappa / 2.0;

    // SoA state. sigma is the slowly varying part of s⁻: s⁻ = conj(u)·sigma
    // with u = exp(i δ t) maintained by per-step phase-factor multiplication.
    std::vector<double> g(n), wg(n), delta(n);
    std::vector<double> yr(n), yi(n), yz(n);
    std::vector<double> ur(n, 1.0), ui(n, 0.0);
    std::vector<double> h1r(n), h1i(n);           // exp(i δ h/2)
    std::vector<double> u2r(n), u2i(n), u4r(n), u4i(n);
    std::vector<double> d_r(n), d_i(n), d_z(n);   // current-stage derivative
    std::vector<double> p_r(n), p_i(n), p_z(n);   // previous-stage derivative
    std::vector<double> ar_(n), ai_(n), az_(n);   // RK4 accumulator

    for (int j = 0; j < n; ++j) {
        g[j] = bins[j].coupling;
        wg[j] = bins[j].weight * bins[j].coupling;
        delta[j] = bins[j].detuning;
        yr[j] = bins[j].bloch.x;
        yi[j] = -bins[j].bloch.y;  // s⁻ = Sx - i Sy
        yz[j] = bins[j].bloch.z;
    }

    std::complex<double> a(0.0, 0.0);
    double cached_h = -1.0;

    EventLookup events{seq, cavity.drive_rate_ref};

    // One RK4 stage: forms the stage state from (y + cs·prev_deriv), writes the
    // stage derivative, folds it into the accumulator with weight acc_c, and
    // returns da for the cavity amplitude. The bin sum runs in index order so
    // results are bit-reproducible.
    auto stage = [&](double cs, double acc_c, const double* sur, const double* sui,
                     std::complex<double> a_s, double dcav, std::complex<double> eps_c,
                     const double* pdr, const double* pdi, const double* pdz,
                     double* odr, double* odi, double* odz) {
        const double areal = a_s.real(), aimag = a_s.imag();
        double Sr = 0.0, Si = 0.0;
        for (int j = 0; j < n; ++j) {
            const double xr = yr[j] + cs * pdr[j];
            const double xi = yi[j] + cs * pdi[j];
            const double xz = yz[j] + cs * pdz[j];
            const double ur_ = sur[j], ui_ = sui[j];
            const double cr = areal * ur_ - aimag * ui_;  // c = a·u
            const double ci = areal * ui_ + aimag * ur_;
            Sr += wg[j] * (ur_ * xr + ui_ * xi);  // conj(u)·sigma
            Si += wg[j] * (ur_ * xi - ui_ * xr);
            const double tg = 2.0 * g[j];
            const double vr = -xr * invT2 - tg * xz * ci;
            const double vi = -xi * invT2 + tg * xz * cr;
            const double vz = -(xz - sz_eq) * invT1 - tg * (cr * xi - ci * xr);
            odr[j] = vr;
            odi[j] = vi;
            odz[j] = vz;
            ar_[j] += acc_c * vr;
            ai_[j] += acc_c * vi;
            az_[j] += acc_c * vz;
        }
        return std::complex<double>(-half_kappa * areal + dcav * aimag + Si + eps_c.real(),
                                    -half_kappa * aimag - dcav * areal - Sr + eps_c.imag());
    };

    long step_count = 0;
    auto advance = [&](double ta, double tb) {
        const double len = tb - ta;
        if (len <= kEdgeTol) return;
        const int nsteps = std::max(1, static_cast<int>(std::ceil(len / cfg.dt - 1e-9)));
        const double h = len / nsteps;
        if (cached_h < 0.0 || std::abs(h - cached_h) > 1e-12 * cached_h) {
            for (int j = 0; j < n; ++j) {
                h1r[j] = std::cos(delta[j] * h / 2.0);
                h1i[j] = std::sin(delta[j] * h / 2.0);
            }
            cached_h = h;
        }
        const double tm = ta + len / 2.0;
        const std::complex<double> eps_c = events.drive_at(tm);
        const double dcav = events.cavity_detuning_at(tm);

        for (int s = 0; s < nsteps; ++s) {
            // stage phases: u at t, t+h/2, t+h
            for (int j = 0; j < n; ++j) {
                const double r2 = ur[j] * h1r[j] - ui[j] * h1i[j];
                const double i2 = ur[j] * h1i[j] + ui[j] * h1r[j];
                u2r[j] = r2;
                u2i[j] = i2;
                u4r[j] = r2 * h1r[j] - i2 * h1i[j];
                u4i[j] = r2 * h1i[j] + i2 * h1r[j];
            }
            std::fill(ar_.begin(), ar_.end(), 0.0);
            std::fill(ai_.begin(), ai_.end(), 0.0);
            std::fill(az_.begin(), az_.end(), 0.0);

            const auto da1 = stage(0.0, 1.0, ur.data(), ui.data(), a, dcav, eps_c,
                                   p_r.data(), p_i.data(), p_z.data(),
                                   p_r.data(), p_i.data(), p_z.data());
            const auto da2 = stage(h / 2.0, 2.0, u2r.data(), u2i.data(), a + (h / 2.0) * da1,
                                   dcav, eps_c, p_r.data(), p_i.data(), p_z.data(),
                                   d_r.data(), d_i.data(), d_z.data());
            const auto da3 = stage(h / 2.0, 2.0, u2r.data(), u2i.data(), a + (h / 2.0) * da2,
                                   dcav, eps_c, d_r.data(), d_i.data(), d_z.data(),
                                   p_r.data(), p_i.data(), p_z.data());
            const auto da4 = stage(h, 1.0, u4r.data(), u4i.data(), a + h * da3, dcav, eps_c,
                                   p_r.data(), p_i.data(), p_z.data(),
                                   d_r.data(), d_i.data(), d_z.data());

            const double h6 = h / 6.0;
            for (int j = 0; j < n; ++j) {
                yr[j] += h6 * ar_[j];
                yi[j] += h6 * ai_[j];
                yz[j] += h6 * az_[j];
            }
            a += h6 * (da1 + 2.0 * da2 + 2.0 * da3 + da4);
            ur.swap(u4r);
            ui.swap(u4i);

            if ((++step_count & 0xFFF) == 0) {
                // keep |u| pinned at 1 against slow multiplicative drift
                for (int j = 0; j < n; ++j) {
                    const double m = 1.0 / std::hypot(ur[j], ui[j]);
                    ur[j] *= m;
                    ui[j] *= m;
                }
            }
        }
    };

    // Event edges inside (0, total).
    std::vector<double> edges;
    auto push_edge = [&](double t) {
        if (t > kEdgeTol && t < seq.total_duration - kEdgeTol) edges.push_back(t);
    };
    for (const auto& p : seq.drives) {
        push_edge(p.t_start);
        push_edge(p.t_end());
    }
    for (const auto& w : seq.detunes) {
        push_edge(w.t_start);
        push_edge(w.t_end());
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double x, double y) { return std::abs(x - y) < kEdgeTol; }),
                edges.end());

    const double dt_out = cfg.dt * cfg.output_stride;
    const std::size_t n_samp =
        static_cast<std::size_t>(std::floor(seq.total_duration / dt_out + 1e-9)) + 1;
    out.times.reserve(n_samp);
    out.a.reserve(n_samp);
    out.times.push_back(0.0);
    out.a.push_back(a);

    std::size_t edge_idx = 0;
    for (std::size_t k = 1; k < n_samp; ++k) {
        const double t_lo = (k - 1) * dt_out;
        const double t_hi = k * dt_out;
        double cursor = t_lo;
        while (edge_idx < edges.size() && edges[edge_idx] < t_hi - kEdgeTol) {
            if (edges[edge_idx] > cursor + kEdgeTol) {
                advance(cursor, edges[edge_idx]);
                cursor = edges[edge_idx];
            }
            ++edge_idx;
        }
        advance(cursor, t_hi);
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            std::ostringstream os;
            os << "non-finite cavity amplitude at t = " << t_hi << " us";
            throw NumericalError(os.str());
        }
        out.times.push_back(t_hi);
        out.a.push_back(a);
    }
    // remainder past the last uniform sample, if any
    double t_last = out.times.back();
    while (edge_idx < edges.size()) {
        advance(t_last, edges[edge_idx]);
        t_last = edges[edge_idx++];
    }
    advance(t_last, seq.total_duration);

    out.final_bins.assign(bins.begin(), bins.end());
    for (int j = 0; j < n; ++j) {
        // s⁻ = conj(u)·sigma
        const double sr = ur[j] * yr[j] + ui[j] * yi[j];
        const double si = ur[j] * yi[j] - ui[j] * yr[j];
        out.final_bins[j].bloch.x = sr;
        out.final_bins[j].bloch.y = -si;
        out.final_bins[j].bloch.z = yz[j];
    }
    return out;
}

std::complex<double> steady_state_field(std::span<const SpinBin> bins,
                                        const CavityParams& cavity, double drive,
                                        SpinState state, double t2) {
    cavity.validate();
    const double kappa = cavity.kappa_tot();
    if (state == SpinState::Saturated) return {2.0 * drive / kappa, 0.0};

    const double invT2 = (t2 == kInf) ? 0.0 : 1.0 / t2;
    std::complex<double> spin_sum(0.0, 0.0);
    for (const auto& b : bins) {
        const double wg2 = b.weight * b.coupling * b.coupling;
        if (wg2 == 0.0) continue;
        const std::complex<double> denom(invT2, b.detuning);
        if (std::abs(denom) == 0.0)
            throw NumericalError(
                "steady_state_field: singular spin response (delta = 0 with infinite T2)");
        spin_sum += wg2 / denom;
    }
    const std::complex<double> denom = kappa / 2.0 + spin_sum;
    if (std::abs(denom) < 1e-300)
        throw NumericalError("steady_state_field: singular linear system");
    return drive / denom;
}

std::string trace_to_csv(const Trace& trace) {
    std::string out = "time_us,re_a,im_a,abs_a,re_out,im_out\n";
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        const auto e = trace.emitted(i);
        out += fmt_double(trace.times[i]) + "," + fmt_double(trace.a[i].real()) + "," +
               fmt_double(trace.a[i].imag()) + "," + fmt_double(std::abs(trace.a[i])) + "," +
               fmt_double(e.real()) + "," + fmt_double(e.imag()) + "\n";
    }
    return out;
}

}  // namespace sse
