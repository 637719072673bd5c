#include "sse/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "sse/errors.hpp"

namespace sse {

double filter_function(double delta_omega, double kappa_tot) {
    if (!(kappa_tot > 0.0)) throw std::domain_error("filter_function: kappa_tot must be > 0");
    return (kappa_tot / 2.0) /
           std::sqrt(delta_omega * delta_omega + kappa_tot * kappa_tot / 4.0);
}

double ste_amplitude(double beta1, double beta2, double beta3) {
    return std::sin(beta1) * std::sin(beta2) * std::sin(beta3);
}

std::vector<double> predict_sse(double a1, double eta, double beta1, double beta2, int n) {
    if (!(a1 >= 0.0)) throw std::domain_error("predict_sse: A1 must be >= 0");
    if (!(eta >= 0.0)) throw std::domain_error("predict_sse: eta must be >= 0");
    const double ratio = eta * std::sin(beta1) * std::sin(beta2);
    std::vector<double> out(std::max(n, 0));
    double a = a1;
    for (int i = 0; i < n; ++i) {
        out[i] = a;
        a *= ratio;
    }
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// Small damped (Levenberg-Marquardt) least-squares fitter for a handful of
// parameters. Cost is monotone non-increasing across accepted steps.
// ---------------------------------------------------------------------------

using Model = std::function<double(std::span<const double> params, double x)>;

bool solve_linear(std::vector<double>& A, std::vector<double>& b, int n) {
    // Gaussian elimination with partial pivoting; A is n x n row-major.
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(A[r * n + c]) > std::abs(A[piv * n + c])) piv = r;
        if (std::abs(A[piv * n + c]) < 1e-300) return false;
        if (piv != c) {
            for (int j = 0; j < n; ++j) std::swap(A[c * n + j], A[piv * n + j]);
            std::swap(b[c], b[piv]);
        }
        for (int r = c + 1; r < n; ++r) {
            const double f = A[r * n + c] / A[c * n + c];
            for (int j = c; j < n; ++j) A[r * n + j] -= f * A[c * n + j];
            b[r] -= f * b[c];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < n; ++j) s -= A[r * n + j] * b[j];
        b[r] = s / A[r * n + r];
    }
    return true;
}

struct LmOutcome {
    std::vector<double> params;
    std::vector<double> cov_diag;
    double cost = kInf;
    bool converged = false;
};

double lm_cost(const Model& f, std::span<const double> p, std::span<const double> xs,
               std::span<const double> ys) {
    double c = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = f(p, xs[i]) - ys[i];
        c += r * r;
    }
    return c;
}

LmOutcome lm_run(const Model& f, std::vector<double> p, std::span<const double> xs,
                 std::span<const double> ys, int max_iter = 200) {
    const int n = static_cast<int>(p.size());
    const int m = static_cast<int>(xs.size());
    std::vector<double> jac(static_cast<std::size_t>(m) * n), resid(m);
    std::vector<double> jtj(n * n), jtr(n), lhs(n * n), rhs(n), trial(n);

    auto eval = [&](std::span<const double> pp) {
        for (int i = 0; i < m; ++i) resid[i] = f(pp, xs[i]) - ys[i];
        for (int k = 0; k < n; ++k) {
            const double h = 1e-6 * std::max(std::abs(pp[k]), 1e-6);
            std::vector<double> pl(pp.begin(), pp.end()), ph(pp.begin(), pp.end());
            pl[k] -= h;
            ph[k] += h;
            for (int i = 0; i < m; ++i)
                jac[static_cast<std::size_t>(i) * n + k] = (f(ph, xs[i]) - f(pl, xs[i])) / (2 * h);
        }
    };

    double cost = lm_cost(f, p, xs, ys);
    double lambda = 1e-3;
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        eval(p);
        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (int i = 0; i < m; ++i) {
            for (int a = 0; a < n; ++a) {
                const double ja = jac[static_cast<std::size_t>(i) * n + a];
                jtr[a] += ja * resid[i];
                for (int b = a; b < n; ++b)
                    jtj[a * n + b] += ja * jac[static_cast<std::size_t>(i) * n + b];
            }
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < a; ++b) jtj[a * n + b] = jtj[b * n + a];

        bool stepped = false;
        for (int tries = 0; tries < 30; ++tries) {
            lhs = jtj;
            for (int a = 0; a < n; ++a)
                lhs[a * n + a] += lambda * std::max(jtj[a * n + a], 1e-30);
            for (int a = 0; a < n; ++a) rhs[a] = -jtr[a];
            if (!solve_linear(lhs, rhs, n)) {
                lambda *= 10.0;
                continue;
            }
            for (int a = 0; a < n; ++a) trial[a] = p[a] + rhs[a];
            const double tc = lm_cost(f, trial, xs, ys);
            if (tc <= cost) {  // accept only non-increasing cost
                const double drop = cost - tc;
                p = trial;
                cost = tc;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (drop < 1e-14 * (cost + 1e-30)) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            converged = true;  // no descent direction left
            break;
        }
        if (converged) break;
    }

    LmOutcome out;
    out.params = p;
    out.cost = cost;
    out.converged = converged;
    // Covariance diagonal from (JᵀJ)⁻¹ scaled by the residual variance.
    eval(p);
    std::fill(jtj.begin(), jtj.end(), 0.0);
    for (int i = 0; i < m; ++i)
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b)
                jtj[a * n + b] += jac[static_cast<std::size_t>(i) * n + a] *
                                  jac[static_cast<std::size_t>(i) * n + b];
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < a; ++b) jtj[a * n + b] = jtj[b * n + a];
    const double s2 = (m > n) ? cost / (m - n) : 0.0;
    out.cov_diag.assign(n, 0.0);
    for (int a = 0; a < n; ++a) {
        std::vector<double> A = jtj, e(n, 0.0);
        e[a] = 1.0;
        if (solve_linear(A, e, n)) out.cov_diag[a] = s2 * e[a];
    }
    return out;
}

// Multi-start wrapper: 5 deterministic perturbed initializations.
LmOutcome lm_multistart(const Model& f, const std::vector<double>& init,
                        std::span<const double> xs, std::span<const double> ys,
                        std::uint64_t seed, int starts = 5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-0.2, 0.2);
    LmOutcome best;
    for (int s = 0; s < starts; ++s) {
        std::vector<double> p = init;
        if (s > 0)
            for (auto& v : p) v *= (1.0 + uni(rng));
        LmOutcome o = lm_run(f, p, xs, ys);
        if (o.cost < best.cost) best = o;
    }
    return best;
}

}  // namespace

EtaFit fit_eta_amplitudes(std::span<const double> amplitudes, double beta1, double beta2) {
    std::vector<double> ks, logs;
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        if (amplitudes[i] > 0.0) {
            ks.push_back(static_cast<double>(i + 1));
            logs.push_back(std::log(amplitudes[i]));
        }
    }
    if (ks.size() < 3)
        throw InsufficientDataError("fit_eta: need >= 3 usable echo amplitudes, have " +
                                    std::to_string(ks.size()));
    const double ss = std::sin(beta1) * std::sin(beta2);
    if (!(ss > 0.0)) throw std::domain_error("fit_eta: sin(beta1)*sin(beta2) must be > 0");

    const std::size_t m = ks.size();
    double kbar = 0.0, lbar = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        kbar += ks[i];
        lbar += logs[i];
    }
    kbar /= m;
    lbar /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (ks[i] - kbar) * (ks[i] - kbar);
        sxy += (ks[i] - kbar) * (logs[i] - lbar);
    }
    const double slope = sxy / sxx;
    const double intercept = lbar - slope * kbar;

    EtaFit fit;
    fit.eta = std::exp(slope) / ss;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double pred = intercept + slope * ks[i];
        fit.predicted.push_back(std::exp(pred));
        const double r = logs[i] - pred;
        ss_res += r * r;
    }
    fit.residual_rms = std::sqrt(ss_res / m);
    return fit;
}

EtaFit fit_eta(std::span<const EchoRecord> records, double beta1, double beta2) {
    // Position amplitudes by echo number; flagged records excluded.
    int kmax = 0;
    for (const auto& r : records) kmax = std::max(kmax, r.k);
    std::vector<double> amps(kmax, 0.0);
    for (const auto& r : records)
        if (!r.flagged && r.k >= 1) amps[r.k - 1] = r.peak_mag;
    return fit_eta_amplitudes(amps, beta1, beta2);
}

LinearFit fit_linear_through_origin(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("x/y", "length mismatch");
    if (x.size() < 3) throw InsufficientDataError("fit_linear_through_origin: need >= 3 points");
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    if (sxx == 0.0)
        throw NumericalError("fit_linear_through_origin: degenerate data (all x zero)");
    LinearFit fit;
    fit.slope = sxy / sxx;
    if (syy == 0.0) {
        fit.slope = 0.0;
        fit.r_squared = 1.0;
        return fit;
    }
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - fit.slope * x[i];
        ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / syy;
    return fit;
}

CwFit fit_cw_sweep(std::span<const double> delta_s, std::span<const double> kappa_tot_obs,
                   std::uint64_t seed) {
    if (delta_s.size() != kappa_tot_obs.size()) throw ValidationError("inputs", "length mismatch");
    if (delta_s.size() < 5) throw InsufficientDataError("fit_cw_sweep: need >= 5 points");

    double mean = 0.0, var = 0.0;
    for (double v : kappa_tot_obs) mean += v;
    mean /= kappa_tot_obs.size();
    for (double v : kappa_tot_obs) var += (v - mean) * (v - mean);
    var /= kappa_tot_obs.size();

    CwFit fit;
    if (var <= 1e-20 * mean * mean) {
        // Flat sweep: the spin term is absent, Γ carries no information.
        fit.g_ens = 0.0;
        fit.gamma = 0.0;
        fit.kappa = mean;
        fit.cov_diag = {0.0, 0.0, 0.0};
        fit.gamma_unidentifiable = true;
        return fit;
    }

    Model model = [](std::span<const double> p, double x) {
        const double g = std::abs(p[0]), gam = std::abs(p[1]);
        return p[2] + g * g * gam / (x * x + gam * gam / 4.0);
    };

    // Initial guesses from the curve shape: baseline, peak height, half width.
    double kappa0 = *std::min_element(kappa_tot_obs.begin(), kappa_tot_obs.end());
    double peak = *std::max_element(kappa_tot_obs.begin(), kappa_tot_obs.end()) - kappa0;
    double gamma0 = 0.0;
    for (std::size_t i = 0; i < delta_s.size(); ++i)
        if (kappa_tot_obs[i] - kappa0 > peak / 2.0)
            gamma0 = std::max(gamma0, 2.0 * std::abs(delta_s[i]));
    if (gamma0 == 0.0)
        gamma0 = (*std::max_element(delta_s.begin(), delta_s.end()) -
                  *std::min_element(delta_s.begin(), delta_s.end())) /
                 2.0;
    double g0 = std::sqrt(std::max(peak * gamma0 / 4.0, 1e-30));

    LmOutcome o = lm_multistart(model, {g0, gamma0, kappa0}, delta_s, kappa_tot_obs, seed);
    if (!o.converged)
        throw NumericalError("fit_cw_sweep: no convergence after max iterations (best cost " +
                             std::to_string(o.cost) + ")");
    fit.g_ens = std::abs(o.params[0]);
    fit.gamma = std::abs(o.params[1]);
    fit.kappa = o.params[2];
    fit.cov_diag = o.cov_diag;
    fit.residual_rms = std::sqrt(o.cost / delta_s.size());
    fit.converged = o.converged;
    return fit;
}

RecoveryFit fit_recovery(std::span<const double> t, std::span<const double> signal,
                         RecoveryModel model, std::uint64_t seed) {
    if (t.size() != signal.size()) throw ValidationError("inputs", "length mismatch");
    const int n_free = (model == RecoveryModel::Mono) ? 3 : 5;
    if (static_cast<int>(t.size()) < 2 * n_free)
        throw InsufficientDataError("fit_recovery: need >= " + std::to_string(2 * n_free) +
                                    " samples");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1])) throw ValidationError("t", "must be strictly increasing");

    RecoveryFit fit;
    fit.model = model;

    double smin = *std::min_element(signal.begin(), signal.end());
    double smax = *std::max_element(signal.begin(), signal.end());
    const double scale = std::max(std::abs(smin), std::abs(smax));
    if (smax - smin <= 1e-12 * std::max(scale, 1e-30)) {
        // Constant signal: nothing recovers, T1 is meaningless.
        fit.amplitudes.assign(model == RecoveryModel::Mono ? 1 : 2, 0.0);
        fit.t1_constants.assign(model == RecoveryModel::Mono ? 1 : 2, 0.0);
        fit.baseline = smin;
        fit.t1_unidentifiable = true;
        return fit;
    }

    const double a0 = (signal.back() - signal.front()) / 2.0;
    const double b0 = (signal.back() + signal.front()) / 2.0;
    double tmid = t.back() / 3.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if ((signal[i] - b0) * (signal.front() - b0) < 0.0) {
            tmid = std::max(t[i] / std::log(2.0), t.front());
            break;
        }
    }

    LmOutcome o;
    if (model == RecoveryModel::Mono) {
        Model f = [](std::span<const double> p, double x) {
            return p[0] * (1.0 - 2.0 * std::exp(-x / std::abs(p[1]))) + p[2];
        };
        o = lm_multistart(f, {a0, tmid, b0}, t, signal, seed);
        if (!o.converged) throw NumericalError("fit_recovery: no convergence");
        fit.amplitudes = {o.params[0]};
        fit.t1_constants = {std::abs(o.params[1])};
        fit.baseline = o.params[2];
    } else {
        Model f = [](std::span<const double> p, double x) {
            return p[0] * (1.0 - 2.0 * std::exp(-x / std::abs(p[1]))) +
                   p[2] * (1.0 - 2.0 * std::exp(-x / std::abs(p[3]))) + p[4];
        };
        o = lm_multistart(f, {a0 / 2.0, tmid / 5.0, a0 / 2.0, tmid * 3.0, b0}, t, signal, seed);
        if (!o.converged) throw NumericalError("fit_recovery: no convergence");
        double af = o.params[0], tf = std::abs(o.params[1]);
        double as = o.params[2], ts = std::abs(o.params[3]);
        if (tf > ts) {
            std::swap(af, as);
            std::swap(tf, ts);
            std::swap(o.cov_diag[0], o.cov_diag[2]);
            std::swap(o.cov_diag[1], o.cov_diag[3]);
        }
        fit.amplitudes = {af, as};
        fit.t1_constants = {tf, ts};
        fit.baseline = o.params[4];
    }
    fit.residual_rms = std::sqrt(o.cost / t.size());
    fit.converged = o.converged;
    const double amp_total =
        std::accumulate(fit.amplitudes.begin(), fit.amplitudes.end(), 0.0,
                        [](double acc, double v) { return acc + std::abs(v); });
    if (amp_total < 1e-9 * std::max(scale, 1e-30)) fit.t1_unidentifiable = true;
    return fit;
}

double cooperativity_from_fields(std::complex<double> a_sat, std::complex<double> a_pol) {
    const double pol = std::abs(a_pol);
    if (!(pol > 0.0))
        throw std::domain_error("cooperativity_from_fields: |a_pol| must be > 0");
    return std::abs(a_sat) / pol - 1.0;
}

double resonance_field(double phi_deg, const AngleModel& model) {
    if (!(model.gamma_c > 0.0 && model.gamma_ab > 0.0))
        throw std::domain_error("resonance_field: gyromagnetic rates must be > 0");
    const double phi = deg_to_rad(phi_deg - model.misalignment_deg);
    const double c = std::cos(phi), s = std::sin(phi);
    const double gamma_eff =
        std::sqrt(model.gamma_c * model.gamma_c * c * c + model.gamma_ab * model.gamma_ab * s * s);
    return model.omega0 / gamma_eff;
}

}  // namespace sse
