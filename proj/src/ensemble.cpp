#include "sse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sse/errors.hpp"

namespace sse {

void EnsembleSpec::validate() const {
    if (n_bins < 1) throw ValidationError("n_bins", "must be >= 1");
    if (coupling_subbins < 1) throw ValidationError("coupling_subbins", "must be >= 1");
    if (!(linewidth_fwhm >= 0.0)) throw ValidationError("linewidth_fwhm", "must be >= 0");
    if (!(truncation_halfwidth > 0.0))
        throw ValidationError("truncation_halfwidth", "must be > 0");
    if (!(g_min >= 0.0)) throw ValidationError("g_min", "must be >= 0");
    if (!(g_max >= g_min)) throw ValidationError("g_max", "must be >= g_min");
    if (coupling_dist == CouplingDist::Annulus && !(g_min > 0.0 && g_max > g_min))
        throw ValidationError("g_min", "annulus distribution requires 0 < g_min < g_max");
    if (!(n_effective > 0.0)) throw ValidationError("n_effective", "must be > 0");
    if (!(t1 > 0.0)) throw ValidationError("t1", "must be > 0 or infinite");
    if (!(t2 > 0.0)) throw ValidationError("t2", "must be > 0 or infinite");
    if (!(initial_polarization >= -1.0 && initial_polarization <= 1.0))
        throw ValidationError("initial_polarization", "must lie in [-1, 1]");
}

namespace detail {

// Acklam's rational approximation for the standard normal quantile,
// refined with one Halley step on erfc. Accurate to ~1e-15 over (0,1).
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement: e = Φ(x) - p
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(kTwoPi) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

double lorentzian_quantile_truncated(double u, double fwhm, double halfwidth) {
    const double gamma = fwhm / 2.0;  // HWHM
    const double lim = halfwidth * fwhm;
    // CDF F(x) = 1/2 + atan(x/γ)/π, restricted to [-lim, lim]
    const double flo = 0.5 + std::atan(-lim / gamma) / kPi;
    const double fhi = 0.5 + std::atan(lim / gamma) / kPi;
    const double f = flo + u * (fhi - flo);
    return gamma * std::tan(kPi * (f - 0.5));
}

double gaussian_quantile_truncated(double u, double fwhm, double halfwidth) {
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const double lim = halfwidth * fwhm;
    const double zlim = lim / sigma;
    const double flo = 0.5 * std::erfc(zlim / std::sqrt(2.0));
    const double fhi = 1.0 - flo;
    const double f = flo + u * (fhi - flo);
    return sigma * normal_quantile(f);
}

double annulus_coupling_quantile(double u, double g_min, double g_max) {
    // CDF of pdf ∝ 1/g³: F(g) = (g_min⁻² - g⁻²) / (g_min⁻² - g_max⁻²)
    const double ia = 1.0 / (g_min * g_min);
    const double ib = 1.0 / (g_max * g_max);
    return 1.0 / std::sqrt(ia - u * (ia - ib));
}

// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
// Legendre recurrence. Used for the coupling quadrature of tensor ensembles.
static void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double p1 = xi, p0 = 1.0, dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = xi;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
            const double dx = p1 / dp;
            xi -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        x[n - 1 - i] = xi;
        w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
}

}  // namespace detail

double annulus_coupling_pdf(double g, double g_min, double g_max) {
    if (!(g_min > 0.0)) throw std::domain_error("annulus_coupling_pdf: g_min must be > 0");
    if (!(g_max > g_min)) throw std::domain_error("annulus_coupling_pdf: g_max must be > g_min");
    if (g < g_min || g > g_max) return 0.0;
    const double a2 = g_min * g_min, b2 = g_max * g_max;
    const double norm = 2.0 * a2 * b2 / (b2 - a2);
    return norm / (g * g * g);
}

std::vector<SpinBin> build_ensemble(const EnsembleSpec& spec) {
    spec.validate();
    const int n = spec.n_bins;
    std::mt19937_64 rng(spec.seed);

    // Quantiles for the detuning marginal.
    std::vector<double> u_det(n);
    if (spec.sampling == DetuningSampling::QuantileGrid) {
        for (int j = 0; j < n; ++j) u_det[j] = (j + 0.5) / n;
    } else {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int j = 0; j < n; ++j) u_det[j] = uni(rng);
    }

    std::vector<double> detunings(n, 0.0);
    if (spec.linewidth_fwhm > 0.0) {
        for (int j = 0; j < n; ++j) {
            detunings[j] = (spec.lineshape == Lineshape::Lorentzian)
                               ? detail::lorentzian_quantile_truncated(
                                     u_det[j], spec.linewidth_fwhm, spec.truncation_halfwidth)
                               : detail::gaussian_quantile_truncated(
                                     u_det[j], spec.linewidth_fwhm, spec.truncation_halfwidth);
        }
    }

    // Couplings. Under quantile gridding both marginals are exact but must be
    // decorrelated. A random shuffle would make the coupling-vs-detuning
    // profile white-noise rough, which shows up as a persistent incoherent
    // background in the radiated field (spectral roughness never dephases).
    // A golden-ratio stride assigns couplings so that every short run of
    // adjacent detuning bins sees a near-uniform stratum of the coupling
    // distribution, keeping the spectral source profile smooth.
    std::vector<double> couplings(n);
    const bool degenerate_g = (spec.g_max == spec.g_min);
    if (degenerate_g) {
        std::fill(couplings.begin(), couplings.end(), spec.g_min);
    } else if (spec.sampling == DetuningSampling::QuantileGrid) {
        const double golden = 0.6180339887498949;  // (sqrt(5)-1)/2
        for (int j = 0; j < n; ++j) {
            double u = std::fmod((j + 0.5) * golden, 1.0);
            couplings[j] = (spec.coupling_dist == CouplingDist::Annulus)
                               ? detail::annulus_coupling_quantile(u, spec.g_min, spec.g_max)
                               : spec.g_min + u * (spec.g_max - spec.g_min);
        }
    } else {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int j = 0; j < n; ++j) {
            const double u = uni(rng);
            couplings[j] = (spec.coupling_dist == CouplingDist::Annulus)
                               ? detail::annulus_coupling_quantile(u, spec.g_min, spec.g_max)
                               : spec.g_min + u * (spec.g_max - spec.g_min);
        }
    }

    const double sz0 = -spec.initial_polarization / 2.0;
    const int m = (degenerate_g ? 1 : spec.coupling_subbins);
    if (m > 1) {
        // Tensor grid: every detuning bin carries the same set of coupling
        // quadrature nodes, so the coupling average is identical across
        // detunings and the spectral source profile stays smooth. The nodes
        // are Gauss-Legendre in the variable where the coupling density is
        // uniform (v = 1/g² for the annulus 1/g³ law, g itself for uniform),
        // which converges much faster than equal-mass nodes when Rabi angles
        // wrap several times over the coupling range.
        std::vector<double> gx, gw;
        detail::gauss_legendre(m, gx, gw);
        std::vector<double> g_nodes(m), g_mass(m);
        if (spec.coupling_dist == CouplingDist::Annulus) {
            const double va = 1.0 / (spec.g_max * spec.g_max);
            const double vb = 1.0 / (spec.g_min * spec.g_min);
            for (int i = 0; i < m; ++i) {
                const double v = 0.5 * (va + vb) + 0.5 * (vb - va) * gx[i];
                g_nodes[i] = 1.0 / std::sqrt(v);
                g_mass[i] = gw[i] / 2.0;
            }
        } else {
            for (int i = 0; i < m; ++i) {
                g_nodes[i] = 0.5 * (spec.g_min + spec.g_max) +
                             0.5 * (spec.g_max - spec.g_min) * gx[i];
                g_mass[i] = gw[i] / 2.0;
            }
        }
        const double weight_det = spec.n_effective / n;
        std::vector<SpinBin> bins;
        bins.reserve(static_cast<std::size_t>(n) * m);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) {
                SpinBin b;
                b.detuning = detunings[j];
                b.coupling = g_nodes[i];
                b.weight = weight_det * g_mass[i];
                b.bloch = {0.0, 0.0, sz0};
                bins.push_back(b);
            }
        }
        return bins;
    }

    const double weight = spec.n_effective / n;
    std::vector<SpinBin> bins(n);
    for (int j = 0; j < n; ++j) {
        bins[j].detuning = detunings[j];
        bins[j].coupling = couplings[j];
        bins[j].weight = weight;
        bins[j].bloch = {0.0, 0.0, sz0};
    }
    return bins;
}

EnsembleQuantities ensemble_quantities(std::span<const SpinBin> bins,
                                       double linewidth_fwhm, double kappa_tot) {
    if (!(linewidth_fwhm > 0.0))
        throw std::domain_error("ensemble_quantities: linewidth must be > 0");
    if (!(kappa_tot > 0.0)) throw std::domain_error("ensemble_quantities: kappa_tot must be > 0");
    double sum_wg2 = 0.0, sum_w = 0.0;
    for (const auto& b : bins) {
        sum_wg2 += b.weight * b.coupling * b.coupling;
        sum_w += b.weight;
    }
    EnsembleQuantities q;
    q.g_ens = std::sqrt(sum_wg2);
    q.n_effective = sum_w;
    q.cooperativity = 4.0 * sum_wg2 / (linewidth_fwhm * kappa_tot);
    return q;
}

void scale_couplings(std::vector<SpinBin>& bins, double factor) {
    if (!(factor >= 0.0)) throw std::domain_error("scale_couplings: factor must be >= 0");
    for (auto& b : bins) b.coupling *= factor;
}

double coupling_scale_for_target(std::span<const SpinBin> bins, double g_ens_target) {
    double sum_wg2 = 0.0;
    for (const auto& b : bins) sum_wg2 += b.weight * b.coupling * b.coupling;
    if (!(sum_wg2 > 0.0))
        throw std::domain_error("coupling_scale_for_target: ensemble has zero coupling");
    return g_ens_target / std::sqrt(sum_wg2);
}

}  // namespace sse
