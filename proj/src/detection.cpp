#include "sse/detection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sse/errors.hpp"
#include "sse/format.hpp"

namespace sse {

std::vector<EchoRecord> extract_echoes(const Trace& trace, double tau, int n_max,
                                       double window_halfwidth,
                                       const DetectionOptions& opts) {
    if (!(tau > 0.0)) throw ValidationError("tau", "must be > 0");
    if (n_max < 1) throw ValidationError("n_max", "must be >= 1");
    if (!(window_halfwidth > 0.0 && window_halfwidth < tau / 2.0))
        throw ValidationError("window_halfwidth", "must lie in (0, tau/2)");
    if (trace.times.size() < 2) throw ValidationError("trace", "too few samples");
    const double t_end = trace.times.back();
    if ((n_max + 1) * tau + window_halfwidth > t_end + 1e-9)
        throw ValidationError("trace", "does not cover (n_max+1)*tau + window");

    const double t0 = trace.times.front();
    const double dts = trace.dt_sample();
    const double out_scale = std::sqrt(trace.kappa_c);
    auto index_of = [&](double t) {
        long i = std::lround((t - t0) / dts);
        return std::clamp<long>(i, 0, static_cast<long>(trace.times.size()) - 1);
    };

    // Noise floor from a quiet segment of the trace.
    double qlo = std::isnan(opts.quiet_lo) ? t0 + 1.5 * tau : opts.quiet_lo;
    double qhi = std::isnan(opts.quiet_hi) ? t0 + 1.9 * tau : opts.quiet_hi;
    double noise_floor = 0.0;
    {
        long ilo = index_of(qlo), ihi = index_of(qhi);
        if (ihi > ilo) {
            double acc = 0.0;
            for (long i = ilo; i <= ihi; ++i) acc += std::norm(trace.a[i]);
            noise_floor = opts.noise_mult * out_scale * std::sqrt(acc / (ihi - ilo + 1));
        }
    }

    std::vector<EchoRecord> records;
    records.reserve(n_max);
    for (int k = 1; k <= n_max; ++k) {
        EchoRecord rec;
        rec.k = k;
        const double center = t0 + (k + 1) * tau;
        rec.window_lo = center - window_halfwidth;
        rec.window_hi = center + window_halfwidth;

        for (const auto& p : opts.drives) {
            if (p.t_start < rec.window_hi && p.t_end() > rec.window_lo) {
                std::ostringstream os;
                os << "echo window [" << rec.window_lo << ", " << rec.window_hi
                   << "] overlaps drive pulse at [" << p.t_start << ", " << p.t_end() << "]";
                throw SequenceError(os.str());
            }
        }

        const long ilo = index_of(rec.window_lo), ihi = index_of(rec.window_hi);
        double best = -1.0;
        long best_i = ilo;
        std::complex<double> area(0.0, 0.0);
        for (long i = ilo; i <= ihi; ++i) {
            const double m = std::abs(trace.a[i]);
            if (m > best) {
                best = m;
                best_i = i;
            }
            const double w = (i == ilo || i == ihi) ? 0.5 : 1.0;  // trapezoid
            area += w * trace.a[i];
        }
        rec.peak_mag = out_scale * best;
        rec.t_peak = trace.times[best_i];
        rec.t_centroid = rec.t_peak;
        if (best > 0.0) {
            double num = 0.0, den = 0.0;
            for (long i = ilo; i <= ihi; ++i) {
                const double m = std::abs(trace.a[i]);
                if (m >= 0.5 * best) {
                    num += trace.times[i] * m;
                    den += m;
                }
            }
            if (den > 0.0) rec.t_centroid = num / den;
        }
        rec.area = out_scale * dts * area;
        rec.flagged = rec.peak_mag < noise_floor || rec.peak_mag == 0.0;
        records.push_back(rec);
    }
    return records;
}

double echo_phase(const EchoRecord& record) {
    if (record.flagged)
        throw ValidationError("record", "echo " + std::to_string(record.k) +
                                            " is below the noise floor");
    return std::arg(record.area);
}

std::string echoes_to_csv(std::span<const EchoRecord> records) {
    std::string out = "k,t_peak_us,t_centroid_us,peak_mag,area_re,area_im,flagged\n";
    for (const auto& r : records) {
        out += std::to_string(r.k) + "," + fmt_double(r.t_peak) + "," +
               fmt_double(r.t_centroid) + "," + fmt_double(r.peak_mag) +
               "," + fmt_double(r.area.real()) + "," + fmt_double(r.area.imag()) + "," +
               (r.flagged ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace sse
