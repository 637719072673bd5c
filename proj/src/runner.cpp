#include "sse/runner.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sse/errors.hpp"
#include "sse/format.hpp"

namespace sse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string() && v.get<std::string>() == "inf") return kInf;
    if (!v.is_number()) throw ValidationError(key, "must be a number");
    return v.get<double>();
}

double require_num(const json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(key, "missing required field");
    return get_num(j, key, 0.0);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError(p.string(), "cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << content;
}

PulseSequence resolve_sequence(const json& sj, const fs::path& base_dir) {
    if (sj.contains("preset")) {
        PresetParams p;
        const json params = sj.value("params", json::object());
        p.tau = get_num(params, "tau_us", p.tau);
        p.pulse_duration = get_num(params, "pulse_dur_us", p.pulse_duration);
        p.amp1 = get_num(params, "amp1", p.amp1);
        p.amp2 = get_num(params, "amp2", p.amp2);
        p.detune_mhz = get_num(params, "detune_mhz", p.detune_mhz);
        p.window_duration = get_num(params, "window_dur_us", p.window_duration);
        p.window_offset = get_num(params, "window_offset_us", p.window_offset);
        p.suppress_echo = static_cast<int>(get_num(params, "suppress_echo", p.suppress_echo));
        p.between_echoes = params.value("between_echoes", false);
        p.total_duration = get_num(params, "total_us", p.total_duration);
        return make_preset(sj.at("preset").get<std::string>(), p);
    }
    if (sj.contains("file"))
        return parse_sequence(read_file(base_dir / sj.at("file").get<std::string>()));
    if (sj.contains("inline")) return parse_sequence(sj.at("inline").get<std::string>());
    if (sj.contains("json")) return sequence_from_json(sj.at("json"));
    throw ValidationError("sequence", "needs one of: preset, file, inline, json");
}

}  // namespace

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.seed = static_cast<std::uint64_t>(get_num(j, "seed", 0.0));

    if (!j.contains("ensemble")) throw ValidationError("ensemble", "missing section");
    const json& ej = j.at("ensemble");
    cfg.ensemble.n_bins = static_cast<int>(get_num(ej, "n_bins", 1000));
    cfg.ensemble.coupling_subbins = static_cast<int>(get_num(ej, "coupling_subbins", 1));
    const std::string shape = ej.value("lineshape", "lorentzian");
    if (shape == "lorentzian")
        cfg.ensemble.lineshape = Lineshape::Lorentzian;
    else if (shape == "gaussian")
        cfg.ensemble.lineshape = Lineshape::Gaussian;
    else
        throw ValidationError("lineshape", "must be 'lorentzian' or 'gaussian'");
    cfg.ensemble.linewidth_fwhm = mhz_to_rad_per_us(require_num(ej, "linewidth_mhz"));
    cfg.ensemble.truncation_halfwidth = get_num(ej, "truncation_halfwidth", 5.0);
    const json cj = ej.value("coupling", json::object());
    const std::string dist = cj.value("dist", "uniform");
    if (dist == "uniform")
        cfg.ensemble.coupling_dist = CouplingDist::Uniform;
    else if (dist == "annulus")
        cfg.ensemble.coupling_dist = CouplingDist::Annulus;
    else
        throw ValidationError("coupling.dist", "must be 'uniform' or 'annulus'");
    cfg.ensemble.g_min = mhz_to_rad_per_us(get_num(cj, "g_min_mhz", 0.0));
    cfg.ensemble.g_max = mhz_to_rad_per_us(get_num(cj, "g_max_mhz", 0.0));
    const std::string sampling = ej.value("sampling", "quantile");
    if (sampling == "quantile")
        cfg.ensemble.sampling = DetuningSampling::QuantileGrid;
    else if (sampling == "random")
        cfg.ensemble.sampling = DetuningSampling::Random;
    else
        throw ValidationError("sampling", "must be 'quantile' or 'random'");
    cfg.ensemble.n_effective = get_num(ej, "n_effective", 1.0);
    cfg.ensemble.t1 = get_num(ej, "t1_us", kInf);
    cfg.ensemble.t2 = get_num(ej, "t2_us", kInf);
    cfg.ensemble.initial_polarization = get_num(ej, "initial_polarization", 1.0);
    cfg.ensemble.seed = cfg.seed;
    cfg.ensemble.validate();
    cfg.g_ens_target = mhz_to_rad_per_us(get_num(ej, "g_ens_target_mhz", 0.0));

    if (!j.contains("cavity")) throw ValidationError("cavity", "missing section");
    const json& cavj = j.at("cavity");
    cfg.cavity.kappa_c = mhz_to_rad_per_us(require_num(cavj, "kappa_c_mhz"));
    cfg.cavity.kappa_int = mhz_to_rad_per_us(get_num(cavj, "kappa_int_mhz", 0.0));
    cfg.cavity.drive_rate_ref = mhz_to_rad_per_us(get_num(cavj, "drive_rate_mhz", 0.0));
    cfg.cavity.validate();

    const json sj = j.value("sim", json::object());
    cfg.sim.dt = get_num(sj, "dt_us", 1e-3);
    cfg.sim.output_stride = static_cast<int>(get_num(sj, "output_stride", 1));
    if (!(cfg.sim.dt > 0.0)) throw ValidationError("sim.dt_us", "must be > 0");
    if (cfg.sim.output_stride < 1) throw ValidationError("sim.output_stride", "must be >= 1");

    if (!j.contains("sequence")) throw ValidationError("sequence", "missing section");
    cfg.sequence = resolve_sequence(j.at("sequence"), base_dir);

    const json dj = j.value("detection", json::object());
    cfg.detection.n_max = static_cast<int>(get_num(dj, "n_max", 4));
    cfg.detection.window_halfwidth = get_num(dj, "window_halfwidth_us", 5.0);
    cfg.detection.noise_mult = get_num(dj, "noise_mult", 3.0);
    cfg.detection.quiet_lo = get_num(dj, "quiet_lo_us", cfg.detection.quiet_lo);
    cfg.detection.quiet_hi = get_num(dj, "quiet_hi_us", cfg.detection.quiet_hi);
    return cfg;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
    std::vector<SpinBin> bins = build_ensemble(cfg.ensemble);
    if (cfg.g_ens_target > 0.0)
        scale_couplings(bins, coupling_scale_for_target(bins, cfg.g_ens_target));

    Relaxation relax{cfg.ensemble.t1, cfg.ensemble.t2,
                     -cfg.ensemble.initial_polarization / 2.0};
    RunArtifacts art;
    art.trace = integrate(bins, relax, cfg.cavity, cfg.sequence, cfg.sim);

    DetectionOptions opts;
    opts.noise_mult = cfg.detection.noise_mult;
    opts.quiet_lo = cfg.detection.quiet_lo;
    opts.quiet_hi = cfg.detection.quiet_hi;
    opts.drives = cfg.sequence.drives;
    art.echoes = extract_echoes(art.trace, cfg.sequence.tau, cfg.detection.n_max,
                                cfg.detection.window_halfwidth, opts);

    const auto q = ensemble_quantities(bins, cfg.ensemble.linewidth_fwhm,
                                       cfg.cavity.kappa_tot());
    json echoes_j = json::array();
    for (const auto& r : art.echoes) {
        echoes_j.push_back({{"k", r.k},
                            {"t_peak_us", r.t_peak},
                            {"t_centroid_us", r.t_centroid},
                            {"peak_mag", r.peak_mag},
                            {"flagged", r.flagged}});
    }
    art.summary = {
        {"version", kVersionString},
        {"config", cfg.raw},
        {"amplitude_metric", "peak_mag"},
        {"ensemble_quantities",
         {{"g_ens_mhz", rad_per_us_to_mhz(q.g_ens)},
          {"n_effective", q.n_effective},
          {"cooperativity", q.cooperativity}}},
        {"echoes", echoes_j},
        {"warnings", art.trace.warnings},
    };
    return art;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

struct PostfitSpec {
    bool eta = false;
    double beta1_deg = 90.0;
    double beta2_deg = 90.0;
    bool beta1_scale_by_amp1 = false;  // β₁ = amp1 · β₂ (pulse amplitude ratio)
    bool linear = false;
    bool filter = false;
};

PostfitSpec parse_postfit(const json& sweep_j) {
    PostfitSpec pf;
    if (!sweep_j.contains("postfit")) return pf;
    const json& pj = sweep_j.at("postfit");
    if (pj.contains("eta")) {
        pf.eta = true;
        const json& e = pj.at("eta");
        pf.beta1_deg = get_num(e, "beta1_deg", 90.0);
        pf.beta2_deg = get_num(e, "beta2_deg", 90.0);
        pf.beta1_scale_by_amp1 = e.value("beta1_scale_by_amp1", false);
    }
    pf.linear = pj.value("linear", false);
    pf.filter = pj.value("filter", false);
    return pf;
}

double unflagged_mag(const std::vector<EchoRecord>& recs, int k) {
    for (const auto& r : recs)
        if (r.k == k && !r.flagged) return r.peak_mag;
    return 0.0;
}

void append_postfit(SweepResult& res, const json& raw, const json& sweep_j) {
    const PostfitSpec pf = parse_postfit(sweep_j);
    json out = json::object();

    if (pf.eta) {
        json per_point = json::array();
        double log_eta_sum = 0.0;
        int n_eta = 0;
        for (std::size_t i = 0; i < res.values.size(); ++i) {
            double b1 = deg_to_rad(pf.beta1_deg);
            if (pf.beta1_scale_by_amp1) b1 = deg_to_rad(res.values[i] * pf.beta2_deg);
            try {
                EtaFit fit = fit_eta(res.echoes[i], b1, deg_to_rad(pf.beta2_deg));
                per_point.push_back({{"sweep_value", res.values[i]},
                                     {"eta", fit.eta},
                                     {"residual_rms_log", fit.residual_rms}});
                log_eta_sum += std::log(fit.eta);
                ++n_eta;
            } catch (const InsufficientDataError& e) {
                per_point.push_back({{"sweep_value", res.values[i]}, {"error", e.what()}});
            }
        }
        out["eta"] = {{"per_point", per_point}};
        if (n_eta > 0) out["eta"]["pooled"] = std::exp(log_eta_sum / n_eta);
    }

    if (pf.linear) {
        std::vector<double> e1, e2, e3;
        for (const auto& recs : res.echoes) {
            e1.push_back(unflagged_mag(recs, 1));
            e2.push_back(unflagged_mag(recs, 2));
            e3.push_back(unflagged_mag(recs, 3));
        }
        const LinearFit f12 = fit_linear_through_origin(e1, e2);
        const LinearFit f23 = fit_linear_through_origin(e2, e3);
        out["linear"] = {{"echo2_vs_echo1", {{"slope", f12.slope}, {"r_squared", f12.r_squared}}},
                         {"echo3_vs_echo2", {{"slope", f23.slope}, {"r_squared", f23.r_squared}}}};
    }

    if (pf.filter) {
        // Sweep values are detune window Δω in linear MHz; compare
        // echo1(Δω)/echo1(Δω closest to 0) against the resonator filter.
        const double kappa_tot =
            mhz_to_rad_per_us(require_num(raw.at("cavity"), "kappa_c_mhz") +
                              get_num(raw.at("cavity"), "kappa_int_mhz", 0.0));
        std::size_t ref = 0;
        for (std::size_t i = 1; i < res.values.size(); ++i)
            if (std::abs(res.values[i]) < std::abs(res.values[ref])) ref = i;
        const double e1_ref = unflagged_mag(res.echoes[ref], 1);
        json points = json::array();
        double sq_sum = 0.0;
        int n_pts = 0;
        for (std::size_t i = 0; i < res.values.size(); ++i) {
            const double measured = unflagged_mag(res.echoes[i], 1) / e1_ref;
            const double predicted =
                filter_function(mhz_to_rad_per_us(res.values[i]), kappa_tot);
            points.push_back({{"delta_mhz", res.values[i]},
                              {"measured_ratio", measured},
                              {"filter_function", predicted}});
            sq_sum += (measured - predicted) * (measured - predicted);
            ++n_pts;
        }
        out["filter"] = {{"points", points},
                         {"rms_deviation", std::sqrt(sq_sum / std::max(n_pts, 1))}};
    }
    res.summary["postfit"] = out;
}

}  // namespace

SweepResult run_sweep(const json& raw_config, const fs::path& base_dir, int threads) {
    if (!raw_config.contains("sweep")) throw ValidationError("sweep", "missing section");
    const json& sweep_j = raw_config.at("sweep");
    if (!sweep_j.contains("path") || !sweep_j.contains("values"))
        throw ValidationError("sweep", "needs 'path' and 'values'");
    const std::string path = sweep_j.at("path").get<std::string>();
    std::vector<double> values = sweep_j.at("values").get<std::vector<double>>();
    for (double v : values)
        if (!std::isfinite(v)) throw ValidationError("sweep.values", "must be finite");

    // Resolve every point's config up front so config errors surface before
    // any integration starts.
    std::vector<ExperimentConfig> cfgs;
    cfgs.reserve(values.size());
    for (double v : values) {
        json point = raw_config;
        try {
            point[json::json_pointer(path)] = v;
        } catch (const json::exception& e) {
            throw ValidationError("sweep.path", e.what());
        }
        cfgs.push_back(parse_config(point, base_dir));
    }

    SweepResult res;
    res.values = values;
    res.echoes.resize(values.size());
    std::vector<json> point_summaries(values.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfgs.size() || failed.load()) return;
            try {
                RunArtifacts art = run_experiment(cfgs[i]);
                res.echoes[i] = std::move(art.echoes);
                point_summaries[i] = std::move(art.summary);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    const int n_threads = std::clamp(threads, 1, static_cast<int>(values.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw NumericalError("sweep point failed: " + first_error);

    json points = json::array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        points.push_back({{"sweep_value", values[i]},
                          {"echoes", point_summaries[i].at("echoes")},
                          {"warnings", point_summaries[i].at("warnings")}});
    }
    res.summary = {{"version", kVersionString},
                   {"config", raw_config},
                   {"amplitude_metric", "peak_mag"},
                   {"sweep_path", path},
                   {"points", points}};
    append_postfit(res, raw_config, sweep_j);
    return res;
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> read_csv_columns(const std::string& text,
                                                  const std::vector<std::string>& header) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::istringstream hs(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(hs, cell, ',')) {
            if (col >= header.size() || cell != header[col])
                throw SchemaError("CSV header column " + std::to_string(col + 1) +
                                  ": expected '" +
                                  (col < header.size() ? header[col] : "<none>") + "', got '" +
                                  cell + "'");
            ++col;
        }
        if (col != header.size())
            throw SchemaError("CSV header has " + std::to_string(col) + " columns, expected " +
                              std::to_string(header.size()));
    }
    std::vector<std::vector<double>> cols(header.size());
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= header.size())
                throw SchemaError("row " + std::to_string(row) + ": too many columns");
            try {
                std::size_t used = 0;
                cols[col].push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw SchemaError("row " + std::to_string(row) + ", column " +
                                  std::to_string(col + 1) + ": not a number: '" + cell + "'");
            }
            ++col;
        }
        if (col != header.size())
            throw SchemaError("row " + std::to_string(row) + ": expected " +
                              std::to_string(header.size()) + " columns, got " +
                              std::to_string(col));
    }
    return cols;
}

std::vector<EchoRecord> read_echo_csv(const std::string& text) {
    const auto cols = read_csv_columns(
        text, {"k", "t_peak_us", "t_centroid_us", "peak_mag", "area_re", "area_im", "flagged"});
    std::vector<EchoRecord> recs;
    for (std::size_t i = 0; i < cols[0].size(); ++i) {
        EchoRecord r;
        r.k = static_cast<int>(cols[0][i]);
        r.t_peak = cols[1][i];
        r.t_centroid = cols[2][i];
        r.peak_mag = cols[3][i];
        r.area = {cols[4][i], cols[5][i]};
        r.flagged = cols[6][i] != 0.0;
        recs.push_back(r);
    }
    return recs;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// CLI commands
// ---------------------------------------------------------------------------

namespace {

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const SchemaError*>(&e)) return kExitSchema;
    if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const SequenceError*>(&e))
        return kExitConfig;
    return kExitFailure;
}

json load_config(const fs::path& config_path, std::optional<std::uint64_t> seed_override) {
    json j;
    try {
        j = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
        throw ValidationError(config_path.string(), e.what());
    }
    if (seed_override) j["seed"] = *seed_override;
    return j;
}

std::string combined_sweep_csv(const SweepResult& res) {
    std::string out = "sweep_value,echo_k,amplitude\n";
    for (std::size_t i = 0; i < res.values.size(); ++i) {
        for (const auto& r : res.echoes[i]) {
            out += fmt_double(res.values[i]) + "," + std::to_string(r.k) + "," +
                   fmt_double(r.peak_mag) + "\n";
        }
    }
    return out;
}

}  // namespace

int cmd_run(const fs::path& config_path, const fs::path& out_dir,
            std::optional<std::uint64_t> seed_override) {
    try {
        const json j = load_config(config_path, seed_override);
        const ExperimentConfig cfg = parse_config(j, config_path.parent_path());
        RunArtifacts art = run_experiment(cfg);
        fs::create_directories(out_dir);
        write_file(out_dir / "trace.csv", trace_to_csv(art.trace));
        write_file(out_dir / "echoes.csv", echoes_to_csv(art.echoes));
        write_file(out_dir / "summary.json", art.summary.dump(2) + "\n");
        for (const auto& w : art.trace.warnings) std::cerr << "warning: " << w << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int cmd_sweep(const fs::path& config_path, const fs::path& out_dir,
              std::optional<std::uint64_t> seed_override, int threads) {
    try {
        const json j = load_config(config_path, seed_override);
        SweepResult res = run_sweep(j, config_path.parent_path(), threads);
        fs::create_directories(out_dir);
        for (std::size_t i = 0; i < res.values.size(); ++i)
            write_file(out_dir / ("echoes_" + std::to_string(i) + ".csv"),
                       echoes_to_csv(res.echoes[i]));
        write_file(out_dir / "sweep.csv", combined_sweep_csv(res));
        write_file(out_dir / "summary.json", res.summary.dump(2) + "\n");
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int cmd_fit(const std::string& kind, const fs::path& input_csv, const fs::path& out_dir,
            const json& flags) {
    try {
        const std::string text = read_file(input_csv);
        json summary = {{"version", kVersionString},
                        {"input_file", input_csv.string()},
                        {"input_hash_fnv1a", fnv1a_hash(text)}};
        if (kind == "eta") {
            const auto recs = read_echo_csv(text);
            const double b1 = deg_to_rad(get_num(flags, "beta1_deg", 90.0));
            const double b2 = deg_to_rad(get_num(flags, "beta2_deg", 90.0));
            const EtaFit fit = fit_eta(recs, b1, b2);
            summary["model"] = "sse_eta";
            summary["parameters"] = {{"eta", fit.eta}};
            summary["residual_rms_log"] = fit.residual_rms;
            summary["predicted_amplitudes"] = fit.predicted;
        } else if (kind == "cw") {
            const auto cols = read_csv_columns(text, {"delta_mhz", "kappa_tot_mhz"});
            std::vector<double> xs(cols[0].size()), ys(cols[0].size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                xs[i] = mhz_to_rad_per_us(cols[0][i]);
                ys[i] = mhz_to_rad_per_us(cols[1][i]);
            }
            const CwFit fit =
                fit_cw_sweep(xs, ys, static_cast<std::uint64_t>(get_num(flags, "seed", 0.0)));
            summary["model"] = "cw_kappa_tot";
            summary["parameters"] = {{"g_ens_mhz", rad_per_us_to_mhz(fit.g_ens)},
                                     {"gamma_mhz", rad_per_us_to_mhz(fit.gamma)},
                                     {"kappa_mhz", rad_per_us_to_mhz(fit.kappa)}};
            summary["covariance_diag"] = fit.cov_diag;
            summary["residual_rms"] = fit.residual_rms;
            summary["gamma_unidentifiable"] = fit.gamma_unidentifiable;
        } else if (kind == "recovery") {
            const auto cols = read_csv_columns(text, {"t_us", "signal"});
            const std::string model_name = flags.value("model", "mono");
            const RecoveryModel model =
                (model_name == "bi") ? RecoveryModel::Bi : RecoveryModel::Mono;
            const RecoveryFit fit =
                fit_recovery(cols[0], cols[1], model,
                             static_cast<std::uint64_t>(get_num(flags, "seed", 0.0)));
            summary["model"] = (model == RecoveryModel::Bi) ? "recovery_bi" : "recovery_mono";
            summary["parameters"] = {{"amplitudes", fit.amplitudes},
                                     {"t1_us", fit.t1_constants},
                                     {"baseline", fit.baseline}};
            summary["residual_rms"] = fit.residual_rms;
            summary["t1_unidentifiable"] = fit.t1_unidentifiable;
        } else if (kind == "linear") {
            const auto cols = read_csv_columns(text, {"x", "y"});
            const LinearFit fit = fit_linear_through_origin(cols[0], cols[1]);
            summary["model"] = "linear_through_origin";
            summary["parameters"] = {{"slope", fit.slope}};
            summary["r_squared"] = fit.r_squared;
        } else {
            throw ValidationError("fit", "unknown fit kind '" + kind + "'");
        }
        fs::create_directories(out_dir);
        write_file(out_dir / ("fit_" + kind + ".json"), summary.dump(2) + "\n");
        std::cout << summary.dump(2) << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace sse
