#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sse/analysis.hpp"
#include "sse/detection.hpp"
#include "sse/dynamics.hpp"
#include "sse/ensemble.hpp"
#include "sse/sequence.hpp"

namespace sse {

inline constexpr const char* kVersionString = "sse-sim 0.1.0";

// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,     // config / validation errors
    kExitSchema = 3,     // external data does not match its schema
    kExitNumerical = 4,  // numerical failure
};

struct DetectionSettings {
    int n_max = 4;
    double window_halfwidth = 5.0;  // µs
    double noise_mult = 3.0;
    double quiet_lo = std::numeric_limits<double>::quiet_NaN();  // µs
    double quiet_hi = std::numeric_limits<double>::quiet_NaN();  // µs
};

// Fully resolved experiment: all rates in rad/µs, times in µs.
struct ExperimentConfig {
    EnsembleSpec ensemble;
    double g_ens_target = 0.0;  // rad/µs; 0 → keep the spec's couplings
    CavityParams cavity;
    SimConfig sim;
    PulseSequence sequence;
    DetectionSettings detection;
    std::uint64_t seed = 0;
    nlohmann::json raw;  // config document this was resolved from
};

// Parse and validate the JSON config document (frequencies in linear MHz,
// times in µs, angles in degrees; converted here, at the boundary).
// `base_dir` resolves relative sequence file paths.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = ".");

struct RunArtifacts {
    Trace trace;
    std::vector<EchoRecord> echoes;
    nlohmann::json summary;
};

RunArtifacts run_experiment(const ExperimentConfig& cfg);

struct SweepResult {
    std::vector<double> values;
    std::vector<std::vector<EchoRecord>> echoes;  // one list per sweep point
    nlohmann::json summary;
};

// Run the config once per sweep value (the value is written into the raw
// config at json-pointer `sweep.path`, then re-resolved). Points may run on
// `threads` workers; outputs are assembled in sweep order.
SweepResult run_sweep(const nlohmann::json& raw_config,
                      const std::filesystem::path& base_dir = ".", int threads = 1);

// Command implementations used by the CLI; return process exit codes and
// write artifacts under out_dir.
int cmd_run(const std::filesystem::path& config_path,
            const std::filesystem::path& out_dir,
            std::optional<std::uint64_t> seed_override);
int cmd_sweep(const std::filesystem::path& config_path,
              const std::filesystem::path& out_dir,
              std::optional<std::uint64_t> seed_override, int threads);
int cmd_fit(const std::string& kind, const std::filesystem::path& input_csv,
            const std::filesystem::path& out_dir, const nlohmann::json& flags);

// CSV helpers (shared with tests). Throws SchemaError with row/column info.
std::vector<std::vector<double>> read_csv_columns(const std::string& text,
                                                  const std::vector<std::string>& header);
std::vector<EchoRecord> read_echo_csv(const std::string& text);

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace sse
