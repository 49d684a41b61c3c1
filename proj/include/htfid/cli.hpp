#pragma once

#include "htfid/error.hpp"
#include "htfid/excite.hpp"
#include "htfid/model.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>

namespace htfid {

struct SimSettings {
    double dt = 1e-3;
    int n_cycles = 30;
    double tolerance = 1e-6;
    double perturbed_duration = 0.0;  ///< >0: extra run driven by chirp copy 0 [s]
    /// Start of the settling run; defaults to rest at the static equilibrium.
    /// Needed for undamped models, which never settle from rest.
    std::optional<std::array<double, 2>> initial_state;
};

struct EstimateSettings {
    int n_harmonics = 3;
    double alpha = 1e-4;
    double excitation_threshold = 1e-3;
    double max_condition = 1e14;
    double resonance_exclusion = 0.5;  ///< half-width around sqrt(k/m) in the comparison table [rad/s]
};

struct TheorySettings {
    int n_h = 10;
    int n_keep = 10;
    int n_points = 600;
    double f_hi = 7.0;  ///< [Hz]
};

struct FitSettings {
    double init_k = 150.0;
    double init_c = 1.0;
    int max_iterations = 500;
    int n_h = 10;
    int n_compare = 1;
};

struct RunConfig {
    ModelParams model;
    SimSettings sim;
    ChirpPlan chirp;
    EstimateSettings estimate;
    TheorySettings theory;
    FitSettings fit;
    bool write_records = false;
    std::string output_dir = "out";

    /// Throws Error(Config) on settings that violate a module precondition.
    void validate() const;
};

/// Missing sections and keys keep their defaults; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::ordered_json to_json(const RunConfig& config);

/// Command-line overrides applied on top of the file.
struct Overrides {
    std::optional<std::string> out;
    std::optional<double> alpha;
    std::optional<int> nh;
    std::optional<double> dt;
};

void apply_overrides(RunConfig& config, const Overrides& o);

/// Each command creates the output directory and echoes the resolved config
/// to resolved_config.json before writing anything else.
void run_simulate(const RunConfig& config);
void run_htf_theory(const RunConfig& config);
void run_identify(const RunConfig& config);

struct CompareReport {
    double tolerance = 0.0;
    long matched = 0;
    long only_in_a = 0;
    long only_in_b = 0;
    bool within_tolerance = true;
    nlohmann::ordered_json per_harmonic;  ///< n -> {max_rel, max_abs, max_rel_to_peak, count}
};

/// Diffs two HTF CSVs row by row; errors are relative to file b.
CompareReport compare_htf_files(const std::string& a, const std::string& b, double tolerance);
nlohmann::ordered_json to_json(const CompareReport& report);

/// 0 success, 2 configuration error, 3 numerical failure.
int exit_code(ErrorCode code);

}  // namespace htfid
