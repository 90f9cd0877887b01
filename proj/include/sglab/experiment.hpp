#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sglab/bounds.hpp"
#include "sglab/estimator.hpp"
#include "sglab/excitation.hpp"
#include "sglab/model.hpp"
#include "sglab/schedule.hpp"
#include "sglab/transition.hpp"

namespace sglab {

enum class RunMode
{
    Direct, ///< designed regressors fed straight into a linear regression
    Armax,  ///< simulated ARMAX system, regressors assembled by the estimator
};

enum class DesignKind
{
    Allocator,
    Adversarial,
};

enum class InputKind
{
    Rademacher,
    Gaussian,
    Zero,
};

enum class SprGate
{
    Off,
    Warn,
    Error,
};

struct EmitFlags
{
    bool regressors = false;
    bool trace = true;
    bool plots = true;
};

struct ExperimentConfig
{
    std::string name = "run";
    RunMode mode = RunMode::Direct;
    std::uint64_t seed = 1;
    long horizon = 100000;
    long stride = 100;

    // direct mode
    ExcitationSpec excitation;
    DesignKind design = DesignKind::Allocator;
    std::optional<Matrix> truth; ///< m x d, defaults to a column of ones

    // armax mode
    ArmaxSystem system;
    InputKind input = InputKind::Rademacher;
    double input_scale = 1.0;

    NoiseModel noise;
    std::optional<Matrix> theta0;
    SprGate spr_gate = SprGate::Warn;

    std::optional<double> analysis_alpha; ///< kappa envelope exponent for the ledger
    bool condition_a = false;

    EmitFlags emit;

    double envelope_alpha() const;
    int regressor_dim() const;
};

/// Parses and validates; unknown keys and bad values raise ConfigError naming the JSON path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON form of a config (every field explicit).
nlohmann::json to_json(const ExperimentConfig& cfg);

struct RunResult
{
    ExperimentConfig config;
    Matrix phis; ///< phi_0 .. phi_N as columns
    Vector rs;   ///< r_0 .. r_N
    Matrix truth;
    Matrix theta_final;
    AllocatorAudit audit;
    std::optional<SimulationTrace> trace;
    std::optional<SprReport> spr;

    std::vector<EstimatorLogRow> estimator_log;
    std::vector<double> phi_norm_full; ///< |Phi(n, 0)| for n = 0 .. N
    std::vector<NormSample> phi_norm_series;
    bool phi_norm_monotone = true;

    KappaProfile kappa;
    double kappa_M = 0.0;

    BlockSchedule schedule;
    std::vector<BlockBoundReport> blocks;
    std::vector<CriterionPoint> criterion_dk;
    std::vector<CriterionPoint> criterion_general;
    MainTheoremLedger ledger;
    std::optional<ConditionADiag> condition_a;

    std::vector<std::string> warnings;
    double wall_seconds = 0.0;

    double final_theta_err() const;
    double final_phi_norm() const;
};

/**
 * Full pipeline: regressor generation (designed or simulated), SG estimation,
 * transition tracking, factorial schedule, block bounds, series criteria and
 * the inequality ledger. Fills `out` progressively so a failure part-way
 * leaves the completed stages in place.
 */
void run_pipeline(const ExperimentConfig& cfg, RunResult& out);
RunResult run_pipeline(const ExperimentConfig& cfg);

/// First stage only: regressors, r_n, the estimate and (armax) the trace.
/// Returns the true noise eps_1 .. eps_N as columns.
Matrix run_generation(const ExperimentConfig& cfg, RunResult& out);

struct RunSummary
{
    nlohmann::json doc;
};

RunSummary summarize(const RunResult& result);

/// Writes every CSV, summary.json, the resolved config and (optionally) plot scripts.
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

/// run_pipeline + write_outputs; on failure writes partial outputs and error.json, then rethrows.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Writes gnuplot scripts for the CSVs present in run_dir; returns the files written.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir,
                                              std::vector<std::string>* warnings = nullptr);

struct ComparisonRow
{
    double alpha;
    double final_phi_norm;
    double final_theta_err;
    double criterion_dk;
    double criterion_general;
    double dk_last_increment;
    bool phi_norm_monotone;
};

/**
 * Runs configs that differ only in the excitation exponent, one worker per
 * config (at most `max_threads`, 0 = SG_LAB_THREADS or the OpenMP default).
 * Rows come back in config order. Throws ConfigError on fewer than two configs
 * or configs differing elsewhere.
 */
std::vector<ComparisonRow> compare_regimes(const std::vector<ExperimentConfig>& cfgs,
                                           const std::optional<std::filesystem::path>& out_dir,
                                           int max_threads = 0);

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);

} // namespace sglab
