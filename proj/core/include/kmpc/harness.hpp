#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmpc/baselines.hpp"
#include "kmpc/controller.hpp"
#include "kmpc/plant.hpp"

namespace kmpc {

/// Fully resolved experiment description, parsed from one JSON document.
struct Scenario {
    std::string name;
    std::string experiment;  ///< groups runs that are comparable, e.g. "tracking_2r"
    std::size_t joints = 1;
    PlantParams plant;       ///< true plant, including unmodeled payload
    PlantParams nominal;     ///< what model-based components are told
    EpisodeSettings episode;
    Disturbance disturbance;

    enum class ReferenceSource { Ilqr, Csv, Constant };
    ReferenceSource reference_source = ReferenceSource::Ilqr;
    Vector ref_x0;
    Vector ref_xf;
    double ref_duration = 3.0;
    double ref_dt = 0.01;
    IlqrWeights ilqr_weights;
    std::filesystem::path ref_csv;

    /// Plant start; defaults to the reference start (hang-down for constant references).
    std::optional<Vector> initial_state;
    double clock_hz = 100.0;
    Jitter jitter = Jitter::Uniform;
    std::uint64_t seed = 1;
    double window_start = 0.75;
};

/// Throws ConfigError on any schema or consistency problem. Relative CSV
/// paths resolve against base_dir.
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

ReferenceTrajectory build_reference(const Scenario& sc);

struct Metrics {
    std::vector<double> tmse;  ///< per joint, rad^2 s
    double energy_pos = 0.0;
    double energy_neg = 0.0;
    std::optional<double> goal_time;
    double mean_iterations = 0.0;
    std::size_t max_iterations = 0;
    std::size_t max_iter_hits = 0;
    std::size_t refits = 0;
    std::size_t cycles = 0;
    bool aborted = false;
};

/// Per joint (1/N) sum dt_k (θ_k - θref_k)^2 over cycles with t >= window_start.
/// The reference is PCHIP-interpolated at the log times. dt_k is the
/// interval to the next cycle (the last reuses the previous interval).
/// Throws InputError on an empty window.
std::vector<double> tmse(const EpisodeLog& log, const ReferenceTrajectory& ref,
                         double window_start);

struct Energy {
    double pos = 0.0;
    double neg = 0.0;
};

/// Positive and negative mechanical work of p_k = sum_i u_i omega_i.
Energy energy(const EpisodeLog& log, std::size_t dof, double window_start = 0.0);

Metrics compute_metrics(const EpisodeLog& log, const ReferenceTrajectory& ref,
                        std::size_t dof, double window_start);

struct ScenarioResult {
    Scenario scenario;
    ReferenceTrajectory reference;
    EpisodeLog log;
    Metrics metrics;
};

/// Builds the reference, plant and controller and runs one episode.
ScenarioResult execute_scenario(const Scenario& sc);

/// Deterministic metrics document (no wall-clock values).
nlohmann::json metrics_json(const ScenarioResult& r);
/// Wall-clock refit statistics, kept apart from the metrics document.
nlohmann::json timing_json(const ScenarioResult& r);
std::string one_line_summary(const ScenarioResult& r);

/// Writes trajectory.csv, reference.csv, metrics.json, timing.json (and
/// models.json when snapshots exist) into out_dir.
void write_outputs(const ScenarioResult& r, const std::filesystem::path& out_dir);

/// CLI-level driver. Exit codes: 0 ok, 1 aborted episode, 2 config error.
int run_scenario(const std::filesystem::path& config, const std::filesystem::path& out_root,
                 std::optional<std::uint64_t> seed_override = std::nullopt);

struct ComparisonRow {
    std::string scenario;
    std::string experiment;
    std::string mode;
    std::vector<double> tmse;
    double energy_pos = 0.0;
    double energy_neg = 0.0;
    std::optional<double> goal_time;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    bool mismatched = false;  ///< rows come from different experiments

    std::string text() const;
    std::string csv() const;
};

/// Throws InputError with fewer than two documents.
Comparison compare(const std::vector<nlohmann::json>& metrics);
Comparison compare_files(const std::vector<std::filesystem::path>& paths);

}  // namespace kmpc
