#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sanodep/bo.hpp"
#include "sanodep/model_parameters.hpp"
#include "sanodep/models.hpp"
#include "sanodep/training.hpp"

namespace sanodep::bench {

struct TrainingSection {
    int epochs = 30;
    int steps_per_epoch = 10;
    int n_sys = 4;
    int n_x0 = 16;
    int n_grid = 100;
    int solver_substeps = 1;
    double learning_rate = 1e-3;
    double grad_clip = 10.0;
    int M_max = 10;
    int m_max = 10;
    int n_max = 45;
};

struct EvaluationSection {
    int test_systems = 100;
    int trajectories_per_system = 20;
    std::vector<int> context_counts{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<std::string> scenarios{"forecast", "interpolate"};
    int n_samples = 32;
    int m_min = 1;
    int m_max = 10;
    std::uint64_t test_seed = 1234;
};

struct ProblemSection {
    std::string name;  // defaults to the family
    int budget = 10;
    int n_mc = 32;
    int restarts = 10;
    int iterations = 100;
    int restarts_per_n = 3;
};

struct EstimationSection {
    int test_systems = 20;
    std::vector<int> context_counts{1, 2, 5, 10};
    int context_points = 10;
    int n_samples = 256;
    std::uint64_t test_seed = 4321;
};

struct ExperimentConfig {
    std::string mode = "evaluate";  // train | evaluate | optimize | report
    std::string family = "LV2";
    std::vector<std::string> models{"SANODEP"};
    double lambda = 0.0;
    std::vector<std::uint64_t> seeds{0};
    TrainingSection training;
    EvaluationSection evaluation;
    ProblemSection problem;
    EstimationSection estimation;
    std::map<std::string, std::string> checkpoints;  // "<MODEL>" or "<MODEL>@<seed>" -> path
    bool train_missing = true;
    std::string out_dir = "out";
};

// Strict JSON parsing: unknown keys and ill-typed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical JSON of the fully resolved configuration.
std::string to_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

training::TrainingConfig training_config(const ExperimentConfig& config, models::ModelKind kind, std::uint64_t seed);

// Loads the configured checkpoint or, when allowed, trains and caches one
// under <out_dir>/checkpoints.
models::ModelParameters obtain_model(const ExperimentConfig& config, models::ModelKind kind, std::uint64_t seed);

// ------------------------------------------------------------ evaluation

struct EvalCase {
    models::PredictionInput input;
    std::vector<double> target_times;
    models::Matrix truth;  // state_dim x targets
};

std::vector<zoo::TrajectorySet> make_test_set(zoo::Family family, int n_systems, int n_trajectories, int n_grid,
                                              std::uint64_t seed);

// Trajectory 0 is the new one, trajectories 1..M are context. Forecasting
// conditions the new trajectory on (t0, x0) only; targets are its remaining
// grid points.
EvalCase make_eval_case(const zoo::TrajectorySet& set, int M, bool forecast, int m_min, int m_max, Rng& rng);

struct EvalScore {
    double mse = 0.0;
    double nll = 0.0;
    int n_trajectories = 0;
};

// Mean over test systems. `model` is a model kind name or "GP".
EvalScore evaluate(const std::string& model, const models::ModelParameters* params,
                   const std::vector<zoo::TrajectorySet>& test_set, int M, bool forecast,
                   const EvaluationSection& section);

struct MetricsRow {
    std::string model;
    int context_trajectories = 0;
    std::string scenario;
    double mse_mean = 0.0;
    double mse_std = 0.0;
    double nll_mean = 0.0;
    double nll_std = 0.0;
    int n_seeds = 0;
    int n_trajectories = 0;
};

std::vector<MetricsRow> run_model_eval(const ExperimentConfig& config);

// ------------------------------------------------------------ BO

struct BORun {
    std::string model;  // model kind, "GP" or "Random"
    std::uint64_t seed = 0;
    bo::BOHistory history;
};

bo::ProblemSpec resolve_problem(const ExperimentConfig& config);
std::vector<BORun> run_bo_benchmark(const ExperimentConfig& config);

// ------------------------------------------------------------ estimation

struct ParamRow {
    int system = 0;
    int context_trajectories = 0;
    std::string parameter;
    double truth = 0.0;
    double mean = 0.0;
    double q025 = 0.0;
    double q500 = 0.0;
    double q975 = 0.0;
    double prior_mean = 0.0;
    bool inside_95 = false;
    bool samples_in_support = false;
    double latency_ms = 0.0;  // reported separately; not part of the deterministic files
};

std::vector<ParamRow> run_param_estimation(const ExperimentConfig& config, std::uint64_t seed);

// ------------------------------------------------------------ reports

struct TrainingCurve {
    std::string model;
    std::uint64_t seed = 0;
    std::vector<double> epoch_loss;
};

struct Results {
    std::vector<TrainingCurve> training;
    std::vector<MetricsRow> metrics;
    std::vector<BORun> bo;
    std::vector<ParamRow> params;
};

Results run(const ExperimentConfig& config);

// Writes metrics.csv, bo_history.jsonl, hv_curve.csv, params_report.csv (when
// the results hold the corresponding data) and config_resolved.json. Wall
// clock measurements go to timing.csv, which is not reproducible.
void emit_report(const ExperimentConfig& config, const Results& results, const std::filesystem::path& out_dir);

// Loader for metrics.csv produced by an evaluate run.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace sanodep::bench
