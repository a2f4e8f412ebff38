#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sanodep/episode.hpp"
#include "sanodep/model_parameters.hpp"
#include "sanodep/models.hpp"

namespace sanodep::training {

using models::ModelKind;
using models::ModelParameters;

struct TrainingConfig {
    ModelKind kind = ModelKind::SANODEP;
    std::string family = "LV2";
    double lambda = 0.0;  // forecast probability
    int epochs = 30;
    int steps_per_epoch = 10;
    int n_sys = 20;
    int n_x0 = 100;
    int n_grid = 100;
    int solver_substeps = 4;  // latent RK4 steps per grid interval
    zoo::EpisodeConfig episode;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 10.0;
    int max_consecutive_skips = 3;
    std::uint64_t seed = 0;
    models::ModelHyperparams hp;  // family-dependent fields are filled by resolve_hyperparams

    std::filesystem::path log_path;        // JSON-lines step log; empty disables
    std::filesystem::path checkpoint_dir;  // empty disables
    int checkpoint_every = 0;              // epochs between checkpoints
};

// Copies family-dependent settings (state and parameter dims, time range,
// latent step) into the hyperparameters.
models::ModelHyperparams resolve_hyperparams(const TrainingConfig& config);
void validate(const TrainingConfig& config);

class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : b1_(beta1), b2_(beta2), eps_(eps) {}
    void step(ModelParameters& params, const ModelParameters& grad, double lr);
    long iterations() const { return t_; }

private:
    double b1_, b2_, eps_;
    long t_ = 0;
    std::vector<ad::Matrix> m_, v_;
};

// Scales grad in place so its global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_gradient(ModelParameters& grad, double max_norm);

struct StepRecord {
    int step = 0;
    int epoch = 0;
    int n_episodes = 0;
    int n_forecast = 0;
    int dropped_episodes = 0;  // non-finite episodes removed before the update
    bool skipped = false;
    double loss = 0.0;  // mean per-episode total
    double reconstruction = 0.0;
    double kl_u = 0.0;
    double kl_l0 = 0.0;
    double param_nll = 0.0;
    double grad_norm = 0.0;
    double learning_rate = 0.0;
    double wall_ms = 0.0;
};

struct TrainingResult {
    ModelParameters params;
    std::vector<StepRecord> steps;
    std::vector<double> epoch_loss;  // mean loss over non-skipped steps
    int skipped_steps = 0;
};

using StepCallback = std::function<void(const StepRecord&)>;

TrainingResult train(const TrainingConfig& config, const StepCallback& on_step = {});

// One system's batched loss and gradient; exposed for tests.
struct SystemLoss {
    int n_episodes = 0;
    int dropped = 0;
    int forecast = 0;
    double total = 0.0;  // sums over episodes
    double reconstruction = 0.0;
    double kl_u = 0.0;
    double kl_l0 = 0.0;
    double param_nll = 0.0;
    ModelParameters grad;  // gradient of the summed total
};

SystemLoss system_loss(const ModelParameters& params, const zoo::TrajectorySet& set,
                       std::vector<zoo::Episode> episodes, Rng& rng);

}  // namespace sanodep::training
