#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sanodep/autodiff.hpp"
#include "sanodep/episode.hpp"
#include "sanodep/model_parameters.hpp"
#include "sanodep/ode.hpp"
#include "sanodep/rng.hpp"
#include "sanodep/system_zoo.hpp"

namespace sanodep::models {

using ad::Matrix;
using ad::Var;
using zoo::ObservedTrajectory;

// Parameters of one model recorded as leaves on a tape.
class BoundModel {
public:
    BoundModel(ad::Tape& tape, const ModelParameters& params, bool trainable);

    const ad::BoundDense& operator[](const std::string& name) const;
    ad::Tape& tape() const { return *tape_; }
    const ModelParameters& params() const { return *params_; }
    ModelKind kind() const { return params_->kind; }
    const ModelHyperparams& hp() const { return params_->hp; }

    // Gradients of the last backward pass, in the same layout as the parameters.
    ModelParameters gradients() const;

private:
    ad::Tape* tape_;
    const ModelParameters* params_;
    std::map<std::string, ad::BoundDense> layers_;
};

// ---------------------------------------------------------------- encoder

// Feature rows of one context element: [t, x0, x] when x0 augmentation is
// on, otherwise [t, x].
int point_feature_dim(const ModelParameters& p);
bool uses_x0_features(const ModelParameters& p);
Matrix point_features(const ModelParameters& p, const ObservedTrajectory& obs);

Var embed_points(const BoundModel& m, const Var& features);
// sigma_lb + 0.9 * softplus(.) standard deviation head.
ad::GaussianVar gaussian_head(const BoundModel& m, const std::string& prefix, const Var& hidden);
ad::GaussianVar system_posterior(const BoundModel& m, const Var& pooled);
// SANODEP: q(l0 | (t0, x0)); input rows [t0; x0].
ad::GaussianVar initial_posterior(const BoundModel& m, const Var& initial);
// NODEP: q(l0 | context) from the pooled representation.
ad::GaussianVar initial_posterior_pooled(const BoundModel& m, const Var& pooled);

// ---------------------------------------------------------------- dynamics

// Per-column quantities that depend only on the system draw u.
struct LatentDynamics {
    Var u;        // latent dynamics variable (PI: clipped physical parameters)
    Var ode_pre;  // u-part of the first ODE layer (neural ODE only)
    Var dec_pre;  // u-part of the first decoder layer
};

LatentDynamics bind_dynamics(const BoundModel& m, const Var& u);
ode::VarField latent_field(const BoundModel& m, const LatentDynamics& dyn);
// Decoder distribution at time t for latent state columns.
ad::GaussianVar decode(const BoundModel& m, const LatentDynamics& dyn, const Var& state, const Var& t);
// NP decoder on [z, x0, t].
ad::GaussianVar decode_np(const BoundModel& m, const Var& z, const Var& x0, const Var& t);

// PI: exp of a log-space draw, clipped to the family parameter support.
Var physical_parameters(const BoundModel& m, const Var& log_u);

// ---------------------------------------------------------------- inference

struct EncoderOutput {
    Eigen::VectorXd r_sys;
    Eigen::VectorXd h_sys;
    ad::DiagonalGaussian q_u;
    std::optional<ad::DiagonalGaussian> q_l0;  // absent for NP and PISANODEP
};

struct PredictionInput {
    std::vector<ObservedTrajectory> context;  // other trajectories of the system
    ObservedTrajectory current;               // the new trajectory; includes (t0, x0)
};

EncoderOutput encode_context(const ModelParameters& p, const PredictionInput& input);

struct PredictiveSamples {
    std::vector<double> times;
    // Per target time: state_dim x n_samples.
    std::vector<Matrix> mean;
    std::vector<Matrix> std;
    Matrix u;   // latent dynamics draws, one column per sample
    Matrix l0;  // initial latent draws (empty for NP)

    int n_samples() const { return static_cast<int>(u.cols()); }
};

PredictiveSamples predict(const ModelParameters& p, const PredictionInput& input, const std::vector<double>& times,
                          int n_samples, Rng& rng);

// Mixture negative log-likelihood of truth (state_dim x T) averaged over time points.
double mixture_nll(const PredictiveSamples& s, const Matrix& truth);
// Squared error of the sample-averaged mean, averaged over entries.
double mean_squared_error(const PredictiveSamples& s, const Matrix& truth);

struct ParameterPosterior {
    std::vector<std::string> names;
    Eigen::VectorXd mean;  // Monte-Carlo mean of clipped draws
    Eigen::VectorXd q025;
    Eigen::VectorXd q500;
    Eigen::VectorXd q975;
    Matrix samples;        // clipped draws, one column per sample
    ad::DiagonalGaussian log_space;
};

// PISANODEP only: q(u | context) as a clipped log-normal.
ParameterPosterior estimate_parameters(const ModelParameters& p, const std::vector<ObservedTrajectory>& context,
                                       int n_samples, Rng& rng);

// ---------------------------------------------------------------- ELBO

// Episodes of one system arranged for a single batched graph.
struct EpisodeBatch {
    int n_episodes = 0;
    double t0 = 0.0;
    Matrix features;
    std::vector<std::vector<int>> prior_groups;      // context sets
    std::vector<std::vector<int>> posterior_groups;  // context plus new-trajectory targets
    Matrix initial;                                  // [t0; x0] per episode
    Matrix x0;                                       // state_dim x E
    std::vector<double> target_times;                // sorted union
    std::vector<Matrix> target_values;               // per time: state_dim x E
    std::vector<Matrix> target_weights;              // per time: 1 x E, 1 if a target
    Matrix true_params;                              // PISANODEP: param_dim x E
    std::vector<int> target_counts;                  // per episode
};

EpisodeBatch make_episode_batch(const ModelParameters& p, const zoo::TrajectorySet& set,
                                const std::vector<zoo::Episode>& episodes);

struct EpisodeNoise {
    Matrix u;   // u_dim x E
    Matrix l0;  // latent_state_dim x E (unused for NP and PISANODEP)
};

EpisodeNoise draw_episode_noise(const ModelParameters& p, int n_episodes, Rng& rng);

// Per-episode loss terms (1 x E). total = -reconstruction + kl_u + kl_l0 + param_nll.
struct LossTerms {
    Var reconstruction;
    Var kl_u;
    Var kl_l0;
    Var param_nll;
    Var total;
};

LossTerms episode_loss(const BoundModel& m, const EpisodeBatch& batch, const EpisodeNoise& noise);

struct LossBreakdown {
    double reconstruction = 0.0;
    double kl_u = 0.0;
    double kl_l0 = 0.0;
    double param_nll = 0.0;
    double total = 0.0;
};

// Scalar ELBO loss of one episode with a fresh reparameterised draw.
LossBreakdown elbo_loss(const ModelParameters& p, const zoo::Episode& episode, const zoo::TrajectorySet& set,
                        Rng& rng);

}  // namespace sanodep::models
