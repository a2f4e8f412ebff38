#pragma once

#include <memory>
#include <vector>

#include "sanodep/acquisition.hpp"
#include "sanodep/episode.hpp"
#include "sanodep/gp.hpp"
#include "sanodep/model_parameters.hpp"
#include "sanodep/rng.hpp"

namespace sanodep::bo {

// Decoded-mean samples of a neural process model. One (l0, u) draw per
// Monte-Carlo replicate is fixed at construction and shared by all queries.
// When x0 is unchanged between queries the latent path is cached up to t_max
// and only the final partial step to each query time is recomputed.
class NeuralSampler final : public PathSampler {
public:
    NeuralSampler(models::ModelParameters params, const std::vector<zoo::ObservedTrajectory>& context, int n_mc,
                  double t_max, Rng& rng);

    int state_dim() const override { return params_.hp.state_dim; }
    int n_samples() const override { return n_mc_; }
    double t0() const override { return params_.hp.t0; }

    void set_observations(const VectorXd& x0, const std::vector<double>& times,
                          const std::vector<VectorXd>& states) override;
    PathQuery query(const VectorXd& x0, const std::vector<double>& times, const AdjointFn* adjoint = nullptr,
                    bool want_x0_grad = false) override;

private:
    struct Cache;

    models::ModelParameters params_;
    int n_mc_;
    double t_max_;
    Matrix context_features_;
    std::vector<double> obs_times_;
    std::vector<VectorXd> obs_states_;
    Matrix eps_u_;
    Matrix eps_l_;
    std::shared_ptr<Cache> cache_;
};

// Posterior mean plus scaled fixed noise of independent GPs on [x0, t]; the
// noise of a replicate is shared across times. Time and x0 gradients are
// central differences.
class GPSampler final : public PathSampler {
public:
    GPSampler(std::vector<zoo::ObservedTrajectory> context, int state_dim, double t0, int n_mc, Rng& rng,
              gp::FitOptions options = {});

    int state_dim() const override { return state_dim_; }
    int n_samples() const override { return n_mc_; }
    double t0() const override { return t0_; }

    void set_observations(const VectorXd& x0, const std::vector<double>& times,
                          const std::vector<VectorXd>& states) override;
    PathQuery query(const VectorXd& x0, const std::vector<double>& times, const AdjointFn* adjoint = nullptr,
                    bool want_x0_grad = false) override;

private:
    void refit();
    std::vector<Matrix> means_at(const VectorXd& x0, const std::vector<double>& times) const;

    std::vector<zoo::ObservedTrajectory> context_;
    zoo::ObservedTrajectory current_;
    int state_dim_;
    double t0_;
    int n_mc_;
    Rng rng_;
    gp::FitOptions options_;
    Matrix eps_;  // state_dim x n_mc
    std::unique_ptr<gp::IndependentGP> gp_;
};

}  // namespace sanodep::bo
