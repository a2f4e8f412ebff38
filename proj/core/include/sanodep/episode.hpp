#pragma once

#include <vector>

#include <Eigen/Core>

#include "sanodep/rng.hpp"
#include "sanodep/system_zoo.hpp"

namespace sanodep::zoo {

// Subset of a trajectory's observations. x0 and t0 are always known.
struct ObservedTrajectory {
    Eigen::VectorXd x0;
    double t0 = 0.0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;

    std::size_t size() const { return times.size(); }
};

struct EpisodeConfig {
    int M_min = 0;
    int M_max = 10;
    int m_min = 1;
    int m_max = 10;
    int n_min = 0;
    int n_max = 45;
    double forecast_prob = 0.0;  // lambda
};

// Grid indices (sorted, unique) observed as context / used as targets.
struct TrajectoryMask {
    int trajectory = -1;
    std::vector<int> context;
    std::vector<int> target;
};

struct Episode {
    std::vector<TrajectoryMask> context_trajectories;
    TrajectoryMask new_trajectory;
    bool forecast = false;
};

// One episode: M context trajectories plus a distinct new trajectory.
Episode sample_episode(const TrajectorySet& set, const EpisodeConfig& config, Rng& rng);

// Episodes for every trajectory of one system sharing one context draw; a
// trajectory that is itself a context trajectory is removed from its own
// episode's context set.
std::vector<Episode> sample_episode_batch(const TrajectorySet& set, const EpisodeConfig& config, Rng& rng);

ObservedTrajectory observe(const Trajectory& tr, const std::vector<int>& indices);

void validate_episode(const Episode& ep, const TrajectorySet& set);

}  // namespace sanodep::zoo
