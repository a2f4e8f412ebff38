#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sanodep/acquisition.hpp"
#include "sanodep/episode.hpp"
#include "sanodep/pareto.hpp"
#include "sanodep/schedule.hpp"
#include "sanodep/system_zoo.hpp"

namespace sanodep::bo {

// One optimisation problem: a fixed true system, an objective g, a design box
// mapped linearly to the initial state, the time range and the delay dt.
struct ProblemSpec {
    std::string name;
    zoo::Family family = zoo::Family::LV2;
    VectorXd true_params;
    Objective objective;
    zoo::Box design_box;
    Matrix design_map;  // x0 = design_map * design
    double t0 = 0.0;
    double t_max = 0.0;
    double dt = 0.0;
    ObjectivePoint reference;  // maximisation form (g, -t)
    int budget = 10;           // queried trajectories after the seed trajectory

    VectorXd initial_state(const VectorXd& design) const { return design_map * design; }
    int n_max() const { return max_batch_size(t0, t_max, dt); }
};

std::vector<std::string> problem_names();
// Registered problems are named after their family (LV2, Brusselator, Selkov,
// SIR, LV3, SIRD).
ProblemSpec make_problem(const std::string& name);

// Measures the hidden system: state at time t from x0.
using Observer = std::function<VectorXd(const VectorXd& x0, double t)>;
Observer true_system_observer(const ProblemSpec& problem);

using SamplerFactory =
    std::function<std::unique_ptr<PathSampler>(const std::vector<zoo::ObservedTrajectory>& context, Rng& rng)>;

struct BOOptions {
    int n_mc = 32;
    InitialConditionOptions initial;
    ScheduleOptions schedule;
};

struct BORecord {
    int trajectory_id = 0;  // 0 is the seed trajectory
    int query_index = 0;    // 0 is the observation at t0
    double t = 0.0;
    VectorXd state;
    double g_value = 0.0;
    double neg_time = 0.0;
    double running_hypervolume = 0.0;
    double acq_value = 0.0;
    double scaled_time = 0.0;
    double wall_ms = 0.0;
};

struct BOHistory {
    std::string method;
    std::vector<BORecord> records;
    std::vector<std::vector<double>> schedules;  // every schedule produced, with its lower bound first
    std::vector<double> schedule_lower_bounds;
    std::vector<ObjectivePoint> front;
    double final_hypervolume = 0.0;
    int aborted_trajectories = 0;
};

// Every produced schedule respects dt and lies inside [lower bound, t_max].
bool schedules_feasible(const BOHistory& h, const ProblemSpec& problem);
// Running hypervolume never decreases.
bool hypervolume_monotone(const BOHistory& h);

// Seed trajectory: random design, observations every dt from t0.
zoo::ObservedTrajectory seed_trajectory(const ProblemSpec& problem, const Observer& observer, Rng& rng);

// Model-guided initial-condition choice, then receding-horizon
// scheduling of one observation at a time.
BOHistory run_bo(const ProblemSpec& problem, const SamplerFactory& factory, const Observer& observer,
                 const BOOptions& options, Rng& rng);

// Baseline: uniform random designs and uniformly drawn successive times.
BOHistory run_random(const ProblemSpec& problem, const Observer& observer, Rng& rng);

}  // namespace sanodep::bo
