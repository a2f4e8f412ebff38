#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sanodep/rng.hpp"
#include "sanodep/system_zoo.hpp"

namespace sanodep::bo {

// Acquisition over observation times; fills grad (same length) when non-null.
using TimeAcquisition = std::function<double(const std::vector<double>& times, std::vector<double>* grad)>;
// Acquisition over a design point and times.
using JointAcquisition = std::function<double(const Eigen::VectorXd& design, const std::vector<double>& times,
                                              Eigen::VectorXd* grad_design, std::vector<double>* grad_times)>;

struct ScheduleOptions {
    int restarts_per_n = 3;  // the first start spreads times evenly
    int iterations = 100;
    double step = 0.05;      // fraction of the free time budget
    double min_step = 1e-4;
};

struct Schedule {
    std::vector<double> times;
    double value = 0.0;

    int size() const { return static_cast<int>(times.size()); }
    bool empty() const { return times.empty(); }
};

// floor((t_max - t_lb) / dt), or 0 when t_lb > t_max.
int max_batch_size(double t_lb, double t_max, double dt);
// Earliest time after t that keeps a gap of at least dt in floating point.
double earliest_after(double t, double dt);
// Batch sizes worth searching: [ceil(n_max/2), n_max]. Smaller batches
// cannot beat a larger one under a set-monotone acquisition.
std::pair<int, int> reduced_range(int n_max);

bool is_feasible(const std::vector<double>& times, double t_lb, double t_max, double dt);

// Euclidean projection onto {d >= 0, sum(d) <= budget}.
void project_increments(Eigen::VectorXd& delta, double budget);

// t_i = t_lb + (i-1) dt + sum_{j<=i} delta_j, nudged by ulps so every gap is
// at least dt. Returns nullopt when rounding leaves no feasible placement.
std::optional<std::vector<double>> times_from_increments(double t_lb, double t_max, double dt,
                                                         const Eigen::VectorXd& delta);

// Best schedule of exactly n times in [t_lb, t_max]; with fix_first, the
// first time is fixed there and n - 1 times follow from fix_first + dt. A
// warm start of size n replaces the default starts.
Schedule optimize_schedule_n(const TimeAcquisition& acq, double t_lb, double t_max, double dt, int n,
                             const ScheduleOptions& options, Rng& rng, std::optional<double> fix_first = std::nullopt,
                             const std::vector<double>* warm_start = nullptr);

// Searches batch sizes in reduced_range(n_max) with n_max from
// max_batch_size(t_lb, t_max, dt). Empty schedule when n_max < 1.
Schedule optimize_schedule(const TimeAcquisition& acq, double t_lb, double t_max, double dt,
                           const ScheduleOptions& options, Rng& rng, std::optional<double> fix_first = std::nullopt);

struct InitialConditionOptions {
    int restarts = 10;
    int outer_iterations = 3;  // alternations between schedule and design updates
    int design_steps = 3;      // gradient steps on the design per alternation
    double design_step = 0.05; // fraction of the box width
    ScheduleOptions schedule;
};

struct InitialConditionResult {
    Eigen::VectorXd design;
    Schedule schedule;  // first time is t0
};

// Joint search over the design box and schedules whose first time is t0.
InitialConditionResult optimize_initial_condition(const JointAcquisition& acq, const zoo::Box& box, double t0,
                                                  double t_max, double dt, const InitialConditionOptions& options,
                                                  Rng& rng);

}  // namespace sanodep::bo
