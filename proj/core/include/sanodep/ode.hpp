#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sanodep/autodiff.hpp"

namespace sanodep::ode {

using State = Eigen::VectorXd;
using VectorField = std::function<State(const State& x, double t)>;

enum class SolveStatus { Ok, StepLimit, NonFinite };

const char* to_string(SolveStatus s);

struct SolveResult {
    std::vector<double> times;
    std::vector<State> states;  // states[i] at times[i]
    std::size_t steps_taken = 0;
    SolveStatus status = SolveStatus::Ok;

    bool ok() const { return status == SolveStatus::Ok; }
};

// Classical fourth-order Runge-Kutta step. h must be positive.
State rk4_step(const VectorField& f, const State& x, double t, double h);

// Fixed-step RK4 through a strictly increasing grid, `substeps` equal steps
// per interval. x0 is the state at t_grid[0].
SolveResult solve_fixed(const VectorField& f, const State& x0, std::span<const double> t_grid, int substeps = 4);

struct AdaptiveOptions {
    double rtol = 1e-5;
    double atol = 1e-5;
    std::size_t max_steps = 100000;
    double first_step = 0.0;  // 0 picks one automatically
};

// Dormand-Prince 5(4) with PI step control and dense output at t_eval.
// x0 is the state at t_eval[0]; t_eval must be non-decreasing.
SolveResult solve_adaptive(const VectorField& f, const State& x0, std::span<const double> t_eval,
                           const AdaptiveOptions& options = {});

// ------------------------------------------------------------ taped solvers

// Field on the tape: state is n x B (one trajectory per column), t is 1 x 1.
using VarField = std::function<ad::Var(ad::Tape&, const ad::Var& state, const ad::Var& t)>;

// RK4 step on the tape; h is a 1 x 1 node and may be zero.
ad::Var rk4_step(ad::Tape& tape, const VarField& f, const ad::Var& x, const ad::Var& t, const ad::Var& h);

// Fixed-step RK4 on the uniform base grid t0 + k*h. The state at an arbitrary
// time is one partial step from the last base node at or before it, so the
// value at a given time never depends on which other times are requested.
class BaseGridPath {
public:
    BaseGridPath(ad::Tape& tape, VarField field, ad::Var x0, double t0, double h);
    // Seeds the path with precomputed node states (constants on `tape`).
    BaseGridPath(ad::Tape& tape, VarField field, const std::vector<Eigen::MatrixXd>& nodes, double t0, double h);

    // State at time t (1 x 1 node, t >= t0 - tolerance).
    ad::Var at(const ad::Var& t);
    ad::Var at(double t);

    // Node state k, extending the path as needed.
    ad::Var node(std::size_t k);
    std::size_t node_count() const { return nodes_.size(); }
    double node_time(std::size_t k) const { return t0_ + static_cast<double>(k) * h_; }
    double step() const { return h_; }

private:
    std::size_t node_index(double t) const;

    ad::Tape* tape_;
    VarField field_;
    double t0_;
    double h_;
    std::vector<ad::Var> nodes_;
};

}  // namespace sanodep::ode
