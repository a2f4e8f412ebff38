#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sanodep/autodiff.hpp"
#include "sanodep/ode.hpp"
#include "sanodep/rng.hpp"

namespace sanodep::zoo {

using Eigen::VectorXd;

enum class Family { LV2, LV3, Brusselator, Selkov, SIR, SIRD, GPField };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

struct Box {
    VectorXd lo;
    VectorXd hi;

    Eigen::Index dim() const { return lo.size(); }
    bool contains(const VectorXd& x, double tol = 0.0) const;
    VectorXd sample(Rng& rng) const;
    VectorXd center() const { return 0.5 * (lo + hi); }
};

struct FamilySpec {
    Family family;
    int state_dim;
    std::vector<std::string> param_names;
    Box param_support;  // uniform prior
    Box x0_support;     // prior over the sampled initial-state components
    double t0 = 0.0;
    double t_max = 0.0;
};

const FamilySpec& family_spec(Family f);
int state_dim(Family f);
int param_dim(Family f);

// Random-Fourier-feature draw of a vector field f: R^d -> R^d; each output
// dimension has its own independent feature set.
struct RffField {
    int dim = 2;
    int n_features = 256;
    double lengthscale = 0.8;
    double variance = 1.0;
    std::vector<Eigen::MatrixXd> omega;  // per output: n_features x dim
    std::vector<VectorXd> phase;         // per output: n_features
    std::vector<VectorXd> weight;        // per output: n_features

    VectorXd operator()(const VectorXd& x) const;
};

RffField sample_rff_field(int dim, int n_features, double lengthscale, double variance, Rng& rng);

struct SystemInstance {
    Family family = Family::LV2;
    VectorXd params;
    std::shared_ptr<const RffField> rff;  // GPField only
};

// Draws the system parameters (or RFF field) from the family prior.
SystemInstance sample_system(Family f, Rng& rng);
SystemInstance make_system(Family f, const VectorXd& params);

VectorXd vector_field(const SystemInstance& sys, const VectorXd& x, double t);
ode::VectorField field_of(const SystemInstance& sys);

// Full initial state drawn from the family prior (fixed components set).
VectorXd sample_initial_state(Family f, Rng& rng);

// Kinetic field on the tape: x is d x B, u is p x B (one parameter vector per
// column). Not defined for GPField.
ad::Var kinetic_field(Family f, const ad::Var& x, const ad::Var& u);

struct Trajectory {
    VectorXd x0;
    std::vector<double> times;
    std::vector<VectorXd> states;  // states[0] == x0
};

struct TrajectorySet {
    Family family = Family::LV2;
    SystemInstance system;
    std::vector<double> t_grid;
    std::vector<Trajectory> trajectories;
    std::size_t resampled = 0;  // initial states redrawn after a failed solve
};

std::vector<double> uniform_grid(double t0, double t_max, int n);
std::vector<double> family_grid(Family f, int n_grid = 100);

// Simulates n_x0 trajectories of one sampled system on t_grid with the
// adaptive solver. Initial states whose solve fails are redrawn.
TrajectorySet simulate_system_trajectories(Family f, int n_x0, const std::vector<double>& t_grid, Rng& rng);
TrajectorySet simulate_trajectories(const SystemInstance& sys, int n_x0, const std::vector<double>& t_grid,
                                    Rng& rng);

// Exact solve of one trajectory for an arbitrary x0.
Trajectory simulate(const SystemInstance& sys, const VectorXd& x0, const std::vector<double>& times,
                    double rtol = 1e-5, double atol = 1e-5);

}  // namespace sanodep::zoo
