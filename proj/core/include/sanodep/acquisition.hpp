#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sanodep/pareto.hpp"

namespace sanodep::bo {

using Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Per-time dL/d(means), same layout as the means (state_dim x n_samples).
using AdjointFn = std::function<std::vector<Matrix>(const std::vector<Matrix>& means)>;

struct PathQuery {
    std::vector<Matrix> means;  // per time: state_dim x n_samples
    VectorXd grad_x0;           // filled when an x0 gradient was requested
    std::vector<double> grad_times;
};

// Sampled mean predictions of a surrogate under fixed Monte-Carlo draws, for
// the trajectory currently being planned. Implementations must give the same
// value at a time regardless of which other times are queried.
class PathSampler {
public:
    virtual ~PathSampler() = default;
    virtual int state_dim() const = 0;
    virtual int n_samples() const = 0;
    virtual double t0() const = 0;

    // Observations made so far on the planned trajectory started at x0,
    // besides (t0, x0) itself. Empty while x0 is still being chosen.
    virtual void set_observations(const VectorXd& x0, const std::vector<double>& times,
                                  const std::vector<VectorXd>& states) = 0;

    // Means at `times` for initial state x0. With an adjoint, also returns
    // dL/dtimes and, when want_x0_grad is set, dL/dx0.
    virtual PathQuery query(const VectorXd& x0, const std::vector<double>& times, const AdjointFn* adjoint = nullptr,
                            bool want_x0_grad = false) = 0;
};

// Scalar objective g of a state with its gradient.
struct Objective {
    std::string name;
    std::function<double(const VectorXd&)> value;
    std::function<VectorXd(const VectorXd&)> gradient;
};

Objective state_component(int index);                 // g = x_index
Objective susceptible_fraction(double penalty = 0.05);  // x1 / (x1+x2+x3) - penalty (x1+x2+x3)

struct AcquisitionValue {
    double value = 0.0;
    VectorXd grad_x0;
    std::vector<double> grad_times;
};

// Monte-Carlo qEHVI of the batch {(g(x(t_k)), -t_k)}: the mean over samples
// of the batch HVI against `front`. At t_k == sampler.t0() the state is x0
// in every sample; the surrogate is not queried there.
double qehvi(PathSampler& sampler, const Objective& g, const VectorXd& x0, const std::vector<double>& times,
             const std::vector<ObjectivePoint>& front, const ObjectivePoint& ref);

// qEHVI and its gradient w.r.t. times (and x0 when want_x0_grad).
AcquisitionValue qehvi_with_grad(PathSampler& sampler, const Objective& g, const VectorXd& x0,
                                 const std::vector<double>& times, const std::vector<ObjectivePoint>& front,
                                 const ObjectivePoint& ref, bool want_x0_grad);

// qEHVI from per-time means already evaluated (used by enumeration tests).
double qehvi_from_means(const std::vector<Matrix>& means, const Objective& g, const std::vector<double>& times,
                        const std::vector<ObjectivePoint>& front, const ObjectivePoint& ref);

}  // namespace sanodep::bo
