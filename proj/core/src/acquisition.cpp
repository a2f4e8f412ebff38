#include "sanodep/acquisition.hpp"

#include <array>

#include "sanodep/errors.hpp"

namespace sanodep::bo {

Objective state_component(int index) {
    if (index < 0) throw PreconditionError("state_component: negative index");
    Objective o;
    o.name = "x" + std::to_string(index + 1);
    o.value = [index](const VectorXd& x) { return x(index); };
    o.gradient = [index](const VectorXd& x) {
        VectorXd g = VectorXd::Zero(x.size());
        g(index) = 1.0;
        return g;
    };
    return o;
}

Objective susceptible_fraction(double penalty) {
    Objective o;
    o.name = "susceptible_fraction";
    o.value = [penalty](const VectorXd& x) {
        const double n = x.head(3).sum();
        return x(0) / n - penalty * n;
    };
    o.gradient = [penalty](const VectorXd& x) {
        const double n = x.head(3).sum();
        VectorXd g = VectorXd::Zero(x.size());
        for (int i = 0; i < 3; ++i) g(i) = -x(0) / (n * n) - penalty;
        g(0) += 1.0 / n;
        return g;
    };
    return o;
}

namespace {

std::vector<ObjectivePoint> batch_points(const std::vector<Matrix>& means, const Objective& g,
                                         const std::vector<double>& times, Eigen::Index s) {
    std::vector<ObjectivePoint> b(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) b[k] = {g.value(means[k].col(s)), -times[k]};
    return b;
}

// The state at t0 is the chosen x0 itself, so those times bypass the surrogate.
bool pinned(const PathSampler& sampler, double t) { return t == sampler.t0(); }

std::vector<double> free_times(const PathSampler& sampler, const std::vector<double>& times) {
    std::vector<double> out;
    for (double t : times)
        if (!pinned(sampler, t)) out.push_back(t);
    return out;
}

// Full per-time means from the surrogate means at the free times.
std::vector<Matrix> merge_means(const PathSampler& sampler, const VectorXd& x0, const std::vector<double>& times,
                                const std::vector<Matrix>& free_means) {
    const Eigen::Index S = sampler.n_samples();
    std::vector<Matrix> out(times.size());
    std::size_t j = 0;
    for (std::size_t k = 0; k < times.size(); ++k)
        out[k] = pinned(sampler, times[k]) ? Matrix(x0.replicate(1, S)) : free_means.at(j++);
    return out;
}

}  // namespace

double qehvi_from_means(const std::vector<Matrix>& means, const Objective& g, const std::vector<double>& times,
                        const std::vector<ObjectivePoint>& front, const ObjectivePoint& ref) {
    if (means.size() != times.size()) throw DimensionError("qehvi: means and times differ in length");
    if (times.empty()) return 0.0;
    const Eigen::Index S = means.front().cols();
    double acc = 0.0;
    for (Eigen::Index s = 0; s < S; ++s) acc += hvi(batch_points(means, g, times, s), front, ref);
    return acc / static_cast<double>(S);
}

double qehvi(PathSampler& sampler, const Objective& g, const VectorXd& x0, const std::vector<double>& times,
             const std::vector<ObjectivePoint>& front, const ObjectivePoint& ref) {
    if (times.empty()) return 0.0;
    const std::vector<double> ft = free_times(sampler, times);
    const std::vector<Matrix> fm = ft.empty() ? std::vector<Matrix>{} : sampler.query(x0, ft).means;
    return qehvi_from_means(merge_means(sampler, x0, times, fm), g, times, front, ref);
}

AcquisitionValue qehvi_with_grad(PathSampler& sampler, const Objective& g, const VectorXd& x0,
                                 const std::vector<double>& times, const std::vector<ObjectivePoint>& front,
                                 const ObjectivePoint& ref, bool want_x0_grad) {
    AcquisitionValue out;
    out.grad_times.assign(times.size(), 0.0);
    out.grad_x0 = VectorXd::Zero(x0.size());
    if (times.empty()) return out;
    std::vector<double> direct(times.size(), 0.0);
    double value = 0.0;
    VectorXd pinned_x0_grad = VectorXd::Zero(x0.size());
    AdjointFn adjoint = [&](const std::vector<Matrix>& free_means) {
        const std::vector<Matrix> means = merge_means(sampler, x0, times, free_means);
        const Eigen::Index S = means.front().cols();
        const double w = 1.0 / static_cast<double>(S);
        std::vector<Matrix> adj(means.size());
        for (auto& a : adj) a = Matrix::Zero(means.front().rows(), S);
        std::vector<std::array<double, 2>> grad;
        for (Eigen::Index s = 0; s < S; ++s) {
            value += w * hvi_with_grad(batch_points(means, g, times, s), front, ref, grad);
            for (std::size_t k = 0; k < times.size(); ++k) {
                if (grad[k][0] != 0.0) adj[k].col(s) = w * grad[k][0] * g.gradient(means[k].col(s));
                direct[k] -= w * grad[k][1];  // d(-t)/dt
            }
        }
        std::vector<Matrix> free_adj;
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (pinned(sampler, times[k]))
                pinned_x0_grad += adj[k].rowwise().sum();
            else
                free_adj.push_back(std::move(adj[k]));
        }
        return free_adj;
    };
    const std::vector<double> ft = free_times(sampler, times);
    PathQuery q;
    if (ft.empty()) {
        adjoint({});
    } else {
        q = sampler.query(x0, ft, &adjoint, want_x0_grad);
    }
    out.value = value;
    std::size_t j = 0;
    for (std::size_t k = 0; k < times.size(); ++k)
        out.grad_times[k] = direct[k] + (pinned(sampler, times[k]) ? 0.0 : q.grad_times.at(j++));
    if (want_x0_grad) out.grad_x0 = pinned_x0_grad + (ft.empty() ? VectorXd::Zero(x0.size()) : q.grad_x0);
    return out;
}

}  // namespace sanodep::bo
