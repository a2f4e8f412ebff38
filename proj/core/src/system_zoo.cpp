#include "sanodep/system_zoo.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "sanodep/errors.hpp"

namespace sanodep::zoo {

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

FamilySpec make_spec(Family f) {
    constexpr double third = 1.0 / 3.0;
    switch (f) {
        case Family::LV2:
            return {f, 2, {"alpha", "beta", "delta", "gamma"},
                    {vec({third, 1.0, 0.5, 0.5}), vec({1.0, 2.0, 1.5, 1.5})},
                    {vec({0.1, 0.1}), vec({3.0, 3.0})}, 0.0, 15.0};
        case Family::LV3:
            return {f, 3, {"alpha", "beta", "delta", "gamma", "epsilon", "zeta", "eta", "theta"},
                    {vec({third, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}), vec({1.0, 2.0, 1.5, 1.5, 1.5, 1.5, 1.5, 1.5})},
                    {vec({0.1, 0.1, 0.1}), vec({3.0, 3.0, 3.0})}, 0.0, 15.0};
        case Family::Brusselator:
            return {f, 2, {"A", "B"}, {vec({0.0, 0.1}), vec({1.0, 3.0})},
                    {vec({0.1, 0.1}), vec({2.0, 2.0})}, 0.0, 15.0};
        case Family::Selkov:
            return {f, 2, {"a", "b"}, {vec({0.05, 0.3}), vec({0.3, 0.7})},
                    {vec({0.1, 0.1}), vec({0.5, 0.5})}, 0.0, 10.0};
        case Family::SIR:
            return {f, 3, {"beta", "gamma"}, {vec({0.1, 0.1}), vec({2.0, 10.0})},
                    {vec({1.0}), vec({3.0})}, 0.0, 1.0};
        case Family::SIRD:
            return {f, 4, {"beta", "gamma", "mu"}, {vec({0.5, 0.1, 0.1}), vec({2.0, 10.0, 5.0})},
                    {vec({10.0}), vec({30.0})}, 0.0, 1.0};
        case Family::GPField:
            return {f, 2, {}, {VectorXd(0), VectorXd(0)}, {vec({-2.0, -2.0}), vec({2.0, 2.0})}, 0.0, 10.0};
    }
    throw PreconditionError("unknown family");
}

const std::array<FamilySpec, 7>& specs() {
    static const std::array<FamilySpec, 7> s = {make_spec(Family::LV2),     make_spec(Family::LV3),
                                                make_spec(Family::Brusselator), make_spec(Family::Selkov),
                                                make_spec(Family::SIR),     make_spec(Family::SIRD),
                                                make_spec(Family::GPField)};
    return s;
}

constexpr double kInitialInfected = 0.01;
constexpr int kRffFeatures = 256;
constexpr double kRffLengthscale = 0.8;
constexpr double kRffVariance = 1.0;

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::LV2:
            return "LV2";
        case Family::LV3:
            return "LV3";
        case Family::Brusselator:
            return "Brusselator";
        case Family::Selkov:
            return "Selkov";
        case Family::SIR:
            return "SIR";
        case Family::SIRD:
            return "SIRD";
        case Family::GPField:
            return "GPField";
    }
    return "unknown";
}

Family family_from_string(const std::string& name) {
    for (const auto& s : specs())
        if (to_string(s.family) == name) return s.family;
    throw PreconditionError("unknown system family: " + name);
}

bool Box::contains(const VectorXd& x, double tol) const {
    if (x.size() != lo.size()) return false;
    return ((x.array() >= lo.array() - tol) && (x.array() <= hi.array() + tol)).all();
}

VectorXd Box::sample(Rng& rng) const {
    VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = rng.uniform(lo(i), hi(i));
    return x;
}

const FamilySpec& family_spec(Family f) { return specs()[static_cast<std::size_t>(f)]; }
int state_dim(Family f) { return family_spec(f).state_dim; }
int param_dim(Family f) { return static_cast<int>(family_spec(f).param_names.size()); }

VectorXd RffField::operator()(const VectorXd& x) const {
    if (x.size() != dim) throw DimensionError("RffField: state dimension mismatch");
    VectorXd out(dim);
    const double amp = std::sqrt(2.0 * variance / n_features);
    for (int d = 0; d < dim; ++d) {
        const VectorXd arg = omega[static_cast<std::size_t>(d)] * x + phase[static_cast<std::size_t>(d)];
        out(d) = amp * weight[static_cast<std::size_t>(d)].dot(arg.array().cos().matrix());
    }
    return out;
}

RffField sample_rff_field(int dim, int n_features, double lengthscale, double variance, Rng& rng) {
    if (dim < 1 || n_features < 1 || !(lengthscale > 0) || !(variance > 0))
        throw PreconditionError("sample_rff_field: invalid settings");
    RffField f;
    f.dim = dim;
    f.n_features = n_features;
    f.lengthscale = lengthscale;
    f.variance = variance;
    for (int d = 0; d < dim; ++d) {
        f.omega.push_back(rng.normal_matrix(n_features, dim) / lengthscale);
        VectorXd b(n_features);
        for (int j = 0; j < n_features; ++j) b(j) = rng.uniform(0.0, 2.0 * std::numbers::pi);
        f.phase.push_back(b);
        f.weight.push_back(rng.normal_matrix(n_features, 1).col(0));
    }
    return f;
}

SystemInstance make_system(Family f, const VectorXd& params) {
    if (f == Family::GPField) throw PreconditionError("make_system: GPField systems are sampled, not parameterised");
    if (params.size() != param_dim(f)) throw DimensionError("make_system: wrong parameter count");
    return SystemInstance{f, params, nullptr};
}

SystemInstance sample_system(Family f, Rng& rng) {
    if (f == Family::GPField) {
        auto field = std::make_shared<RffField>(
            sample_rff_field(family_spec(f).state_dim, kRffFeatures, kRffLengthscale, kRffVariance, rng));
        return SystemInstance{f, VectorXd(0), std::move(field)};
    }
    return SystemInstance{f, family_spec(f).param_support.sample(rng), nullptr};
}

VectorXd vector_field(const SystemInstance& sys, const VectorXd& x, double /*t*/) {
    const int d = state_dim(sys.family);
    if (x.size() != d) throw DimensionError("vector_field: state dimension mismatch");
    const VectorXd& u = sys.params;
    VectorXd dx(d);
    switch (sys.family) {
        case Family::LV2:
            dx(0) = u(0) * x(0) - u(1) * x(0) * x(1);
            dx(1) = u(2) * x(0) * x(1) - u(3) * x(1);
            break;
        case Family::LV3:
            // alpha, beta, delta, gamma, epsilon, zeta, eta, theta
            dx(0) = u(0) * x(0) - u(1) * x(0) * x(1) - u(4) * x(0) * x(2);
            dx(1) = u(2) * x(1) * x(0) - u(3) * x(1) - u(5) * x(1) * x(2);
            dx(2) = u(6) * x(2) * x(1) - u(7) * x(2);
            break;
        case Family::Brusselator: {
            const double x1sq_x2 = x(0) * x(0) * x(1);
            dx(0) = u(0) + x1sq_x2 - (u(1) + 1.0) * x(0);
            dx(1) = u(1) * x(0) - x1sq_x2;
            break;
        }
        case Family::Selkov: {
            const double x1sq_x2 = x(0) * x(0) * x(1);
            dx(0) = -x(0) + u(0) * x(1) + x1sq_x2;
            dx(1) = u(1) - u(0) * x(1) - x1sq_x2;
            break;
        }
        case Family::SIR: {
            const double inf = u(0) * x(0) * x(1);
            dx(0) = -inf;
            dx(1) = inf - u(1) * x(1);
            dx(2) = u(1) * x(1);
            break;
        }
        case Family::SIRD: {
            const double inf = u(0) * x(0) * x(1);
            dx(0) = -inf;
            dx(1) = inf - u(1) * x(1) - u(2) * x(1);
            dx(2) = u(1) * x(1);
            dx(3) = u(2) * x(1);
            break;
        }
        case Family::GPField:
            if (!sys.rff) throw StateError("vector_field: GPField system without a field draw");
            return (*sys.rff)(x);
    }
    return dx;
}

ode::VectorField field_of(const SystemInstance& sys) {
    return [sys](const VectorXd& x, double t) { return vector_field(sys, x, t); };
}

VectorXd sample_initial_state(Family f, Rng& rng) {
    const FamilySpec& s = family_spec(f);
    const VectorXd drawn = s.x0_support.sample(rng);
    VectorXd x0 = VectorXd::Zero(s.state_dim);
    if (f == Family::SIR || f == Family::SIRD) {
        x0(0) = drawn(0);
        x0(1) = kInitialInfected;
    } else {
        x0 = drawn;
    }
    return x0;
}

ad::Var kinetic_field(Family f, const ad::Var& x, const ad::Var& u) {
    using namespace ad;
    if (f == Family::GPField) throw PreconditionError("kinetic_field: GPField has no kinetic form");
    const int d = state_dim(f);
    if (x.rows() != d || u.rows() != param_dim(f) || x.cols() != u.cols())
        throw DimensionError("kinetic_field: shape mismatch");
    auto X = [&](int i) { return rows(x, i, 1); };
    auto U = [&](int i) { return rows(u, i, 1); };
    switch (f) {
        case Family::LV2: {
            Var x1x2 = mul(X(0), X(1));
            return vcat({sub(mul(U(0), X(0)), mul(U(1), x1x2)), sub(mul(U(2), x1x2), mul(U(3), X(1)))});
        }
        case Family::LV3: {
            Var x1x2 = mul(X(0), X(1));
            Var x1x3 = mul(X(0), X(2));
            Var x2x3 = mul(X(1), X(2));
            return vcat({sub(sub(mul(U(0), X(0)), mul(U(1), x1x2)), mul(U(4), x1x3)),
                         sub(sub(mul(U(2), x1x2), mul(U(3), X(1))), mul(U(5), x2x3)),
                         sub(mul(U(6), x2x3), mul(U(7), X(2)))});
        }
        case Family::Brusselator: {
            Var q = mul(square(X(0)), X(1));
            return vcat({sub(add(U(0), q), mul(add_scalar(U(1), 1.0), X(0))), sub(mul(U(1), X(0)), q)});
        }
        case Family::Selkov: {
            Var q = mul(square(X(0)), X(1));
            return vcat({add(sub(mul(U(0), X(1)), X(0)), q), sub(sub(U(1), mul(U(0), X(1))), q)});
        }
        case Family::SIR: {
            Var inf = mul(U(0), mul(X(0), X(1)));
            Var rec = mul(U(1), X(1));
            return vcat({neg(inf), sub(inf, rec), rec});
        }
        case Family::SIRD: {
            Var inf = mul(U(0), mul(X(0), X(1)));
            Var rec = mul(U(1), X(1));
            Var die = mul(U(2), X(1));
            return vcat({neg(inf), sub(sub(inf, rec), die), rec, die});
        }
        case Family::GPField:
            break;
    }
    throw PreconditionError("kinetic_field: unsupported family");
}

std::vector<double> uniform_grid(double t0, double t_max, int n) {
    if (n < 2 || !(t_max > t0)) throw PreconditionError("uniform_grid: need n >= 2 and t_max > t0");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = t0 + (t_max - t0) * i / (n - 1);
    return g;
}

std::vector<double> family_grid(Family f, int n_grid) {
    return uniform_grid(family_spec(f).t0, family_spec(f).t_max, n_grid);
}

Trajectory simulate(const SystemInstance& sys, const VectorXd& x0, const std::vector<double>& times, double rtol,
                    double atol) {
    ode::AdaptiveOptions opt;
    opt.rtol = rtol;
    opt.atol = atol;
    const auto res = ode::solve_adaptive(field_of(sys), x0, times, opt);
    Trajectory tr;
    tr.x0 = x0;
    if (!res.ok()) return tr;
    tr.times = res.times;
    tr.states = res.states;
    return tr;
}

TrajectorySet simulate_trajectories(const SystemInstance& sys, int n_x0, const std::vector<double>& t_grid,
                                    Rng& rng) {
    if (n_x0 < 1) throw PreconditionError("simulate_trajectories: n_x0 must be >= 1");
    if (t_grid.size() < 2) throw PreconditionError("simulate_trajectories: grid too short");
    TrajectorySet set;
    set.family = sys.family;
    set.system = sys;
    set.t_grid = t_grid;
    constexpr int kMaxRedraws = 100;
    for (int k = 0; k < n_x0; ++k) {
        for (int attempt = 0;; ++attempt) {
            const VectorXd x0 = sample_initial_state(sys.family, rng);
            Trajectory tr = simulate(sys, x0, t_grid);
            bool ok = tr.states.size() == t_grid.size();
            for (const auto& s : tr.states) ok = ok && s.allFinite();
            if (ok) {
                set.trajectories.push_back(std::move(tr));
                break;
            }
            ++set.resampled;
            log_warning("trajectory solve failed for " + to_string(sys.family) + "; redrawing x0");
            if (attempt >= kMaxRedraws) throw EvaluationError("simulate_trajectories: repeated solver failure");
        }
    }
    return set;
}

TrajectorySet simulate_system_trajectories(Family f, int n_x0, const std::vector<double>& t_grid, Rng& rng) {
    // Split on a fresh draw so consecutive calls give different systems.
    Rng sys_rng = rng.split(rng());
    Rng x0_rng = sys_rng.split(1);
    SystemInstance sys = sample_system(f, sys_rng);
    return simulate_trajectories(sys, n_x0, t_grid, x0_rng);
}

}  // namespace sanodep::zoo
