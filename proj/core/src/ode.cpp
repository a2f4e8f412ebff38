#include "sanodep/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sanodep/errors.hpp"

namespace sanodep::ode {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Ok:
            return "ok";
        case SolveStatus::StepLimit:
            return "step_limit";
        case SolveStatus::NonFinite:
            return "non_finite";
    }
    return "unknown";
}

State rk4_step(const VectorField& f, const State& x, double t, double h) {
    if (!(h > 0)) throw PreconditionError("rk4_step: step must be positive");
    const State k1 = f(x, t);
    if (k1.size() != x.size()) throw DimensionError("rk4_step: field returned wrong dimension");
    const State k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
    const State k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
    const State k4 = f(x + h * k3, t + h);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

SolveResult solve_fixed(const VectorField& f, const State& x0, std::span<const double> t_grid, int substeps) {
    if (t_grid.empty()) throw PreconditionError("solve_fixed: empty grid");
    if (substeps < 1) throw PreconditionError("solve_fixed: substeps must be >= 1");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw PreconditionError("solve_fixed: grid must be strictly increasing");
    SolveResult r;
    r.times.assign(t_grid.begin(), t_grid.end());
    r.states.push_back(x0);
    State x = x0;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double h = (t_grid[i] - t_grid[i - 1]) / substeps;
        for (int s = 0; s < substeps; ++s) {
            x = rk4_step(f, x, t_grid[i - 1] + s * h, h);
            ++r.steps_taken;
        }
        if (!x.allFinite()) {
            r.status = SolveStatus::NonFinite;
            r.times.resize(r.states.size());
            return r;
        }
        r.states.push_back(x);
    }
    return r;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double C[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double A[7][6] = {
    {0, 0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// Difference between fifth- and fourth-order weights.
constexpr double E[7] = {-71.0 / 57600, 0.0, 71.0 / 16695, -71.0 / 1920, 17253.0 / 339200, -22.0 / 525, 1.0 / 40};
// Continuous extension (Shampine): y(t + th) = y + h * sum_i K_i * sum_j P[i][j] th^(j+1).
constexpr double P[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0, 0, 0, 0},
    {0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799},
    {0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632},
    {0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423},
};

double rms_scaled(const State& v, const State& scale) {
    return std::sqrt((v.array() / scale.array()).square().mean());
}

}  // namespace

SolveResult solve_adaptive(const VectorField& f, const State& x0, std::span<const double> t_eval,
                           const AdaptiveOptions& opt) {
    if (t_eval.empty()) throw PreconditionError("solve_adaptive: empty t_eval");
    if (!(opt.rtol > 0) || !(opt.atol > 0)) throw PreconditionError("solve_adaptive: tolerances must be positive");
    for (std::size_t i = 1; i < t_eval.size(); ++i)
        if (t_eval[i] < t_eval[i - 1]) throw PreconditionError("solve_adaptive: t_eval must be non-decreasing");

    SolveResult r;
    const double t0 = t_eval.front();
    const double t_end = t_eval.back();
    r.times.push_back(t0);
    r.states.push_back(x0);
    std::size_t next = 1;
    while (next < t_eval.size() && t_eval[next] == t0) {
        r.times.push_back(t0);
        r.states.push_back(x0);
        ++next;
    }
    if (next == t_eval.size()) return r;

    const Eigen::Index n = x0.size();
    State x = x0;
    double t = t0;
    Eigen::MatrixXd K(n, 7);
    K.col(0) = f(x, t);
    if (K.col(0).size() != n) throw DimensionError("solve_adaptive: field returned wrong dimension");
    if (!K.col(0).allFinite() || !x.allFinite()) {
        r.status = SolveStatus::NonFinite;
        return r;
    }

    double h = opt.first_step;
    if (!(h > 0)) {
        const State scale = (opt.atol + x.array().abs() * opt.rtol).matrix();
        const double d0 = rms_scaled(x, scale);
        const double d1 = rms_scaled(K.col(0), scale);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_end - t0);
        const State f1 = f(x + h0 * K.col(0), t + h0);
        const double d2 = rms_scaled(f1 - K.col(0), scale) / h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                     : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
        h = std::min(100.0 * h0, h1);
    }

    constexpr double safety = 0.9;
    constexpr double beta = 0.04;
    constexpr double expo1 = 0.2 - beta * 0.75;
    double err_old = 1e-4;

    while (next < t_eval.size()) {
        if (r.steps_taken >= opt.max_steps) {
            r.status = SolveStatus::StepLimit;
            return r;
        }
        const double min_step = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < min_step) {
            r.status = SolveStatus::StepLimit;
            return r;
        }
        h = std::min(h, t_end - t);

        for (int s = 1; s < 7; ++s) {
            State xs = x;
            for (int j = 0; j < s; ++j)
                if (A[s][j] != 0.0) xs += h * A[s][j] * K.col(j);
            K.col(s) = f(xs, t + C[s] * h);
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        State x_new = x;
        for (int j = 0; j < 6; ++j) x_new += h * A[6][j] * K.col(j);
        K.col(6) = f(x_new, t + h);
        ++r.steps_taken;

        if (!x_new.allFinite() || !K.col(6).allFinite()) {
            h *= 0.25;
            if (h < min_step) {
                r.status = SolveStatus::NonFinite;
                return r;
            }
            continue;
        }

        State err = State::Zero(n);
        for (int j = 0; j < 7; ++j) err += h * E[j] * K.col(j);
        const State scale = (opt.atol + x.array().abs().max(x_new.array().abs()) * opt.rtol).matrix();
        const double err_norm = rms_scaled(err, scale);

        if (err_norm <= 1.0) {
            const double t_new = (t_end - (t + h) < 1e-14 * std::max(1.0, std::abs(t_end))) ? t_end : t + h;
            while (next < t_eval.size() && t_eval[next] <= t_new) {
                const double theta = (t_eval[next] - t) / h;
                State y = x;
                for (int j = 0; j < 7; ++j) {
                    double w = 0.0;
                    double th = theta;
                    for (int k = 0; k < 4; ++k) {
                        w += P[j][k] * th;
                        th *= theta;
                    }
                    if (w != 0.0) y += h * w * K.col(j);
                }
                if (t_eval[next] == t_new) y = x_new;
                r.times.push_back(t_eval[next]);
                r.states.push_back(std::move(y));
                ++next;
            }
            const double fac11 = std::pow(std::max(err_norm, 1e-10), expo1);
            double fac = fac11 / std::pow(err_old, beta);
            fac = std::clamp(fac / safety, 0.2, 10.0);
            err_old = std::max(err_norm, 1e-4);
            x = x_new;
            t = t_new;
            K.col(0) = K.col(6);
            h = h / fac;
        } else {
            const double fac11 = std::pow(err_norm, expo1);
            h = h / std::min(10.0, fac11 / safety);
        }
    }
    return r;
}

// ------------------------------------------------------------ taped solvers

ad::Var rk4_step(ad::Tape& tape, const VarField& f, const ad::Var& x, const ad::Var& t, const ad::Var& h) {
    using namespace ad;
    Var half_h = scale(h, 0.5);
    Var t_mid = add(t, half_h);
    Var t_end = add(t, h);
    Var k1 = f(tape, x, t);
    if (k1.rows() != x.rows() || k1.cols() != x.cols()) throw DimensionError("rk4_step: field returned wrong shape");
    Var k2 = f(tape, add(x, scale_by(k1, half_h)), t_mid);
    Var k3 = f(tape, add(x, scale_by(k2, half_h)), t_mid);
    Var k4 = f(tape, add(x, scale_by(k3, h)), t_end);
    Var combo = add(add(k1, k4), scale(add(k2, k3), 2.0));
    return add(x, scale_by(combo, scale(h, 1.0 / 6.0)));
}

BaseGridPath::BaseGridPath(ad::Tape& tape, VarField field, ad::Var x0, double t0, double h)
    : tape_(&tape), field_(std::move(field)), t0_(t0), h_(h) {
    if (!(h > 0)) throw PreconditionError("BaseGridPath: step must be positive");
    nodes_.push_back(std::move(x0));
}

BaseGridPath::BaseGridPath(ad::Tape& tape, VarField field, const std::vector<Eigen::MatrixXd>& nodes, double t0,
                           double h)
    : tape_(&tape), field_(std::move(field)), t0_(t0), h_(h) {
    if (!(h > 0)) throw PreconditionError("BaseGridPath: step must be positive");
    if (nodes.empty()) throw PreconditionError("BaseGridPath: no nodes");
    for (const auto& m : nodes) nodes_.push_back(tape.constant(m));
}

ad::Var BaseGridPath::node(std::size_t k) {
    while (nodes_.size() <= k) {
        const std::size_t j = nodes_.size() - 1;
        ad::Var t = tape_->scalar(node_time(j));
        ad::Var h = tape_->scalar(h_);
        nodes_.push_back(rk4_step(*tape_, field_, nodes_[j], t, h));
    }
    return nodes_[k];
}

std::size_t BaseGridPath::node_index(double t) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    if (t < t0_ - tol) throw PreconditionError("BaseGridPath: time before t0");
    const double k = std::floor((t - t0_) / h_ + 1e-9);
    return k < 0 ? 0 : static_cast<std::size_t>(k);
}

ad::Var BaseGridPath::at(const ad::Var& t) {
    const double tv = t.scalar();
    const std::size_t k = node_index(tv);
    ad::Var base = node(k);
    const double tk = node_time(k);
    const double partial = tv - tk;
    // Constant times that coincide with a node need no extra step.
    if (!tape_->needs_grad(t) && std::abs(partial) <= 1e-12 * std::max(1.0, std::abs(tv))) return base;
    ad::Var t_node = tape_->scalar(tk);
    ad::Var hvar = ad::add_scalar(t, -tk);
    return rk4_step(*tape_, field_, base, t_node, hvar);
}

ad::Var BaseGridPath::at(double t) { return at(tape_->scalar(t)); }

}  // namespace sanodep::ode
