#include "sanodep/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sanodep/errors.hpp"

namespace sanodep::bo {

using Eigen::VectorXd;

double earliest_after(double t, double dt) {
    double next = t + dt;
    while (next - t < dt) next = std::nextafter(next, std::numeric_limits<double>::infinity());
    return next;
}

int max_batch_size(double t_lb, double t_max, double dt) {
    if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
    if (t_lb > t_max) return 0;
    return static_cast<int>(std::floor((t_max - t_lb) / dt));
}

std::pair<int, int> reduced_range(int n_max) { return {(n_max + 1) / 2, n_max}; }

bool is_feasible(const std::vector<double>& times, double t_lb, double t_max, double dt) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= t_lb && times[i] <= t_max)) return false;
        if (i && !(times[i] - times[i - 1] >= dt)) return false;
    }
    return true;
}

void project_increments(VectorXd& d, double budget) {
    d = d.cwiseMax(0.0);
    if (d.sum() <= budget) return;
    // Simplex projection (sort-based).
    std::vector<double> s(d.data(), d.data() + d.size());
    std::sort(s.begin(), s.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        cum += s[i];
        const double th = (cum - budget) / static_cast<double>(i + 1);
        if (s[i] - th > 0.0) theta = th;
    }
    d = (d.array() - theta).max(0.0);
}

std::optional<std::vector<double>> times_from_increments(double t_lb, double t_max, double dt, const VectorXd& delta) {
    const auto n = static_cast<std::size_t>(delta.size());
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = i == 0 ? t_lb + delta(0) : t[i - 1] + dt + delta(static_cast<Eigen::Index>(i));
        if (i == 0) t[0] = std::max(t[0], t_lb);
        while (i && t[i] - t[i - 1] < dt) t[i] = std::nextafter(t[i], std::numeric_limits<double>::infinity());
    }
    if (n && t.back() > t_max) {
        t.back() = t_max;
        for (std::size_t i = n - 1; i-- > 0;)
            while (t[i + 1] - t[i] < dt) t[i] = std::nextafter(t[i], -std::numeric_limits<double>::infinity());
    }
    if (!is_feasible(t, t_lb, t_max, dt)) return std::nullopt;
    return t;
}

namespace {

struct Eval {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> times;
    VectorXd grad_delta;
};

// Evaluates the schedule for increments delta; fixed first time prepended.
Eval evaluate(const TimeAcquisition& acq, double t_lb, double t_max, double dt, const VectorXd& delta,
              std::optional<double> fix_first, bool with_grad) {
    Eval e;
    std::vector<double> times;
    if (fix_first) times.push_back(*fix_first);
    if (delta.size() > 0) {
        auto free = times_from_increments(t_lb, t_max, dt, delta);
        if (!free) return e;
        times.insert(times.end(), free->begin(), free->end());
    }
    std::vector<double> g;
    const double v = acq(times, with_grad ? &g : nullptr);
    if (!std::isfinite(v)) return e;
    e.value = v;
    e.times = std::move(times);
    if (with_grad) {
        const std::size_t off = fix_first ? 1 : 0;
        e.grad_delta = VectorXd::Zero(delta.size());
        double acc = 0.0;
        for (Eigen::Index j = delta.size(); j-- > 0;) {
            acc += g.at(off + static_cast<std::size_t>(j));
            e.grad_delta(j) = acc;
        }
        if (!e.grad_delta.allFinite()) e.grad_delta.setZero();
    }
    return e;
}

VectorXd increments_of(const std::vector<double>& times, double t_lb, double dt) {
    VectorXd d(static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i)
        d(static_cast<Eigen::Index>(i)) = i == 0 ? times[0] - t_lb : times[i] - times[i - 1] - dt;
    return d;
}

Eval ascend(const TimeAcquisition& acq, double t_lb, double t_max, double dt, VectorXd delta, double budget,
            std::optional<double> fix_first, const ScheduleOptions& opt) {
    project_increments(delta, budget);
    Eval cur = evaluate(acq, t_lb, t_max, dt, delta, fix_first, true);
    if (delta.size() == 0 || budget <= 0.0 || !std::isfinite(cur.value)) return cur;
    double alpha = opt.step;
    for (int it = 0; it < opt.iterations; ++it) {
        const double gmax = cur.grad_delta.cwiseAbs().maxCoeff();
        if (!(gmax > 0.0)) break;
        bool moved = false;
        while (alpha >= opt.min_step) {
            VectorXd cand = delta + (alpha * budget / gmax) * cur.grad_delta;
            project_increments(cand, budget);
            if ((cand - delta).cwiseAbs().maxCoeff() == 0.0) break;
            const Eval e = evaluate(acq, t_lb, t_max, dt, cand, fix_first, false);
            if (e.value > cur.value) {
                delta = cand;
                cur = evaluate(acq, t_lb, t_max, dt, delta, fix_first, true);
                alpha = std::min(opt.step, 2.0 * alpha);
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) break;
    }
    return cur;
}

}  // namespace

Schedule optimize_schedule_n(const TimeAcquisition& acq, double t_lb, double t_max, double dt, int n,
                             const ScheduleOptions& opt, Rng& rng, std::optional<double> fix_first,
                             const std::vector<double>* warm_start) {
    if (n < 1) throw PreconditionError("optimize_schedule_n: n must be >= 1");
    const int n_free = fix_first ? n - 1 : n;
    const double lb = fix_first ? *fix_first + dt : t_lb;
    const double budget = t_max - lb - (n_free - 1) * dt;
    if (n_free > 0 && budget < 0.0) return {};

    Eval best;
    auto consider = [&](const Eval& e) {
        if (e.value > best.value) best = e;
    };
    if (n_free == 0) {
        consider(evaluate(acq, lb, t_max, dt, VectorXd(0), fix_first, false));
    } else {
        const bool warm = warm_start && static_cast<int>(warm_start->size()) == n;
        if (warm) {
            std::vector<double> free(warm_start->begin() + (fix_first ? 1 : 0), warm_start->end());
            consider(ascend(acq, lb, t_max, dt, increments_of(free, lb, dt), budget, fix_first, opt));
        }
        for (int r = 0; r < (warm ? 0 : opt.restarts_per_n); ++r) {
            VectorXd d(n_free);
            if (r == 0) {
                d.setConstant(budget / (n_free + 1));
            } else {
                // Dirichlet(1) share of the budget over n_free + 1 slots.
                VectorXd e(n_free + 1);
                for (Eigen::Index i = 0; i <= n_free; ++i) e(i) = -std::log(std::max(rng.uniform(), 1e-300));
                d = budget * e.head(n_free) / e.sum();
            }
            consider(ascend(acq, lb, t_max, dt, d, budget, fix_first, opt));
        }
    }
    if (!std::isfinite(best.value)) return {};
    return {best.times, best.value};
}

Schedule optimize_schedule(const TimeAcquisition& acq, double t_lb, double t_max, double dt,
                           const ScheduleOptions& opt, Rng& rng, std::optional<double> fix_first) {
    const int n_max = max_batch_size(t_lb, t_max, dt);
    if (n_max < 1) return {};
    const auto [lo, hi] = reduced_range(n_max);
    Schedule best;
    best.value = -std::numeric_limits<double>::infinity();
    for (int n = lo; n <= hi; ++n) {
        Schedule s = optimize_schedule_n(acq, t_lb, t_max, dt, n, opt, rng, fix_first);
        if (!s.empty() && s.value > best.value) best = std::move(s);
    }
    if (best.empty()) return {};
    return best;
}

InitialConditionResult optimize_initial_condition(const JointAcquisition& acq, const zoo::Box& box, double t0,
                                                  double t_max, double dt, const InitialConditionOptions& opt,
                                                  Rng& rng) {
    if (box.dim() == 0 || ((box.hi - box.lo).array() <= 0.0).any())
        throw PreconditionError("optimize_initial_condition: degenerate design box");
    if (opt.restarts < 1) throw PreconditionError("optimize_initial_condition: restarts must be >= 1");
    const VectorXd width = box.hi - box.lo;
    InitialConditionResult best;
    best.schedule.value = -std::numeric_limits<double>::infinity();
    int failures = 0;
    std::string last_error;

    for (int r = 0; r < opt.restarts; ++r) {
        try {
            VectorXd x = box.sample(rng);
            auto time_acq = [&](const std::vector<double>& times, std::vector<double>* g) {
                return acq(x, times, nullptr, g);
            };
            Schedule sched = optimize_schedule(time_acq, t0, t_max, dt, opt.schedule, rng, t0);
            if (sched.empty()) throw EvaluationError("no feasible schedule");
            for (int outer = 0; outer < opt.outer_iterations; ++outer) {
                // Design ascent with the schedule fixed.
                VectorXd g;
                double v = acq(x, sched.times, &g, nullptr);
                double alpha = opt.design_step;
                for (int s = 0; s < opt.design_steps && alpha >= opt.schedule.min_step; ) {
                    const VectorXd gs = g.cwiseProduct(width);
                    const double gmax = gs.cwiseAbs().maxCoeff();
                    if (!(gmax > 0.0) || !std::isfinite(gmax)) break;
                    const VectorXd cand =
                        (x + (alpha / gmax) * gs.cwiseProduct(width)).cwiseMax(box.lo).cwiseMin(box.hi);
                    VectorXd cg;
                    const double cv = acq(cand, sched.times, &cg, nullptr);
                    if (cv > v) {
                        x = cand;
                        v = cv;
                        g = cg;
                        ++s;
                    } else {
                        alpha *= 0.5;
                    }
                }
                sched.value = v;
                // Schedule refinement at the new design, warm-started.
                Schedule s2 = optimize_schedule_n(time_acq, t0, t_max, dt, sched.size(), opt.schedule, rng, t0,
                                                  &sched.times);
                if (!s2.empty() && s2.value >= sched.value) sched = std::move(s2);
            }
            if (sched.value > best.schedule.value) {
                best.design = x;
                best.schedule = sched;
            }
        } catch (const std::exception& e) {
            ++failures;
            last_error = e.what();
        }
    }
    if (best.schedule.empty())
        throw EvaluationError("optimize_initial_condition: all " + std::to_string(opt.restarts) +
                              " restarts failed (" + std::to_string(failures) + " errors; last: " + last_error + ")");
    return best;
}

}  // namespace sanodep::bo
