#include "sanodep/bo.hpp"

#include <chrono>
#include <cmath>

#include "sanodep/errors.hpp"

namespace sanodep::bo {

namespace {

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Table values are given for minimising (-g, t).
ObjectivePoint from_min_form(double a, double b) { return {-a, -b}; }

ProblemSpec base(const std::string& name, zoo::Family f, VectorXd params, Objective g, zoo::Box box, Matrix map,
                 double t_max, double dt, ObjectivePoint ref) {
    ProblemSpec p;
    p.name = name;
    p.family = f;
    p.true_params = std::move(params);
    p.objective = std::move(g);
    p.design_box = std::move(box);
    p.design_map = std::move(map);
    p.t0 = 0.0;
    p.t_max = t_max;
    p.dt = dt;
    p.reference = ref;
    return p;
}

}  // namespace

std::vector<std::string> problem_names() { return {"LV2", "Brusselator", "Selkov", "SIR", "LV3", "SIRD"}; }

ProblemSpec make_problem(const std::string& name) {
    using zoo::Family;
    if (name == "LV2")
        return base(name, Family::LV2, vec({0.5, 1.2, 1.0, 1.5}), state_component(0),
                    {vec({0.1, 0.1}), vec({2.0, 2.0})}, Matrix::Identity(2, 2), 15.0, 1.5,
                    from_min_form(-1.771, 12.686));
    if (name == "Brusselator")
        return base(name, Family::Brusselator, vec({0.8, 1.5}), state_component(0),
                    {vec({0.1, 0.1}), vec({2.0, 2.0})}, Matrix::Identity(2, 2), 15.0, 1.5,
                    from_min_form(-1.467, 3.887));
    if (name == "Selkov")
        return base(name, Family::Selkov, vec({0.25, 0.45}), state_component(1),
                    {vec({0.1, 0.1}), vec({0.5, 0.5})}, Matrix::Identity(2, 2), 10.0, 1.0,
                    from_min_form(-0.474, 5.440));
    if (name == "SIR") {
        Matrix map(3, 1);
        map << 1.0, 0.1, 0.0;
        return base(name, Family::SIR, vec({1.5, 5.0}), susceptible_fraction(), {vec({10.0}), vec({30.0})}, map, 1.0,
                    0.1, from_min_form(0.51151, 0.79646));
    }
    if (name == "LV3")
        return base(name, Family::LV3, vec({0.5, 1.2, 1.0, 1.5, 0.5, 1.2, 1.0, 1.5}), state_component(0),
                    {vec({0.0, 0.0, 0.0}), vec({2.0, 2.0, 2.0})}, Matrix::Identity(3, 3), 15.0, 1.5,
                    from_min_form(-1.7557, 13.1687));
    if (name == "SIRD") {
        Matrix map(4, 1);
        map << 1.0, 0.1, 0.0, 0.0;
        return base(name, Family::SIRD, vec({1.0, 0.5, 1.0}), susceptible_fraction(), {vec({10.0}), vec({30.0})},
                    map, 1.0, 0.1, from_min_form(0.52198, 1.04));
    }
    throw ConfigError("unknown optimisation problem: " + name);
}

Observer true_system_observer(const ProblemSpec& problem) {
    const zoo::SystemInstance sys = zoo::make_system(problem.family, problem.true_params);
    const double t0 = problem.t0;
    return [sys, t0](const VectorXd& x0, double t) -> VectorXd {
        if (t == t0) return x0;
        const zoo::Trajectory tr = zoo::simulate(sys, x0, {t0, t}, 1e-8, 1e-8);
        if (tr.states.size() != 2 || !tr.states[1].allFinite())
            throw EvaluationError("observer: true-system solve failed");
        return tr.states[1];
    };
}

bool schedules_feasible(const BOHistory& h, const ProblemSpec& p) {
    for (std::size_t i = 0; i < h.schedules.size(); ++i)
        if (!is_feasible(h.schedules[i], h.schedule_lower_bounds[i], p.t_max, p.dt)) return false;
    // Realised trajectories also respect the delay.
    for (std::size_t i = 1; i < h.records.size(); ++i) {
        const auto& a = h.records[i - 1];
        const auto& b = h.records[i];
        if (a.trajectory_id == b.trajectory_id && !(b.t - a.t >= p.dt)) return false;
        if (b.t < p.t0 || b.t > p.t_max) return false;
    }
    return true;
}

bool hypervolume_monotone(const BOHistory& h) {
    for (std::size_t i = 1; i < h.records.size(); ++i)
        if (h.records[i].running_hypervolume < h.records[i - 1].running_hypervolume) return false;
    return true;
}

namespace {

using Clock = std::chrono::steady_clock;

class Recorder {
public:
    Recorder(const ProblemSpec& p, BOHistory& h) : p_(p), h_(h), start_(Clock::now()) {}

    void begin_trajectory() {
        completed_time_ += current_elapsed_;
        current_elapsed_ = 0.0;
    }

    void observe(int traj, int q, double t, const VectorXd& state, double acq) {
        BORecord r;
        r.trajectory_id = traj;
        r.query_index = q;
        r.t = t;
        r.state = state;
        r.g_value = p_.objective.value(state);
        r.neg_time = -t;
        points_.push_back({r.g_value, r.neg_time});
        h_.front = pareto_front(points_);
        r.running_hypervolume = hypervolume_2d(h_.front, p_.reference);
        r.acq_value = acq;
        current_elapsed_ = t - p_.t0;
        const double total = static_cast<double>(p_.budget + 1) * (p_.t_max - p_.t0);
        r.scaled_time = (completed_time_ + current_elapsed_) / total;
        r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
        h_.records.push_back(std::move(r));
        h_.final_hypervolume = h_.records.back().running_hypervolume;
    }

    void schedule(const std::vector<double>& times, double lower) {
        h_.schedules.push_back(times);
        h_.schedule_lower_bounds.push_back(lower);
    }

    const std::vector<ObjectivePoint>& front() const { return h_.front; }

private:
    const ProblemSpec& p_;
    BOHistory& h_;
    Clock::time_point start_;
    std::vector<ObjectivePoint> points_;
    double completed_time_ = 0.0;
    double current_elapsed_ = 0.0;
};

void record_seed(const zoo::ObservedTrajectory& seed, Recorder& rec) {
    rec.begin_trajectory();
    for (std::size_t i = 0; i < seed.size(); ++i)
        rec.observe(0, static_cast<int>(i), seed.times[i], seed.states[i], 0.0);
}

}  // namespace

zoo::ObservedTrajectory seed_trajectory(const ProblemSpec& p, const Observer& observer, Rng& rng) {
    const VectorXd x0 = p.initial_state(p.design_box.sample(rng));
    zoo::ObservedTrajectory tr;
    tr.x0 = x0;
    tr.t0 = p.t0;
    for (double t = p.t0; t <= p.t_max; t = earliest_after(t, p.dt)) {
        tr.times.push_back(t);
        tr.states.push_back(observer(x0, t));
    }
    return tr;
}

BOHistory run_bo(const ProblemSpec& p, const SamplerFactory& factory, const Observer& observer, const BOOptions& opt,
                 Rng& rng) {
    BOHistory h;
    h.method = "model";
    Recorder rec(p, h);
    Rng seed_rng = rng.split(0x73656564);
    std::vector<zoo::ObservedTrajectory> context{seed_trajectory(p, observer, seed_rng)};
    record_seed(context.front(), rec);

    for (int n = 1; n <= p.budget; ++n) {
        rec.begin_trajectory();
        std::unique_ptr<PathSampler> sampler = factory(context, rng);
        sampler->set_observations(VectorXd(), {}, {});

        // Initial condition and first schedule (t1 = t0).
        const auto front0 = rec.front();
        JointAcquisition joint = [&](const VectorXd& design, const std::vector<double>& times, VectorXd* gd,
                                     std::vector<double>* gt) {
            const VectorXd x0 = p.initial_state(design);
            if (!gd && !gt) return qehvi(*sampler, p.objective, x0, times, front0, p.reference);
            const AcquisitionValue a =
                qehvi_with_grad(*sampler, p.objective, x0, times, front0, p.reference, gd != nullptr);
            if (gd) *gd = p.design_map.transpose() * a.grad_x0;
            if (gt) *gt = a.grad_times;
            return a.value;
        };
        InitialConditionOptions ic_opt = opt.initial;
        ic_opt.schedule = opt.schedule;
        const InitialConditionResult ic = optimize_initial_condition(joint, p.design_box, p.t0, p.t_max, p.dt, ic_opt, rng);
        rec.schedule(ic.schedule.times, p.t0);
        const VectorXd x0 = p.initial_state(ic.design);

        zoo::ObservedTrajectory cur;
        cur.x0 = x0;
        cur.t0 = p.t0;
        try {
            const VectorXd s0 = observer(x0, p.t0);
            cur.times.push_back(p.t0);
            cur.states.push_back(s0);
            rec.observe(n, 0, p.t0, s0, ic.schedule.value);

            double t_lb = earliest_after(p.t0, p.dt);
            std::vector<double> obs_t;
            std::vector<VectorXd> obs_x;
            while (max_batch_size(t_lb, p.t_max, p.dt) >= 1) {
                sampler->set_observations(x0, obs_t, obs_x);
                const auto front = rec.front();
                TimeAcquisition acq = [&](const std::vector<double>& times, std::vector<double>* g) {
                    if (!g) return qehvi(*sampler, p.objective, x0, times, front, p.reference);
                    const AcquisitionValue a =
                        qehvi_with_grad(*sampler, p.objective, x0, times, front, p.reference, false);
                    *g = a.grad_times;
                    return a.value;
                };
                const Schedule s = optimize_schedule(acq, t_lb, p.t_max, p.dt, opt.schedule, rng);
                if (s.empty()) break;
                rec.schedule(s.times, t_lb);
                const double t1 = s.times.front();
                const VectorXd x1 = observer(x0, t1);
                obs_t.push_back(t1);
                obs_x.push_back(x1);
                cur.times.push_back(t1);
                cur.states.push_back(x1);
                rec.observe(n, static_cast<int>(cur.times.size()) - 1, t1, x1, s.value);
                t_lb = earliest_after(t1, p.dt);
            }
        } catch (const EvaluationError& e) {
            ++h.aborted_trajectories;
            log_warning("run_bo: trajectory " + std::to_string(n) + " aborted: " + e.what());
        }
        if (!cur.times.empty()) context.push_back(std::move(cur));
    }
    return h;
}

BOHistory run_random(const ProblemSpec& p, const Observer& observer, Rng& rng) {
    BOHistory h;
    h.method = "random";
    Recorder rec(p, h);
    Rng seed_rng = rng.split(0x73656564);
    record_seed(seed_trajectory(p, observer, seed_rng), rec);
    for (int n = 1; n <= p.budget; ++n) {
        rec.begin_trajectory();
        const VectorXd x0 = p.initial_state(p.design_box.sample(rng));
        try {
            rec.observe(n, 0, p.t0, observer(x0, p.t0), 0.0);
            double t_lb = earliest_after(p.t0, p.dt);
            int q = 1;
            while (max_batch_size(t_lb, p.t_max, p.dt) >= 1) {
                const double t = rng.uniform(t_lb, p.t_max);
                rec.schedule({t}, t_lb);
                rec.observe(n, q++, t, observer(x0, t), 0.0);
                t_lb = earliest_after(t, p.dt);
            }
        } catch (const EvaluationError& e) {
            ++h.aborted_trajectories;
            log_warning("run_random: trajectory " + std::to_string(n) + " aborted: " + e.what());
        }
    }
    return h;
}

}  // namespace sanodep::bo
