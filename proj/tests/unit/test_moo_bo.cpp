#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sanodep/acquisition.hpp"
#include "sanodep/bo.hpp"
#include "sanodep/pareto.hpp"
#include "sanodep/schedule.hpp"
#include "toy_sampler.hpp"

using namespace sanodep;
using bo::ObjectivePoint;

TEST_SUITE("moo_bo") {

TEST_CASE("hypervolume of two points") {
    const std::vector<ObjectivePoint> pts{{1.0, 2.0}, {2.0, 1.0}};
    CHECK(bo::hypervolume_2d(pts, {0.0, 0.0}) == doctest::Approx(3.0));
    CHECK(bo::hypervolume_2d({}, {0.0, 0.0}) == 0.0);
    // Points on the reference boundary add nothing.
    CHECK(bo::hypervolume_2d({{0.0, 5.0}}, {0.0, 0.0}) == 0.0);
}

TEST_CASE("pareto front drops dominated points and duplicates") {
    const std::vector<ObjectivePoint> pts{{1, 1}, {2, 0}, {0, 2}, {1, 1}, {0.5, 0.5}, {2, -1}};
    const auto f = bo::pareto_front(pts);
    REQUIRE(f.size() == 3);
    CHECK(f[0] == ObjectivePoint{0, 2});
    CHECK(f[1] == ObjectivePoint{1, 1});
    CHECK(f[2] == ObjectivePoint{2, 0});
    CHECK(bo::dominates({1, 1}, {0.5, 0.5}));
    CHECK_FALSE(bo::dominates({1, 1}, {1, 1}));
}

TEST_CASE("hvi gradient matches finite differences") {
    Rng rng(4);
    const ObjectivePoint ref{0.0, -10.0};
    const std::vector<ObjectivePoint> front{{1.0, -2.0}, {2.0, -5.0}};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ObjectivePoint> batch;
        for (int i = 0; i < 3; ++i) batch.push_back({rng.uniform(0.0, 3.0), rng.uniform(-9.0, -1.0)});
        std::vector<std::array<double, 2>> g;
        bo::hvi_with_grad(batch, front, ref, g);
        Eigen::VectorXd x(6);
        for (int i = 0; i < 3; ++i) x.segment(2 * i, 2) << batch[i].g, batch[i].neg_time;
        const Eigen::VectorXd fd = oracle::central_diff(
            [&](const Eigen::VectorXd& v) {
                std::vector<ObjectivePoint> b;
                for (int i = 0; i < 3; ++i) b.push_back({v(2 * i), v(2 * i + 1)});
                return bo::hvi(b, front, ref);
            },
            x, 1e-7);
        for (int i = 0; i < 3; ++i) {
            CHECK(g[i][0] == doctest::Approx(fd(2 * i)).epsilon(1e-5));
            CHECK(g[i][1] == doctest::Approx(fd(2 * i + 1)).epsilon(1e-5));
        }
    }
}

TEST_CASE("qehvi gradient w.r.t. times and x0 matches finite differences") {
    toy::DecaySampler sampler((Eigen::VectorXd(4) << 0.1, 0.2, 0.35, 0.5).finished());
    const bo::Objective g = bo::state_component(0);
    const ObjectivePoint ref{0.0, -15.0};
    const std::vector<ObjectivePoint> front{{0.5, -3.0}};
    const Eigen::Vector2d x0(2.0, 1.0);
    const std::vector<double> times{1.1, 4.2, 7.9};
    const bo::AcquisitionValue a = bo::qehvi_with_grad(sampler, g, x0, times, front, ref, true);
    CHECK(a.value == doctest::Approx(bo::qehvi(sampler, g, x0, times, front, ref)));
    Eigen::VectorXd tv = Eigen::Map<const Eigen::VectorXd>(times.data(), 3);
    const Eigen::VectorXd fdt = oracle::central_diff(
        [&](const Eigen::VectorXd& v) {
            return bo::qehvi(sampler, g, x0, std::vector<double>(v.data(), v.data() + 3), front, ref);
        },
        tv, 1e-7);
    const Eigen::VectorXd fdx =
        oracle::central_diff([&](const Eigen::VectorXd& v) { return bo::qehvi(sampler, g, v, times, front, ref); },
                             x0, 1e-7);
    for (int k = 0; k < 3; ++k) CHECK(a.grad_times[static_cast<std::size_t>(k)] == doctest::Approx(fdt(k)).epsilon(1e-5));
    for (int i = 0; i < 2; ++i) CHECK(a.grad_x0(i) == doctest::Approx(fdx(i)).epsilon(1e-5));
}

namespace {

// Surrogate with a constant bias, wrong even at t0.
class BiasedSampler final : public bo::PathSampler {
public:
    explicit BiasedSampler(toy::DecaySampler inner) : inner_(std::move(inner)) {}
    int state_dim() const override { return inner_.state_dim(); }
    int n_samples() const override { return inner_.n_samples(); }
    double t0() const override { return inner_.t0(); }
    void set_observations(const Eigen::VectorXd&, const std::vector<double>&,
                          const std::vector<Eigen::VectorXd>&) override {}
    bo::PathQuery query(const Eigen::VectorXd& x0, const std::vector<double>& times, const bo::AdjointFn* adjoint,
                        bool want_x0_grad) override {
        bo::AdjointFn shifted;
        if (adjoint)
            shifted = [&](const std::vector<bo::Matrix>& m) {
                std::vector<bo::Matrix> b = m;
                for (auto& x : b) x.array() += 0.3;
                return (*adjoint)(b);
            };
        bo::PathQuery q = inner_.query(x0, times, adjoint ? &shifted : nullptr, want_x0_grad);
        for (auto& x : q.means) x.array() += 0.3;
        return q;
    }

private:
    toy::DecaySampler inner_;
};

}  // namespace

TEST_CASE("qehvi uses x0 itself at t0") {
    BiasedSampler sampler(toy::DecaySampler((Eigen::VectorXd(3) << 0.1, 0.3, 0.6).finished()));
    const bo::Objective g = bo::state_component(0);
    const ObjectivePoint ref{0.0, -15.0};
    const std::vector<ObjectivePoint> front{{1.0, -3.0}};
    const Eigen::Vector2d x0(2.0, 1.0);
    const double t0 = sampler.t0();
    CHECK(bo::qehvi(sampler, g, x0, {t0}, front, ref) == doctest::Approx(bo::hvi({{2.0, -t0}}, front, ref)));

    const std::vector<double> times{t0, 4.2};
    const bo::AcquisitionValue a = bo::qehvi_with_grad(sampler, g, x0, times, front, ref, true);
    CHECK(a.value == doctest::Approx(bo::qehvi(sampler, g, x0, times, front, ref)));
    const Eigen::VectorXd fdx =
        oracle::central_diff([&](const Eigen::VectorXd& v) { return bo::qehvi(sampler, g, v, times, front, ref); },
                             x0, 1e-7);
    for (int i = 0; i < 2; ++i) CHECK(a.grad_x0(i) == doctest::Approx(fdx(i)).epsilon(1e-5));
    const double h = 1e-7;
    const double fdt = (bo::qehvi(sampler, g, x0, {t0, 4.2 + h}, front, ref) -
                        bo::qehvi(sampler, g, x0, {t0, 4.2 - h}, front, ref)) / (2 * h);
    CHECK(a.grad_times[1] == doctest::Approx(fdt).epsilon(1e-5));
}

TEST_CASE("susceptible fraction objective and gradient") {
    const bo::Objective g = bo::susceptible_fraction(0.05);
    const Eigen::Vector3d x(20.0, 2.0, 3.0);
    CHECK(g.value(x) == doctest::Approx(20.0 / 25.0 - 0.05 * 25.0));
    const Eigen::VectorXd fd = oracle::central_diff(g.value, x);
    CHECK((g.gradient(x) - fd).norm() < 1e-7);
}

TEST_CASE("batch size bounds") {
    CHECK(bo::max_batch_size(0.0, 15.0, 1.5) == 10);
    CHECK(bo::max_batch_size(14.0, 15.0, 1.5) == 0);
    CHECK(bo::max_batch_size(16.0, 15.0, 1.5) == 0);
    CHECK(bo::reduced_range(5) == std::pair<int, int>{3, 5});
    CHECK(bo::reduced_range(6) == std::pair<int, int>{3, 6});
    CHECK(bo::reduced_range(1) == std::pair<int, int>{1, 1});
}

TEST_CASE("increment projection lands in the feasible set") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd d = rng.normal_matrix(4, 1) * 3.0;
        const double budget = rng.uniform(0.0, 5.0);
        bo::project_increments(d, budget);
        CHECK(d.minCoeff() >= 0.0);
        CHECK(d.sum() <= budget + 1e-12);
    }
    Eigen::VectorXd inside(2);
    inside << 0.2, 0.3;
    Eigen::VectorXd copy = inside;
    bo::project_increments(copy, 1.0);
    CHECK(copy == inside);
}

TEST_CASE("times from increments respect the delay in floating point") {
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        const double t_lb = rng.uniform(0.0, 3.0), dt = rng.uniform(0.05, 1.0);
        const int n = bo::max_batch_size(t_lb, 10.0, dt);
        if (n < 1) continue;
        Eigen::VectorXd d = rng.normal_matrix(n, 1).cwiseAbs();
        bo::project_increments(d, 10.0 - t_lb - (n - 1) * dt);
        const auto t = bo::times_from_increments(t_lb, 10.0, dt, d);
        if (t) CHECK(bo::is_feasible(*t, t_lb, 10.0, dt));
    }
    CHECK(bo::earliest_after(6.917821123523422, 1.5) - 6.917821123523422 >= 1.5);
}

TEST_CASE("schedule optimizer returns a feasible schedule") {
    toy::DecaySampler sampler((Eigen::VectorXd(3) << 0.1, 0.3, 0.6).finished());
    const bo::Objective g = bo::state_component(0);
    const ObjectivePoint ref{0.0, -15.0};
    const std::vector<ObjectivePoint> front{{0.2, -1.0}};
    const Eigen::Vector2d x0(2.0, 1.0);
    bo::TimeAcquisition acq = [&](const std::vector<double>& t, std::vector<double>* grad) {
        if (!grad) return bo::qehvi(sampler, g, x0, t, front, ref);
        const auto a = bo::qehvi_with_grad(sampler, g, x0, t, front, ref, false);
        *grad = a.grad_times;
        return a.value;
    };
    Rng rng(7);
    const bo::Schedule s = bo::optimize_schedule(acq, 1.5, 15.0, 1.5, {}, rng);
    REQUIRE_FALSE(s.empty());
    CHECK(bo::is_feasible(s.times, 1.5, 15.0, 1.5));
    CHECK(s.size() >= bo::reduced_range(bo::max_batch_size(1.5, 15.0, 1.5)).first);
    CHECK(s.value == doctest::Approx(acq(s.times, nullptr)));
    CHECK(bo::optimize_schedule(acq, 14.0, 15.0, 1.5, {}, rng).empty());
}

TEST_CASE("registered problems use the maximisation reference") {
    const bo::ProblemSpec lv2 = bo::make_problem("LV2");
    CHECK(lv2.reference.g == doctest::Approx(1.771));
    CHECK(lv2.reference.neg_time == doctest::Approx(-12.686));
    CHECK(lv2.dt == 1.5);
    CHECK(lv2.n_max() == 10);
    for (const auto& name : bo::problem_names()) CHECK_NOTHROW(bo::make_problem(name));
    const bo::ProblemSpec sir = bo::make_problem("SIR");
    const Eigen::VectorXd x0 = sir.initial_state(Eigen::VectorXd::Constant(1, 20.0));
    CHECK(x0(0) == 20.0);
    CHECK(x0(1) == doctest::Approx(2.0));
    CHECK(x0(2) == 0.0);
}

TEST_CASE("random baseline history is feasible and monotone") {
    const bo::ProblemSpec p = bo::make_problem("LV2");
    Rng rng(8);
    const bo::BOHistory h = bo::run_random(p, bo::true_system_observer(p), rng);
    CHECK(bo::schedules_feasible(h, p));
    CHECK(bo::hypervolume_monotone(h));
    CHECK(h.final_hypervolume == doctest::Approx(bo::hypervolume_2d(h.front, p.reference)));
}

}
