#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sanodep/dataset_io.hpp"
#include "sanodep/episode.hpp"
#include "sanodep/errors.hpp"
#include "sanodep/system_zoo.hpp"

using namespace sanodep;
using zoo::Family;

namespace {
Eigen::VectorXd v(std::initializer_list<double> xs) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) r(i++) = x;
    return r;
}
}  // namespace

TEST_SUITE("system_zoo") {

TEST_CASE("lv2 and brusselator fields at (1, 1)") {
    const auto lv = zoo::make_system(Family::LV2, v({0.5, 1.2, 1.0, 1.5}));
    const Eigen::VectorXd a = zoo::vector_field(lv, v({1.0, 1.0}), 0.0);
    CHECK(a(0) == doctest::Approx(-0.7));
    CHECK(a(1) == doctest::Approx(-0.5));
    const auto br = zoo::make_system(Family::Brusselator, v({0.8, 1.5}));
    const Eigen::VectorXd b = zoo::vector_field(br, v({1.0, 1.0}), 0.0);
    CHECK(b(0) == doctest::Approx(-0.7));
    CHECK(b(1) == doctest::Approx(0.5));
}

TEST_CASE("sampled parameters stay in the prior support") {
    Rng rng(5);
    for (Family f : {Family::LV2, Family::LV3, Family::Brusselator, Family::Selkov, Family::SIR, Family::SIRD}) {
        const auto& spec = zoo::family_spec(f);
        for (int i = 0; i < 200; ++i) CHECK(spec.param_support.contains(zoo::sample_system(f, rng).params));
    }
}

TEST_CASE("taped kinetic field matches the plain field") {
    Rng rng(6);
    for (Family f : {Family::LV2, Family::LV3, Family::Brusselator, Family::Selkov, Family::SIR, Family::SIRD}) {
        const auto sys = zoo::sample_system(f, rng);
        const Eigen::VectorXd x = zoo::sample_initial_state(f, rng);
        ad::Tape tape;
        const ad::Var dx = zoo::kinetic_field(f, tape.constant(x), tape.constant(sys.params));
        CHECK((dx.value().col(0) - zoo::vector_field(sys, x, 0.0)).norm() < 1e-12);
    }
}

TEST_CASE("epidemic models conserve population") {
    Rng rng(7);
    for (Family f : {Family::SIR, Family::SIRD}) {
        const auto set = zoo::simulate_system_trajectories(f, 5, zoo::family_grid(f, 100), rng);
        for (const auto& tr : set.trajectories) {
            const double total = tr.x0.sum();
            for (const auto& s : tr.states) CHECK(std::abs(s.sum() - total) < 1e-6);
        }
    }
}

TEST_CASE("unknown family names are rejected") {
    CHECK_THROWS_AS(zoo::family_from_string("Lorenz"), PreconditionError);
    CHECK(zoo::family_from_string("Selkov") == Family::Selkov);
}

TEST_CASE("episode masks are disjoint and consistent") {
    Rng rng(8);
    const auto set = zoo::simulate_system_trajectories(Family::LV2, 12, zoo::family_grid(Family::LV2, 100), rng);
    zoo::EpisodeConfig cfg;
    for (double lambda : {0.0, 1.0}) {
        cfg.forecast_prob = lambda;
        for (int i = 0; i < 50; ++i) {
            const zoo::Episode ep = zoo::sample_episode(set, cfg, rng);
            zoo::validate_episode(ep, set);
            CHECK(ep.forecast == (lambda == 1.0));
            CHECK(static_cast<int>(ep.context_trajectories.size()) <= cfg.M_max);
            CHECK(ep.new_trajectory.context.front() == 0);
            if (ep.forecast) CHECK(ep.new_trajectory.context.size() == 1);
            for (const auto& c : ep.context_trajectories) CHECK(c.trajectory != ep.new_trajectory.trajectory);
        }
    }
}

TEST_CASE("batched episodes never leak the target trajectory into its own context") {
    Rng rng(9);
    const auto set = zoo::simulate_system_trajectories(Family::LV2, 8, zoo::family_grid(Family::LV2, 50), rng);
    const auto eps = zoo::sample_episode_batch(set, {}, rng);
    CHECK(eps.size() == 8);
    for (const auto& ep : eps)
        for (const auto& c : ep.context_trajectories) CHECK(c.trajectory != ep.new_trajectory.trajectory);
}

TEST_CASE("dataset text format round-trips") {
    Rng rng(10);
    const auto set = zoo::simulate_system_trajectories(Family::Selkov, 3, zoo::family_grid(Family::Selkov, 20), rng);
    std::stringstream ss;
    zoo::write_trajectory_set(ss, set, 42);
    const auto loaded = zoo::read_trajectory_set(ss);
    CHECK(loaded.seed == 42);
    CHECK(loaded.set.family == Family::Selkov);
    CHECK(loaded.set.system.params == set.system.params);
    REQUIRE(loaded.set.trajectories.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < set.t_grid.size(); ++k)
            CHECK(loaded.set.trajectories[i].states[k] == set.trajectories[i].states[k]);
    std::stringstream bad("not a dataset\n");
    CHECK_THROWS_AS(zoo::read_trajectory_set(bad), FormatError);
}

}
