#include <doctest.h>

#include <algorithm>

#include "sanodep/checkpoint.hpp"
#include "sanodep/errors.hpp"
#include "sanodep/models.hpp"
#include "sanodep/training.hpp"

using namespace sanodep;
using models::ModelKind;

namespace {

models::ModelParameters small_model(ModelKind kind, std::uint64_t seed = 3) {
    training::TrainingConfig tc;
    tc.kind = kind;
    tc.family = "LV2";
    models::ModelHyperparams hp = training::resolve_hyperparams(tc);
    hp.encoder_width = hp.hidden_dim = hp.ode_hidden = hp.decoder_hidden = 8;
    hp.latent_state_dim = 3;
    hp.latent_dynamics_dim = 4;
    return models::init_model(kind, hp, seed);
}

models::PredictionInput some_input(Rng& rng, int M) {
    const auto set = zoo::simulate_system_trajectories(zoo::Family::LV2, M + 1, zoo::family_grid(zoo::Family::LV2, 30), rng);
    models::PredictionInput in;
    for (int l = 1; l <= M; ++l) in.context.push_back(zoo::observe(set.trajectories[static_cast<std::size_t>(l)], {0, 3, 7, 12}));
    in.current = zoo::observe(set.trajectories[0], {0, 5});
    return in;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("system representation ignores context order and duplication") {
    Rng rng(1);
    const auto p = small_model(ModelKind::SANODEP);
    const models::PredictionInput in = some_input(rng, 3);
    const Eigen::VectorXd r = models::encode_context(p, in).r_sys;

    models::PredictionInput perm = in;
    std::reverse(perm.context.begin(), perm.context.end());
    std::swap(perm.context[0].times[1], perm.context[0].times[2]);
    std::swap(perm.context[0].states[1], perm.context[0].states[2]);
    CHECK((models::encode_context(p, perm).r_sys - r).cwiseAbs().maxCoeff() < 1e-12);

    models::PredictionInput dup = in;
    for (auto& c : dup.context) {
        const auto n = c.size();
        for (std::size_t i = 0; i < n; ++i) {
            c.times.push_back(c.times[i]);
            c.states.push_back(c.states[i]);
        }
    }
    auto& cur = dup.current;
    const auto n = cur.size();
    for (std::size_t i = 0; i < n; ++i) {
        cur.times.push_back(cur.times[i]);
        cur.states.push_back(cur.states[i]);
    }
    CHECK((models::encode_context(p, dup).r_sys - r).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predictions have the requested shape and a floored std") {
    Rng rng(2);
    for (ModelKind k : {ModelKind::NP, ModelKind::SANODEP, ModelKind::PISANODEP}) {
        const auto p = small_model(k);
        const models::PredictionInput in = some_input(rng, 2);
        const std::vector<double> times{0.5, 3.0, 14.9};
        const auto s = models::predict(p, in, times, 7, rng);
        REQUIRE(s.mean.size() == 3);
        CHECK(s.n_samples() == 7);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(s.mean[i].rows() == 2);
            CHECK(s.mean[i].cols() == 7);
            CHECK(s.std[i].minCoeff() >= 0.1);
        }
    }
}

TEST_CASE("nodep refuses context trajectories") {
    Rng rng(3);
    const auto p = small_model(ModelKind::NODEP);
    const models::PredictionInput in = some_input(rng, 1);
    CHECK_THROWS_AS(models::predict(p, in, {1.0}, 2, rng), PreconditionError);
    models::PredictionInput none = in;
    none.context.clear();
    CHECK_NOTHROW(models::predict(p, none, {1.0}, 2, rng));
}

TEST_CASE("mse and nll of a perfect predictor") {
    models::PredictiveSamples s;
    s.times = {1.0, 2.0};
    Eigen::MatrixXd truth(2, 2);
    truth << 1.0, 2.0, 3.0, 4.0;
    s.u = Eigen::MatrixXd::Zero(1, 1);
    for (int i = 0; i < 2; ++i) {
        s.mean.push_back(truth.col(i));
        s.std.push_back(Eigen::MatrixXd::Ones(2, 1));
    }
    CHECK(models::mean_squared_error(s, truth) == 0.0);
    // Two dims of a standard normal at its mean.
    CHECK(models::mixture_nll(s, truth) == doctest::Approx(2 * 0.918938533).epsilon(1e-8));
}

TEST_CASE("parameter estimation needs the physics-informed model") {
    Rng rng(4);
    const models::PredictionInput in = some_input(rng, 2);
    CHECK_THROWS_AS(models::estimate_parameters(small_model(ModelKind::SANODEP), in.context, 8, rng),
                    PreconditionError);
    const auto post = models::estimate_parameters(small_model(ModelKind::PISANODEP), in.context, 64, rng);
    const auto& support = zoo::family_spec(zoo::Family::LV2).param_support;
    for (Eigen::Index j = 0; j < post.samples.cols(); ++j) CHECK(support.contains(post.samples.col(j)));
    CHECK((post.q025.array() <= post.q975.array()).all());
}

TEST_CASE("checkpoint round-trips bit for bit") {
    const auto p = small_model(ModelKind::PISANODEP, 9);
    const std::string text = models::checkpoint_to_string(p);
    const auto q = models::checkpoint_from_string(text, ModelKind::PISANODEP);
    CHECK(models::checkpoint_to_string(q) == text);
    CHECK(q.hp == p.hp);
    for (const auto& [name, layer] : p.layers) {
        CHECK(q.layer(name).weights == layer.weights);
        CHECK(q.layer(name).bias == layer.bias);
    }
}

TEST_CASE("checkpoint rejects a kind mismatch and malformed input") {
    const std::string text = models::checkpoint_to_string(small_model(ModelKind::SANODEP));
    CHECK_THROWS_AS(models::checkpoint_from_string(text, ModelKind::NODEP), FormatError);
    CHECK_THROWS_AS(models::checkpoint_from_string("{\"version\": 1}"), FormatError);
    CHECK_THROWS_AS(models::checkpoint_from_string("not json"), FormatError);
}

}
