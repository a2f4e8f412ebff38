#include <doctest.h>

#include "oracles.hpp"
#include "sanodep/gp.hpp"
#include "sanodep/rng.hpp"

using namespace sanodep;

TEST_SUITE("gp_baseline") {

TEST_CASE("posterior agrees with a direct inverse") {
    Rng rng(1);
    const Eigen::MatrixXd X = rng.normal_matrix(15, 3);
    Eigen::VectorXd y(15);
    for (int i = 0; i < 15; ++i) y(i) = std::sin(X(i, 0)) + 0.3 * X(i, 1) * X(i, 2);
    gp::Hyperparams h;
    h.lengthscales = Eigen::Vector3d(0.7, 1.3, 2.0);
    h.signal_variance = 1.4;
    h.noise_variance = 0.05;
    const gp::GPModel model(X, y, h);
    const Eigen::MatrixXd Xq = rng.normal_matrix(6, 3);
    const auto post = model.posterior(Xq);
    Eigen::VectorXd m, v;
    oracle::gp_naive(X, y, Xq, h.lengthscales, h.signal_variance, h.noise_variance, m, v);
    CHECK((post.mean - m).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((post.variance - v).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(model.jitter() == 0.0);
}

TEST_CASE("marginal likelihood gradient matches finite differences") {
    Rng rng(2);
    const Eigen::MatrixXd X = rng.normal_matrix(12, 2);
    const Eigen::VectorXd y = rng.normal_matrix(12, 1);
    gp::Hyperparams h;
    h.lengthscales = Eigen::Vector2d(0.9, 1.6);
    h.signal_variance = 0.8;
    h.noise_variance = 0.1;
    Eigen::VectorXd grad;
    gp::log_marginal_likelihood(X, y, h, &grad);
    auto f = [&](const Eigen::VectorXd& logp) {
        gp::Hyperparams g;
        g.lengthscales = logp.head(2).array().exp();
        g.signal_variance = std::exp(logp(2));
        g.noise_variance = std::exp(logp(3));
        return gp::log_marginal_likelihood(X, y, g);
    };
    Eigen::VectorXd logp(4);
    logp << std::log(0.9), std::log(1.6), std::log(0.8), std::log(0.1);
    const Eigen::VectorXd fd = oracle::central_diff(f, logp);
    for (int i = 0; i < 4; ++i) CHECK(oracle::rel_error(grad(i), fd(i)) < 1e-6);
}

TEST_CASE("duplicate inputs with no noise fall back to jitter") {
    Eigen::MatrixXd X(3, 1);
    X << 0.5, 0.5, 0.5;
    const Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
    gp::Hyperparams h;
    h.lengthscales = Eigen::VectorXd::Ones(1);
    h.noise_variance = 1e-300;
    const gp::GPModel model(X, y, h);
    CHECK(model.jitter() > 0.0);
    CHECK(model.posterior(X).variance.minCoeff() >= 0.0);
}

TEST_CASE("fitting never lowers the starting likelihood") {
    Rng rng(3);
    const Eigen::MatrixXd X = rng.normal_matrix(20, 2);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y(i) = std::cos(2.0 * X(i, 0));
    const gp::Hyperparams init = gp::default_hyperparams(X, y);
    const double start = gp::log_marginal_likelihood(X, y, init);
    const gp::GPModel fit = gp::gp_fit(X, y, init, rng);
    CHECK(fit.log_marginal_likelihood() >= start - 1e-9);
    CHECK(fit.hyperparams().noise_variance >= 1e-6);
}

}
