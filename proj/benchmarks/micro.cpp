#include <benchmark/benchmark.h>

#include <cmath>

#include "sanodep/acquisition.hpp"
#include "sanodep/autodiff.hpp"
#include "sanodep/bo.hpp"
#include "sanodep/ode.hpp"
#include "sanodep/pareto.hpp"
#include "sanodep/rng.hpp"
#include "sanodep/surrogates.hpp"
#include "sanodep/training.hpp"

using namespace sanodep;

namespace {

void BM_DenseForwardBackward(benchmark::State& state) {
    const auto batch = state.range(0);
    Rng rng(1);
    const Eigen::MatrixXd W = rng.normal_matrix(50, 50) * 0.1;
    const Eigen::MatrixXd b = rng.normal_matrix(50, 1);
    const Eigen::MatrixXd x = rng.normal_matrix(50, batch);
    for (auto _ : state) {
        ad::Tape tape;
        ad::BoundDense layer{tape.variable(W), tape.variable(b), ad::Activation::SiLU};
        ad::Var y = ad::sum(ad::dense(layer, tape.constant(x)));
        tape.backward(y);
        benchmark::DoNotOptimize(tape.grad(layer.weights).data());
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DenseForwardBackward)->Arg(1)->Arg(32)->Arg(256);

void BM_LatentSolve(benchmark::State& state) {
    Rng rng(2);
    const Eigen::MatrixXd W1 = rng.normal_matrix(50, 10) * 0.3, W2 = rng.normal_matrix(10, 50) * 0.1;
    const Eigen::MatrixXd x0 = rng.normal_matrix(10, state.range(0));
    for (auto _ : state) {
        ad::Tape tape;
        ad::BoundDense l1{tape.variable(W1), tape.constant(Eigen::MatrixXd::Zero(50, 1)), ad::Activation::Tanh};
        ad::BoundDense l2{tape.variable(W2), tape.constant(Eigen::MatrixXd::Zero(10, 1)), ad::Activation::Identity};
        ode::VarField f = [&](ad::Tape&, const ad::Var& x, const ad::Var&) { return ad::dense(l2, ad::dense(l1, x)); };
        ode::BaseGridPath path(tape, f, tape.variable(x0), 0.0, 15.0 / 99.0);
        ad::Var out = ad::sum(path.at(15.0));
        tape.backward(out);
        benchmark::DoNotOptimize(tape.grad(l1.weights).data());
    }
}
BENCHMARK(BM_LatentSolve)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_AdaptiveLV2(benchmark::State& state) {
    const ode::VectorField f = [](const ode::State& x, double) {
        ode::State d(2);
        d << 0.5 * x(0) - 1.2 * x(0) * x(1), 1.0 * x(0) * x(1) - 1.5 * x(1);
        return d;
    };
    std::vector<double> grid(100);
    for (int i = 0; i < 100; ++i) grid[static_cast<std::size_t>(i)] = 15.0 * i / 99.0;
    const ode::State x0 = ode::State::Constant(2, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(ode::solve_adaptive(f, x0, grid));
}
BENCHMARK(BM_AdaptiveLV2)->Unit(benchmark::kMicrosecond);

std::vector<bo::ObjectivePoint> random_cloud(int n, Rng& rng) {
    std::vector<bo::ObjectivePoint> pts;
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(), -rng.uniform()});
    return pts;
}

void BM_HypervolumeSweep(benchmark::State& state) {
    Rng rng(3);
    const auto pts = random_cloud(static_cast<int>(state.range(0)), rng);
    const bo::ObjectivePoint ref{0.0, -1.0};
    for (auto _ : state) benchmark::DoNotOptimize(bo::hypervolume_2d(pts, ref));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HypervolumeSweep)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNLogN);

void BM_QehviNeural(benchmark::State& state) {
    training::TrainingConfig tc;
    tc.family = "LV2";
    const auto hp = training::resolve_hyperparams(tc);
    const auto params = models::init_model(models::ModelKind::SANODEP, hp, 7);
    Rng rng(4);
    bo::NeuralSampler sampler(params, {}, 32, hp.t_max, rng);
    const bo::ProblemSpec problem = bo::make_problem("LV2");
    const Eigen::VectorXd x0 = problem.initial_state(problem.design_box.center());
    const std::vector<bo::ObjectivePoint> front{{1.0, -10.0}, {2.0, -14.0}};
    std::vector<double> times;
    for (int k = 1; k <= state.range(0); ++k) times.push_back(1.5 * k);
    for (auto _ : state)
        benchmark::DoNotOptimize(bo::qehvi_with_grad(sampler, problem.objective, x0, times, front, problem.reference, true));
}
BENCHMARK(BM_QehviNeural)->Arg(1)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
