#include "sanodep/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sanodep/checkpoint.hpp"
#include "sanodep/errors.hpp"
#include "sanodep/format.hpp"
#include "sanodep/gp.hpp"
#include "sanodep/surrogates.hpp"

namespace sanodep::bench {

using nlohmann::json;
using models::ModelKind;
using models::ModelParameters;

// ------------------------------------------------------------ config

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + where);
}

void read(const json& j, const char* key, int& out, const std::string& where) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    out = j[key].get<int>();
}

void read(const json& j, const char* key, std::uint64_t& out, const std::string& where) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned()) throw ConfigError(where + "." + key + ": expected a non-negative integer");
    out = j[key].get<std::uint64_t>();
}

void read(const json& j, const char* key, double& out, const std::string& where) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
    out = j[key].get<double>();
}

void read(const json& j, const char* key, bool& out, const std::string& where) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
    out = j[key].get<bool>();
}

void read(const json& j, const char* key, std::string& out, const std::string& where) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw ConfigError(where + "." + key + ": expected a string");
    out = j[key].get<std::string>();
}

template <class T>
void read_list(const json& j, const char* key, std::vector<T>& out, const std::string& where) {
    if (!j.contains(key)) return;
    const json& a = j[key];
    if (!a.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    std::vector<T> v;
    for (const auto& e : a) {
        bool ok;
        if constexpr (std::is_same_v<T, std::string>)
            ok = e.is_string();
        else if constexpr (std::is_same_v<T, std::uint64_t>)
            ok = e.is_number_unsigned();
        else
            ok = e.is_number_integer();
        if (!ok) throw ConfigError(where + "." + key + ": ill-typed element");
        v.push_back(e.get<T>());
    }
    out = std::move(v);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    check_keys(j,
               {"mode", "family", "models", "lambda", "seeds", "training", "evaluation", "problem", "estimation",
                "checkpoints", "train_missing", "out_dir"},
               "config");
    read(j, "mode", c.mode, "config");
    read(j, "family", c.family, "config");
    read_list(j, "models", c.models, "config");
    read(j, "lambda", c.lambda, "config");
    read_list(j, "seeds", c.seeds, "config");
    read(j, "train_missing", c.train_missing, "config");
    read(j, "out_dir", c.out_dir, "config");
    if (j.contains("training")) {
        const json& t = j["training"];
        const std::string w = "training";
        check_keys(t,
                   {"epochs", "steps_per_epoch", "n_sys", "n_x0", "n_grid", "solver_substeps", "learning_rate",
                    "grad_clip", "M_max", "m_max", "n_max"},
                   w);
        auto& s = c.training;
        read(t, "epochs", s.epochs, w);
        read(t, "steps_per_epoch", s.steps_per_epoch, w);
        read(t, "n_sys", s.n_sys, w);
        read(t, "n_x0", s.n_x0, w);
        read(t, "n_grid", s.n_grid, w);
        read(t, "solver_substeps", s.solver_substeps, w);
        read(t, "learning_rate", s.learning_rate, w);
        read(t, "grad_clip", s.grad_clip, w);
        read(t, "M_max", s.M_max, w);
        read(t, "m_max", s.m_max, w);
        read(t, "n_max", s.n_max, w);
    }
    if (j.contains("evaluation")) {
        const json& e = j["evaluation"];
        const std::string w = "evaluation";
        check_keys(e,
                   {"test_systems", "trajectories_per_system", "context_counts", "scenarios", "n_samples", "m_min",
                    "m_max", "test_seed"},
                   w);
        auto& s = c.evaluation;
        read(e, "test_systems", s.test_systems, w);
        read(e, "trajectories_per_system", s.trajectories_per_system, w);
        read_list(e, "context_counts", s.context_counts, w);
        read_list(e, "scenarios", s.scenarios, w);
        read(e, "n_samples", s.n_samples, w);
        read(e, "m_min", s.m_min, w);
        read(e, "m_max", s.m_max, w);
        read(e, "test_seed", s.test_seed, w);
    }
    if (j.contains("problem")) {
        const json& p = j["problem"];
        const std::string w = "problem";
        check_keys(p, {"name", "budget", "n_mc", "restarts", "iterations", "restarts_per_n"}, w);
        auto& s = c.problem;
        read(p, "name", s.name, w);
        read(p, "budget", s.budget, w);
        read(p, "n_mc", s.n_mc, w);
        read(p, "restarts", s.restarts, w);
        read(p, "iterations", s.iterations, w);
        read(p, "restarts_per_n", s.restarts_per_n, w);
    }
    if (j.contains("estimation")) {
        const json& p = j["estimation"];
        const std::string w = "estimation";
        check_keys(p, {"test_systems", "context_counts", "context_points", "n_samples", "test_seed"}, w);
        auto& s = c.estimation;
        read(p, "test_systems", s.test_systems, w);
        read_list(p, "context_counts", s.context_counts, w);
        read(p, "context_points", s.context_points, w);
        read(p, "n_samples", s.n_samples, w);
        read(p, "test_seed", s.test_seed, w);
    }
    if (j.contains("checkpoints")) {
        const json& cp = j["checkpoints"];
        if (!cp.is_object()) throw ConfigError("checkpoints: expected an object");
        for (const auto& [key, value] : cp.items()) {
            if (!value.is_string()) throw ConfigError("checkpoints." + key + ": expected a path string");
            c.checkpoints[key] = value.get<std::string>();
        }
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

bool is_neural(const std::string& m) {
    return m == "NP" || m == "NODEP" || m == "SANODEP" || m == "PISANODEP" || m == "PI-SANODEP";
}

json config_json(const ExperimentConfig& c, bool with_out_dir) {
    const auto& t = c.training;
    const auto& e = c.evaluation;
    const auto& p = c.problem;
    const auto& s = c.estimation;
    json j{{"mode", c.mode},
           {"family", c.family},
           {"models", c.models},
           {"lambda", c.lambda},
           {"seeds", c.seeds},
           {"train_missing", c.train_missing},
           {"training",
            {{"epochs", t.epochs},
             {"steps_per_epoch", t.steps_per_epoch},
             {"n_sys", t.n_sys},
             {"n_x0", t.n_x0},
             {"n_grid", t.n_grid},
             {"solver_substeps", t.solver_substeps},
             {"learning_rate", t.learning_rate},
             {"grad_clip", t.grad_clip},
             {"M_max", t.M_max},
             {"m_max", t.m_max},
             {"n_max", t.n_max}}},
           {"evaluation",
            {{"test_systems", e.test_systems},
             {"trajectories_per_system", e.trajectories_per_system},
             {"context_counts", e.context_counts},
             {"scenarios", e.scenarios},
             {"n_samples", e.n_samples},
             {"m_min", e.m_min},
             {"m_max", e.m_max},
             {"test_seed", e.test_seed}}},
           {"problem",
            {{"name", p.name.empty() ? c.family : p.name},
             {"budget", p.budget},
             {"n_mc", p.n_mc},
             {"restarts", p.restarts},
             {"iterations", p.iterations},
             {"restarts_per_n", p.restarts_per_n}}},
           {"estimation",
            {{"test_systems", s.test_systems},
             {"context_counts", s.context_counts},
             {"context_points", s.context_points},
             {"n_samples", s.n_samples},
             {"test_seed", s.test_seed}}},
           {"checkpoints", c.checkpoints}};
    if (with_out_dir) j["out_dir"] = c.out_dir;
    return j;
}

}  // namespace

std::string to_json(const ExperimentConfig& c) { return config_json(c, true).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& c) { return hash_hex(config_json(c, false).dump()); }

void validate(const ExperimentConfig& c) {
    static const std::vector<std::string> modes{"train", "evaluate", "optimize", "report"};
    if (std::find(modes.begin(), modes.end(), c.mode) == modes.end()) throw ConfigError("unknown mode: " + c.mode);
    try {
        zoo::family_from_string(c.family);
    } catch (const std::exception&) {
        throw ConfigError("unknown family: " + c.family);
    }
    if (c.models.empty()) throw ConfigError("models must not be empty");
    for (const auto& m : c.models)
        if (!is_neural(m) && m != "GP" && m != "Random") throw ConfigError("unknown model: " + m);
    if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (c.lambda < 0.0 || c.lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");
    const auto& e = c.evaluation;
    if (e.test_systems < 1 || e.n_samples < 1) throw ConfigError("evaluation sizes must be >= 1");
    for (int M : e.context_counts)
        if (M < 0 || M + 1 > e.trajectories_per_system)
            throw ConfigError("evaluation.context_counts need trajectories_per_system > M");
    for (const auto& s : e.scenarios)
        if (s != "forecast" && s != "interpolate") throw ConfigError("unknown scenario: " + s);
    if (e.m_min < 1 || e.m_max < e.m_min) throw ConfigError("evaluation m range invalid");
    if (c.problem.budget < 1 || c.problem.n_mc < 1 || c.problem.restarts < 1) throw ConfigError("problem sizes must be >= 1");
    for (int M : c.estimation.context_counts)
        if (M < 1) throw ConfigError("estimation.context_counts must be >= 1");
    if (c.estimation.context_points < 1) throw ConfigError("estimation.context_points must be >= 1");
}

training::TrainingConfig training_config(const ExperimentConfig& c, ModelKind kind, std::uint64_t seed) {
    training::TrainingConfig t;
    t.kind = kind;
    t.family = c.family;
    t.lambda = c.lambda;
    t.epochs = c.training.epochs;
    t.steps_per_epoch = c.training.steps_per_epoch;
    t.n_sys = c.training.n_sys;
    t.n_x0 = c.training.n_x0;
    t.n_grid = c.training.n_grid;
    t.solver_substeps = c.training.solver_substeps;
    t.learning_rate = c.training.learning_rate;
    t.grad_clip = c.training.grad_clip;
    t.episode.M_max = c.training.M_max;
    t.episode.m_max = c.training.m_max;
    t.episode.n_max = c.training.n_max;
    t.seed = seed;
    training::validate(t);
    return t;
}

namespace {

std::filesystem::path default_checkpoint(const ExperimentConfig& c, ModelKind kind, std::uint64_t seed) {
    json t = config_json(c, false)["training"];
    t["lambda"] = c.lambda;
    const std::string tag = hash_hex(t.dump()).substr(0, 8);
    return std::filesystem::path(c.out_dir) / "checkpoints" /
           (models::to_string(kind) + "_" + c.family + "_seed" + std::to_string(seed) + "_" + tag + ".json");
}

ModelParameters train_and_save(const ExperimentConfig& c, ModelKind kind, std::uint64_t seed,
                               std::vector<double>* epoch_loss) {
    training::TrainingConfig t = training_config(c, kind, seed);
    const auto path = default_checkpoint(c, kind, seed);
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::create_directories(std::filesystem::path(c.out_dir) / "logs");
    t.log_path = std::filesystem::path(c.out_dir) / "logs" / (path.stem().string() + ".jsonl");
    training::TrainingResult r = training::train(t);
    models::save_checkpoint(r.params, path);
    if (epoch_loss) *epoch_loss = r.epoch_loss;
    return r.params;
}

}  // namespace

ModelParameters obtain_model(const ExperimentConfig& c, ModelKind kind, std::uint64_t seed) {
    const std::string name = models::to_string(kind);
    for (const std::string& key : {name + "@" + std::to_string(seed), name}) {
        const auto it = c.checkpoints.find(key);
        if (it != c.checkpoints.end()) {
            if (!std::filesystem::exists(it->second)) throw ConfigError("missing checkpoint: " + it->second);
            ModelParameters p = models::load_checkpoint(it->second, kind);
            if (p.hp.family != zoo::to_string(zoo::family_from_string(c.family)))
                throw ConfigError("checkpoint " + it->second + " was trained on " + p.hp.family);
            return p;
        }
    }
    const auto path = default_checkpoint(c, kind, seed);
    if (std::filesystem::exists(path)) return models::load_checkpoint(path, kind);
    if (!c.train_missing) throw ConfigError("no checkpoint for " + name + " seed " + std::to_string(seed));
    return train_and_save(c, kind, seed, nullptr);
}

// ------------------------------------------------------------ evaluation

std::vector<zoo::TrajectorySet> make_test_set(zoo::Family family, int n_systems, int n_trajectories, int n_grid,
                                              std::uint64_t seed) {
    Rng rng(seed);
    const auto grid = zoo::family_grid(family, n_grid);
    std::vector<zoo::TrajectorySet> out;
    for (int s = 0; s < n_systems; ++s) out.push_back(zoo::simulate_system_trajectories(family, n_trajectories, grid, rng));
    return out;
}

namespace {

std::vector<int> pick(int lo, int hi, int k, Rng& rng) {
    std::vector<int> pool(static_cast<std::size_t>(hi - lo));
    std::iota(pool.begin(), pool.end(), lo);
    k = std::min<int>(k, static_cast<int>(pool.size()));
    for (int i = 0; i < k; ++i)
        std::swap(pool[static_cast<std::size_t>(i)],
                  pool[static_cast<std::size_t>(rng.uniform_int(i, static_cast<std::int64_t>(pool.size()) - 1))]);
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

EvalCase make_eval_case(const zoo::TrajectorySet& set, int M, bool forecast, int m_min, int m_max, Rng& rng) {
    const int n_traj = static_cast<int>(set.trajectories.size());
    const int n_grid = static_cast<int>(set.t_grid.size());
    if (M + 1 > n_traj) throw PreconditionError("make_eval_case: not enough trajectories");
    EvalCase c;
    for (int l = 1; l <= M; ++l) {
        const int m = static_cast<int>(rng.uniform_int(m_min, m_max));
        c.input.context.push_back(zoo::observe(set.trajectories[static_cast<std::size_t>(l)], pick(0, n_grid, m, rng)));
    }
    std::vector<int> ctx{0};
    if (!forecast) {
        const int m = static_cast<int>(rng.uniform_int(m_min, m_max));
        for (int i : pick(1, n_grid, m - 1, rng)) ctx.push_back(i);
    }
    const zoo::Trajectory& tr = set.trajectories.front();
    c.input.current = zoo::observe(tr, ctx);
    std::vector<int> targets;
    for (int i = 0; i < n_grid; ++i)
        if (!std::binary_search(ctx.begin(), ctx.end(), i)) targets.push_back(i);
    c.truth.resize(tr.x0.size(), static_cast<Eigen::Index>(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k) {
        c.target_times.push_back(set.t_grid[static_cast<std::size_t>(targets[k])]);
        c.truth.col(static_cast<Eigen::Index>(k)) = tr.states[static_cast<std::size_t>(targets[k])];
    }
    return c;
}

namespace {

models::PredictiveSamples gp_predict(const EvalCase& c, Rng& rng) {
    std::vector<const zoo::ObservedTrajectory*> all;
    for (const auto& o : c.input.context) all.push_back(&o);
    all.push_back(&c.input.current);
    Eigen::Index n = 0;
    for (const auto* o : all) n += static_cast<Eigen::Index>(o->size());
    const auto d = c.input.current.x0.size();
    Eigen::MatrixXd X(n, d + 1), Y(n, d);
    Eigen::Index r = 0;
    for (const auto* o : all)
        for (std::size_t i = 0; i < o->size(); ++i, ++r) {
            X.row(r).head(d) = o->x0.transpose();
            X(r, d) = o->times[i];
            Y.row(r) = o->states[i].transpose();
        }
    const gp::IndependentGP g = gp::fit_independent(X, Y, rng);
    Eigen::MatrixXd Xq(static_cast<Eigen::Index>(c.target_times.size()), d + 1);
    for (std::size_t k = 0; k < c.target_times.size(); ++k) {
        Xq.row(static_cast<Eigen::Index>(k)).head(d) = c.input.current.x0.transpose();
        Xq(static_cast<Eigen::Index>(k), d) = c.target_times[k];
    }
    Eigen::MatrixXd mu, var;
    g.posterior(Xq, mu, var);
    models::PredictiveSamples s;
    s.times = c.target_times;
    s.u = Eigen::MatrixXd::Zero(1, 1);
    for (Eigen::Index k = 0; k < Xq.rows(); ++k) {
        s.mean.push_back(mu.row(k).transpose());
        Eigen::VectorXd sd(d);
        for (Eigen::Index j = 0; j < d; ++j)
            sd(j) = std::sqrt(var(k, j) + g.outputs[static_cast<std::size_t>(j)].hyperparams().noise_variance);
        s.std.push_back(sd);
    }
    return s;
}

}  // namespace

EvalScore evaluate(const std::string& model, const ModelParameters* params,
                   const std::vector<zoo::TrajectorySet>& test_set, int M, bool forecast,
                   const EvaluationSection& section) {
    if (model != "GP" && !params) throw PreconditionError("evaluate: neural model needs parameters");
    EvalScore score;
    const Rng base(section.test_seed);
    for (std::size_t s = 0; s < test_set.size(); ++s) {
        Rng case_rng = base.split(static_cast<std::uint64_t>(s) * 4096u + static_cast<std::uint64_t>(M) * 2u +
                                  (forecast ? 1u : 0u));
        EvalCase c = make_eval_case(test_set[s], M, forecast, section.m_min, section.m_max, case_rng);
        Rng pred_rng = case_rng.split(0x70726564);
        models::PredictiveSamples ps;
        if (model == "GP") {
            ps = gp_predict(c, pred_rng);
        } else {
            if (params->kind == ModelKind::NODEP) c.input.context.clear();
            ps = models::predict(*params, c.input, c.target_times, section.n_samples, pred_rng);
        }
        score.mse += models::mean_squared_error(ps, c.truth);
        score.nll += models::mixture_nll(ps, c.truth);
        ++score.n_trajectories;
    }
    score.mse /= static_cast<double>(score.n_trajectories);
    score.nll /= static_cast<double>(score.n_trajectories);
    return score;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

std::string canonical_model(const std::string& m) {
    return is_neural(m) ? models::to_string(models::kind_from_string(m)) : m;
}

}  // namespace

std::vector<MetricsRow> run_model_eval(const ExperimentConfig& c) {
    const auto& e = c.evaluation;
    const auto test = make_test_set(zoo::family_from_string(c.family), e.test_systems, e.trajectories_per_system,
                                    c.training.n_grid, e.test_seed);
    std::vector<MetricsRow> rows;
    for (const auto& raw : c.models) {
        if (raw == "Random") continue;
        const std::string model = canonical_model(raw);
        std::vector<ModelParameters> per_seed;
        if (model != "GP")
            for (auto seed : c.seeds) per_seed.push_back(obtain_model(c, models::kind_from_string(model), seed));
        for (int M : e.context_counts)
            for (const auto& scenario : e.scenarios) {
                std::vector<double> mse, nll;
                int n_traj = 0;
                for (std::size_t k = 0; k < c.seeds.size(); ++k) {
                    EvaluationSection sec = e;
                    if (model == "GP") sec.test_seed = e.test_seed ^ c.seeds[k];
                    const EvalScore s = evaluate(model, model == "GP" ? nullptr : &per_seed[k], test, M,
                                                 scenario == "forecast", sec);
                    mse.push_back(s.mse);
                    nll.push_back(s.nll);
                    n_traj += s.n_trajectories;
                }
                MetricsRow r;
                r.model = model;
                r.context_trajectories = M;
                r.scenario = scenario;
                std::tie(r.mse_mean, r.mse_std) = mean_std(mse);
                std::tie(r.nll_mean, r.nll_std) = mean_std(nll);
                r.n_seeds = static_cast<int>(c.seeds.size());
                r.n_trajectories = n_traj;
                rows.push_back(r);
            }
    }
    return rows;
}

// ------------------------------------------------------------ BO

bo::ProblemSpec resolve_problem(const ExperimentConfig& c) {
    bo::ProblemSpec p = bo::make_problem(c.problem.name.empty() ? c.family : c.problem.name);
    p.budget = c.problem.budget;
    return p;
}

std::vector<BORun> run_bo_benchmark(const ExperimentConfig& c) {
    const bo::ProblemSpec problem = resolve_problem(c);
    const bo::Observer observer = bo::true_system_observer(problem);
    bo::BOOptions opt;
    opt.n_mc = c.problem.n_mc;
    opt.initial.restarts = c.problem.restarts;
    opt.schedule.iterations = c.problem.iterations;
    opt.schedule.restarts_per_n = c.problem.restarts_per_n;
    std::vector<BORun> runs;
    for (const auto& raw : c.models) {
        const std::string model = canonical_model(raw);
        for (auto seed : c.seeds) {
            Rng rng(seed);
            BORun run;
            run.model = model;
            run.seed = seed;
            if (model == "Random") {
                run.history = bo::run_random(problem, observer, rng);
            } else if (model == "GP") {
                const int d = zoo::state_dim(problem.family);
                bo::SamplerFactory f = [&](const std::vector<zoo::ObservedTrajectory>& ctx, Rng& r) {
                    return std::make_unique<bo::GPSampler>(ctx, d, problem.t0, opt.n_mc, r);
                };
                run.history = bo::run_bo(problem, f, observer, opt, rng);
            } else {
                if (zoo::family_from_string(c.family) != problem.family)
                    throw ConfigError("problem " + problem.name + " needs a model trained on its family");
                const ModelParameters params = obtain_model(c, models::kind_from_string(model), seed);
                bo::SamplerFactory f = [&](const std::vector<zoo::ObservedTrajectory>& ctx, Rng& r) {
                    return std::make_unique<bo::NeuralSampler>(params, ctx, opt.n_mc, problem.t_max, r);
                };
                run.history = bo::run_bo(problem, f, observer, opt, rng);
            }
            run.history.method = model;
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

// ------------------------------------------------------------ estimation

std::vector<ParamRow> run_param_estimation(const ExperimentConfig& c, std::uint64_t seed) {
    const zoo::Family fam = zoo::family_from_string(c.family);
    const auto& s = c.estimation;
    const ModelParameters params = obtain_model(c, ModelKind::PISANODEP, seed);
    const zoo::FamilySpec& fs = zoo::family_spec(fam);
    const int max_M = *std::max_element(s.context_counts.begin(), s.context_counts.end());
    const auto test = make_test_set(fam, s.test_systems, max_M, c.training.n_grid, s.test_seed);
    const Rng base(s.test_seed);
    std::vector<ParamRow> rows;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const auto& set = test[k];
        const int n_grid = static_cast<int>(set.t_grid.size());
        for (int M : s.context_counts) {
            Rng rng = base.split(static_cast<std::uint64_t>(k) * 4096u + static_cast<std::uint64_t>(M));
            std::vector<zoo::ObservedTrajectory> ctx;
            for (int l = 0; l < M; ++l) {
                std::vector<int> idx{0};
                for (int i : pick(1, n_grid, s.context_points - 1, rng)) idx.push_back(i);
                ctx.push_back(zoo::observe(set.trajectories[static_cast<std::size_t>(l)], idx));
            }
            const auto t_start = std::chrono::steady_clock::now();
            const models::ParameterPosterior post = models::estimate_parameters(params, ctx, s.n_samples, rng);
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
            bool in_support = true;
            for (Eigen::Index j = 0; j < post.samples.cols(); ++j)
                in_support = in_support && fs.param_support.contains(post.samples.col(j));
            for (std::size_t p = 0; p < post.names.size(); ++p) {
                const auto i = static_cast<Eigen::Index>(p);
                ParamRow r;
                r.system = static_cast<int>(k);
                r.context_trajectories = M;
                r.parameter = post.names[p];
                r.truth = set.system.params(i);
                r.mean = post.mean(i);
                r.q025 = post.q025(i);
                r.q500 = post.q500(i);
                r.q975 = post.q975(i);
                r.prior_mean = fs.param_support.center()(i);
                r.inside_95 = r.truth >= r.q025 && r.truth <= r.q975;
                r.samples_in_support = in_support;
                r.latency_ms = ms;
                rows.push_back(r);
            }
        }
    }
    return rows;
}

// ------------------------------------------------------------ reports

Results run(const ExperimentConfig& c) {
    validate(c);
    Results r;
    if (c.mode == "train") {
        for (const auto& raw : c.models) {
            if (!is_neural(raw)) continue;
            const ModelKind kind = models::kind_from_string(raw);
            for (auto seed : c.seeds) {
                TrainingCurve curve;
                curve.model = models::to_string(kind);
                curve.seed = seed;
                train_and_save(c, kind, seed, &curve.epoch_loss);
                r.training.push_back(std::move(curve));
            }
        }
    } else if (c.mode == "evaluate") {
        r.metrics = run_model_eval(c);
    } else if (c.mode == "optimize") {
        r.bo = run_bo_benchmark(c);
    } else {
        for (auto seed : c.seeds) {
            auto rows = run_param_estimation(c, seed);
            r.params.insert(r.params.end(), rows.begin(), rows.end());
        }
    }
    return r;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out) throw ConfigError("write failed: " + p.string());
}

std::string fd(double v) { return format_double(v); }

}  // namespace

void emit_report(const ExperimentConfig& c, const Results& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string hash = config_hash(c);
    {
        const auto p = dir / "config_resolved.json";
        auto out = open_out(p);
        json j{{"config_hash", hash}, {"config", config_json(c, false)}};
        out << j.dump(2) << '\n';
        finish(out, p);
    }
    std::ostringstream timing;
    timing << "section,model,seed,index,wall_ms\n";
    bool have_timing = false;

    if (!r.training.empty()) {
        const auto p = dir / "training_loss.csv";
        auto out = open_out(p);
        out << "# config_hash=" << hash << "\nmodel,seed,epoch,mean_loss\n";
        for (const auto& t : r.training)
            for (std::size_t e = 0; e < t.epoch_loss.size(); ++e)
                out << t.model << ',' << t.seed << ',' << e + 1 << ',' << fd(t.epoch_loss[e]) << '\n';
        finish(out, p);
    }
    if (!r.metrics.empty()) {
        const auto p = dir / "metrics.csv";
        auto out = open_out(p);
        out << "# config_hash=" << hash
            << "\nmodel,context_trajectories,scenario,mse_mean,mse_std,nll_mean,nll_std,n_seeds,n_trajectories\n";
        for (const auto& m : r.metrics)
            out << m.model << ',' << m.context_trajectories << ',' << m.scenario << ',' << fd(m.mse_mean) << ','
                << fd(m.mse_std) << ',' << fd(m.nll_mean) << ',' << fd(m.nll_std) << ',' << m.n_seeds << ','
                << m.n_trajectories << '\n';
        finish(out, p);
    }
    if (!r.bo.empty()) {
        const bo::ProblemSpec problem = resolve_problem(c);
        {
            const auto p = dir / "bo_history.jsonl";
            auto out = open_out(p);
            for (const auto& run : r.bo)
                for (const auto& rec : run.history.records) {
                    std::vector<double> state(rec.state.data(), rec.state.data() + rec.state.size());
                    json j{{"model", run.model},
                           {"seed", run.seed},
                           {"trajectory_id", rec.trajectory_id},
                           {"query_index", rec.query_index},
                           {"t", rec.t},
                           {"state", state},
                           {"g_value", rec.g_value},
                           {"neg_time", rec.neg_time},
                           {"running_hypervolume", rec.running_hypervolume},
                           {"acq_value", rec.acq_value},
                           {"scaled_time", rec.scaled_time}};
                    out << j.dump() << '\n';
                    timing << "bo," << run.model << ',' << run.seed << ',' << &rec - run.history.records.data() << ','
                           << fd(rec.wall_ms) << '\n';
                    have_timing = true;
                }
            finish(out, p);
        }
        // Per-model curves; shorter runs are padded with their final value.
        std::map<std::string, std::vector<const BORun*>> by_model;
        std::vector<std::string> order;
        for (const auto& run : r.bo) {
            if (!by_model.count(run.model)) order.push_back(run.model);
            by_model[run.model].push_back(&run);
        }
        {
            const auto p = dir / "hv_curve.csv";
            auto out = open_out(p);
            out << "# config_hash=" << hash << "\nmodel,step,mean_scaled_time,mean_hv,std_hv,n_seeds\n";
            for (const auto& model : order) {
                const auto& runs = by_model[model];
                std::size_t len = 0;
                for (const auto* run : runs) len = std::max(len, run->history.records.size());
                for (std::size_t k = 0; k < len; ++k) {
                    std::vector<double> hv, st;
                    for (const auto* run : runs) {
                        const auto& recs = run->history.records;
                        const auto& rec = recs[std::min(k, recs.size() - 1)];
                        hv.push_back(rec.running_hypervolume);
                        st.push_back(rec.scaled_time);
                    }
                    const auto [m, s] = mean_std(hv);
                    out << model << ',' << k << ',' << fd(mean_std(st).first) << ',' << fd(m) << ',' << fd(s) << ','
                        << runs.size() << '\n';
                }
            }
            finish(out, p);
        }
        {
            const auto p = dir / "bo_summary.csv";
            auto out = open_out(p);
            out << "# config_hash=" << hash
                << "\nmodel,final_hv_mean,final_hv_std,n_seeds,schedules_feasible,hv_monotone\n";
            for (const auto& model : order) {
                std::vector<double> hv;
                bool feas = true, mono = true;
                for (const auto* run : by_model[model]) {
                    hv.push_back(run->history.final_hypervolume);
                    feas = feas && bo::schedules_feasible(run->history, problem);
                    mono = mono && bo::hypervolume_monotone(run->history);
                }
                const auto [m, s] = mean_std(hv);
                out << model << ',' << fd(m) << ',' << fd(s) << ',' << hv.size() << ',' << (feas ? 1 : 0) << ','
                    << (mono ? 1 : 0) << '\n';
            }
            finish(out, p);
        }
    }
    if (!r.params.empty()) {
        {
            const auto p = dir / "params_report.csv";
            auto out = open_out(p);
            out << "# config_hash=" << hash
                << "\nsystem,context_trajectories,parameter,truth,mean,q025,q500,q975,prior_mean,inside_95,"
                   "samples_in_support\n";
            for (const auto& row : r.params) {
                out << row.system << ',' << row.context_trajectories << ',' << row.parameter << ',' << fd(row.truth)
                    << ',' << fd(row.mean) << ',' << fd(row.q025) << ',' << fd(row.q500) << ',' << fd(row.q975) << ','
                    << fd(row.prior_mean) << ',' << (row.inside_95 ? 1 : 0) << ','
                    << (row.samples_in_support ? 1 : 0) << '\n';
                timing << "estimation,PISANODEP,," << row.system << ',' << fd(row.latency_ms) << '\n';
                have_timing = true;
            }
            finish(out, p);
        }
        {
            const auto p = dir / "params_summary.csv";
            auto out = open_out(p);
            out << "# config_hash=" << hash
                << "\ncontext_trajectories,mae_posterior_mean,mae_prior_mean,coverage_95,n_rows\n";
            std::map<int, std::array<double, 4>> agg;
            for (const auto& row : r.params) {
                auto& a = agg[row.context_trajectories];
                a[0] += std::abs(row.mean - row.truth);
                a[1] += std::abs(row.prior_mean - row.truth);
                a[2] += row.inside_95 ? 1.0 : 0.0;
                a[3] += 1.0;
            }
            for (const auto& [M, a] : agg)
                out << M << ',' << fd(a[0] / a[3]) << ',' << fd(a[1] / a[3]) << ',' << fd(a[2] / a[3]) << ','
                    << static_cast<int>(a[3]) << '\n';
            finish(out, p);
        }
    }
    if (have_timing) {
        const auto p = dir / "timing.csv";
        auto out = open_out(p);
        out << timing.str();
        finish(out, p);
    }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    std::vector<MetricsRow> rows;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "model,context_trajectories,scenario,mse_mean,mse_std,nll_mean,nll_std,n_seeds,n_trajectories")
                throw FormatError("metrics.csv: unexpected header");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) throw FormatError("metrics.csv: expected 9 columns");
        MetricsRow r;
        r.model = f[0];
        r.context_trajectories = static_cast<int>(parse_int(f[1]));
        r.scenario = f[2];
        r.mse_mean = parse_double(f[3]);
        r.mse_std = parse_double(f[4]);
        r.nll_mean = parse_double(f[5]);
        r.nll_std = parse_double(f[6]);
        r.n_seeds = static_cast<int>(parse_int(f[7]));
        r.n_trajectories = static_cast<int>(parse_int(f[8]));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace sanodep::bench
