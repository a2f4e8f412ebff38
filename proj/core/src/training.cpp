#include "sanodep/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "sanodep/checkpoint.hpp"
#include "sanodep/errors.hpp"
#include "sanodep/format.hpp"

namespace sanodep::training {

using ad::Matrix;

models::ModelHyperparams resolve_hyperparams(const TrainingConfig& c) {
    models::ModelHyperparams hp = c.hp;
    const zoo::Family fam = zoo::family_from_string(c.family);
    const zoo::FamilySpec& fs = zoo::family_spec(fam);
    hp.family = zoo::to_string(fam);
    hp.state_dim = fs.state_dim;
    hp.t0 = fs.t0;
    hp.t_max = fs.t_max;
    hp.solver_step = (fs.t_max - fs.t0) / static_cast<double>((c.n_grid - 1) * c.solver_substeps);
    hp.param_dim = c.kind == ModelKind::PISANODEP ? zoo::param_dim(fam) : 0;
    if (c.kind == ModelKind::PISANODEP && fam == zoo::Family::GPField)
        throw ConfigError("PISANODEP needs a family with a kinetic form");
    return hp;
}

void validate(const TrainingConfig& c) {
    resolve_hyperparams(c);
    if (c.lambda < 0.0 || c.lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");
    if (c.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (c.epochs < 1 || c.steps_per_epoch < 1) throw ConfigError("epochs and steps_per_epoch must be >= 1");
    if (c.n_sys < 1 || c.n_x0 < 1) throw ConfigError("n_sys and n_x0 must be >= 1");
    if (c.n_grid < 2) throw ConfigError("n_grid must be >= 2");
    if (c.solver_substeps < 1) throw ConfigError("solver_substeps must be >= 1");
    if (c.episode.m_max > c.n_grid || c.episode.m_max + c.episode.n_max > c.n_grid)
        throw ConfigError("episode sizes exceed the time grid");
    if (c.grad_clip <= 0.0) throw ConfigError("grad_clip must be positive");
    if (c.hp.sigma_lb <= 0.0) throw ConfigError("sigma_lb must be positive");
}

void Adam::step(ModelParameters& params, const ModelParameters& grad, double lr) {
    auto p = models::tensors(params);
    auto g = models::tensors(grad);
    if (p.size() != g.size()) throw DimensionError("Adam: gradient layout differs from parameters");
    if (m_.empty()) {
        for (const auto& [name, w] : p) {
            m_.push_back(Matrix::Zero(w->rows(), w->cols()));
            v_.push_back(Matrix::Zero(w->rows(), w->cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Matrix& gi = *g[i].second;
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * gi;
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * gi.cwiseProduct(gi);
        *p[i].second -= (lr * (m_[i] / c1).array() / ((v_[i] / c2).array().sqrt() + eps_)).matrix();
    }
}

double clip_gradient(ModelParameters& grad, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, m] : models::tensors(grad)) sq += m->squaredNorm();
    const double norm = std::sqrt(sq);
    if (std::isfinite(norm) && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& [name, m] : models::tensors(grad)) *m *= s;
    }
    return norm;
}

namespace {

void add_into(ModelParameters& acc, const ModelParameters& g) {
    auto a = models::tensors(acc);
    auto b = models::tensors(g);
    for (std::size_t i = 0; i < a.size(); ++i) *a[i].second += *b[i].second;
}

void scale_all(ModelParameters& g, double s) {
    for (auto& [name, m] : models::tensors(g)) *m *= s;
}

ModelParameters zeros_like(const ModelParameters& p) {
    ModelParameters z = p;
    for (auto& [name, m] : models::tensors(z)) m->setZero();
    return z;
}

}  // namespace

SystemLoss system_loss(const ModelParameters& params, const zoo::TrajectorySet& set,
                       std::vector<zoo::Episode> episodes, Rng& rng) {
    SystemLoss out;
    for (;;) {
        if (episodes.empty()) {
            out.grad = zeros_like(params);
            return out;
        }
        const models::EpisodeBatch batch = models::make_episode_batch(params, set, episodes);
        const models::EpisodeNoise noise = models::draw_episode_noise(params, batch.n_episodes, rng);
        ad::Tape tape;
        models::BoundModel m(tape, params, true);
        const models::LossTerms L = models::episode_loss(m, batch, noise);
        const Matrix& tot = L.total.value();
        std::vector<zoo::Episode> kept;
        for (Eigen::Index e = 0; e < tot.cols(); ++e)
            if (std::isfinite(tot(0, e))) kept.push_back(episodes[static_cast<std::size_t>(e)]);
        if (kept.size() != episodes.size()) {
            out.dropped += static_cast<int>(episodes.size() - kept.size());
            episodes = std::move(kept);
            continue;
        }
        tape.backward(ad::sum(L.total));
        out.grad = m.gradients();
        out.n_episodes = static_cast<int>(episodes.size());
        for (const auto& ep : episodes) out.forecast += ep.forecast ? 1 : 0;
        out.total = tot.sum();
        out.reconstruction = L.reconstruction.value().sum();
        out.kl_u = L.kl_u.value().sum();
        out.kl_l0 = L.kl_l0.value().sum();
        out.param_nll = L.param_nll.value().sum();
        return out;
    }
}

TrainingResult train(const TrainingConfig& config, const StepCallback& on_step) {
    validate(config);
    const models::ModelHyperparams hp = resolve_hyperparams(config);
    const zoo::Family fam = zoo::family_from_string(config.family);
    const std::vector<double> grid = zoo::family_grid(fam, config.n_grid);
    zoo::EpisodeConfig ec = config.episode;
    ec.forecast_prob = config.lambda;

    TrainingResult result;
    result.params = models::init_model(config.kind, hp, config.seed);
    Rng root(config.seed);
    Rng data_rng = root.split(0x64617461);
    Rng noise_rng = root.split(0x6e6f6973);
    Adam adam(config.beta1, config.beta2, config.adam_eps);
    double lr = config.learning_rate;
    int consecutive_skips = 0;

    std::ofstream log;
    if (!config.log_path.empty()) {
        log.open(config.log_path, std::ios::binary);
        if (!log) throw ConfigError("cannot open training log " + config.log_path.string());
    }
    if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

    int step = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double epoch_sum = 0.0;
        int epoch_n = 0;
        for (int s = 0; s < config.steps_per_epoch; ++s, ++step) {
            const auto t_start = std::chrono::steady_clock::now();
            StepRecord rec;
            rec.step = step;
            rec.epoch = epoch;
            ModelParameters grad = zeros_like(result.params);
            double tot = 0.0, rc = 0.0, ku = 0.0, kl = 0.0, pn = 0.0;
            for (int j = 0; j < config.n_sys; ++j) {
                zoo::TrajectorySet set = zoo::simulate_system_trajectories(fam, config.n_x0, grid, data_rng);
                std::vector<zoo::Episode> eps = zoo::sample_episode_batch(set, ec, data_rng);
                SystemLoss sl = system_loss(result.params, set, std::move(eps), noise_rng);
                add_into(grad, sl.grad);
                rec.n_episodes += sl.n_episodes;
                rec.n_forecast += sl.forecast;
                rec.dropped_episodes += sl.dropped;
                tot += sl.total;
                rc += sl.reconstruction;
                ku += sl.kl_u;
                kl += sl.kl_l0;
                pn += sl.param_nll;
            }
            const double n = std::max(1, rec.n_episodes);
            rec.loss = tot / n;
            rec.reconstruction = rc / n;
            rec.kl_u = ku / n;
            rec.kl_l0 = kl / n;
            rec.param_nll = pn / n;
            scale_all(grad, 1.0 / n);
            rec.grad_norm = clip_gradient(grad, config.grad_clip);
            if (rec.n_episodes == 0 || !std::isfinite(rec.loss) || !std::isfinite(rec.grad_norm)) {
                rec.skipped = true;
                ++result.skipped_steps;
                if (++consecutive_skips >= config.max_consecutive_skips) {
                    lr *= 0.5;
                    consecutive_skips = 0;
                    log_warning("training: " + std::to_string(config.max_consecutive_skips) +
                                " consecutive non-finite steps, learning rate halved to " + format_double(lr));
                }
            } else {
                consecutive_skips = 0;
                adam.step(result.params, grad, lr);
                epoch_sum += rec.loss;
                ++epoch_n;
            }
            rec.learning_rate = lr;
            rec.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
            if (log) {
                nlohmann::json j{{"step", rec.step},
                                 {"epoch", rec.epoch},
                                 {"n_episodes", rec.n_episodes},
                                 {"forecast_draws", rec.n_forecast},
                                 {"dropped_episodes", rec.dropped_episodes},
                                 {"skipped", rec.skipped},
                                 {"loss", rec.loss},
                                 {"reconstruction", rec.reconstruction},
                                 {"kl_u", rec.kl_u},
                                 {"kl_l0", rec.kl_l0},
                                 {"param_nll", rec.param_nll},
                                 {"grad_norm", rec.grad_norm},
                                 {"learning_rate", rec.learning_rate},
                                 {"wall_ms", rec.wall_ms}};
                log << j.dump() << '\n';
            }
            if (on_step) on_step(rec);
            result.steps.push_back(rec);
        }
        result.epoch_loss.push_back(epoch_n ? epoch_sum / epoch_n : std::numeric_limits<double>::quiet_NaN());
        if (!config.checkpoint_dir.empty() && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%04d.json", epoch);
            models::save_checkpoint(result.params, config.checkpoint_dir / name);
        }
    }
    if (!config.checkpoint_dir.empty()) models::save_checkpoint(result.params, config.checkpoint_dir / "final.json");
    return result;
}

}  // namespace sanodep::training
