#include "sanodep/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sanodep/errors.hpp"

namespace sanodep::models {

using ad::GaussianVar;

namespace {

constexpr double kStdHeadScale = 0.9;
constexpr double kZ975 = 1.959963984540054;

bool neural_ode(ModelKind k) { return k == ModelKind::SANODEP || k == ModelKind::NODEP; }

int u_dim(const ModelParameters& p) {
    return p.kind == ModelKind::PISANODEP ? p.hp.param_dim : p.hp.latent_dynamics_dim;
}

zoo::Family family_of(const ModelParameters& p) { return zoo::family_from_string(p.hp.family); }

}  // namespace

// ---------------------------------------------------------------- BoundModel

BoundModel::BoundModel(ad::Tape& tape, const ModelParameters& params, bool trainable)
    : tape_(&tape), params_(&params) {
    for (const auto& [name, layer] : params.layers) {
        ad::BoundDense b;
        b.weights = trainable ? tape.variable(layer.weights) : tape.constant(layer.weights);
        b.bias = trainable ? tape.variable(layer.bias) : tape.constant(layer.bias);
        b.activation = layer.activation;
        layers_.emplace(name, b);
    }
}

const ad::BoundDense& BoundModel::operator[](const std::string& name) const {
    const auto it = layers_.find(name);
    if (it == layers_.end()) throw StateError("model has no layer '" + name + "'");
    return it->second;
}

ModelParameters BoundModel::gradients() const {
    ModelParameters g = *params_;
    for (auto& [name, layer] : g.layers) {
        const ad::BoundDense& b = layers_.at(name);
        layer.weights = tape_->grad(b.weights);
        layer.bias = tape_->grad(b.bias);
    }
    return g;
}

// ---------------------------------------------------------------- encoder

bool uses_x0_features(const ModelParameters& p) { return p.kind != ModelKind::NODEP && p.hp.augment_x0; }

int point_feature_dim(const ModelParameters& p) {
    return uses_x0_features(p) ? 2 * p.hp.state_dim + 1 : p.hp.state_dim + 1;
}

Matrix point_features(const ModelParameters& p, const ObservedTrajectory& obs) {
    const int d = p.hp.state_dim;
    const bool aug = uses_x0_features(p);
    if (aug && obs.x0.size() != d) throw DimensionError("point_features: x0 dimension mismatch");
    Matrix f(point_feature_dim(p), static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (obs.states[i].size() != d) throw DimensionError("point_features: state dimension mismatch");
        const auto c = static_cast<Eigen::Index>(i);
        f(0, c) = obs.times[i];
        if (aug) {
            f.block(1, c, d, 1) = obs.x0;
            f.block(1 + d, c, d, 1) = obs.states[i];
        } else {
            f.block(1, c, d, 1) = obs.states[i];
        }
    }
    return f;
}

Var embed_points(const BoundModel& m, const Var& features) {
    Var h = ad::dense(m["enc_r.0"], features);
    h = ad::dense(m["enc_r.1"], h);
    return ad::dense(m["enc_r.2"], h);
}

GaussianVar gaussian_head(const BoundModel& m, const std::string& prefix, const Var& hidden) {
    GaussianVar g;
    g.mean = ad::dense(m[prefix + ".mean"], hidden);
    g.std = ad::add_scalar(ad::scale(ad::dense(m[prefix + ".std"], hidden), kStdHeadScale), m.hp().sigma_lb);
    return g;
}

GaussianVar system_posterior(const BoundModel& m, const Var& pooled) {
    return gaussian_head(m, "q_u", ad::dense(m["enc_sys"], pooled));
}

GaussianVar initial_posterior(const BoundModel& m, const Var& initial) {
    if (m.kind() != ModelKind::SANODEP) throw PreconditionError("initial_posterior: SANODEP only");
    Var r = ad::dense(m["enc_init.0"], initial);
    r = ad::dense(m["enc_init.1"], r);
    r = ad::dense(m["enc_init.2"], r);
    return gaussian_head(m, "q_l0", ad::dense(m["init_hidden"], r));
}

GaussianVar initial_posterior_pooled(const BoundModel& m, const Var& pooled) {
    if (m.kind() != ModelKind::NODEP) throw PreconditionError("initial_posterior_pooled: NODEP only");
    return gaussian_head(m, "q_l0", ad::dense(m["init_hidden"], pooled));
}

// ---------------------------------------------------------------- dynamics

LatentDynamics bind_dynamics(const BoundModel& m, const Var& u) {
    LatentDynamics dyn;
    dyn.u = u;
    const ModelHyperparams& hp = m.hp();
    if (neural_ode(m.kind())) {
        const int l = hp.latent_state_dim;
        const auto& ode0 = m["ode.0"];
        const auto& dech = m["dec.hidden"];
        dyn.ode_pre = ad::add_bcast(ad::matmul_cols(ode0.weights, l, u), ode0.bias);
        dyn.dec_pre = ad::add_bcast(ad::matmul_cols(dech.weights, l, u), dech.bias);
    } else if (m.kind() == ModelKind::PISANODEP) {
        const auto& dech = m["dec.hidden"];
        dyn.dec_pre = ad::add_bcast(ad::matmul_cols(dech.weights, hp.state_dim, u), dech.bias);
    } else {
        throw PreconditionError("bind_dynamics: NP has no latent dynamics");
    }
    return dyn;
}

ode::VarField latent_field(const BoundModel& m, const LatentDynamics& dyn) {
    if (m.kind() == ModelKind::PISANODEP) {
        const zoo::Family fam = family_of(m.params());
        const Var u = dyn.u;
        return [fam, u](ad::Tape&, const Var& x, const Var&) { return zoo::kinetic_field(fam, x, u); };
    }
    if (!neural_ode(m.kind())) throw PreconditionError("latent_field: NP has no latent ODE");
    const ad::BoundDense l0 = m["ode.0"];
    const ad::BoundDense l1 = m["ode.1"];
    const ad::BoundDense l2 = m["ode.2"];
    const Var pre = dyn.ode_pre;
    const Eigen::Index t_col = m.hp().latent_state_dim + m.hp().latent_dynamics_dim;
    return [l0, l1, l2, pre, t_col](ad::Tape&, const Var& x, const Var& t) {
        Var h = ad::dense_split(l0, 0, x, pre, t_col, t);
        h = ad::dense(l1, h);
        return ad::dense(l2, h);
    };
}

GaussianVar decode(const BoundModel& m, const LatentDynamics& dyn, const Var& state, const Var& t) {
    const ModelHyperparams& hp = m.hp();
    if (neural_ode(m.kind())) {
        const Eigen::Index t_col = hp.latent_state_dim + hp.latent_dynamics_dim;
        Var hid = ad::dense_split(m["dec.hidden"], 0, state, dyn.dec_pre, t_col, t);
        return gaussian_head(m, "dec", hid);
    }
    if (m.kind() == ModelKind::PISANODEP) {
        const Eigen::Index t_col = hp.state_dim + hp.param_dim;
        Var hid = ad::dense_split(m["dec.hidden"], 0, state, dyn.dec_pre, t_col, t);
        GaussianVar g;
        g.mean = state;
        g.std = ad::add_scalar(ad::scale(ad::dense(m["dec.std"], hid), kStdHeadScale), hp.sigma_lb);
        return g;
    }
    throw PreconditionError("decode: use decode_np for NP");
}

GaussianVar decode_np(const BoundModel& m, const Var& z, const Var& x0, const Var& t) {
    if (m.kind() != ModelKind::NP) throw PreconditionError("decode_np: NP only");
    const ModelHyperparams& hp = m.hp();
    const auto& l0 = m["dec.0"];
    const Eigen::Index D = hp.latent_dynamics_dim;
    Var pre = ad::add_bcast(ad::matmul_cols(l0.weights, D, x0), l0.bias);
    Var hid = ad::dense_split(l0, 0, z, pre, D + hp.state_dim, t);
    hid = ad::dense(m["dec.1"], hid);
    return gaussian_head(m, "dec", hid);
}

Var physical_parameters(const BoundModel& m, const Var& log_u) {
    const zoo::FamilySpec& fs = zoo::family_spec(family_of(m.params()));
    return ad::clip_rows(ad::exp(log_u), fs.param_support.lo, fs.param_support.hi);
}

// ---------------------------------------------------------------- inference

namespace {

Matrix context_features(const ModelParameters& p, const PredictionInput& input) {
    std::vector<Matrix> blocks;
    if (p.kind == ModelKind::NODEP) {
        if (!input.context.empty())
            throw PreconditionError("NODEP conditions on a single trajectory; context must be empty");
    } else {
        for (const auto& obs : input.context) blocks.push_back(point_features(p, obs));
    }
    blocks.push_back(point_features(p, input.current));
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.cols();
    if (n == 0) throw PreconditionError("empty context set");
    Matrix f(point_feature_dim(p), n);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
        f.middleCols(off, b.cols()) = b;
        off += b.cols();
    }
    return f;
}

Matrix initial_column(const ObservedTrajectory& cur) {
    Matrix c(cur.x0.size() + 1, 1);
    c(0, 0) = cur.t0;
    c.block(1, 0, cur.x0.size(), 1) = cur.x0;
    return c;
}

ad::DiagonalGaussian values(const GaussianVar& g) { return {g.mean.value(), g.std.value()}; }

std::vector<int> all_columns(Eigen::Index n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = static_cast<int>(i);
    return v;
}

}  // namespace

EncoderOutput encode_context(const ModelParameters& p, const PredictionInput& input) {
    ad::Tape tape;
    BoundModel m(tape, p, false);
    const Matrix feats = context_features(p, input);
    Var emb = embed_points(m, tape.constant(feats));
    Var pooled = ad::pool_mean(emb, {all_columns(feats.cols())});
    Var h_sys = ad::dense(m["enc_sys"], pooled);
    EncoderOutput out;
    out.r_sys = pooled.value().col(0);
    out.h_sys = h_sys.value().col(0);
    out.q_u = values(gaussian_head(m, "q_u", h_sys));
    if (p.kind == ModelKind::SANODEP) {
        out.q_l0 = values(initial_posterior(m, tape.constant(initial_column(input.current))));
    } else if (p.kind == ModelKind::NODEP) {
        out.q_l0 = values(initial_posterior_pooled(m, pooled));
    }
    return out;
}

PredictiveSamples predict(const ModelParameters& p, const PredictionInput& input, const std::vector<double>& times,
                          int n_samples, Rng& rng) {
    if (n_samples < 1) throw PreconditionError("predict: n_samples must be >= 1");
    if (input.current.x0.size() != p.hp.state_dim) throw DimensionError("predict: x0 dimension mismatch");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < input.current.t0 - 1e-12) throw PreconditionError("predict: target time before t0");
        if (i && times[i] < times[i - 1]) throw PreconditionError("predict: target times must be sorted");
    }
    ad::Tape tape;
    BoundModel m(tape, p, false);
    const Matrix feats = context_features(p, input);
    Var emb = embed_points(m, tape.constant(feats));
    Var pooled = ad::pool_mean(emb, {all_columns(feats.cols())});
    GaussianVar q_u = system_posterior(m, pooled);

    const int S = n_samples;
    const Matrix eps_u = rng.normal_matrix(q_u.mean.rows(), S);
    const Matrix eps_l = rng.normal_matrix(p.hp.latent_state_dim, S);
    Var x0 = tape.constant(input.current.x0.replicate(1, S));

    PredictiveSamples out;
    out.times = times;
    Var u = ad::sample_gaussian_reparam(q_u, eps_u);
    if (p.kind == ModelKind::NP) {
        out.u = u.value();
        for (double t : times) {
            GaussianVar g = decode_np(m, u, x0, tape.scalar(t));
            out.mean.push_back(g.mean.value());
            out.std.push_back(g.std.value());
        }
        return out;
    }

    Var l0;
    if (p.kind == ModelKind::SANODEP) {
        l0 = ad::sample_gaussian_reparam(initial_posterior(m, tape.constant(initial_column(input.current))), eps_l);
    } else if (p.kind == ModelKind::NODEP) {
        l0 = ad::sample_gaussian_reparam(initial_posterior_pooled(m, pooled), eps_l);
    } else {
        u = physical_parameters(m, u);
        l0 = x0;
    }
    out.u = u.value();
    out.l0 = l0.value();
    LatentDynamics dyn = bind_dynamics(m, u);
    ode::BaseGridPath path(tape, latent_field(m, dyn), l0, input.current.t0, p.hp.solver_step);
    for (double t : times) {
        Var tv = tape.scalar(t);
        GaussianVar g = decode(m, dyn, path.at(tv), tv);
        out.mean.push_back(g.mean.value());
        out.std.push_back(g.std.value());
    }
    return out;
}

double mixture_nll(const PredictiveSamples& s, const Matrix& truth) {
    if (truth.cols() != static_cast<Eigen::Index>(s.times.size())) throw DimensionError("mixture_nll: time mismatch");
    if (s.times.empty()) throw PreconditionError("mixture_nll: no target times");
    constexpr double half_log_2pi = 0.91893853320467274178;
    double total = 0.0;
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        const Matrix& mu = s.mean[k];
        const Matrix& sd = s.std[k];
        const auto S = mu.cols();
        Eigen::VectorXd lp(S);
        for (Eigen::Index j = 0; j < S; ++j) {
            const auto z = (truth.col(static_cast<Eigen::Index>(k)) - mu.col(j)).array() / sd.col(j).array();
            lp(j) = (-0.5 * z.square() - sd.col(j).array().log() - half_log_2pi).sum();
        }
        const double mx = lp.maxCoeff();
        const double lse = mx + std::log((lp.array() - mx).exp().sum()) - std::log(static_cast<double>(S));
        total -= lse;
    }
    return total / static_cast<double>(s.times.size());
}

double mean_squared_error(const PredictiveSamples& s, const Matrix& truth) {
    if (truth.cols() != static_cast<Eigen::Index>(s.times.size())) throw DimensionError("mse: time mismatch");
    if (s.times.empty()) throw PreconditionError("mse: no target times");
    double se = 0.0;
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        const Eigen::VectorXd m = s.mean[k].rowwise().mean();
        se += (m - truth.col(static_cast<Eigen::Index>(k))).squaredNorm();
    }
    return se / static_cast<double>(truth.size());
}

ParameterPosterior estimate_parameters(const ModelParameters& p, const std::vector<ObservedTrajectory>& context,
                                       int n_samples, Rng& rng) {
    if (p.kind != ModelKind::PISANODEP) throw PreconditionError("estimate_parameters: PISANODEP only");
    if (context.empty()) throw PreconditionError("estimate_parameters: empty context");
    if (n_samples < 1) throw PreconditionError("estimate_parameters: n_samples must be >= 1");
    PredictionInput in;
    in.context.assign(context.begin(), context.end() - 1);
    in.current = context.back();
    const EncoderOutput enc = encode_context(p, in);
    const zoo::FamilySpec& fs = zoo::family_spec(family_of(p));
    const Eigen::VectorXd lo = fs.param_support.lo;
    const Eigen::VectorXd hi = fs.param_support.hi;
    auto clip = [&](Eigen::VectorXd v) { return v.cwiseMax(lo).cwiseMin(hi).eval(); };

    ParameterPosterior post;
    post.names = fs.param_names;
    post.log_space = enc.q_u;
    const Eigen::VectorXd mu = enc.q_u.mean.col(0);
    const Eigen::VectorXd sd = enc.q_u.std.col(0);
    const Matrix eps = rng.normal_matrix(mu.size(), n_samples);
    post.samples.resize(mu.size(), n_samples);
    for (int j = 0; j < n_samples; ++j)
        post.samples.col(j) = clip((mu + sd.cwiseProduct(eps.col(j))).array().exp().matrix());
    post.mean = post.samples.rowwise().mean();
    post.q025 = clip((mu - kZ975 * sd).array().exp().matrix());
    post.q500 = clip(mu.array().exp().matrix());
    post.q975 = clip((mu + kZ975 * sd).array().exp().matrix());
    return post;
}

// ---------------------------------------------------------------- ELBO

EpisodeBatch make_episode_batch(const ModelParameters& p, const zoo::TrajectorySet& set,
                                const std::vector<zoo::Episode>& episodes) {
    if (episodes.empty()) throw PreconditionError("make_episode_batch: no episodes");
    const int d = p.hp.state_dim;
    if (zoo::state_dim(set.family) != d) throw DimensionError("make_episode_batch: family state dimension mismatch");
    if (p.kind == ModelKind::PISANODEP && set.family != family_of(p))
        throw PreconditionError("make_episode_batch: PISANODEP trained for a different family");
    const bool aug = uses_x0_features(p);
    const int fdim = point_feature_dim(p);
    const int E = static_cast<int>(episodes.size());

    EpisodeBatch b;
    b.n_episodes = E;
    b.t0 = set.t_grid.front();

    std::map<std::pair<int, int>, int> column_of;
    std::vector<std::pair<int, int>> columns;
    auto column = [&](int traj, int idx) {
        const auto key = std::make_pair(traj, idx);
        const auto it = column_of.find(key);
        if (it != column_of.end()) return it->second;
        const int c = static_cast<int>(columns.size());
        column_of.emplace(key, c);
        columns.push_back(key);
        return c;
    };

    std::map<int, int> time_slot;  // grid index -> position in target_times
    for (const auto& ep : episodes)
        for (int i : ep.new_trajectory.target) time_slot.emplace(i, 0);
    int slot = 0;
    for (auto& [idx, s] : time_slot) {
        s = slot++;
        b.target_times.push_back(set.t_grid[static_cast<std::size_t>(idx)]);
    }
    b.target_values.assign(time_slot.size(), Matrix::Zero(d, E));
    b.target_weights.assign(time_slot.size(), Matrix::Zero(1, E));
    b.initial.resize(d + 1, E);
    b.x0.resize(d, E);
    b.target_counts.assign(static_cast<std::size_t>(E), 0);

    for (int e = 0; e < E; ++e) {
        const zoo::Episode& ep = episodes[static_cast<std::size_t>(e)];
        const int k = ep.new_trajectory.trajectory;
        const zoo::Trajectory& tr = set.trajectories.at(static_cast<std::size_t>(k));
        std::vector<int> prior, posterior;
        if (p.kind != ModelKind::NODEP) {
            for (const auto& cm : ep.context_trajectories)
                for (int i : cm.context) {
                    const int c = column(cm.trajectory, i);
                    prior.push_back(c);
                    posterior.push_back(c);
                }
        }
        for (int i : ep.new_trajectory.context) prior.push_back(column(k, i));
        for (int i : ep.new_trajectory.target) {
            posterior.push_back(column(k, i));
            const int s = time_slot.at(i);
            b.target_values[static_cast<std::size_t>(s)].col(e) = tr.states[static_cast<std::size_t>(i)];
            b.target_weights[static_cast<std::size_t>(s)](0, e) = 1.0;
        }
        b.target_counts[static_cast<std::size_t>(e)] = static_cast<int>(ep.new_trajectory.target.size());
        b.prior_groups.push_back(std::move(prior));
        b.posterior_groups.push_back(std::move(posterior));
        b.initial(0, e) = tr.times.front();
        b.initial.block(1, e, d, 1) = tr.x0;
        b.x0.col(e) = tr.x0;
    }

    b.features.resize(fdim, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto [traj, idx] = columns[c];
        const zoo::Trajectory& tr = set.trajectories.at(static_cast<std::size_t>(traj));
        const auto col = static_cast<Eigen::Index>(c);
        b.features(0, col) = set.t_grid[static_cast<std::size_t>(idx)];
        if (aug) {
            b.features.block(1, col, d, 1) = tr.x0;
            b.features.block(1 + d, col, d, 1) = tr.states[static_cast<std::size_t>(idx)];
        } else {
            b.features.block(1, col, d, 1) = tr.states[static_cast<std::size_t>(idx)];
        }
    }

    if (p.kind == ModelKind::PISANODEP) {
        if (set.system.params.size() != p.hp.param_dim) throw DimensionError("make_episode_batch: parameter count");
        b.true_params = set.system.params.replicate(1, E);
    }
    return b;
}

EpisodeNoise draw_episode_noise(const ModelParameters& p, int n_episodes, Rng& rng) {
    EpisodeNoise n;
    n.u = rng.normal_matrix(u_dim(p), n_episodes);
    n.l0 = rng.normal_matrix(p.hp.latent_state_dim, n_episodes);
    return n;
}

LossTerms episode_loss(const BoundModel& m, const EpisodeBatch& b, const EpisodeNoise& noise) {
    ad::Tape& tape = m.tape();
    const int E = b.n_episodes;
    if (noise.u.cols() != E) throw DimensionError("episode_loss: noise does not match the batch");
    const Var zeros = tape.constant(Matrix::Zero(1, E));

    Var emb = embed_points(m, tape.constant(b.features));
    Var prior_pool = ad::pool_mean(emb, b.prior_groups);
    Var post_pool = ad::pool_mean(emb, b.posterior_groups);
    GaussianVar q_prior = system_posterior(m, prior_pool);
    GaussianVar q_post = system_posterior(m, post_pool);

    LossTerms L;
    L.kl_u = ad::kl_diag_gaussians(q_post, q_prior);
    L.kl_l0 = zeros;
    L.param_nll = zeros;

    Var x0 = tape.constant(b.x0);
    Var recon = zeros;
    auto add_term = [&](const GaussianVar& g, std::size_t k) {
        Var ll = ad::gaussian_log_likelihood(g.mean, g.std, b.target_values[k]);
        recon = ad::add(recon, ad::mul(ll, tape.constant(b.target_weights[k])));
    };

    if (m.kind() == ModelKind::NP) {
        Var z = ad::sample_gaussian_reparam(q_post, noise.u);
        for (std::size_t k = 0; k < b.target_times.size(); ++k)
            add_term(decode_np(m, z, x0, tape.scalar(b.target_times[k])), k);
    } else {
        Var u, l0;
        if (m.kind() == ModelKind::SANODEP) {
            GaussianVar q_l0 = initial_posterior(m, tape.constant(b.initial));
            L.kl_l0 = ad::kl_to_standard_normal(q_l0);
            l0 = ad::sample_gaussian_reparam(q_l0, noise.l0);
            u = ad::sample_gaussian_reparam(q_post, noise.u);
        } else if (m.kind() == ModelKind::NODEP) {
            GaussianVar q_l0_post = initial_posterior_pooled(m, post_pool);
            GaussianVar q_l0_prior = initial_posterior_pooled(m, prior_pool);
            L.kl_l0 = ad::kl_diag_gaussians(q_l0_post, q_l0_prior);
            l0 = ad::sample_gaussian_reparam(q_l0_post, noise.l0);
            u = ad::sample_gaussian_reparam(q_post, noise.u);
        } else {
            u = physical_parameters(m, ad::sample_gaussian_reparam(q_post, noise.u));
            l0 = x0;
            const Matrix log_true = b.true_params.array().log().matrix();
            Var ll = ad::gaussian_log_likelihood(q_post.mean, q_post.std, log_true);
            // Log-normal density: N(log u) / prod(u).
            L.param_nll = ad::add(ad::neg(ll), tape.constant(log_true.colwise().sum()));
        }
        LatentDynamics dyn = bind_dynamics(m, u);
        ode::BaseGridPath path(tape, latent_field(m, dyn), l0, b.t0, m.hp().solver_step);
        for (std::size_t k = 0; k < b.target_times.size(); ++k) {
            Var tv = tape.scalar(b.target_times[k]);
            add_term(decode(m, dyn, path.at(tv), tv), k);
        }
    }
    L.reconstruction = recon;
    L.total = ad::add(ad::add(ad::sub(L.kl_u, recon), L.kl_l0), L.param_nll);
    return L;
}

LossBreakdown elbo_loss(const ModelParameters& p, const zoo::Episode& episode, const zoo::TrajectorySet& set,
                        Rng& rng) {
    const EpisodeBatch b = make_episode_batch(p, set, {episode});
    const EpisodeNoise noise = draw_episode_noise(p, 1, rng);
    ad::Tape tape;
    BoundModel m(tape, p, false);
    const LossTerms L = episode_loss(m, b, noise);
    LossBreakdown out;
    out.reconstruction = L.reconstruction.value()(0, 0);
    out.kl_u = L.kl_u.value()(0, 0);
    out.kl_l0 = L.kl_l0.value()(0, 0);
    out.param_nll = L.param_nll.value()(0, 0);
    out.total = L.total.value()(0, 0);
    return out;
}

}  // namespace sanodep::models
