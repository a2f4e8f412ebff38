#include "sanodep/surrogates.hpp"

#include <cmath>

#include "sanodep/errors.hpp"
#include "sanodep/models.hpp"

namespace sanodep::bo {

using ad::Tape;
using ad::Var;

struct NeuralSampler::Cache {
    VectorXd x0;
    Matrix u;                    // dynamics variable (NP: z)
    std::vector<Matrix> nodes;   // latent base-grid states
};

NeuralSampler::NeuralSampler(models::ModelParameters params, const std::vector<zoo::ObservedTrajectory>& context,
                             int n_mc, double t_max, Rng& rng)
    : params_(std::move(params)), n_mc_(n_mc), t_max_(t_max) {
    if (n_mc < 1) throw PreconditionError("NeuralSampler: n_mc must be >= 1");
    const int fdim = models::point_feature_dim(params_);
    context_features_.resize(fdim, 0);
    if (params_.kind != models::ModelKind::NODEP) {
        for (const auto& obs : context) {
            const Matrix f = models::point_features(params_, obs);
            Matrix joined(fdim, context_features_.cols() + f.cols());
            joined << context_features_, f;
            context_features_ = std::move(joined);
        }
    }
    const int u_dim = params_.kind == models::ModelKind::PISANODEP ? params_.hp.param_dim
                                                                   : params_.hp.latent_dynamics_dim;
    eps_u_ = rng.normal_matrix(u_dim, n_mc);
    eps_l_ = rng.normal_matrix(params_.hp.latent_state_dim, n_mc);
}

void NeuralSampler::set_observations(const VectorXd&, const std::vector<double>& times,
                                     const std::vector<VectorXd>& states) {
    if (times.size() != states.size()) throw DimensionError("set_observations: times and states differ in length");
    obs_times_ = times;
    obs_states_ = states;
    cache_.reset();
}

namespace {

struct Graph {
    models::LatentDynamics dyn;
    Var x0_cols;
    std::unique_ptr<ode::BaseGridPath> path;
};

}  // namespace

PathQuery NeuralSampler::query(const VectorXd& x0, const std::vector<double>& times, const AdjointFn* adjoint,
                               bool want_x0_grad) {
    const auto& hp = params_.hp;
    if (x0.size() != hp.state_dim) throw DimensionError("NeuralSampler: x0 dimension mismatch");
    for (double t : times)
        if (t < hp.t0 - 1e-12 || !std::isfinite(t)) throw PreconditionError("NeuralSampler: query time before t0");
    const bool is_np = params_.kind == models::ModelKind::NP;
    const bool use_cache = cache_ && !want_x0_grad && cache_->x0 == x0;

    Tape tape;
    models::BoundModel m(tape, params_, false);
    const Var x0v = want_x0_grad ? tape.variable(x0) : tape.constant(x0);
    Graph g;
    g.x0_cols = ad::bcast_cols(x0v, n_mc_);

    if (use_cache) {
        const Var u = tape.constant(cache_->u);
        if (is_np) {
            g.dyn.u = u;
        } else {
            g.dyn = models::bind_dynamics(m, u);
            g.path = std::make_unique<ode::BaseGridPath>(tape, models::latent_field(m, g.dyn), cache_->nodes, hp.t0,
                                                         hp.solver_step);
        }
    } else {
        std::vector<Var> parts;
        if (context_features_.cols() > 0) parts.push_back(tape.constant(context_features_));
        const auto n_obs = static_cast<Eigen::Index>(obs_times_.size());
        Matrix t_row(1, n_obs + 1);
        Matrix states(hp.state_dim, n_obs);
        t_row(0, 0) = hp.t0;
        for (Eigen::Index i = 0; i < n_obs; ++i) {
            t_row(0, i + 1) = obs_times_[static_cast<std::size_t>(i)];
            states.col(i) = obs_states_[static_cast<std::size_t>(i)];
        }
        const Var x0_rep = ad::bcast_cols(x0v, n_obs + 1);
        const Var xs = n_obs ? ad::hcat({x0v, tape.constant(states)}) : x0v;
        if (models::uses_x0_features(params_))
            parts.push_back(ad::vcat({tape.constant(t_row), x0_rep, xs}));
        else
            parts.push_back(ad::vcat({tape.constant(t_row), xs}));
        const Var feats = parts.size() == 1 ? parts.front() : ad::hcat(parts);
        std::vector<int> all(static_cast<std::size_t>(feats.cols()));
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        const Var pooled = ad::pool_mean(models::embed_points(m, feats), {all});
        Var u = ad::sample_gaussian_reparam(models::system_posterior(m, pooled), eps_u_);
        Var l0;
        switch (params_.kind) {
            case models::ModelKind::SANODEP:
                l0 = ad::sample_gaussian_reparam(
                    models::initial_posterior(m, ad::vcat({tape.scalar(hp.t0), x0v})), eps_l_);
                break;
            case models::ModelKind::NODEP:
                l0 = ad::sample_gaussian_reparam(models::initial_posterior_pooled(m, pooled), eps_l_);
                break;
            case models::ModelKind::PISANODEP:
                u = models::physical_parameters(m, u);
                l0 = g.x0_cols;
                break;
            case models::ModelKind::NP:
                break;
        }
        if (is_np) {
            g.dyn.u = u;
        } else {
            g.dyn = models::bind_dynamics(m, u);
            g.path = std::make_unique<ode::BaseGridPath>(tape, models::latent_field(m, g.dyn), l0, hp.t0,
                                                         hp.solver_step);
        }
        if (!want_x0_grad) {
            auto c = std::make_shared<Cache>();
            c->x0 = x0;
            c->u = u.value();
            if (!is_np) {
                const auto last = static_cast<std::size_t>(std::ceil((t_max_ - hp.t0) / hp.solver_step)) + 1;
                g.path->node(last);
                for (std::size_t k = 0; k <= last; ++k) c->nodes.push_back(g.path->node(k).value());
            }
            cache_ = std::move(c);
        }
    }

    std::vector<Var> tv;
    std::vector<Var> means;
    PathQuery out;
    for (double t : times) {
        const Var t_var = adjoint ? tape.variable(Matrix::Constant(1, 1, t)) : tape.scalar(t);
        tv.push_back(t_var);
        const ad::GaussianVar d = is_np ? models::decode_np(m, g.dyn.u, g.x0_cols, t_var)
                                        : models::decode(m, g.dyn, g.path->at(t_var), t_var);
        means.push_back(d.mean);
        out.means.push_back(d.mean.value());
    }
    if (!adjoint) return out;

    const std::vector<Matrix> adj = (*adjoint)(out.means);
    out.grad_times.assign(times.size(), 0.0);
    out.grad_x0 = VectorXd::Zero(x0.size());
    if (times.empty()) return out;
    Var loss = ad::dot(means[0], adj.at(0));
    for (std::size_t k = 1; k < means.size(); ++k) loss = ad::add(loss, ad::dot(means[k], adj.at(k)));
    tape.backward(loss);
    for (std::size_t k = 0; k < times.size(); ++k) out.grad_times[k] = tape.grad(tv[k])(0, 0);
    if (want_x0_grad) out.grad_x0 = tape.grad(x0v).col(0);
    return out;
}

// ---------------------------------------------------------------- GP

GPSampler::GPSampler(std::vector<zoo::ObservedTrajectory> context, int state_dim, double t0, int n_mc, Rng& rng,
                     gp::FitOptions options)
    : context_(std::move(context)), state_dim_(state_dim), t0_(t0), n_mc_(n_mc), rng_(rng.split(rng())),
      options_(options) {
    if (n_mc < 1) throw PreconditionError("GPSampler: n_mc must be >= 1");
    eps_ = rng.normal_matrix(state_dim, n_mc);
    refit();
}

void GPSampler::set_observations(const VectorXd& x0, const std::vector<double>& times,
                                 const std::vector<VectorXd>& states) {
    if (times.size() != states.size()) throw DimensionError("set_observations: times and states differ in length");
    current_ = {};
    if (!times.empty()) {
        current_.x0 = x0;
        current_.t0 = t0_;
        current_.times.push_back(t0_);
        current_.states.push_back(x0);
        current_.times.insert(current_.times.end(), times.begin(), times.end());
        current_.states.insert(current_.states.end(), states.begin(), states.end());
    }
    refit();
}

void GPSampler::refit() {
    std::vector<const zoo::ObservedTrajectory*> all;
    for (const auto& c : context_) all.push_back(&c);
    if (!current_.times.empty()) all.push_back(&current_);
    Eigen::Index n = 0;
    for (const auto* o : all) n += static_cast<Eigen::Index>(o->size());
    if (n == 0) throw PreconditionError("GPSampler: no training data");
    Matrix X(n, state_dim_ + 1);
    Matrix Y(n, state_dim_);
    Eigen::Index r = 0;
    for (const auto* o : all)
        for (std::size_t i = 0; i < o->size(); ++i, ++r) {
            X.row(r).head(state_dim_) = o->x0.transpose();
            X(r, state_dim_) = o->times[i];
            Y.row(r) = o->states[i].transpose();
        }
    Rng fit_rng = rng_;
    gp_ = std::make_unique<gp::IndependentGP>(gp::fit_independent(X, Y, fit_rng, options_));
}

std::vector<Matrix> GPSampler::means_at(const VectorXd& x0, const std::vector<double>& times) const {
    const auto T = static_cast<Eigen::Index>(times.size());
    Matrix Xq(T, state_dim_ + 1);
    for (Eigen::Index k = 0; k < T; ++k) {
        Xq.row(k).head(state_dim_) = x0.transpose();
        Xq(k, state_dim_) = times[static_cast<std::size_t>(k)];
    }
    Matrix mu, var;
    gp_->posterior(Xq, mu, var);
    std::vector<Matrix> out;
    for (Eigen::Index k = 0; k < T; ++k) {
        const VectorXd m = mu.row(k).transpose();
        const VectorXd sd = var.row(k).transpose().cwiseSqrt();
        out.push_back((eps_.array().colwise() * sd.array()).matrix().colwise() + m);
    }
    return out;
}

PathQuery GPSampler::query(const VectorXd& x0, const std::vector<double>& times, const AdjointFn* adjoint,
                           bool want_x0_grad) {
    if (x0.size() != state_dim_) throw DimensionError("GPSampler: x0 dimension mismatch");
    PathQuery out;
    out.means = means_at(x0, times);
    if (!adjoint) return out;
    const std::vector<Matrix> adj = (*adjoint)(out.means);
    constexpr double h = 1e-5;
    out.grad_times.assign(times.size(), 0.0);
    std::vector<double> tp(times), tm(times);
    for (auto& t : tp) t += h;
    for (auto& t : tm) t -= h;
    const auto mp = means_at(x0, tp);
    const auto mm = means_at(x0, tm);
    for (std::size_t k = 0; k < times.size(); ++k)
        out.grad_times[k] = (adj[k].array() * (mp[k] - mm[k]).array()).sum() / (2 * h);
    out.grad_x0 = VectorXd::Zero(state_dim_);
    if (want_x0_grad) {
        for (int j = 0; j < state_dim_; ++j) {
            VectorXd xp = x0, xm = x0;
            xp(j) += h;
            xm(j) -= h;
            const auto a = means_at(xp, times);
            const auto b = means_at(xm, times);
            double s = 0.0;
            for (std::size_t k = 0; k < times.size(); ++k) s += (adj[k].array() * (a[k] - b[k]).array()).sum();
            out.grad_x0(j) = s / (2 * h);
        }
    }
    return out;
}

}  // namespace sanodep::bo
