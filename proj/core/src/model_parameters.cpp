#include "sanodep/model_parameters.hpp"

#include <cmath>

#include "sanodep/errors.hpp"
#include "sanodep/rng.hpp"

namespace sanodep::models {

using ad::Activation;

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::NP:
            return "NP";
        case ModelKind::NODEP:
            return "NODEP";
        case ModelKind::SANODEP:
            return "SANODEP";
        case ModelKind::PISANODEP:
            return "PISANODEP";
    }
    return "unknown";
}

ModelKind kind_from_string(const std::string& name) {
    for (ModelKind k : {ModelKind::NP, ModelKind::NODEP, ModelKind::SANODEP, ModelKind::PISANODEP})
        if (to_string(k) == name) return k;
    if (name == "PI-SANODEP") return ModelKind::PISANODEP;
    throw PreconditionError("unknown model kind: " + name);
}

std::size_t ModelParameters::count() const {
    std::size_t n = 0;
    for (const auto& [name, l] : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

bool ModelParameters::all_finite() const {
    for (const auto& [name, l] : layers)
        if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

const ad::DenseLayer& ModelParameters::layer(const std::string& name) const {
    const auto it = layers.find(name);
    if (it == layers.end()) throw StateError("model has no layer '" + name + "'");
    return it->second;
}

namespace {

struct LayerSpec {
    std::string name;
    int in;
    int out;
    Activation act;
};

std::vector<LayerSpec> layout(ModelKind kind, const ModelHyperparams& hp) {
    const int d = hp.state_dim;
    const int E = hp.encoder_width;
    const int h = hp.hidden_dim;
    const int l = hp.latent_state_dim;
    const int D = hp.latent_dynamics_dim;
    const int Ho = hp.ode_hidden;
    const int Hd = hp.decoder_hidden;
    const int point_in = (kind == ModelKind::NODEP || !hp.augment_x0) ? d + 1 : 2 * d + 1;
    const int u_dim = kind == ModelKind::PISANODEP ? hp.param_dim : D;

    std::vector<LayerSpec> s = {
        {"enc_r.0", point_in, E, Activation::SiLU},
        {"enc_r.1", E, E, Activation::SiLU},
        {"enc_r.2", E, E, Activation::Identity},
        {"enc_sys", E, h, Activation::SiLU},
        {"q_u.mean", h, u_dim, Activation::Identity},
        {"q_u.std", h, u_dim, Activation::Softplus},
    };
    switch (kind) {
        case ModelKind::SANODEP:
            s.insert(s.end(), {{"enc_init.0", d + 1, E, Activation::SiLU},
                               {"enc_init.1", E, E, Activation::SiLU},
                               {"enc_init.2", E, E, Activation::Identity},
                               {"init_hidden", E, h, Activation::SiLU}});
            [[fallthrough]];
        case ModelKind::NODEP:
            if (kind == ModelKind::NODEP) s.push_back({"init_hidden", E, h, Activation::SiLU});
            s.insert(s.end(), {{"q_l0.mean", h, l, Activation::Identity},
                               {"q_l0.std", h, l, Activation::Softplus},
                               {"ode.0", l + D + 1, Ho, Activation::Tanh},
                               {"ode.1", Ho, Ho, Activation::Tanh},
                               {"ode.2", Ho, l, Activation::Identity},
                               {"dec.hidden", l + D + 1, Hd, Activation::SiLU},
                               {"dec.mean", Hd, d, Activation::Identity},
                               {"dec.std", Hd, d, Activation::Softplus}});
            break;
        case ModelKind::NP:
            // Decoder input is [z, x0, t].
            s.insert(s.end(), {{"dec.0", D + d + 1, Hd, Activation::SiLU},
                               {"dec.1", Hd, Hd, Activation::SiLU},
                               {"dec.mean", Hd, d, Activation::Identity},
                               {"dec.std", Hd, d, Activation::Softplus}});
            break;
        case ModelKind::PISANODEP:
            // Decoder input is [x, log u, t]; it only predicts the spread.
            s.insert(s.end(), {{"dec.hidden", d + u_dim + 1, Hd, Activation::SiLU},
                               {"dec.std", Hd, d, Activation::Softplus}});
            break;
    }
    return s;
}

std::uint64_t name_key(const std::string& name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

ModelParameters init_model(ModelKind kind, const ModelHyperparams& hp, std::uint64_t seed) {
    if (hp.state_dim < 1 || hp.encoder_width < 1 || hp.hidden_dim < 1 || hp.latent_state_dim < 1 ||
        hp.latent_dynamics_dim < 1 || hp.ode_hidden < 1 || hp.decoder_hidden < 1)
        throw PreconditionError("init_model: dimensions must be positive");
    if (!(hp.sigma_lb > 0)) throw PreconditionError("init_model: sigma_lb must be positive");
    if (!(hp.solver_step > 0) || !(hp.t_max > hp.t0)) throw PreconditionError("init_model: invalid time settings");
    if (kind == ModelKind::PISANODEP && hp.param_dim < 1)
        throw PreconditionError("init_model: PISANODEP needs param_dim >= 1");
    ModelParameters p;
    p.kind = kind;
    p.hp = hp;
    p.seed = seed;
    Rng rng(seed);
    for (const LayerSpec& ls : layout(kind, hp)) {
        Rng lr = rng.split(name_key(ls.name));
        const double a = std::sqrt(6.0 / (ls.in + ls.out));
        ad::DenseLayer layer;
        layer.weights.resize(ls.out, ls.in);
        for (Eigen::Index j = 0; j < ls.in; ++j)
            for (Eigen::Index i = 0; i < ls.out; ++i) layer.weights(i, j) = lr.uniform(-a, a);
        layer.bias = ad::Matrix::Zero(ls.out, 1);
        layer.activation = ls.act;
        p.layers.emplace(ls.name, std::move(layer));
    }
    return p;
}

std::vector<std::pair<std::string, ad::Matrix*>> tensors(ModelParameters& p) {
    std::vector<std::pair<std::string, ad::Matrix*>> out;
    for (auto& [name, l] : p.layers) {
        out.emplace_back(name + ".weight", &l.weights);
        out.emplace_back(name + ".bias", &l.bias);
    }
    return out;
}

std::vector<std::pair<std::string, const ad::Matrix*>> tensors(const ModelParameters& p) {
    std::vector<std::pair<std::string, const ad::Matrix*>> out;
    for (const auto& [name, l] : p.layers) {
        out.emplace_back(name + ".weight", &l.weights);
        out.emplace_back(name + ".bias", &l.bias);
    }
    return out;
}

}  // namespace sanodep::models
