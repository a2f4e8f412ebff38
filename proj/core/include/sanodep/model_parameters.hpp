#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sanodep/autodiff.hpp"

namespace sanodep::models {

enum class ModelKind { NP, NODEP, SANODEP, PISANODEP };

std::string to_string(ModelKind k);
ModelKind kind_from_string(const std::string& name);

struct ModelHyperparams {
    std::string family = "LV2";
    int state_dim = 2;
    int encoder_width = 50;        // r, also hidden width of the point encoders
    int hidden_dim = 50;           // h
    int latent_state_dim = 10;     // l
    int latent_dynamics_dim = 45;  // d_sys (NP: latent z)
    int ode_hidden = 50;
    int decoder_hidden = 50;
    double sigma_lb = 0.1;
    bool augment_x0 = true;
    double t0 = 0.0;
    double t_max = 15.0;
    double solver_step = 15.0 / 396.0;  // base RK4 step of the latent solve
    int param_dim = 0;                  // PISANODEP: number of physical parameters

    bool operator==(const ModelHyperparams&) const = default;
};

struct ModelParameters {
    ModelKind kind = ModelKind::SANODEP;
    ModelHyperparams hp;
    std::uint64_t seed = 0;
    std::map<std::string, ad::DenseLayer> layers;

    std::size_t count() const;
    bool all_finite() const;
    const ad::DenseLayer& layer(const std::string& name) const;
};

// Glorot-uniform weights, zero biases.
ModelParameters init_model(ModelKind kind, const ModelHyperparams& hp, std::uint64_t seed);

// Flat named view (name.weight / name.bias) in a fixed order.
std::vector<std::pair<std::string, ad::Matrix*>> tensors(ModelParameters& p);
std::vector<std::pair<std::string, const ad::Matrix*>> tensors(const ModelParameters& p);

}  // namespace sanodep::models
