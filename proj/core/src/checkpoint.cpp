#include "sanodep/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sanodep/errors.hpp"

namespace sanodep::models {

using nlohmann::json;

namespace {

json hp_to_json(const ModelHyperparams& hp) {
    return json{{"family", hp.family},
                {"state_dim", hp.state_dim},
                {"encoder_width", hp.encoder_width},
                {"hidden_dim", hp.hidden_dim},
                {"latent_state_dim", hp.latent_state_dim},
                {"latent_dynamics_dim", hp.latent_dynamics_dim},
                {"ode_hidden", hp.ode_hidden},
                {"decoder_hidden", hp.decoder_hidden},
                {"sigma_lb", hp.sigma_lb},
                {"augment_x0", hp.augment_x0},
                {"t0", hp.t0},
                {"t_max", hp.t_max},
                {"solver_step", hp.solver_step},
                {"param_dim", hp.param_dim}};
}

ModelHyperparams hp_from_json(const json& j) {
    ModelHyperparams hp;
    j.at("family").get_to(hp.family);
    j.at("state_dim").get_to(hp.state_dim);
    j.at("encoder_width").get_to(hp.encoder_width);
    j.at("hidden_dim").get_to(hp.hidden_dim);
    j.at("latent_state_dim").get_to(hp.latent_state_dim);
    j.at("latent_dynamics_dim").get_to(hp.latent_dynamics_dim);
    j.at("ode_hidden").get_to(hp.ode_hidden);
    j.at("decoder_hidden").get_to(hp.decoder_hidden);
    j.at("sigma_lb").get_to(hp.sigma_lb);
    j.at("augment_x0").get_to(hp.augment_x0);
    j.at("t0").get_to(hp.t0);
    j.at("t_max").get_to(hp.t_max);
    j.at("solver_step").get_to(hp.solver_step);
    j.at("param_dim").get_to(hp.param_dim);
    return hp;
}

}  // namespace

std::string checkpoint_to_string(const ModelParameters& p) {
    json arrays = json::array();
    for (const auto& [name, m] : tensors(p)) {
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(m->size()));
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) data.push_back((*m)(r, c));
        arrays.push_back(json{{"name", name}, {"shape", {m->rows(), m->cols()}}, {"data", std::move(data)}});
    }
    json doc{{"version", kCheckpointVersion},
             {"kind", to_string(p.kind)},
             {"seed", p.seed},
             {"hyperparams", hp_to_json(p.hp)},
             {"arrays", std::move(arrays)}};
    return doc.dump(1) + "\n";
}

ModelParameters checkpoint_from_string(const std::string& text, std::optional<ModelKind> expected) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    try {
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion)
            throw FormatError("checkpoint: unsupported version " + std::to_string(version));
        ModelKind kind;
        try {
            kind = kind_from_string(doc.at("kind").get<std::string>());
        } catch (const PreconditionError& e) {
            throw FormatError(std::string("checkpoint: ") + e.what());
        }
        if (expected && *expected != kind)
            throw FormatError("checkpoint: expected a " + to_string(*expected) + " model, file holds " +
                              to_string(kind));
        ModelParameters p = init_model(kind, hp_from_json(doc.at("hyperparams")), doc.at("seed").get<std::uint64_t>());
        auto slots = tensors(p);
        const json& arrays = doc.at("arrays");
        if (arrays.size() != slots.size()) throw FormatError("checkpoint: array count does not match the model");
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const json& a = arrays[i];
            auto& [name, m] = slots[i];
            if (a.at("name").get<std::string>() != name)
                throw FormatError("checkpoint: expected array '" + name + "'");
            const auto shape = a.at("shape").get<std::vector<Eigen::Index>>();
            if (shape.size() != 2 || shape[0] != m->rows() || shape[1] != m->cols())
                throw FormatError("checkpoint: shape mismatch for '" + name + "'");
            const auto data = a.at("data").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(data.size()) != m->size())
                throw FormatError("checkpoint: data size mismatch for '" + name + "'");
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < m->rows(); ++r)
                for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = data[k++];
        }
        if (!p.all_finite()) throw FormatError("checkpoint: non-finite weights");
        return p;
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const ModelParameters& p, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << checkpoint_to_string(p);
    if (!out) throw FormatError("write failed: " + path.string());
}

ModelParameters load_checkpoint(const std::filesystem::path& path, std::optional<ModelKind> expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_string(ss.str(), expected);
}

}  // namespace sanodep::models
