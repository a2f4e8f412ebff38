#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sanodep/model_parameters.hpp"

namespace sanodep::models {

inline constexpr int kCheckpointVersion = 1;

// JSON document: version, kind, seed, hyperparams and named row-major arrays.
std::string checkpoint_to_string(const ModelParameters& p);
// Throws FormatError on a malformed document, a version mismatch, or a kind
// other than `expected` when one is given.
ModelParameters checkpoint_from_string(const std::string& text, std::optional<ModelKind> expected = std::nullopt);

void save_checkpoint(const ModelParameters& p, const std::filesystem::path& path);
ModelParameters load_checkpoint(const std::filesystem::path& path, std::optional<ModelKind> expected = std::nullopt);

}  // namespace sanodep::models
