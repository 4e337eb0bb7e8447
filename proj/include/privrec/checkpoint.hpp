#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "privrec/functional_mechanism.hpp"
#include "privrec/model.hpp"
#include "privrec/trainer.hpp"

namespace privrec {

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Everything needed to resume or re-score a run: config, all parameter
// tensors, and the Laplace noise polynomial when one was drawn.
struct Checkpoint {
  TrainConfig config;
  ModelParams<float> params;
  NoisePolynomial noise;  // empty when the run had no loss perturbation
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace privrec
