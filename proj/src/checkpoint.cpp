#include "privrec/checkpoint.hpp"

#include <stdexcept>

#include "privrec/dataset.hpp"

namespace privrec {

namespace {
constexpr int kCheckpointVersion = 1;
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
  return {
      {"d", cfg.d},
      {"lr", cfg.lr},
      {"batch_size", cfg.batch_size},
      {"epochs", cfg.epochs},
      {"gamma", cfg.gamma},
      {"epsilon", cfg.epsilon},
      {"epsilon_local", cfg.epsilon_local},
      {"use_feature_perturbation", cfg.use_feature_perturbation},
      {"use_loss_perturbation", cfg.use_loss_perturbation},
      {"sigma_init", cfg.sigma_init},
      {"neighbor_cap", cfg.neighbor_cap},
      {"seed", cfg.seed},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.d = j.at("d").get<int>();
  cfg.lr = j.at("lr").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.epsilon = j.at("epsilon").get<double>();
  cfg.epsilon_local = j.at("epsilon_local").get<double>();
  cfg.use_feature_perturbation = j.at("use_feature_perturbation").get<bool>();
  cfg.use_loss_perturbation = j.at("use_loss_perturbation").get<bool>();
  cfg.sigma_init = j.at("sigma_init").get<double>();
  cfg.neighbor_cap = j.at("neighbor_cap").get<int>();
  cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

namespace {

nlohmann::ordered_json matrix_to_json(const ad::MatX<float>& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ad::MatX<float> matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  ad::MatX<float> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument("checkpoint: ragged tensor");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<float>();
  }
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  j["config"] = train_config_to_json(ckpt.config);
  j["dims"] = {{"d", ckpt.params.d}, {"d0", ckpt.params.d0}, {"d1", ckpt.params.d1}};
  nlohmann::ordered_json tensors;
  ckpt.params.for_each_tensor([&](const char* name, const ad::MatX<float>& m) {
    tensors[name] = matrix_to_json(m);
  });
  j["tensors"] = std::move(tensors);
  if (ckpt.noise.empty()) {
    j["noise"] = nullptr;
  } else {
    nlohmann::ordered_json n2 = nlohmann::ordered_json::array();
    for (int i = 0; i < ckpt.noise.d; ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int k = 0; k < ckpt.noise.d; ++k) row.push_back(ckpt.noise.at2(i, k));
      n2.push_back(std::move(row));
    }
    j["noise"] = {{"d", ckpt.noise.d},
                  {"scale", ckpt.noise.scale},
                  {"n1", ckpt.noise.n1},
                  {"n2", std::move(n2)}};
  }
  write_text_file(path, j.dump(2));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::invalid_argument("checkpoint: unsupported version");
  }
  Checkpoint ckpt;
  ckpt.config = train_config_from_json(j.at("config"));
  ckpt.params.d = j.at("dims").at("d").get<int>();
  ckpt.params.d0 = j.at("dims").at("d0").get<int>();
  ckpt.params.d1 = j.at("dims").at("d1").get<int>();
  const auto& tensors = j.at("tensors");
  ckpt.params.for_each_tensor([&](const char* name, ad::MatX<float>& m) {
    m = matrix_from_json(tensors.at(name));
  });
  if (!j.at("noise").is_null()) {
    const auto& n = j.at("noise");
    ckpt.noise.d = n.at("d").get<int>();
    ckpt.noise.scale = n.at("scale").get<double>();
    ckpt.noise.n1 = n.at("n1").get<std::vector<double>>();
    ckpt.noise.N2.resize(static_cast<size_t>(ckpt.noise.d) * ckpt.noise.d);
    for (int i = 0; i < ckpt.noise.d; ++i) {
      for (int k = 0; k < ckpt.noise.d; ++k) {
        ckpt.noise.N2[static_cast<size_t>(i) * ckpt.noise.d + k] =
            n.at("n2").at(i).at(k).get<double>();
      }
    }
  }
  return ckpt;
}

}  // namespace privrec
