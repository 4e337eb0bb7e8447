#include "privrec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <stdexcept>

#include "privrec/ldp.hpp"

namespace privrec {

void apply_variant(const std::string& variant, TrainConfig& cfg) {
  if (variant == "gcn") {
    cfg.use_feature_perturbation = false;
    cfg.use_loss_perturbation = false;
  } else if (variant == "gerai") {
    cfg.use_feature_perturbation = true;
    cfg.use_loss_perturbation = true;
  } else if (variant == "gerai-nl") {
    cfg.use_feature_perturbation = false;
    cfg.use_loss_perturbation = true;
  } else if (variant == "gerai-nf") {
    cfg.use_feature_perturbation = true;
    cfg.use_loss_perturbation = false;
  } else {
    throw std::invalid_argument("unknown variant: " + variant);
  }
}

std::string attribute_name(Attribute attr) {
  switch (attr) {
    case Attribute::kAge:
      return "age";
    case Attribute::kGender:
      return "gender";
    case Attribute::kOccupation:
      return "occupation";
  }
  return "?";
}

std::string attacker_name(AttackerKind kind) {
  switch (kind) {
    case AttackerKind::kTwoLayerNN:
      return "nn";
    case AttackerKind::kKNearestNeighbors:
      return "knn";
    case AttackerKind::kNaiveBayes:
      return "nb";
    case AttackerKind::kLogisticRegression:
      return "logreg";
  }
  return "?";
}

std::string f1_average_name(F1Average avg) {
  switch (avg) {
    case F1Average::kWeighted:
      return "weighted";
    case F1Average::kMacro:
      return "macro";
    case F1Average::kMicro:
      return "micro";
  }
  return "?";
}

std::string hit_mode_name(HitMode mode) {
  return mode == HitMode::kUser ? "user" : "pair";
}

std::vector<RankedList> truncate_lists(const std::vector<RankedList>& lists, int K) {
  std::vector<RankedList> out = lists;
  for (auto& l : out) {
    if (static_cast<int>(l.items.size()) > K) {
      l.items.resize(K);
      l.scores.resize(K);
    }
  }
  return out;
}

PreparedData prepare_data(const Dataset& ds, double split_ratio, uint64_t seed) {
  PreparedData prep;
  const uint64_t split_seed = Rng(seed).fork(1).seed();
  prep.split = split_per_user(ds.graph, split_ratio, split_seed);
  // Features come from each user's complete history: the client computes
  // them locally and cannot see the server-side train/test split.
  auto [features, schema] = engineer_features(ds.graph, ds.raw.interactions, ds.profiles);
  normalize_numericals(features, schema);
  prep.features = std::move(features);
  prep.schema = std::move(schema);
  return prep;
}

RunArtifacts run_experiment(const Dataset& ds, const PipelineOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg = opts.train;
  apply_variant(opts.variant, cfg);

  PreparedData prep = prepare_data(ds, opts.split_ratio, cfg.seed);
  RunArtifacts out;
  if (cfg.use_feature_perturbation) {
    out.model_features = perturb_feature_matrix(prep.features, prep.schema,
                                                cfg.epsilon_local, Rng(cfg.seed).fork(2));
  } else {
    out.model_features = prep.features;
  }

  out.trained = train_model<float>(prep.split.train, ds.graph, out.model_features, cfg);
  if (opts.verbose) {
    for (const auto& e : out.trained.epochs) {
      std::cerr << opts.variant << " seed " << cfg.seed << " epoch " << e.epoch
                << " loss " << e.mean_loss << "\n";
    }
  }

  if (opts.k_list.empty()) throw std::invalid_argument("run_experiment: empty k list");
  std::vector<int> k_list = opts.k_list;
  std::sort(k_list.begin(), k_list.end());
  const int max_k = k_list.back();
  InferenceConfig infer = opts.infer;
  infer.seed = cfg.seed;
  out.recommendations =
      recommend_topk_all(out.trained.params, out.model_features, prep.split.train, max_k, infer);

  MetricsReport& rep = out.report;
  rep.variant = opts.variant;
  rep.seed = cfg.seed;
  rep.config = cfg;
  rep.split_ratio = opts.split_ratio;
  rep.attack_split = opts.attack_split;
  rep.hit_mode = hit_mode_name(opts.hit_mode);
  rep.f1_average = f1_average_name(opts.f1_average);
  rep.k_list = k_list;
  for (const int k : k_list) {
    const auto at_k = truncate_lists(out.recommendations, k);
    rep.hit.push_back(hit_at_k(at_k, prep.split.test_items, k, opts.hit_mode));
    rep.ndcg.push_back(ndcg_at_k(at_k, prep.split.test_items, k));
  }

  const uint64_t attack_seed = Rng(cfg.seed).fork(4).seed();
  for (const Attribute attr : opts.attributes) {
    for (const int k : k_list) {
      const auto at_k = truncate_lists(out.recommendations, k);
      const AttackDataset data = build_attack_dataset(ds.graph, at_k, ds.profiles, attr);
      for (const AttackerKind kind : opts.attackers) {
        const double f1 =
            run_attack(data, kind, opts.attack_split, attack_seed, opts.f1_average);
        rep.attacks.push_back({attribute_name(attr), attacker_name(kind), k, f1});
      }
    }
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<MetricsReport> run_sweep(const Dataset& ds, const PipelineOptions& base,
                                     const std::string& axis,
                                     const std::vector<double>& values,
                                     const std::vector<std::string>& variants,
                                     const std::vector<uint64_t>& seeds) {
  if (variants.empty() || seeds.empty()) {
    throw std::invalid_argument("run_sweep: need at least one variant and seed");
  }
  std::vector<double> points = values;
  if (axis == "none") {
    points = {0.0};
  } else if (axis != "epsilon" && axis != "epsilon-local" && axis != "dim") {
    throw std::invalid_argument("run_sweep: unknown axis " + axis);
  } else if (points.empty()) {
    throw std::invalid_argument("run_sweep: axis needs values");
  }

  std::vector<MetricsReport> reports;
  for (const double value : points) {
    for (const std::string& variant : variants) {
      for (const uint64_t seed : seeds) {
        PipelineOptions opts = base;
        opts.variant = variant;
        opts.train.seed = seed;
        if (axis == "epsilon") {
          opts.train.epsilon = value;
        } else if (axis == "epsilon-local") {
          opts.train.epsilon_local = value;
        } else if (axis == "dim") {
          opts.train.d = static_cast<int>(value);
        }
        MetricsReport rep = run_experiment(ds, opts).report;
        rep.sweep_axis = axis;
        rep.axis_value = value;
        reports.push_back(std::move(rep));
      }
    }
  }
  return reports;
}

}  // namespace privrec
