#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "privrec/attack.hpp"
#include "privrec/dataset.hpp"
#include "privrec/metrics.hpp"
#include "privrec/recommend.hpp"
#include "privrec/report.hpp"
#include "privrec/trainer.hpp"

namespace privrec {

// Sets the two privacy switches for a named variant: gcn (both off), gerai
// (both on), gerai-nl (feature perturbation off), gerai-nf (loss
// perturbation off).
void apply_variant(const std::string& variant, TrainConfig& cfg);

struct PipelineOptions {
  std::string variant = "gerai";
  TrainConfig train;
  double split_ratio = 0.8;
  double attack_split = 0.8;
  std::vector<int> k_list = {5, 10, 15, 20, 25, 30};
  std::vector<Attribute> attributes = {Attribute::kGender, Attribute::kAge,
                                       Attribute::kOccupation};
  std::vector<AttackerKind> attackers = {AttackerKind::kTwoLayerNN};
  F1Average f1_average = F1Average::kWeighted;
  HitMode hit_mode = HitMode::kUser;
  InferenceConfig infer;
  bool verbose = false;  // per-epoch loss lines on stderr
};

// Split and engineered features for one seed; shared across variants so they
// see identical data.
struct PreparedData {
  DataSplit split;
  FeatureMatrix features;  // normalized, unperturbed
  FeatureSchema schema;
};

PreparedData prepare_data(const Dataset& ds, double split_ratio, uint64_t seed);

struct RunArtifacts {
  MetricsReport report;
  std::vector<RankedList> recommendations;  // at max(k_list)
  TrainResult<float> trained;
  FeatureMatrix model_features;  // what the model actually saw
};

// ingest -> (optional) feature perturbation -> training -> top-K
// recommendation -> ranking metrics -> attribute-inference attacks.
RunArtifacts run_experiment(const Dataset& ds, const PipelineOptions& opts);

// Cross product of axis values x variants x seeds; axis is one of "none",
// "epsilon", "epsilon-local", "dim". Reports come back in that nesting order.
std::vector<MetricsReport> run_sweep(const Dataset& ds, const PipelineOptions& base,
                                     const std::string& axis,
                                     const std::vector<double>& values,
                                     const std::vector<std::string>& variants,
                                     const std::vector<uint64_t>& seeds);

std::string attribute_name(Attribute attr);
std::string attacker_name(AttackerKind kind);
std::string f1_average_name(F1Average avg);
std::string hit_mode_name(HitMode mode);

// Truncates every list to its first K entries.
std::vector<RankedList> truncate_lists(const std::vector<RankedList>& lists, int K);

}  // namespace privrec
