#pragma once

#include <string>
#include <vector>

#include "privrec/trainer.hpp"

namespace privrec {

struct AttackResult {
  std::string attribute;  // age | gender | occupation
  std::string attacker;   // nn | knn | nb | logreg
  int k = 0;
  double f1 = 0.0;
};

// Everything one (variant, seed) run produced. `sweep_axis`/`axis_value`
// identify the sweep point ("none"/0 for plain runs).
struct MetricsReport {
  std::string variant;  // gcn | gerai | gerai-nl | gerai-nf
  std::string sweep_axis = "none";
  double axis_value = 0.0;
  uint64_t seed = 0;
  TrainConfig config;
  double split_ratio = 0.8;
  double attack_split = 0.8;
  std::string hit_mode = "user";
  std::string f1_average = "weighted";
  std::vector<int> k_list;
  std::vector<double> hit;   // aligned with k_list
  std::vector<double> ndcg;  // aligned with k_list
  std::vector<AttackResult> attacks;
  double wall_seconds = 0.0;
};

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

// One row per (run, K, metric): variant, axis, axis_value, seed, k, metric,
// attribute, attacker, value. Ranking rows leave attribute/attacker empty.
std::string reports_to_csv(const std::vector<MetricsReport>& reports);

// Mean +/- sample standard deviation over seeds, grouped by everything but
// the seed. Row order follows first appearance.
std::string aggregate_csv(const std::vector<MetricsReport>& reports);

}  // namespace privrec
