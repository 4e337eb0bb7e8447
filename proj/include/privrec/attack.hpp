#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "privrec/recommend.hpp"
#include "privrec/types.hpp"

namespace privrec {

enum class Attribute { kAge, kGender, kOccupation };
enum class AttackerKind { kTwoLayerNN, kKNearestNeighbors, kNaiveBayes, kLogisticRegression };
enum class F1Average { kWeighted, kMacro, kMicro };

int attribute_classes(Attribute attr);
int attribute_label(const UserProfile& profile, Attribute attr);
Attribute attribute_from_name(const std::string& name);
AttackerKind attacker_from_name(const std::string& name);
F1Average f1_average_from_name(const std::string& name);

// One row per user: interaction history plus recommended items as summed
// one-hots (an item both rated and recommended counts 2), labeled with the
// target attribute.
struct AttackExample {
  std::vector<int> input;  // length |V|, entries in {0,1,2}
  int label = 0;
};

struct AttackDataset {
  int width = 0;
  int num_classes = 0;
  std::vector<AttackExample> examples;
};

AttackDataset build_attack_dataset(const BipartiteGraph& full_graph,
                                   const std::vector<RankedList>& rec_lists,
                                   const std::vector<UserProfile>& profiles,
                                   Attribute attribute);

// User-level split, stratified by label whenever every class has at least two
// members; deterministic per seed.
std::pair<AttackDataset, AttackDataset> split_attack_dataset(const AttackDataset& data,
                                                             double ratio, uint64_t seed);

struct Attacker {
  virtual ~Attacker() = default;
  virtual int predict(const std::vector<int>& input) const = 0;
};

std::unique_ptr<Attacker> train_attacker(AttackerKind kind, const AttackDataset& train,
                                         uint64_t seed);

std::vector<int> predict_all(const Attacker& model, const AttackDataset& data);

double f1_score(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes, F1Average average = F1Average::kWeighted);

// Convenience: split, train, and score one attacker; returns test-set F1.
double run_attack(const AttackDataset& data, AttackerKind kind, double split_ratio,
                  uint64_t seed, F1Average average = F1Average::kWeighted);

}  // namespace privrec
