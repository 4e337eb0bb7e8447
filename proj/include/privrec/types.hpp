#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace privrec {

struct Interaction {
  int user = 0;
  int item = 0;
  int rating = 0;       // 1..5
  int64_t timestamp = 0;  // retained, unused
};

// Dense-index remapping produced while parsing raw files.
struct IdRemap {
  std::vector<int> to_original;          // dense -> original id
  std::unordered_map<int, int> to_dense;  // original id -> dense

  int size() const { return static_cast<int>(to_original.size()); }
  int intern(int original) {
    auto it = to_dense.find(original);
    if (it != to_dense.end()) return it->second;
    const int dense = size();
    to_dense.emplace(original, dense);
    to_original.push_back(original);
    return dense;
  }
};

struct InteractionData {
  std::vector<Interaction> interactions;  // dense user/item ids
  IdRemap users;
  IdRemap items;
};

// Unweighted user-item graph; one edge per distinct (u, v).
// Adjacency lists are kept sorted so iteration order is canonical.
struct BipartiteGraph {
  int num_users = 0;
  int num_items = 0;
  size_t num_edges = 0;
  std::vector<std::vector<int>> user_items;  // N(u)
  std::vector<std::vector<int>> item_users;  // N(v)

  bool has_edge(int u, int v) const {
    const auto& n = user_items[u];
    return std::binary_search(n.begin(), n.end(), v);
  }
};

struct UserProfile {
  int user_id = -1;  // original id from the raw file
  int age = 0;
  int gender = 0;      // 0 = M, 1 = F
  int occupation = 0;  // index into kOccupations
};

constexpr int kNumOccupations = 21;
constexpr int kNumAgeBuckets = 3;

// Age buckets: under 35 / 35-45 inclusive / over 45.
inline int age_bucket(int age) {
  if (age < 35) return 0;
  if (age <= 45) return 1;
  return 2;
}

enum class FeatureKind { kNumerical, kCategorical };

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  int width = 1;   // 1 for numerical, class count for categorical
  int offset = 0;  // column offset into the feature vector
};

struct FeatureSchema {
  std::vector<FeatureDescriptor> features;
  // Per-column normalization stats, filled by normalize_numericals.
  // Categorical columns hold the placeholder range [0, 1].
  std::vector<double> col_min;
  std::vector<double> col_max;

  int d_prime() const { return static_cast<int>(features.size()); }
  int d0() const {
    int w = 0;
    for (const auto& f : features) w += f.width;
    return w;
  }
};

// Row-major |U| x d0 matrix of user feature vectors.
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
};

struct DataSplit {
  BipartiteGraph train;
  std::vector<std::vector<int>> test_items;  // per user, sorted; may be empty
};

}  // namespace privrec
