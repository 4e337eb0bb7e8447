#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "privrec/types.hpp"

namespace privrec {

// The 21 occupations of the ML-100K `u.user` vocabulary, alphabetical.
extern const std::array<std::string_view, kNumOccupations> kOccupations;

int occupation_index(std::string_view name);  // throws on unknown token

// Parse `u.data`-style text: one "user<TAB>item<TAB>rating<TAB>timestamp"
// line per interaction. Ids are remapped to dense 0-based indices in
// first-seen order; the remap tables are returned alongside.
InteractionData parse_interactions(std::string_view text);

// Parse `u.user`-style text: "id|age|gender|occupation|zip".
std::vector<UserProfile> parse_user_profiles(std::string_view text);

// Reorder profiles (keyed by original user id) to dense user index.
std::vector<UserProfile> align_profiles(const std::vector<UserProfile>& profiles,
                                        const IdRemap& users);

// One edge of weight 1 per distinct (u, v); duplicates collapsed.
BipartiteGraph build_graph(const std::vector<Interaction>& interactions,
                           int num_users, int num_items);

// Table of engineered per-user features:
//   18 numerical columns (activity and rating statistics), then one-hot
//   gender (2), occupation (21) and age bucket (3). d' = 21, d0 = 44.
// Users without ratings get all-zero statistics and zero entropy.
std::pair<FeatureMatrix, FeatureSchema> engineer_features(
    const BipartiteGraph& graph, const std::vector<Interaction>& interactions,
    const std::vector<UserProfile>& profiles);

// Min-max rescale every numerical column to [-1, 1] (constant columns
// map to 0) and record per-column stats in the schema.
void normalize_numericals(FeatureMatrix& matrix, FeatureSchema& schema);

// Per-user holdout: ceil(ratio * |N(u)|) edges stay in train, the rest go
// to test. Deterministic for a given seed, independent of user order.
DataSplit split_per_user(const BipartiteGraph& graph, double ratio, uint64_t seed);

// Schema + normalization stats as JSON (keys: features[], d0, d_prime,
// col_min[], col_max[]).
std::string schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const std::string& text);

// Feature matrix as TSV, one user per row.
void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Everything the pipeline needs about one dataset directory.
struct Dataset {
  InteractionData raw;
  BipartiteGraph graph;
  std::vector<UserProfile> profiles;  // dense user order
};

// Read `u.data` + `u.user` from a directory.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace privrec
