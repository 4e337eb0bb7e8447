#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "privrec/dataset.hpp"
#include "privrec/synthetic.hpp"

using namespace privrec;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("privrec_test_" + tag);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("parse_interactions remaps ids in first-seen order") {
  const InteractionData d = parse_interactions("1\t242\t3\t881250949\n7\t242\t5\t10\n1\t9\t1\t11\n");
  REQUIRE(d.interactions.size() == 3);
  CHECK(d.interactions[0].user == 0);
  CHECK(d.interactions[0].item == 0);
  CHECK(d.interactions[0].rating == 3);
  CHECK(d.interactions[0].timestamp == 881250949);
  CHECK(d.interactions[1].user == 1);  // original 7 -> dense 1
  CHECK(d.interactions[1].item == 0);  // original 242 reused
  CHECK(d.interactions[2].user == 0);
  CHECK(d.interactions[2].item == 1);
  CHECK(d.users.size() == 2);
  CHECK(d.items.size() == 2);
  CHECK(d.users.to_original[1] == 7);
  CHECK(d.items.to_original[0] == 242);
  CHECK(d.users.to_dense.at(7) == 1);
}

TEST_CASE("parse_interactions rejects malformed input with the line number") {
  CHECK(parse_interactions("").interactions.empty());
  CHECK_THROWS_WITH_AS(parse_interactions("1\t2\t3\t4\n1\t2\t3\n"),
                       doctest::Contains("line 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_interactions("1\t2\t9\t4\n"), doctest::Contains("rating"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_interactions("1\t2\t0\t4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_interactions("a\tb\tc\td\n"), std::invalid_argument);
}

TEST_CASE("parse_user_profiles maps fields and validates occupations") {
  const auto profiles = parse_user_profiles("1|24|M|technician|85711\n2|53|F|other|94043\n");
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].user_id == 1);
  CHECK(profiles[0].age == 24);
  CHECK(profiles[0].gender == 0);
  CHECK(profiles[0].occupation == occupation_index("technician"));
  CHECK(profiles[1].gender == 1);
  CHECK(profiles[1].occupation == occupation_index("other"));
  CHECK_THROWS_WITH_AS(parse_user_profiles("1|24|M|astronaut|85711\n"),
                       doctest::Contains("astronaut"), std::invalid_argument);
  CHECK_THROWS_AS(parse_user_profiles("1|24|M|technician\n"), std::invalid_argument);
}

TEST_CASE("occupation vocabulary is the fixed 21-entry table") {
  CHECK(kOccupations.size() == 21);
  CHECK(std::is_sorted(kOccupations.begin(), kOccupations.end()));
  for (int i = 0; i < 21; ++i) CHECK(occupation_index(kOccupations[i]) == i);
  CHECK_THROWS_AS(occupation_index("wizard"), std::invalid_argument);
}

TEST_CASE("align_profiles reorders by dense index") {
  IdRemap users;
  users.intern(7);
  users.intern(3);
  std::vector<UserProfile> raw(2);
  raw[0] = {3, 30, 1, 2};
  raw[1] = {7, 40, 0, 5};
  const auto aligned = align_profiles(raw, users);
  REQUIRE(aligned.size() == 2);
  CHECK(aligned[0].user_id == 7);
  CHECK(aligned[1].user_id == 3);
  IdRemap missing;
  missing.intern(99);
  CHECK_THROWS_AS(align_profiles(raw, missing), std::invalid_argument);
}

TEST_CASE("build_graph collapses duplicates and sorts adjacency") {
  const std::vector<Interaction> ints = {
      {0, 1, 3, 0}, {0, 0, 5, 0}, {0, 1, 4, 0}, {1, 0, 2, 0}};
  const BipartiteGraph g = build_graph(ints, 2, 2);
  CHECK(g.num_users == 2);
  CHECK(g.num_items == 2);
  CHECK(g.num_edges == 3);  // (0,1) duplicate collapsed
  CHECK(g.user_items[0] == std::vector<int>{0, 1});
  CHECK(g.user_items[1] == std::vector<int>{0});
  CHECK(g.item_users[0] == std::vector<int>{0, 1});
  CHECK(g.item_users[1] == std::vector<int>{0});
  CHECK(g.has_edge(0, 1));
  CHECK_FALSE(g.has_edge(1, 1));
}

TEST_CASE("engineered schema: 18 numericals + 3 one-hot segments") {
  const InteractionData d = parse_interactions("1\t1\t5\t0\n1\t2\t5\t0\n2\t1\t3\t0\n");
  const BipartiteGraph g = build_graph(d.interactions, 2, 2);
  const auto profiles =
      parse_user_profiles("1|24|M|technician|85711\n2|53|F|other|94043\n");
  const auto [features, schema] =
      engineer_features(g, d.interactions, align_profiles(profiles, d.users));
  CHECK(schema.d_prime() == 21);
  CHECK(schema.d0() == 44);
  CHECK(features.rows == 2);
  CHECK(features.cols == 44);
  int numericals = 0, categoricals = 0;
  std::vector<int> widths;
  for (const auto& f : schema.features) {
    if (f.kind == FeatureKind::kNumerical) {
      ++numericals;
      CHECK(f.width == 1);
    } else {
      ++categoricals;
      widths.push_back(f.width);
    }
  }
  CHECK(numericals == 18);
  CHECK(categoricals == 3);
  CHECK(widths == std::vector<int>{2, 21, 3});
  // Offsets tile the vector contiguously.
  int expect = 0;
  for (const auto& f : schema.features) {
    CHECK(f.offset == expect);
    expect += f.width;
  }
  CHECK(expect == 44);
}

TEST_CASE("feature values for hand-checkable users") {
  // User 0 rated {5,5,5,5}; user 1 rated one item at each level 1..5.
  std::string text;
  for (int i = 1; i <= 4; ++i) text += "1\t" + std::to_string(i) + "\t5\t0\n";
  for (int r = 1; r <= 5; ++r) text += "2\t" + std::to_string(10 + r) + "\t" + std::to_string(r) + "\t0\n";
  const InteractionData d = parse_interactions(text);
  const BipartiteGraph g = build_graph(d.interactions, 2, 9);
  const auto profiles = parse_user_profiles("1|24|M|technician|85711\n2|53|F|other|94043\n");
  const auto [features, schema] =
      engineer_features(g, d.interactions, align_profiles(profiles, d.users));

  const double* u0 = features.row(0);
  CHECK(u0[0] == doctest::Approx(4.0));                      // rated count
  for (int l = 0; l < 4; ++l) CHECK(u0[1 + l] == 0.0);       // counts of 1..4
  CHECK(u0[5] == doctest::Approx(4.0));                      // count of 5s
  for (int l = 0; l < 4; ++l) CHECK(u0[6 + l] == 0.0);       // ratios of 1..4
  CHECK(u0[10] == doctest::Approx(1.0));                     // ratio of 5s
  CHECK(u0[11] == doctest::Approx(1.0));                     // positive ratio
  CHECK(u0[12] == doctest::Approx(0.0));                     // negative ratio
  CHECK(u0[13] == doctest::Approx(0.0));                     // entropy: single level
  CHECK(u0[14] == doctest::Approx(5.0));                     // median
  CHECK(u0[15] == doctest::Approx(5.0));                     // min
  CHECK(u0[16] == doctest::Approx(5.0));                     // max
  CHECK(u0[17] == doctest::Approx(5.0));                     // mean

  const double* u1 = features.row(1);
  CHECK(u1[0] == doctest::Approx(5.0));
  for (int l = 0; l < 5; ++l) CHECK(u1[1 + l] == doctest::Approx(1.0));
  for (int l = 0; l < 5; ++l) CHECK(u1[6 + l] == doctest::Approx(0.2));
  CHECK(u1[11] == doctest::Approx(0.4));  // ratings 4-5
  CHECK(u1[12] == doctest::Approx(0.4));  // ratings 1-2
  CHECK(u1[13] == doctest::Approx(std::log(5.0)));  // uniform entropy, natural log
  CHECK(u1[14] == doctest::Approx(3.0));  // median of 1..5
  CHECK(u1[15] == doctest::Approx(1.0));
  CHECK(u1[16] == doctest::Approx(5.0));
  CHECK(u1[17] == doctest::Approx(3.0));

  // One-hot segments: gender (M=0 -> [1,0]), occupation, age bucket.
  CHECK(u0[18] == 1.0);
  CHECK(u0[19] == 0.0);
  CHECK(u1[18] == 0.0);
  CHECK(u1[19] == 1.0);
  CHECK(u0[20 + occupation_index("technician")] == 1.0);
  CHECK(u1[20 + occupation_index("other")] == 1.0);
  CHECK(u0[41 + age_bucket(24)] == 1.0);  // under 35 -> bucket 0
  CHECK(u1[41 + age_bucket(53)] == 1.0);  // over 45 -> bucket 2
  // Exactly one 1 per categorical segment.
  for (int r = 0; r < 2; ++r) {
    const double* row = features.row(r);
    CHECK(row[18] + row[19] == doctest::Approx(1.0));
    CHECK(std::accumulate(row + 20, row + 41, 0.0) == doctest::Approx(1.0));
    CHECK(std::accumulate(row + 41, row + 44, 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("age bucket boundaries: 35 and 45 fall in the middle bucket") {
  CHECK(age_bucket(34) == 0);
  CHECK(age_bucket(35) == 1);
  CHECK(age_bucket(45) == 1);
  CHECK(age_bucket(46) == 2);
}

TEST_CASE("lower median for even rating counts") {
  const InteractionData d = parse_interactions("1\t1\t2\t0\n1\t2\t5\t0\n");
  const BipartiteGraph g = build_graph(d.interactions, 1, 2);
  const auto profiles = parse_user_profiles("1|24|M|technician|85711\n");
  const auto [features, schema] =
      engineer_features(g, d.interactions, align_profiles(profiles, d.users));
  CHECK(features.at(0, 14) == doctest::Approx(2.0));  // lower of {2, 5}
}

TEST_CASE("zero-rating users get zero statistics and a valid one-hot block") {
  // Graph sized for 2 users, but only user 0 has interactions.
  const std::vector<Interaction> ints = {{0, 0, 4, 0}};
  const BipartiteGraph g = build_graph(ints, 2, 1);
  std::vector<UserProfile> profiles(2);
  profiles[0] = {1, 24, 0, 0};
  profiles[1] = {2, 50, 1, 3};
  const auto [features, schema] = engineer_features(g, ints, profiles);
  const double* u1 = features.row(1);
  for (int c = 0; c < 18; ++c) CHECK(u1[c] == 0.0);
  CHECK(u1[19] == 1.0);        // gender F
  CHECK(u1[20 + 3] == 1.0);    // occupation index 3
  CHECK(u1[41 + 2] == 1.0);    // age 50 -> bucket 2
}

TEST_CASE("per-user rating ratios sum to 1 and entropy is bounded") {
  SyntheticConfig cfg;
  cfg.num_users = 80;
  cfg.num_items = 150;
  cfg.num_ratings = 2600;
  cfg.max_ratings_per_user = 120;
  const SyntheticData raw = generate_dataset(cfg);
  const InteractionData d = parse_interactions(raw.u_data);
  const BipartiteGraph g = build_graph(d.interactions, d.users.size(), d.items.size());
  const auto profiles = align_profiles(parse_user_profiles(raw.u_user), d.users);
  const auto [features, schema] = engineer_features(g, d.interactions, profiles);
  for (int u = 0; u < features.rows; ++u) {
    const double* row = features.row(u);
    const double ratio_sum = std::accumulate(row + 6, row + 11, 0.0);
    CHECK(ratio_sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row[13] >= 0.0);
    CHECK(row[13] <= std::log(5.0) + 1e-12);
    int levels_used = 0;
    for (int l = 0; l < 5; ++l) levels_used += row[1 + l] > 0.0 ? 1 : 0;
    if (levels_used == 1) CHECK(row[13] == doctest::Approx(0.0));
  }
}

TEST_CASE("independent single-pass tally oracle for one synthetic user") {
  SyntheticConfig cfg;
  cfg.num_users = 60;
  cfg.num_items = 120;
  cfg.num_ratings = 2000;
  cfg.max_ratings_per_user = 100;
  cfg.seed = 17;
  const SyntheticData raw = generate_dataset(cfg);
  const InteractionData d = parse_interactions(raw.u_data);
  const BipartiteGraph g = build_graph(d.interactions, d.users.size(), d.items.size());
  const auto profiles = align_profiles(parse_user_profiles(raw.u_user), d.users);
  const auto [features, schema] = engineer_features(g, d.interactions, profiles);

  for (const int u : {0, 7, 31}) {
    std::vector<int> ratings;
    for (const auto& it : d.interactions) {
      if (it.user == u) ratings.push_back(it.rating);
    }
    REQUIRE(!ratings.empty());
    const double n = static_cast<double>(ratings.size());
    double counts[5] = {0, 0, 0, 0, 0};
    for (const int r : ratings) counts[r - 1] += 1.0;
    double entropy = 0.0;
    for (const double c : counts) {
      if (c > 0.0) entropy -= (c / n) * std::log(c / n);
    }
    std::sort(ratings.begin(), ratings.end());
    const double median = ratings[(ratings.size() - 1) / 2];
    const double mean = std::accumulate(ratings.begin(), ratings.end(), 0.0) / n;

    const double* row = features.row(u);
    CHECK(row[0] == doctest::Approx(n));
    for (int l = 0; l < 5; ++l) {
      CHECK(row[1 + l] == doctest::Approx(counts[l]));
      CHECK(row[6 + l] == doctest::Approx(counts[l] / n));
    }
    CHECK(row[11] == doctest::Approx((counts[3] + counts[4]) / n));
    CHECK(row[12] == doctest::Approx((counts[0] + counts[1]) / n));
    CHECK(row[13] == doctest::Approx(entropy).epsilon(1e-12));
    CHECK(row[14] == doctest::Approx(median));
    CHECK(row[15] == doctest::Approx(ratings.front()));
    CHECK(row[16] == doctest::Approx(ratings.back()));
    CHECK(row[17] == doctest::Approx(mean));
  }
}

TEST_CASE("normalization maps numerical columns onto [-1, 1]") {
  FeatureSchema schema;
  schema.features.push_back({"a", FeatureKind::kNumerical, 1, 0});
  schema.features.push_back({"b", FeatureKind::kNumerical, 1, 1});
  schema.features.push_back({"c", FeatureKind::kNumerical, 1, 2});
  schema.features.push_back({"g", FeatureKind::kCategorical, 2, 3});
  FeatureMatrix m(3, 5);
  const double rows[3][5] = {{0, 3, 1, 1, 0}, {5, 3, 2, 0, 1}, {10, 3, 4, 1, 0}};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 5; ++c) m.at(r, c) = rows[r][c];
  }
  normalize_numericals(m, schema);
  CHECK(m.at(0, 0) == doctest::Approx(-1.0));
  CHECK(m.at(1, 0) == doctest::Approx(0.0));
  CHECK(m.at(2, 0) == doctest::Approx(1.0));
  // Constant column maps to 0.
  for (int r = 0; r < 3; ++r) CHECK(m.at(r, 1) == doctest::Approx(0.0));
  CHECK(m.at(0, 2) == doctest::Approx(-1.0));
  CHECK(m.at(1, 2) == doctest::Approx(-1.0 / 3.0));
  CHECK(m.at(2, 2) == doctest::Approx(1.0));
  // Categorical columns untouched.
  CHECK(m.at(0, 3) == 1.0);
  CHECK(m.at(1, 4) == 1.0);
  // Stats recorded for reuse.
  CHECK(schema.col_min[0] == doctest::Approx(0.0));
  CHECK(schema.col_max[0] == doctest::Approx(10.0));
  CHECK(schema.col_min[2] == doctest::Approx(1.0));
  CHECK(schema.col_max[2] == doctest::Approx(4.0));
}

TEST_CASE("non-constant normalized columns attain both endpoints") {
  SyntheticConfig cfg;
  cfg.num_users = 50;
  cfg.num_items = 100;
  cfg.num_ratings = 1500;
  cfg.max_ratings_per_user = 80;
  const SyntheticData raw = generate_dataset(cfg);
  const InteractionData d = parse_interactions(raw.u_data);
  const BipartiteGraph g = build_graph(d.interactions, d.users.size(), d.items.size());
  const auto profiles = align_profiles(parse_user_profiles(raw.u_user), d.users);
  auto [features, schema] = engineer_features(g, d.interactions, profiles);
  normalize_numericals(features, schema);
  for (int c = 0; c < 18; ++c) {
    double lo = 1e9, hi = -1e9;
    for (int u = 0; u < features.rows; ++u) {
      lo = std::min(lo, features.at(u, c));
      hi = std::max(hi, features.at(u, c));
    }
    CHECK(lo >= -1.0 - 1e-12);
    CHECK(hi <= 1.0 + 1e-12);
    if (schema.col_max[c] > schema.col_min[c]) {
      CHECK(lo == doctest::Approx(-1.0));
      CHECK(hi == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("per-user split keeps ceil(ratio * degree) in train") {
  std::vector<Interaction> ints;
  for (int v = 0; v < 5; ++v) ints.push_back({0, v, 3, 0});  // degree 5 -> 4 train
  ints.push_back({1, 0, 4, 0});                              // degree 1 -> all train
  for (int v = 0; v < 3; ++v) ints.push_back({2, v, 2, 0});  // degree 3 -> 3 train? ceil(2.4)=3
  const BipartiteGraph g = build_graph(ints, 3, 5);
  const DataSplit split = split_per_user(g, 0.8, 11);
  CHECK(split.train.user_items[0].size() == 4);
  CHECK(split.test_items[0].size() == 1);
  CHECK(split.train.user_items[1].size() == 1);
  CHECK(split.test_items[1].empty());
  CHECK(split.train.user_items[2].size() == 3);
  CHECK(split.test_items[2].empty());
}

TEST_CASE("split is a partition and deterministic per seed") {
  SyntheticConfig cfg;
  cfg.num_users = 70;
  cfg.num_items = 140;
  cfg.num_ratings = 2400;
  cfg.max_ratings_per_user = 90;
  const SyntheticData raw = generate_dataset(cfg);
  const InteractionData d = parse_interactions(raw.u_data);
  const BipartiteGraph g = build_graph(d.interactions, d.users.size(), d.items.size());
  const DataSplit a = split_per_user(g, 0.8, 5);
  const DataSplit b = split_per_user(g, 0.8, 5);
  const DataSplit c = split_per_user(g, 0.8, 6);
  size_t total = 0;
  bool differs = false;
  for (int u = 0; u < g.num_users; ++u) {
    // Partition: train + test = original, disjoint.
    std::vector<int> merged = a.train.user_items[u];
    merged.insert(merged.end(), a.test_items[u].begin(), a.test_items[u].end());
    std::sort(merged.begin(), merged.end());
    CHECK(merged == g.user_items[u]);
    CHECK(std::adjacent_find(merged.begin(), merged.end()) == merged.end());
    // Determinism.
    CHECK(a.train.user_items[u] == b.train.user_items[u]);
    CHECK(a.test_items[u] == b.test_items[u]);
    if (a.test_items[u] != c.test_items[u]) differs = true;
    CHECK(std::is_sorted(a.test_items[u].begin(), a.test_items[u].end()));
    total += a.train.user_items[u].size() + a.test_items[u].size();
  }
  CHECK(total == g.num_edges);
  CHECK(differs);  // a different seed moves at least one user's holdout
  // Item adjacency of the train graph is consistent with the user lists.
  size_t item_side = 0;
  for (int v = 0; v < g.num_items; ++v) item_side += a.train.item_users[v].size();
  CHECK(item_side == a.train.num_edges);
}

TEST_CASE("schema JSON round trip") {
  const InteractionData d = parse_interactions("1\t1\t5\t0\n2\t1\t3\t0\n");
  const BipartiteGraph g = build_graph(d.interactions, 2, 1);
  const auto profiles = parse_user_profiles("1|24|M|technician|85711\n2|53|F|other|94043\n");
  auto [features, schema] = engineer_features(g, d.interactions, align_profiles(profiles, d.users));
  normalize_numericals(features, schema);
  const FeatureSchema back = schema_from_json(schema_to_json(schema));
  REQUIRE(back.features.size() == schema.features.size());
  for (size_t i = 0; i < schema.features.size(); ++i) {
    CHECK(back.features[i].name == schema.features[i].name);
    CHECK(back.features[i].kind == schema.features[i].kind);
    CHECK(back.features[i].width == schema.features[i].width);
    CHECK(back.features[i].offset == schema.features[i].offset);
  }
  CHECK(back.col_min == schema.col_min);
  CHECK(back.col_max == schema.col_max);
}

TEST_CASE("feature matrix TSV round trip") {
  FeatureMatrix m(2, 3);
  m.at(0, 0) = 0.125;
  m.at(0, 1) = -1.0;
  m.at(0, 2) = 0.333333333333333315;
  m.at(1, 0) = 5e-17;
  m.at(1, 1) = 2.0;
  m.at(1, 2) = 0.0;
  const fs::path p = temp_dir("fm") / "features.tsv";
  save_feature_matrix(m, p);
  const FeatureMatrix back = load_feature_matrix(p);
  CHECK(back.rows == 2);
  CHECK(back.cols == 3);
  CHECK(back.data == m.data);  // bit-exact round trip
  fs::remove(p);
}

TEST_CASE("load_dataset reads a directory pair") {
  const fs::path dir = temp_dir("ds");
  SyntheticConfig cfg;
  cfg.num_users = 40;
  cfg.num_items = 80;
  cfg.num_ratings = 1200;
  cfg.max_ratings_per_user = 70;
  write_dataset(cfg, dir);
  const Dataset ds = load_dataset(dir);
  CHECK(ds.raw.users.size() == 40);
  CHECK(ds.raw.items.size() == 80);
  CHECK(ds.raw.interactions.size() == 1200);
  CHECK(ds.graph.num_users == 40);
  CHECK(ds.graph.num_items == 80);
  CHECK(ds.profiles.size() == 40);
  // Profiles are aligned: dense index u holds the profile whose original id
  // matches the remap table.
  for (int u = 0; u < 40; ++u) {
    CHECK(ds.profiles[u].user_id == ds.raw.users.to_original[u]);
  }
  fs::remove_all(dir);
}

}  // TEST_SUITE
