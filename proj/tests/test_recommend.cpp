#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "privrec/dataset.hpp"
#include "privrec/model.hpp"
#include "privrec/recommend.hpp"

using namespace privrec;

namespace {

BipartiteGraph tiny_graph() {
  std::vector<Interaction> ints = {{0, 0, 5, 0}, {0, 1, 4, 0}, {1, 1, 3, 0}, {1, 2, 2, 0},
                                   {2, 0, 1, 0}, {2, 3, 5, 0}};
  return build_graph(ints, 3, 4);
}

FeatureMatrix tiny_features() {
  FeatureMatrix m(3, 3);
  const double rows[3][3] = {{0.2, -0.4, 1.0}, {-0.9, 0.3, 0.0}, {0.5, 0.8, -0.2}};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m.at(r, c) = rows[r][c];
  }
  return m;
}

bool same_lists(const std::vector<RankedList>& a, const std::vector<RankedList>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].user != b[i].user || a[i].items != b[i].items || a[i].scores != b[i].scores) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("recommend") {

TEST_CASE("ranked lists never contain train items and have the right length") {
  const BipartiteGraph g = tiny_graph();
  const auto p = init_params<double>(4, 3, 4, 13, 0.4);
  InferenceConfig cfg;
  const auto lists = recommend_topk_all(p, tiny_features(), g, 2, cfg);
  REQUIRE(lists.size() == 3);
  for (int u = 0; u < 3; ++u) {
    CHECK(lists[u].user == u);
    const size_t unseen = 4 - g.user_items[u].size();
    CHECK(lists[u].items.size() == std::min<size_t>(2, unseen));
    CHECK(lists[u].items.size() == lists[u].scores.size());
    for (const int v : lists[u].items) {
      CHECK_FALSE(g.has_edge(u, v));
    }
    for (size_t i = 1; i < lists[u].scores.size(); ++i) {
      CHECK(lists[u].scores[i - 1] >= lists[u].scores[i]);
    }
  }
}

TEST_CASE("all-zero parameters fall back to ascending item ids") {
  const BipartiteGraph g = tiny_graph();
  const auto p = init_params<double>(4, 3, 4, 0, 0.0);  // every score is 0
  const auto lists = recommend_topk_all(p, tiny_features(), g, 4, InferenceConfig{});
  // user 0 rated {0,1}: ties broken toward the smaller id
  CHECK(lists[0].items == std::vector<int>{2, 3});
  CHECK(lists[1].items == std::vector<int>{0, 3});
  CHECK(lists[2].items == std::vector<int>{1, 2});
  for (const double s : lists[0].scores) CHECK(s == 0.0);
}

TEST_CASE("chunk size does not change the output") {
  const BipartiteGraph g = tiny_graph();
  const FeatureMatrix f = tiny_features();
  const auto p = init_params<double>(5, 3, 4, 77, 0.4);
  InferenceConfig a, b, c;
  a.chunk = 256;
  b.chunk = 3;
  c.chunk = 1;
  const auto la = recommend_topk_all(p, f, g, 3, a);
  CHECK(same_lists(la, recommend_topk_all(p, f, g, 3, b)));
  CHECK(same_lists(la, recommend_topk_all(p, f, g, 3, c)));

  // Same property when the cap forces neighbor subsampling: the subsample is
  // keyed on the node id, not on the chunk layout.
  a.neighbor_cap = b.neighbor_cap = c.neighbor_cap = 1;
  const auto sa = recommend_topk_all(p, f, g, 3, a);
  CHECK(same_lists(sa, recommend_topk_all(p, f, g, 3, b)));
  CHECK(same_lists(sa, recommend_topk_all(p, f, g, 3, c)));
}

TEST_CASE("caps above the maximum degree are all equivalent") {
  const BipartiteGraph g = tiny_graph();
  const FeatureMatrix f = tiny_features();
  const auto p = init_params<double>(5, 3, 4, 31, 0.4);
  InferenceConfig big, bigger;
  big.neighbor_cap = 100;
  bigger.neighbor_cap = 100000;
  CHECK(same_lists(recommend_topk_all(p, f, g, 3, big),
                   recommend_topk_all(p, f, g, 3, bigger)));
}

TEST_CASE("single-user helper matches the all-users path") {
  const BipartiteGraph g = tiny_graph();
  const FeatureMatrix f = tiny_features();
  const auto p = init_params<double>(4, 3, 4, 5, 0.4);
  const auto all = recommend_topk_all(p, f, g, 2, InferenceConfig{});
  for (int u = 0; u < 3; ++u) {
    const RankedList one = recommend_topk(p, f, g, u, 2, InferenceConfig{});
    CHECK(one.user == all[u].user);
    CHECK(one.items == all[u].items);
    CHECK(one.scores == all[u].scores);
  }
}

TEST_CASE("dense inference scores agree with the per-pair reference") {
  const BipartiteGraph g = tiny_graph();
  const FeatureMatrix f = tiny_features();
  const auto p = init_params<double>(6, 3, 4, 41, 0.4);
  InferenceConfig cfg;  // cap 200 >> max degree: full neighborhoods on both paths
  const auto stars = compute_star_embeddings(p, g, f, cfg);
  const PairScorer<double> scorer(p, stars);
  for (int u = 0; u < 3; ++u) {
    const auto row = scorer.score_user(u);
    for (int v = 0; v < 4; ++v) {
      CHECK(row(v) == doctest::Approx(reference_score(p, g, f, u, v)).epsilon(1e-11));
    }
  }
}

TEST_CASE("inference is deterministic, including under subsampling") {
  const BipartiteGraph g = tiny_graph();
  const FeatureMatrix f = tiny_features();
  const auto p = init_params<double>(4, 3, 4, 23, 0.4);
  InferenceConfig cfg;
  cfg.neighbor_cap = 1;
  const auto a = recommend_topk_all(p, f, g, 3, cfg);
  const auto b = recommend_topk_all(p, f, g, 3, cfg);
  CHECK(same_lists(a, b));
  // A different subsample seed may reorder things, but must still be valid.
  cfg.seed = 2;
  const auto c = recommend_topk_all(p, f, g, 3, cfg);
  REQUIRE(c.size() == 3);
  for (const auto& l : c) CHECK(l.items.size() == std::min<size_t>(3, 4 - g.user_items[l.user].size()));
}

TEST_CASE("invalid arguments are rejected") {
  const BipartiteGraph g = tiny_graph();
  const FeatureMatrix f = tiny_features();
  const auto p = init_params<double>(4, 3, 4, 7, 0.3);
  CHECK_THROWS_AS(recommend_topk_all(p, f, g, 0, InferenceConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(recommend_topk(p, f, g, -1, 2, InferenceConfig{}), std::out_of_range);
  CHECK_THROWS_AS(recommend_topk(p, f, g, 3, 2, InferenceConfig{}), std::out_of_range);
  FeatureMatrix wrong(3, 2);  // d0 is 3
  CHECK_THROWS_AS(recommend_topk_all(p, wrong, g, 2, InferenceConfig{}), std::invalid_argument);
}

}  // TEST_SUITE
