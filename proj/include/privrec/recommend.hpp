#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "privrec/model.hpp"
#include "privrec/trainer.hpp"
#include "privrec/types.hpp"

namespace privrec {

struct RankedList {
  int user = 0;
  std::vector<int> items;      // dense ids, best first, train items excluded
  std::vector<double> scores;  // matching scores
};

struct InferenceConfig {
  int neighbor_cap = 200;  // full neighborhoods below this size
  int chunk = 256;         // stars aggregated per block
  uint64_t seed = 1;       // drives subsampling of over-cap neighborhoods
};

template <typename S>
struct StarEmbeddings {
  ad::MatX<S> users;  // d x U
  ad::MatX<S> items;  // d x I
};

// Inference-time forward pass over every node, done in plain Eigen (no tape;
// nothing needs gradients here). Per-node neighbor subsampling draws from a
// stream forked off the node id, so results do not depend on chunking.
template <typename S>
StarEmbeddings<S> compute_star_embeddings(const ModelParams<S>& p,
                                          const BipartiteGraph& train,
                                          const FeatureMatrix& features,
                                          const InferenceConfig& cfg) {
  using Mat = ad::MatX<S>;
  const int U = train.num_users, I = train.num_items, d = p.d;
  if (features.rows != U || features.cols != p.d0) {
    throw std::invalid_argument("compute_star_embeddings: feature shape mismatch");
  }
  const Mat x = detail::feature_columns<S>(features);
  Mat zall(d, U + I);
  zall.leftCols(U).noalias() = p.user_emb * x;
  zall.rightCols(I) = p.item_emb;
  const auto dense_relu = [](Mat m) { return m.cwiseMax(S(0)); };
  Mat mall = dense_relu((p.mlp_w0 * zall).colwise() + p.mlp_b0.col(0));
  mall = dense_relu((p.mlp_w1 * mall).colwise() + p.mlp_b1.col(0));
  mall = ((p.mlp_w2 * mall).colwise() + p.mlp_b2.col(0)).eval();

  StarEmbeddings<S> out;
  out.users.resize(d, U);
  out.items.resize(d, I);
  const Rng sub_base = Rng(cfg.seed).fork(0x1F);
  const int total = U + I;
  for (int begin = 0; begin < total; begin += cfg.chunk) {
    const int end = std::min(total, begin + cfg.chunk);
    std::vector<int> msg_node, msg_center, msg_seg;
    for (int c = begin; c < end; ++c) {
      Rng node_rng = sub_base.fork(static_cast<uint64_t>(c));
      msg_node.push_back(c);
      msg_center.push_back(c);
      msg_seg.push_back(c - begin);
      for (const int n : detail::star_neighbors(train, c, cfg.neighbor_cap, node_rng)) {
        msg_node.push_back(n);
        msg_center.push_back(c);
        msg_seg.push_back(c - begin);
      }
    }
    const int P = static_cast<int>(msg_node.size());
    Mat g(2 * d, P);
    for (int j = 0; j < P; ++j) {
      g.col(j).head(d) = mall.col(msg_node[j]);
      g.col(j).tail(d) = zall.col(msg_center[j]);
    }
    Mat hidden = ((p.att_w1 * g).colwise() + p.att_b1.col(0));
    hidden = hidden.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
    Eigen::Matrix<S, 1, Eigen::Dynamic> scores =
        (p.att_w2.col(0).transpose() * hidden).array() + p.att_b2(0, 0);

    const int stars = end - begin;
    std::vector<S> seg_max(stars, std::numeric_limits<S>::lowest());
    for (int j = 0; j < P; ++j) seg_max[msg_seg[j]] = std::max(seg_max[msg_seg[j]], scores(j));
    std::vector<S> seg_sum(stars, S(0));
    for (int j = 0; j < P; ++j) {
      scores(j) = std::exp(scores(j) - seg_max[msg_seg[j]]);
      seg_sum[msg_seg[j]] += scores(j);
    }
    Mat agg = Mat::Zero(d, stars);
    for (int j = 0; j < P; ++j) {
      agg.col(msg_seg[j]) += (scores(j) / seg_sum[msg_seg[j]]) * mall.col(msg_node[j]);
    }
    const Mat zstar = dense_relu(((p.agg_w * agg).colwise() + p.agg_b.col(0)));
    for (int c = begin; c < end; ++c) {
      if (c < U) {
        out.users.col(c) = zstar.col(c - begin);
      } else {
        out.items.col(c - U) = zstar.col(c - begin);
      }
    }
  }
  return out;
}

// Scores for one user against every item: q = clip(W3 (z_u* ⊕ z_v*) + b3),
// s = h.q — evaluated as a user half plus an item half of the affine map.
template <typename S>
struct PairScorer {
  ad::MatX<S> user_part;  // d x U: W3_left z_u* + b3
  ad::MatX<S> item_part;  // d x I: W3_right z_v*
  ad::VecX<S> h;

  PairScorer(const ModelParams<S>& p, const StarEmbeddings<S>& stars) {
    const int d = p.d;
    user_part = ((p.score_w.leftCols(d) * stars.users).colwise() + p.score_b.col(0)).eval();
    item_part = (p.score_w.rightCols(d) * stars.items).eval();
    h = p.proj_h.col(0);
  }

  // 1 x I row of scores for user u.
  Eigen::Matrix<S, 1, Eigen::Dynamic> score_user(int u) const {
    ad::MatX<S> q = (item_part.colwise() + user_part.col(u)).cwiseMax(S(0)).cwiseMin(S(1));
    return h.transpose() * q;
  }
};

template <typename S>
std::vector<RankedList> recommend_topk_all(const ModelParams<S>& params,
                                           const FeatureMatrix& features,
                                           const BipartiteGraph& train, int K,
                                           const InferenceConfig& cfg) {
  if (K < 1) throw std::invalid_argument("recommend_topk_all: K must be >= 1");
  const StarEmbeddings<S> stars = compute_star_embeddings(params, train, features, cfg);
  const PairScorer<S> scorer(params, stars);
  std::vector<RankedList> lists(train.num_users);
  bool warned = false;
  for (int u = 0; u < train.num_users; ++u) {
    const auto row = scorer.score_user(u);
    const auto& seen = train.user_items[u];
    std::vector<std::pair<double, int>> cand;
    cand.reserve(train.num_items - seen.size());
    for (int v = 0; v < train.num_items; ++v) {
      if (!std::binary_search(seen.begin(), seen.end(), v)) {
        cand.emplace_back(static_cast<double>(row(v)), v);
      }
    }
    const int take = std::min<int>(K, static_cast<int>(cand.size()));
    if (take < K && !warned) {
      std::cerr << "recommend: user " << u << " has only " << cand.size()
                << " unseen items; returning all of them\n";
      warned = true;
    }
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    lists[u].user = u;
    for (int i = 0; i < take; ++i) {
      lists[u].items.push_back(cand[i].second);
      lists[u].scores.push_back(cand[i].first);
    }
  }
  return lists;
}

template <typename S>
RankedList recommend_topk(const ModelParams<S>& params, const FeatureMatrix& features,
                          const BipartiteGraph& train, int user, int K,
                          const InferenceConfig& cfg) {
  if (user < 0 || user >= train.num_users) throw std::out_of_range("recommend_topk: user");
  return recommend_topk_all(params, features, train, K, cfg)[user];
}

}  // namespace privrec
