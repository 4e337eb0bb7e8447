#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "privrec/ad.hpp"
#include "privrec/rng.hpp"
#include "privrec/types.hpp"

namespace privrec {

// All trainable tensors. Vectors are stored d x 1 and the scalar attention
// bias 1 x 1 so one visitor covers SGD updates, L2 and serialization. The
// message MLP and attention/aggregation tensors are shared between the user
// and item sides.
template <typename S>
struct ModelParams {
  using Mat = ad::MatX<S>;

  int d = 0, d0 = 0, d1 = 0;
  Mat user_emb;           // d x d0
  Mat item_emb;           // d x d1 (columns are item base embeddings)
  Mat mlp_w0, mlp_w1, mlp_w2;  // d x d
  Mat mlp_b0, mlp_b1, mlp_b2;  // d x 1
  Mat agg_w;              // d x d
  Mat agg_b;              // d x 1
  Mat att_w1;             // d x 2d
  Mat att_b1;             // d x 1
  Mat att_w2;             // d x 1
  Mat att_b2;             // 1 x 1
  Mat score_w;            // d x 2d
  Mat score_b;            // d x 1
  Mat proj_h;             // d x 1

  // Visits every tensor in a fixed order; initialization, SGD updates,
  // checkpoints and gradient checks all rely on this order being stable.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn("user_emb", user_emb);
    fn("item_emb", item_emb);
    fn("mlp_w0", mlp_w0);
    fn("mlp_b0", mlp_b0);
    fn("mlp_w1", mlp_w1);
    fn("mlp_b1", mlp_b1);
    fn("mlp_w2", mlp_w2);
    fn("mlp_b2", mlp_b2);
    fn("agg_w", agg_w);
    fn("agg_b", agg_b);
    fn("att_w1", att_w1);
    fn("att_b1", att_b1);
    fn("att_w2", att_w2);
    fn("att_b2", att_b2);
    fn("score_w", score_w);
    fn("score_b", score_b);
    fn("proj_h", proj_h);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](const char* name, Mat& m) { fn(name, static_cast<const Mat&>(m)); });
  }

  S squared_norm() const {
    S total = 0;
    for_each_tensor([&](const char*, const Mat& m) { total += m.squaredNorm(); });
    return total;
  }
};

template <typename S>
ModelParams<S> init_params(int d, int d0, int d1, uint64_t seed, double sigma_init) {
  if (d < 1 || d0 < 1 || d1 < 1) throw std::invalid_argument("init_params: bad dims");
  ModelParams<S> p;
  p.d = d;
  p.d0 = d0;
  p.d1 = d1;
  using Mat = typename ModelParams<S>::Mat;
  p.user_emb.resize(d, d0);
  p.item_emb.resize(d, d1);
  p.mlp_w0.resize(d, d);
  p.mlp_w1.resize(d, d);
  p.mlp_w2.resize(d, d);
  p.mlp_b0.resize(d, 1);
  p.mlp_b1.resize(d, 1);
  p.mlp_b2.resize(d, 1);
  p.agg_w.resize(d, d);
  p.agg_b.resize(d, 1);
  p.att_w1.resize(d, 2 * d);
  p.att_b1.resize(d, 1);
  p.att_w2.resize(d, 1);
  p.att_b2.resize(1, 1);
  p.score_w.resize(d, 2 * d);
  p.score_b.resize(d, 1);
  p.proj_h.resize(d, 1);
  Rng rng = Rng(seed).fork(0xA11);
  p.for_each_tensor([&](const char*, Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = static_cast<S>(rng.normal(0.0, sigma_init));
      }
    }
  });
  return p;
}

// ---- Single-node reference path ------------------------------------------
// Straight-line evaluation used by tests and by the spec-level operations;
// the batched trainer must agree with these on every node.

inline Eigen::VectorXd user_base_embedding(const ModelParams<double>& p,
                                           const Eigen::VectorXd& x_u) {
  if (x_u.size() != p.d0) throw std::invalid_argument("user_base_embedding: bad x_u");
  return p.user_emb * x_u;
}

inline Eigen::VectorXd item_base_embedding(const ModelParams<double>& p, int item_id) {
  if (item_id < 0 || item_id >= p.d1) throw std::out_of_range("item_base_embedding");
  return p.item_emb.col(item_id);
}

inline Eigen::VectorXd message(const ModelParams<double>& p, const Eigen::VectorXd& z) {
  const Eigen::VectorXd h0 =
      ((p.mlp_w0 * z + p.mlp_b0.col(0)).array().max(0.0)).matrix();
  const Eigen::VectorXd h1 =
      ((p.mlp_w1 * h0 + p.mlp_b1.col(0)).array().max(0.0)).matrix();
  return p.mlp_w2 * h1 + p.mlp_b2.col(0);
}

inline std::vector<double> attention_weights(const ModelParams<double>& p,
                                             const std::vector<Eigen::VectorXd>& messages,
                                             const Eigen::VectorXd& z_center) {
  if (messages.empty()) throw std::invalid_argument("attention_weights: no messages");
  std::vector<double> raw(messages.size());
  for (size_t k = 0; k < messages.size(); ++k) {
    Eigen::VectorXd cat(2 * p.d);
    cat << messages[k], z_center;
    const Eigen::ArrayXd pre = (p.att_w1 * cat + p.att_b1.col(0)).array();
    const Eigen::VectorXd hidden = (1.0 / (1.0 + (-pre).exp())).matrix();
    raw[k] = p.att_w2.col(0).dot(hidden) + p.att_b2(0, 0);
  }
  const double m = *std::max_element(raw.begin(), raw.end());
  double total = 0.0;
  std::vector<double> w(raw.size());
  for (size_t k = 0; k < raw.size(); ++k) total += (w[k] = std::exp(raw[k] - m));
  for (double& v : w) v /= total;
  return w;
}

// Self-message plus neighbor messages, attention-weighted, affine + ReLU.
inline Eigen::VectorXd aggregate_node(const ModelParams<double>& p,
                                      const Eigen::VectorXd& center_embedding,
                                      const std::vector<Eigen::VectorXd>& neighbors) {
  std::vector<Eigen::VectorXd> msgs;
  msgs.reserve(neighbors.size() + 1);
  msgs.push_back(message(p, center_embedding));
  for (const auto& z : neighbors) msgs.push_back(message(p, z));
  const std::vector<double> alpha = attention_weights(p, msgs, center_embedding);
  Eigen::VectorXd agg = Eigen::VectorXd::Zero(p.d);
  for (size_t k = 0; k < msgs.size(); ++k) agg += alpha[k] * msgs[k];
  return ((p.agg_w * agg + p.agg_b.col(0)).array().max(0.0)).matrix();
}

struct ScoredPair {
  Eigen::VectorXd q;  // in [0,1]^d
  double s = 0.0;
};

inline ScoredPair score_pair(const ModelParams<double>& p, const Eigen::VectorXd& zu_star,
                             const Eigen::VectorXd& zv_star) {
  Eigen::VectorXd cat(2 * p.d);
  cat << zu_star, zv_star;
  ScoredPair out;
  out.q = ((p.score_w * cat + p.score_b.col(0)).array().max(0.0).min(1.0)).matrix();
  out.s = p.proj_h.col(0).dot(out.q);
  return out;
}

// Full single-pair forward: one-hop aggregation on both sides with the
// nodes' train-graph neighborhoods, then the pair score.
inline double reference_score(const ModelParams<double>& p, const BipartiteGraph& train,
                              const FeatureMatrix& features, int u, int v) {
  const Eigen::VectorXd x_u =
      Eigen::Map<const Eigen::VectorXd>(features.row(u), features.cols);
  const Eigen::VectorXd z_u = user_base_embedding(p, x_u);
  std::vector<Eigen::VectorXd> item_neighbors;
  for (const int i : train.user_items[u]) item_neighbors.push_back(p.item_emb.col(i));
  const Eigen::VectorXd zu_star = aggregate_node(p, z_u, item_neighbors);

  const Eigen::VectorXd z_v = item_base_embedding(p, v);
  std::vector<Eigen::VectorXd> user_neighbors;
  for (const int w : train.item_users[v]) {
    const Eigen::VectorXd x_w =
        Eigen::Map<const Eigen::VectorXd>(features.row(w), features.cols);
    user_neighbors.push_back(user_base_embedding(p, x_w));
  }
  const Eigen::VectorXd zv_star = aggregate_node(p, z_v, user_neighbors);
  return score_pair(p, zu_star, zv_star).s;
}

struct TrainingTriple {
  int user = 0;
  int pos = 0;
  int neg = 0;
};

// Pairwise ranking loss over explicit triples, plus gamma * ||Theta||^2.
inline double bpr_loss(const ModelParams<double>& p, const BipartiteGraph& train,
                       const FeatureMatrix& features,
                       const std::vector<TrainingTriple>& triples, double gamma) {
  double loss = 0.0;
  for (const auto& t : triples) {
    const double s_pos = reference_score(p, train, features, t.user, t.pos);
    const double s_neg = reference_score(p, train, features, t.user, t.neg);
    const double s = s_pos - s_neg;
    loss += s >= 0.0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
  }
  return loss + gamma * p.squared_norm();
}

// Uniform positive edge from `train`, negative rejection-sampled outside the
// user's full-graph neighborhood.
inline std::vector<TrainingTriple> sample_triples(const BipartiteGraph& train,
                                                  const BipartiteGraph& full, int count,
                                                  Rng& rng) {
  std::vector<int64_t> degree_prefix(train.num_users + 1, 0);
  for (int u = 0; u < train.num_users; ++u) {
    degree_prefix[u + 1] = degree_prefix[u] + static_cast<int64_t>(train.user_items[u].size());
  }
  const int64_t num_edges = degree_prefix.back();
  if (num_edges == 0) throw std::invalid_argument("sample_triples: empty train graph");
  std::vector<TrainingTriple> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int64_t e = static_cast<int64_t>(rng.uniform_int(num_edges));
    const int u = static_cast<int>(
        std::upper_bound(degree_prefix.begin(), degree_prefix.end(), e) -
        degree_prefix.begin() - 1);
    const int v = train.user_items[u][e - degree_prefix[u]];
    if (static_cast<int>(full.user_items[u].size()) >= full.num_items) {
      throw std::runtime_error("sample_triples: user " + std::to_string(u) +
                               " has rated every item; no negative exists");
    }
    int neg;
    do {
      neg = static_cast<int>(rng.uniform_int(full.num_items));
    } while (full.has_edge(u, neg));
    out.push_back({u, v, neg});
  }
  return out;
}

}  // namespace privrec
