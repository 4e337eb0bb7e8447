#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "privrec/ad.hpp"
#include "privrec/functional_mechanism.hpp"
#include "privrec/model.hpp"
#include "privrec/rng.hpp"
#include "privrec/types.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace privrec {

struct TrainConfig {
  int d = 60;
  double lr = 0.005;
  int batch_size = 64;
  int epochs = 15;
  double gamma = 0.01;
  double epsilon = 0.4;         // objective-perturbation budget
  double epsilon_local = 20.0;  // feature-perturbation budget (spent by caller)
  bool use_feature_perturbation = true;  // caller perturbs features when set
  bool use_loss_perturbation = true;
  double sigma_init = 0.3;
  int neighbor_cap = 10;  // per-forward-pass neighbor subsample during training
  uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;  // mean per-triple objective incl. noise + L2 share
};

template <typename S>
struct TrainResult {
  ModelParams<S> params;
  NoisePolynomial noise;  // empty when loss perturbation is off
  std::vector<EpochStats> epochs;
};

namespace detail {

// Node ids use one shared column space: users 0..U-1, items U..U+I-1.
template <typename S>
struct TapeModel {
  int user_emb, item_emb;
  int mlp_w0, mlp_b0, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  int agg_w, agg_b, att_w1, att_b1, att_w2, att_b2;
  int score_w, score_b, proj_h;

  std::vector<int> all;  // leaf ids in for_each_tensor order

  static TapeModel load(ad::Tape<S>& tape, const ModelParams<S>& p) {
    TapeModel tm;
    int* slots[] = {&tm.user_emb, &tm.item_emb, &tm.mlp_w0, &tm.mlp_b0, &tm.mlp_w1,
                    &tm.mlp_b1,   &tm.mlp_w2,   &tm.mlp_b2, &tm.agg_w,  &tm.agg_b,
                    &tm.att_w1,   &tm.att_b1,   &tm.att_w2, &tm.att_b2, &tm.score_w,
                    &tm.score_b,  &tm.proj_h};
    int next = 0;
    p.for_each_tensor([&](const char*, const ad::MatX<S>& m) {
      const int id = tape.leaf(m);
      *slots[next++] = id;
      tm.all.push_back(id);
    });
    return tm;
  }
};

// One "star" per center node: the center's self-message plus its (possibly
// subsampled) neighbor messages, all indexed into the shared column space.
struct StarPlan {
  std::vector<int> centers;     // per star: center node id
  std::vector<int> msg_node;    // per message column: message source node id
  std::vector<int> msg_center;  // per message column: the star's center node id
  std::vector<int> msg_seg;     // per message column: star index
  int num_stars() const { return static_cast<int>(centers.size()); }
};

// Neighbors of a node in the shared space: a user's rated items, an item's
// raters. Subsampled without replacement above `cap`, then sorted so the
// summation order is fixed.
inline std::vector<int> star_neighbors(const BipartiteGraph& train, int node, int cap,
                                       Rng& rng) {
  const int U = train.num_users;
  const bool is_user = node < U;
  const std::vector<int>& adj = is_user ? train.user_items[node] : train.item_users[node - U];
  std::vector<int> picked;
  const int deg = static_cast<int>(adj.size());
  if (cap > 0 && deg > cap) {
    std::vector<int> at = rng.sample_without_replacement(deg, cap);
    std::sort(at.begin(), at.end());
    picked.reserve(cap);
    for (const int i : at) picked.push_back(adj[i]);
  } else {
    picked = adj;
  }
  if (is_user) {
    for (int& v : picked) v += U;
  }
  return picked;
}

inline StarPlan build_star_plan(const BipartiteGraph& train, const std::vector<int>& centers,
                                int cap, Rng& rng) {
  StarPlan plan;
  plan.centers = centers;
  for (size_t s = 0; s < centers.size(); ++s) {
    const int c = centers[s];
    plan.msg_node.push_back(c);  // self-message first
    plan.msg_center.push_back(c);
    plan.msg_seg.push_back(static_cast<int>(s));
    for (const int n : star_neighbors(train, c, cap, rng)) {
      plan.msg_node.push_back(n);
      plan.msg_center.push_back(c);
      plan.msg_seg.push_back(static_cast<int>(s));
    }
  }
  return plan;
}

// d x (U+I) base embeddings: E_U X for users, E_V columns for items.
template <typename S>
int all_base_embeddings(ad::Tape<S>& tape, const TapeModel<S>& tm, int x_leaf) {
  const int zu = tape.matmul(tm.user_emb, x_leaf);
  return tape.hcat(zu, tm.item_emb);
}

template <typename S>
int all_messages(ad::Tape<S>& tape, const TapeModel<S>& tm, int zall) {
  const int h0 = tape.relu(tape.add_bias(tape.matmul(tm.mlp_w0, zall), tm.mlp_b0));
  const int h1 = tape.relu(tape.add_bias(tape.matmul(tm.mlp_w1, h0), tm.mlp_b1));
  return tape.add_bias(tape.matmul(tm.mlp_w2, h1), tm.mlp_b2);
}

// Attention-weighted aggregation for every star; returns a d x num_stars node.
template <typename S>
int star_embeddings(ad::Tape<S>& tape, const TapeModel<S>& tm, int zall, int mall,
                    const StarPlan& plan) {
  const int g = tape.vstack_gather(mall, zall, plan.msg_node, plan.msg_center);
  const int hidden = tape.logistic(tape.add_bias(tape.matmul(tm.att_w1, g), tm.att_b1));
  const int scores = tape.add_scalar(tape.row_vec_mat(tm.att_w2, hidden), tm.att_b2);
  const int alpha = tape.segment_softmax(scores, plan.msg_seg, plan.num_stars());
  const int agg = tape.segment_weighted_cols(mall, plan.msg_node, alpha, plan.msg_seg,
                                             plan.num_stars());
  return tape.relu(tape.add_bias(tape.matmul(tm.agg_w, agg), tm.agg_b));
}

// features (rows x cols, row-major) -> d0 x U Eigen matrix of feature columns.
template <typename S>
ad::MatX<S> feature_columns(const FeatureMatrix& features) {
  ad::MatX<S> x(features.cols, features.rows);
  for (int u = 0; u < features.rows; ++u) {
    for (int j = 0; j < features.cols; ++j) {
      x(j, u) = static_cast<S>(features.at(u, j));
    }
  }
  return x;
}

}  // namespace detail

// One SGD step over `triples`; returns the batch objective value. Exposed so
// gradient-check tests can drive single steps on tiny instances.
template <typename S>
S train_step(ModelParams<S>& params, const BipartiteGraph& train_graph,
             const ad::MatX<S>& x_cols, const std::vector<TrainingTriple>& triples,
             const TrainConfig& cfg, const NoisePolynomial& noise, int64_t dataset_size,
             Rng& rng, bool apply_update = true) {
  const int U = train_graph.num_users;
  const int B = static_cast<int>(triples.size());
  if (B == 0) throw std::invalid_argument("train_step: empty batch");

  ad::Tape<S> tape;
  const auto tm = detail::TapeModel<S>::load(tape, params);
  const int x_leaf = tape.leaf(x_cols, /*needs_grad=*/false);

  // Unique stars for the batch: each triple's user plus its two items.
  std::vector<int> centers;
  std::vector<int> star_of(static_cast<size_t>(U) + train_graph.num_items, -1);
  const auto star_index = [&](int node) {
    if (star_of[node] < 0) {
      star_of[node] = static_cast<int>(centers.size());
      centers.push_back(node);
    }
    return star_of[node];
  };
  std::vector<int> user_star(B), pos_star(B), neg_star(B);
  for (int t = 0; t < B; ++t) {
    user_star[t] = star_index(triples[t].user);
    pos_star[t] = star_index(U + triples[t].pos);
    neg_star[t] = star_index(U + triples[t].neg);
  }
  const detail::StarPlan plan =
      detail::build_star_plan(train_graph, centers, cfg.neighbor_cap, rng);

  const int zall = detail::all_base_embeddings(tape, tm, x_leaf);
  const int mall = detail::all_messages(tape, tm, zall);
  const int zstar = detail::star_embeddings(tape, tm, zall, mall, plan);

  // Pair inputs: B positive columns then B negative columns.
  std::vector<int> top(2 * B), bottom(2 * B);
  for (int t = 0; t < B; ++t) {
    top[t] = user_star[t];
    bottom[t] = pos_star[t];
    top[B + t] = user_star[t];
    bottom[B + t] = neg_star[t];
  }
  const int qin = tape.vstack_gather(zstar, zstar, top, bottom);
  const int q = tape.clamp_max1(tape.relu(tape.add_bias(tape.matmul(tm.score_w, qin), tm.score_b)));
  const int ss = tape.row_vec_mat(tm.proj_h, q);
  const int sbar = tape.sub(tape.cols_range(ss, 0, B), tape.cols_range(ss, B, B));

  std::vector<std::pair<int, S>> terms;
  terms.emplace_back(cfg.use_loss_perturbation ? tape.taylor_sum(sbar)
                                               : tape.softplus_neg_sum(sbar),
                     S(1));
  if (cfg.use_loss_perturbation) {
    ad::VecX<S> n1(noise.d);
    ad::MatX<S> n2(noise.d, noise.d);
    for (int i = 0; i < noise.d; ++i) n1(i) = static_cast<S>(noise.n1[i]);
    for (int i = 0; i < noise.d; ++i)
      for (int j = 0; j < noise.d; ++j) n2(i, j) = static_cast<S>(noise.at2(i, j));
    const S frac = static_cast<S>(static_cast<double>(B) / static_cast<double>(dataset_size));
    terms.emplace_back(tape.quad_noise(tm.proj_h, std::move(n1), std::move(n2), frac), S(1));
  }
  for (const int leaf : tm.all) terms.emplace_back(tape.sum_sq(leaf), static_cast<S>(cfg.gamma));
  const int loss = tape.scale_add(std::move(terms));

  tape.backward(loss);
  if (apply_update) {
    int next = 0;
    params.for_each_tensor([&](const char*, ad::MatX<S>& m) {
      m -= static_cast<S>(cfg.lr) * tape.grad(tm.all[next++]);
    });
  }
  return tape.scalar(loss);
}

// Minibatch SGD over epochs of the positive train edges with fresh uniform
// negatives each epoch. Objective is either the exact pairwise loss or its
// truncated form plus the Laplace noise polynomial, always with the L2 term.
template <typename S>
TrainResult<S> train_model(const BipartiteGraph& train_graph, const BipartiteGraph& full_graph,
                           const FeatureMatrix& features, const TrainConfig& cfg) {
  if (features.rows != train_graph.num_users) {
    throw std::invalid_argument("train_model: features do not cover the users");
  }
#if defined(__GLIBC__)
  // The tape allocates multi-hundred-KB activation buffers every step; keep
  // them on the heap instead of round-tripping through mmap/munmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 28);
  mallopt(M_TRIM_THRESHOLD, 1 << 28);
#endif
  TrainResult<S> result;
  result.params = init_params<S>(cfg.d, features.cols, train_graph.num_items, cfg.seed,
                                 cfg.sigma_init);
  const int64_t dataset_size = train_graph.num_edges;
  const Rng base(cfg.seed);
  if (cfg.use_loss_perturbation) {
    Rng noise_rng = base.fork(0xF);
    result.noise = draw_noise_polynomial(cfg.d, global_sensitivity(cfg.d), cfg.epsilon,
                                         dataset_size, noise_rng);
  }

  // Positive edge list, reshuffled per epoch.
  std::vector<TrainingTriple> triples;
  triples.reserve(dataset_size);
  for (int u = 0; u < train_graph.num_users; ++u) {
    for (const int v : train_graph.user_items[u]) triples.push_back({u, v, -1});
  }
  ad::MatX<S> x_cols = detail::feature_columns<S>(features);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = base.fork(0xE00 + static_cast<uint64_t>(epoch));
    rng.shuffle(triples);
    for (auto& t : triples) {
      if (static_cast<int>(full_graph.user_items[t.user].size()) >= full_graph.num_items) {
        throw std::runtime_error("train_model: user has rated every item");
      }
      do {
        t.neg = static_cast<int>(rng.uniform_int(full_graph.num_items));
      } while (full_graph.has_edge(t.user, t.neg));
    }
    double loss_sum = 0.0;
    int64_t seen = 0;
    for (size_t start = 0; start < triples.size(); start += cfg.batch_size) {
      const size_t stop = std::min(triples.size(), start + cfg.batch_size);
      const std::vector<TrainingTriple> batch(triples.begin() + start, triples.begin() + stop);
      const S loss = train_step<S>(result.params, train_graph, x_cols, batch, cfg,
                                   result.noise, dataset_size, rng);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw std::runtime_error("train_model: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", triple offset " +
                                 std::to_string(start) + "; lower the learning rate");
      }
      loss_sum += static_cast<double>(loss);
      seen += static_cast<int64_t>(batch.size());
    }
    result.epochs.push_back({epoch, loss_sum / static_cast<double>(seen)});
  }
  return result;
}

}  // namespace privrec
