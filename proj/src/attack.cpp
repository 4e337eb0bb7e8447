#include "privrec/attack.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "privrec/rng.hpp"

namespace privrec {

int attribute_classes(Attribute attr) {
  switch (attr) {
    case Attribute::kAge:
      return kNumAgeBuckets;
    case Attribute::kGender:
      return 2;
    case Attribute::kOccupation:
      return kNumOccupations;
  }
  throw std::invalid_argument("attribute_classes: bad attribute");
}

int attribute_label(const UserProfile& profile, Attribute attr) {
  switch (attr) {
    case Attribute::kAge:
      return age_bucket(profile.age);
    case Attribute::kGender:
      return profile.gender;
    case Attribute::kOccupation:
      return profile.occupation;
  }
  throw std::invalid_argument("attribute_label: bad attribute");
}

Attribute attribute_from_name(const std::string& name) {
  if (name == "age") return Attribute::kAge;
  if (name == "gender") return Attribute::kGender;
  if (name == "occupation") return Attribute::kOccupation;
  throw std::invalid_argument("unknown attribute: " + name);
}

AttackerKind attacker_from_name(const std::string& name) {
  if (name == "nn") return AttackerKind::kTwoLayerNN;
  if (name == "knn") return AttackerKind::kKNearestNeighbors;
  if (name == "nb") return AttackerKind::kNaiveBayes;
  if (name == "logreg") return AttackerKind::kLogisticRegression;
  throw std::invalid_argument("unknown attacker: " + name);
}

F1Average f1_average_from_name(const std::string& name) {
  if (name == "weighted") return F1Average::kWeighted;
  if (name == "macro") return F1Average::kMacro;
  if (name == "micro") return F1Average::kMicro;
  throw std::invalid_argument("unknown f1 average: " + name);
}

AttackDataset build_attack_dataset(const BipartiteGraph& full_graph,
                                   const std::vector<RankedList>& rec_lists,
                                   const std::vector<UserProfile>& profiles,
                                   Attribute attribute) {
  if (static_cast<int>(rec_lists.size()) != full_graph.num_users) {
    throw std::invalid_argument("build_attack_dataset: rec lists must cover all users");
  }
  AttackDataset out;
  out.width = full_graph.num_items;
  out.num_classes = attribute_classes(attribute);
  for (int u = 0; u < full_graph.num_users; ++u) {
    if (u >= static_cast<int>(profiles.size()) || profiles[u].user_id < 0) {
      std::cerr << "attack: no profile for user " << u << ", skipping\n";
      continue;
    }
    AttackExample ex;
    ex.input.assign(out.width, 0);
    for (const int v : full_graph.user_items[u]) ex.input[v] += 1;
    for (const int v : rec_lists[u].items) ex.input[v] += 1;
    ex.label = attribute_label(profiles[u], attribute);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

std::pair<AttackDataset, AttackDataset> split_attack_dataset(const AttackDataset& data,
                                                             double ratio, uint64_t seed) {
  const int n = static_cast<int>(data.examples.size());
  if (n < 5) throw std::invalid_argument("split_attack_dataset: need at least 5 examples");
  std::vector<int> class_count(data.num_classes, 0);
  for (const auto& ex : data.examples) ++class_count[ex.label];
  bool stratify = true;
  for (int c = 0; c < data.num_classes; ++c) {
    if (class_count[c] == 1) stratify = false;
  }

  std::vector<int> train_idx, test_idx;
  Rng rng = Rng(seed).fork(0xA77);
  const auto take = [&](std::vector<int> idx) {
    rng.shuffle(idx);
    int k = static_cast<int>(std::floor(ratio * idx.size() + 0.5));
    k = std::clamp(k, 1, static_cast<int>(idx.size()) - 1);
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + k);
    test_idx.insert(test_idx.end(), idx.begin() + k, idx.end());
  };
  if (stratify) {
    for (int c = 0; c < data.num_classes; ++c) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i) {
        if (data.examples[i].label == c) idx.push_back(i);
      }
      if (!idx.empty()) take(std::move(idx));
    }
  } else {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    take(std::move(idx));
  }
  AttackDataset train{data.width, data.num_classes, {}};
  AttackDataset test{data.width, data.num_classes, {}};
  for (const int i : train_idx) train.examples.push_back(data.examples[i]);
  for (const int i : test_idx) test.examples.push_back(data.examples[i]);
  return {std::move(train), std::move(test)};
}

namespace {

void require_two_classes(const AttackDataset& train) {
  int first = -1;
  for (const auto& ex : train.examples) {
    if (first < 0) first = ex.label;
    if (ex.label != first) return;
  }
  throw std::invalid_argument("train_attacker: train set has a single class");
}

Eigen::MatrixXf to_columns(const AttackDataset& data) {
  Eigen::MatrixXf x(data.width, data.examples.size());
  for (size_t i = 0; i < data.examples.size(); ++i) {
    for (int j = 0; j < data.width; ++j) {
      x(j, static_cast<Eigen::Index>(i)) = static_cast<float>(data.examples[i].input[j]);
    }
  }
  return x;
}

// Softmax classifier trained with minibatch SGD and cross-entropy; with
// hidden > 0 this is the two-layer network, with hidden = 0 plain softmax
// regression.
class GradientAttacker : public Attacker {
 public:
  GradientAttacker(const AttackDataset& train, int hidden, uint64_t seed) {
    require_two_classes(train);
    width_ = train.width;
    hidden_ = hidden;
    const int C = train.num_classes;
    const int n = static_cast<int>(train.examples.size());
    Rng rng = Rng(seed).fork(0x27);
    const auto init = [&](Eigen::MatrixXf& m, int rows, int cols, double sigma) {
      m.resize(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = static_cast<float>(rng.normal(0.0, sigma));
      }
    };
    if (hidden_ > 0) {
      init(w1_, hidden_, width_, std::sqrt(2.0 / width_));
      b1_ = Eigen::VectorXf::Zero(hidden_);
      init(w2_, C, hidden_, std::sqrt(2.0 / hidden_));
      b2_ = Eigen::VectorXf::Zero(C);
    } else {
      init(w2_, C, width_, std::sqrt(1.0 / width_));
      b2_ = Eigen::VectorXf::Zero(C);
    }

    const Eigen::MatrixXf x = to_columns(train);
    constexpr float kLr = 0.01f;
    constexpr int kEpochs = 200, kBatch = 32;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int epoch = 0; epoch < kEpochs; ++epoch) {
      rng.shuffle(order);
      for (int start = 0; start < n; start += kBatch) {
        const int stop = std::min(n, start + kBatch);
        const int B = stop - start;
        Eigen::MatrixXf xb(width_, B);
        for (int i = 0; i < B; ++i) xb.col(i) = x.col(order[start + i]);

        Eigen::MatrixXf hb;  // hidden activations (empty for softmax regression)
        Eigen::MatrixXf logits;
        if (hidden_ > 0) {
          hb = ((w1_ * xb).colwise() + b1_).cwiseMax(0.0f);
          logits = (w2_ * hb).colwise() + b2_;
        } else {
          logits = (w2_ * xb).colwise() + b2_;
        }
        Eigen::MatrixXf p = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp();
        p.array().rowwise() /= p.colwise().sum().array();
        for (int i = 0; i < B; ++i) p(train.examples[order[start + i]].label, i) -= 1.0f;
        p /= static_cast<float>(B);  // d(mean CE)/d(logits)

        if (hidden_ > 0) {
          const Eigen::MatrixXf gh =
              (w2_.transpose() * p).cwiseProduct((hb.array() > 0.0f).cast<float>().matrix());
          w2_ -= kLr * (p * hb.transpose());
          b2_ -= kLr * p.rowwise().sum();
          w1_ -= kLr * (gh * xb.transpose());
          b1_ -= kLr * gh.rowwise().sum();
        } else {
          w2_ -= kLr * (p * xb.transpose());
          b2_ -= kLr * p.rowwise().sum();
        }
      }
    }
  }

  int predict(const std::vector<int>& input) const override {
    Eigen::VectorXf x(width_);
    for (int j = 0; j < width_; ++j) x(j) = static_cast<float>(input[j]);
    Eigen::VectorXf logits;
    if (hidden_ > 0) {
      const Eigen::VectorXf h = ((w1_ * x) + b1_).cwiseMax(0.0f);
      logits = w2_ * h + b2_;
    } else {
      logits = w2_ * x + b2_;
    }
    int best = 0;
    for (int c = 1; c < logits.size(); ++c) {
      if (logits(c) > logits(best)) best = c;
    }
    return best;
  }

 private:
  int width_ = 0, hidden_ = 0;
  Eigen::MatrixXf w1_, w2_;
  Eigen::VectorXf b1_, b2_;
};

class KnnAttacker : public Attacker {
 public:
  KnnAttacker(const AttackDataset& train, int k) : k_(k), classes_(train.num_classes) {
    require_two_classes(train);
    x_ = to_columns(train);
    norms_.resize(x_.cols());
    for (Eigen::Index i = 0; i < x_.cols(); ++i) norms_(i) = x_.col(i).norm();
    labels_.reserve(train.examples.size());
    for (const auto& ex : train.examples) labels_.push_back(ex.label);
  }

  int predict(const std::vector<int>& input) const override {
    Eigen::VectorXf q(x_.rows());
    for (Eigen::Index j = 0; j < q.size(); ++j) q(j) = static_cast<float>(input[j]);
    const float qn = q.norm();
    Eigen::VectorXf sims = x_.transpose() * q;
    for (Eigen::Index i = 0; i < sims.size(); ++i) {
      const float denom = norms_(i) * qn;
      sims(i) = denom > 0.0f ? sims(i) / denom : 0.0f;
    }
    std::vector<int> idx(sims.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    const int take = std::min<int>(k_, static_cast<int>(idx.size()));
    std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int a, int b) {
      return sims(a) != sims(b) ? sims(a) > sims(b) : a < b;
    });
    std::vector<int> votes(classes_, 0);
    for (int i = 0; i < take; ++i) ++votes[labels_[idx[i]]];
    int best = 0;
    for (int c = 1; c < classes_; ++c) {
      if (votes[c] > votes[best]) best = c;
    }
    return best;
  }

 private:
  int k_, classes_;
  Eigen::MatrixXf x_;
  Eigen::VectorXf norms_;
  std::vector<int> labels_;
};

// Multinomial model with add-one smoothing on item counts.
class NaiveBayesAttacker : public Attacker {
 public:
  explicit NaiveBayesAttacker(const AttackDataset& train) {
    require_two_classes(train);
    const int C = train.num_classes, W = train.width;
    log_prior_.assign(C, 0.0);
    log_theta_.assign(C, std::vector<double>(W, 0.0));
    std::vector<double> class_count(C, 0.0);
    std::vector<std::vector<double>> feat(C, std::vector<double>(W, 0.0));
    for (const auto& ex : train.examples) {
      class_count[ex.label] += 1.0;
      for (int j = 0; j < W; ++j) feat[ex.label][j] += ex.input[j];
    }
    const double n = static_cast<double>(train.examples.size());
    for (int c = 0; c < C; ++c) {
      log_prior_[c] = class_count[c] > 0.0 ? std::log(class_count[c] / n)
                                           : -std::numeric_limits<double>::infinity();
      double total = 0.0;
      for (int j = 0; j < W; ++j) total += feat[c][j];
      for (int j = 0; j < W; ++j) {
        log_theta_[c][j] = std::log((feat[c][j] + 1.0) / (total + W));
      }
    }
  }

  int predict(const std::vector<int>& input) const override {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < log_prior_.size(); ++c) {
      double score = log_prior_[c];
      for (size_t j = 0; j < input.size(); ++j) {
        if (input[j] > 0) score += input[j] * log_theta_[c][j];
      }
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(c);
      }
    }
    return best;
  }

 private:
  std::vector<double> log_prior_;
  std::vector<std::vector<double>> log_theta_;
};

}  // namespace

std::unique_ptr<Attacker> train_attacker(AttackerKind kind, const AttackDataset& train,
                                         uint64_t seed) {
  switch (kind) {
    case AttackerKind::kTwoLayerNN:
      return std::make_unique<GradientAttacker>(train, /*hidden=*/100, seed);
    case AttackerKind::kLogisticRegression:
      return std::make_unique<GradientAttacker>(train, /*hidden=*/0, seed);
    case AttackerKind::kKNearestNeighbors:
      return std::make_unique<KnnAttacker>(train, /*k=*/5);
    case AttackerKind::kNaiveBayes:
      return std::make_unique<NaiveBayesAttacker>(train);
  }
  throw std::invalid_argument("train_attacker: bad kind");
}

std::vector<int> predict_all(const Attacker& model, const AttackDataset& data) {
  std::vector<int> out;
  out.reserve(data.examples.size());
  for (const auto& ex : data.examples) out.push_back(model.predict(ex.input));
  return out;
}

double f1_score(const std::vector<int>& predictions, const std::vector<int>& labels,
                int num_classes, F1Average average) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("f1_score: length mismatch");
  }
  const int n = static_cast<int>(labels.size());
  std::vector<int> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0),
      support(num_classes, 0);
  for (int i = 0; i < n; ++i) {
    const int p = predictions[i], l = labels[i];
    if (p < 0 || p >= num_classes || l < 0 || l >= num_classes) {
      throw std::invalid_argument("f1_score: class out of range");
    }
    ++support[l];
    if (p == l) {
      ++tp[l];
    } else {
      ++fp[p];
      ++fn[l];
    }
  }
  if (average == F1Average::kMicro) {
    int tp_sum = 0;
    for (const int v : tp) tp_sum += v;
    return n > 0 ? static_cast<double>(tp_sum) / n : 0.0;
  }
  double weighted = 0.0, macro = 0.0;
  int total_support = 0;
  for (int c = 0; c < num_classes; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    const double f1 = denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
    weighted += support[c] * f1;
    macro += f1;
    total_support += support[c];
  }
  if (average == F1Average::kMacro) return macro / num_classes;
  return total_support > 0 ? weighted / total_support : 0.0;
}

double run_attack(const AttackDataset& data, AttackerKind kind, double split_ratio,
                  uint64_t seed, F1Average average) {
  const auto [train, test] = split_attack_dataset(data, split_ratio, seed);
  const auto model = train_attacker(kind, train, seed);
  const std::vector<int> preds = predict_all(*model, test);
  std::vector<int> labels;
  labels.reserve(test.examples.size());
  for (const auto& ex : test.examples) labels.push_back(ex.label);
  return f1_score(preds, labels, data.num_classes, average);
}

}  // namespace privrec
