#include "privrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace privrec {

HitMode hit_mode_from_name(const std::string& name) {
  if (name == "user") return HitMode::kUser;
  if (name == "pair") return HitMode::kPair;
  throw std::invalid_argument("unknown hit mode: " + name);
}

namespace {

void check_inputs(const std::vector<RankedList>& rec_lists,
                  const std::vector<std::vector<int>>& test_sets, int K) {
  if (rec_lists.size() != test_sets.size()) {
    throw std::invalid_argument("metrics: rec lists and test sets differ in length");
  }
  if (K < 1) throw std::invalid_argument("metrics: K must be >= 1");
  for (const auto& t : test_sets) {
    if (!t.empty()) return;
  }
  throw std::invalid_argument("metrics: no user has a held-out item");
}

}  // namespace

double hit_at_k(const std::vector<RankedList>& rec_lists,
                const std::vector<std::vector<int>>& test_sets, int K, HitMode mode) {
  check_inputs(rec_lists, test_sets, K);
  int64_t num = 0, den = 0;
  for (size_t u = 0; u < rec_lists.size(); ++u) {
    const auto& test = test_sets[u];
    if (test.empty()) continue;
    const auto& items = rec_lists[u].items;
    const int top = std::min<int>(K, static_cast<int>(items.size()));
    int hits = 0;
    for (int i = 0; i < top; ++i) {
      if (std::binary_search(test.begin(), test.end(), items[i])) ++hits;
    }
    if (mode == HitMode::kUser) {
      num += hits > 0 ? 1 : 0;
      den += 1;
    } else {
      num += hits;
      den += static_cast<int64_t>(test.size());
    }
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double ndcg_at_k(const std::vector<RankedList>& rec_lists,
                 const std::vector<std::vector<int>>& test_sets, int K) {
  check_inputs(rec_lists, test_sets, K);
  double total = 0.0;
  int users = 0;
  for (size_t u = 0; u < rec_lists.size(); ++u) {
    const auto& test = test_sets[u];
    if (test.empty()) continue;
    const auto& items = rec_lists[u].items;
    const int top = std::min<int>(K, static_cast<int>(items.size()));
    double dcg = 0.0;
    for (int i = 0; i < top; ++i) {
      if (std::binary_search(test.begin(), test.end(), items[i])) {
        dcg += 1.0 / std::log2(i + 2.0);
      }
    }
    const int ideal = std::min<int>(K, static_cast<int>(test.size()));
    double idcg = 0.0;
    for (int i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(i + 2.0);
    total += dcg / idcg;
    ++users;
  }
  return total / users;
}

}  // namespace privrec
