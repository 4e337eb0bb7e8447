#pragma once

#include <string>
#include <vector>

#include "privrec/recommend.hpp"

namespace privrec {

enum class HitMode { kUser, kPair };

HitMode hit_mode_from_name(const std::string& name);

// Fraction of users whose top-K contains a held-out item (kUser), or the
// fraction of held-out items recovered in their user's top-K (kPair). Users
// with empty test sets are skipped; test sets must be sorted ascending.
double hit_at_k(const std::vector<RankedList>& rec_lists,
                const std::vector<std::vector<int>>& test_sets, int K,
                HitMode mode = HitMode::kUser);

// Binary-relevance NDCG: DCG over the first K ranks, ideal DCG over
// min(|test|, K) top placements, averaged over users with test items.
double ndcg_at_k(const std::vector<RankedList>& rec_lists,
                 const std::vector<std::vector<int>>& test_sets, int K);

}  // namespace privrec
