#include "privrec/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "privrec/dataset.hpp"
#include "privrec/rng.hpp"
#include "privrec/types.hpp"

namespace privrec {

namespace {

// Occupation marginals roughly matching the upstream user table, plus an age
// range and a female probability per occupation so the demographic columns
// end up correlated the way real profiles are.
struct OccupationModel {
  double weight;
  int age_lo, age_hi;
  double p_female;
};

constexpr std::array<OccupationModel, kNumOccupations> kOccModel = {{
    {79, 22, 60, 0.45},  // administrator
    {28, 19, 48, 0.45},  // artist
    {7, 28, 64, 0.20},   // doctor
    {95, 24, 63, 0.45},  // educator
    {67, 22, 60, 0.10},  // engineer
    {18, 18, 50, 0.25},  // entertainment
    {32, 28, 62, 0.15},  // executive
    {16, 20, 55, 0.75},  // healthcare
    {7, 24, 50, 0.90},   // homemaker
    {12, 25, 55, 0.25},  // lawyer
    {51, 23, 60, 0.70},  // librarian
    {26, 24, 55, 0.40},  // marketing
    {9, 11, 55, 0.30},   // none
    {105, 13, 60, 0.30}, // other
    {66, 20, 55, 0.12},  // programmer
    {14, 51, 73, 0.10},  // retired
    {12, 18, 55, 0.20},  // salesman
    {31, 23, 55, 0.15},  // scientist
    {196, 7, 30, 0.30},  // student
    {27, 21, 55, 0.10},  // technician
    {45, 18, 60, 0.45},  // writer
}};

// Cumulative rating-level proportions of the upstream dataset; interactions
// are bucketed by the rank of their latent score so the marginals match.
constexpr std::array<double, 4> kRatingCdf = {0.0611, 0.1748, 0.4463, 0.7880};

struct Item {
  int genre1 = 0;
  int genre2 = 0;
  int gender_lean = 0;  // +1 male-leaning, -1 female-leaning, 0 neutral
  double popularity = 0.0;
  double quality = 0.0;
};

double affinity(const std::vector<double>& taste, const Item& item) {
  return taste[item.genre1] + 0.35 * taste[item.genre2];
}

}  // namespace

SyntheticData generate_dataset(const SyntheticConfig& cfg) {
  const int U = cfg.num_users, I = cfg.num_items, N = cfg.num_ratings;
  if (U <= 0 || I <= 0 || cfg.num_genres < 6) {
    throw std::invalid_argument("synthetic config: need users, items and >=6 genres");
  }
  if (N < cfg.min_ratings_per_user * U || N > static_cast<int64_t>(U) * I) {
    throw std::invalid_argument("synthetic config: rating count infeasible");
  }
  const Rng base(cfg.seed);

  // Items: genre pair, Zipf popularity over a shuffled rank, quality.
  Rng item_rng = base.fork(2);
  std::vector<int> rank(I);
  std::iota(rank.begin(), rank.end(), 0);
  item_rng.shuffle(rank);
  std::vector<Item> items(I);
  for (int v = 0; v < I; ++v) {
    items[v].genre1 = item_rng.uniform_int(cfg.num_genres);
    items[v].genre2 = (items[v].genre1 + 1 + item_rng.uniform_int(cfg.num_genres - 1)) %
                      cfg.num_genres;
    const double lean = item_rng.uniform();  // drawn even when the fraction is 0
    if (lean < cfg.gendered_fraction / 2) {
      items[v].gender_lean = 1;
    } else if (lean < cfg.gendered_fraction) {
      items[v].gender_lean = -1;
    }
    items[v].popularity = std::pow(1.0 + rank[v], -cfg.popularity_skew);
    items[v].quality = item_rng.normal(0.0, 0.4);
  }

  // Profiles: occupation first, then age and gender conditioned on it.
  Rng prof_rng = base.fork(1);
  double occ_total = 0.0;
  for (const auto& o : kOccModel) occ_total += o.weight;
  std::vector<UserProfile> profiles(U);
  std::vector<std::string> zips(U);
  for (int u = 0; u < U; ++u) {
    double pick = prof_rng.uniform() * occ_total;
    int occ = kNumOccupations - 1;
    for (int o = 0; o < kNumOccupations; ++o) {
      pick -= kOccModel[o].weight;
      if (pick < 0.0) {
        occ = o;
        break;
      }
    }
    const auto& om = kOccModel[occ];
    profiles[u].user_id = u + 1;
    profiles[u].occupation = occ;
    profiles[u].age = om.age_lo + prof_rng.uniform_int(om.age_hi - om.age_lo + 1);
    profiles[u].gender = prof_rng.uniform() < om.p_female ? 1 : 0;
    char zip[8];
    std::snprintf(zip, sizeof zip, "%05d",
                  static_cast<int>(prof_rng.uniform_int(100000)));
    zips[u] = zip;
  }

  // Per-occupation genre patterns, stable across user draws.
  std::vector<std::vector<double>> occ_pattern(kNumOccupations);
  for (int o = 0; o < kNumOccupations; ++o) {
    Rng r = base.fork(100 + static_cast<uint64_t>(o));
    occ_pattern[o].resize(cfg.num_genres);
    for (double& g : occ_pattern[o]) g = r.normal(0.0, 1.0);
  }

  // Tastes: demographic shifts plus idiosyncratic noise. Genres 0..3 carry
  // the gender signal, 4..5 the age signal, occupations spread over all
  // genres.
  Rng taste_rng = base.fork(3);
  std::vector<std::vector<double>> taste(U, std::vector<double>(cfg.num_genres));
  for (int u = 0; u < U; ++u) {
    auto& t = taste[u];
    for (double& g : t) g = taste_rng.normal(0.0, cfg.taste_noise);
    const double gd = profiles[u].gender == 0 ? 1.0 : -1.0;
    t[0] += cfg.gender_signal * gd;
    t[1] += 0.6 * cfg.gender_signal * gd;
    t[2] -= cfg.gender_signal * gd;
    t[3] -= 0.6 * cfg.gender_signal * gd;
    const int b = age_bucket(profiles[u].age);
    const double ad = b == 0 ? 1.0 : (b == 1 ? 0.0 : -1.0);
    t[4] += cfg.age_signal * ad;
    t[5] -= cfg.age_signal * ad;
    for (int g = 0; g < cfg.num_genres; ++g) {
      t[g] += cfg.occupation_signal * occ_pattern[profiles[u].occupation][g];
    }
  }

  // Activity: a floor per user plus a lognormal share of the remaining budget.
  Rng act_rng = base.fork(4);
  std::vector<double> share(U);
  double share_total = 0.0;
  for (int u = 0; u < U; ++u) {
    share[u] = std::exp(act_rng.normal(0.0, 1.1));
    share_total += share[u];
  }
  const int cap = std::min(I, cfg.max_ratings_per_user);
  const int extra_budget = N - cfg.min_ratings_per_user * U;
  std::vector<int> activity(U, cfg.min_ratings_per_user);
  int assigned = 0;
  for (int u = 0; u < U; ++u) {
    const int extra = std::min(cap - cfg.min_ratings_per_user,
                               static_cast<int>(extra_budget * share[u] / share_total));
    activity[u] += extra;
    assigned += extra;
  }
  for (int deficit = extra_budget - assigned; deficit > 0;) {
    for (int u = 0; u < U && deficit > 0; ++u) {
      if (activity[u] < cap) {
        ++activity[u];
        --deficit;
      }
    }
  }

  // Item choice: per user, the `activity[u]` smallest exponential keys, with
  // rate popularity * exp(selection_strength * affinity + 0.3 * quality
  // + gender_boost * lean match).
  const auto weight = [&](int u, int v) {
    const double gd = profiles[u].gender == 0 ? 1.0 : -1.0;
    return items[v].popularity *
           std::exp(cfg.selection_strength * affinity(taste[u], items[v]) +
                    0.3 * items[v].quality +
                    cfg.gender_boost * gd * items[v].gender_lean);
  };
  std::vector<std::vector<int>> chosen(U);
  std::vector<int> item_count(I, 0);
  std::vector<double> key(I);
  std::vector<int> order(I);
  for (int u = 0; u < U; ++u) {
    Rng r = base.fork(5000 + static_cast<uint64_t>(u));
    for (int v = 0; v < I; ++v) key[v] = -std::log(1.0 - r.uniform()) / weight(u, v);
    std::iota(order.begin(), order.end(), 0);
    std::nth_element(order.begin(), order.begin() + activity[u], order.end(),
                     [&](int a, int b) { return key[a] < key[b]; });
    chosen[u].assign(order.begin(), order.begin() + activity[u]);
    std::sort(chosen[u].begin(), chosen[u].end());
    for (const int v : chosen[u]) ++item_count[v];
  }

  // Coverage fix-up: give every unrated item to its best-affinity user, in
  // exchange for that user's least-liked item that others also rated.
  for (int v = 0; v < I; ++v) {
    if (item_count[v] > 0) continue;
    std::vector<int> users_by_weight(U);
    std::iota(users_by_weight.begin(), users_by_weight.end(), 0);
    std::sort(users_by_weight.begin(), users_by_weight.end(), [&](int a, int b) {
      const double wa = weight(a, v), wb = weight(b, v);
      return wa != wb ? wa > wb : a < b;
    });
    bool placed = false;
    for (const int u : users_by_weight) {
      int drop = -1;
      double drop_weight = 0.0;
      for (const int x : chosen[u]) {
        if (item_count[x] < 2) continue;
        const double wx = weight(u, x);
        if (drop < 0 || wx < drop_weight) {
          drop = x;
          drop_weight = wx;
        }
      }
      if (drop < 0) continue;
      auto& list = chosen[u];
      list.erase(std::find(list.begin(), list.end(), drop));
      list.insert(std::upper_bound(list.begin(), list.end(), v), v);
      --item_count[drop];
      ++item_count[v];
      placed = true;
      break;
    }
    if (!placed) throw std::runtime_error("could not cover item " + std::to_string(v));
  }

  // Latent scores in canonical (user, item) order, then ratings by rank so
  // the 1..5 marginals match the target CDF.
  Rng rate_rng = base.fork(7);
  std::vector<double> raw;
  std::vector<std::pair<int, int>> pairs;
  raw.reserve(N);
  pairs.reserve(N);
  for (int u = 0; u < U; ++u) {
    for (const int v : chosen[u]) {
      raw.push_back(0.9 * affinity(taste[u], items[v]) + 0.8 * items[v].quality +
                    rate_rng.normal(0.0, 1.0));
      pairs.emplace_back(u, v);
    }
  }
  const int total = static_cast<int>(raw.size());
  std::vector<int> by_score(total);
  std::iota(by_score.begin(), by_score.end(), 0);
  std::sort(by_score.begin(), by_score.end(), [&](int a, int b) {
    return raw[a] != raw[b] ? raw[a] < raw[b] : a < b;
  });
  std::vector<int> rating(total);
  for (int pos = 0; pos < total; ++pos) {
    const double q = static_cast<double>(pos) / total;
    int level = 5;
    for (int t = 0; t < 4; ++t) {
      if (q < kRatingCdf[t]) {
        level = t + 1;
        break;
      }
    }
    rating[by_score[pos]] = level;
  }

  // Timestamps in canonical order, then a global row shuffle.
  Rng time_rng = base.fork(8);
  std::vector<int64_t> timestamp(total);
  for (auto& t : timestamp) t = 874000000 + time_rng.uniform_int(19000000);
  std::vector<int> row_order(total);
  std::iota(row_order.begin(), row_order.end(), 0);
  Rng shuffle_rng = base.fork(9);
  shuffle_rng.shuffle(row_order);

  SyntheticData out;
  std::ostringstream data;
  for (const int i : row_order) {
    data << pairs[i].first + 1 << '\t' << pairs[i].second + 1 << '\t' << rating[i]
         << '\t' << timestamp[i] << '\n';
  }
  out.u_data = data.str();
  std::ostringstream user;
  for (int u = 0; u < U; ++u) {
    user << profiles[u].user_id << '|' << profiles[u].age << '|'
         << (profiles[u].gender == 0 ? 'M' : 'F') << '|'
         << kOccupations[profiles[u].occupation] << '|' << zips[u] << '\n';
  }
  out.u_user = user.str();
  return out;
}

void write_dataset(const SyntheticConfig& config, const std::filesystem::path& dir) {
  const SyntheticData data = generate_dataset(config);
  std::filesystem::create_directories(dir);
  write_text_file(dir / "u.data", data.u_data);
  write_text_file(dir / "u.user", data.u_user);
}

}  // namespace privrec
