#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace privrec {

// Generator for a MovieLens-100K-shaped stand-in dataset. It emits `u.data`
// and `u.user` files in the exact upstream format so the rest of the pipeline
// cannot tell the difference. The generator is fully deterministic in `seed`.
//
// Users get a latent per-genre taste vector dominated by demographic shifts
// (gender, age bucket, occupation) plus idiosyncratic noise; items get a
// genre pair, a Zipf popularity rank, a quality score, and optionally a
// gender leaning that boosts selection by matching users. Interactions are
// drawn per user by weighted sampling without replacement, then ratings are
// assigned by rank so the 1..5 marginals match the upstream distribution.
// Every user rates at least `min_ratings_per_user` items and every item is
// rated at least once.
struct SyntheticConfig {
  int num_users = 943;
  int num_items = 1682;
  int num_ratings = 100000;
  int num_genres = 8;
  int min_ratings_per_user = 20;
  int max_ratings_per_user = 740;
  double gender_signal = 0.32;    // genre-preference shift by gender
  double age_signal = 0.9;        // genre-preference shift by age bucket
  double occupation_signal = 0.8; // genre-preference shift by occupation
  double taste_noise = 0.35;      // per-genre idiosyncratic taste stddev
  double popularity_skew = 0.5;   // Zipf exponent for item popularity
  double selection_strength = 1.6;  // weight of personal taste in item choice
  double gendered_fraction = 0.0;   // share of items with an extra gender leaning
  double gender_boost = 0.0;        // selection boost on leaning items
  uint64_t seed = 9000;
};

struct SyntheticData {
  std::string u_data;  // "user\titem\trating\ttimestamp" lines, shuffled
  std::string u_user;  // "id|age|gender|occupation|zip" lines, id ascending
};

SyntheticData generate_dataset(const SyntheticConfig& config);

// Writes `u.data` and `u.user` under `dir`, creating it if needed.
void write_dataset(const SyntheticConfig& config, const std::filesystem::path& dir);

}  // namespace privrec
