#include <cmath>
#include <vector>

#include "doctest.h"
#include "privrec/functional_mechanism.hpp"

using namespace privrec;

TEST_SUITE("functional_mechanism") {

TEST_CASE("taylor coefficients and truncated loss values") {
  const TaylorCoefficients tc = taylor_coefficients();
  CHECK(tc.c0 == doctest::Approx(0.69314718055994531).epsilon(1e-15));
  CHECK(tc.c1 == doctest::Approx(-0.5));
  CHECK(tc.c2 == doctest::Approx(0.125));

  CHECK(truncated_bpr_approx(0.0) == doctest::Approx(0.69314718055994531).epsilon(1e-15));
  CHECK(truncated_bpr_approx(1.0) == doctest::Approx(0.31814718055994531).epsilon(1e-15));
  CHECK(truncated_bpr_approx(-1.0) == doctest::Approx(1.31814718055994531).epsilon(1e-15));
}

TEST_CASE("truncated loss tracks the exact pairwise loss within 0.005 on [-1,1]") {
  double max_err = 0.0;
  for (int i = -1000; i <= 1000; ++i) {
    const double s = i / 1000.0;
    const double exact = std::log1p(std::exp(-s));
    max_err = std::max(max_err, std::abs(truncated_bpr_approx(s) - exact));
  }
  CHECK(max_err <= 0.005);
  // The bound is tight: the worst error sits at the interval ends.
  CHECK(max_err == doctest::Approx(0.0048854930417224754).epsilon(1e-9));
}

TEST_CASE("global sensitivity is d + d^2/4, exact in rational arithmetic") {
  CHECK(global_sensitivity(2) == doctest::Approx(3.0));
  CHECK(global_sensitivity(20) == doctest::Approx(120.0));
  CHECK(global_sensitivity(60) == doctest::Approx(960.0));
  for (int d = 1; d <= 512; ++d) {
    CHECK(global_sensitivity(d) * 4.0 == doctest::Approx(4.0 * d + double(d) * d));
  }
}

TEST_CASE("laplace scale reproduces the published noise table") {
  // eps = 0.4, |D| = 80,000.
  CHECK(laplace_scale(20, 0.4, 80000) == doctest::Approx(0.00375).epsilon(1e-12));
  CHECK(laplace_scale(40, 0.4, 80000) == doctest::Approx(0.01375).epsilon(1e-12));
  CHECK(laplace_scale(60, 0.4, 80000) == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(laplace_scale(80, 0.4, 80000) == doctest::Approx(0.0525).epsilon(1e-12));
  CHECK(laplace_scale(100, 0.4, 80000) == doctest::Approx(0.08125).epsilon(1e-12));
}

TEST_CASE("laplace sampler has zero mean and variance 2 b^2") {
  Rng rng(123);
  const double b = 0.03;
  const int N = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = sample_laplace(b, rng);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / N;
  const double var = sumsq / N - mean * mean;
  const double stderr_ = std::sqrt(var / N);
  CHECK(std::abs(mean) <= 4.0 * stderr_);
  CHECK(var == doctest::Approx(2.0 * b * b).epsilon(0.02));
  CHECK_THROWS_AS(sample_laplace(0.0, rng), std::domain_error);
  CHECK_THROWS_AS(sample_laplace(-1.0, rng), std::domain_error);
}

TEST_CASE("noise polynomial shape, symmetry and determinism") {
  Rng rng(9);
  const NoisePolynomial n = draw_noise_polynomial(5, global_sensitivity(5), 0.4, 1000, rng);
  CHECK(n.d == 5);
  CHECK(n.scale == doctest::Approx(global_sensitivity(5) / (0.4 * 1000)));
  REQUIRE(n.n1.size() == 5);
  REQUIRE(n.N2.size() == 25);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(n.at2(i, j) == n.at2(j, i));
  }
  // Off-diagonal pairs are mirrored copies, not independent draws: the
  // upper triangle holds d(d+1)/2 = 15 independent values.
  Rng rng2(9);
  const NoisePolynomial m = draw_noise_polynomial(5, global_sensitivity(5), 0.4, 1000, rng2);
  CHECK(m.n1 == n.n1);
  CHECK(m.N2 == n.N2);

  const NoisePolynomial none;
  CHECK(none.empty());
  CHECK_FALSE(n.empty());
}

TEST_CASE("noise polynomial entries follow Laplace(0, scale)") {
  Rng rng(31);
  const int d = 40;
  const NoisePolynomial n = draw_noise_polynomial(d, global_sensitivity(d), 0.4, 80000, rng);
  CHECK(n.scale == doctest::Approx(0.01375));
  // Pool the independent entries (n1 + upper triangle) and check moments.
  std::vector<double> pool = n.n1;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) pool.push_back(n.at2(i, j));
  }
  double sum = 0.0, sumsq = 0.0;
  for (const double x : pool) {
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / pool.size();
  const double var = sumsq / pool.size() - mean * mean;
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(var / pool.size()));
  CHECK(var == doctest::Approx(2.0 * n.scale * n.scale).epsilon(0.15));
}

TEST_CASE("larger privacy budget means less noise") {
  Rng rng(8);
  const NoisePolynomial big = draw_noise_polynomial(10, global_sensitivity(10), 0.1, 1000, rng);
  Rng rng2(8);
  const NoisePolynomial small =
      draw_noise_polynomial(10, global_sensitivity(10), 1000.0, 1000, rng2);
  CHECK(big.scale > small.scale);
  CHECK(small.scale == doctest::Approx(global_sensitivity(10) / (1000.0 * 1000)));
}

TEST_CASE("perturbed batch loss closed form") {
  // Hand-evaluated: ln 2 + (n1.h + h^T N2 h) with batch/|D| = 1.
  NoisePolynomial noise;
  noise.d = 2;
  noise.scale = 1.0;
  noise.n1 = {0.1, -0.1};
  noise.N2 = {0.2, 0.0, 0.0, 0.0};
  const double loss = perturbed_batch_loss({0.0}, {1.0, 1.0}, noise, 1, 1);
  CHECK(loss == doctest::Approx(0.89314718055994531).epsilon(1e-12));
}

TEST_CASE("perturbed batch loss reduces to the truncated sum with zero noise") {
  NoisePolynomial zero;
  zero.d = 3;
  zero.scale = 0.0;
  zero.n1.assign(3, 0.0);
  zero.N2.assign(9, 0.0);
  const std::vector<double> sbars = {0.25, -0.5, 0.9, 0.0};
  const double loss =
      perturbed_batch_loss(sbars, {0.3, -0.2, 0.7}, zero, 4, 100);
  double expect = 0.0;
  for (const double s : sbars) expect += truncated_bpr_approx(s);
  CHECK(loss == expect);  // bitwise: identical summation order
}

TEST_CASE("noise term scales with the batch fraction") {
  NoisePolynomial noise;
  noise.d = 1;
  noise.scale = 1.0;
  noise.n1 = {2.0};
  noise.N2 = {4.0};
  const std::vector<double> h = {1.0};
  // n1.h + h N2 h = 6; batch 10 of 100 -> + 0.6.
  const double loss = perturbed_batch_loss({0.0}, h, noise, 10, 100);
  CHECK(loss == doctest::Approx(std::log(2.0) + 0.6).epsilon(1e-12));
  // batch == dataset -> the full noise term appears once.
  const double full = perturbed_batch_loss({0.0}, h, noise, 100, 100);
  CHECK(full == doctest::Approx(std::log(2.0) + 6.0).epsilon(1e-12));
}

}  // TEST_SUITE
