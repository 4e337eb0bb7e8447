#pragma once

#include <cstdint>
#include <vector>

#include "privrec/rng.hpp"

namespace privrec {

// Order-2 Taylor coefficients of -log(sigmoid(s)) around 0.
struct TaylorCoefficients {
  double c0;  // ln 2
  double c1;  // -1/2
  double c2;  // 1/8
};

TaylorCoefficients taylor_coefficients();

// ln 2 - s/2 + s^2/8: the truncated pairwise-ranking loss for one triple.
double truncated_bpr_approx(double s_bar);

// Worst-case change of the summed truncated-loss coefficients when one user's
// data is replaced: d + d^2/4.
double global_sensitivity(int d);

double laplace_scale(int d, double epsilon, int64_t dataset_size);

// Inverse-CDF draw from Laplace(0, scale).
double sample_laplace(double scale, Rng& rng);

// One Laplace draw per degree-1 and degree-2 monomial of the projection
// vector h: n1 (length d) and symmetric N2 (d x d, upper triangle drawn,
// mirrored). Drawn once per training run and held fixed.
struct NoisePolynomial {
  int d = 0;
  double scale = 0.0;
  std::vector<double> n1;  // d entries
  std::vector<double> N2;  // d*d entries, row-major, symmetric

  double at2(int i, int j) const { return N2[static_cast<size_t>(i) * d + j]; }
  bool empty() const { return d == 0; }
};

NoisePolynomial draw_noise_polynomial(int d, double delta, double epsilon,
                                      int64_t dataset_size, Rng& rng);

// Batch objective before regularization:
//   sum_t truncated_bpr_approx(s_bar_t)
//   + (batch_size / dataset_size) * (n1 . h + h^T N2 h).
// Only the h-dependent noise term carries gradient from the noise.
double perturbed_batch_loss(const std::vector<double>& score_diffs,
                            const std::vector<double>& h, const NoisePolynomial& noise,
                            int batch_size, int64_t dataset_size);

}  // namespace privrec
