#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "privrec/rng.hpp"
#include "privrec/types.hpp"

namespace privrec {

// Piecewise mechanism for a scalar in [-1, 1]. The output lands in [-C, C]:
// with probability e^{eps/2}/(e^{eps/2}+1) uniformly in the high-density
// window [ell(x), pi(x)] of width C-1 centered where x maps to, otherwise
// uniformly over the two side pieces in proportion to their lengths. The
// estimator is unbiased and eps-LDP.
struct PiecewiseParams {
  double epsilon = 0.0;
  double C = 0.0;          // (e^{eps/2}+1)/(e^{eps/2}-1)
  double p = 0.0;          // high-window density (e^eps - e^{eps/2})/(2e^{eps/2}+2)
  double high_prob = 0.0;  // e^{eps/2}/(e^{eps/2}+1)

  double ell(double x) const { return 0.5 * (C + 1.0) * x - 0.5 * (C - 1.0); }
  double pi(double x) const { return ell(x) + C - 1.0; }
};

PiecewiseParams piecewise_params(double epsilon);

double piecewise_perturb(double x, const PiecewiseParams& params, Rng& rng);
double piecewise_perturb(double x, double epsilon, Rng& rng);

// Randomized response over a one-hot bit vector (optimized unary encoding):
// a 1-bit survives with probability 1/2, a 0-bit turns on with probability
// 1/(e^eps + 1). The result may contain zero or several 1s.
std::vector<int> rr_perturb_onehot(const std::vector<int>& onehot, double epsilon,
                                   Rng& rng);

// Number of features kept when splitting the local budget across features.
int choose_zeta(double epsilon, int d_prime);

// Whole-vector perturbation: pick zeta features uniformly without
// replacement, spend eps/zeta on each (piecewise for numericals, randomized
// response for categorical one-hot segments), zero out the rest. Selected
// numericals are rescaled by d'/zeta to stay unbiased contributors.
// `selected_out`, when given, receives the chosen feature indices (ascending).
std::vector<double> perturb_features(const double* row, const FeatureSchema& schema,
                                     double epsilon, Rng& rng,
                                     std::vector<int>* selected_out = nullptr);

// Applies perturb_features to every row; row u uses stream fork(u) of `rng`
// so its output does not depend on the other rows.
FeatureMatrix perturb_feature_matrix(const FeatureMatrix& matrix,
                                     const FeatureSchema& schema, double epsilon,
                                     const Rng& rng);

// Empirical privacy check: runs `mechanism` `trials` times on each of the two
// inputs, histograms outputs over a shared support, and returns the largest
// two-sided bin-mass ratio among bins where both sides clear a count floor.
// For an eps-LDP mechanism this should not exceed e^eps (plus sampling slack).
double empirical_ldp_ratio(const std::function<double(double, Rng&)>& mechanism,
                           std::pair<double, double> inputs, int bins, int trials,
                           Rng& rng);

}  // namespace privrec
