#include "privrec/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace privrec {

PiecewiseParams piecewise_params(double epsilon) {
  if (epsilon <= 0.0) throw std::domain_error("piecewise_params: epsilon must be > 0");
  PiecewiseParams pp;
  pp.epsilon = epsilon;
  const double e_half = std::exp(epsilon / 2.0);
  pp.C = (e_half + 1.0) / (e_half - 1.0);
  pp.p = (std::exp(epsilon) - e_half) / (2.0 * e_half + 2.0);
  pp.high_prob = e_half / (e_half + 1.0);
  return pp;
}

double piecewise_perturb(double x, const PiecewiseParams& params, Rng& rng) {
  if (std::abs(x) > 1.0) throw std::domain_error("piecewise_perturb: |x| must be <= 1");
  const double lo = params.ell(x);
  const double hi = params.pi(x);
  if (rng.uniform() < params.high_prob) {
    return rng.uniform(lo, hi);
  }
  // Side pieces [-C, lo) and (hi, C], sampled in proportion to their lengths.
  const double left = lo + params.C;
  const double right = params.C - hi;
  const double t = rng.uniform(0.0, left + right);
  return t < left ? -params.C + t : hi + (t - left);
}

double piecewise_perturb(double x, double epsilon, Rng& rng) {
  return piecewise_perturb(x, piecewise_params(epsilon), rng);
}

std::vector<int> rr_perturb_onehot(const std::vector<int>& onehot, double epsilon,
                                   Rng& rng) {
  if (epsilon <= 0.0) throw std::domain_error("rr_perturb_onehot: epsilon must be > 0");
  int ones = 0;
  for (const int b : onehot) {
    if (b != 0 && b != 1) throw std::domain_error("rr_perturb_onehot: non-bit entry");
    ones += b;
  }
  if (ones != 1) throw std::domain_error("rr_perturb_onehot: input must be one-hot");
  const double flip_on = 1.0 / (std::exp(epsilon) + 1.0);
  std::vector<int> out(onehot.size());
  for (size_t i = 0; i < onehot.size(); ++i) {
    const double keep = onehot[i] == 1 ? 0.5 : flip_on;
    out[i] = rng.uniform() < keep ? 1 : 0;
  }
  return out;
}

int choose_zeta(double epsilon, int d_prime) {
  if (epsilon <= 0.0 || d_prime < 1) throw std::domain_error("choose_zeta: bad inputs");
  const int raw = static_cast<int>(std::floor(epsilon / 2.5));
  return std::max(1, std::min(d_prime, raw));
}

std::vector<double> perturb_features(const double* row, const FeatureSchema& schema,
                                     double epsilon, Rng& rng,
                                     std::vector<int>* selected_out) {
  const int d_prime = schema.d_prime();
  const int zeta = choose_zeta(epsilon, d_prime);
  const double budget = epsilon / zeta;
  const PiecewiseParams pw = piecewise_params(budget);
  const double scale = static_cast<double>(d_prime) / zeta;

  std::vector<int> selected = rng.sample_without_replacement(d_prime, zeta);
  std::sort(selected.begin(), selected.end());
  if (selected_out) *selected_out = selected;

  std::vector<double> out(schema.d0(), 0.0);
  for (const int f : selected) {
    const FeatureDescriptor& fd = schema.features[f];
    if (fd.kind == FeatureKind::kNumerical) {
      const double x = row[fd.offset];
      if (std::abs(x) > 1.0) {
        throw std::domain_error("perturb_features: numerical feature \"" + fd.name +
                                "\" outside [-1,1]");
      }
      out[fd.offset] = scale * piecewise_perturb(x, pw, rng);
    } else {
      std::vector<int> bits(fd.width);
      for (int j = 0; j < fd.width; ++j) {
        const double v = row[fd.offset + j];
        if (v != 0.0 && v != 1.0) {
          throw std::domain_error("perturb_features: categorical feature \"" + fd.name +
                                  "\" is not 0/1");
        }
        bits[j] = v == 1.0 ? 1 : 0;
      }
      const std::vector<int> noisy = rr_perturb_onehot(bits, budget, rng);
      for (int j = 0; j < fd.width; ++j) out[fd.offset + j] = noisy[j];
    }
  }
  return out;
}

FeatureMatrix perturb_feature_matrix(const FeatureMatrix& matrix,
                                     const FeatureSchema& schema, double epsilon,
                                     const Rng& rng) {
  if (matrix.cols != schema.d0()) {
    throw std::domain_error("perturb_feature_matrix: matrix does not match schema");
  }
  FeatureMatrix out(matrix.rows, matrix.cols);
  for (int u = 0; u < matrix.rows; ++u) {
    Rng row_rng = rng.fork(static_cast<uint64_t>(u));
    const std::vector<double> noisy = perturb_features(matrix.row(u), schema, epsilon,
                                                       row_rng);
    std::copy(noisy.begin(), noisy.end(), out.row(u));
  }
  return out;
}

double empirical_ldp_ratio(const std::function<double(double, Rng&)>& mechanism,
                           std::pair<double, double> inputs, int bins, int trials,
                           Rng& rng) {
  if (bins < 1 || trials < 1) throw std::domain_error("empirical_ldp_ratio: bad inputs");
  std::vector<double> a(trials), b(trials);
  for (int i = 0; i < trials; ++i) a[i] = mechanism(inputs.first, rng);
  for (int i = 0; i < trials; ++i) b[i] = mechanism(inputs.second, rng);
  double lo = a[0], hi = a[0];
  for (const double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (const double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi <= lo) return 1.0;  // degenerate: all outputs identical
  const double width = (hi - lo) / bins;
  std::vector<int> ca(bins, 0), cb(bins, 0);
  const auto bin_of = [&](double v) {
    return std::min(bins - 1, static_cast<int>((v - lo) / width));
  };
  for (const double v : a) ++ca[bin_of(v)];
  for (const double v : b) ++cb[bin_of(v)];
  // Bins with too few samples on either side give unstable ratios; skip them.
  const double floor_count = std::max(5.0, 1e-3 * trials);
  double worst = 1.0;
  for (int i = 0; i < bins; ++i) {
    if (ca[i] < floor_count || cb[i] < floor_count) continue;
    const double r = static_cast<double>(ca[i]) / cb[i];
    worst = std::max(worst, std::max(r, 1.0 / r));
  }
  return worst;
}

}  // namespace privrec
