#include "privrec/functional_mechanism.hpp"

#include <cmath>
#include <stdexcept>

namespace privrec {

TaylorCoefficients taylor_coefficients() {
  return {std::log(2.0), -0.5, 0.125};
}

double truncated_bpr_approx(double s_bar) {
  return std::log(2.0) - 0.5 * s_bar + 0.125 * s_bar * s_bar;
}

double global_sensitivity(int d) {
  if (d < 1) throw std::domain_error("global_sensitivity: d must be >= 1");
  return d + d * static_cast<double>(d) / 4.0;
}

double laplace_scale(int d, double epsilon, int64_t dataset_size) {
  if (epsilon <= 0.0) throw std::domain_error("laplace_scale: epsilon must be > 0");
  if (dataset_size < 1) throw std::domain_error("laplace_scale: dataset_size must be >= 1");
  return global_sensitivity(d) / (epsilon * static_cast<double>(dataset_size));
}

double sample_laplace(double scale, Rng& rng) {
  if (scale <= 0.0) throw std::domain_error("sample_laplace: scale must be > 0");
  const double u = rng.uniform() - 0.5;  // (-1/2, 1/2)
  const double mag = -scale * std::log(1.0 - 2.0 * std::abs(u));
  return u < 0.0 ? -mag : (u > 0.0 ? mag : 0.0);
}

NoisePolynomial draw_noise_polynomial(int d, double delta, double epsilon,
                                      int64_t dataset_size, Rng& rng) {
  if (d < 1 || delta <= 0.0 || epsilon <= 0.0 || dataset_size < 1) {
    throw std::domain_error("draw_noise_polynomial: all arguments must be positive");
  }
  NoisePolynomial np;
  np.d = d;
  np.scale = delta / (epsilon * static_cast<double>(dataset_size));
  np.n1.resize(d);
  for (double& v : np.n1) v = sample_laplace(np.scale, rng);
  np.N2.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const double v = sample_laplace(np.scale, rng);
      np.N2[static_cast<size_t>(i) * d + j] = v;
      np.N2[static_cast<size_t>(j) * d + i] = v;
    }
  }
  return np;
}

double perturbed_batch_loss(const std::vector<double>& score_diffs,
                            const std::vector<double>& h, const NoisePolynomial& noise,
                            int batch_size, int64_t dataset_size) {
  if (static_cast<int>(score_diffs.size()) != batch_size) {
    throw std::domain_error("perturbed_batch_loss: |score_diffs| != batch_size");
  }
  if (noise.d != static_cast<int>(h.size())) {
    throw std::domain_error("perturbed_batch_loss: h does not match noise dimension");
  }
  double loss = 0.0;
  for (const double s : score_diffs) loss += truncated_bpr_approx(s);
  double lin = 0.0, quad = 0.0;
  for (int i = 0; i < noise.d; ++i) {
    lin += noise.n1[i] * h[i];
    for (int j = 0; j < noise.d; ++j) quad += h[i] * noise.at2(i, j) * h[j];
  }
  const double frac = static_cast<double>(batch_size) / static_cast<double>(dataset_size);
  return loss + frac * (lin + quad);
}

}  // namespace privrec
