#pragma once

#include "outage/autodiff.hpp"
#include "outage/tensor.hpp"

namespace outage::gamma {

// Durations are modeled in hours. Targets below 1 minute are clamped before
// likelihood evaluation so degenerate records cannot produce log(0).
inline constexpr double kMinDurationHours = 1.0 / 60.0;

struct GammaParams {
  double k;      // shape
  double theta;  // scale, hours

  GammaParams(double k_, double theta_) : k(k_), theta(theta_) {
    if (!(k > 0.0) || !(theta > 0.0))
      throw std::invalid_argument("GammaParams: k and theta must be > 0");
  }
};

double log_pdf(double d, const GammaParams& p);
double nll(double d, const GammaParams& p);
double mean(const GammaParams& p);
double mode(const GammaParams& p);  // (k-1)*theta clamped at 0
double cdf(double d, const GammaParams& p);
double quantile(double q, const GammaParams& p);  // |cdf(quantile(q)) - q| < 1e-9
double sample(const GammaParams& p, num::Rng& rng);  // Marsaglia-Tsang

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Differentiable NLL: d is data, k and theta are graph values (1x1).
num::Value nll_node(double d, const num::Value& k, const num::Value& theta);

}  // namespace outage::gamma
