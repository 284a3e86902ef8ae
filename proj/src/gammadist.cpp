#include "outage/gammadist.hpp"

#include <cmath>
#include <limits>

namespace outage::gamma {

using num::lgamma_lanczos;
using num::Value;

double log_pdf(double d, const GammaParams& p) {
  if (!(d > 0.0)) throw std::invalid_argument("log_pdf: duration must be > 0");
  return -lgamma_lanczos(p.k) - p.k * std::log(p.theta) + (p.k - 1.0) * std::log(d) -
         d / p.theta;
}

double nll(double d, const GammaParams& p) {
  return -log_pdf(std::max(d, kMinDurationHours), p);
}

double mean(const GammaParams& p) { return p.k * p.theta; }

double mode(const GammaParams& p) { return p.k >= 1.0 ? (p.k - 1.0) * p.theta : 0.0; }

namespace {

// Series expansion, valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - lgamma_lanczos(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double fpmin = std::numeric_limits<double>::min() / 1e-30;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - lgamma_lanczos(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma_p: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("gamma_p: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double cdf(double d, const GammaParams& p) {
  if (d < 0.0) throw std::invalid_argument("cdf: duration must be >= 0");
  return gamma_p(p.k, d / p.theta);
}

double quantile(double q, const GammaParams& p) {
  if (!(q > 0.0) || !(q < 1.0))
    throw std::invalid_argument("quantile: q must be in (0, 1)");
  // Bracket, then bisection with Newton polish.
  double lo = 0.0;
  double hi = std::max(p.k * p.theta, p.theta);
  while (cdf(hi, p) < q) hi *= 2.0;
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    double c = cdf(x, p) - q;
    if (c > 0.0)
      hi = x;
    else
      lo = x;
    double pdf = x > 0.0 ? std::exp(log_pdf(x, p)) : 0.0;
    double nx = pdf > 0.0 ? x - c / pdf : 0.5 * (lo + hi);
    if (!(nx > lo) || !(nx < hi)) nx = 0.5 * (lo + hi);
    if (std::abs(nx - x) < 1e-14 * std::max(1.0, x) && std::abs(c) < 1e-9) {
      x = nx;
      break;
    }
    x = nx;
  }
  return x;
}

double sample(const GammaParams& p, num::Rng& rng) {
  double k = p.k;
  double boost = 1.0;
  if (k < 1.0) {
    // Boost: draw from Gamma(k+1) and scale by U^{1/k}.
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    boost = std::pow(u, 1.0 / k);
    k += 1.0;
  }
  double d = k - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
      return boost * d * v * p.theta;
  }
}

Value nll_node(double d, const Value& k, const Value& theta) {
  if (k.tensor().size() != 1 || theta.tensor().size() != 1)
    throw num::ShapeError("nll_node: k and theta must be scalars");
  double dc = std::max(d, kMinDurationHours);
  // nll = lgamma(k) + k log(theta) - (k-1) log d + d / theta
  Value t1 = num::lgamma_v(k);
  Value t2 = num::mul(k, num::log_v(theta));
  Value t3 = num::scale(num::add_const(k, -1.0), -std::log(dc));
  Value t4 = num::scale(num::reciprocal(theta), dc);
  return num::add(num::add(t1, t2), num::add(t3, t4));
}

}  // namespace outage::gamma
