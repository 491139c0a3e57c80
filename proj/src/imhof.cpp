// Tail probability of a chi-square(1) mixture by adaptive Gauss-Kronrod
// quadrature of Imhof's inversion integral
//   P(Q > q) = 1/2 + (1/pi) * int_0^inf sin(theta(u)) / (u rho(u)) du,
//   theta(u) = (1/2) sum_j atan(lambda_j u) - q u / 2,
//   rho(u)   = prod_j (1 + lambda_j^2 u^2)^{1/4}.
//
// The truncation point is the smaller of two certified bounds: the classical
// envelope bound (integrand magnitude only, sharp when many terms make the
// envelope decay fast) and an integration-by-parts bound that exploits the
// sin oscillation (sharp for few terms, where the envelope decays slowly).
// Segment lengths follow the local phase slope
//   |theta'(u)| <= (1/2) (sum_j lambda_j / (1 + lambda_j^2 u^2) + q),
// which shrinks toward q/2 once the eigenvalue terms die off; spectra whose
// eigenvalues span many orders of magnitude need long integration ranges
// but only O(J + qU) segments.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tdc/quadform.hpp"

namespace tdc {

namespace {

constexpr double kPi = std::numbers::pi;

struct ImhofIntegrand {
  const Eigen::ArrayXd& lambda;
  double q;

  double operator()(double u) const {
    if (u <= 0.0) return 0.5 * (lambda.sum() - q);
    double theta = -0.5 * q * u;
    double log_rho = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double x = lambda(i) * u;
      theta += 0.5 * std::atan(x);
      log_rho += 0.25 * std::log1p(x * x);
    }
    return std::sin(theta) * std::exp(-log_rho) / u;
  }

  // Envelope 1 / (u rho(u)).
  double envelope(double u) const {
    double log_rho = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double x = lambda(i) * u;
      log_rho += 0.25 * std::log1p(x * x);
    }
    return std::exp(-std::log(u) - log_rho);
  }

  // theta'(u); negative once the oscillation is driven by q alone.
  double phase_slope(double u) const {
    double slope = -q;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double x = lambda(i) * u;
      slope += lambda(i) / (1.0 + x * x);
    }
    return 0.5 * slope;
  }

  // Decreasing bound on |theta'| over [u, infinity).
  double slope_bound(double u) const {
    double bound = q;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double x = lambda(i) * u;
      bound += lambda(i) / (1.0 + x * x);
    }
    return 0.5 * bound;
  }
};

struct GkEstimate {
  double value = 0.0;
  double error = 0.0;
};

// 15-point Kronrod rule with embedded 7-point Gauss estimate.
template <typename F>
GkEstimate gk15(const F& f, double a, double b) {
  static constexpr double xgk[8] = {
      0.991455371120813, 0.949107912342759, 0.864864423359769,
      0.741531185599394, 0.586087235467691, 0.405845151377397,
      0.207784955007898, 0.0};
  static constexpr double wgk[8] = {
      0.022935322010529, 0.063092092629979, 0.104790010322250,
      0.140653259715525, 0.169004726639267, 0.190350578064785,
      0.204432940075298, 0.209482141084728};
  static constexpr double wg[4] = {0.129484966168870, 0.279705391489277,
                                   0.381830050505119, 0.417959183673469};
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = wgk[7] * fc;
  double gauss = wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * xgk[i];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += wgk[i] * pair;
    if (i % 2 == 1) gauss += wg[i / 2] * pair;
  }
  GkEstimate est;
  est.value = kronrod * half;
  est.error = std::abs(kronrod - gauss) * half;
  return est;
}

template <typename F>
double integrate_adaptive(const F& f, double a, double b, double tol_abs,
                          double rel_floor, int depth, long& evals) {
  if (evals > 400'000'000L)
    throw std::runtime_error("imhof: quadrature did not converge");
  evals += 15;
  const GkEstimate est = gk15(f, a, b);
  if (est.error <= std::max(tol_abs, rel_floor * std::abs(est.value)))
    return est.value;
  if (depth <= 0)
    throw std::runtime_error("imhof: quadrature did not converge");
  const double mid = 0.5 * (a + b);
  return integrate_adaptive(f, a, mid, 0.5 * tol_abs, rel_floor, depth - 1,
                            evals) +
         integrate_adaptive(f, mid, b, 0.5 * tol_abs, rel_floor, depth - 1,
                            evals);
}

}  // namespace

double imhof_pvalue(const QuadFormDist& dist, double q, double accuracy) {
  if (!(accuracy > 0.0) || accuracy > 1e-2)
    throw std::invalid_argument("imhof_pvalue: accuracy outside (0, 1e-2]");
  const Eigen::ArrayXd lambda = dist.lambdas.array();
  const Eigen::Index j = lambda.size();
  if (q <= 0.0) return 1.0;
  if (j == 0) return kPValueFloor;

  const ImhofIntegrand f{lambda, q};
  const double k = 0.5 * double(j);
  const double sum_log_lambda = lambda.log().sum();
  const double tail_target = 0.5 * accuracy;  // truncation budget on p

  // Envelope bound: (1/pi) exp(-S/2) U^-k / k <= tail_target.
  const double log_u_env = (-0.5 * sum_log_lambda - std::log(kPi * k) -
                            std::log(tail_target)) /
                           k;
  const double u_env = std::exp(std::min(log_u_env, 700.0));

  // Oscillation bound: once theta' < -q/4 and is still falling,
  // |tail| <= 3 envelope(U) / (pi |theta'(U)|). Locate the slope crossing
  // by exponential search, then grow U until the bound is met.
  double u_osc = 1.0 / (lambda.maxCoeff() + q);
  bool osc_ok = false;
  for (int i = 0; i < 300 && u_osc < u_env; ++i) {
    const double slope = f.phase_slope(u_osc);
    if (slope <= -0.25 * q &&
        3.0 * f.envelope(u_osc) / (kPi * -slope) <= tail_target) {
      osc_ok = true;
      break;
    }
    u_osc *= 1.5;
    if (!std::isfinite(u_osc)) break;
  }
  const double u_max = osc_ok ? std::min(u_env, u_osc) : u_env;
  if (!std::isfinite(u_max) || u_max <= 0.0)
    throw std::runtime_error("imhof: could not locate truncation point");

  // Segment count estimate from the integrated phase-slope bound
  // (sum_j pi/4 from the atan terms plus q u_max / 2), padded for the
  // knee regions where consecutive segment lengths jump.
  const double est_segments =
      double(j) + 0.5 * q * u_max / kPi + 64.0;
  if (est_segments > 40e6)
    throw std::runtime_error("imhof: oscillation count too large");

  const double budget = 0.5 * accuracy * kPi;  // on the raw integral
  const double tol_seg = budget / est_segments;
  const double rel_floor = std::min(1e-12, accuracy * 1e-3);

  long evals = 0;
  long segments = 0;
  double total = 0.0;
  double carry = 0.0;  // Kahan compensation
  double a = 0.0;
  while (a < u_max) {
    const double len = kPi / f.slope_bound(a);
    const double b = std::min(a + len, u_max);
    if (++segments > 100'000'000L)
      throw std::runtime_error("imhof: oscillation count too large");
    const double piece =
        integrate_adaptive(f, a, b, tol_seg, rel_floor, 28, evals);
    const double y = piece - carry;
    const double t = total + y;
    carry = (t - total) - y;
    total = t;
    a = b;
  }

  double p = 0.5 + total / kPi;
  if (p > 1.0) p = 1.0;
  if (p < kPValueFloor) p = kPValueFloor;
  return p;
}

}  // namespace tdc
