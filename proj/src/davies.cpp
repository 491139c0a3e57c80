// Distribution function of a linear combination of central chi-square(1)
// variables by numerical inversion of the characteristic function
// (Davies, Algorithm AS 155). Restricted to the central case with one
// degree of freedom per coefficient, which is all the mixture law of the
// quadratic test statistic requires.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "tdc/quadform.hpp"

namespace tdc::detail {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2Over8 = 0.0866;  // ln(2)/8, cfe bound constant

struct TermLimitExceeded {};

class DaviesInversion {
 public:
  DaviesInversion(const Eigen::VectorXd& lambda, double point, int limit)
      : lambda_(lambda.data(), lambda.data() + lambda.size()),
        c_(point),
        lim_(limit) {}

  DaviesOutcome run(double accuracy) {
    DaviesOutcome out;
    const int r = int(lambda_.size());
    double sd = 0.0;
    lmax_ = 0.0;
    lmin_ = 0.0;
    mean_ = 0.0;
    for (double lj : lambda_) {
      sd += 2.0 * lj * lj;
      mean_ += lj;
      lmax_ = std::max(lmax_, lj);
      lmin_ = std::min(lmin_, lj);
    }
    if (sd == 0.0) {
      out.cdf = c_ > 0.0 ? 1.0 : 0.0;
      return out;
    }
    sd = std::sqrt(sd);
    const double almx = std::max(lmax_, -lmin_);

    sigsq_ = 0.0;
    intl_ = 0.0;
    ersm_ = 0.0;
    count_ = 0;
    sorted_ = false;
    fail_ = false;
    order_.resize(std::size_t(r));
    std::iota(order_.begin(), order_.end(), 0);

    double acc1 = accuracy;
    double utx = 16.0 / sd;
    double up = 4.5 / sd;
    double un = -up;

    try {
      find_truncation_point(&utx, 0.5 * acc1);
      if (c_ != 0.0 && almx > 0.07 * sd) {
        // Try a convergence factor to shorten the integration range.
        double tausq = 0.25 * acc1 / cfe(c_);
        if (fail_) {
          fail_ = false;
        } else if (truncation_error(utx, tausq) < 0.2 * acc1) {
          sigsq_ += tausq;
          find_truncation_point(&utx, 0.25 * acc1);
        }
      }
      acc1 *= 0.5;

      double xlim = double(lim_);
      double intv = 0.0;
      double xnt = 0.0;
      for (;;) {
        const double d1 = cutoff(acc1, &up) - c_;
        if (d1 < 0.0) {
          out.cdf = 1.0;
          return out;
        }
        const double d2 = c_ - cutoff(acc1, &un);
        if (d2 < 0.0) {
          out.cdf = 0.0;
          return out;
        }
        intv = 2.0 * kPi / std::max(d1, d2);
        xnt = utx / intv;
        const double xntm = 3.0 / std::sqrt(acc1);
        if (xnt <= xntm * 1.5) break;
        // Auxiliary integration with a convergence factor.
        if (xntm > xlim) {
          out.fault = 1;
          return out;
        }
        const int ntm = int(std::floor(xntm + 0.5));
        const double intv1 = utx / ntm;
        const double x = 2.0 * kPi / intv1;
        if (x <= std::abs(c_)) break;
        double tausq = 0.33 * acc1 / (1.1 * (cfe(c_ - x) + cfe(c_ + x)));
        if (fail_) break;
        acc1 *= 0.67;
        integrate(ntm, intv1, tausq, false);
        xlim -= xntm;
        sigsq_ += tausq;
        find_truncation_point(&utx, 0.25 * acc1);
        acc1 *= 0.75;
      }

      if (xnt > xlim) {
        out.fault = 1;
        return out;
      }
      integrate(int(std::floor(xnt + 0.5)), intv, 0.0, true);
    } catch (const TermLimitExceeded&) {
      out.fault = 4;
      return out;
    }

    out.cdf = 0.5 - intl_;
    out.abs_sum = ersm_;
    // Round-off check, allowing for radix 8/16 arithmetic.
    const double x = ersm_ + accuracy / 10.0;
    for (int rat : {1, 2, 4, 8})
      if (rat * x == rat * ersm_) out.fault = 2;
    return out;
  }

 private:
  void bump_counter() {
    if (++count_ > lim_) throw TermLimitExceeded{};
  }

  static double exp_clipped(double x) { return x < -50.0 ? 0.0 : std::exp(x); }

  // log(1+x), or log(1+x) - x when !first, evaluated accurately near zero.
  static double log1(double x, bool first) {
    if (std::abs(x) > 0.1)
      return first ? std::log1p(x) : std::log1p(x) - x;
    double y = x / (2.0 + x);
    double term = 2.0 * y * y * y;
    double k = 3.0;
    double s = (first ? 2.0 : -x) * y;
    y *= y;
    for (double s1 = s + term / k; s1 != s; s1 = s + term / k) {
      k += 2.0;
      term *= y;
      s = s1;
    }
    return s;
  }

  // Tail bound on the distribution beyond the scale point u.
  double tail_bound(double u, double* cx) {
    bump_counter();
    double xconst = u * sigsq_;
    double sum1 = u * xconst;
    u *= 2.0;
    for (double lj : lambda_) {
      const double x = u * lj;
      const double y = 1.0 - x;
      xconst += lj / y;
      sum1 += x * x / y + log1(-x, false);
    }
    *cx = xconst;
    return exp_clipped(-0.5 * sum1);
  }

  // Point beyond which the distribution mass is below accx.
  double cutoff(double accx, double* upn) {
    double u2 = *upn;
    double u1 = 0.0;
    double c1 = mean_;
    double c2 = 0.0;
    const double rb = 2.0 * (u2 > 0.0 ? lmax_ : lmin_);
    for (double u = u2 / (1.0 + u2 * rb); tail_bound(u, &c2) > accx;
         u = u2 / (1.0 + u2 * rb)) {
      u1 = u2;
      c1 = c2;
      u2 *= 2.0;
    }
    for (double u = (c1 - mean_) / (c2 - mean_); u < 0.9;
         u = (c1 - mean_) / (c2 - mean_)) {
      u = 0.5 * (u1 + u2);
      double xconst = 0.0;
      if (tail_bound(u / (1.0 + u * rb), &xconst) > accx) {
        u1 = u;
        c1 = xconst;
      } else {
        u2 = u;
        c2 = xconst;
      }
    }
    *upn = u2;
    return c2;
  }

  // Integration truncation error estimate at truncation point u.
  double truncation_error(double u, double tausq) {
    bump_counter();
    double prod2 = 0.0;
    double prod3 = 0.0;
    int s = 0;
    const double sum2 = (sigsq_ + tausq) * u * u;
    double prod1 = 2.0 * sum2;
    u *= 2.0;
    for (double lj : lambda_) {
      const double x = u * lj * u * lj;
      if (x > 1.0) {
        prod2 += std::log(x);
        prod3 += log1(x, true);
        ++s;
      } else {
        prod1 += log1(x, true);
      }
    }
    prod2 += prod1;
    prod3 += prod1;
    const double x = exp_clipped(-0.25 * prod2) / kPi;
    const double y = exp_clipped(-0.25 * prod3) / kPi;
    double err1 = s == 0 ? 1.0 : x * 2.0 / s;
    double err2 = prod3 > 1.0 ? 2.5 * y : 1.0;
    err1 = std::min(err1, err2);
    const double half = 0.5 * sum2;
    err2 = half <= y ? 1.0 : y / half;
    return std::min(err1, err2);
  }

  void find_truncation_point(double* utx, double accx) {
    static constexpr double divis[] = {2.0, 1.4, 1.2, 1.1};
    double ut = *utx;
    double u = ut / 4.0;
    if (truncation_error(u, 0.0) > accx) {
      while (truncation_error(ut, 0.0) > accx) ut *= 4.0;
    } else {
      ut = u;
      for (u /= 4.0; truncation_error(u, 0.0) <= accx; u /= 4.0) ut = u;
    }
    for (double d : divis) {
      u = ut / d;
      if (truncation_error(u, 0.0) <= accx) ut = u;
    }
    *utx = ut;
  }

  void integrate(int nterm, double interv, double tausq, bool main) {
    const double inpi = interv / kPi;
    for (int k = nterm; k >= 0; --k) {
      const double u = (k + 0.5) * interv;
      double sum1 = -2.0 * u * c_;
      double sum2 = std::abs(sum1);
      double sum3 = -0.5 * sigsq_ * u * u;
      for (double lj : lambda_) {
        const double x = 2.0 * lj * u;
        sum3 -= 0.25 * log1(x * x, true);
        const double z = std::atan(x);
        sum1 += z;
        sum2 += std::abs(z);
      }
      double x = inpi * exp_clipped(sum3) / u;
      if (!main) x *= 1.0 - exp_clipped(-0.5 * tausq * u * u);
      intl_ += std::sin(0.5 * sum1) * x;
      ersm_ += 0.5 * sum2 * x;
    }
  }

  // Coefficient of tausq in the convergence-factor error estimate.
  double cfe(double x) {
    bump_counter();
    if (!sorted_) {
      std::sort(order_.begin(), order_.end(), [&](int a, int b) {
        return std::abs(lambda_[std::size_t(a)]) >
               std::abs(lambda_[std::size_t(b)]);
      });
      sorted_ = true;
    }
    double axl = std::abs(x);
    const double sxl = x > 0.0 ? 1.0 : -1.0;
    double sum1 = 0.0;
    for (int j = int(order_.size()) - 1; j >= 0; --j) {
      const double lt = lambda_[std::size_t(order_[std::size_t(j)])];
      if (lt * sxl > 0.0) {
        const double lj = std::abs(lt);
        const double axl1 = axl - lj;
        const double axl2 = lj / kLn2Over8;
        if (axl1 > axl2) {
          axl = axl1;
        } else {
          if (axl > axl2) axl = axl2;
          sum1 = (axl - axl1) / lj + j;
          break;
        }
      }
    }
    if (sum1 > 100.0) {
      fail_ = true;
      return 1.0;
    }
    return std::pow(2.0, sum1 / 4.0) / (kPi * axl * axl);
  }

  std::vector<double> lambda_;
  double c_;
  int lim_;

  double sigsq_ = 0.0;
  double lmax_ = 0.0;
  double lmin_ = 0.0;
  double mean_ = 0.0;
  double intl_ = 0.0;
  double ersm_ = 0.0;
  int count_ = 0;
  bool sorted_ = false;
  bool fail_ = false;
  std::vector<int> order_;
};

}  // namespace

DaviesOutcome davies_cdf(const Eigen::VectorXd& lambda, double q,
                         double accuracy, int term_limit) {
  DaviesInversion inv(lambda, q, term_limit);
  return inv.run(accuracy);
}

}  // namespace tdc::detail
