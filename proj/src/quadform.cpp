#include "tdc/quadform.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "tdc/parallel.hpp"
#include "tdc/rng.hpp"

namespace tdc {

namespace {

constexpr double kEigenvalueTruncationRel = 1e-12;
constexpr int kDaviesTermLimit = 1'000'000;

// Clamp tiny negatives from the symmetric eigensolver, drop entries below
// the relative truncation threshold, sort descending.
QuadFormDist finalize_spectrum(Eigen::VectorXd values) {
  std::vector<double> kept;
  kept.reserve(std::size_t(values.size()));
  const double max_value = values.size() > 0 ? values.maxCoeff() : 0.0;
  const double cut = max_value * kEigenvalueTruncationRel;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values(i) > cut) kept.push_back(values(i));
  std::sort(kept.begin(), kept.end(), std::greater<>());

  QuadFormDist dist;
  dist.lambdas =
      Eigen::Map<const Eigen::VectorXd>(kept.data(), Eigen::Index(kept.size()));
  dist.trace = dist.lambdas.sum();
  dist.trace_sq = dist.lambdas.squaredNorm();
  return dist;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigensolver failed");
  return solver.eigenvalues();
}

}  // namespace

WeightVector make_weight_vector(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                int gamma) {
  if (gamma < 2 || gamma % 2 != 0)
    throw std::invalid_argument("gamma must be a positive even integer");
  WeightVector w;
  w.gamma = gamma;
  const Eigen::Index j = beta.size();
  if (gamma == 2) {
    w.r = Eigen::VectorXd::Ones(j);
    return w;
  }
  Eigen::VectorXd log_r(j);
  double log_max = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < j; ++i) {
    const double b = std::abs(beta(i));
    log_r(i) = b == 0.0 ? -std::numeric_limits<double>::infinity()
                        : double(gamma - 2) * std::log(b);
    log_max = std::max(log_max, log_r(i));
  }
  if (!std::isfinite(log_max)) {
    w.r = Eigen::VectorXd::Zero(j);
    w.all_zero = true;
    return w;
  }
  w.log_scale = log_max;
  w.r = (log_r.array() - log_max).exp();
  for (Eigen::Index i = 0; i < j; ++i)
    if (!std::isfinite(log_r(i))) w.r(i) = 0.0;
  return w;
}

QuadFormDist quadform_dist(const Eigen::MatrixXd& sigma,
                           const Eigen::Ref<const Eigen::VectorXd>& r) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != r.size())
    throw std::invalid_argument("quadform_dist: dimension mismatch");
  if ((r.array() < 0.0).any())
    throw std::invalid_argument("quadform_dist: negative weight");
  const Eigen::VectorXd d = r.array().sqrt();
  Eigen::MatrixXd b = d.asDiagonal() * sigma * d.asDiagonal();
  return finalize_spectrum(symmetric_eigenvalues(b));
}

QuadFormDist eigenvalues_weighted(const ScoreCovariance& sigma,
                                  const WeightVector& weights) {
  if (weights.r.size() != sigma.dim())
    throw std::invalid_argument("eigenvalues_weighted: dimension mismatch");
  if (weights.all_zero) return QuadFormDist{};
  if (sigma.has_dense()) return quadform_dist(sigma.dense, weights.r);

  // Factored route: the nonzero spectrum of R^{1/2} F'F R^{1/2} equals that
  // of (F R^{1/2})(F R^{1/2})', an n x n problem. Columns whose cumulative
  // trace contribution is negligible are dropped first (Weyl: each
  // eigenvalue moves by at most the dropped trace).
  const Eigen::Index n = sigma.factor.rows();
  const Eigen::Index j = sigma.factor.cols();
  Eigen::VectorXd contribution(j);
  for (Eigen::Index c = 0; c < j; ++c)
    contribution(c) = weights.r(c) * sigma.factor.col(c).squaredNorm();
  const double total = contribution.sum();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(j));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return contribution(a) < contribution(b);
  });
  double dropped = 0.0;
  std::size_t first_kept = 0;
  for (; first_kept < order.size(); ++first_kept) {
    const double next = dropped + contribution(order[first_kept]);
    if (next > 1e-13 * total) break;
    dropped = next;
  }
  std::vector<Eigen::Index> kept(order.begin() + long(first_kept), order.end());
  std::sort(kept.begin(), kept.end());

  Eigen::MatrixXd scaled(n, Eigen::Index(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c)
    scaled.col(Eigen::Index(c)) =
        sigma.factor.col(kept[c]) * std::sqrt(weights.r(kept[c]));

  const Eigen::Index small = std::min<Eigen::Index>(n, scaled.cols());
  Eigen::MatrixXd gram(small, small);
  gram.setZero();
  if (small == n)
    gram.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  else
    gram.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  return finalize_spectrum(symmetric_eigenvalues(gram));
}

QuadFormPValue davies_pvalue(const QuadFormDist& dist, double q,
                             double accuracy) {
  if (!(accuracy > 0.0) || accuracy > 1e-2)
    throw std::invalid_argument("davies_pvalue: accuracy outside (0, 1e-2]");
  QuadFormPValue result;
  result.error_bound = accuracy;
  if (q <= 0.0) {
    result.value = 1.0;
    return result;
  }
  if (dist.lambdas.size() == 0) {
    result.value = kPValueFloor;
    return result;
  }
  // A small term budget settles well-behaved spectra in microseconds; the
  // hard ones (eigenvalues spanning many orders, q in the far left tail)
  // fault fast and go to the Imhof route, with the full-budget inversion
  // kept as a last resort.
  detail::DaviesOutcome out =
      detail::davies_cdf(dist.lambdas, q, accuracy, 20'000);
  if (out.fault != 0 || out.cdf < -0.5) {
    result.davies_fault = true;
    try {
      result.method = TailMethod::imhof;
      result.value = imhof_pvalue(dist, q, accuracy);
      return result;
    } catch (const std::runtime_error&) {
      out = detail::davies_cdf(dist.lambdas, q, accuracy, kDaviesTermLimit);
      if (out.fault != 0 || out.cdf < -0.5)
        throw std::runtime_error(
            "quadform tail probability did not converge");
      result.method = TailMethod::davies;
    }
  }
  double p = 1.0 - out.cdf;
  if (p > 1.0) p = 1.0;
  if (p < kPValueFloor) p = kPValueFloor;
  result.value = p;
  return result;
}

double normal_approx_pvalue(const QuadFormDist& dist, double q) {
  if (!(dist.trace_sq > 0.0))
    throw std::invalid_argument("normal_approx_pvalue: zero variance");
  const double z = (q - dist.trace) / std::sqrt(2.0 * dist.trace_sq);
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

McTailEstimate mc_quadform_pvalue(const QuadFormDist& dist, double q,
                                  std::int64_t n_draws, std::uint64_t seed,
                                  int workers) {
  if (n_draws < 10'000)
    throw std::invalid_argument("mc_quadform_pvalue: need at least 1e4 draws");
  const Eigen::Index j = dist.lambdas.size();
  constexpr std::int64_t kChunk = 65'536;
  const std::int64_t n_chunks = (n_draws + kChunk - 1) / kChunk;
  std::vector<std::int64_t> hits(std::size_t(n_chunks), 0);

  parallel_for(n_chunks, workers, [&](std::int64_t c) {
    Rng rng(derive_seed(seed, std::uint64_t(c)));
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min(n_draws, begin + kChunk);
    std::int64_t count = 0;
    for (std::int64_t d = begin; d < end; ++d) {
      double value = 0.0;
      for (Eigen::Index k = 0; k < j; ++k) {
        const double z = rng.normal();
        value += dist.lambdas(k) * z * z;
      }
      if (value > q) ++count;
    }
    hits[std::size_t(c)] = count;
  });

  const double total =
      double(std::accumulate(hits.begin(), hits.end(), std::int64_t(0)));
  McTailEstimate est;
  est.p = total / double(n_draws);
  est.se = std::sqrt(est.p * (1.0 - est.p) / double(n_draws));
  return est;
}

}  // namespace tdc
