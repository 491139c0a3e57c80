#include "tdc/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tdc/rng.hpp"

namespace tdc {

Eigen::Index signal_count_from_proportion(Eigen::Index j, double proportion) {
  if (proportion < 0.0 || proportion > 1.0)
    throw std::invalid_argument("signal proportion outside [0,1]");
  return Eigen::Index(std::llround(proportion * double(j)));
}

Eigen::Index resolved_signal_count(const SimDesign& design) {
  if (design.signal_count >= 0) return design.signal_count;
  return signal_count_from_proportion(design.j_variants,
                                      design.signal_proportion);
}

GenotypeMatrix gen_ar1_genotypes(Eigen::Index n, Eigen::Index j, double rho,
                                 std::uint64_t seed) {
  if (!(rho > -1.0 && rho < 1.0))
    throw std::invalid_argument("gen_ar1_genotypes: rho outside (-1,1)");
  if (n < 1 || j < 1)
    throw std::invalid_argument("gen_ar1_genotypes: empty dimensions");
  GenotypeMatrix g;
  g.values.resize(n, j);
  const double innovation = std::sqrt(1.0 - rho * rho);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = rng.normal();
    g.values(i, 0) = x;
    for (Eigen::Index c = 1; c < j; ++c) {
      x = rho * x + innovation * rng.normal();
      g.values(i, c) = x;
    }
  }
  g.variant_ids.reserve(std::size_t(j));
  for (Eigen::Index c = 0; c < j; ++c)
    g.variant_ids.push_back("v" + std::to_string(c + 1));
  g.constant_columns.assign(std::size_t(j), false);
  g.standardized = false;
  return g;
}

Eigen::VectorXd place_signals(Eigen::Index j, Eigen::Index count,
                              double effect_size, std::uint64_t seed) {
  if (count < 0 || count > j)
    throw std::invalid_argument("place_signals: count outside [0, J]");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(j);
  if (count == 0) return beta;
  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(j));
  for (Eigen::Index c = 0; c < j; ++c) order[std::size_t(c)] = c;
  rng.shuffle(order);
  std::vector<Eigen::Index> support(order.begin(), order.begin() + count);
  // Randomize which half of the support is positive; odd counts give the
  // extra signal a positive sign.
  rng.shuffle(support);
  const Eigen::Index n_positive = (count + 1) / 2;
  for (Eigen::Index i = 0; i < count; ++i)
    beta(support[std::size_t(i)]) =
        i < n_positive ? effect_size : -effect_size;
  return beta;
}

Eigen::VectorXd design_effects(const SimDesign& design) {
  return place_signals(design.j_variants, resolved_signal_count(design),
                       design.effect_size, derive_seed(design.seed, 0xbe7a));
}

Eigen::VectorXd gen_phenotype(const Eigen::Ref<const Eigen::MatrixXd>& G,
                              const Eigen::VectorXd& beta, GlmFamily family,
                              double intercept, std::uint64_t seed) {
  if (G.cols() != beta.size())
    throw std::invalid_argument("gen_phenotype: dimension mismatch");
  const Eigen::Index n = G.rows();
  Eigen::VectorXd eta = (G * beta).array() + intercept;
  Eigen::VectorXd y(n);
  Rng rng(seed);
  if (family.kind == FamilyKind::gaussian_identity) {
    for (Eigen::Index i = 0; i < n; ++i) y(i) = eta(i) + rng.normal();
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      y(i) = rng.bernoulli(family.link_inverse(eta(i))) ? 1.0 : 0.0;
  }
  return y;
}

namespace {

// Accumulated second-moment matrices for one batch of draws.
struct SnrMoments {
  Eigen::MatrixXd xi;      // E[c^2 g g']
  Eigen::MatrixXd m1;      // E[g g' eps^2]
  Eigen::VectorXd delta;   // E[c g]
  std::int64_t reps = 0;
};

struct SnrComponents {
  double mu_n, sigma_n1, snr_n, mu_2n, sigma_2n1, snr_2n;
  double xi_trace_n, delta_quad_n;
};

SnrComponents components_from_moments(
    const SnrMoments& m, Eigen::Index n_eff,
    const std::vector<Eigen::Index>& j2_set, const Eigen::VectorXd& r) {
  const Eigen::Index j2 = Eigen::Index(j2_set.size());
  Eigen::MatrixXd xi_m(j2, j2), m1_m(j2, j2);
  Eigen::VectorXd delta_m(j2);
  for (Eigen::Index a = 0; a < j2; ++a) {
    delta_m(a) = m.delta(j2_set[std::size_t(a)]);
    for (Eigen::Index b = 0; b < j2; ++b) {
      xi_m(a, b) = m.xi(j2_set[std::size_t(a)], j2_set[std::size_t(b)]);
      m1_m(a, b) = m.m1(j2_set[std::size_t(a)], j2_set[std::size_t(b)]);
    }
  }
  SnrComponents c{};
  c.xi_trace_n = (r.array() * xi_m.diagonal().array()).sum();
  c.delta_quad_n = (r.array() * delta_m.array().square()).sum();
  c.mu_n = c.xi_trace_n + double(n_eff - 1) * c.delta_quad_n;

  const Eigen::MatrixXd rm1 =
      r.asDiagonal() * m1_m;  // rows scaled by r
  const Eigen::MatrixXd rxi = r.asDiagonal() * xi_m;
  const double sigma_n0_sq = 2.0 * (rm1.array() * rm1.transpose().array()).sum();
  const double tr_rxi_sq = (rxi.array() * rxi.transpose().array()).sum();
  const double tr_cross = (rm1.array() * rxi.transpose().array()).sum();
  const double var_n = sigma_n0_sq + 2.0 * tr_rxi_sq + 4.0 * tr_cross;
  c.sigma_n1 = var_n > 0.0 ? std::sqrt(var_n) : 0.0;
  c.snr_n = c.sigma_n1 > 0.0 ? c.mu_n / c.sigma_n1 : 0.0;

  // Full-sample counterpart: every variant, identity weights, size 2n.
  c.mu_2n = m.xi.trace() + double(2 * n_eff - 1) * m.delta.squaredNorm();
  const double var_2n = 2.0 * m.m1.squaredNorm() + 2.0 * m.xi.squaredNorm() +
                        4.0 * (m.m1.array() * m.xi.array()).sum();
  c.sigma_2n1 = var_2n > 0.0 ? std::sqrt(var_2n) : 0.0;
  c.snr_2n = c.sigma_2n1 > 0.0 ? c.mu_2n / c.sigma_2n1 : 0.0;
  return c;
}

}  // namespace

SnrEstimate estimate_snr(const SimDesign& design, Eigen::Index n_eff,
                         const std::vector<Eigen::Index>& j2_set,
                         const Eigen::VectorXd& r_weights,
                         std::int64_t mc_reps, std::uint64_t seed,
                         const SnrOptions& options) {
  if (mc_reps < 10'000)
    throw std::invalid_argument("estimate_snr: need at least 1e4 draws");
  if (j2_set.empty()) throw std::invalid_argument("estimate_snr: empty set");
  if (Eigen::Index(r_weights.size()) != Eigen::Index(j2_set.size()))
    throw std::invalid_argument("estimate_snr: weight size mismatch");
  const Eigen::Index j = design.j_variants;
  for (Eigen::Index idx : j2_set)
    if (idx < 0 || idx >= j)
      throw std::invalid_argument("estimate_snr: index out of range");

  const GlmFamily family{design.family};
  const Eigen::VectorXd beta = design_effects(design);
  const double innovation = std::sqrt(1.0 - design.rho * design.rho);
  const double center = options.center_link ? family.link_inverse(0.0) : 0.0;
  const int batches = std::max(1, options.batches);

  SnrMoments pooled;
  pooled.xi = Eigen::MatrixXd::Zero(j, j);
  pooled.m1 = Eigen::MatrixXd::Zero(j, j);
  pooled.delta = Eigen::VectorXd::Zero(j);
  std::vector<SnrComponents> per_batch;
  per_batch.reserve(std::size_t(batches));

  std::int64_t done = 0;
  for (int b = 0; b < batches; ++b) {
    const std::int64_t quota =
        b + 1 == batches ? mc_reps - done : mc_reps / batches;
    done += quota;
    Rng rng(derive_seed(seed, std::uint64_t(b)));
    Eigen::MatrixXd gc(quota, j);   // rows c_i * g_i'
    Eigen::MatrixXd ge(quota, j);   // rows |eps_i| * g_i'
    Eigen::VectorXd delta_sum = Eigen::VectorXd::Zero(j);
    Eigen::VectorXd g(j);
    for (std::int64_t i = 0; i < quota; ++i) {
      double x = rng.normal();
      g(0) = x;
      for (Eigen::Index c = 1; c < j; ++c) {
        x = design.rho * x + innovation * rng.normal();
        g(c) = x;
      }
      const double lin = g.dot(beta);
      const double signal = family.link_inverse(lin) - center;
      const double mean_full = family.link_inverse(design.intercept + lin);
      double y;
      if (family.kind == FamilyKind::gaussian_identity)
        y = design.intercept + lin + rng.normal();
      else
        y = rng.bernoulli(mean_full) ? 1.0 : 0.0;
      const double eps = y - mean_full;
      gc.row(i) = signal * g.transpose();
      ge.row(i) = std::abs(eps) * g.transpose();
      delta_sum += signal * g;
    }
    SnrMoments batch;
    batch.reps = quota;
    batch.xi = gc.transpose() * gc / double(quota);
    batch.m1 = ge.transpose() * ge / double(quota);
    batch.delta = delta_sum / double(quota);
    per_batch.push_back(
        components_from_moments(batch, n_eff, j2_set, r_weights));

    const double w_old = double(done - quota) / double(done);
    const double w_new = double(quota) / double(done);
    pooled.xi = w_old * pooled.xi + w_new * batch.xi;
    pooled.m1 = w_old * pooled.m1 + w_new * batch.m1;
    pooled.delta = w_old * pooled.delta + w_new * batch.delta;
  }
  pooled.reps = mc_reps;

  const SnrComponents point =
      components_from_moments(pooled, n_eff, j2_set, r_weights);

  auto batch_se = [&](auto member) {
    if (per_batch.size() < 2) return 0.0;
    double mean = 0.0;
    for (const auto& c : per_batch) mean += member(c);
    mean /= double(per_batch.size());
    double ss = 0.0;
    for (const auto& c : per_batch) {
      const double d = member(c) - mean;
      ss += d * d;
    }
    return std::sqrt(ss / double(per_batch.size() - 1) /
                     double(per_batch.size()));
  };

  SnrEstimate est;
  est.mu_n_beta = point.mu_n;
  est.sigma_n1 = point.sigma_n1;
  est.snr_n = point.snr_n;
  est.mu_2n_beta = point.mu_2n;
  est.sigma_2n1 = point.sigma_2n1;
  est.snr_2n = point.snr_2n;
  est.mc_reps = mc_reps;
  est.xi_trace_n = point.xi_trace_n;
  est.delta_quad_n = point.delta_quad_n;
  est.mu_n_se = batch_se([](const SnrComponents& c) { return c.mu_n; });
  est.sigma_n1_se = batch_se([](const SnrComponents& c) { return c.sigma_n1; });
  est.snr_n_se = batch_se([](const SnrComponents& c) { return c.snr_n; });
  est.mu_2n_se = batch_se([](const SnrComponents& c) { return c.mu_2n; });
  est.sigma_2n1_se =
      batch_se([](const SnrComponents& c) { return c.sigma_2n1; });
  est.snr_2n_se = batch_se([](const SnrComponents& c) { return c.snr_2n; });

  // Local-alternative admissibility diagnostic with the analytic AR(1)
  // variant covariance restricted to the selected set.
  const Eigen::Index j2 = Eigen::Index(j2_set.size());
  Eigen::MatrixXd sg(j2, j2);
  for (Eigen::Index a = 0; a < j2; ++a)
    for (Eigen::Index b = 0; b < j2; ++b)
      sg(a, b) = std::pow(design.rho,
                          std::abs(double(j2_set[std::size_t(a)] -
                                          j2_set[std::size_t(b)])));
  Eigen::VectorXd delta_m(j2);
  for (Eigen::Index a = 0; a < j2; ++a)
    delta_m(a) = pooled.delta(j2_set[std::size_t(a)]);
  const Eigen::MatrixXd rsg = r_weights.asDiagonal() * sg;
  const double denom =
      (rsg.array() * rsg.transpose().array()).sum() / double(n_eff);
  const Eigen::VectorXd rd = r_weights.asDiagonal() * delta_m;
  est.admissibility_ratio = denom > 0.0 ? rd.dot(sg * rd) / denom : 0.0;
  return est;
}

}  // namespace tdc
