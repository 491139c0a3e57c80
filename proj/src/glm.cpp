#include "tdc/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>

namespace tdc {

namespace {

// log(1 + exp(eta)) without overflow.
inline double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                      GlmFamily family) {
  if (family.kind == FamilyKind::gaussian_identity)
    return -0.5 * (y - eta).squaredNorm();
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    ll += y(i) * eta(i) - softplus(eta(i));
  return ll;
}

}  // namespace

namespace detail {

IrlsResult irls_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                    GlmFamily family, const IrlsOptions& options) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.cols();
  if (X.rows() != n) throw std::invalid_argument("irls_fit: row mismatch");
  if (n <= p)
    throw std::invalid_argument("irls_fit: need more observations than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p)
    throw RankDeficientError("design matrix is rank deficient");

  IrlsResult result;
  if (family.kind == FamilyKind::gaussian_identity) {
    result.beta = qr.solve(y);
    result.eta = X * result.beta;
    result.mu = result.eta;
    result.converged = true;
    result.iterations = 1;
    return result;
  }

  // Binomial-logit: Newton scoring with step halving.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 0.5);
  double ll = log_likelihood(y, eta, family);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::ArrayXd w = (mu.array() * (1.0 - mu.array())).max(1e-10);
    Eigen::VectorXd z = eta.array() + (y.array() - mu.array()) / w;
    Eigen::MatrixXd xw = X.array().colwise() * w;
    Eigen::MatrixXd xtwx = X.transpose() * xw;
    Eigen::VectorXd xtwz = xw.transpose() * z;
    Eigen::VectorXd proposal = xtwx.ldlt().solve(xtwz);
    Eigen::VectorXd step = proposal - beta;

    double scale = 1.0;
    Eigen::VectorXd beta_new = proposal;
    Eigen::VectorXd eta_new = X * beta_new;
    double ll_new = log_likelihood(y, eta_new, family);
    for (int h = 0; h < 32 && !(ll_new >= ll - 1e-12 * std::abs(ll)); ++h) {
      scale *= 0.5;
      beta_new = beta + scale * step;
      eta_new = X * beta_new;
      ll_new = log_likelihood(y, eta_new, family);
    }

    const double change = (beta_new - beta).cwiseAbs().maxCoeff();
    result.step_trace.push_back(change);
    beta = beta_new;
    eta = eta_new;
    for (Eigen::Index i = 0; i < n; ++i) mu(i) = family.link_inverse(eta(i));
    ll = ll_new;
    result.iterations = iter;

    if (change < options.tolerance) {
      result.converged = true;
      break;
    }
  }

  result.beta = beta;
  result.eta = eta;
  result.mu = mu;
  if (!result.converged) {
    if (eta.cwiseAbs().maxCoeff() > 30.0)
      throw SeparationError("separation detected");
    throw ConvergenceError("irls did not converge", result.step_trace);
  }
  return result;
}

}  // namespace detail

NullModelFit fit_null_glm(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                          GlmFamily family, const IrlsOptions& options) {
  detail::IrlsResult r = detail::irls_fit(y, X, family, options);
  NullModelFit fit;
  fit.family = family;
  fit.beta_x = r.beta;
  fit.fitted_means = r.mu;
  fit.residuals = y - r.mu;
  fit.converged = r.converged;
  fit.iterations = r.iterations;
  if (family.estimates_dispersion()) {
    const Eigen::Index dof = y.size() - X.cols();
    fit.dispersion = fit.residuals.squaredNorm() / double(dof);
  } else {
    fit.dispersion = 1.0;
  }
  return fit;
}

ScoreVector score_vector(const NullModelFit& fit,
                         const Eigen::Ref<const Eigen::MatrixXd>& G) {
  if (G.rows() != fit.residuals.size())
    throw std::invalid_argument("score_vector: sample size mismatch");
  ScoreVector s;
  s.n = G.rows();
  s.s = G.transpose() * fit.residuals / double(s.n);
  return s;
}

Eigen::VectorXd ScoreCovariance::diagonal() const {
  if (has_dense()) return dense.diagonal();
  return factor.colwise().squaredNorm();
}

double ScoreCovariance::quad_form(const Eigen::VectorXd& w) const {
  if (w.size() != dim())
    throw std::invalid_argument("quad_form: dimension mismatch");
  if (has_dense()) return w.dot(dense.selfadjointView<Eigen::Lower>() * w);
  return (factor * w).squaredNorm();
}

double ScoreCovariance::trace() const {
  if (has_dense()) return dense.trace();
  return factor.squaredNorm();
}

ScoreCovariance estimate_score_covariance(
    const NullModelFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& G,
    std::optional<double> delta) {
  const Eigen::Index n = G.rows();
  const Eigen::Index j2 = G.cols();
  if (n != fit.fitted_means.size())
    throw std::invalid_argument("estimate_score_covariance: sample mismatch");
  if (delta && (*delta < 0.0 || *delta > 1.0))
    throw std::invalid_argument("estimate_score_covariance: delta outside [0,1]");

  ScoreCovariance sigma;
  Eigen::ArrayXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = fit.family.dispersion_scale(fit.dispersion) *
           fit.family.variance(fit.fitted_means(i));
  sigma.factor = G.array().colwise() * (v / double(n)).sqrt();

  const double trace = sigma.factor.squaredNorm();
  const double threshold = j2 > 0 ? 1e-8 * trace / double(j2) : 0.0;

  // When J2 > n the plug-in is singular for every delta < 1; the auto rule
  // keeps delta = 0 and leaves the factored form (the weighted-chi-square
  // law only needs the nonzero spectrum).
  const bool auto_select = !delta.has_value();
  if (auto_select && j2 > n) {
    sigma.shrinkage_delta = 0.0;
    sigma.min_eigenvalue_bound = 0.0;
    return sigma;
  }

  const bool want_dense = j2 <= n || j2 <= 1024 || (delta && *delta > 0.0);
  if (!want_dense) {
    sigma.shrinkage_delta = delta.value_or(0.0);
    sigma.min_eigenvalue_bound = 0.0;
    return sigma;
  }

  Eigen::MatrixXd s(j2, j2);
  s.setZero();
  s.selfadjointView<Eigen::Lower>().rankUpdate(sigma.factor.transpose());
  s = s.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd diag = s.diagonal();

  auto apply_shrinkage = [&](double d) {
    Eigen::MatrixXd out = (1.0 - d) * s;
    out.diagonal() = diag;  // diagonal is invariant under shrinkage
    return out;
  };
  // Certifies lambda_min >= threshold via Cholesky of (Sigma - threshold I).
  auto certify = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() -= threshold;
    return Eigen::LLT<Eigen::MatrixXd>(shifted).info() == Eigen::Success;
  };

  if (auto_select) {
    static constexpr double ladder[] = {0.0, 0.01, 0.05, 0.1, 0.2, 0.5};
    double chosen = ladder[std::size(ladder) - 1];
    bool certified = false;
    for (double d : ladder) {
      Eigen::MatrixXd candidate = apply_shrinkage(d);
      if (certify(candidate)) {
        chosen = d;
        certified = true;
        sigma.dense = std::move(candidate);
        break;
      }
    }
    if (!certified) sigma.dense = apply_shrinkage(chosen);
    sigma.shrinkage_delta = chosen;
    sigma.min_eigenvalue_bound = certified ? threshold : 0.0;
  } else {
    sigma.dense = apply_shrinkage(*delta);
    sigma.shrinkage_delta = *delta;
    sigma.min_eigenvalue_bound = certify(sigma.dense) ? threshold : 0.0;
  }
  return sigma;
}

MarginalFit marginal_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                         const Eigen::Ref<const Eigen::VectorXd>& g,
                         GlmFamily family, const IrlsOptions& options) {
  MarginalFit out;
  const Eigen::Index n = y.size();
  const Eigen::Index p = X.cols() + 1;
  Eigen::MatrixXd design(n, p);
  design.leftCols(X.cols()) = X;
  design.col(p - 1) = g;

  detail::IrlsResult r;
  try {
    r = detail::irls_fit(y, design, family, options);
  } catch (const std::exception&) {
    return out;  // collinear or non-convergent: excluded from selection
  }

  Eigen::ArrayXd w(n);
  double scale = 1.0;
  if (family.kind == FamilyKind::gaussian_identity) {
    w.setOnes();
    scale = (y - r.mu).squaredNorm() / double(n - p);  // phi-hat
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      w(i) = std::max(family.variance(r.mu(i)), 1e-10);
  }
  Eigen::MatrixXd xtwx =
      design.transpose() * (design.array().colwise() * w).matrix();
  Eigen::MatrixXd cov = xtwx.ldlt().solve(
      Eigen::MatrixXd::Identity(p, p));
  const double var = scale * cov(p - 1, p - 1);

  out.beta = r.beta(p - 1);
  out.valid = true;
  if (var > 0.0) {
    out.z = out.beta / std::sqrt(var);
  } else {
    out.z = out.beta == 0.0 ? 0.0
            : std::copysign(std::numeric_limits<double>::infinity(), out.beta);
  }
  return out;
}

}  // namespace tdc
