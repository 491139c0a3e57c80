#ifndef TDC_FAMILY_HPP
#define TDC_FAMILY_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tdc {

enum class FamilyKind { gaussian_identity, binomial_logit };

// Exponential-family response description: canonical link, its inverse, the
// variance function, and how the dispersion enters var(y) = a(phi) * v(mu).
struct GlmFamily {
  FamilyKind kind = FamilyKind::gaussian_identity;

  static GlmFamily gaussian() { return {FamilyKind::gaussian_identity}; }
  static GlmFamily binomial() { return {FamilyKind::binomial_logit}; }

  double link(double mu) const {
    if (kind == FamilyKind::gaussian_identity) return mu;
    return std::log(mu / (1.0 - mu));
  }

  double link_inverse(double eta) const {
    if (kind == FamilyKind::gaussian_identity) return eta;
    // Evaluate from the side that keeps exp() bounded.
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
  }

  // Variance function v(mu).
  double variance(double mu) const {
    if (kind == FamilyKind::gaussian_identity) return 1.0;
    return mu * (1.0 - mu);
  }

  // a(phi): phi itself for gaussian, fixed at one for binomial.
  double dispersion_scale(double phi) const {
    return kind == FamilyKind::gaussian_identity ? phi : 1.0;
  }

  bool estimates_dispersion() const {
    return kind == FamilyKind::gaussian_identity;
  }

  std::string_view name() const {
    return kind == FamilyKind::gaussian_identity ? "gaussian" : "binomial";
  }

  static GlmFamily from_name(std::string_view name) {
    if (name == "gaussian") return gaussian();
    if (name == "binomial") return binomial();
    throw std::invalid_argument("unknown family: " + std::string(name));
  }
};

}  // namespace tdc

#endif  // TDC_FAMILY_HPP
