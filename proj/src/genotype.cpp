#include "tdc/genotype.hpp"

#include <cmath>
#include <stdexcept>

namespace tdc {

GenotypeMatrix GenotypeMatrix::subset_rows(
    const std::vector<Eigen::Index>& rows) const {
  GenotypeMatrix out;
  out.values.resize(Eigen::Index(rows.size()), values.cols());
  for (Eigen::Index i = 0; i < out.values.rows(); ++i)
    out.values.row(i) = values.row(rows[std::size_t(i)]);
  out.variant_ids = variant_ids;
  out.standardized = standardized;
  out.column_means = column_means;
  out.column_sds = column_sds;
  out.constant_columns = constant_columns;
  return out;
}

GenotypeMatrix standardize(const Eigen::MatrixXd& raw,
                           std::vector<std::string> variant_ids) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index j = raw.cols();
  if (n < 2) throw std::invalid_argument("standardize: need at least 2 rows");
  if (j == 0) throw std::invalid_argument("standardize: empty matrix");

  GenotypeMatrix g;
  g.values = raw;
  if (variant_ids.empty()) {
    g.variant_ids.reserve(std::size_t(j));
    for (Eigen::Index c = 0; c < j; ++c)
      g.variant_ids.push_back("v" + std::to_string(c + 1));
  } else {
    if (Eigen::Index(variant_ids.size()) != j)
      throw std::invalid_argument("standardize: variant id count mismatch");
    g.variant_ids = std::move(variant_ids);
  }

  g.column_means.resize(j);
  g.column_sds.resize(j);
  g.constant_columns.assign(std::size_t(j), false);

  Eigen::Index n_constant = 0;
  for (Eigen::Index c = 0; c < j; ++c) {
    const double mean = g.values.col(c).mean();
    const double ss = (g.values.col(c).array() - mean).square().sum();
    const double var = ss / double(n - 1);
    g.column_means(c) = mean;
    if (var <= 0.0) {
      g.column_sds(c) = 0.0;
      g.constant_columns[std::size_t(c)] = true;
      ++n_constant;
      continue;
    }
    const double sd = std::sqrt(var);
    g.column_sds(c) = sd;
    g.values.col(c) = (g.values.col(c).array() - mean) / sd;
  }
  if (n_constant == j)
    throw std::invalid_argument("degenerate genotype matrix");

  g.standardized = true;
  return g;
}

GenotypeMatrix standardize(GenotypeMatrix g) {
  if (g.standardized) return g;
  return standardize(g.values, std::move(g.variant_ids));
}

}  // namespace tdc
