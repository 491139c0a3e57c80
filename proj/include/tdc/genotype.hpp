#ifndef TDC_GENOTYPE_HPP
#define TDC_GENOTYPE_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

namespace tdc {

// Variant matrix, one row per individual. After standardize() each
// non-constant column has mean zero and unit sample variance; constant
// columns are flagged and left unscaled so downstream selection can skip
// them.
struct GenotypeMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> variant_ids;
  bool standardized = false;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_sds;
  std::vector<bool> constant_columns;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index j() const { return values.cols(); }

  // Row subset (e.g. one half of a sample split).
  GenotypeMatrix subset_rows(const std::vector<Eigen::Index>& rows) const;
};

// Centers and scales each column to unit sample variance (n-1 denominator).
// Constant columns are flagged; if every column is constant the matrix
// carries no information and an error is thrown.
GenotypeMatrix standardize(const Eigen::MatrixXd& raw,
                           std::vector<std::string> variant_ids = {});

GenotypeMatrix standardize(GenotypeMatrix g);

}  // namespace tdc

#endif  // TDC_GENOTYPE_HPP
