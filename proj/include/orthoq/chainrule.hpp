#ifndef ORTHOQ_CHAINRULE_HPP
#define ORTHOQ_CHAINRULE_HPP

#include <Eigen/Dense>
#include <vector>

#include "orthoq/multiindex.hpp"

namespace orthoq {

/// Analytic derivatives of a mean map eta -> m(eta) in R^d_out.
/// derivs(i, k) = D^mu m_i for mu = IndexFamily(d_eta, q).at(k); value holds
/// the order-0 map itself.
struct MeanDerivatives {
  int d_eta = 0;
  int d_out = 0;
  Eigen::VectorXd value;
  Eigen::MatrixXd derivs;  // d_out x |IndexFamily(d_eta, q)|
};

/// Coefficient templates of the multivariate chain rule for a signature
/// (d_eta, d_out, q): entry (nu, lambda) of the matrix M with
/// grad^q_eta f(m(eta)) = M * grad^q_m f. Rows follow IndexFamily(d_eta, q),
/// columns IndexFamily(d_out, q); M is block lower-triangular in order.
/// Templates are enumerated once per signature and cached; coefficients are
/// exact integer ratios.
class FaaDiBrunoTemplate {
 public:
  struct Factor {
    int eta_index;  // column into MeanDerivatives::derivs
    int output;     // which m_i
    int power;
  };
  struct Term {
    int col;
    double coeff;
    std::vector<Factor> factors;
  };

  static const FaaDiBrunoTemplate& get(int d_eta, int d_out, int q);

  const IndexFamily& row_family() const { return rows_fam_; }
  const IndexFamily& col_family() const { return cols_fam_; }
  const std::vector<std::vector<Term>>& terms() const { return terms_; }

  Eigen::MatrixXd evaluate(const MeanDerivatives& md) const;

 private:
  FaaDiBrunoTemplate(int d_eta, int d_out, int q);
  IndexFamily rows_fam_;
  IndexFamily cols_fam_;
  std::vector<std::vector<Term>> terms_;  // per row
};

/// Chain-rule matrix for the supplied mean derivatives. Throws
/// std::invalid_argument naming the missing indices when md is incomplete.
Eigen::MatrixXd faa_di_bruno_matrix(const MeanDerivatives& md, int q);

}  // namespace orthoq

#endif
