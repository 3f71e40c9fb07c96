#ifndef STPOISSON_LINALG_HPP
#define STPOISSON_LINALG_HPP

#include <string>

#include <Eigen/Dense>

#include "stpoisson/errors.hpp"
#include "stpoisson/rng.hpp"

namespace stpoisson {

template <typename Derived>
Eigen::MatrixXd symmetrized(const Eigen::MatrixBase<Derived>& a) {
  return 0.5 * (a + a.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& a);

// Cholesky of a symmetric positive definite matrix. Throws NumericalError
// naming `what` and the minimum eigenvalue when the factorization fails.
Eigen::LLT<Eigen::MatrixXd> spd_cholesky(const Eigen::MatrixXd& a, const std::string& what);

// Symmetrized inverse via Cholesky.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& what);

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Rng& rng,
                           const std::string& what);

double log_sum_exp(const Eigen::VectorXd& v);

}  // namespace stpoisson

#endif
