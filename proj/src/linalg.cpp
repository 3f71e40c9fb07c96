#include "stpoisson/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace stpoisson {

double min_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::LLT<Eigen::MatrixXd> spd_cholesky(const Eigen::MatrixXd& a, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": matrix is not positive definite (min eigenvalue " << min_eigenvalue(a)
        << ")";
    throw NumericalError(msg.str());
  }
  return llt;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& what) {
  const auto llt = spd_cholesky(a, what);
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  return symmetrized(inv);
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Rng& rng,
                           const std::string& what) {
  const auto llt = spd_cholesky(cov, what);
  return mean + llt.matrixL() * draw_std_normal(mean.size(), rng);
}

double log_sum_exp(const Eigen::VectorXd& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace stpoisson
