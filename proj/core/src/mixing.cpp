#include "gradpush/mixing.hpp"

#include <stdexcept>
#include <string>

namespace gradpush {

Eigen::VectorXd perron_vector(const Eigen::MatrixXd& w, double tol,
                              long max_iters) {
  const auto n = w.rows();
  if (n < 1 || w.cols() != n)
    throw std::invalid_argument("perron_vector: matrix must be square");
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double residual = 0.0;
  for (long it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next = w * x;
    residual = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (residual <= tol) {
      if (x.minCoeff() <= 0.0)
        throw std::runtime_error(
            "perron_vector: converged to a vector with a nonpositive entry; "
            "input is not a primitive column-stochastic matrix");
      return x;
    }
  }
  throw std::runtime_error(
      "perron_vector: no convergence after " + std::to_string(max_iters) +
      " iterations, last residual " + std::to_string(residual) +
      " (non-primitive or ill-conditioned input)");
}

double pi_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& pi) {
  const auto n = pi.size();
  if (n < 1 || x.size() % n != 0)
    throw std::invalid_argument("pi_norm: x must split into pi.size() blocks");
  const auto d = x.size() / n;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    sum += x.segment(j * d, d).squaredNorm() / pi[j];
  return std::sqrt(sum);
}

double pi_matrix_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& pi) {
  const auto n = pi.size();
  if (a.rows() != n || a.cols() != n)
    throw std::invalid_argument("pi_matrix_norm: shape mismatch with pi");
  const Eigen::VectorXd sqrt_pi = pi.cwiseSqrt();
  const Eigen::MatrixXd similar =
      sqrt_pi.cwiseInverse().asDiagonal() * a * sqrt_pi.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(similar);
  return svd.singularValues()(0);
}

double sigma_w(const MixingMatrix& m) {
  const double value = pi_matrix_norm(m.w - m.w_limit, m.pi);
  if (value >= 1.0)
    throw std::runtime_error(
        "sigma_w: contraction factor " + std::to_string(value) +
        " is not below 1; graph assumptions violated or spectral "
        "computation failed");
  return value;
}

MixingMatrix build_mixing(const DiGraph& g) {
  if (!is_strongly_connected(g))
    throw std::invalid_argument(
        "build_mixing: graph must be strongly connected (some ordered "
        "vertex pair has no directed path)");
  const int n = g.size();
  MixingMatrix m;
  m.w = Eigen::MatrixXd::Zero(n, n);
  const auto& degree = g.out_degrees();
  for (int i = 0; i < n; ++i)
    for (int j : g.in_neighbors()[i]) m.w(i, j) = 1.0 / degree[j];
  m.pi = perron_vector(m.w);
  m.w_limit = m.pi * Eigen::RowVectorXd::Ones(n);
  m.sigma_w = sigma_w(m);
  return m;
}

}  // namespace gradpush
