#pragma once

#include <Eigen/Dense>

#include "gradpush/digraph.hpp"

namespace gradpush {

// Column-stochastic mixing matrix of a digraph together with the spectral
// objects the convergence analysis needs:
//
//   w        entry (i, j) is 1/out_degree(j) when the arc (j, i) exists,
//            0 otherwise; every column sums to 1
//   pi       positive right eigenvector of w for eigenvalue 1, sum 1
//   w_limit  pi * 1^T, the limit of w^t
//   sigma_w  operator norm of w - w_limit in the pi-weighted norm; < 1
//            for strongly connected graphs with self-loops, and the
//            geometric rate at which powers of w approach w_limit
//
// Immutable after build_mixing; shareable across threads.
struct MixingMatrix {
  Eigen::MatrixXd w;
  Eigen::VectorXd pi;
  Eigen::MatrixXd w_limit;
  double sigma_w = 0.0;

  int size() const { return static_cast<int>(w.rows()); }
  double pi_min() const { return pi.minCoeff(); }
  double pi_max() const { return pi.maxCoeff(); }
};

// Builds all fields from the graph. Throws std::invalid_argument when the
// graph is not strongly connected (a self-loop violation is impossible for
// a constructed DiGraph) and std::runtime_error if the spectral
// computations fail to certify sigma_w < 1.
MixingMatrix build_mixing(const DiGraph& g);

// Power iteration for the eigenvalue-1 right eigenvector of a
// column-stochastic matrix, started from the uniform vector. Every iterate
// keeps coordinate sum 1 because 1^T w = 1^T, so the result needs no
// rescaling. Returns pi with positive entries once the max-norm residual
// |w pi - pi| drops below tol. Throws std::runtime_error carrying the last
// residual if max_iters rounds are not enough.
Eigen::VectorXd perron_vector(const Eigen::MatrixXd& w, double tol = 1e-13,
                              long max_iters = 100000);

// Weighted norm of a stacked block vector: x splits into pi.size() equal
// blocks and the result is sqrt(sum_j |x_j|^2 / pi_j). Plain vectors are
// the block-size-1 case. Throws std::invalid_argument when x.size() is not
// a multiple of pi.size().
double pi_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& pi);

// Weighted operator norm: the largest singular value of
// diag(sqrt(pi))^-1 * a * diag(sqrt(pi)). This equals the operator norm of
// a acting blockwise on stacked vectors under pi_norm, for every block
// size, so no block-dimensional computation is ever needed.
double pi_matrix_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& pi);

// Contraction factor pi_matrix_norm(w - w_limit, pi), recomputed from the
// members. Throws std::runtime_error if the value reaches 1, which signals
// a graph assumption violation or a numerical failure upstream.
double sigma_w(const MixingMatrix& m);

}  // namespace gradpush
