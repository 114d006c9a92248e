#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace gradpush {

enum class CostKind { least_squares, quadratic };

// Per-agent smoothness plus the curvature of the total objective.
struct CostConstants {
  std::vector<double> local;      // L_i, spectral norm of agent i's Hessian
  double max_local = 0.0;         // L = max_i L_i
  double strong_convexity = 0.0;  // smallest eigenvalue of the mean Hessian
};

// A family of n local costs on R^d with analytic gradients and a
// closed-form minimizer of the total objective f(x) = (1/n) sum_j f_j(x).
//
//   least_squares: f_j(x) = 1/2 |A_j x - b_j|^2
//                  (data_a[j] = A_j, m x d; data_b[j] = b_j, m)
//   quadratic:     f_j(x) = 1/2 x^T Q_j x + q_j^T x, Q_j symmetric and
//                  possibly indefinite; only the total must be convex
//                  (data_a[j] = Q_j, d x d; data_b[j] = q_j, d)
//
// Agents step with gradients of the unnormalized local costs f_j. The 1/n
// prefactor on the total moves neither the minimizer nor those gradients;
// it only fixes the scale at which strong_convexity is reported.
struct CostEnsemble {
  CostKind kind = CostKind::least_squares;
  int n = 0;
  int d = 0;
  int m = 0;  // rows of A_j; 0 for the quadratic family
  // Sampling seed actually used, after any deterministic seed-increment
  // resampling of degenerate draws. 0 marks injected data.
  std::uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> data_a;
  std::vector<Eigen::VectorXd> data_b;

  std::vector<double> local_smoothness;  // L_i
  double smoothness = 0.0;               // L = max_i L_i
  double strong_convexity = 0.0;         // beta of the total objective
  Eigen::VectorXd minimizer;             // w_*
  bool any_local_nonconvex = false;      // quadratic: some Q_j indefinite

  // Analytic gradient of f_agent at x. Throws std::invalid_argument on an
  // out-of-range agent or a non-finite x.
  Eigen::VectorXd grad(int agent, const Eigen::VectorXd& x) const;

  Eigen::MatrixXd hessian(int agent) const;
  Eigen::MatrixXd mean_hessian() const;

  // Gradient of the total objective (1/n) sum_j f_j.
  Eigen::VectorXd total_grad(const Eigen::VectorXd& x) const;
};

// Samples A_j and b_j with i.i.d. standard normal entries (A_j row-major,
// then b_j, agent by agent). If sum_j A_j^T A_j is numerically singular the
// whole family is resampled with seed+1, seed+2, ...; after 100 failures a
// std::runtime_error is thrown.
CostEnsemble least_squares_ensemble(int n, int d, int m, std::uint64_t seed);

// Samples Q_j = I + C_j with C_j symmetric (free entries i.i.d. standard
// normal, row-major over the upper triangle including the diagonal) and
// q_j standard normal. While sum_j Q_j has a nonpositive eigenvalue the
// whole family is resampled with seed+1, seed+2, ...; after 1000 failures
// a std::runtime_error is thrown. Individual Q_j may be indefinite; this
// is recorded in any_local_nonconvex.
CostEnsemble quadratic_ensemble(int n, int d, std::uint64_t seed);

// Build from injected data (fixtures, deserialization); derived constants
// are recomputed. Throws std::invalid_argument on inconsistent shapes, an
// asymmetric Q_j, or a total objective without a unique minimizer.
CostEnsemble least_squares_from_data(std::vector<Eigen::MatrixXd> a,
                                     std::vector<Eigen::VectorXd> b);
CostEnsemble quadratic_from_data(std::vector<Eigen::MatrixXd> q,
                                 std::vector<Eigen::VectorXd> lin);

// Recomputes (L_i, L, beta) from the stored matrices.
CostConstants constants(const CostEnsemble& ens);

// Self-describing text format (kind, sizes, seed, then the per-agent
// matrices row-major in full decimal precision), so runs replay without
// re-sampling.
void write_ensemble(const CostEnsemble& ens, std::ostream& out);
CostEnsemble read_ensemble(std::istream& in);

}  // namespace gradpush
