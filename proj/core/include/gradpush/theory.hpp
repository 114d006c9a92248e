#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gradpush/costs.hpp"
#include "gradpush/engine.hpp"
#include "gradpush/mixing.hpp"

namespace gradpush {

// Constants of the convergence analysis for one (graph, ensemble, alpha)
// triple. L is the largest per-agent gradient Lipschitz constant, beta the
// strong convexity of the total objective, sigma the mixing contraction
// factor, pi the Perron vector, nu = |1_n - n pi|_pi and delta the uniform
// bound on the inverse push-sum weights max_i 1/y_i(t).
struct TheoryConstants {
  double alpha = 0.0;
  double delta = 1.0;

  double gamma = 0.0;  // beta L / (beta + L)
  double rho = 0.0;    // sigma (1 + alpha L delta)
  double d1 = 0.0;     // delta nu + sqrt(sum_j 1/pi_j)
  double d2 = 0.0;     // L delta nu |w_*| + |gradF(1 (x) w_*)|_pi
  double b = 0.0;      // n gamma / (4 L delta)
  long t0 = 0;         // first t with (L delta / n) nu sigma^t <= gamma / 2

  double alpha_max_smooth = 0.0;  // 2 / (L + beta), non-strict bound
  double alpha_max_gate = 0.0;    // strict network bound; +inf when sigma = 0

  double norm_1n_minus_npi = 0.0;    // nu
  double sqrt_sum_inv_pi = 0.0;      // sqrt(sum_j 1/pi_j)
  double grad_at_opt_pi_norm = 0.0;  // |gradF(1 (x) w_*)|_{pi blockwise}

  // Context carried for the evaluators.
  int n = 0;
  double sigma_w = 0.0;
  double smoothness = 0.0;        // L
  double strong_convexity = 0.0;  // beta
  double wstar_norm = 0.0;

  // Time-varying versions of d1/d2 (nu is damped by sigma^t); the frozen
  // constants above are their t = 0 values.
  double d1_at(long t) const;
  double d2_at(long t) const;

  // L d1 r + d2, the forcing scale of the consensus recursion once the
  // distance to the optimizer is bounded by r.
  double r_bar(double r) const;

  // Uniform trajectory bound: the max of a_t0, b_t0 / b, 2 |w_*| and the
  // stepsize-gate tail term. Throws std::runtime_error directing the
  // caller to stepsize_gate when the tail denominator is nonpositive,
  // i.e. when alpha fails the strict network condition.
  double r_bound(double a_t0, double b_t0) const;
};

// Largest observed inverse push-sum weight: max over the horizon of
// max_i 1/y_i(t) for y(0) = all-ones, floored by the limit value
// max_i 1/(n pi_i). The weight iteration is gradient-free, so this is exact
// once the horizon exceeds the mixing time; iteration stops early when y
// is within machine precision of n pi.
double empirical_delta(const MixingMatrix& mix, long horizon = 100000);

// Requires delta >= max_i 1/(n pi_i) and alpha > 0 (std::invalid_argument
// otherwise). All fields are populated; evaluating r_bound may still throw
// for an inadmissible alpha.
TheoryConstants compute_constants(const MixingMatrix& mix,
                                  const CostEnsemble& ens, double alpha,
                                  double delta);

struct GateResult {
  bool admissible = false;
  std::string reason;  // names the violated condition and its threshold
};

// Admissible iff alpha <= 2/(L+beta) and alpha is strictly below the
// network bound b(1-sigma) / (L sigma (delta b + delta nu + sqrt(sum 1/pi))).
// The second condition is vacuous when sigma = 0.
GateResult stepsize_gate(const TheoryConstants& c, double alpha);

// Consensus envelope: rho^t b0 + alpha sigma r_bar(r) / (1 - rho).
// Requires rho < 1 (std::domain_error otherwise); r must bound the
// distance-to-optimizer column of the run being compared.
double envelope_b(const TheoryConstants& c, double b0, double r, long t);

// Distance envelope, four terms:
//   (1-gamma alpha)^t a0
//   + (alpha L delta / n) b0 t max{1-gamma alpha, rho}^(t-1)
//   + (alpha L delta / n) nu (|w_*| + r) t max{1-gamma alpha, sigma}^(t-1)
//   + alpha L delta sigma r_bar(r) / (n gamma (1 - rho)).
// Requires rho < 1 and both decay bases < 1 (std::domain_error otherwise).
double envelope_a(const TheoryConstants& c, double a0, double b0, double r,
                  long t);

// Closed-form tails for the two scalar comparison recursions
//   Y_{t+1} <= (1 - a) Y_t + c        ->  (1-a)^t y0 + c / a
//   Y_{t+1} <= (1 - a) Y_t + c q^t    ->  (1-a)^t y0 + c t max{1-a, q}^(t-1)
// Requires a in (0,1), q in (0,1), c > 0, y0 >= 0, t >= 0.
struct ScalarRecursionBounds {
  double constant_forcing = 0.0;
  double geometric_forcing = 0.0;
};
ScalarRecursionBounds scalar_recursion_bounds(double y0, double a, double c,
                                              double q, long t);

struct Violation {
  std::string family;
  long t = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct MonitorReport {
  struct Family {
    std::string id;
    long checked = 0;
    long violations = 0;
    // Smallest slack rhs - lhs seen (lhs - rhs for the coercivity family,
    // whose inequality points the other way). Negative means violated.
    double worst_margin = 0.0;
  };
  std::vector<Family> families;
  std::vector<Violation> violations;
  bool clean() const { return violations.empty(); }
};

// Replays the trajectory from (mix, ens, alpha, x0), checks the replay
// against the record, and evaluates every proved per-step inequality with
// measured quantities on both sides (slack 1e-9 (1 + rhs)):
//
//   avg-distance-recursion      one-step bound on |wbar - w_*|, tracked
//                               from the second round on (the first round
//                               only mixes the gradient-free initial state)
//   consensus-recursion-varying one-step bound on the pi-consensus error,
//                               time-varying forcing constants
//   consensus-recursion-frozen  same with the t = 0 constants
//   z-consensus-bound           |z - 1 (x) wbar|_pi against delta, the
//                               consensus error and the weight decay
//   push-sum-weight-decay       |y(t) - n pi|_pi <= sigma^t |1 - n pi|_pi
//   mixing-tail-consensus       plain-norm consensus error against the
//                               measured power convergence of the mixing
//                               matrix and the largest observed gradient
//   coercivity                  strong-convexity/smoothness inner-product
//                               bound between wbar(t) and w_*
//
// Throws std::invalid_argument when the record does not match the replay
// or the constants were built with a smaller delta than the run exhibits.
MonitorReport monitor_inequalities(const RunRecord& record,
                                   const TheoryConstants& c,
                                   const MixingMatrix& mix,
                                   const CostEnsemble& ens, double alpha,
                                   const Eigen::VectorXd& x0);

struct CertificateReport {
  bool gate_admissible = false;
  bool certified = false;
  double r = 0.0;
  double b = 0.0;
  long t0 = 0;
  // min over t >= t0 of r - a_t and b r - b_t; negative means violated.
  double worst_margin_a = 0.0;
  double worst_margin_b = 0.0;
  long violations = 0;
  std::string note;
};

// Verifies a_t <= R and b_t <= b R for all recorded t >= t0, with R built
// from the recorded values at t0. Refuses to certify (without throwing)
// when the stepsize gate rejects alpha. Requires record.rows() > t0.
CertificateReport check_boundedness_certificate(const RunRecord& record,
                                                const TheoryConstants& c);

}  // namespace gradpush
