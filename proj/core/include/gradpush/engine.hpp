#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gradpush/costs.hpp"
#include "gradpush/mixing.hpp"

namespace gradpush {

// One iterate of the push-sum gradient recursion. Block vectors stack the
// n agent states, d entries per agent: w = col(w_1, ..., w_n).
//
// Invariants along any trajectory: sum_i y_i = n (columns of the mixing
// matrix sum to 1 and y starts at the all-ones vector), y_i > 0 (each
// round keeps at least the self-loop share of the previous weight), and
// z_i = w_i / y_i.
struct GpState {
  long t = 0;
  Eigen::VectorXd w;  // mixed state, n*d
  Eigen::VectorXd y;  // push-sum weights, n
  Eigen::VectorXd z;  // debiased state w_i / y_i, n*d
  Eigen::VectorXd x;  // post-gradient state, n*d
};

// Thrown when an iterate stops being finite. Carries the iteration index
// and the first offending agent.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long t, int agent);
  long t() const { return t_; }
  int agent() const { return agent_; }

 private:
  long t_ = 0;
  int agent_ = 0;
};

// t = 0, x = w = z = x0, y = all-ones. x0 stacks n blocks of size d.
GpState init_state(const Eigen::VectorXd& x0, int n, int d);

// One synchronous round, in fixed order: mix x into w, advance the
// weights, debias, then take the local gradient step
//
//   w+ = (W (x) I_d) x,  y+ = W y,  z+_i = w+_i / y+_i,
//   x+ = w+ - alpha * col(grad f_1(z+_1), ..., grad f_n(z+_n)).
//
// Exactly one gradient evaluation per agent. Throws DivergenceError when
// a non-finite entry appears.
GpState step(const GpState& s, const MixingMatrix& mix,
             const CostEnsemble& ens, double alpha);

// Per-iteration diagnostics, one row per t = 0..iterations.
struct RunRecord {
  std::vector<long> t;
  std::vector<double> dist_to_opt;    // A: |mean_i w_i(t) - w_*|
  std::vector<double> consensus_pi;   // B: pi-weighted norm of w - n pi (x) wbar
  std::vector<double> delta_running;  // max over s <= t of max_i 1/y_i(s)
  std::vector<double> consensus_z;    // max_i |z_i(t) - mean_i z_i(t)|
  std::vector<double> grad_norm;      // norm of the stacked gradient at z(t)
  std::vector<double> sum_sq_err;     // sum_i |z_i(t) - w_*|^2

  // Set when the run stopped early on a non-finite iterate; the rows up to
  // the failure are still present.
  bool diverged = false;
  long fail_t = -1;
  int fail_agent = -1;

  std::size_t rows() const { return t.size(); }

  // CSV with header t,A,B,delta,consensus_z,grad_norm,sum_sq_err and
  // shortest round-trip decimal values, one row per iteration.
  void write_csv(std::ostream& out) const;
  static RunRecord read_csv(std::istream& in);
};

// Applies step() iters times from x0 and records diagnostics after each
// round (plus the initial row). A diverging step stops the run early and is
// reported in the record rather than thrown, so the prefix stays available.
RunRecord run(const MixingMatrix& mix, const CostEnsemble& ens, double alpha,
              long iters, const Eigen::VectorXd& x0);

}  // namespace gradpush
