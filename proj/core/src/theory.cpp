#include "gradpush/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "text_util.hpp"

namespace gradpush {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double slack(double rhs) { return 1e-9 * (1.0 + std::abs(rhs)); }

Eigen::VectorXd block_mean(const Eigen::VectorXd& v, int n, int d) {
  Eigen::Map<const Eigen::MatrixXd> cols(v.data(), d, n);
  return cols.rowwise().mean();
}

}  // namespace

double TheoryConstants::d1_at(long t) const {
  return delta * norm_1n_minus_npi * std::pow(sigma_w, static_cast<double>(t)) +
         sqrt_sum_inv_pi;
}

double TheoryConstants::d2_at(long t) const {
  return smoothness * delta * norm_1n_minus_npi *
             std::pow(sigma_w, static_cast<double>(t)) * wstar_norm +
         grad_at_opt_pi_norm;
}

double TheoryConstants::r_bar(double r) const {
  return smoothness * d1 * r + d2;
}

double TheoryConstants::r_bound(double a_t0, double b_t0) const {
  const double denom =
      b * (1.0 - sigma_w) -
      alpha * smoothness * sigma_w *
          (delta * b + delta * norm_1n_minus_npi + sqrt_sum_inv_pi);
  if (!(denom > 0.0))
    throw std::runtime_error(
        "r_bound: tail denominator is nonpositive; the stepsize fails the "
        "strict network condition (see stepsize_gate)");
  const double tail = sigma_w * alpha * d2 / denom;
  return std::max({a_t0, b_t0 / b, 2.0 * wstar_norm, tail});
}

double empirical_delta(const MixingMatrix& mix, long horizon) {
  const int n = mix.size();
  Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd target = static_cast<double>(n) * mix.pi;
  double best = 1.0;
  for (long t = 0; t < horizon; ++t) {
    y = mix.w * y;
    best = std::max(best, 1.0 / y.minCoeff());
    if ((y - target).lpNorm<Eigen::Infinity>() <= 1e-15 * n) break;
  }
  return std::max(best, 1.0 / target.minCoeff());
}

TheoryConstants compute_constants(const MixingMatrix& mix,
                                  const CostEnsemble& ens, double alpha,
                                  double delta) {
  // alpha = 0 is allowed so pure push-sum runs can be monitored.
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument(
        "compute_constants: alpha must be finite and nonnegative");
  const int n = mix.size();
  const double limit_delta = 1.0 / (n * mix.pi.minCoeff());
  if (delta < limit_delta * (1.0 - 1e-12))
    throw std::invalid_argument(
        "compute_constants: delta must be at least max_i 1/(n pi_i) = " +
        detail::format_double(limit_delta));

  TheoryConstants c;
  c.alpha = alpha;
  c.delta = delta;
  c.n = n;
  c.sigma_w = mix.sigma_w;
  c.smoothness = ens.smoothness;
  c.strong_convexity = ens.strong_convexity;
  c.wstar_norm = ens.minimizer.norm();

  const double big_l = ens.smoothness;
  const double beta = ens.strong_convexity;
  c.gamma = beta * big_l / (beta + big_l);
  c.rho = c.sigma_w * (1.0 + alpha * big_l * delta);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  c.norm_1n_minus_npi = pi_norm(ones - static_cast<double>(n) * mix.pi, mix.pi);
  c.sqrt_sum_inv_pi = std::sqrt(mix.pi.cwiseInverse().sum());

  Eigen::VectorXd grad_at_opt(static_cast<Eigen::Index>(n) * ens.d);
  for (int j = 0; j < n; ++j)
    grad_at_opt.segment(static_cast<Eigen::Index>(j) * ens.d, ens.d) =
        ens.grad(j, ens.minimizer);
  c.grad_at_opt_pi_norm = pi_norm(grad_at_opt, mix.pi);

  c.d1 = delta * c.norm_1n_minus_npi + c.sqrt_sum_inv_pi;
  c.d2 = big_l * delta * c.norm_1n_minus_npi * c.wstar_norm +
         c.grad_at_opt_pi_norm;
  c.b = n * c.gamma / (4.0 * big_l * delta);

  // Smallest t with (L delta / n) nu sigma^t <= gamma / 2.
  const double lead = big_l * delta / n * c.norm_1n_minus_npi;
  if (lead <= c.gamma / 2.0) {
    c.t0 = 0;
  } else if (c.sigma_w <= 0.0) {
    c.t0 = 1;
  } else {
    const double guess =
        std::log(c.gamma / (2.0 * lead)) / std::log(c.sigma_w);
    long t = std::max(0L, static_cast<long>(std::ceil(guess)) - 2);
    while (lead * std::pow(c.sigma_w, static_cast<double>(t)) >
           c.gamma / 2.0)
      ++t;
    c.t0 = t;
  }

  c.alpha_max_smooth = 2.0 / (big_l + beta);
  c.alpha_max_gate =
      c.sigma_w > 0.0
          ? c.b * (1.0 - c.sigma_w) /
                (big_l * c.sigma_w *
                 (delta * c.b + delta * c.norm_1n_minus_npi +
                  c.sqrt_sum_inv_pi))
          : kInf;
  return c;
}

GateResult stepsize_gate(const TheoryConstants& c, double alpha) {
  if (alpha > c.alpha_max_smooth) {
    return {false, "stepsize " + detail::format_double(alpha) +
                       " exceeds the smoothness bound 2/(L+beta) = " +
                       detail::format_double(c.alpha_max_smooth)};
  }
  if (!(alpha < c.alpha_max_gate)) {
    return {false, "stepsize " + detail::format_double(alpha) +
                       " is not strictly below the network bound " +
                       detail::format_double(c.alpha_max_gate)};
  }
  return {true, "admissible"};
}

double envelope_b(const TheoryConstants& c, double b0, double r, long t) {
  if (!(c.rho < 1.0))
    throw std::domain_error("envelope_b: needs rho < 1, got rho = " +
                            detail::format_double(c.rho));
  return std::pow(c.rho, static_cast<double>(t)) * b0 +
         c.alpha * c.sigma_w * c.r_bar(r) / (1.0 - c.rho);
}

double envelope_a(const TheoryConstants& c, double a0, double b0, double r,
                  long t) {
  const double base1 = 1.0 - c.gamma * c.alpha;
  const double base2 = std::max(base1, c.rho);
  const double base3 = std::max(base1, c.sigma_w);
  if (!(c.rho < 1.0) || !(base1 < 1.0) || !(base2 < 1.0))
    throw std::domain_error("envelope_a: decay bases must be below 1");
  const double scale = c.alpha * c.smoothness * c.delta / c.n;
  double value = std::pow(base1, static_cast<double>(t)) * a0 +
                 c.alpha * c.smoothness * c.delta * c.sigma_w * c.r_bar(r) /
                     (c.n * c.gamma * (1.0 - c.rho));
  if (t > 0) {
    value += scale * b0 * static_cast<double>(t) *
             std::pow(base2, static_cast<double>(t - 1));
    value += scale * c.norm_1n_minus_npi * (c.wstar_norm + r) *
             static_cast<double>(t) *
             std::pow(base3, static_cast<double>(t - 1));
  }
  return value;
}

ScalarRecursionBounds scalar_recursion_bounds(double y0, double a, double c,
                                              double q, long t) {
  if (!(a > 0.0 && a < 1.0))
    throw std::invalid_argument("scalar_recursion_bounds: need a in (0,1)");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("scalar_recursion_bounds: need q in (0,1)");
  if (!(c > 0.0))
    throw std::invalid_argument("scalar_recursion_bounds: need c > 0");
  if (y0 < 0.0 || t < 0)
    throw std::invalid_argument("scalar_recursion_bounds: need y0, t >= 0");
  ScalarRecursionBounds out;
  const double decay = std::pow(1.0 - a, static_cast<double>(t));
  out.constant_forcing = decay * y0 + c / a;
  out.geometric_forcing =
      decay * y0 + (t > 0 ? c * static_cast<double>(t) *
                                std::pow(std::max(1.0 - a, q),
                                         static_cast<double>(t - 1))
                          : 0.0);
  return out;
}

namespace {

class FamilyTracker {
 public:
  explicit FamilyTracker(MonitorReport& report) : report_(report) {}

  // Checks lhs <= rhs + slack(rhs); for flipped = true the inequality is
  // lhs >= rhs - slack(rhs) and the margin is lhs - rhs.
  void check(const std::string& family, long t, double lhs, double rhs,
             bool flipped = false) {
    auto& fam = family_entry(family);
    ++fam.checked;
    const double margin = flipped ? lhs - rhs : rhs - lhs;
    if (fam.checked == 1 || margin < fam.worst_margin)
      fam.worst_margin = margin;
    const bool ok = flipped ? lhs >= rhs - slack(rhs)
                            : lhs <= rhs + slack(rhs);
    if (!ok) {
      ++fam.violations;
      report_.violations.push_back({family, t, lhs, rhs});
    }
  }

 private:
  MonitorReport::Family& family_entry(const std::string& id) {
    for (auto& f : report_.families)
      if (f.id == id) return f;
    report_.families.push_back({id, 0, 0, 0.0});
    return report_.families.back();
  }

  MonitorReport& report_;
};

// Largest ratio of |W^t - W_limit| (spectral norm) to sigma^t, measured
// while sigma^t stays clear of the floating-point noise floor of the
// repeated matrix products.
double measured_power_constant(const MixingMatrix& mix) {
  double best = 0.0;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(mix.size(), mix.size());
  double sig_t = 1.0;
  for (long t = 0; t <= 200 && sig_t >= 1e-12; ++t) {
    const double norm =
        Eigen::JacobiSVD<Eigen::MatrixXd>(power - mix.w_limit)
            .singularValues()(0);
    best = std::max(best, norm / sig_t);
    power = power * mix.w;
    sig_t *= mix.sigma_w;
    if (sig_t == 0.0) break;
  }
  return best;
}

void require_close(double recorded, double replayed, const char* column,
                   long t) {
  const double tol = 1e-12 * (1.0 + std::abs(replayed));
  if (std::abs(recorded - replayed) > tol)
    throw std::invalid_argument(
        std::string("monitor_inequalities: record column ") + column +
        " at t=" + std::to_string(t) + " (" +
        detail::format_double(recorded) + ") does not match a replay (" +
        detail::format_double(replayed) + "); mismatched inputs?");
}

struct StepQuantities {
  double a = 0.0;         // |wbar - w_*|
  double b = 0.0;         // pi-weighted consensus error of w
  double z_cons_pi = 0.0; // |z - 1 (x) wbar|_pi
  double y_decay = 0.0;   // |y - n pi|_pi
  double w_cons = 0.0;    // plain |w - n pi (x) wbar|
  double grad_norm = 0.0;
  double consensus_z = 0.0;
  double sum_sq_err = 0.0;
  Eigen::VectorXd wbar;
};

StepQuantities measure(const GpState& s, const MixingMatrix& mix,
                       const CostEnsemble& ens,
                       const Eigen::VectorXd& grads) {
  const int n = mix.size();
  const int d = ens.d;
  StepQuantities q;
  q.wbar = block_mean(s.w, n, d);
  const Eigen::VectorXd zbar = block_mean(s.z, n, d);
  q.a = (q.wbar - ens.minimizer).norm();
  double b_sq = 0.0, z_sq = 0.0, w_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto w_i = s.w.segment(static_cast<Eigen::Index>(i) * d, d);
    const auto z_i = s.z.segment(static_cast<Eigen::Index>(i) * d, d);
    const Eigen::VectorXd w_dev = w_i - n * mix.pi[i] * q.wbar;
    b_sq += w_dev.squaredNorm() / mix.pi[i];
    w_sq += w_dev.squaredNorm();
    z_sq += (z_i - q.wbar).squaredNorm() / mix.pi[i];
    q.consensus_z = std::max(q.consensus_z, (z_i - zbar).norm());
    q.sum_sq_err += (z_i - ens.minimizer).squaredNorm();
  }
  q.b = std::sqrt(b_sq);
  q.w_cons = std::sqrt(w_sq);
  q.z_cons_pi = std::sqrt(z_sq);
  q.y_decay = pi_norm(s.y - static_cast<double>(n) * mix.pi, mix.pi);
  q.grad_norm = grads.norm();
  return q;
}

}  // namespace

MonitorReport monitor_inequalities(const RunRecord& record,
                                   const TheoryConstants& c,
                                   const MixingMatrix& mix,
                                   const CostEnsemble& ens, double alpha,
                                   const Eigen::VectorXd& x0) {
  if (record.rows() == 0)
    throw std::invalid_argument("monitor_inequalities: empty record");
  if (std::abs(alpha - c.alpha) > 1e-15 * (1.0 + std::abs(alpha)))
    throw std::invalid_argument(
        "monitor_inequalities: constants were computed for a different "
        "stepsize");
  if (c.delta < record.delta_running.back() * (1.0 - 1e-12))
    throw std::invalid_argument(
        "monitor_inequalities: constants use a smaller delta than the run "
        "exhibits; recompute with the run's delta surrogate");

  const int n = mix.size();
  const int d = ens.d;
  const long t_max = static_cast<long>(record.rows()) - 1;
  const double sup_grad =
      *std::max_element(record.grad_norm.begin(), record.grad_norm.end());
  const double power_const = measured_power_constant(mix);
  const double zeta = mix.sigma_w;
  const double tail_gain =
      zeta < 1.0 ? alpha * power_const * zeta / (1.0 - zeta) * sup_grad : kInf;
  const double nu = c.norm_1n_minus_npi;
  const double big_l = c.smoothness;
  const double w0_norm = x0.norm();

  MonitorReport report;
  FamilyTracker track(report);

  GpState state = init_state(x0, n, d);
  Eigen::VectorXd grads(x0.size());
  for (int i = 0; i < n; ++i)
    grads.segment(static_cast<Eigen::Index>(i) * d, d) =
        ens.grad(i, state.z.segment(static_cast<Eigen::Index>(i) * d, d));
  StepQuantities cur = measure(state, mix, ens, grads);

  double running_delta = 1.0;
  double sigma_pow = 1.0;  // sigma^t
  for (long t = 0; t <= t_max; ++t) {
    running_delta = std::max(running_delta, 1.0 / state.y.minCoeff());

    // Replay consistency against the recorded columns.
    require_close(record.dist_to_opt[t], cur.a, "A", t);
    require_close(record.consensus_pi[t], cur.b, "B", t);
    require_close(record.delta_running[t], running_delta, "delta", t);
    require_close(record.consensus_z[t], cur.consensus_z, "consensus_z", t);
    require_close(record.grad_norm[t], cur.grad_norm, "grad_norm", t);
    require_close(record.sum_sq_err[t], cur.sum_sq_err, "sum_sq_err", t);

    // Pointwise families.
    track.check("z-consensus-bound", t, cur.z_cons_pi,
                c.delta * cur.b +
                    c.delta * nu * sigma_pow * (cur.a + c.wstar_norm));
    track.check("push-sum-weight-decay", t, cur.y_decay, sigma_pow * nu);
    track.check("mixing-tail-consensus", t, cur.w_cons,
                power_const * sigma_pow * w0_norm + tail_gain);
    {
      const Eigen::VectorXd gx = ens.total_grad(cur.wbar);
      const Eigen::VectorXd gy = ens.total_grad(ens.minimizer);
      const Eigen::VectorXd diff = cur.wbar - ens.minimizer;
      const double lhs = (gx - gy).dot(diff);
      const double rhs = c.gamma * diff.squaredNorm() +
                         (gx - gy).squaredNorm() /
                             (c.smoothness + c.strong_convexity);
      track.check("coercivity", t, lhs, rhs, /*flipped=*/true);
    }

    if (t == t_max) break;

    state = step(state, mix, ens, alpha);
    for (int i = 0; i < n; ++i)
      grads.segment(static_cast<Eigen::Index>(i) * d, d) =
          ens.grad(i, state.z.segment(static_cast<Eigen::Index>(i) * d, d));
    StepQuantities next = measure(state, mix, ens, grads);

    // One-step recursions from t to t+1. The distance recursion needs the
    // pre-mixing state to carry a gradient step, which the initial state
    // does not (the first round only mixes), so it is tracked from the
    // second round on. The consensus recursions only gain slack from a
    // missing gradient term and hold from t = 0.
    const double scale = alpha * big_l * c.delta / n;
    if (t >= 1) {
      track.check("avg-distance-recursion", t, next.a,
                  (1.0 - c.gamma * alpha + scale * nu * sigma_pow) * cur.a +
                      scale * cur.b + scale * nu * sigma_pow * c.wstar_norm);
    }
    const double contraction = c.sigma_w * (1.0 + alpha * big_l * c.delta);
    track.check("consensus-recursion-varying", t, next.b,
                contraction * cur.b +
                    alpha * big_l * c.sigma_w * c.d1_at(t) * cur.a +
                    alpha * c.sigma_w * c.d2_at(t));
    track.check("consensus-recursion-frozen", t, next.b,
                contraction * cur.b +
                    alpha * big_l * c.sigma_w * c.d1 * cur.a +
                    alpha * c.sigma_w * c.d2);

    cur = std::move(next);
    sigma_pow *= c.sigma_w;
  }
  return report;
}

CertificateReport check_boundedness_certificate(const RunRecord& record,
                                                const TheoryConstants& c) {
  CertificateReport rep;
  rep.b = c.b;
  rep.t0 = c.t0;
  const GateResult gate = stepsize_gate(c, c.alpha);
  rep.gate_admissible = gate.admissible;
  if (!gate.admissible) {
    rep.certified = false;
    rep.note = "refusing to certify: " + gate.reason;
    return rep;
  }
  const long t_max = static_cast<long>(record.rows()) - 1;
  if (t_max < c.t0)
    throw std::invalid_argument(
        "check_boundedness_certificate: record horizon " +
        std::to_string(t_max) + " does not reach t0 = " +
        std::to_string(c.t0));
  rep.r = c.r_bound(record.dist_to_opt[c.t0], record.consensus_pi[c.t0]);
  rep.worst_margin_a = kInf;
  rep.worst_margin_b = kInf;
  const double cap_b = c.b * rep.r;
  for (long t = c.t0; t <= t_max; ++t) {
    const double margin_a = rep.r - record.dist_to_opt[t];
    const double margin_b = cap_b - record.consensus_pi[t];
    rep.worst_margin_a = std::min(rep.worst_margin_a, margin_a);
    rep.worst_margin_b = std::min(rep.worst_margin_b, margin_b);
    if (margin_a < -slack(rep.r)) ++rep.violations;
    if (margin_b < -slack(cap_b)) ++rep.violations;
  }
  rep.certified = rep.violations == 0;
  rep.note = rep.certified ? "bounded: A_t <= R and B_t <= b R from t0 on"
                           : "bound violated on the recorded horizon";
  return rep;
}

}  // namespace gradpush
