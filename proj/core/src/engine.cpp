#include "gradpush/engine.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "text_util.hpp"

namespace gradpush {

DivergenceError::DivergenceError(long t, int agent)
    : std::runtime_error("engine: non-finite state at iteration " +
                         std::to_string(t) + ", agent " +
                         std::to_string(agent)),
      t_(t),
      agent_(agent) {}

GpState init_state(const Eigen::VectorXd& x0, int n, int d) {
  if (n < 1 || d < 1 || x0.size() != static_cast<Eigen::Index>(n) * d)
    throw std::invalid_argument("init_state: x0 must stack n blocks of size d");
  GpState s;
  s.t = 0;
  s.x = x0;
  s.w = x0;
  s.z = x0;
  s.y = Eigen::VectorXd::Ones(n);
  return s;
}

namespace {

// First agent whose block contains a non-finite entry, or -1.
int first_bad_agent(const Eigen::VectorXd& v, int n, int d) {
  for (int i = 0; i < n; ++i)
    if (!v.segment(static_cast<Eigen::Index>(i) * d, d).allFinite()) return i;
  return -1;
}

GpState step_impl(const GpState& s, const MixingMatrix& mix,
                  const CostEnsemble& ens, double alpha,
                  Eigen::VectorXd* grad_out) {
  const int n = mix.size();
  const int d = ens.d;
  GpState next;
  next.t = s.t + 1;

  // The stacked vector viewed as a d x n matrix has agent blocks as
  // columns, so the blockwise mixing product is X * W^T.
  Eigen::Map<const Eigen::MatrixXd> x_cols(s.x.data(), d, n);
  next.w.resize(s.x.size());
  Eigen::Map<Eigen::MatrixXd>(next.w.data(), d, n) =
      x_cols * mix.w.transpose();
  next.y = mix.w * s.y;

  if (int bad = first_bad_agent(next.w, n, d); bad >= 0)
    throw DivergenceError(next.t, bad);
  if (!next.y.allFinite() || next.y.minCoeff() <= 0.0)
    throw DivergenceError(next.t, 0);

  next.z.resize(next.w.size());
  for (int i = 0; i < n; ++i)
    next.z.segment(static_cast<Eigen::Index>(i) * d, d) =
        next.w.segment(static_cast<Eigen::Index>(i) * d, d) / next.y[i];
  if (int bad = first_bad_agent(next.z, n, d); bad >= 0)
    throw DivergenceError(next.t, bad);

  Eigen::VectorXd grads(next.w.size());
  for (int i = 0; i < n; ++i)
    grads.segment(static_cast<Eigen::Index>(i) * d, d) =
        ens.grad(i, next.z.segment(static_cast<Eigen::Index>(i) * d, d));
  next.x = next.w - alpha * grads;
  if (int bad = first_bad_agent(next.x, n, d); bad >= 0)
    throw DivergenceError(next.t, bad);

  if (grad_out) *grad_out = std::move(grads);
  return next;
}

Eigen::VectorXd block_mean(const Eigen::VectorXd& v, int n, int d) {
  Eigen::Map<const Eigen::MatrixXd> cols(v.data(), d, n);
  return cols.rowwise().mean();
}

struct RowScratch {
  const MixingMatrix& mix;
  const CostEnsemble& ens;
  double running_delta = 1.0;

  void append(RunRecord& rec, const GpState& s, const Eigen::VectorXd& grads) {
    const int n = mix.size();
    const int d = ens.d;
    const Eigen::VectorXd wbar = block_mean(s.w, n, d);
    const Eigen::VectorXd zbar = block_mean(s.z, n, d);

    rec.t.push_back(s.t);
    rec.dist_to_opt.push_back((wbar - ens.minimizer).norm());

    double b_sq = 0.0;
    double worst_z = 0.0;
    double sq_err = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto w_i = s.w.segment(static_cast<Eigen::Index>(i) * d, d);
      const auto z_i = s.z.segment(static_cast<Eigen::Index>(i) * d, d);
      b_sq += (w_i - n * mix.pi[i] * wbar).squaredNorm() / mix.pi[i];
      worst_z = std::max(worst_z, (z_i - zbar).norm());
      sq_err += (z_i - ens.minimizer).squaredNorm();
    }
    rec.consensus_pi.push_back(std::sqrt(b_sq));

    running_delta = std::max(running_delta, 1.0 / s.y.minCoeff());
    rec.delta_running.push_back(running_delta);
    rec.consensus_z.push_back(worst_z);
    rec.grad_norm.push_back(grads.norm());
    rec.sum_sq_err.push_back(sq_err);
  }
};

}  // namespace

GpState step(const GpState& s, const MixingMatrix& mix,
             const CostEnsemble& ens, double alpha) {
  return step_impl(s, mix, ens, alpha, nullptr);
}

RunRecord run(const MixingMatrix& mix, const CostEnsemble& ens, double alpha,
              long iters, const Eigen::VectorXd& x0) {
  if (iters < 0) throw std::invalid_argument("run: iters must be >= 0");
  const int n = mix.size();
  const int d = ens.d;
  GpState state = init_state(x0, n, d);

  RunRecord rec;
  RowScratch scratch{mix, ens};

  // The initial row needs one extra gradient evaluation; every later row
  // reuses the gradients computed inside its step.
  Eigen::VectorXd grads(x0.size());
  for (int i = 0; i < n; ++i)
    grads.segment(static_cast<Eigen::Index>(i) * d, d) =
        ens.grad(i, state.z.segment(static_cast<Eigen::Index>(i) * d, d));
  scratch.append(rec, state, grads);

  for (long it = 0; it < iters; ++it) {
    try {
      state = step_impl(state, mix, ens, alpha, &grads);
    } catch (const DivergenceError& e) {
      rec.diverged = true;
      rec.fail_t = e.t();
      rec.fail_agent = e.agent();
      break;
    }
    scratch.append(rec, state, grads);
  }
  return rec;
}

void RunRecord::write_csv(std::ostream& out) const {
  out << "t,A,B,delta,consensus_z,grad_norm,sum_sq_err\n";
  for (std::size_t i = 0; i < rows(); ++i) {
    out << t[i] << ',' << detail::format_double(dist_to_opt[i]) << ','
        << detail::format_double(consensus_pi[i]) << ','
        << detail::format_double(delta_running[i]) << ','
        << detail::format_double(consensus_z[i]) << ','
        << detail::format_double(grad_norm[i]) << ','
        << detail::format_double(sum_sq_err[i]) << '\n';
  }
}

RunRecord RunRecord::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("run csv: empty input");
  if (detail::trim(line) != "t,A,B,delta,consensus_z,grad_norm,sum_sq_err")
    throw std::invalid_argument("run csv: unexpected header '" + line + "'");
  RunRecord rec;
  while (std::getline(in, line)) {
    const std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = sv.find(',', pos);
      fields.push_back(sv.substr(pos, comma == std::string_view::npos
                                          ? std::string_view::npos
                                          : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 7)
      throw std::invalid_argument("run csv: expected 7 fields, got '" +
                                  std::string(sv) + "'");
    rec.t.push_back(detail::parse_long(fields[0], "run csv t"));
    rec.dist_to_opt.push_back(detail::parse_double(fields[1], "run csv A"));
    rec.consensus_pi.push_back(detail::parse_double(fields[2], "run csv B"));
    rec.delta_running.push_back(
        detail::parse_double(fields[3], "run csv delta"));
    rec.consensus_z.push_back(
        detail::parse_double(fields[4], "run csv consensus_z"));
    rec.grad_norm.push_back(
        detail::parse_double(fields[5], "run csv grad_norm"));
    rec.sum_sq_err.push_back(
        detail::parse_double(fields[6], "run csv sum_sq_err"));
  }
  if (rec.rows() == 0) throw std::invalid_argument("run csv: no data rows");
  return rec;
}

}  // namespace gradpush
