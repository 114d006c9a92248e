#include "gradpush/costs.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "gradpush/rng.hpp"
#include "text_util.hpp"

namespace gradpush {

namespace {

void finalize(CostEnsemble& ens) {
  const CostConstants c = constants(ens);
  ens.local_smoothness = c.local;
  ens.smoothness = c.max_local;
  ens.strong_convexity = c.strong_convexity;
  if (ens.kind == CostKind::quadratic) {
    ens.any_local_nonconvex = false;
    for (int j = 0; j < ens.n; ++j) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ens.data_a[j]);
      if (es.eigenvalues().minCoeff() < 0.0) ens.any_local_nonconvex = true;
    }
  }
}

// Minimizer of the total objective. For least squares this solves the
// normal equations of the stacked system; for quadratics it solves
// (sum_j Q_j) x = -sum_j q_j.
void solve_minimizer(CostEnsemble& ens) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(ens.d, ens.d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ens.d);
  for (int j = 0; j < ens.n; ++j) {
    if (ens.kind == CostKind::least_squares) {
      h += ens.data_a[j].transpose() * ens.data_a[j];
      rhs += ens.data_a[j].transpose() * ens.data_b[j];
    } else {
      h += ens.data_a[j];
      rhs -= ens.data_b[j];
    }
  }
  ens.minimizer = h.ldlt().solve(rhs);
}

bool gram_singular(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo <= 1e-12 * std::max(1.0, hi);
}

void check_shapes(const CostEnsemble& ens) {
  if (ens.n < 1 || ens.d < 1)
    throw std::invalid_argument("cost ensemble: n and d must be >= 1");
  if (static_cast<int>(ens.data_a.size()) != ens.n ||
      static_cast<int>(ens.data_b.size()) != ens.n)
    throw std::invalid_argument("cost ensemble: need one matrix and one "
                                "vector per agent");
  for (int j = 0; j < ens.n; ++j) {
    const auto& a = ens.data_a[j];
    const auto& b = ens.data_b[j];
    if (ens.kind == CostKind::least_squares) {
      if (a.rows() != ens.m || a.cols() != ens.d || b.size() != ens.m)
        throw std::invalid_argument("cost ensemble: agent " +
                                    std::to_string(j) + " has wrong shape");
    } else {
      if (a.rows() != ens.d || a.cols() != ens.d || b.size() != ens.d)
        throw std::invalid_argument("cost ensemble: agent " +
                                    std::to_string(j) + " has wrong shape");
      if ((a - a.transpose()).cwiseAbs().maxCoeff() >
          1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("cost ensemble: agent " +
                                    std::to_string(j) +
                                    " matrix is not symmetric");
    }
  }
}

}  // namespace

Eigen::VectorXd CostEnsemble::grad(int agent, const Eigen::VectorXd& x) const {
  if (agent < 0 || agent >= n)
    throw std::invalid_argument("grad: agent " + std::to_string(agent) +
                                " out of range");
  if (x.size() != d || !x.allFinite())
    throw std::invalid_argument("grad: input must be a finite vector of "
                                "dimension " + std::to_string(d));
  if (kind == CostKind::least_squares)
    return data_a[agent].transpose() * (data_a[agent] * x - data_b[agent]);
  return data_a[agent] * x + data_b[agent];
}

Eigen::MatrixXd CostEnsemble::hessian(int agent) const {
  if (agent < 0 || agent >= n)
    throw std::invalid_argument("hessian: agent out of range");
  if (kind == CostKind::least_squares)
    return data_a[agent].transpose() * data_a[agent];
  return data_a[agent];
}

Eigen::MatrixXd CostEnsemble::mean_hessian() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < n; ++j) h += hessian(j);
  return h / static_cast<double>(n);
}

Eigen::VectorXd CostEnsemble::total_grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < n; ++j) g += grad(j, x);
  return g / static_cast<double>(n);
}

CostConstants constants(const CostEnsemble& ens) {
  CostConstants out;
  out.local.reserve(ens.n);
  for (int j = 0; j < ens.n; ++j) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ens.hessian(j));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    out.local.push_back(std::max(std::abs(lo), std::abs(hi)));
    out.max_local = std::max(out.max_local, out.local.back());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ens.mean_hessian());
  out.strong_convexity = es.eigenvalues().minCoeff();
  return out;
}

CostEnsemble least_squares_ensemble(int n, int d, int m, std::uint64_t seed) {
  if (n < 1 || d < 1 || m < 1)
    throw std::invalid_argument("least_squares_ensemble: n, d, m must be >= 1");
  for (int attempt = 0; attempt < 100; ++attempt) {
    CostEnsemble ens;
    ens.kind = CostKind::least_squares;
    ens.n = n;
    ens.d = d;
    ens.m = m;
    ens.seed = seed + static_cast<std::uint64_t>(attempt);
    DrawStream draws(ens.seed);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < n; ++j) {
      Eigen::MatrixXd a(m, d);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = draws.normal();
      Eigen::VectorXd b(m);
      for (int r = 0; r < m; ++r) b[r] = draws.normal();
      gram += a.transpose() * a;
      ens.data_a.push_back(std::move(a));
      ens.data_b.push_back(std::move(b));
    }
    if (gram_singular(gram)) continue;
    solve_minimizer(ens);
    finalize(ens);
    return ens;
  }
  throw std::runtime_error(
      "least_squares_ensemble: stacked Gram matrix stayed singular after "
      "100 resamples (need n*m >= d for a unique minimizer)");
}

CostEnsemble quadratic_ensemble(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw std::invalid_argument("quadratic_ensemble: n and d must be >= 1");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    CostEnsemble ens;
    ens.kind = CostKind::quadratic;
    ens.n = n;
    ens.d = d;
    ens.m = 0;
    ens.seed = seed + static_cast<std::uint64_t>(attempt);
    DrawStream draws(ens.seed);
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < n; ++j) {
      // Free entries of the symmetric perturbation: row-major over the
      // upper triangle including the diagonal.
      Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d);
      for (int r = 0; r < d; ++r) {
        for (int c = r; c < d; ++c) {
          const double v = draws.normal();
          q(r, c) += v;
          if (c != r) q(c, r) += v;
        }
      }
      Eigen::VectorXd lin(d);
      for (int r = 0; r < d; ++r) lin[r] = draws.normal();
      total += q;
      ens.data_a.push_back(std::move(q));
      ens.data_b.push_back(std::move(lin));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(total);
    if (es.eigenvalues().minCoeff() <= 0.0) continue;
    solve_minimizer(ens);
    finalize(ens);
    return ens;
  }
  throw std::runtime_error(
      "quadratic_ensemble: total objective stayed nonconvex after 1000 "
      "resamples");
}

CostEnsemble least_squares_from_data(std::vector<Eigen::MatrixXd> a,
                                     std::vector<Eigen::VectorXd> b) {
  CostEnsemble ens;
  ens.kind = CostKind::least_squares;
  ens.n = static_cast<int>(a.size());
  if (ens.n < 1 || a.empty())
    throw std::invalid_argument("least_squares_from_data: no agents");
  ens.m = static_cast<int>(a[0].rows());
  ens.d = static_cast<int>(a[0].cols());
  ens.data_a = std::move(a);
  ens.data_b = std::move(b);
  check_shapes(ens);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(ens.d, ens.d);
  for (const auto& aj : ens.data_a) gram += aj.transpose() * aj;
  if (gram_singular(gram))
    throw std::invalid_argument(
        "least_squares_from_data: total objective has no unique minimizer");
  solve_minimizer(ens);
  finalize(ens);
  return ens;
}

CostEnsemble quadratic_from_data(std::vector<Eigen::MatrixXd> q,
                                 std::vector<Eigen::VectorXd> lin) {
  CostEnsemble ens;
  ens.kind = CostKind::quadratic;
  ens.n = static_cast<int>(q.size());
  if (ens.n < 1 || q.empty())
    throw std::invalid_argument("quadratic_from_data: no agents");
  ens.d = static_cast<int>(q[0].rows());
  ens.m = 0;
  ens.data_a = std::move(q);
  ens.data_b = std::move(lin);
  check_shapes(ens);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(ens.d, ens.d);
  for (const auto& qj : ens.data_a) total += qj;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(total);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument(
        "quadratic_from_data: total objective is not strongly convex");
  solve_minimizer(ens);
  finalize(ens);
  return ens;
}

namespace {

void write_matrix_line(std::ostream& out, const std::string& name, int index,
                       const Eigen::MatrixXd& mat) {
  out << name << '[' << index << "]=";
  for (Eigen::Index r = 0; r < mat.rows(); ++r)
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      if (r != 0 || c != 0) out << ' ';
      out << detail::format_double(mat(r, c));
    }
  out << '\n';
}

std::vector<double> parse_number_list(std::string_view s, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos >= s.size()) break;
    std::size_t end = pos;
    while (end < s.size() && s[end] != ' ') ++end;
    out.push_back(detail::parse_double(s.substr(pos, end - pos), what));
    pos = end;
  }
  return out;
}

}  // namespace

void write_ensemble(const CostEnsemble& ens, std::ostream& out) {
  out << "kind="
      << (ens.kind == CostKind::least_squares ? "least_squares" : "quadratic")
      << '\n';
  out << "n=" << ens.n << '\n';
  out << "d=" << ens.d << '\n';
  if (ens.kind == CostKind::least_squares) out << "m=" << ens.m << '\n';
  out << "seed=" << ens.seed << '\n';
  const char* mat_name = ens.kind == CostKind::least_squares ? "A" : "Q";
  const char* vec_name = ens.kind == CostKind::least_squares ? "b" : "q";
  for (int j = 0; j < ens.n; ++j) {
    write_matrix_line(out, mat_name, j, ens.data_a[j]);
    write_matrix_line(out, vec_name, j, ens.data_b[j]);
  }
}

CostEnsemble read_ensemble(std::istream& in) {
  std::string line;
  std::string kind_str;
  long n = -1, d = -1, m = -1;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> mats, vecs;
  while (std::getline(in, line)) {
    std::string_view key, value;
    if (!detail::split_key_value(line, &key, &value)) continue;
    if (key == "kind") {
      kind_str = std::string(value);
    } else if (key == "n") {
      n = detail::parse_long(value, "ensemble n");
    } else if (key == "d") {
      d = detail::parse_long(value, "ensemble d");
    } else if (key == "m") {
      m = detail::parse_long(value, "ensemble m");
    } else if (key == "seed") {
      seed = detail::parse_u64(value, "ensemble seed");
    } else if (key.starts_with("A[") || key.starts_with("Q[")) {
      mats.push_back(parse_number_list(value, "ensemble matrix"));
    } else if (key.starts_with("b[") || key.starts_with("q[")) {
      vecs.push_back(parse_number_list(value, "ensemble vector"));
    } else {
      throw std::invalid_argument("ensemble: unknown key '" +
                                  std::string(key) + "'");
    }
  }
  CostKind kind;
  if (kind_str == "least_squares") {
    kind = CostKind::least_squares;
  } else if (kind_str == "quadratic") {
    kind = CostKind::quadratic;
  } else {
    throw std::invalid_argument("ensemble: bad kind '" + kind_str + "'");
  }
  if (n < 1 || d < 1)
    throw std::invalid_argument("ensemble: missing or bad n/d");
  if (kind == CostKind::least_squares && m < 1)
    throw std::invalid_argument("ensemble: least_squares needs m");
  if (static_cast<long>(mats.size()) != n ||
      static_cast<long>(vecs.size()) != n)
    throw std::invalid_argument("ensemble: expected one matrix and one "
                                "vector per agent");
  const long rows = kind == CostKind::least_squares ? m : d;
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::VectorXd> b;
  for (long j = 0; j < n; ++j) {
    if (static_cast<long>(mats[j].size()) != rows * d ||
        static_cast<long>(vecs[j].size()) != rows)
      throw std::invalid_argument("ensemble: agent " + std::to_string(j) +
                                  " has wrong entry count");
    Eigen::MatrixXd aj(rows, d);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < d; ++c) aj(r, c) = mats[j][r * d + c];
    Eigen::VectorXd bj(rows);
    for (long r = 0; r < rows; ++r) bj[r] = vecs[j][r];
    a.push_back(std::move(aj));
    b.push_back(std::move(bj));
  }
  CostEnsemble ens = kind == CostKind::least_squares
                         ? least_squares_from_data(std::move(a), std::move(b))
                         : quadratic_from_data(std::move(a), std::move(b));
  ens.seed = seed;
  return ens;
}

}  // namespace gradpush
