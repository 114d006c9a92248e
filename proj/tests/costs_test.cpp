#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gradpush/costs.hpp"
#include "gradpush/rng.hpp"
#include "oracles.hpp"

using gradpush::CostEnsemble;
using gradpush::CostKind;

namespace {

Eigen::VectorXd random_point(int d, std::uint64_t seed) {
  gradpush::DrawStream draws(seed);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = draws.normal();
  return x;
}

// Spectral norm of a symmetric matrix by plain power iteration on h^2,
// independent of the eigensolver route used in the library.
double hessian_norm_power(const Eigen::MatrixXd& h, std::uint64_t seed) {
  Eigen::VectorXd v = random_point(static_cast<int>(h.rows()), seed);
  v.normalize();
  double prev = 0.0;
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd u = h * (h * v);
    const double lambda_sq = v.dot(u);
    if (u.norm() == 0.0) return 0.0;
    v = u.normalized();
    if (it > 0 && std::abs(lambda_sq - prev) <= 1e-14 * std::max(1.0, lambda_sq))
      return std::sqrt(lambda_sq);
    prev = lambda_sq;
  }
  return std::sqrt(prev);
}

}  // namespace

TEST_CASE("least squares ensemble optimality and constants") {
  const CostEnsemble ens = gradpush::least_squares_ensemble(10, 5, 3, 11);
  CHECK(ens.kind == CostKind::least_squares);
  CHECK(ens.seed == 11);  // no resampling expected for this shape

  // First-order optimality of the summed cost at the stored minimizer.
  Eigen::VectorXd sum_grad = Eigen::VectorXd::Zero(5);
  for (int j = 0; j < 10; ++j) sum_grad += ens.grad(j, ens.minimizer);
  CHECK(sum_grad.norm() <= 1e-8);

  // Independent solve of the stacked normal equations.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(5, 5);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(5);
  for (int j = 0; j < 10; ++j) {
    gram += ens.data_a[j].transpose() * ens.data_a[j];
    rhs += ens.data_a[j].transpose() * ens.data_b[j];
  }
  const Eigen::VectorXd expected = gram.colPivHouseholderQr().solve(rhs);
  CHECK((ens.minimizer - expected).norm() <= 1e-10);

  CHECK(ens.strong_convexity > 0.0);
  for (double li : ens.local_smoothness) CHECK(li >= 0.0);
  CHECK(ens.smoothness ==
        *std::max_element(ens.local_smoothness.begin(),
                          ens.local_smoothness.end()));
}

TEST_CASE("least squares identity fixture") {
  const CostEnsemble ens = gradpush::least_squares_from_data(
      {Eigen::MatrixXd::Identity(4, 4)}, {Eigen::VectorXd::Zero(4)});
  CHECK(ens.minimizer.norm() == 0.0);
  CHECK(ens.smoothness == doctest::Approx(1.0));
  CHECK(ens.strong_convexity == doctest::Approx(1.0));
  CHECK(ens.grad(0, Eigen::VectorXd::Ones(4)).isApprox(
      Eigen::VectorXd::Ones(4)));
}

TEST_CASE("gradient vanishes at the local normal-equations solution") {
  const CostEnsemble ens = gradpush::least_squares_ensemble(4, 3, 5, 2);
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd local =
        (ens.data_a[j].transpose() * ens.data_a[j])
            .colPivHouseholderQr()
            .solve(ens.data_a[j].transpose() * ens.data_b[j]);
    CHECK(ens.grad(j, local).norm() <= 1e-9);
  }
}

TEST_CASE("quadratic ensemble with zero perturbation") {
  const int n = 7, d = 3;
  std::vector<Eigen::MatrixXd> q(n, Eigen::MatrixXd::Identity(d, d));
  std::vector<Eigen::VectorXd> lin(n, Eigen::VectorXd::Zero(d));
  const CostEnsemble ens = gradpush::quadratic_from_data(q, lin);
  CHECK(ens.minimizer.norm() == 0.0);
  for (double li : ens.local_smoothness) CHECK(li == doctest::Approx(1.0));
  // Total objective is the mean of n unit quadratics, so curvature 1.
  CHECK(ens.strong_convexity == doctest::Approx(1.0));
  CHECK_FALSE(ens.any_local_nonconvex);

  const Eigen::VectorXd v = random_point(d, 3);
  CHECK((ens.grad(0, v) - v).norm() <= 1e-15);
}

TEST_CASE("sampled quadratic ensemble is convex in total only") {
  const CostEnsemble ens = gradpush::quadratic_ensemble(10, 5, 21);
  CHECK(ens.strong_convexity > 0.0);
  Eigen::VectorXd sum_grad = Eigen::VectorXd::Zero(5);
  for (int j = 0; j < 10; ++j) sum_grad += ens.grad(j, ens.minimizer);
  CHECK(sum_grad.norm() <= 1e-8);

  // Indefinite locals show up across nearby seeds even when the total
  // stays convex; find one deterministically.
  bool saw_nonconvex = ens.any_local_nonconvex;
  for (std::uint64_t seed = 22; !saw_nonconvex && seed < 60; ++seed)
    saw_nonconvex =
        gradpush::quadratic_ensemble(10, 5, seed).any_local_nonconvex;
  CHECK(saw_nonconvex);
}

TEST_CASE("quadratic resampling records the seed that passed") {
  // A single 2x2 agent fails the convexity check for many draws; scan for
  // a base seed that needed at least one resample.
  bool resampled = false;
  for (std::uint64_t seed = 1; seed < 200 && !resampled; ++seed) {
    const CostEnsemble ens = gradpush::quadratic_ensemble(1, 2, seed);
    CHECK(ens.strong_convexity > 0.0);
    if (ens.seed != seed) {
      CHECK(ens.seed > seed);
      resampled = true;
      // Replaying with the recorded seed reproduces the data directly.
      const CostEnsemble replay = gradpush::quadratic_ensemble(1, 2, ens.seed);
      CHECK(replay.seed == ens.seed);
      CHECK((replay.data_a[0] - ens.data_a[0]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK(resampled);
}

TEST_CASE("persistently singular least squares errors out") {
  // One agent, one row: the 5x5 Gram matrix has rank 1 for every draw.
  CHECK_THROWS_WITH_AS(gradpush::least_squares_ensemble(1, 5, 1, 0),
                       doctest::Contains("singular"), std::runtime_error);
}

TEST_CASE("gradients match finite differences") {
  const CostEnsemble ls = gradpush::least_squares_ensemble(6, 4, 3, 5);
  const CostEnsemble quad = gradpush::quadratic_ensemble(6, 4, 5);
  for (const CostEnsemble* ens : {&ls, &quad}) {
    for (int trial = 0; trial < 100; ++trial) {
      const int agent = trial % ens->n;
      const Eigen::VectorXd x = random_point(ens->d, 100 + trial);
      const Eigen::VectorXd fd = oracles::finite_difference_grad(
          [&](const Eigen::VectorXd& v) {
            return oracles::local_cost_value(*ens, agent, v);
          },
          x);
      const Eigen::VectorXd g = ens->grad(agent, x);
      CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("constants match a power-iteration oracle") {
  const CostEnsemble ls = gradpush::least_squares_ensemble(5, 4, 3, 9);
  const CostEnsemble quad = gradpush::quadratic_ensemble(5, 4, 9);
  for (const CostEnsemble* ens : {&ls, &quad}) {
    const gradpush::CostConstants c = gradpush::constants(*ens);
    for (int j = 0; j < ens->n; ++j) {
      const double oracle = hessian_norm_power(ens->hessian(j), 31 + j);
      CHECK(std::abs(c.local[j] - oracle) <= 1e-8 * std::max(1.0, oracle));
    }
    CHECK(c.max_local == ens->smoothness);
    CHECK(c.strong_convexity == ens->strong_convexity);
  }
}

TEST_CASE("coercivity of the total objective on random pairs") {
  const CostEnsemble ls = gradpush::least_squares_ensemble(8, 5, 3, 13);
  const CostEnsemble quad = gradpush::quadratic_ensemble(8, 5, 13);
  for (const CostEnsemble* ens : {&ls, &quad}) {
    const double big_l = ens->smoothness;
    const double beta = ens->strong_convexity;
    const double gamma = beta * big_l / (beta + big_l);
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXd x = random_point(ens->d, 500 + 2 * trial);
      const Eigen::VectorXd y = random_point(ens->d, 501 + 2 * trial);
      const Eigen::VectorXd gx = ens->total_grad(x);
      const Eigen::VectorXd gy = ens->total_grad(y);
      const double lhs = (gx - gy).dot(x - y);
      const double rhs = gamma * (x - y).squaredNorm() +
                         (gx - gy).squaredNorm() / (big_l + beta);
      CHECK(lhs >= rhs - 1e-9);
    }
  }
}

TEST_CASE("grad input validation") {
  const CostEnsemble ens = gradpush::least_squares_ensemble(3, 2, 3, 1);
  CHECK_THROWS_AS(ens.grad(3, Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
  Eigen::VectorXd bad(2);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(ens.grad(0, bad), std::invalid_argument);
  CHECK_THROWS_AS(ens.grad(0, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("ensemble serialization round trips bit-exactly") {
  for (const CostEnsemble ens : {gradpush::least_squares_ensemble(4, 3, 2, 8),
                                 gradpush::quadratic_ensemble(4, 3, 8)}) {
    std::ostringstream out;
    gradpush::write_ensemble(ens, out);
    std::istringstream in(out.str());
    const CostEnsemble back = gradpush::read_ensemble(in);
    CHECK(back.kind == ens.kind);
    CHECK(back.n == ens.n);
    CHECK(back.d == ens.d);
    CHECK(back.m == ens.m);
    CHECK(back.seed == ens.seed);
    for (int j = 0; j < ens.n; ++j) {
      CHECK((back.data_a[j] - ens.data_a[j]).cwiseAbs().maxCoeff() == 0.0);
      CHECK((back.data_b[j] - ens.data_b[j]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(back.minimizer.isApprox(ens.minimizer, 1e-14));
  }
}

TEST_CASE("ensemble deserialization rejects malformed input") {
  std::istringstream missing("kind=least_squares\nn=2\nd=2\nm=1\nseed=0\n");
  CHECK_THROWS_AS(gradpush::read_ensemble(missing), std::invalid_argument);
  std::istringstream bad_kind("kind=linear\nn=1\nd=1\nseed=0\n");
  CHECK_THROWS_AS(gradpush::read_ensemble(bad_kind), std::invalid_argument);
}

TEST_CASE("asymmetric quadratic data is rejected") {
  Eigen::MatrixXd q(2, 2);
  q << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_WITH_AS(
      gradpush::quadratic_from_data({q}, {Eigen::VectorXd::Zero(2)}),
      doctest::Contains("symmetric"), std::invalid_argument);
}
