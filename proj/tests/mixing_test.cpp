#include <doctest.h>

#include <cmath>

#include "gradpush/mixing.hpp"
#include "gradpush/rng.hpp"
#include "oracles.hpp"

using gradpush::build_mixing;
using gradpush::MixingMatrix;

namespace {

MixingMatrix random_mix(int n, double p, std::uint64_t seed) {
  for (;; ++seed) {
    const gradpush::DiGraph g = gradpush::random_digraph(n, p, seed);
    if (gradpush::is_strongly_connected(g)) return build_mixing(g);
  }
}

}  // namespace

TEST_CASE("complete graph mixing is the averaging matrix") {
  const int n = 6;
  const MixingMatrix m = build_mixing(gradpush::complete_digraph(n));
  CHECK((m.w - Eigen::MatrixXd::Constant(n, n, 1.0 / n))
            .cwiseAbs()
            .maxCoeff() <= 1e-15);
  CHECK((m.pi - Eigen::VectorXd::Constant(n, 1.0 / n)).cwiseAbs().maxCoeff() <=
        1e-12);
  CHECK(m.sigma_w <= 1e-12);
  CHECK((m.w - m.w_limit).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ring mixing is doubly stochastic with uniform pi") {
  const int n = 5;
  const MixingMatrix m = build_mixing(gradpush::ring_digraph(n));
  for (int j = 0; j < n; ++j) {
    CHECK(m.w.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.w.row(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    int nonzero = 0;
    for (int i = 0; i < n; ++i)
      if (m.w(i, j) != 0.0) {
        CHECK(m.w(i, j) == doctest::Approx(0.5));
        ++nonzero;
      }
    CHECK(nonzero == 2);
  }
  CHECK((m.pi - Eigen::VectorXd::Constant(n, 1.0 / n)).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("two-vertex ring equals the averaging matrix") {
  const MixingMatrix m = build_mixing(gradpush::ring_digraph(2));
  CHECK(m.w(0, 0) == doctest::Approx(0.5));
  CHECK(m.sigma_w <= 1e-12);
}

TEST_CASE("pi matches direct elimination on a fixed 3-vertex graph") {
  // Arcs beyond the self-loops: 0->1, 1->2, 2->0 and 0->2.
  const gradpush::DiGraph g(
      3, {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {2, 0}, {0, 2}});
  const MixingMatrix m = build_mixing(g);
  const Eigen::VectorXd expected = oracles::perron_nullspace(m.w);
  CHECK((m.pi - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("perron vector matches the elimination oracle on random graphs") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const MixingMatrix m = random_mix(10, 0.7, seed * 17);
    const Eigen::VectorXd expected = oracles::perron_nullspace(m.w);
    CHECK((m.pi - expected).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(m.pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.pi.minCoeff() > 0.0);
  }
}

TEST_CASE("perron power iteration reports non-convergence") {
  // A graph whose stationary weights are far from uniform, so the uniform
  // start cannot settle within a handful of rounds.
  const MixingMatrix m = random_mix(20, 0.25, 5);
  REQUIRE((m.pi - Eigen::VectorXd::Constant(20, 0.05)).cwiseAbs().maxCoeff() >
          1e-3);
  CHECK_THROWS_WITH_AS(gradpush::perron_vector(m.w, 1e-15, 5),
                       doctest::Contains("no convergence"),
                       std::runtime_error);
}

TEST_CASE("pi_norm basics") {
  const Eigen::VectorXd pi = Eigen::VectorXd::Constant(4, 0.25);
  CHECK(gradpush::pi_norm(Eigen::VectorXd::Zero(8), pi) == 0.0);

  Eigen::VectorXd single(1);
  single << 1.0;
  Eigen::VectorXd v(1);
  v << -3.5;
  CHECK(gradpush::pi_norm(v, single) == doctest::Approx(3.5));

  gradpush::DrawStream draws(5);
  Eigen::VectorXd x(12);
  for (int i = 0; i < 12; ++i) x[i] = draws.normal();
  CHECK(gradpush::pi_norm(x, pi) ==
        doctest::Approx(2.0 * x.norm()).epsilon(1e-12));

  CHECK_THROWS_AS(gradpush::pi_norm(Eigen::VectorXd::Zero(7), pi),
                  std::invalid_argument);
}

TEST_CASE("pi_matrix_norm identities and oracle agreement") {
  const MixingMatrix m = random_mix(6, 0.6, 11);
  const int n = m.size();

  CHECK(gradpush::pi_matrix_norm(Eigen::MatrixXd::Identity(n, n), m.pi) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(gradpush::pi_matrix_norm(m.w, m.pi) - 1.0) <= 1e-10);
  CHECK(std::abs(gradpush::pi_matrix_norm(m.w_limit, m.pi) - 1.0) <= 1e-10);

  const Eigen::MatrixXd a = m.w - m.w_limit;
  const double norm = gradpush::pi_matrix_norm(a, m.pi);
  CHECK(norm < 1.0);

  // Independent route: SVD of the explicitly transformed matrix.
  const Eigen::VectorXd root = m.pi.cwiseSqrt();
  const Eigen::MatrixXd similar =
      root.cwiseInverse().asDiagonal() * a * root.asDiagonal();
  const double svd_norm =
      Eigen::BDCSVD<Eigen::MatrixXd>(similar).singularValues()(0);
  CHECK(norm == doctest::Approx(svd_norm).epsilon(1e-10));

  // Blockwise weighted power iteration, block size 3.
  const double power_norm =
      oracles::block_operator_norm_power(a, m.pi, 3, 77);
  CHECK(std::abs(norm - power_norm) <= 1e-8 * std::max(1.0, norm));

  CHECK_THROWS_AS(
      gradpush::pi_matrix_norm(Eigen::MatrixXd::Identity(3, 3), m.pi),
      std::invalid_argument);
}

TEST_CASE("sigma_w values") {
  CHECK(gradpush::sigma_w(build_mixing(gradpush::complete_digraph(5))) <=
        1e-12);
  const MixingMatrix ring4 = build_mixing(gradpush::ring_digraph(4));
  const Eigen::VectorXd root = ring4.pi.cwiseSqrt();
  const Eigen::MatrixXd similar = root.cwiseInverse().asDiagonal() *
                                  (ring4.w - ring4.w_limit) *
                                  root.asDiagonal();
  const double expected =
      Eigen::BDCSVD<Eigen::MatrixXd>(similar).singularValues()(0);
  CHECK(gradpush::sigma_w(ring4) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("build_mixing rejects disconnected graphs") {
  const gradpush::DiGraph split(2, {{0, 0}, {1, 1}});
  CHECK_THROWS_WITH_AS(build_mixing(split),
                       doctest::Contains("strongly connected"),
                       std::invalid_argument);
}

TEST_CASE("spectral invariants over random graphs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 4 + static_cast<int>(seed % 7);
    const MixingMatrix m = random_mix(n, 0.5, 1000 + seed);

    for (int j = 0; j < n; ++j)
      CHECK(std::abs(m.w.col(j).sum() - 1.0) <= 1e-12);

    CHECK((m.w * m.pi - m.pi).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((m.w * m.w_limit - m.w_limit).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((m.w_limit * m.w_limit - m.w_limit).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(m.sigma_w < 1.0);

    // Norm equivalence sandwich on random vectors.
    gradpush::DrawStream draws(seed);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = draws.normal();
    const double weighted = gradpush::pi_norm(x, m.pi);
    CHECK(x.norm() <= std::sqrt(m.pi_max()) * weighted * (1.0 + 1e-12));
    CHECK(weighted <= x.norm() / std::sqrt(m.pi_min()) * (1.0 + 1e-12));

    // Geometric power convergence: the measured prefactor never exceeds
    // the norm-equivalence bound sqrt(pi_max / pi_min).
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    double sig_t = 1.0;
    double measured = 0.0;
    for (int t = 0; t <= 200 && sig_t >= 1e-12; ++t) {
      const double diff = Eigen::BDCSVD<Eigen::MatrixXd>(power - m.w_limit)
                              .singularValues()(0);
      measured = std::max(measured, diff / sig_t);
      power = power * m.w;
      sig_t *= m.sigma_w;
      if (sig_t == 0.0) break;
    }
    CHECK(measured <=
          std::sqrt(m.pi_max() / m.pi_min()) * (1.0 + 1e-8));
  }
}
