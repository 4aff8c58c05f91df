#include <catch_amalgamated.hpp>

#include <random>

#include "voltdmd/lowrank.hpp"

using namespace voltdmd;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(Eigen::Index p, Eigen::Index q, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  MatrixXd M(p, q);
  for (Eigen::Index k = 0; k < M.size(); ++k) M.data()[k] = d(rng);
  return M;
}

MatrixXd low_rank(Eigen::Index p, Eigen::Index q, Eigen::Index r, std::mt19937_64& rng) {
  return random_matrix(p, r, rng) * random_matrix(r, q, rng);
}

}  // namespace

TEST_CASE("truncated_svd examples", "[lowrank]") {
  const auto f = truncated_svd(MatrixXd::Identity(2, 2), RankPolicy::fixed(2));
  CHECK(f.rank() == 2);
  CHECK(f.S[0] == Catch::Approx(1.0));
  CHECK(f.S[1] == Catch::Approx(1.0));

  MatrixXd M(2, 2);
  M << 1, 2, 2, 4;
  const auto g = truncated_svd(M, RankPolicy::relative(1e-10));
  CHECK(g.rank() == 1);
  CHECK(g.S[0] == Catch::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("reconstruction error equals the singular-value tail", "[lowrank]") {
  std::mt19937_64 rng(1);
  const MatrixXd M = random_matrix(50, 80, rng);
  const auto full = truncated_svd(M, RankPolicy::fixed(50));
  CHECK((M - full.reconstruct()).norm() <= 1e-9 * M.norm());
  // independent reference SVD
  Eigen::JacobiSVD<MatrixXd> ref(M);
  CHECK((full.all_S - ref.singularValues()).norm() <= 1e-10 * ref.singularValues()[0]);

  for (Eigen::Index r : {1, 5, 20, 49}) {
    const auto f = truncated_svd(M, RankPolicy::fixed(r));
    const double tail = ref.singularValues().tail(50 - r).norm();
    CHECK((M - f.reconstruct()).norm() == Catch::Approx(tail).epsilon(1e-8));
  }
}

TEST_CASE("rank policies", "[lowrank]") {
  Eigen::VectorXd s(4);
  s << 10, 1, 0.1, 0.001;
  const MatrixXd M = s.asDiagonal();
  CHECK(truncated_svd(M, RankPolicy::relative(0.05)).rank() == 2);
  CHECK(truncated_svd(M, RankPolicy::relative(0.01)).rank() == 3);
  CHECK(truncated_svd(M, RankPolicy::energy(0.98)).rank() == 1);
  CHECK(truncated_svd(M, RankPolicy::energy(0.99)).rank() == 2);
  CHECK(truncated_svd(M, RankPolicy::energy(0.9999)).rank() == 2);
  CHECK(truncated_svd(M, RankPolicy::fixed(9)).rank() == 4);
  CHECK(truncated_svd(M, RankPolicy::all()).rank() == 4);

  CHECK_THROWS_AS(truncated_svd(MatrixXd::Zero(3, 3)), DataError);
  MatrixXd bad = MatrixXd::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(truncated_svd(bad), DataError);
  CHECK_THROWS_AS(RankPolicy::parse("rel:2"), DataError);
  CHECK_THROWS_AS(RankPolicy::parse("nope:1"), DataError);
  CHECK(RankPolicy::parse("fixed:7") == RankPolicy::fixed(7));
  CHECK(RankPolicy::parse(RankPolicy::energy(0.9999).to_string()) == RankPolicy::energy(0.9999));
}

TEST_CASE("factor orthonormality and sign convention", "[lowrank][property]") {
  std::mt19937_64 rng(2);
  for (auto [p, q] : {std::pair<Eigen::Index, Eigen::Index>{30, 7}, {7, 30}, {12, 15}, {200, 9}, {9, 200}}) {
    const MatrixXd M = random_matrix(p, q, rng);
    const auto f = truncated_svd(M);
    const Eigen::Index r = f.rank();
    CHECK((f.U.transpose() * f.U - MatrixXd::Identity(r, r)).norm() <= 1e-10);
    CHECK((f.V.transpose() * f.V - MatrixXd::Identity(r, r)).norm() <= 1e-10);
    for (Eigen::Index k = 0; k + 1 < r; ++k) CHECK(f.S[k] >= f.S[k + 1]);
    CHECK(f.S[r - 1] > 0.0);
    for (Eigen::Index k = 0; k < r; ++k) {
      Eigen::Index at = 0;
      f.U.col(k).cwiseAbs().maxCoeff(&at);
      CHECK(f.U(at, k) >= 0.0);
    }
    // deterministic on repeated input
    const auto g = truncated_svd(M);
    CHECK(g.U == f.U);
    CHECK(g.S == f.S);
  }
}

TEST_CASE("truncation is monotone in the kept rank", "[lowrank][property]") {
  std::mt19937_64 rng(3);
  const MatrixXd M = random_matrix(20, 35, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 1; r <= 20; ++r) {
    const double err = (M - truncated_svd(M, RankPolicy::fixed(r)).reconstruct()).norm();
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("pinv_apply examples", "[lowrank]") {
  const auto f = truncated_svd(MatrixXd::Identity(3, 3), RankPolicy::all());
  CHECK((pinv_apply(f, MatrixXd::Identity(3, 3)) - MatrixXd::Identity(3, 3)).norm() <= 1e-14);

  std::mt19937_64 rng(4);
  const MatrixXd M = random_matrix(3, 3, rng) + 3.0 * MatrixXd::Identity(3, 3);
  const auto g = truncated_svd(M);
  CHECK((pinv_apply(g, M) - MatrixXd::Identity(3, 3)).norm() <= 1e-9);
  CHECK((pinv_apply(g, MatrixXd::Identity(3, 3)) - M.inverse()).norm() <= 1e-9);

  CHECK_THROWS_AS(pinv_apply(g, MatrixXd::Identity(4, 4)), DataError);
}

TEST_CASE("pinv_apply matches a QR-based pseudoinverse", "[lowrank]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = 4 + trial % 7, q = 6 + (3 * trial) % 11;
    const Eigen::Index r = 1 + trial % std::min(p, q);
    const MatrixXd M = low_rank(p, q, r, rng);
    const MatrixXd M2 = random_matrix(5, q, rng);
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(M);
    cod.setThreshold(1e-10);
    const MatrixXd expect = M2 * cod.pseudoInverse();
    const auto f = truncated_svd(M);
    REQUIRE(f.rank() == r);
    CHECK((pinv_apply(f, M2) - expect).norm() <= 1e-8 * std::max(1.0, expect.norm()));
  }
}

TEST_CASE("Penrose conditions at full rank", "[lowrank][property]") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd M = random_matrix(6 + trial, 4 + 2 * trial, rng);
    const auto f = truncated_svd(M);
    const MatrixXd P = pinv_apply(f, MatrixXd::Identity(M.cols(), M.cols()));
    CHECK((M * P * M - M).norm() <= 1e-8);
    CHECK((P * M * P - P).norm() <= 1e-8);
    CHECK(((M * P).transpose() - M * P).norm() <= 1e-8);
    CHECK(((P * M).transpose() - P * M).norm() <= 1e-8);
  }
}
