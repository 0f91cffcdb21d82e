#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "eki/ensemble.hpp"
#include "eki/forward_model.hpp"
#include "test_support.hpp"

using namespace eki;
using eki::testing::max_abs;
using eki::testing::random_ensemble;
using eki::testing::random_matrix;

namespace {

Ensemble scalar_ensemble(std::initializer_list<double> values) {
  std::vector<Vector> members;
  for (double v : values) members.push_back(Vector::Constant(1, v));
  return Ensemble::from_members(members);
}

// Direct double-loop sums, written independently of the library.
Matrix cross_covariance_oracle(const Matrix& a, const Matrix& b) {
  const Index j = a.rows();
  Vector ma = Vector::Zero(a.cols());
  Vector mb = Vector::Zero(b.cols());
  for (Index k = 0; k < j; ++k) {
    ma += a.row(k).transpose();
    mb += b.row(k).transpose();
  }
  ma /= static_cast<double>(j);
  mb /= static_cast<double>(j);
  Matrix c = Matrix::Zero(a.cols(), b.cols());
  for (Index k = 0; k < j; ++k) {
    for (Index p = 0; p < a.cols(); ++p) {
      for (Index q = 0; q < b.cols(); ++q) c(p, q) += (a(k, p) - ma[p]) * (b(k, q) - mb[q]);
    }
  }
  return c / static_cast<double>(j);
}

}  // namespace

TEST_CASE("ensemble construction") {
  CHECK_THROWS_AS(Ensemble(MemberMatrix(0, 3)), std::invalid_argument);
  CHECK_THROWS_AS(Ensemble::from_members({Vector::Zero(2), Vector::Zero(3)}), std::invalid_argument);
  const Ensemble single = scalar_ensemble({4.0});
  CHECK(single.degenerate());
  CHECK(max_abs(covariance_uu(single)) == 0.0);
}

TEST_CASE("ensemble mean") {
  CHECK(ensemble_mean(scalar_ensemble({1.0, 3.0}))[0] == doctest::Approx(2.0));
  const Ensemble e = Ensemble::from_members({Vector::Zero(2), Eigen::Vector2d(2, 4), Eigen::Vector2d(4, 8)});
  CHECK(max_abs(ensemble_mean(e) - Eigen::Vector2d(2, 4)) < 1e-15);

  const Ensemble big = random_ensemble(100, 7, 11);
  Vector naive = Vector::Zero(7);
  for (Index j = 0; j < 100; ++j) {
    for (Index i = 0; i < 7; ++i) naive[i] += big.members()(j, i);
  }
  CHECK(max_abs(ensemble_mean(big) - naive / 100.0) < 1e-12);
}

TEST_CASE("covariance_uu") {
  const Ensemble same = Ensemble(MemberMatrix(MemberMatrix::Constant(5, 3, 1.7)));
  CHECK(max_abs(covariance_uu(same)) == 0.0);
  CHECK(covariance_uu(scalar_ensemble({1.0, 3.0}))(0, 0) == doctest::Approx(1.0));

  const Ensemble e = random_ensemble(50, 3, 5);
  const Matrix c = covariance_uu(e);
  CHECK(max_abs(c - cross_covariance_oracle(e.members(), e.members())) < 1e-12);
  CHECK(max_abs(c - c.transpose()) < 1e-14);
  CHECK(check_psd(c).ok);
}

TEST_CASE("covariance_uG and covariance_GG") {
  const Ensemble same = Ensemble(MemberMatrix(MemberMatrix::Constant(4, 2, -3.0)));
  const ForwardImages g_same(MemberMatrix(MemberMatrix::Constant(4, 3, 2.0)));
  CHECK(max_abs(covariance_uG(same, g_same)) == 0.0);
  CHECK(max_abs(covariance_GG(g_same)) == 0.0);

  const ForwardImages g2(MemberMatrix((MemberMatrix(2, 1) << 0.0, 2.0).finished()));
  CHECK(covariance_GG(g2)(0, 0) == doctest::Approx(1.0));

  const Ensemble e = random_ensemble(40, 4, 8);
  const LinearModel identity(Matrix::Identity(4, 4), Matrix::Identity(4, 4));
  CHECK(max_abs(covariance_uG(e, evaluate(identity, e)) - covariance_uu(e)) < 1e-14);

  const Matrix gmat = random_matrix(3, 4, 9);
  const LinearModel linear(gmat, Matrix::Identity(3, 3));
  const ForwardImages g = evaluate(linear, e);
  CHECK(max_abs(covariance_uG(e, g) - covariance_uu(e) * gmat.transpose()) < 1e-12);

  const ForwardImages random_images(MemberMatrix(random_matrix(30, 5, 10)));
  CHECK(max_abs(covariance_GG(random_images) -
                cross_covariance_oracle(random_images.images, random_images.images)) < 1e-12);
}

TEST_CASE("augmented covariance") {
  const Ensemble scalar = scalar_ensemble({1.0, 3.0});
  const LinearModel twice(Matrix::Constant(1, 1, 2.0), Matrix::Identity(1, 1));
  const AugmentedCovariance a = augmented_covariance(scalar, evaluate(twice, scalar));
  CHECK(a.C(0, 0) == doctest::Approx(1.0));
  CHECK(a.C_G(0, 0) == doctest::Approx(2.0));
  CHECK(a.D_G(0, 0) == doctest::Approx(4.0));

  const Ensemble e = random_ensemble(30, 4, 12);
  const ForwardImages g(MemberMatrix(random_matrix(30, 2, 13)));
  Matrix stacked(30, 6);
  stacked << e.members(), g.images;
  CHECK(max_abs(augmented_covariance(e, g).assembled() - cross_covariance_oracle(stacked, stacked)) < 1e-12);

  const ForwardImages g_same(MemberMatrix(MemberMatrix::Constant(3, 2, 1.0)));
  const Ensemble e_same(MemberMatrix(MemberMatrix::Constant(3, 2, 5.0)));
  CHECK(max_abs(augmented_covariance(e_same, g_same).assembled()) == 0.0);
}

TEST_CASE("spread and residual") {
  const Ensemble scalar = scalar_ensemble({1.0, 3.0});
  const Spread s = ensemble_spread(scalar);
  CHECK(s.member_sq_norms[0] == doctest::Approx(1.0));
  CHECK(s.member_sq_norms[1] == doctest::Approx(1.0));
  CHECK(s.mean_square == doctest::Approx(1.0));
  const Vector r = ensemble_residual(scalar, Vector::Constant(1, 2.0));
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(1.0));

  const Ensemble e = random_ensemble(25, 6, 14);
  CHECK(std::abs(ensemble_spread(e).mean_square - covariance_uu(e).trace()) < 1e-12);

  const Vector u_star = eki::testing::random_vector(6, 15);
  const Vector res = ensemble_residual(e, u_star);
  for (Index j = 0; j < 25; ++j) {
    double naive = 0.0;
    for (Index i = 0; i < 6; ++i) naive += (e.members()(j, i) - u_star[i]) * (e.members()(j, i) - u_star[i]);
    CHECK(std::abs(res[j] - naive) < 1e-12);
  }

  Ensemble at_star(MemberMatrix(u_star.transpose().replicate(4, 1)));
  CHECK(max_abs(ensemble_residual(at_star, u_star)) == 0.0);
  CHECK(max_abs(ensemble_spread(at_star).member_sq_norms) == 0.0);
}

TEST_CASE("subspace residual") {
  const Ensemble e0 = random_ensemble(5, 10, 16);
  CHECK(subspace_residual(e0, e0) < 1e-12);

  const Matrix mix = random_matrix(5, 5, 17);
  const Ensemble combined(MemberMatrix(mix * e0.members()));
  CHECK(subspace_residual(combined, e0) <= 1e-10);

  MemberMatrix off = e0.members();
  Vector outside = eki::testing::random_vector(10, 18);
  off.row(0) += outside.transpose();
  CHECK(subspace_residual(Ensemble(off), e0) > 1e-3);
}

TEST_CASE("statistics are invariant under member permutation") {
  const Ensemble e = random_ensemble(20, 4, 19);
  std::vector<Index> order(20);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::swap(order[3], order[11]);
  MemberMatrix permuted(20, 4);
  for (Index j = 0; j < 20; ++j) permuted.row(j) = e.members().row(order[static_cast<std::size_t>(j)]);
  const Ensemble p(permuted);
  CHECK(max_abs(ensemble_mean(p) - ensemble_mean(e)) < 1e-14);
  CHECK(max_abs(covariance_uu(p) - covariance_uu(e)) < 1e-14);
  CHECK(std::abs(ensemble_spread(p).mean_square - ensemble_spread(e).mean_square) < 1e-14);
}

TEST_CASE("psd check reports violations") {
  Matrix indefinite = Matrix::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  const PsdCheck bad = check_psd(indefinite);
  CHECK_FALSE(bad.ok);
  CHECK(bad.min_eigenvalue == doctest::Approx(-1.0));

  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const Ensemble e = random_ensemble(3, 8, seed, 100.0);
    const PsdCheck check = check_psd(covariance_uu(e));
    CHECK(check.ok);
  }
}
