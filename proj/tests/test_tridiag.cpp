#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "ratefield/random.hpp"
#include "ratefield/tridiag.hpp"

using namespace ratefield;

namespace {

SymTridiagd random_spd(Index n, Rng& rng) {
  Eigen::VectorXd off(n - 1);
  for (Index i = 0; i < n - 1; ++i) off[i] = rng.normal();
  Eigen::VectorXd diag(n);
  for (Index i = 0; i < n; ++i) {
    double row = 2.0 + std::abs(rng.normal());
    if (i > 0) row += std::abs(off[i - 1]);
    if (i < n - 1) row += std::abs(off[i]);
    diag[i] = row;  // strictly diagonally dominant -> SPD
  }
  return SymTridiagd(diag, off);
}

// determinant of a symmetric tridiagonal matrix by the three-term recurrence
double brute_det(const SymTridiagd& m) {
  const auto& d = m.diagonal();
  const auto& e = m.off_diagonal();
  double dm2 = 1.0, dm1 = d[0];
  for (Index i = 1; i < m.size(); ++i) {
    const double di = d[i] * dm1 - e[i - 1] * e[i - 1] * dm2;
    dm2 = dm1;
    dm1 = di;
  }
  return dm1;
}

}  // namespace

TEST_CASE("solve matches dense") {
  Rng rng(RngSeed{31});
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 2 + static_cast<Index>(rng.uniform() * 60);
    const SymTridiagd m = random_spd(n, rng);
    Eigen::VectorXd b(n);
    for (Index i = 0; i < n; ++i) b[i] = rng.normal();
    const Eigen::VectorXd x = m.factorize().solve(b);
    const Eigen::VectorXd x_ref = m.dense().ldlt().solve(b);
    CHECK((x - x_ref).lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + x_ref.norm()));
    CHECK((m.apply(x) - b).lpNorm<Eigen::Infinity>() < 1e-9 * (1.0 + b.norm()));
  }
}

TEST_CASE("log determinant matches brute force on small systems") {
  Rng rng(RngSeed{32});
  for (Index n = 2; n <= 12; ++n) {
    const SymTridiagd m = random_spd(n, rng);
    const double logdet = m.factorize().log_determinant();
    const double det = brute_det(m);
    REQUIRE(det > 0.0);
    CHECK(logdet == doctest::Approx(std::log(det)).epsilon(1e-10));
  }
}

TEST_CASE("nonpositive pivot is rejected") {
  Eigen::VectorXd d(3), e(2);
  d << 1.0, -2.0, 1.0;
  e << 0.0, 0.0;
  CHECK_THROWS_AS(SymTridiagd(d, e).factorize(), NumericalFailure);
  Eigen::VectorXd wrong(3);
  CHECK_THROWS_AS(SymTridiagd(d, wrong), InvalidArgument);
}

TEST_CASE("apply matches dense multiply") {
  Rng rng(RngSeed{33});
  const SymTridiagd m = random_spd(17, rng);
  Eigen::VectorXd x(17);
  for (Index i = 0; i < 17; ++i) x[i] = rng.normal();
  CHECK((m.apply(x) - m.dense() * x).lpNorm<Eigen::Infinity>() < 1e-12);
}
