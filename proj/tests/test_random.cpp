#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ratefield/errors.hpp"
#include "ratefield/random.hpp"

using namespace ratefield;

TEST_CASE("identical seeds give identical streams") {
  Rng a(RngSeed{123}), b(RngSeed{123});
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(RngSeed{123}), d(RngSeed{124});
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs |= (c.next_u64() != d.next_u64());
  CHECK(differs);
}

TEST_CASE("substreams are reproducible and distinct") {
  const RngSeed base{999};
  CHECK(substream(base, 5).value == substream(base, 5).value);
  CHECK(substream(base, 5).value != substream(base, 6).value);
  CHECK(substream(base, 0).value != base.value);
}

TEST_CASE("normal moments") {
  Rng rng(RngSeed{2024});
  const int n = 200000;
  double s = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    s3 += z * z * z;
    s4 += z * z * z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(s3 / n) < 0.03);
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("poisson moments and edge cases") {
  Rng rng(RngSeed{5});
  CHECK(rng.poisson(0.0) == 0);
  CHECK_THROWS_AS(rng.poisson(-1.0), InvalidArgument);

  for (double mean : {0.05, 2.0, 25.0, 120.0}) {
    double s = 0, s2 = 0;
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double mu = s / n;
    const double var = s2 / n - mu * mu;
    CHECK(mu == doctest::Approx(mean).epsilon(0.03));
    CHECK(var == doctest::Approx(mean).epsilon(0.06));
  }
}

TEST_CASE("uniform range") {
  Rng rng(RngSeed{77});
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
