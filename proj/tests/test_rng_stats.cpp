#include <doctest.h>

#include <cmath>
#include <vector>

#include "vimix/rng.hpp"
#include "vimix/stats.hpp"

using namespace vimix;

TEST_CASE("counter rng is a pure function of key and counter") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CounterRng c(43);
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("next_below is unbiased across its range") {
  CounterRng rng(7);
  const int bound = 24;
  std::vector<long> counts(bound, 0);
  const long n = 240000;
  for (long i = 0; i < n; ++i) ++counts[rng.next_below(bound)];
  double chi2 = 0.0;
  const double expect = static_cast<double>(n) / bound;
  for (long c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // df = 23; reject only at the 0.001 level
  CHECK(chi2 < 49.73);
}

TEST_CASE("fisher-yates produces a permutation") {
  CounterRng rng(9);
  auto perm = random_permutation(100, rng);
  std::vector<bool> seen(100, false);
  for (auto p : perm) {
    CHECK(!seen[p]);
    seen[p] = true;
  }
}

TEST_CASE("normal draws have the right moments") {
  CounterRng rng(1234);
  const long n = 200000;
  double s1 = 0, s2 = 0;
  for (long i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("chi2 cdf matches closed forms") {
  // df=2: 1 - exp(-x/2); df=4: 1 - exp(-x/2)(1 + x/2)
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0}) {
    CHECK(chi2_cdf(2, x) == doctest::Approx(1.0 - std::exp(-x / 2)).epsilon(1e-12));
    CHECK(chi2_cdf(4, x) ==
          doctest::Approx(1.0 - std::exp(-x / 2) * (1.0 + x / 2)).epsilon(1e-12));
  }
  CHECK(chi2_cdf(112, 0.0) == 0.0);
  // scipy.stats.chi2.cdf reference values
  CHECK(chi2_cdf(112, 112.0) == doctest::Approx(0.5177719940164894).epsilon(1e-10));
  CHECK(chi2_cdf(4, 10.0) == doctest::Approx(0.9595723180054873).epsilon(1e-10));
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));
}

TEST_CASE("ks test accepts its own null and rejects a shifted one") {
  CounterRng rng(5);
  std::vector<double> xs(4000);
  for (double& x : xs) x = rng.next_unit();
  auto uniform_cdf = [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); };
  CHECK(ks_test(xs, uniform_cdf).p_value > 0.01);
  auto shifted_cdf = [](double x) {
    const double y = x - 0.08;
    return y < 0 ? 0.0 : (y > 1 ? 1.0 : y);
  };
  CHECK(ks_test(xs, shifted_cdf).p_value < 0.01);
}

TEST_CASE("log2 factorial matches lgamma") {
  const double ln2 = std::log(2.0);
  for (std::uint64_t n : {1ull, 2ull, 10ull, 36ull, 100ull, 5000ull}) {
    const double ref = std::lgamma(static_cast<double>(n) + 1.0) / ln2;
    CHECK(log2_factorial(n) == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK(log2_factorial(0) == 0.0);
  CHECK(log2_factorial(1) == 0.0);
}

TEST_CASE("skewness of a symmetric sample is near zero") {
  std::vector<double> xs;
  for (int i = -50; i <= 50; ++i) xs.push_back(i);
  CHECK(std::abs(skewness(xs)) < 1e-12);
}
