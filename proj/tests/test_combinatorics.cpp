#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "doctest.h"

#include "cocl/criterion.hpp"
#include "cocl/error.hpp"
#include "support/oracles.hpp"

using cocl::Combinatorics;
using cocl::CriterionSettings;

TEST_CASE("cumulative Stirling matches set-partition enumeration") {
  const Combinatorics comb;
  const auto table = testsupport::stirling_by_enumeration(10);
  for (int a = 1; a <= 10; ++a) {
    std::uint64_t cumulative = 0;
    for (int b = 1; b <= a; ++b) {
      cumulative += table[static_cast<size_t>(a)][static_cast<size_t>(b)];
      const double expected = std::log(static_cast<double>(cumulative));
      const double got = comb.log_stirling2_cumulative(a, b);
      CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST_CASE("cumulative Stirling known values") {
  const Combinatorics comb;
  CHECK(comb.log_stirling2_cumulative(3, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-13));
  CHECK(comb.log_stirling2_cumulative(4, 4) == doctest::Approx(std::log(15.0)).epsilon(1e-13));
  for (int a = 1; a <= 12; ++a) {
    CHECK(comb.log_stirling2_cumulative(a, 1) == doctest::Approx(0.0));
    CHECK(comb.log_stirling2_cumulative(a, a + 5) ==
          doctest::Approx(comb.log_stirling2_cumulative(a, a)));
  }
  // B(a, 2) = 2^(a-1) exactly, on both the exact and the approximate path.
  for (int a : {5, 18, 25, 600}) {
    CHECK(comb.log_stirling2_cumulative(a, 2) ==
          doctest::Approx((a - 1) * std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("cumulative Stirling is monotone in the group budget") {
  const Combinatorics comb;
  for (int a = 2; a <= 12; ++a) {
    for (int b = 1; b < a; ++b) {
      CHECK(comb.log_stirling2_cumulative(a, b) <=
            comb.log_stirling2_cumulative(a, b + 1) + 1e-12);
    }
  }
}

TEST_CASE("path selection follows the configured thresholds") {
  const Combinatorics comb;
  CHECK(comb.uses_exact_path(100, 50));
  CHECK_FALSE(comb.uses_exact_path(100, 5));   // 100 > 10 * min(a, b)
  CHECK_FALSE(comb.uses_exact_path(20000, 20000));  // above stirling_exact_max_a

  // In its regime (a >> b) the approximation is indistinguishable from the
  // exact value at double precision.
  CriterionSettings wide_open;
  wide_open.stirling_exact_max_a = 1 << 20;
  wide_open.stirling_exact_ratio = 1e18;
  const Combinatorics exact(wide_open);
  const double approx = comb.log_stirling2_cumulative(1000, 3);
  const double full = exact.log_stirling2_cumulative(1000, 3);
  CHECK_FALSE(comb.uses_exact_path(1000, 3));
  CHECK(std::abs(approx - full) <= 1e-9 * std::abs(full));
}

TEST_CASE("combinatorics argument validation") {
  const Combinatorics comb;
  CHECK(comb.log_stirling2_cumulative(0, 3) == 0.0);
  CHECK_THROWS_AS(comb.log_stirling2_cumulative(5, 0), cocl::ParameterError);
  CHECK(comb.log_binomial(5, 0) == 0.0);
  CHECK(comb.log_binomial(5, 5) == 0.0);
  CHECK_THROWS_AS(comb.log_binomial(3, 5), cocl::ParameterError);
  CHECK_THROWS_AS(comb.log_binomial(3, -1), cocl::ParameterError);
}

TEST_CASE("log factorials agree with lgamma") {
  const Combinatorics comb;
  CHECK(comb.log_factorial(0) == 0.0);
  CHECK(comb.log_factorial(1) == 0.0);
  CHECK(comb.log_factorial(10) == doctest::Approx(std::log(3628800.0)).epsilon(1e-13));
  for (std::int64_t n : {17LL, 123LL, 4096LL, 100000LL}) {
    const double expected = std::lgamma(static_cast<double>(n) + 1.0);
    CHECK(comb.log_factorial(n) == doctest::Approx(expected).epsilon(5e-13));
  }
  // Incremental identity ln n! - ln (n-1)! = ln n.
  for (std::int64_t n : {2LL, 77LL, 1000LL}) {
    CHECK(comb.log_factorial(n) - comb.log_factorial(n - 1) ==
          doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-10));
  }
}

TEST_CASE("log binomial identities") {
  const Combinatorics comb;
  CHECK(comb.log_binomial(10, 3) == doctest::Approx(std::log(120.0)).epsilon(1e-13));
  for (std::int64_t n : {6LL, 20LL, 51LL}) {
    for (std::int64_t k = 0; k <= n; ++k) {
      CHECK(comb.log_binomial(n, k) ==
            doctest::Approx(comb.log_binomial(n, n - k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("concurrent queries return serial values") {
  Combinatorics shared;
  std::vector<std::thread> pool;
  std::vector<double> sums(8, 0.0);
  for (int w = 0; w < 8; ++w) {
    pool.emplace_back([&shared, &sums, w]() {
      double sum = 0.0;
      for (int i = 1; i <= 400; ++i) {
        sum += shared.log_factorial(i + w);
        sum += shared.log_stirling2_cumulative(1 + (i + w) % 12, 1 + i % 7);
        sum += shared.log_binomial(i + w, i / 2);
      }
      sums[static_cast<size_t>(w)] = sum;
    });
  }
  for (auto& t : pool) t.join();

  const Combinatorics fresh;
  for (int w = 0; w < 8; ++w) {
    double sum = 0.0;
    for (int i = 1; i <= 400; ++i) {
      sum += fresh.log_factorial(i + w);
      sum += fresh.log_stirling2_cumulative(1 + (i + w) % 12, 1 + i % 7);
      sum += fresh.log_binomial(i + w, i / 2);
    }
    CHECK(sums[static_cast<size_t>(w)] == doctest::Approx(sum).epsilon(1e-12));
  }
}
