#include <doctest.h>

#include <random>
#include <vector>

#include "autoar/error.hpp"
#include "autoar/lag_regression.hpp"
#include "support.hpp"

using namespace autoar;

namespace {

std::vector<double> noise(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

}  // namespace

TEST_CASE("cross products match the explicit design matrix") {
  const std::size_t p = 5;
  const auto x = noise(40, 1);
  LagCrossProducts cp(p);
  accumulate_lagged(cp, x);
  CHECK(cp.count == 35.0);
  for (std::size_t a = 0; a <= p; ++a) {
    for (std::size_t b = 0; b <= p; ++b) {
      double s = 0.0;
      for (std::size_t t = p; t < x.size(); ++t) {
        const double ua = a == 0 ? 1.0 : x[t - a];
        const double ub = b == 0 ? 1.0 : x[t - b];
        s += ua * ub;
      }
      CHECK(cp.gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) ==
            doctest::Approx(s).epsilon(1e-12));
    }
    double s = 0.0;
    for (std::size_t t = p; t < x.size(); ++t) s += (a == 0 ? 1.0 : x[t - a]) * x[t];
    CHECK(cp.xty(static_cast<Eigen::Index>(a)) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("unit weights reproduce the unweighted statistics") {
  const std::size_t p = 3;
  const auto x = noise(60, 2);
  LagCrossProducts plain(p), weighted(p);
  accumulate_lagged(plain, x);
  std::vector<double> w(x.size(), 1.0);
  for (std::size_t t = 0; t < p; ++t) w[t] = 0.0;
  accumulate_lagged_weighted(weighted, x, w);
  CHECK((plain.gram - weighted.gram).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((plain.xty - weighted.xty).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(plain.yty == doctest::Approx(weighted.yty));
  CHECK(plain.count == weighted.count);
}

TEST_CASE("pooled statistics do not depend on the thread count") {
  std::vector<std::vector<double>> data;
  std::vector<std::span<const double>> spans;
  for (unsigned c = 0; c < 37; ++c) data.push_back(noise(300, 100 + c));
  for (const auto& d : data) spans.push_back(d);
  const auto serial = pooled_cross_products(spans, 24, 1);
  const auto parallel = pooled_cross_products(spans, 24, 4);
  CHECK(serial.gram == parallel.gram);
  CHECK(serial.xty == parallel.xty);
  CHECK(serial.yty == parallel.yty);
}

TEST_CASE("OLS equals a hand Gaussian-elimination oracle on tiny instances") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> pick_p(1, 3);
  std::uniform_int_distribution<int> pick_extra(1, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = static_cast<std::size_t>(pick_p(rng));
    // Between p+2 and 10 samples, one or two channels.
    const auto channels = trial % 2 == 0 ? 1u : 2u;
    std::size_t samples = std::max<std::size_t>(p + 2, static_cast<std::size_t>(pick_extra(rng)));
    samples = std::min<std::size_t>(samples, 10);
    std::vector<std::vector<double>> data;
    for (unsigned c = 0; c < channels; ++c) {
      data.push_back(noise(p + (samples + channels - 1) / channels, 1000 + trial * 7 + c));
    }
    std::vector<std::span<const double>> spans(data.begin(), data.end());
    const auto cp = pooled_cross_products(spans, p);
    for (bool intercept : {true, false}) {
      CAPTURE(trial);
      CAPTURE(intercept);
      const auto sol = solve_normal_equations(cp, intercept);
      const auto oracle = testing::brute_force_ols(data, p, intercept);
      REQUIRE(static_cast<std::size_t>(sol.beta.size()) == oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        CHECK(std::abs(sol.beta(static_cast<Eigen::Index>(i)) - oracle[i]) <
              1e-8 * std::max(1.0, std::abs(oracle[i])));
      }
      double rss = 0.0;
      for (std::size_t c = 0; c < data.size(); ++c) {
        rss += explicit_rss(data[c], p, sol.beta, intercept);
      }
      CHECK(rss == doctest::Approx(testing::brute_force_rss(data, p, oracle, intercept))
                       .epsilon(1e-8));
      CHECK(quadratic_rss(cp, sol.beta) ==
            doctest::Approx(rss).epsilon(1e-6).scale(cp.yty));
    }
  }
}

TEST_CASE("singular systems fall back to a stabilized solve") {
  const std::vector<double> flat(30, 2.5);
  LagCrossProducts cp(3);
  accumulate_lagged(cp, flat);
  const auto sol = solve_normal_equations(cp, true);
  CHECK(sol.regularized);
  CHECK(sol.beta.allFinite());
  CHECK(explicit_rss(flat, 3, sol.beta, true) < 1e-10);
}

TEST_CASE("lag regression input checks") {
  LagCrossProducts cp(4);
  CHECK_THROWS_AS(accumulate_lagged(cp, std::vector<double>(4, 1.0)), DataError);
  LagCrossProducts other(3);
  CHECK_THROWS_AS(cp += other, ConfigError);
}
