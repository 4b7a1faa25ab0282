#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "r2vpo/checks.hpp"
#include "r2vpo/divergence.hpp"
#include "r2vpo/errors.hpp"

using namespace r2vpo;
using namespace r2vpo::divergence;

namespace {

DiscreteDistribution dist(std::vector<double> p) { return DiscreteDistribution(std::move(p)); }

// Composite Simpson rule for E_q[f(p/q)] with q = N(0,1), p = N(mu,1); an
// oracle independent of the library quadrature.
double simpson_gaussian(Kind kind, double mu) {
  const int n = 200000;
  const double a = -12.0, b = 12.0, h = (b - a) / n;
  auto g = [&](double x) {
    const double q = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    const double u = std::exp(mu * x - 0.5 * mu * mu);
    return q * eval_generator({kind}, u);
  };
  double s = g(a) + g(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_SUITE("divergence") {
  TEST_CASE("generators vanish at one and match hand values") {
    for (Kind k : kAllKinds) CHECK(std::abs(eval_generator({k}, 1.0)) < 1e-15);
    CHECK(eval_generator({Kind::kChiSquared}, 1.2) == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(eval_generator({Kind::kReverseKL}, 2.0) == doctest::Approx(2.0 * std::log(2.0)));
    CHECK(eval_generator({Kind::kForwardKL}, 2.0) == doctest::Approx(-std::log(2.0)));
    CHECK(eval_generator({Kind::kHellinger}, 4.0) == doctest::Approx(1.0));
    CHECK(eval_generator({Kind::kAlphaHalf}, 4.0) == doctest::Approx(-4.0));
    CHECK_THROWS_AS(eval_generator({Kind::kReverseKL}, 0.0), std::domain_error);
    CHECK_THROWS_AS(eval_generator({Kind::kHellinger}, -1.0), std::domain_error);
  }

  TEST_CASE("curvature constants") {
    const std::array<double, 6> expected = {1.0, 1.0, 0.25, 0.5, 2.0, 1.0};
    for (std::size_t i = 0; i < kAllKinds.size(); ++i) {
      const DivergenceGenerator g{kAllKinds[i]};
      CHECK(second_derivative_at_one(g) == expected[i]);
      const double h = 1e-4;
      const double fd = (eval_generator(g, 1.0 + h) - 2.0 * eval_generator(g, 1.0) + eval_generator(g, 1.0 - h)) / (h * h);
      CHECK(std::abs(fd - expected[i]) < 1e-4);
    }
  }

  TEST_CASE("generators are convex") {
    for (Kind k : kAllKinds) {
      const DivergenceGenerator g{k};
      for (double u = 0.05; u < 5.0; u += 0.05) {
        const double h = 1e-3;
        CHECK(eval_generator(g, u + h) + eval_generator(g, u - h) - 2.0 * eval_generator(g, u) >= -1e-12);
      }
    }
  }

  TEST_CASE("continuous limits at zero") {
    CHECK(limit_at_zero({Kind::kReverseKL}) == 0.0);
    CHECK(std::isinf(limit_at_zero({Kind::kForwardKL})));
    CHECK(limit_at_zero({Kind::kJensenShannon}) == doctest::Approx(0.5 * std::log(2.0)));
    for (Kind k : {Kind::kReverseKL, Kind::kJensenShannon, Kind::kHellinger, Kind::kChiSquared, Kind::kAlphaHalf}) {
      CHECK(limit_at_zero({k}) == doctest::Approx(eval_generator({k}, 1e-12)).epsilon(1e-5));
    }
  }

  TEST_CASE("discrete distribution validation") {
    CHECK_THROWS(dist({0.5, 0.6}));
    CHECK_THROWS(dist({1.5, -0.5}));
    CHECK_NOTHROW(dist({0.25, 0.75}));
  }

  TEST_CASE("exact divergence hand examples") {
    const auto q = dist({0.5, 0.5});
    for (Kind k : kAllKinds) CHECK(exact_divergence_discrete(q, q, {k}) == 0.0);
    const auto p = dist({0.6, 0.4});
    CHECK(exact_divergence_discrete(p, q, {Kind::kChiSquared}) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(exact_divergence_discrete(p, q, {Kind::kReverseKL}) == doctest::Approx(0.020135513).epsilon(1e-8));
    CHECK(ratio_variance_discrete(p, q) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(ratio_variance_discrete(dist({1.0, 0.0}), q) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ratio_variance_discrete(q, q) == 0.0);
    // p = 0 where q > 0 uses the continuous limit.
    CHECK(exact_divergence_discrete(dist({1.0, 0.0}), q, {Kind::kReverseKL}) == doctest::Approx(std::log(2.0)));
    CHECK(std::isinf(exact_divergence_discrete(dist({1.0, 0.0}), q, {Kind::kForwardKL})));
  }

  TEST_CASE("support violation names the index") {
    try {
      exact_divergence_discrete(dist({0.2, 0.3, 0.5}), dist({0.5, 0.5, 0.0}), {Kind::kReverseKL});
      FAIL("expected SupportError");
    } catch (const SupportError& e) {
      CHECK(e.index() == 2);
    }
    CHECK_THROWS_AS(ratio_variance_discrete(dist({0.5, 0.5}), dist({1.0, 0.0})), SupportError);
  }

  TEST_CASE("quadratic approximation") {
    CHECK(quadratic_approx({Kind::kReverseKL}, 0.04) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(quadratic_approx({Kind::kChiSquared}, 0.04) == doctest::Approx(0.04).epsilon(1e-15));
    for (Kind k : kAllKinds) CHECK(quadratic_approx({k}, 0.0) == 0.0);
    CHECK(relative_error(0.0, 0.0) == 0.0);
    CHECK(relative_error(2.0, 1.0) == 0.5);
  }

  TEST_CASE("random discrete pairs: identities and non-negativity") {
    Rng rng = make_rng(11, Stream::kTest);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = 2 + static_cast<std::size_t>(trial % 30);
      auto family = random_discrete_perturbation(rng, k);
      double sum = 0.0;
      for (double d : family.direction) sum += d;
      CHECK(std::abs(sum) < 1e-15);
      const double s = scale_for_ratio_variance(family, 0.001 + 0.002 * (trial % 5));
      std::vector<double> pv(k);
      for (std::size_t i = 0; i < k; ++i) pv[i] = family.base[i] + s * family.direction[i];
      double total = 0.0;
      for (double v : pv) total += v;
      for (double& v : pv) v /= total;
      const auto p = dist(pv);
      const auto q = dist(family.base);
      CHECK(ratio_mean_discrete(p, q) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(exact_divergence_discrete(p, q, {Kind::kChiSquared}) ==
            doctest::Approx(ratio_variance_discrete(p, q)).epsilon(1e-12));
      for (Kind kind : kAllKinds) {
        CHECK(exact_divergence_discrete(p, q, {kind}) >= 0.0);
        CHECK(exact_divergence_discrete(q, q, {kind}) == 0.0);
      }
    }
  }

  TEST_CASE("relative error shrinks as the perturbation shrinks") {
    Rng rng = make_rng(5, Stream::kTest);
    const auto family = random_discrete_perturbation(rng, 16);
    std::vector<double> scales;
    for (double v : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) scales.push_back(scale_for_ratio_variance(family, v));
    for (Kind k : kAllKinds) {
      const auto rows = approximation_error_sweep({k}, family, scales);
      for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].ratio_variance <= rows[i].ratio_variance);
      if (k == Kind::kChiSquared) {
        for (const auto& r : rows) CHECK(r.relative_error <= 1e-12);
      } else {
        CHECK(rows.front().relative_error < rows.back().relative_error);
        CHECK(rows.front().relative_error < 0.01);
      }
    }
  }

  TEST_CASE("gaussian family closed forms") {
    CHECK(gaussian_ratio_variance(0.0) == 0.0);
    CHECK(gaussian_ratio_variance(0.1) == doctest::Approx(std::expm1(0.01)).epsilon(1e-15));
    CHECK(gaussian_divergence({Kind::kForwardKL}, 0.1) == doctest::Approx(0.005).epsilon(1e-14));
    CHECK(gaussian_divergence({Kind::kReverseKL}, 0.3) == doctest::Approx(0.045).epsilon(1e-14));
    CHECK(gaussian_divergence({Kind::kChiSquared}, 0.5) == doctest::Approx(std::expm1(0.25)).epsilon(1e-14));
    for (double mu : {0.02, 0.1, 0.5, 1.0}) {
      const double bc = std::exp(-mu * mu / 8.0);
      CHECK(gaussian_divergence({Kind::kHellinger}, mu) == doctest::Approx(2.0 * (1.0 - bc)).epsilon(1e-9));
      CHECK(gaussian_divergence({Kind::kAlphaHalf}, mu) == doctest::Approx(4.0 * (1.0 - bc)).epsilon(1e-9));
      CHECK(gaussian_divergence({Kind::kJensenShannon}, mu) ==
            doctest::Approx(simpson_gaussian(Kind::kJensenShannon, mu)).epsilon(1e-7));
    }
    const auto rows = approximation_error_sweep({Kind::kForwardKL}, GaussianMeanShift{}, std::vector<double>{0.1, 0.0});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].scale == 0.0);
    CHECK(rows[0].exact == 0.0);
    CHECK(rows[0].relative_error == 0.0);
    CHECK(rows[1].approx == doctest::Approx(0.5 * std::expm1(0.01)).epsilon(1e-14));
    CHECK(rows[1].relative_error == doctest::Approx(0.0050167).epsilon(1e-4));
  }

  TEST_CASE("sweep csv layout") {
    const std::vector<double> scales{0.1, 0.2};
    const auto rows = approximation_error_sweep({Kind::kHellinger}, GaussianMeanShift{}, scales);
    std::istringstream in(sweep_csv({Kind::kHellinger}, rows));
    std::string line;
    std::getline(in, line);
    CHECK(line == kSweepCsvHeader);
    int n = 0;
    while (std::getline(in, line)) {
      CHECK(line.rfind("hellinger,", 0) == 0);
      ++n;
    }
    CHECK(n == 2);
  }

  TEST_CASE("invalid family parameters") {
    DiscretePerturbation bad{{0.5, 0.5}, {0.4, -0.4}};
    CHECK_THROWS(approximation_error_sweep({Kind::kReverseKL}, bad, std::vector<double>{2.0}));
    CHECK_THROWS(random_discrete_perturbation(*std::make_unique<Rng>(1), 1));
  }

  TEST_CASE("agreement check bookkeeping") {
    std::vector<SweepRow> rows = {{0.1, 1e-3, 1.0, 1.01, 0.01}, {0.2, 2e-2, 1.0, 1.5, 0.5}};
    auto c = checks::check_agreement({Kind::kReverseKL}, rows);
    CHECK(c.passed);
    CHECK(c.rows_checked == 1);
    rows[0].relative_error = 0.06;
    CHECK_FALSE(checks::check_agreement({Kind::kReverseKL}, rows).passed);
    CHECK_FALSE(checks::check_agreement({Kind::kChiSquared}, rows).passed);
  }
}
