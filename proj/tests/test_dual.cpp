#include <doctest.h>

#include <cmath>

#include "r2vpo/dual.hpp"
#include "r2vpo/rng.hpp"

using namespace r2vpo;

TEST_SUITE("dual_control") {
  TEST_CASE("update examples") {
    const DualState s = initial_state(DualMode::kAdaptive, 0.04, 1e-3, 5e-3);
    CHECK(update_lambda(s, 1e-3, 0).lambda == 0.04);
    CHECK(update_lambda(initial_state(DualMode::kAdaptive, 0.0, 1e-3, 5e-3), 5e-4, 0).lambda == 0.0);
    const DualState up = update_lambda(s, 5e-3, 7);
    CHECK(up.lambda == 0.04 - 5e-3 * (1e-3 - 5e-3));
    CHECK(up.lambda == doctest::Approx(0.04002).epsilon(1e-15));
    REQUIRE(up.history.size() == 1);
    CHECK(up.history[0].iteration == 7);
    CHECK(up.history[0].measured_second_moment == 5e-3);
    CHECK_THROWS(update_lambda(s, -1e-9, 0));
  }

  TEST_CASE("initial states") {
    CHECK(initial_state(DualMode::kAdaptive, 0.0, 1e-3, 5e-3).lambda == 0.0);
    const auto f = initial_state(DualMode::kFixed, 0.06, 0.0, 5e-3);
    CHECK(f.lambda == 0.06);
    CHECK(f.mode == DualMode::kFixed);
    CHECK(initial_state(DualMode::kAdaptive, 0.04, 1e-3, 5e-3).lambda == 0.04);
    CHECK_THROWS(initial_state(DualMode::kFixed, -0.1, 0.0, 5e-3));
    CHECK_THROWS(initial_state(DualMode::kAdaptive, 0.0, 0.0, 0.0));
    CHECK(parse_dual_mode("adaptive") == DualMode::kAdaptive);
    CHECK(to_string(DualMode::kFixed) == "fixed");
    CHECK_THROWS(parse_dual_mode("pid"));
  }

  TEST_CASE("fixed mode never moves but records history") {
    DualState s = initial_state(DualMode::kFixed, 0.06, 0.0, 5e-3);
    for (int i = 0; i < 10; ++i) s = update_lambda(std::move(s), 0.5 * i, i);
    CHECK(s.lambda == 0.06);
    CHECK(s.history.size() == 10);
  }

  TEST_CASE("direction and non-negativity over random updates") {
    Rng rng = make_rng(1, Stream::kTest);
    DualState s = initial_state(DualMode::kAdaptive, 0.0, 1e-3, 5e-3);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
      const double measured = uniform(rng, 0.0, 3e-3);
      const double before = s.lambda;
      s = update_lambda(std::move(s), measured, i);
      const double change = s.lambda - before;
      if (s.lambda < 0.0) ++violations;
      if (s.lambda == 0.0 && measured <= s.delta) continue;
      if ((measured > s.delta && !(change > 0.0)) || (measured < s.delta && !(change < 0.0))) ++violations;
    }
    CHECK(violations == 0);
  }

  TEST_CASE("fixed point and linear growth") {
    DualState s = initial_state(DualMode::kAdaptive, 0.3, 1e-3, 5e-3);
    for (int i = 0; i < 100; ++i) s = update_lambda(std::move(s), 1e-3, i);
    CHECK(s.lambda == 0.3);
    DualState g = initial_state(DualMode::kAdaptive, 0.0, 1e-3, 5e-3);
    for (int i = 1; i <= 50; ++i) {
      g = update_lambda(std::move(g), 0.011, i);
      CHECK(g.lambda == doctest::Approx(i * 5e-3 * 0.01).epsilon(1e-12));
    }
  }
}
