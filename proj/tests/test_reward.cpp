#include <doctest.h>

#include <cmath>

#include "hsc/reward.hpp"
#include "hsc/rng.hpp"

using namespace hsc;

TEST_CASE("force decomposition geometry") {
  SUBCASE("45 degrees") {
    const auto d = force_components({1, 1, 0}, {1, 0, 0});
    CHECK(d.angle == doctest::Approx(M_PI / 4));
    CHECK(d.parallel == doctest::Approx(1.0));
    CHECK(d.perpendicular == doctest::Approx(1.0));
  }
  SUBCASE("antiparallel") {
    const auto d = force_components({-2, 0, 0}, {1, 0, 0});
    CHECK(d.angle == doctest::Approx(M_PI));
    CHECK(d.parallel == doctest::Approx(-2.0));
    CHECK(d.perpendicular == doctest::Approx(0.0));
  }
  SUBCASE("degenerate force") {
    const auto d = force_components({0, 0, 0}, {0.3, -0.4, 0.1});
    CHECK(d.parallel == 0.0);
    CHECK(d.perpendicular == 0.0);
    CHECK(d.angle == 0.0);
  }
  SUBCASE("degenerate velocity") {
    const auto d = force_components({1, 2, 3}, {0, 0, 0});
    CHECK(d.parallel == 0.0);
    CHECK(d.perpendicular == 0.0);
  }
}

TEST_CASE("decomposition satisfies the Pythagorean identity") {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 f{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const Vec3 v{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const auto d = force_components(f, v);
    const double lhs = d.parallel * d.parallel + d.perpendicular * d.perpendicular;
    const double rhs = f.norm() * f.norm();
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(rhs, 1.0));
  }
}

TEST_CASE("decomposition is invariant to positive velocity scaling") {
  Rng rng(29);
  for (int i = 0; i < 200; ++i) {
    const Vec3 f{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const Vec3 v{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    if (v.norm() == 0.0) continue;
    const double lambda = rng.uniform(0.01, 50.0);
    const auto a = force_components(f, v);
    const auto b = force_components(f, lambda * v);
    CHECK(b.parallel == doctest::Approx(a.parallel));
    CHECK(b.perpendicular == doctest::Approx(a.perpendicular));
    CHECK(b.angle == doctest::Approx(a.angle));
  }
}

TEST_CASE("velocity weight branches") {
  CHECK(velocity_weight({0, 0, 0}, 0.2) == 0.0);
  CHECK(velocity_weight({0.4, 0, 0}, 0.2) == 1.0);
  CHECK(velocity_weight({0.1, 0, 0}, 0.2) == doctest::Approx(0.5));
}

TEST_CASE("velocity weight is monotone and continuous near zero") {
  const double x = 0.37;
  double prev = 0.0;
  for (double v = 1e-6; v < 2.0 * x; v *= 1.5) {
    const double phi = velocity_weight({v, 0, 0}, x);
    CHECK(phi >= prev);
    CHECK(phi <= 1.0);
    prev = phi;
  }
  CHECK(velocity_weight({1e-12, 0, 0}, x) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("step reward matches hand-worked cases") {
  RewardParams p;
  SUBCASE("aligned and fast") {
    p.x = 0.2;
    p.c = 2.0;
    CHECK(step_reward({1, 0, 0}, {0.5, 0, 0}, p) == doctest::Approx(-1.0));
  }
  SUBCASE("stationary user") {
    p.x = 0.2;
    p.c = 4.0;
    CHECK(step_reward({1, 2, 2}, {0, 0, 0}, p) == doctest::Approx(-3.0));
  }
  SUBCASE("orthogonal and slow") {
    p.x = 0.2;
    p.c = 2.0;
    CHECK(step_reward({0, 1, 0}, {0.1, 0, 0}, p) == doctest::Approx(-2.0));
  }
}

TEST_CASE("step reward is never positive") {
  Rng rng(31);
  RewardParams p;
  p.x = 0.5;
  p.c = 3.0;
  for (int i = 0; i < 100000; ++i) {
    Vec3 f{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double target = rng.uniform(0.0, p.c);
    if (f.norm() > 0.0) f = f * (target / f.norm());
    const Vec3 v{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    CHECK(step_reward(f, v, p) <= 0.0);
  }
}

TEST_CASE("aligned fast force maximizes the reward at magnitude c") {
  RewardParams p;
  p.x = 0.1;
  p.c = 3.0;
  const Vec3 v{1.0, 0, 0};  // above threshold
  double best = -1e9;
  for (double mag = 0.0; mag <= p.c + 1e-12; mag += p.c / 30.0) {
    const double r = step_reward({mag, 0, 0}, v, p);
    CHECK(r == doctest::Approx(mag - p.c));
    best = std::max(best, r);
  }
  CHECK(best == doctest::Approx(0.0));
}

TEST_CASE("step reward enforces the force bound") {
  RewardParams p;
  p.x = 0.5;
  p.c = 1.0;
  CHECK_THROWS_AS(step_reward({2, 0, 0}, {1, 0, 0}, p), ContractError);
}

TEST_CASE("terminal adjustment") {
  CHECK(terminal_adjustment(EpisodeOutcome::Success) == 10.0);
  CHECK(terminal_adjustment(EpisodeOutcome::Unsuccess) == -10.0);
  CHECK_THROWS_AS(terminal_adjustment(EpisodeOutcome::Fail), ContractError);
}
