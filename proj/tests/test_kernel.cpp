#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "markov/markov.hpp"
#include "oracles.hpp"

using namespace markov;

namespace {

Kernel two_state() {
  Mat T(2, 2);
  T << 0.7, 0.3, 0.2, 0.8;
  return Kernel(StateSpace::indexed(2), T);
}

}  // namespace

TEST_CASE("state space validation") {
  CHECK_THROWS_AS(StateSpace::make({}), ValidationError);
  CHECK_THROWS_AS(StateSpace::make({"a", "b", "a"}), ValidationError);
  auto sp = StateSpace::make({"x", "y"});
  CHECK(sp->size() == 2);
  CHECK(sp->index_of("y") == 1);
  CHECK(sp->index_of("z") == -1);
  CHECK(sp->label(0) == "x");
}

TEST_CASE("dist validation and constructors") {
  auto sp = StateSpace::indexed(3);
  CHECK_THROWS_AS(Dist(sp, (Vec(3) << 0.5, 0.5, 0.1).finished()),
                  ValidationError);
  CHECK_THROWS_AS(Dist(sp, (Vec(3) << 1.2, -0.2, 0.0).finished()),
                  ValidationError);
  CHECK_THROWS_AS(Dist(sp, (Vec(2) << 0.5, 0.5).finished()), ValidationError);

  auto d = Dist::point(sp, 1);
  CHECK(d(1) == 1.0);
  CHECK(d(0) == 0.0);
  auto u = Dist::uniform(sp);
  CHECK(u(2) == Catch::Approx(1.0 / 3));
}

TEST_CASE("kernel validation") {
  auto sp = StateSpace::indexed(2);
  Mat bad(2, 2);
  bad << 0.7, 0.4, 0.2, 0.8;  // row 0 sums to 1.1
  CHECK_THROWS_AS(Kernel(sp, bad), ValidationError);
  bad << 1.3, -0.3, 0.2, 0.8;
  CHECK_THROWS_AS(Kernel(sp, bad), ValidationError);
  CHECK_THROWS_AS(Kernel(sp, Mat::Identity(3, 3)), ValidationError);
}

TEST_CASE("step basics") {
  auto k = two_state();
  auto out = step(k, Dist::point(k.space(), 0));
  CHECK(out(0) == Catch::Approx(0.7).margin(1e-15));
  CHECK(out(1) == Catch::Approx(0.3).margin(1e-15));

  // identity kernel fixes every distribution
  auto sp3 = StateSpace::indexed(3);
  Kernel id(sp3, Mat::Identity(3, 3));
  Vec p(3);
  p << 0.2, 0.3, 0.5;
  auto fixed = step(id, Dist(sp3, p));
  CHECK((fixed.p() - p).cwiseAbs().maxCoeff() == 0.0);

  // stationary input is a fixed point
  auto pi = Dist(k.space(), (Vec(2) << 0.4, 0.6).finished());
  auto next = step(k, pi);
  CHECK(std::abs(next(0) - 0.4) < 1e-15);
  CHECK(std::abs(next(1) - 0.6) < 1e-15);

  CHECK_THROWS_AS(step(k, Dist::uniform(StateSpace::indexed(3))),
                  SpaceMismatch);
  // equal labels but distinct space objects still count as the same space
  CHECK_NOTHROW(step(k, Dist::uniform(StateSpace::indexed(2))));
}

TEST_CASE("n_step basics") {
  auto k = two_state();
  auto d0 = Dist::point(k.space(), 0);

  auto same = n_step(k, d0, 0);
  CHECK(same(0) == 1.0);

  auto two = n_step(k, d0, 2);
  CHECK(two(0) == Catch::Approx(0.55).margin(1e-12));
  CHECK(two(1) == Catch::Approx(0.45).margin(1e-12));

  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  Kernel flip(k.space(), swap);
  auto odd = n_step(flip, d0, 3);
  CHECK(odd(1) == 1.0);

  CHECK_THROWS_AS(n_step(k, d0, -1), ValidationError);
}

TEST_CASE("semigroup law and pushforward against matrix powers") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + int(rng() % 7);
    auto sp = StateSpace::indexed(n);
    Kernel k(sp, oracle::random_stochastic(rng, n));
    Dist rho(sp, oracle::random_dist(rng, n));

    const long M = long(rng() % 30), N = long(rng() % 30);
    auto split = n_step(k, n_step(k, rho, M), N);
    auto joint = n_step(k, rho, M + N);
    CHECK((split.p() - joint.p()).cwiseAbs().maxCoeff() < 1e-10);

    // delta_x pushforward matches the x-th row of T^N (repeated squaring)
    const long P = long(rng() % 40);
    const Mat TP = oracle::mat_power(k.T(), P);
    const int x = int(rng() % std::uint64_t(n));
    auto pushed = n_step(k, Dist::point(sp, x), P);
    CHECK((pushed.p().transpose() - TP.row(x)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("long products remain distributions") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 3 + int(rng() % 5);
    auto sp = StateSpace::indexed(n);
    Kernel k(sp, oracle::random_stochastic(rng, n));
    // n_step revalidates through the Dist constructor, so surviving 1e4
    // steps is itself the assertion
    auto far = n_step(k, Dist::uniform(sp), 10000);
    CHECK(std::abs(far.p().sum() - 1.0) <= 1e-12);
    CHECK(far.p().minCoeff() >= 0.0);
  }
}

TEST_CASE("stationary closed form and fixed point") {
  auto pi = stationary(two_state());
  CHECK(pi(0) == Catch::Approx(0.4).margin(1e-12));
  CHECK(pi(1) == Catch::Approx(0.6).margin(1e-12));

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + int(rng() % 9);
    auto sp = StateSpace::indexed(n);
    Kernel k(sp, oracle::random_stochastic(rng, n));  // positive => unique pi
    auto p = stationary(k);
    auto q = step(k, p);
    CHECK((q.p() - p.p()).cwiseAbs().sum() < 1e-10);
    // cross-check against Cesaro power iteration
    const Vec ref = oracle::stationary_power(k.T());
    CHECK((p.p() - ref).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("stationary non-uniqueness") {
  auto sp = StateSpace::indexed(2);
  try {
    stationary(Kernel(sp, Mat::Identity(2, 2)));
    FAIL("identity kernel must not have a unique stationary distribution");
  } catch (const NotUnique& e) {
    REQUIRE(e.basis.size() == 2);
    // basis spans {delta_0, delta_1} (each basis element is a point mass)
    for (const auto& b : e.basis)
      CHECK(*std::max_element(b.begin(), b.end()) == Catch::Approx(1.0));
  }

  Mat block(3, 3);
  block << 1, 0, 0, 0, 0.5, 0.5, 0, 0.5, 0.5;
  CHECK_THROWS_AS(stationary(Kernel(StateSpace::indexed(3), block)),
                  NotUnique);

  auto res = solve_stationary(Kernel(StateSpace::indexed(3), block));
  REQUIRE_FALSE(res.unique);
  REQUIRE(res.basis.size() == 2);
  // each basis distribution is invariant on its own block
  for (const auto& b : res.basis) {
    auto img = step(Kernel(StateSpace::indexed(3), block), b);
    CHECK((img.p() - b.p()).cwiseAbs().sum() < 1e-10);
  }
}

TEST_CASE("mixture decomposition") {
  auto d = decompose_mixture(two_state());
  CHECK(d.lam(0) == Catch::Approx(0.3).margin(1e-15));
  CHECK(d.lam(1) == Catch::Approx(0.2).margin(1e-15));
  CHECK(d.continuous_part(0, 1) == Catch::Approx(1.0));
  CHECK(d.continuous_part(1, 0) == Catch::Approx(1.0));

  auto sp = StateSpace::indexed(2);
  auto id = decompose_mixture(Kernel(sp, Mat::Identity(2, 2)));
  CHECK(id.lam(0) == 1.0);
  CHECK(id.continuous_part(0, 0) == 1.0);  // degenerate convention

  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  auto sw = decompose_mixture(Kernel(sp, swap));
  CHECK(sw.lam(0) == 1.0);
  CHECK(sw.continuous_part(0, 1) == 1.0);

  // reconstruction invariant on random kernels
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + int(rng() % 6);
    Kernel k(StateSpace::indexed(n), oracle::random_stochastic(rng, n));
    auto m = decompose_mixture(k);
    for (int i = 0; i < n; ++i) {
      Vec rebuilt = m.lam(i) * m.continuous_part.row(i).transpose() +
                    (1 - m.lam(i)) * m.singular_part.row(i).transpose();
      CHECK((rebuilt.transpose() - k.T().row(i)).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}
