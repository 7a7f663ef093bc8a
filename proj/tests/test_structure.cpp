#include <catch2/catch_amalgamated.hpp>

#include <variant>

#include "markov/markov.hpp"
#include "oracles.hpp"

using namespace markov;

namespace {

Kernel two_state() {
  Mat T(2, 2);
  T << 0.7, 0.3, 0.2, 0.8;
  return Kernel(StateSpace::indexed(2), T);
}

Kernel cycle3() {
  Mat T(3, 3);
  T << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  return Kernel(StateSpace::indexed(3), T);
}

Kernel block22() {
  Mat T = Mat::Zero(4, 4);
  T.block(0, 0, 2, 2).setConstant(0.5);
  T.block(2, 2, 2, 2).setConstant(0.5);
  return Kernel(StateSpace::indexed(4), T);
}

}  // namespace

TEST_CASE("null partition") {
  auto sp = StateSpace::indexed(3);
  auto part = null_partition(Dist(sp, (Vec(3) << 0.5, 0.0, 0.5).finished()));
  CHECK(part.non_null == std::vector<int>{0, 2});
  CHECK(part.null == std::vector<int>{1});
}

TEST_CASE("irreducibility") {
  auto k = two_state();
  auto pi = Dist(k.space(), (Vec(2) << 0.4, 0.6).finished());
  CHECK(irreducibility(k, pi).irreducible);

  // non-invariant pi is rejected up front
  CHECK_THROWS_AS(irreducibility(k, Dist::uniform(k.space())), NotInvariant);

  // two blocks, uniform invariant over all four states: (0, 2) unreachable
  auto kb = block22();
  auto res = irreducibility(kb, Dist::uniform(kb.space()));
  REQUIRE_FALSE(res.irreducible);
  REQUIRE(res.witness.has_value());
  CHECK(res.witness->from == 0);
  CHECK(res.witness->target == 2);

  // pi-null targets do not matter: delta_0 invariant for an absorbing state
  Mat T(2, 2);
  T << 1, 0, 0.5, 0.5;
  Kernel absorbing(StateSpace::indexed(2), T);
  CHECK(irreducibility(absorbing, Dist::point(absorbing.space(), 0))
            .irreducible);
}

TEST_CASE("period") {
  CHECK(period(two_state()) == 1);
  CHECK(period(cycle3()) == 3);

  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(period(Kernel(StateSpace::indexed(2), swap)) == 2);

  CHECK_THROWS_AS(period(block22()), Reducible);

  // 4-cycle with a chord creating a 2-cycle: gcd(4, 2) = 2
  Mat T = Mat::Zero(4, 4);
  T(0, 1) = 1;
  T(1, 2) = 0.5;
  T(1, 0) = 0.5;
  T(2, 3) = 1;
  T(3, 0) = 1;
  CHECK(period(Kernel(StateSpace::indexed(4), T)) == 2);
}

TEST_CASE("positivity and harris conditions") {
  auto k = two_state();
  auto pi = Dist(k.space(), (Vec(2) << 0.4, 0.6).finished());
  CHECK(positivity_condition(k, pi, 1));
  CHECK(harris_condition(k, pi));

  auto kc = cycle3();
  auto u = Dist::uniform(kc.space());
  for (int N = 1; N <= 6; ++N) CHECK_FALSE(positivity_condition(kc, u, N));

  // lazy walk on the triangle: half stay, half move to a uniform neighbor.
  // One step misses the opposite corner, but the continuous part (the
  // neighbor walk) becomes strictly positive at N = 2 and stays so at 3.
  Mat W(3, 3);
  W << 0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5;
  Kernel lazy(StateSpace::indexed(3), W);
  CHECK(positivity_condition(lazy, u, 3, true));
  CHECK_FALSE(positivity_condition(lazy, u, 1, true));

  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  Kernel flip(StateSpace::indexed(2), swap);
  CHECK_FALSE(harris_condition(flip, Dist::uniform(flip.space())));

  // one all-positive row does not rescue sparse rows
  Mat sparse = Mat::Zero(4, 4);
  sparse.row(0).setConstant(0.25);
  sparse(1, 2) = 1;
  sparse(2, 3) = 1;
  sparse(3, 0) = 1;
  Kernel mixed(StateSpace::indexed(4), sparse);
  CHECK_FALSE(harris_condition(mixed, stationary(mixed)));
}

TEST_CASE("mixture positivity implies irreducibility") {
  std::mt19937_64 rng(64);
  int hits = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + int(rng() % 6);
    Kernel k(StateSpace::indexed(n), oracle::random_stochastic(rng, n));
    auto pi = stationary(k);
    for (int N = 1; N <= 3; ++N) {
      if (positivity_condition(k, pi, N, true)) {
        ++hits;
        CHECK(irreducibility(k, pi).irreducible);
        break;
      }
    }
  }
  CHECK(hits > 0);  // the sufficiency check must actually fire
}

TEST_CASE("classify: canonical examples") {
  auto rep = classify(two_state());
  CHECK(rep.irreducible);
  CHECK(rep.period == 1);
  CHECK(rep.aperiodic);
  CHECK(rep.harris);
  CHECK_FALSE(rep.witness.has_value());

  auto rep3 = classify(cycle3());
  CHECK(rep3.irreducible);
  CHECK(rep3.period == 3);
  CHECK_FALSE(rep3.aperiodic);
  CHECK_FALSE(rep3.harris);
  REQUIRE(rep3.witness.has_value());
  const auto& dec = std::get<PeriodicDecomposition>(*rep3.witness);
  REQUIRE(dec.size() == 3);
  CHECK(dec[0] == std::vector<int>{0});
  CHECK(dec[1] == std::vector<int>{1});
  CHECK(dec[2] == std::vector<int>{2});
}

TEST_CASE("classify: reducible chains carry a sound witness") {
  auto kb = block22();
  auto rep = classify(kb);
  REQUIRE_FALSE(rep.irreducible);
  CHECK_FALSE(rep.harris);
  REQUIRE(rep.witness.has_value());
  const auto& w = std::get<UnreachableWitness>(*rep.witness);
  // soundness: the witness target is never reached, N up to 2n exhausts
  // all path lengths on 4 states
  for (long N = 1; N <= 8; ++N) {
    const Mat TN = oracle::mat_power(kb.T(), N);
    CHECK(TN(w.from, w.target) == 0.0);
  }

  auto id = classify(Kernel(StateSpace::indexed(2), Mat::Identity(2, 2)));
  CHECK_FALSE(id.irreducible);
  CHECK(id.period == 1);
}

TEST_CASE("periodic decomposition: step mass moves one class forward") {
  // 6 states, strict alternation between evens and odds with ragged weights
  Mat T = Mat::Zero(6, 6);
  T(0, 1) = 0.5;
  T(0, 3) = 0.5;
  T(2, 3) = 0.3;
  T(2, 5) = 0.7;
  T(4, 1) = 1.0;
  T(1, 0) = 0.2;
  T(1, 2) = 0.8;
  T(3, 4) = 0.6;
  T(3, 0) = 0.4;
  T(5, 2) = 1.0;
  Kernel k(StateSpace::indexed(6), T);
  auto rep = classify(k);
  REQUIRE(rep.irreducible);
  REQUIRE(rep.period == 2);
  const auto& dec = std::get<PeriodicDecomposition>(*rep.witness);
  REQUIRE(dec.size() == 2);
  CHECK(dec[0] == std::vector<int>{0, 2, 4});
  CHECK(dec[1] == std::vector<int>{1, 3, 5});
  for (std::size_t j = 0; j < dec.size(); ++j) {
    const auto& next = dec[(j + 1) % dec.size()];
    for (int x : dec[j]) {
      double mass = 0;
      for (int y : next) mass += T(x, y);
      CHECK(mass == 1.0);  // exact concentration, no tolerance
    }
  }
}

TEST_CASE("classify: aperiodic irreducible chains forget their start") {
  std::mt19937_64 rng(4096);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + int(rng() % 6);
    auto sp = StateSpace::indexed(n);
    // strictly positive rows
    Mat T(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        T(i, j) = 0.05 + std::generate_canonical<double, 53>(rng);
      T.row(i) /= T.row(i).sum();
    }
    Kernel k(sp, T);
    auto rep = classify(k);
    REQUIRE(rep.irreducible);
    REQUIRE(rep.aperiodic);
    auto pi = stationary(k);
    const long N = long(std::ceil(10.0 * n / oracle::spectral_gap(T)));
    for (int x = 0; x < n; ++x)
      CHECK(tv(n_step(k, Dist::point(sp, x), N), pi) <= 1e-8);
  }
}
