#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "markov/errors.hpp"
#include "markov/graph.hpp"
#include "markov/kernel.hpp"

// Ergodic structure of a finite kernel: pi-irreducibility, periodicity, and
// the one-step positivity (Harris) condition, plus the classifier that ties
// them together.  All reachability questions reduce to the support digraph.

namespace markov {

/// States split by whether pi gives them positive mass.
struct NullSetPartition {
  Dist pi;
  std::vector<int> non_null;
  std::vector<int> null;
};

inline NullSetPartition null_partition(const Dist& pi) {
  NullSetPartition part{pi, {}, {}};
  for (int i = 0; i < pi.size(); ++i) {
    if (pi(i) > 0.0)
      part.non_null.push_back(i);
    else
      part.null.push_back(i);
  }
  return part;
}

/// A start state and a pi-non-null target it can never reach.
struct UnreachableWitness {
  int from;
  int target;
};

/// Cyclic classes A_1..A_J; step mass from A_j lands entirely in A_{j+1 mod J}.
using PeriodicDecomposition = std::vector<std::vector<int>>;

struct IrreducibilityResult {
  bool irreducible = false;
  std::optional<UnreachableWitness> witness;
};

namespace detail {

inline void require_invariant(const Kernel& k, const Dist& pi) {
  const Dist stepped = step(k, pi);
  const double err = (stepped.p() - pi.p()).cwiseAbs().sum();
  if (err > kDerivedTol)
    throw NotInvariant("pi is not invariant for the kernel (L1 residual " +
                       std::to_string(err) + ")");
}

}  // namespace detail

/// Can every start reach every pi-non-null state in at most n steps?
/// pi-null states may serve as intermediates; only non-null targets count.
inline IrreducibilityResult irreducibility(const Kernel& k, const Dist& pi) {
  require_same_space(k.space(), pi.space(), "irreducibility");
  detail::require_invariant(k, pi);
  const auto adj = graph::support_digraph(k.T());
  const auto part = null_partition(pi);
  for (int x0 = 0; x0 < k.size(); ++x0) {
    const auto reach = graph::reachable_from(adj, x0);
    for (int j : part.non_null) {
      if (!reach[static_cast<std::size_t>(j)])
        return {false, UnreachableWitness{x0, j}};
    }
  }
  return {true, std::nullopt};
}

/// gcd of directed cycle lengths on the support digraph; requires the digraph
/// to be strongly connected.
inline int period(const Kernel& k) {
  const auto adj = graph::support_digraph(k.T());
  if (!graph::is_strongly_connected(adj))
    throw Reducible("period: support digraph is not strongly connected");
  std::vector<int> all(static_cast<std::size_t>(k.size()));
  std::iota(all.begin(), all.end(), 0);
  return graph::component_period(adj, all);
}

/// Density-positivity sufficient condition on the N-step law: (T^N)_{x,j} > 0
/// for every start x and every non-null target j.  With use_mixture, the same
/// test is applied to the N-fold composition of the continuous mixture
/// component instead of T.
inline bool positivity_condition(const Kernel& k, const Dist& pi, int N,
                                 bool use_mixture = false) {
  require_same_space(k.space(), pi.space(), "positivity_condition");
  if (N < 1) throw ValidationError("positivity_condition requires N >= 1");
  const Mat base = use_mixture ? decompose_mixture(k).continuous_part : k.T();
  Mat power = base;
  for (int s = 1; s < N; ++s) power = Mat(power * base);
  const auto part = null_partition(pi);
  for (int x = 0; x < k.size(); ++x)
    for (int j : part.non_null)
      if (!(power(x, j) > 0.0)) return false;
  return true;
}

/// One-step positivity: T_{x,j} > 0 for every start x and non-null j.  On a
/// finite space this guarantees every chain visits every non-null state
/// infinitely often.
inline bool harris_condition(const Kernel& k, const Dist& pi) {
  return positivity_condition(k, pi, 1, false);
}

struct ErgodicityReport {
  bool irreducible = false;
  int period = 1;
  bool aperiodic = true;
  bool harris = false;
  std::optional<std::variant<UnreachableWitness, PeriodicDecomposition>> witness;
};

namespace detail {

/// Cyclic classes of a strongly connected vertex set: BFS levels mod J,
/// rooted at the smallest member so the labeling is deterministic.
inline PeriodicDecomposition cyclic_classes(
    const std::vector<std::vector<int>>& adj, const std::vector<int>& members,
    int J) {
  const auto levels = graph::bfs_levels(adj, members);
  PeriodicDecomposition classes(static_cast<std::size_t>(J));
  for (int v : members)
    classes[static_cast<std::size_t>(levels[static_cast<std::size_t>(v)] % J)]
        .push_back(v);
  for (auto& cls : classes) std::sort(cls.begin(), cls.end());
  return classes;
}

}  // namespace detail

/// Full structural classification.  Reducibility is detected structurally via
/// the stationary solver; the period is computed on the restriction to the
/// stationary support (the unique closed class), so transient states cannot
/// spoil it.
inline ErgodicityReport classify(const Kernel& k) {
  ErgodicityReport rep;
  const auto adj = graph::support_digraph(k.T());
  const StationaryResult st = solve_stationary(k);
  if (!st.unique) {
    rep.irreducible = false;
    // Two distinct closed classes can never reach one another; any cross
    // pair is a sound witness.
    const auto closed = graph::closed_classes(adj);
    rep.witness = UnreachableWitness{closed[0].front(), closed[1].front()};
    int g = 0;
    for (const auto& cls : closed)
      g = std::gcd(g, graph::component_period(adj, cls));
    rep.period = g == 0 ? 1 : g;
    rep.aperiodic = rep.period == 1;
    rep.harris = false;
    return rep;
  }
  const Dist& pi = st.basis.front();
  const auto irr = irreducibility(k, pi);
  rep.irreducible = irr.irreducible;
  if (!rep.irreducible) {
    rep.witness = *irr.witness;
    rep.harris = false;
    return rep;
  }
  // Unique pi: its support is the single closed class, strongly connected.
  const auto part = null_partition(pi);
  rep.period = graph::component_period(adj, part.non_null);
  rep.aperiodic = rep.period == 1;
  if (!rep.aperiodic)
    rep.witness = detail::cyclic_classes(adj, part.non_null, rep.period);
  rep.harris = rep.aperiodic && harris_condition(k, pi);
  return rep;
}

}  // namespace markov
