#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "markov/contraction.hpp"
#include "markov/errors.hpp"
#include "markov/kernel.hpp"
#include "markov/rng.hpp"

// Markov couplings as kernels on the product space, the Nummelin splitting
// construction driven by a lag-1 minorization certificate, and seeded
// simulation of coupled chains for empirical TV bounds.

namespace markov {

/// A Markov transition on the product space X x X whose two coordinate
/// marginals reproduce the base kernel.  Pair (x, y) lives at flat index
/// x * n + y.
class ProductKernel {
 public:
  ProductKernel(Kernel base, Mat T2) : base_(std::move(base)), T2_(std::move(T2)) {
    const int n = base_.size();
    const int n2 = n * n;
    if (T2_.rows() != n2 || T2_.cols() != n2)
      throw ValidationError("ProductKernel: matrix must be n^2 x n^2");
    for (int p = 0; p < n2; ++p) {
      double sum = 0.0;
      for (int q = 0; q < n2; ++q) {
        if (!(T2_(p, q) >= 0.0))
          throw ValidationError("ProductKernel: negative entry in row " +
                                std::to_string(p));
        sum += T2_(p, q);
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError("ProductKernel: row " + std::to_string(p) +
                              " is not stochastic");
    }
    // Marginality is the defining property of a Markov coupling: summing a
    // pair row over either coordinate must reproduce the base rows.
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        const int p = x * n + y;
        for (int t = 0; t < n; ++t) {
          double first = 0.0, second = 0.0;
          for (int s = 0; s < n; ++s) {
            first += T2_(p, t * n + s);
            second += T2_(p, s * n + t);
          }
          if (std::abs(first - base_.T()(x, t)) > kDerivedTol ||
              std::abs(second - base_.T()(y, t)) > kDerivedTol)
            throw ValidationError(
                "ProductKernel: marginality fails at pair row (" +
                std::to_string(x) + "," + std::to_string(y) + ")");
        }
      }
  }

  const Kernel& base() const { return base_; }
  const Mat& T2() const { return T2_; }
  int n() const { return base_.size(); }
  int pair_index(int x, int y) const { return x * base_.size() + y; }
  std::pair<int, int> unpair(int idx) const {
    return {idx / base_.size(), idx % base_.size()};
  }

 private:
  Kernel base_;
  Mat T2_;
};

/// The independent coupling: both coordinates evolve by T with no
/// interaction, T2[(x,y),(x',y')] = T(x,x') T(y,y').
inline ProductKernel independent_product(const Kernel& k) {
  const int n = k.size();
  Mat T2(n * n, n * n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int xp = 0; xp < n; ++xp)
        for (int yp = 0; yp < n; ++yp)
          T2(x * n + y, xp * n + yp) = k.T()(x, xp) * k.T()(y, yp);
  return ProductKernel(k, std::move(T2));
}

struct SplittingConfig {
  MinorizationCertificate cert;  // must have lag M = 1
  std::uint64_t seed = 0;
};

/// The Nummelin splitting coupling.  Merged pairs (x, x) move together.  An
/// unmerged pair with both coordinates in the small set merges with
/// probability eps onto a shared draw from nu, and otherwise evolves
/// independently through the residual rows (T_x - eps nu) / (1 - eps).  All
/// other pairs evolve independently.
inline ProductKernel splitting_kernel(const Kernel& k, const SplittingConfig& cfg) {
  const auto& cert = cfg.cert;
  if (cert.M != 1)
    throw ValidationError("splitting_kernel requires a lag-1 certificate");
  require_same_space(k.space(), cert.nu.space(), "splitting_kernel");
  const int n = k.size();
  const double eps = cert.eps;
  if (!(eps > 0.0 && eps <= 1.0))
    throw InvalidCertificate("splitting_kernel: eps must lie in (0, 1]");
  std::vector<bool> in_C(static_cast<std::size_t>(n), false);
  for (int x : cert.C) {
    if (x < 0 || x >= n)
      throw InvalidCertificate("splitting_kernel: small-set index out of range");
    in_C[static_cast<std::size_t>(x)] = true;
  }

  // Residual rows for small-set states; rescaled by their own sum so the
  // split reconstructs the base row to machine precision.
  Mat residual = Mat::Zero(n, n);
  if (eps < 1.0) {
    for (int x = 0; x < n; ++x) {
      if (!in_C[static_cast<std::size_t>(x)]) continue;
      for (int j = 0; j < n; ++j) {
        const double r = k.T()(x, j) - eps * cert.nu(j);
        if (r < -1e-12)
          throw InvalidCertificate(
              "splitting residual is negative at (" + std::to_string(x) + "," +
              std::to_string(j) + "); certificate does not minorize the kernel");
        residual(x, j) = std::max(r, 0.0);
      }
      residual.row(x) /= residual.row(x).sum();
    }
  } else {
    for (int x = 0; x < n; ++x)
      for (int j = 0; j < n; ++j)
        if (in_C[static_cast<std::size_t>(x)] &&
            k.T()(x, j) - cert.nu(j) < -1e-12)
          throw InvalidCertificate(
              "splitting: eps = 1 but rows over C differ from nu");
  }

  Mat T2 = Mat::Zero(n * n, n * n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const int p = x * n + y;
      if (x == y) {
        for (int t = 0; t < n; ++t) T2(p, t * n + t) = k.T()(x, t);
      } else if (in_C[static_cast<std::size_t>(x)] &&
                 in_C[static_cast<std::size_t>(y)]) {
        for (int t = 0; t < n; ++t) T2(p, t * n + t) += eps * cert.nu(t);
        if (eps < 1.0)
          for (int xp = 0; xp < n; ++xp)
            for (int yp = 0; yp < n; ++yp)
              T2(p, xp * n + yp) +=
                  (1.0 - eps) * residual(x, xp) * residual(y, yp);
      } else {
        for (int xp = 0; xp < n; ++xp)
          for (int yp = 0; yp < n; ++yp)
            T2(p, xp * n + yp) = k.T()(x, xp) * k.T()(y, yp);
      }
    }
  return ProductKernel(k, std::move(T2));
}

struct CoupledTrace {
  std::vector<std::pair<int, int>> pairs;  // length N+1
  std::optional<long> merge_time;
  std::uint64_t seed = 0;
};

/// Runs the product chain for N steps from (x0, y0) with a counter-based
/// generator, so traces are bit-reproducible across platforms.  merge_time is
/// the start of the trailing run of equal coordinates (for splitting kernels
/// this is the first meeting, since merged pairs never separate).
inline CoupledTrace simulate_coupled(const ProductKernel& pk, int x0, int y0,
                                     long N, std::uint64_t seed) {
  const int n = pk.n();
  if (x0 < 0 || x0 >= n || y0 < 0 || y0 >= n)
    throw ValidationError("simulate_coupled: start state out of range");
  if (N < 1) throw ValidationError("simulate_coupled: N must be >= 1");
  CounterRng rng(seed);
  CoupledTrace trace;
  trace.seed = seed;
  trace.pairs.reserve(static_cast<std::size_t>(N) + 1);
  trace.pairs.emplace_back(x0, y0);
  int p = pk.pair_index(x0, y0);
  for (long s = 0; s < N; ++s) {
    p = detail::sample_index(pk.T2().row(p), rng.next_double());
    trace.pairs.push_back(pk.unpair(p));
  }
  // Earliest index from which the coordinates agree through the end.
  long mt = -1;
  for (long t = static_cast<long>(trace.pairs.size()) - 1; t >= 0; --t) {
    const auto& [x, y] = trace.pairs[static_cast<std::size_t>(t)];
    if (x != y) break;
    mt = t;
  }
  if (mt >= 0) trace.merge_time = mt;
  return trace;
}

/// Fraction of replicates whose coordinates still differ at step N: a Monte
/// Carlo estimate of the diagonal-complement mass gamma(D^c) of the N-step
/// coupling, which upper-bounds the TV distance of the marginal laws.
inline double empirical_tv_bound(const ProductKernel& pk, int x0, int y0, long N,
                                 long replicates, std::uint64_t seed) {
  const int n = pk.n();
  if (x0 < 0 || x0 >= n || y0 < 0 || y0 >= n)
    throw ValidationError("empirical_tv_bound: start state out of range");
  if (replicates < 100)
    throw ValidationError("empirical_tv_bound: need at least 100 replicates");
  if (N < 1) throw ValidationError("empirical_tv_bound: N must be >= 1");
  long unmerged = 0;
  for (long r = 0; r < replicates; ++r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r) + 1);
    int p = pk.pair_index(x0, y0);
    for (long s = 0; s < N; ++s)
      p = detail::sample_index(pk.T2().row(p), rng.next_double());
    const auto [x, y] = pk.unpair(p);
    if (x != y) ++unmerged;
  }
  return static_cast<double>(unmerged) / static_cast<double>(replicates);
}

/// Tab-separated trace export, one line per step: `step x y merged`.
inline void export_trace(std::ostream& os, const CoupledTrace& trace) {
  os << "step\tx\ty\tmerged\n";
  for (std::size_t t = 0; t < trace.pairs.size(); ++t) {
    const bool merged =
        trace.merge_time && static_cast<long>(t) >= *trace.merge_time;
    os << t << '\t' << trace.pairs[t].first << '\t' << trace.pairs[t].second
       << '\t' << (merged ? 1 : 0) << '\n';
  }
}

}  // namespace markov
