#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "markov/contraction.hpp"
#include "markov/errors.hpp"
#include "markov/kernel.hpp"
#include "markov/rng.hpp"
#include "markov/structure.hpp"

// MCMC estimators and their error quantification: seeded chain simulation,
// empirical averages, autocovariances, effective sample size via Geyer's
// initial-positive-sequence truncation, exact estimator expectations, and the
// replicate study behind the CLT checks.

namespace markov {

/// Stable fingerprint of a kernel (labels + matrix bit patterns), used to tie
/// traces back to the kernel that produced them.
inline std::uint64_t kernel_id(const Kernel& k) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a 64
  auto eat = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& label : k.space()->labels()) eat(label.data(), label.size());
  for (int i = 0; i < k.size(); ++i)
    for (int j = 0; j < k.size(); ++j) {
      const double v = k.T()(i, j);
      eat(&v, sizeof(v));
    }
  return h;
}

/// A realized state sequence x_0..x_N together with the seed that produced it.
struct ChainTrace {
  std::vector<int> states;
  std::uint64_t seed = 0;
  std::uint64_t kernel_id = 0;
};

/// x_0 ~ rho, x_{n+1} ~ row x_n of T; fully determined by the seed.
inline ChainTrace sample_chain(const Kernel& k, const Dist& rho, long N,
                               std::uint64_t seed) {
  require_same_space(k.space(), rho.space(), "sample_chain");
  if (N < 0) throw ValidationError("sample_chain: N must be >= 0");
  CounterRng rng(seed);
  ChainTrace trace;
  trace.seed = seed;
  trace.kernel_id = markov::kernel_id(k);
  trace.states.reserve(static_cast<std::size_t>(N) + 1);
  int x = detail::sample_index(rho.p(), rng.next_double());
  trace.states.push_back(x);
  for (long s = 0; s < N; ++s) {
    x = detail::sample_index(k.T().row(x), rng.next_double());
    trace.states.push_back(x);
  }
  return trace;
}

namespace detail {

inline std::vector<double> series_along(const ChainTrace& trace, const Vec& f) {
  std::vector<double> y;
  y.reserve(trace.states.size());
  for (int s : trace.states) {
    if (s < 0 || s >= f.size())
      throw ValidationError("trace state index outside the range of f");
    y.push_back(f(s));
  }
  return y;
}

inline double series_mean(const std::vector<double>& y) {
  double acc = 0.0;
  for (double v : y) acc += v;
  return acc / static_cast<double>(y.size());
}

/// Biased-normalization lag-l autocovariance of a centered series.
inline double lag_cov(const std::vector<double>& y, double mean, std::size_t l) {
  const std::size_t n = y.size();
  double acc = 0.0;
  for (std::size_t i = 0; i + l < n; ++i)
    acc += (y[i] - mean) * (y[i + l] - mean);
  return acc / static_cast<double>(n);
}

struct AcfSummary {
  double xi0 = 0.0;            // variance estimate
  double iat = 1.0;            // 1 + 2 sum of kept autocorrelations
  std::vector<double> zeta;    // kept autocorrelations, lags 1..L
};

/// Geyer's initial-positive-sequence rule: sum autocorrelations in adjacent
/// even/odd pairs (zeta_{2m} + zeta_{2m+1}) and truncate at the first
/// nonpositive pair.  Pairing matters: it keeps the estimate positive and
/// lets strongly antithetic chains (negative zeta_1) report ESS above N+1.
inline AcfSummary geyer_acf(const std::vector<double>& y) {
  AcfSummary out;
  const double mean = series_mean(y);
  out.xi0 = lag_cov(y, mean, 0);
  if (!(out.xi0 > 0.0))
    throw DegenerateVariance("function is constant along the trace");
  const std::size_t max_lag = y.size() / 2;
  double pair_sum_total = 0.0;  // sum over kept pairs of (zeta_2m + zeta_2m+1)
  std::vector<double> kept;
  for (std::size_t m = 0;; ++m) {
    const std::size_t l_even = 2 * m, l_odd = 2 * m + 1;
    if (l_odd > max_lag) break;
    const double z_even =
        m == 0 ? 1.0 : lag_cov(y, mean, l_even) / out.xi0;
    const double z_odd = lag_cov(y, mean, l_odd) / out.xi0;
    if (z_even + z_odd <= 0.0) break;
    pair_sum_total += z_even + z_odd;
    if (m > 0) kept.push_back(z_even);
    kept.push_back(z_odd);
  }
  out.iat = -1.0 + 2.0 * pair_sum_total;
  // Guard for pathologically antithetic series where the kept sum is below
  // 1/2: clamp so the implied ESS never exceeds (N+1)^2.
  out.iat = std::max(out.iat, 1.0 / static_cast<double>(y.size()));
  out.zeta = std::move(kept);
  return out;
}

}  // namespace detail

/// Arithmetic mean of f along the trace.
inline double f_hat(const ChainTrace& trace, const Vec& f) {
  if (trace.states.empty()) throw ValidationError("f_hat: empty trace");
  return detail::series_mean(detail::series_along(trace, f));
}

/// Autocovariances xi_l for l = 0..max_lag with the biased 1/(N+1)
/// normalization (guarantees a nonnegative spectral estimate).
inline std::vector<double> autocovariance(const ChainTrace& trace, const Vec& f,
                                          std::size_t max_lag) {
  const auto y = detail::series_along(trace, f);
  if (2 * max_lag >= y.size())
    throw ValidationError("autocovariance: max_lag must be < trace length / 2");
  const double mean = detail::series_mean(y);
  std::vector<double> xi;
  xi.reserve(max_lag + 1);
  for (std::size_t l = 0; l <= max_lag; ++l)
    xi.push_back(detail::lag_cov(y, mean, l));
  return xi;
}

/// Autocorrelations zeta_l = xi_l / xi_0 for l = 1..max_lag.
inline std::vector<double> autocorrelation(const ChainTrace& trace, const Vec& f,
                                           std::size_t max_lag) {
  const auto xi = autocovariance(trace, f, max_lag);
  if (!(xi[0] > 0.0))
    throw DegenerateVariance("function is constant along the trace");
  std::vector<double> zeta;
  zeta.reserve(max_lag);
  for (std::size_t l = 1; l < xi.size(); ++l) zeta.push_back(xi[l] / xi[0]);
  return zeta;
}

struct EssResult {
  double ess = 0.0;
  double mcse = 0.0;
};

/// Effective sample size (N+1)/(1 + 2 sum zeta_l) with the truncated
/// autocorrelation sum, and the matching Monte Carlo standard error
/// sqrt(xi_0 / ess).
inline EssResult ess(const ChainTrace& trace, const Vec& f) {
  const auto y = detail::series_along(trace, f);
  const auto acf = detail::geyer_acf(y);
  const double n = static_cast<double>(y.size());
  const double e = n / acf.iat;
  return {e, std::sqrt(acf.xi0 / e)};
}

/// Full single-chain error report for one function.
struct EstimatorReport {
  double f_hat = 0.0;
  std::vector<double> autocorr;  // zeta_1..zeta_L up to the truncation lag
  double ess = 0.0;
  double mcse = 0.0;
  double var_f_hat_est = 0.0;  // xi_0 / ess = mcse^2
};

inline EstimatorReport estimator_report(const ChainTrace& trace, const Vec& f) {
  const auto y = detail::series_along(trace, f);
  const auto acf = detail::geyer_acf(y);
  EstimatorReport rep;
  rep.f_hat = detail::series_mean(y);
  rep.autocorr = acf.zeta;
  rep.ess = static_cast<double>(y.size()) / acf.iat;
  rep.var_f_hat_est = acf.xi0 / rep.ess;
  rep.mcse = std::sqrt(rep.var_f_hat_est);
  return rep;
}

/// E[f_hat_N] computed exactly through the N-step distributions: the mean of
/// E_{tau^n rho}[f] over n = 0..N.  No sampling involved.
inline double exact_estimator_mean(const Kernel& k, const Dist& rho, const Vec& f,
                                   long N) {
  require_same_space(k.space(), rho.space(), "exact_estimator_mean");
  if (f.size() != k.size())
    throw ValidationError("exact_estimator_mean: f length mismatch");
  if (N < 0) throw ValidationError("exact_estimator_mean: N must be >= 0");
  Vec p = rho.p();
  double acc = p.dot(f);
  for (long n = 1; n <= N; ++n) {
    p = (p.transpose() * k.T()).transpose();
    p /= p.sum();
    acc += p.dot(f);
  }
  return acc / static_cast<double>(N + 1);
}

struct ReplicateRecord {
  double f_hat = 0.0;
  double ess = 0.0;
  double mcse = 0.0;
  double standardized = 0.0;  // (f_hat - E_pi[f]) / mcse
};

struct CltSummary {
  std::vector<ReplicateRecord> replicates;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double ex_kurtosis = 0.0;
};

namespace detail {

/// Certify geometric ergodicity before a CLT claim: the chain must be
/// irreducible and aperiodic, and its worst-start TV curve must either reach
/// zero exactly or admit a log-linear fit with rate below one.
inline void require_geometric(const Kernel& k) {
  const ErgodicityReport rep = classify(k);
  if (!rep.irreducible)
    throw Reducible("clt_replicates requires an irreducible chain");
  if (!rep.aperiodic)
    throw ValidationError("clt_replicates requires an aperiodic chain (period " +
                          std::to_string(rep.period) + ")");
  const Dist pi = stationary(k);
  std::vector<std::pair<long, double>> curve;
  bool hit_zero = false;
  Mat power = k.T();
  for (long N = 1; N <= 40; ++N) {
    double worst = 0.0;
    for (int x = 0; x < k.size(); ++x) {
      const double tv_x = 0.5 * (power.row(x).transpose() - pi.p()).cwiseAbs().sum();
      worst = std::max(worst, tv_x);
    }
    if (worst == 0.0) {
      hit_zero = true;
      break;
    }
    curve.emplace_back(N, worst);
    power = Mat(power * k.T());
  }
  if (!hit_zero) geometric_fit(curve);  // throws DegenerateCurve if no decay
}

}  // namespace detail

/// Simulates R independent seeded chains, standardizes each estimate by its
/// own MCSE against the stationary mean, and summarizes the standardized
/// values by their first four moments.
inline CltSummary clt_replicates(const Kernel& k, const Dist& rho, const Vec& f,
                                 long N, long R, std::uint64_t seed) {
  require_same_space(k.space(), rho.space(), "clt_replicates");
  if (f.size() != k.size())
    throw ValidationError("clt_replicates: f length mismatch");
  if (R < 1000)
    throw ValidationError("clt_replicates: need at least 1000 replicates");
  if (N < 1) throw ValidationError("clt_replicates: N must be >= 1");
  detail::require_geometric(k);
  const Dist pi = stationary(k);
  const double pif = pi.p().dot(f);

  CltSummary summary;
  summary.replicates.reserve(static_cast<std::size_t>(R));
  std::vector<double> used;
  used.reserve(static_cast<std::size_t>(R));
  for (long r = 0; r < R; ++r) {
    const std::uint64_t sub = CounterRng::derive(seed, static_cast<std::uint64_t>(r) + 1);
    const ChainTrace trace = sample_chain(k, rho, N, sub);
    const auto y = detail::series_along(trace, f);
    ReplicateRecord rec;
    rec.f_hat = detail::series_mean(y);
    try {
      const auto acf = detail::geyer_acf(y);
      rec.ess = static_cast<double>(y.size()) / acf.iat;
      rec.mcse = std::sqrt(acf.xi0 / rec.ess);
      rec.standardized = (rec.f_hat - pif) / rec.mcse;
      used.push_back(rec.standardized);
    } catch (const DegenerateVariance&) {
      // A constant trace carries no scale; record it (ess 1, mcse 0) but
      // leave it out of the standardized moment summary.  At the chain
      // lengths where the CLT contract applies this never happens.
      rec.ess = 1.0;
      rec.mcse = 0.0;
      rec.standardized = std::numeric_limits<double>::quiet_NaN();
    }
    summary.replicates.push_back(rec);
  }
  if (used.size() < 2)
    throw DegenerateVariance(
        "clt_replicates: nearly all replicate traces were constant");

  const double Rd = static_cast<double>(used.size());
  double m = 0.0;
  for (double s : used) m += s;
  m /= Rd;
  double p2 = 0.0, p3 = 0.0, p4 = 0.0;
  for (double s : used) {
    const double d = s - m;
    p2 += d * d;
    p3 += d * d * d;
    p4 += d * d * d * d;
  }
  p2 /= Rd;
  p3 /= Rd;
  p4 /= Rd;
  summary.mean = m;
  summary.variance = p2 * Rd / (Rd - 1.0);
  summary.skewness = p3 / std::pow(p2, 1.5);
  summary.ex_kurtosis = p4 / (p2 * p2) - 3.0;
  return summary;
}

}  // namespace markov
