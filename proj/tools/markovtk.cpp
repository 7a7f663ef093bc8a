// markovtk: batch front end over the markov:: headers.  Ingests a JSON kernel
// spec, runs the requested analysis, and writes machine-readable reports
// (JSON) and plot-ready curves (CSV).  All output is deterministic: the only
// sources of variation are the spec contents and the command-line flags, and
// every random draw is derived from --seed.
//
// Exit codes: 0 success, 2 validation failure, 3 ergodicity gate failure
// (--require-ergodic on a reducible or periodic chain).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "markov/markov.hpp"

using namespace markov;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNotErgodic = 3;

struct Loaded {
  io::KernelSpec spec;
  Kernel kernel;
};

Loaded load(const std::string& path) {
  io::KernelSpec spec = io::load_kernel_spec(path);
  Kernel k = io::to_kernel(spec);
  return {std::move(spec), std::move(k)};
}

int state_index(const SpacePtr& space, const std::string& label,
                const std::string& flag) {
  const int i = space->index_of(label);
  if (i < 0) throw ValidationError(flag + ": unknown state '" + label + "'");
  return i;
}

std::string out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

void write_report(const std::string& dir, const json& report) {
  const std::string path = out_path(dir, "report.json");
  io::write_json(path, report);
  std::cout << "wrote " << path << '\n';
}

/// Worst-start total variation to pi after N steps, N = 1..max_n.
std::vector<std::pair<long, double>> worst_tv_curve(const Kernel& k,
                                                    const Dist& pi,
                                                    long max_n) {
  const int n = k.size();
  std::vector<Vec> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) rows.push_back(Vec::Unit(n, x));
  std::vector<std::pair<long, double>> curve;
  for (long N = 1; N <= max_n; ++N) {
    double worst = 0.0;
    for (auto& p : rows) {
      p = (p.transpose() * k.T()).transpose();
      p /= p.sum();
      worst = std::max(worst, 0.5 * (p - pi.p()).cwiseAbs().sum());
    }
    curve.emplace_back(N, worst);
  }
  return curve;
}

/// Worst-pair Wasserstein-1 distance between N-step laws, N = 1..max_n.
std::vector<std::pair<long, double>> worst_w1_curve(const Kernel& k,
                                                    const DistanceFn& g,
                                                    long max_n) {
  const int n = k.size();
  std::vector<Vec> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) rows.push_back(Vec::Unit(n, x));
  std::vector<std::pair<long, double>> curve;
  for (long N = 1; N <= max_n; ++N) {
    for (auto& p : rows) {
      p = (p.transpose() * k.T()).transpose();
      p /= p.sum();
    }
    double worst = 0.0;
    for (int x = 0; x < n; ++x)
      for (int y = x + 1; y < n; ++y)
        worst = std::max(
            worst, wasserstein1(Dist(k.space(), rows[static_cast<std::size_t>(x)]),
                                Dist(k.space(), rows[static_cast<std::size_t>(y)]),
                                g)
                       .value);
    curve.emplace_back(N, worst);
  }
  return curve;
}

/// The shared Report body for `analyze` and `estimate`: classification,
/// stationary law, convergence curves, and whichever certificates the spec
/// enables.  Sections that do not apply are explicit nulls.
json base_report(const io::KernelSpec& spec, const Kernel& k,
                 const std::string& output, long max_n) {
  json report;
  const ErgodicityReport rep = classify(k);
  report["ergodicity"] = io::ergodicity_to_json(rep, k.space());

  std::optional<Dist> pi;
  try {
    pi = stationary(k);
  } catch (const NotUnique&) {
    // reducible with several invariant laws; convergence sections stay null
  }
  if (pi) {
    report["stationary"] = io::dist_to_json(*pi);
    const auto curve = worst_tv_curve(k, *pi, max_n);
    report["tv_curve"] = io::curve_to_json(curve);
    io::write_curve_csv(out_path(output, "tv_curve.csv"), "tv", curve);
    try {
      report["geometric_fit"] = io::geometric_bound_to_json(geometric_fit(curve));
    } catch (const DegenerateCurve&) {
      report["geometric_fit"] = nullptr;
    }
  } else {
    report["stationary"] = nullptr;
    report["tv_curve"] = nullptr;
    report["geometric_fit"] = nullptr;
  }

  const auto g = io::to_distance(spec);
  if (g && k.size() >= 2) {
    report["ricci"] = json{{"kappa", ricci_lower_bound(k, *g)}};
    const auto wcurve = worst_w1_curve(k, *g, max_n);
    report["wasserstein_curve"] = io::curve_to_json(wcurve);
    io::write_curve_csv(out_path(output, "wasserstein_curve.csv"), "w1", wcurve);
  } else {
    report["ricci"] = nullptr;
    report["wasserstein_curve"] = nullptr;
  }

  if (spec.small_set) {
    try {
      const auto cert =
          verify_minorization(k, io::to_indices(*spec.small_set, k.space()), 1);
      report["minorization"] = io::minorization_to_json(cert, k.space());
    } catch (const NoOverlap& e) {
      std::cerr << "note: small_set yields no minorization: " << e.what() << '\n';
      report["minorization"] = nullptr;
    }
  } else {
    report["minorization"] = nullptr;
  }

  if (spec.drift) {
    try {
      const auto cert = verify_drift(k, spec.drift->V,
                                     io::to_indices(spec.drift->C, k.space()));
      report["drift"] = io::drift_to_json(cert, k.space());
    } catch (const DriftFailure& e) {
      std::cerr << "note: drift condition fails: " << e.what() << '\n';
      report["drift"] = nullptr;
    }
  } else {
    report["drift"] = nullptr;
  }
  return report;
}

bool ergodic_gate(const Kernel& k) {
  const ErgodicityReport rep = classify(k);
  if (rep.irreducible && rep.aperiodic) return true;
  std::cerr << "chain fails the ergodicity gate: irreducible="
            << (rep.irreducible ? "yes" : "no") << ", period=" << rep.period
            << '\n';
  return false;
}

bool maybe_dump(const io::KernelSpec& spec, bool flag) {
  if (flag) std::cout << io::serialize_kernel_spec(spec).dump(2) << '\n';
  return flag;
}

// ---------------------------------------------------------------------------

struct AnalyzeOpts {
  std::string spec_path;
  std::string output = ".";
  long max_n = 30;
  bool dump_spec = false;
  bool require_ergodic = false;
};

int run_analyze(const AnalyzeOpts& o) {
  auto [spec, k] = load(o.spec_path);
  if (maybe_dump(spec, o.dump_spec)) return kExitOk;
  if (o.require_ergodic && !ergodic_gate(k)) return kExitNotErgodic;
  json report;
  report["command"] = "analyze";
  report.update(base_report(spec, k, o.output, o.max_n));
  report["estimator"] = nullptr;
  report["clt"] = nullptr;
  write_report(o.output, report);
  return kExitOk;
}

struct EstimateOpts {
  std::string spec_path;
  std::string output = ".";
  std::string function;
  std::string x0;
  long iters = 1000;
  long replicates = 0;
  long max_n = 30;
  std::uint64_t seed = 0;
  bool dump_spec = false;
  bool require_ergodic = false;
};

int run_estimate(const EstimateOpts& o) {
  auto [spec, k] = load(o.spec_path);
  if (maybe_dump(spec, o.dump_spec)) return kExitOk;
  if (o.require_ergodic && !ergodic_gate(k)) return kExitNotErgodic;

  const auto it = spec.functions.find(o.function);
  if (it == spec.functions.end()) {
    std::string names;
    for (const auto& [name, v] : spec.functions) {
      (void)v;
      names += (names.empty() ? "" : ", ") + name;
    }
    std::cerr << "error: unknown function '" << o.function
              << "'; available: " << (names.empty() ? "(none)" : names) << '\n';
    return kExitValidation;
  }
  const Vec& f = it->second;
  const int x0 = o.x0.empty() ? 0 : state_index(k.space(), o.x0, "--x0");

  json est;
  if (o.iters == 0) {
    // No transitions: the estimate is the function at the start state, and
    // there is exactly one effective sample.
    est["f_hat"] = f(x0);
    est["autocorr"] = json::array();
    est["ess"] = 1.0;
    est["mcse"] = 0.0;
    est["var_f_hat_est"] = 0.0;
  } else {
    const auto trace = sample_chain(k, Dist::point(k.space(), x0), o.iters, o.seed);
    est = io::estimator_to_json(estimator_report(trace, f));
  }

  json report;
  report["command"] = "estimate";
  report["function"] = o.function;
  report["x0"] = k.space()->label(x0);
  report["iters"] = o.iters;
  report["seed"] = o.seed;
  report.update(base_report(spec, k, o.output, o.max_n));
  report["estimator"] = est;
  if (o.replicates > 0) {
    const auto s = clt_replicates(k, Dist::point(k.space(), x0), f, o.iters,
                                  o.replicates, o.seed);
    report["clt"] = io::clt_to_json(s);
    io::write_replicates_csv(out_path(o.output, "replicates.csv"), s);
  } else {
    report["clt"] = nullptr;
  }
  write_report(o.output, report);
  return kExitOk;
}

struct CoupleOpts {
  std::string spec_path;
  std::string output = ".";
  std::string x0;
  std::string y0;
  long iters = 10;
  long replicates = 10000;
  std::uint64_t seed = 0;
  bool dump_spec = false;
};

int run_couple(const CoupleOpts& o) {
  auto [spec, k] = load(o.spec_path);
  if (maybe_dump(spec, o.dump_spec)) return kExitOk;
  if (!spec.small_set) {
    std::cerr << "error: couple requires a 'small_set' section in the spec\n";
    return kExitValidation;
  }
  const auto cert =
      verify_minorization(k, io::to_indices(*spec.small_set, k.space()), 1);
  const auto pk = splitting_kernel(k, SplittingConfig{cert, o.seed});
  const int x0 = state_index(k.space(), o.x0, "--x0");
  const int y0 = state_index(k.space(), o.y0, "--y0");

  const auto trace = simulate_coupled(pk, x0, y0, o.iters, o.seed);
  {
    std::ofstream tf(out_path(o.output, "trace.tsv"), std::ios::binary);
    if (!tf) throw Error("cannot write trace.tsv");
    export_trace(tf, trace);
  }
  const double est = empirical_tv_bound(pk, x0, y0, o.iters, o.replicates, o.seed);
  const double exact = tv(n_step(k, Dist::point(k.space(), x0), o.iters),
                          n_step(k, Dist::point(k.space(), y0), o.iters));

  json report;
  report["command"] = "couple";
  report["x0"] = k.space()->label(x0);
  report["y0"] = k.space()->label(y0);
  report["iters"] = o.iters;
  report["replicates"] = o.replicates;
  report["seed"] = o.seed;
  report["epsilon"] = cert.eps;
  report["merge_time"] =
      trace.merge_time ? json(*trace.merge_time) : json(nullptr);
  report["empirical_tv_bound"] = est;
  report["exact_tv"] = exact;
  write_report(o.output, report);
  return kExitOk;
}

struct MetricsOpts {
  std::string spec_path;
  std::string output = ".";
  std::string mu;
  std::string nu;
  bool dump_spec = false;
};

/// Distribution forms: delta:LABEL | stationary | uniform | nstep:LABEL:N.
Dist named_dist(const Kernel& k, const std::string& form,
                const std::string& flag) {
  if (form == "stationary") return stationary(k);
  if (form == "uniform") return Dist::uniform(k.space());
  if (form.rfind("delta:", 0) == 0)
    return Dist::point(k.space(), state_index(k.space(), form.substr(6), flag));
  if (form.rfind("nstep:", 0) == 0) {
    const std::string rest = form.substr(6);
    const auto cut = rest.rfind(':');
    if (cut == std::string::npos || cut == 0 || cut + 1 == rest.size())
      throw ValidationError(flag + ": nstep form is nstep:LABEL:N");
    long N = 0;
    try {
      N = std::stol(rest.substr(cut + 1));
    } catch (const std::exception&) {
      throw ValidationError(flag + ": bad step count in '" + form + "'");
    }
    const int x = state_index(k.space(), rest.substr(0, cut), flag);
    return n_step(k, Dist::point(k.space(), x), N);
  }
  throw ValidationError(flag + ": unrecognized distribution '" + form +
                       "' (use delta:LABEL, stationary, uniform, or nstep:LABEL:N)");
}

int run_metrics(const MetricsOpts& o) {
  auto [spec, k] = load(o.spec_path);
  if (maybe_dump(spec, o.dump_spec)) return kExitOk;
  const Dist mu = named_dist(k, o.mu, "--mu");
  const Dist nu = named_dist(k, o.nu, "--nu");
  const double tvd = tv(mu, nu);
  std::optional<double> w1;
  if (const auto g = io::to_distance(spec)) w1 = wasserstein1(mu, nu, *g).value;

  std::cout << "tv=" << io::fmt_double(tvd) << '\n';
  if (w1) std::cout << "wasserstein1=" << io::fmt_double(*w1) << '\n';

  json report;
  report["command"] = "metrics";
  report["mu"] = o.mu;
  report["nu"] = o.nu;
  report["tv"] = tvd;
  report["wasserstein1"] = w1 ? json(*w1) : json(nullptr);
  write_report(o.output, report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-chain convergence and estimator toolkit"};
  app.require_subcommand(1);

  AnalyzeOpts a;
  auto* ca = app.add_subcommand("analyze", "classify a kernel and report its convergence profile");
  ca->add_option("spec", a.spec_path, "kernel spec (JSON)")->required();
  ca->add_option("--output", a.output, "directory for report and curve files");
  ca->add_option("--max-n", a.max_n, "curve horizon")->check(CLI::PositiveNumber);
  ca->add_flag("--dump-spec", a.dump_spec, "print the canonical spec and exit");
  ca->add_flag("--require-ergodic", a.require_ergodic,
               "exit 3 unless irreducible and aperiodic");

  EstimateOpts e;
  auto* ce = app.add_subcommand("estimate", "run a seeded chain and quantify estimator error");
  ce->add_option("spec", e.spec_path, "kernel spec (JSON)")->required();
  ce->add_option("--output", e.output, "directory for report files");
  ce->add_option("--function", e.function, "name of a spec function")->required();
  ce->add_option("--x0", e.x0, "start state label (default: first state)");
  ce->add_option("--iters", e.iters, "steps per chain")->check(CLI::NonNegativeNumber);
  ce->add_option("--replicates", e.replicates, "replicate chains for the CLT study (0 = skip)")
      ->check(CLI::NonNegativeNumber);
  ce->add_option("--max-n", e.max_n, "curve horizon")->check(CLI::PositiveNumber);
  ce->add_option("--seed", e.seed, "master seed");
  ce->add_flag("--dump-spec", e.dump_spec, "print the canonical spec and exit");
  ce->add_flag("--require-ergodic", e.require_ergodic,
               "exit 3 unless irreducible and aperiodic");

  CoupleOpts c;
  auto* cc = app.add_subcommand("couple", "run the splitting coupling and bound TV empirically");
  cc->add_option("spec", c.spec_path, "kernel spec (JSON)")->required();
  cc->add_option("--output", c.output, "directory for report and trace files");
  cc->add_option("--x0", c.x0, "first start state label")->required();
  cc->add_option("--y0", c.y0, "second start state label")->required();
  cc->add_option("--iters", c.iters, "coupling horizon")->check(CLI::PositiveNumber);
  cc->add_option("--replicates", c.replicates, "replicate pairs for the empirical bound")
      ->check(CLI::PositiveNumber);
  cc->add_option("--seed", c.seed, "master seed");
  cc->add_flag("--dump-spec", c.dump_spec, "print the canonical spec and exit");

  MetricsOpts m;
  auto* cm = app.add_subcommand("metrics", "distances between two named distributions");
  cm->add_option("spec", m.spec_path, "kernel spec (JSON)")->required();
  cm->add_option("--output", m.output, "directory for the report file");
  cm->add_option("--mu", m.mu, "first distribution (delta:LABEL | stationary | uniform | nstep:LABEL:N)")
      ->required();
  cm->add_option("--nu", m.nu, "second distribution (same forms)")->required();
  cm->add_flag("--dump-spec", m.dump_spec, "print the canonical spec and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (app.got_subcommand(ca)) return run_analyze(a);
    if (app.got_subcommand(ce)) return run_estimate(e);
    if (app.got_subcommand(cc)) return run_couple(c);
    return run_metrics(m);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  }
}
