#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "markov/contraction.hpp"
#include "markov/errors.hpp"
#include "markov/estimators.hpp"
#include "markov/kernel.hpp"
#include "markov/metrics.hpp"
#include "markov/structure.hpp"

// JSON kernel specifications and machine-readable reports.  All emitters are
// deterministic: ordered keys, native double serialization (shortest decimal
// that round-trips to the same bits), no timestamps or environment state.

namespace markov::io {

using json = nlohmann::ordered_json;

/// Tolerance applied to row sums when ingesting external matrices; looser
/// than the in-memory 1e-12 because spec files are hand-edited decimals.
inline constexpr double kIngestTol = 1e-9;

struct DriftSpec {
  Vec V;
  std::vector<std::string> C;
};

/// On-disk kernel description: states, transition matrix, and optional
/// distance / drift / small-set / function sections.
struct KernelSpec {
  std::vector<std::string> states;
  Mat matrix;
  std::optional<Mat> distance;
  std::optional<DriftSpec> drift;
  std::optional<std::vector<std::string>> small_set;
  std::map<std::string, Vec> functions;  // sorted by name for determinism
};

namespace detail {

inline Mat parse_matrix(const json& rows, std::size_t n, const std::string& field) {
  if (!rows.is_array() || rows.size() != n)
    throw ValidationError("spec field '" + field + "' must be an array of " +
                          std::to_string(n) + " rows");
  Mat m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != n)
      throw ValidationError("spec field '" + field + "' row " + std::to_string(i) +
                            " must have " + std::to_string(n) + " entries");
    for (std::size_t j = 0; j < n; ++j) {
      if (!row[j].is_number())
        throw ValidationError("spec field '" + field + "' row " +
                              std::to_string(i) + " entry " + std::to_string(j) +
                              " is not a number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          row[j].get<double>();
    }
  }
  return m;
}

inline Vec parse_vector(const json& arr, std::size_t n, const std::string& field) {
  if (!arr.is_array() || arr.size() != n)
    throw ValidationError("spec field '" + field + "' must be an array of " +
                          std::to_string(n) + " numbers");
  Vec v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!arr[i].is_number())
      throw ValidationError("spec field '" + field + "' entry " +
                            std::to_string(i) + " is not a number");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

inline std::vector<std::string> parse_labels(const json& arr,
                                             const std::vector<std::string>& states,
                                             const std::string& field) {
  if (!arr.is_array())
    throw ValidationError("spec field '" + field + "' must be an array of labels");
  std::vector<std::string> out;
  for (const auto& item : arr) {
    if (!item.is_string())
      throw ValidationError("spec field '" + field + "' contains a non-string");
    const std::string label = item.get<std::string>();
    if (std::find(states.begin(), states.end(), label) == states.end())
      throw ValidationError("spec field '" + field + "' names unknown state '" +
                            label + "'");
    out.push_back(label);
  }
  return out;
}

}  // namespace detail

inline KernelSpec parse_kernel_spec(const json& j) {
  if (!j.is_object()) throw ValidationError("spec must be a JSON object");
  static const std::vector<std::string> known = {
      "states", "matrix", "distance", "drift", "small_set", "functions"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError("spec has unknown field '" + key + "'");
  }
  KernelSpec spec;
  if (!j.contains("states") || !j["states"].is_array() || j["states"].empty())
    throw ValidationError("spec field 'states' must be a nonempty array");
  for (const auto& s : j["states"]) {
    if (!s.is_string())
      throw ValidationError("spec field 'states' contains a non-string");
    spec.states.push_back(s.get<std::string>());
  }
  for (std::size_t a = 0; a < spec.states.size(); ++a)
    for (std::size_t b = a + 1; b < spec.states.size(); ++b)
      if (spec.states[a] == spec.states[b])
        throw ValidationError("spec field 'states' repeats label '" +
                              spec.states[a] + "'");
  const std::size_t n = spec.states.size();
  if (!j.contains("matrix"))
    throw ValidationError("spec is missing required field 'matrix'");
  spec.matrix = detail::parse_matrix(j["matrix"], n, "matrix");

  if (j.contains("distance"))
    spec.distance = detail::parse_matrix(j["distance"], n, "distance");
  if (j.contains("drift")) {
    const json& d = j["drift"];
    if (!d.is_object() || !d.contains("V") || !d.contains("C"))
      throw ValidationError("spec field 'drift' must be an object with V and C");
    for (const auto& [key, value] : d.items()) {
      (void)value;
      if (key != "V" && key != "C")
        throw ValidationError("spec field 'drift' has unknown member '" + key + "'");
    }
    DriftSpec ds;
    ds.V = detail::parse_vector(d["V"], n, "drift.V");
    ds.C = detail::parse_labels(d["C"], spec.states, "drift.C");
    spec.drift = std::move(ds);
  }
  if (j.contains("small_set"))
    spec.small_set = detail::parse_labels(j["small_set"], spec.states, "small_set");
  if (j.contains("functions")) {
    const json& f = j["functions"];
    if (!f.is_object())
      throw ValidationError("spec field 'functions' must be an object");
    for (const auto& [name, arr] : f.items())
      spec.functions[name] = detail::parse_vector(arr, n, "functions." + name);
  }
  return spec;
}

inline KernelSpec load_kernel_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("spec file '" + path + "' is not valid JSON: " +
                          std::string(e.what()));
  }
  return parse_kernel_spec(j);
}

inline json serialize_kernel_spec(const KernelSpec& spec) {
  json j;
  j["states"] = spec.states;
  json rows = json::array();
  for (Eigen::Index i = 0; i < spec.matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < spec.matrix.cols(); ++c)
      row.push_back(spec.matrix(i, c));
    rows.push_back(std::move(row));
  }
  j["matrix"] = std::move(rows);
  if (spec.distance) {
    json drows = json::array();
    for (Eigen::Index i = 0; i < spec.distance->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < spec.distance->cols(); ++c)
        row.push_back((*spec.distance)(i, c));
      drows.push_back(std::move(row));
    }
    j["distance"] = std::move(drows);
  }
  if (spec.drift) {
    json d;
    d["V"] = std::vector<double>(spec.drift->V.data(),
                                 spec.drift->V.data() + spec.drift->V.size());
    d["C"] = spec.drift->C;
    j["drift"] = std::move(d);
  }
  if (spec.small_set) j["small_set"] = *spec.small_set;
  if (!spec.functions.empty()) {
    json f;
    for (const auto& [name, v] : spec.functions)
      f[name] = std::vector<double>(v.data(), v.data() + v.size());
    j["functions"] = std::move(f);
  }
  return j;
}

/// The in-memory kernel for a spec; ingest uses the looser file tolerance.
inline Kernel to_kernel(const KernelSpec& spec) {
  return Kernel(StateSpace::make(spec.states), spec.matrix, kIngestTol);
}

inline std::optional<DistanceFn> to_distance(const KernelSpec& spec) {
  if (!spec.distance) return std::nullopt;
  return DistanceFn::from_matrix(StateSpace::make(spec.states), *spec.distance);
}

inline std::vector<int> to_indices(const std::vector<std::string>& labels,
                                   const SpacePtr& space) {
  std::vector<int> idx;
  idx.reserve(labels.size());
  for (const auto& label : labels) idx.push_back(space->index_of(label));
  return idx;
}

// ---------------------------------------------------------------------------
// Report sections

inline json dist_to_json(const Dist& d) {
  return json(std::vector<double>(d.p().data(), d.p().data() + d.p().size()));
}

inline json ergodicity_to_json(const ErgodicityReport& rep, const SpacePtr& space) {
  json j;
  j["irreducible"] = rep.irreducible;
  j["period"] = rep.period;
  j["aperiodic"] = rep.aperiodic;
  j["harris"] = rep.harris;
  if (!rep.witness) {
    j["witness"] = nullptr;
  } else if (const auto* pair = std::get_if<UnreachableWitness>(&*rep.witness)) {
    json w;
    w["type"] = "unreachable_pair";
    w["from"] = space->label(pair->from);
    w["target"] = space->label(pair->target);
    j["witness"] = std::move(w);
  } else {
    const auto& classes = std::get<PeriodicDecomposition>(*rep.witness);
    json w;
    w["type"] = "periodic_decomposition";
    json cls = json::array();
    for (const auto& c : classes) {
      json one = json::array();
      for (int v : c) one.push_back(space->label(v));
      cls.push_back(std::move(one));
    }
    w["classes"] = std::move(cls);
    j["witness"] = std::move(w);
  }
  return j;
}

inline json curve_to_json(const std::vector<std::pair<long, double>>& curve) {
  json arr = json::array();
  for (const auto& [N, v] : curve) arr.push_back(json::array({N, v}));
  return arr;
}

inline json geometric_bound_to_json(const GeometricBound& gb) {
  json j;
  j["b"] = gb.b;
  j["r"] = gb.r;
  j["uniform"] = gb.uniform;
  return j;
}

inline json minorization_to_json(const MinorizationCertificate& cert,
                                 const SpacePtr& space) {
  json j;
  json c = json::array();
  for (int x : cert.C) c.push_back(space->label(x));
  j["C"] = std::move(c);
  j["M"] = cert.M;
  j["eps"] = cert.eps;
  j["nu"] = dist_to_json(cert.nu);
  return j;
}

inline json drift_to_json(const DriftCertificate& cert, const SpacePtr& space) {
  json j;
  j["V"] = std::vector<double>(cert.V.data(), cert.V.data() + cert.V.size());
  j["lambda"] = cert.lambda;
  j["b"] = cert.b;
  json c = json::array();
  for (int x : cert.C) c.push_back(space->label(x));
  j["C"] = std::move(c);
  return j;
}

inline json estimator_to_json(const EstimatorReport& rep) {
  json j;
  j["f_hat"] = rep.f_hat;
  j["autocorr"] = rep.autocorr;
  j["ess"] = rep.ess;
  j["mcse"] = rep.mcse;
  j["var_f_hat_est"] = rep.var_f_hat_est;
  return j;
}

inline json clt_to_json(const CltSummary& s) {
  json j;
  j["replicates"] = s.replicates.size();
  j["mean"] = s.mean;
  j["variance"] = s.variance;
  j["skewness"] = s.skewness;
  j["ex_kurtosis"] = s.ex_kurtosis;
  return j;
}

// ---------------------------------------------------------------------------
// File emission

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << content;
}

inline void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

/// Shortest decimal that round-trips the exact double, for CSV cells.
inline std::string fmt_double(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_curve_csv(const std::string& path, const std::string& value_name,
                            const std::vector<std::pair<long, double>>& curve) {
  std::string out = "N," + value_name + "\n";
  for (const auto& [N, v] : curve)
    out += std::to_string(N) + "," + fmt_double(v) + "\n";
  write_text(path, out);
}

inline void write_replicates_csv(const std::string& path, const CltSummary& s) {
  std::string out = "replicate,f_hat,ess,mcse\n";
  for (std::size_t r = 0; r < s.replicates.size(); ++r) {
    const auto& rec = s.replicates[r];
    out += std::to_string(r) + "," + fmt_double(rec.f_hat) + "," +
           fmt_double(rec.ess) + "," + fmt_double(rec.mcse) + "\n";
  }
  write_text(path, out);
}

}  // namespace markov::io
