#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "markov/markov.hpp"
#include "oracles.hpp"

using namespace markov;
using io::json;

namespace {

json full_spec_json() {
  return json::parse(R"({
    "states": ["a", "b"],
    "matrix": [[0.7, 0.3], [0.2, 0.8]],
    "distance": [[0.0, 1.0], [1.0, 0.0]],
    "drift": {"V": [1.0, 2.0], "C": ["a"]},
    "small_set": ["a", "b"],
    "functions": {"ind_b": [0.0, 1.0], "height": [1.5, -2.5]}
  })");
}

}  // namespace

TEST_CASE("parse a full kernel spec") {
  const auto spec = io::parse_kernel_spec(full_spec_json());
  CHECK(spec.states == std::vector<std::string>{"a", "b"});
  CHECK(spec.matrix(0, 1) == 0.3);
  CHECK(spec.matrix(1, 0) == 0.2);
  REQUIRE(spec.distance.has_value());
  CHECK((*spec.distance)(0, 1) == 1.0);
  REQUIRE(spec.drift.has_value());
  CHECK(spec.drift->V(1) == 2.0);
  CHECK(spec.drift->C == std::vector<std::string>{"a"});
  REQUIRE(spec.small_set.has_value());
  CHECK(spec.small_set->size() == 2);
  REQUIRE(spec.functions.size() == 2);
  CHECK(spec.functions.at("height")(1) == -2.5);

  const Kernel k = io::to_kernel(spec);
  CHECK(k.space()->label(1) == "b");
  CHECK(k.T()(0, 0) == 0.7);
  const auto d = io::to_distance(spec);
  REQUIRE(d.has_value());
  CHECK((*d)(0, 1) == 1.0);
  CHECK(io::to_indices({"b", "a"}, k.space()) == std::vector<int>{1, 0});
}

TEST_CASE("spec validation diagnostics") {
  auto reject = [](json j, const std::string& needle) {
    try {
      io::parse_kernel_spec(j);
      FAIL("expected rejection for: " + needle);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  auto j = full_spec_json();
  j["extra"] = 1;
  reject(j, "unknown field 'extra'");

  j = full_spec_json();
  j["states"] = json::array();
  reject(j, "'states'");

  j = full_spec_json();
  j["states"] = {"a", "a"};
  reject(j, "repeats label 'a'");

  j = full_spec_json();
  j.erase("matrix");
  reject(j, "missing required field 'matrix'");

  j = full_spec_json();
  j["matrix"] = {{0.7, 0.3}};
  reject(j, "'matrix'");

  j = full_spec_json();
  j["matrix"][1] = {0.2, 0.8, 0.0};
  reject(j, "row 1");

  j = full_spec_json();
  j["matrix"][0][1] = "x";
  reject(j, "not a number");

  j = full_spec_json();
  j["drift"]["C"] = {"zz"};
  reject(j, "unknown state 'zz'");

  j = full_spec_json();
  j["drift"]["extra"] = 1;
  reject(j, "'drift'");

  j = full_spec_json();
  j["small_set"] = {"a", 3};
  reject(j, "non-string");

  j = full_spec_json();
  j["functions"]["short"] = {1.0};
  reject(j, "functions.short");

  CHECK_THROWS_AS(io::parse_kernel_spec(json::parse("[1,2]")), ValidationError);
}

TEST_CASE("ingest tolerance for hand-edited row sums") {
  auto j = full_spec_json();
  j["matrix"] = {{0.7, 0.3 + 2e-10}, {0.2, 0.8}};
  CHECK_NOTHROW(io::to_kernel(io::parse_kernel_spec(j)));
  j["matrix"] = {{0.7, 0.301}, {0.2, 0.8}};
  CHECK_THROWS_AS(io::to_kernel(io::parse_kernel_spec(j)), ValidationError);
}

TEST_CASE("load_kernel_spec file handling") {
  CHECK_THROWS_AS(io::load_kernel_spec("no_such_file_9321.json"),
                  ValidationError);

  const std::string path = "io_test_tmp.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  try {
    io::load_kernel_spec(path);
    FAIL("expected parse rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("not valid JSON") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << full_spec_json().dump(2);
  }
  const auto spec = io::load_kernel_spec(path);
  CHECK(spec.states.size() == 2);
  std::remove(path.c_str());
}

TEST_CASE("serialize / parse round-trip is bit exact") {
  // awkward decimals: none have short exact representations
  io::KernelSpec wild;
  wild.states = {"p", "q", "r"};
  wild.matrix = Mat(3, 3);
  wild.matrix << 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0,
      0.1 + 0.2, 0.35, 1.0 - 0.30000000000000004 - 0.35,
      0.123456789012345678, 0.5, 0.376543210987654322;
  wild.functions["f"] = (Vec(3) << 3.141592653589793, -1e-17, 2.2250738585072014e-308).finished();

  const json j = io::serialize_kernel_spec(wild);
  const auto back = io::parse_kernel_spec(j);
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(back.matrix(i, c) == wild.matrix(i, c));
  for (int i = 0; i < 3; ++i)
    CHECK(back.functions.at("f")(i) == wild.functions.at("f")(i));

  // ... and through a textual dump as well
  const auto back2 = io::parse_kernel_spec(json::parse(j.dump(2)));
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(back2.matrix(i, c) == wild.matrix(i, c));

  // serialization is deterministic and key-ordered
  const auto full = io::parse_kernel_spec(full_spec_json());
  const std::string d1 = io::serialize_kernel_spec(full).dump(2);
  const std::string d2 = io::serialize_kernel_spec(full).dump(2);
  CHECK(d1 == d2);
  const json round = io::serialize_kernel_spec(full);
  std::vector<std::string> order;
  for (const auto& [k, v] : round.items()) {
    (void)v;
    order.push_back(k);
  }
  CHECK(order == std::vector<std::string>{"states", "matrix", "distance",
                                          "drift", "small_set", "functions"});
}

TEST_CASE("fmt_double emits shortest round-trip decimals") {
  CHECK(io::fmt_double(0.1) == "0.1");
  CHECK(io::fmt_double(2.0) == "2");
  CHECK(io::fmt_double(0.30000000000000004) == "0.30000000000000004");
  for (double v : {1.0 / 3.0, 0.6 * 0.5, 1e-300, -7.25, 3.141592653589793}) {
    const std::string s = io::fmt_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("report sections") {
  Mat T(2, 2);
  T << 0.7, 0.3, 0.2, 0.8;
  Kernel k(StateSpace::make({"a", "b"}), T);
  const auto rep = classify(k);
  json e = io::ergodicity_to_json(rep, k.space());
  CHECK(e["irreducible"] == true);
  CHECK(e["period"] == 1);
  CHECK(e["harris"] == true);
  CHECK(e["witness"].is_null());

  // periodic witness carries the cyclic classes as labels
  Mat C3(3, 3);
  C3 << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  Kernel cyc(StateSpace::make({"u", "v", "w"}), C3);
  json ec = io::ergodicity_to_json(classify(cyc), cyc.space());
  CHECK(ec["witness"]["type"] == "periodic_decomposition");
  CHECK(ec["witness"]["classes"].size() == 3);
  CHECK(ec["witness"]["classes"][0][0] == "u");

  // reducible witness names the unreachable pair
  Mat B(2, 2);
  B << 1, 0, 0, 1;
  Kernel blk(StateSpace::make({"x", "y"}), B);
  json eb = io::ergodicity_to_json(classify(blk), blk.space());
  CHECK(eb["witness"]["type"] == "unreachable_pair");
  CHECK(eb["witness"].contains("from"));
  CHECK(eb["witness"].contains("target"));

  json c = io::curve_to_json({{1, 0.5}, {2, 0.25}});
  CHECK(c.dump() == "[[1,0.5],[2,0.25]]");

  const Dist pi = stationary(k);
  json dj = io::dist_to_json(pi);
  CHECK(dj.size() == 2);
  CHECK(dj[0].get<double>() == Catch::Approx(0.4).margin(1e-12));
}

TEST_CASE("csv writers") {
  io::write_curve_csv("io_test_curve.csv", "tv", {{1, 0.5}, {2, 0.125}});
  std::ifstream in("io_test_curve.csv");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "N,tv\n1,0.5\n2,0.125\n");
  std::remove("io_test_curve.csv");
}
