#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "feasik/config.hpp"

using namespace feasik;

namespace {

const std::filesystem::path kConfigs = FEASIK_CONFIG_DIR;

std::string error_of(const std::string& text) {
  try {
    parse_config<double>(parse_json_text(text));
  } catch (const ConfigError& e) {
    return e.what();
  } catch (const std::exception& e) {
    return std::string("other: ") + e.what();
  }
  return "";
}

const char* kBase = R"({
  "dim": 2,
  "constraints": [{"kind": "halfspace", "a": [1, 0], "b": 0}],
  "run": {"control": {"kind": "cyclic"}, "x0": [1, 1]}
})";

Json base_with(const std::string& pointer, const Json& value) {
  Json doc = parse_json_text(kBase);
  doc[Json::json_pointer(pointer)] = value;
  return doc;
}

}  // namespace

TEST_CASE("every sample config round-trips through its canonical form") {
  for (const char* name : {"two_halfspaces.json", "a1_bracketed.json", "a2_raw.json", "random_polytope.json"}) {
    CAPTURE(name);
    const Json doc = read_json_file(kConfigs / name);
    const LoadedConfig<double> first = parse_config<double>(doc);
    const Json canonical = emit_config(first);
    const Json again = emit_config(parse_config<double>(canonical));
    CHECK(canonical == again);
  }
  const Json a1 = read_json_file(kConfigs / "a1_raw.json");
  CHECK(precision_of(a1) == Precision::Extended);
  const LoadedConfig<long double> ext = parse_config<long double>(a1);
  CHECK(ext.run.counter_mode == CounterMode::Raw);
  CHECK(emit_config(parse_config<long double>(emit_config(ext))) == emit_config(ext));
}

TEST_CASE("parsed config drives the same run as the hand-built one") {
  const LoadedConfig<double> cfg = parse_config<double>(read_json_file(kConfigs / "two_halfspaces.json"));
  CHECK(cfg.run.x0 == Vector{1, 1});
  CHECK(cfg.run.max_iter == 1000);
  const RunResult<double> r = solve(cfg.run);
  CHECK(r.status == RunStatus::FeasibleAt);
  REQUIRE(cfg.problem->interior());
  CHECK(cfg.problem->interior()->z == Vector{-3, -3});
}

TEST_CASE("numbers parse bit-exactly") {
  const Json doc = base_with("/run/x0", Json::array({0.1, 1e-300}));
  const LoadedConfig<double> cfg = parse_config<double>(doc);
  CHECK(cfg.run.x0[0] == 0.1);
  CHECK(cfg.run.x0[1] == 1e-300);
}

TEST_CASE("errors carry the field path") {
  CHECK(error_of(R"({"dim": 2, "constraints": [], "run": {"control": {"kind": "cyclic"}, "x0": [1, 1]}})") != "");
  const std::string bad_alpha = base_with("/run/relaxation", 2.5).dump();
  CHECK(error_of(bad_alpha) == "$.run.relaxation: relaxation outside (0,2]");
  CHECK(error_of(base_with("/run/phi", "two").dump()) == "$.run.phi: expected \"one\" or \"subgrad_norm\"");
  CHECK(error_of(base_with("/constraints/0/kind", "cone").dump()) ==
        "$.constraints[0]: unknown constraint kind \"cone\"");
  CHECK(error_of(base_with("/run/x0", Json::array({1, 2, 3})).dump()).find("x0") != std::string::npos);
  CHECK(error_of(base_with("/run/counter_mode", "fast").dump()).rfind("$.run.counter_mode", 0) == 0);
  CHECK(error_of(base_with("/run/control", Json{{"kind", "cyclic"}, {"order", {0}}}).dump())
            .find("constraint indices start at 1") != std::string::npos);
}

TEST_CASE("syntax errors report the line") {
  const std::string text = "{\n  \"dim\": 2,\n  \"constraints\": [,]\n}";
  try {
    parse_json_text(text, "broken.json");
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("broken.json:3: syntax error", 0) == 0);
  }
  CHECK_THROWS_AS(read_json_file(kConfigs / "does_not_exist.json"), ConfigError);
}

TEST_CASE("seed override and environment") {
  Json doc = base_with("/run/control", Json{{"kind", "random"}, {"seed", 5}});
  doc["run"]["seed"] = 9;
  CHECK(parse_config<double>(doc).seed == 9);
  const LoadedConfig<double> over = parse_config<double>(doc, 77);
  CHECK(over.seed == 77);
  const auto& rs = std::get<Control<double>::RandomSets>(over.run.control.kind());
  CHECK(rs.seed == 77);

  ::unsetenv("FEASIK_SEED");
  CHECK_FALSE(seed_from_environment());
  ::setenv("FEASIK_SEED", "123", 1);
  CHECK(seed_from_environment() == 123u);
  ::setenv("FEASIK_SEED", "abc", 1);
  CHECK_THROWS_AS(seed_from_environment(), ConfigError);
  ::unsetenv("FEASIK_SEED");
}

TEST_CASE("overrelaxation documents") {
  for (const char* text :
       {R"({"kind": "harmonic", "scale": 2})", R"({"kind": "geometric", "first": 1, "ratio": 0.5})",
        R"({"kind": "constant", "r": 0.3})", R"({"kind": "list", "values": [1, 0.5]})",
        R"({"kind": "sqrt_contraction", "b0": 0.5})",
        R"({"kind": "interleaved", "even": {"kind": "harmonic"}, "odd": {"kind": "geometric", "first": 1, "ratio": 0.5}})",
        R"({"kind": "merged_decreasing", "a": {"kind": "harmonic"}, "b": {"kind": "sqrt_contraction", "b0": 0.5}})"}) {
    CAPTURE(text);
    const Overrelaxation<double> o = parse_overrelaxation<double>(parse_json_text(text));
    const Overrelaxation<double> back = parse_overrelaxation<double>(emit_overrelaxation(o));
    for (std::uint64_t k = 0; k < 300; ++k) CHECK(o.value(k) == back.value(k));
  }
  CHECK_THROWS_AS(parse_overrelaxation<double>(parse_json_text(R"({"kind": "fibonacci"})")), ConfigError);
}

TEST_CASE("sweep grids") {
  const SweepGrid g = parse_sweep(read_json_file(kConfigs / "sweep.json"));
  CHECK(g.instances == 10);
  CHECK(g.seed == 2024);
  CHECK(g.controls.size() == 4);
  CHECK(g.phis.size() == 2);
  CHECK(g.overrelaxations.size() == 1);
  CHECK(parse_sweep(read_json_file(kConfigs / "sweep.json"), 5).seed == 5);
  CHECK_THROWS_WITH_AS(parse_sweep(read_json_file(kConfigs / "empty_sweep.json")), "$: empty grid",
                       ConfigError);
}

TEST_CASE("problem documents") {
  const Json doc = parse_json_text(R"({
    "dim": 2,
    "outer": {"kind": "box", "lo": [-5, -5], "hi": [5, 5]},
    "constraints": [
      {"kind": "ball", "center": [0, 0], "radius": 2},
      {"kind": "box", "lo": [-1, -1], "hi": [1, 3]},
      {"kind": "sublevel", "function": {"kind": "max_affine", "pieces": [{"a": [1, 0], "b": 1}, {"a": [0, 1], "b": 1}]}},
      {"kind": "sublevel", "function": {"kind": "squared_dist_to_ball", "center": [0, 0], "radius": 1}},
      {"kind": "sublevel", "function": {"kind": "affine", "a": [1, 1], "b": 1}, "cutter": "metric"}
    ]
  })");
  const auto p = parse_problem<double>(doc);
  CHECK(p->dim() == 2);
  CHECK(*p->cardinality() == 5);
  CHECK(feasible(*p, Vector{0, 0}));
  CHECK(emit_problem(*parse_problem<double>(emit_problem(*p))) == emit_problem(*p));
  CHECK(p->visit(5, [](const Constraint<double>& c) { return c.cutter(); }) == CutterKind::Metric);
}
