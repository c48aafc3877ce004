#pragma once

// Problem and run configuration documents (JSON syntax).
//
// Constraint indices are 1-based as in the iteration; coordinate axes are 0-based.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "feasik/engine.hpp"
#include "feasik/problem.hpp"

namespace feasik {

using Json = nlohmann::ordered_json;

enum class Precision { Binary64, Extended };

std::string to_string(Precision p);
std::string to_string(CounterMode m);
std::string to_string(PhiKind k);

/// Reads a file into a JSON document. Syntax errors become ConfigError with line and column.
Json read_json_file(const std::filesystem::path& path);
Json parse_json_text(const std::string& text, const std::string& origin = "<string>");

/// "precision" under "run", defaulting to binary64.
Precision precision_of(const Json& doc);

template <std::floating_point Real>
struct LoadedConfig {
  std::shared_ptr<const BasicProblem<Real>> problem;
  RunConfig<Real> run;
  std::uint64_t seed = 0;
  Precision precision = Precision::Binary64;
};

/// Builds the problem from "dim", "outer", "constraints" and "interior".
template <std::floating_point Real>
std::shared_ptr<const BasicProblem<Real>> parse_problem(const Json& doc);

/// Problem plus "run". `seed_override` replaces the run seed and every control seed.
template <std::floating_point Real>
LoadedConfig<Real> parse_config(const Json& doc, std::optional<std::uint64_t> seed_override = {});

/// Canonical document: every default spelled out. parse_config(emit_config(c)) reproduces c.
template <std::floating_point Real>
Json emit_problem(const BasicProblem<Real>& p);
template <std::floating_point Real>
Json emit_config(const LoadedConfig<Real>& c);

/// FEASIK_SEED, if set to an unsigned integer.
std::optional<std::uint64_t> seed_from_environment();

// ---------------------------------------------------------------------------
// Sweep grids.
// ---------------------------------------------------------------------------

struct SweepGrid {
  std::uint64_t instances = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> controls;
  std::vector<PhiKind> phis;
  std::vector<Json> overrelaxations;  // schedule documents, as in "run.overrelaxation"
  double alpha = 1;
  CounterMode counter_mode = CounterMode::Bracketed;
  std::uint64_t max_iter = 100'000;
};

/// An empty grid (no instances, controls, phis or schedules) is a ConfigError.
SweepGrid parse_sweep(const Json& doc, std::optional<std::uint64_t> seed_override = {});

/// Schedule from its document, as used by "run.overrelaxation".
template <std::floating_point Real>
Overrelaxation<Real> parse_overrelaxation(const Json& doc);
template <std::floating_point Real>
Json emit_overrelaxation(const Overrelaxation<Real>& o);

}  // namespace feasik
