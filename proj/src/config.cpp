#include "feasik/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "feasik/controls.hpp"
#include "feasik/error.hpp"

namespace feasik {

namespace {

/// A JSON node with its path from the document root, for diagnostics.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const Json& json() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(path_ + ": " + what);
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Node at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!j_.contains(key)) fail(std::string("missing field \"") + key + "\"");
    return {j_.at(key), path_ + "." + key};
  }

  Node at(std::size_t i) const { return {j_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  std::uint64_t count() const {
    if (j_.is_number_unsigned()) return j_.get<std::uint64_t>();
    if (j_.is_number_integer() && j_.get<std::int64_t>() >= 0) return j_.get<std::uint64_t>();
    fail("expected a nonnegative integer");
  }

  std::string text() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  /// "kind" of an object, or the string itself for bare-string shorthands.
  std::string kind() const {
    if (j_.is_string()) return j_.get<std::string>();
    return at("kind").text();
  }

  template <class Real>
  std::vector<Real> reals() const {
    std::vector<Real> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(static_cast<Real>(at(i).number()));
    return out;
  }

  template <class Real>
  BasicVector<Real> vector() const {
    try {
      return BasicVector<Real>(reals<Real>());
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }

  IndexSet indices() const {
    IndexSet out;
    for (std::size_t i = 0; i < size(); ++i) {
      const std::uint64_t v = at(i).count();
      if (v == 0) at(i).fail("constraint indices start at 1");
      out.push_back(v);
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
};

/// Runs `make` and prefixes any configuration error with the node's path.
template <class F>
auto guarded(const Node& n, F&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const IndexError& e) {
    throw IndexError(n.path() + ": " + e.what());
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(n.path(), 0) == 0) throw;
    throw ConfigError(n.path() + ": " + msg);
  }
}

template <class Real>
Json real_array(const BasicVector<Real>& v) {
  Json out = Json::array();
  for (Real c : v) out.push_back(static_cast<double>(c));
  return out;
}

template <class Real>
Json real_array(const std::vector<Real>& v) {
  Json out = Json::array();
  for (Real c : v) out.push_back(static_cast<double>(c));
  return out;
}

Json index_array(const IndexSet& s) {
  Json out = Json::array();
  for (Index i : s) out.push_back(i);
  return out;
}

// --- functions and bodies --------------------------------------------------

template <class Real>
ConvexFunction<Real> parse_function(const Node& n, std::size_t dim) {
  const std::string kind = n.kind();
  return guarded(n, [&]() -> ConvexFunction<Real> {
    if (kind == "affine") {
      return {Affine<Real>{n.at("a").vector<Real>(), static_cast<Real>(n.at("b").number())}, dim};
    }
    if (kind == "abs_coord_minus_c") {
      return {AbsCoordMinusC<Real>{n.at("axis").count(), static_cast<Real>(n.at("c").number())}, dim};
    }
    if (kind == "quad_coord_minus_c") {
      return {QuadCoordMinusC<Real>{n.at("axis").count(), static_cast<Real>(n.at("c").number())},
              dim};
    }
    if (kind == "max_affine") {
      const Node pieces = n.at("pieces");
      MaxAffine<Real> f;
      for (std::size_t j = 0; j < pieces.size(); ++j) {
        const Node p = pieces.at(j);
        f.pieces.push_back({p.at("a").vector<Real>(), static_cast<Real>(p.at("b").number())});
      }
      return {std::move(f), dim};
    }
    if (kind == "squared_dist_to_ball") {
      return {SquaredDistToBall<Real>{n.at("center").vector<Real>(),
                                      static_cast<Real>(n.at("radius").number())},
              dim};
    }
    n.fail("unknown function kind \"" + kind + "\"");
  });
}

template <class Real>
Json emit_function(const ConvexFunction<Real>& f) {
  return std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        Json out;
        if constexpr (std::is_same_v<K, Affine<Real>>) {
          out["kind"] = "affine";
          out["a"] = real_array(k.a);
          out["b"] = static_cast<double>(k.b);
        } else if constexpr (std::is_same_v<K, AbsCoordMinusC<Real>>) {
          out["kind"] = "abs_coord_minus_c";
          out["axis"] = k.axis;
          out["c"] = static_cast<double>(k.c);
        } else if constexpr (std::is_same_v<K, QuadCoordMinusC<Real>>) {
          out["kind"] = "quad_coord_minus_c";
          out["axis"] = k.axis;
          out["c"] = static_cast<double>(k.c);
        } else if constexpr (std::is_same_v<K, MaxAffine<Real>>) {
          out["kind"] = "max_affine";
          out["pieces"] = Json::array();
          for (const auto& p : k.pieces) {
            out["pieces"].push_back({{"a", real_array(p.a)}, {"b", static_cast<double>(p.b)}});
          }
        } else {
          out["kind"] = "squared_dist_to_ball";
          out["center"] = real_array(k.center);
          out["radius"] = static_cast<double>(k.radius);
        }
        return out;
      },
      f.kind());
}

template <class Real>
Halfspace<Real> parse_halfspace(const Node& n) {
  return {n.at("a").vector<Real>(), static_cast<Real>(n.at("b").number())};
}
template <class Real>
Ball<Real> parse_ball(const Node& n) {
  return {n.at("center").vector<Real>(), static_cast<Real>(n.at("radius").number())};
}
template <class Real>
Box<Real> parse_box(const Node& n) {
  return {n.at("lo").vector<Real>(), n.at("hi").vector<Real>()};
}

template <class Real>
void emit_body(Json& out, const Halfspace<Real>& h) {
  out["kind"] = "halfspace";
  out["a"] = real_array(h.a);
  out["b"] = static_cast<double>(h.b);
}
template <class Real>
void emit_body(Json& out, const Ball<Real>& b) {
  out["kind"] = "ball";
  out["center"] = real_array(b.center);
  out["radius"] = static_cast<double>(b.radius);
}
template <class Real>
void emit_body(Json& out, const Box<Real>& b) {
  out["kind"] = "box";
  out["lo"] = real_array(b.lo);
  out["hi"] = real_array(b.hi);
}

template <class Real>
Constraint<Real> parse_constraint(const Node& n, std::size_t dim) {
  const std::string kind = n.kind();
  return guarded(n, [&]() -> Constraint<Real> {
    if (kind == "halfspace") return Constraint<Real>(parse_halfspace<Real>(n));
    if (kind == "ball") return Constraint<Real>(parse_ball<Real>(n));
    if (kind == "box") return Constraint<Real>(parse_box<Real>(n));
    if (kind == "sublevel") {
      Sublevel<Real> body{parse_function<Real>(n.at("function"), dim)};
      if (!n.has("cutter")) return Constraint<Real>(std::move(body));
      const std::string cutter = n.at("cutter").text();
      if (cutter == "subgradient") return Constraint<Real>(std::move(body), CutterKind::Subgradient);
      if (cutter == "metric") return Constraint<Real>(std::move(body), CutterKind::Metric);
      n.at("cutter").fail("expected \"subgradient\" or \"metric\"");
    }
    n.fail("unknown constraint kind \"" + kind + "\"");
  });
}

template <class Real>
Json emit_constraint(const Constraint<Real>& c) {
  Json out;
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, Sublevel<Real>>) {
          out["kind"] = "sublevel";
          out["function"] = emit_function(b.f);
          out["cutter"] = c.cutter() == CutterKind::Metric ? "metric" : "subgradient";
        } else {
          emit_body(out, b);
        }
      },
      c.body());
  return out;
}

template <class Real>
OuterSet<Real> parse_outer(const Node& n) {
  const std::string kind = n.kind();
  return guarded(n, [&]() -> OuterSet<Real> {
    if (kind == "whole_space") return OuterSet<Real>();
    if (kind == "halfspace") return OuterSet<Real>(parse_halfspace<Real>(n));
    if (kind == "ball") return OuterSet<Real>(parse_ball<Real>(n));
    if (kind == "box") return OuterSet<Real>(parse_box<Real>(n));
    n.fail("unknown outer set kind \"" + kind + "\"");
  });
}

template <class Real>
Json emit_outer(const OuterSet<Real>& q) {
  Json out;
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, WholeSpace<Real>>) {
          out["kind"] = "whole_space";
        } else {
          emit_body(out, b);
        }
      },
      q.body());
  return out;
}

// --- schedules -------------------------------------------------------------

template <class Real>
Relaxation<Real> parse_relaxation(const Node& n) {
  return guarded(n, [&]() -> Relaxation<Real> {
    if (n.json().is_number()) return Relaxation<Real>::constant(static_cast<Real>(n.number()));
    const std::string kind = n.kind();
    if (kind == "constant") return Relaxation<Real>::constant(static_cast<Real>(n.at("alpha").number()));
    if (kind == "list") {
      return Relaxation<Real>(typename Relaxation<Real>::List{n.at("values").reals<Real>()});
    }
    n.fail("unknown relaxation kind \"" + kind + "\"");
  });
}

template <class Real>
Json emit_relaxation(const Relaxation<Real>& r) {
  return std::visit(
      [](const auto& s) -> Json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, typename Relaxation<Real>::Constant>) {
          return {{"kind", "constant"}, {"alpha", static_cast<double>(s.alpha)}};
        } else {
          return {{"kind", "list"}, {"values", real_array(s.values)}};
        }
      },
      r.kind());
}

template <class Real>
Overrelaxation<Real> parse_overrelaxation_node(const Node& n) {
  using O = Overrelaxation<Real>;
  const std::string kind = n.kind();
  auto real_or = [&](const char* key, Real fallback) {
    return n.has(key) ? static_cast<Real>(n.at(key).number()) : fallback;
  };
  return guarded(n, [&]() -> O {
    if (kind == "constant") return O(typename O::Constant{static_cast<Real>(n.at("r").number())});
    if (kind == "harmonic") return O(typename O::Harmonic{real_or("scale", Real(1))});
    if (kind == "geometric") {
      return O(typename O::Geometric{real_or("first", Real(1)),
                                     static_cast<Real>(n.at("ratio").number())});
    }
    if (kind == "list") return O(typename O::ExplicitList{n.at("values").reals<Real>()});
    if (kind == "sqrt_contraction") {
      return O(typename O::SqrtContraction{n.has("b0") ? n.at("b0").number() : 0.5});
    }
    if (kind == "interleaved") {
      return O(typename O::Interleaved{
          std::make_shared<const O>(parse_overrelaxation_node<Real>(n.at("even"))),
          std::make_shared<const O>(parse_overrelaxation_node<Real>(n.at("odd")))});
    }
    if (kind == "merged_decreasing") {
      return O(typename O::MergedDecreasing{
          std::make_shared<const O>(parse_overrelaxation_node<Real>(n.at("a"))),
          std::make_shared<const O>(parse_overrelaxation_node<Real>(n.at("b")))});
    }
    n.fail("unknown overrelaxation kind \"" + kind + "\"");
  });
}

template <class Real>
Json emit_overrelaxation_impl(const Overrelaxation<Real>& o) {
  using O = Overrelaxation<Real>;
  return std::visit(
      [](const auto& s) -> Json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, typename O::Constant>) {
          return {{"kind", "constant"}, {"r", static_cast<double>(s.r)}};
        } else if constexpr (std::is_same_v<S, typename O::Harmonic>) {
          return {{"kind", "harmonic"}, {"scale", static_cast<double>(s.scale)}};
        } else if constexpr (std::is_same_v<S, typename O::Geometric>) {
          return {{"kind", "geometric"},
                  {"first", static_cast<double>(s.first)},
                  {"ratio", static_cast<double>(s.ratio)}};
        } else if constexpr (std::is_same_v<S, typename O::ExplicitList>) {
          return {{"kind", "list"}, {"values", real_array(s.values)}};
        } else if constexpr (std::is_same_v<S, typename O::SqrtContraction>) {
          return {{"kind", "sqrt_contraction"}, {"b0", s.b0}};
        } else if constexpr (std::is_same_v<S, typename O::Interleaved>) {
          return {{"kind", "interleaved"},
                  {"even", emit_overrelaxation_impl(*s.even)},
                  {"odd", emit_overrelaxation_impl(*s.odd)}};
        } else {
          return {{"kind", "merged_decreasing"},
                  {"a", emit_overrelaxation_impl(*s.a)},
                  {"b", emit_overrelaxation_impl(*s.b)}};
        }
      },
      o.kind());
}

PhiKind parse_phi(const Node& n) {
  const std::string kind = n.kind();
  if (kind == "one") return PhiKind::One;
  if (kind == "subgrad_norm") return PhiKind::SubgradNorm;
  n.fail("expected \"one\" or \"subgrad_norm\"");
}

template <class Real>
WeightRule<Real> parse_weights(const Node& n) {
  const std::string kind = n.kind();
  return guarded(n, [&]() -> WeightRule<Real> {
    if (kind == "uniform_active") return WeightKind::UniformOverActive;
    if (kind == "uniform_violated") return WeightKind::UniformOverViolated;
    if (kind == "table") return WeightRule<Real>(n.at("values").reals<Real>());
    n.fail("unknown weight rule \"" + kind + "\"");
  });
}

template <class Real>
Json emit_weights(const WeightRule<Real>& w) {
  switch (w.kind()) {
    case WeightKind::UniformOverActive:
      return "uniform_active";
    case WeightKind::UniformOverViolated:
      return "uniform_violated";
    case WeightKind::ExplicitTable:
      return {{"kind", "table"}, {"values", real_array(w.table())}};
  }
  return nullptr;
}

CounterMode parse_counter_mode(const Node& n) {
  const std::string s = n.text();
  if (s == "bracketed") return CounterMode::Bracketed;
  if (s == "raw") return CounterMode::Raw;
  n.fail("expected \"bracketed\" or \"raw\"");
}

// --- controls --------------------------------------------------------------

template <class Real>
Control<Real> parse_control(const Node& n, const BasicProblem<Real>& p,
                            const Overrelaxation<Real>& schedule, std::uint64_t run_seed,
                            std::optional<std::uint64_t> seed_override) {
  using C = Control<Real>;
  const std::string kind = n.kind();
  auto seed = [&]() -> std::uint64_t {
    if (seed_override) return *seed_override;
    return n.has("seed") ? n.at("seed").count() : run_seed;
  };
  auto finite_m = [&]() -> std::size_t {
    if (!p.is_finite()) n.fail("needs a finite pool");
    return *p.cardinality();
  };
  return guarded(n, [&]() -> C {
    if (kind == "cyclic") {
      if (!n.has("order")) return cyclic_control<Real>(finite_m());
      return typename C::Cyclic{n.at("order").indices()};
    }
    if (kind == "intermittent") {
      const Node blocks = n.at("blocks");
      std::vector<IndexSet> sets;
      for (std::size_t j = 0; j < blocks.size(); ++j) sets.push_back(blocks.at(j).indices());
      const std::size_t span = n.has("span") ? n.at("span").count() : sets.size();
      return typename C::Intermittent{std::move(sets), span};
    }
    if (kind == "explicit") {
      const Node sets = n.at("sets");
      std::vector<IndexSet> out;
      for (std::size_t j = 0; j < sets.size(); ++j) out.push_back(sets.at(j).indices());
      return typename C::Explicit{std::move(out)};
    }
    if (kind == "repetitive") {
      const std::string pattern = n.at("pattern").text();
      if (pattern == "shuffled_rounds") return shuffled_rounds<Real>(finite_m(), seed());
      if (pattern == "expanding") return expanding_control<Real>(finite_m());
      if (pattern == "merged_origin") {
        return merged_origin_control<Real>(schedule, n.at("a_index").count(),
                                           n.at("b_index").count());
      }
      n.at("pattern").fail("unknown pattern \"" + pattern + "\"");
    }
    if (kind == "remotest") return typename C::RemotestSet{};
    if (kind == "max_displacement") return typename C::MaxDisplacement{};
    if (kind == "max_violation") return typename C::MaxViolation{};
    if (kind == "random") {
      if (!n.has("atoms")) return uniform_singletons<Real>(finite_m(), seed());
      const Node atoms = n.at("atoms");
      std::vector<Atom> out;
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        const Node a = atoms.at(j);
        out.push_back({a.at("set").indices(), a.at("probability").number()});
      }
      return typename C::RandomSets{std::move(out), seed()};
    }
    n.fail("unknown control kind \"" + kind + "\"");
  });
}

template <class Real>
Json emit_control(const Control<Real>& c) {
  using C = Control<Real>;
  return std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        auto sets = [](const std::vector<IndexSet>& ss) {
          Json out = Json::array();
          for (const auto& s : ss) out.push_back(index_array(s));
          return out;
        };
        if constexpr (std::is_same_v<K, typename C::Cyclic>) {
          return {{"kind", "cyclic"}, {"order", index_array(k.order)}};
        } else if constexpr (std::is_same_v<K, typename C::Intermittent>) {
          return {{"kind", "intermittent"}, {"blocks", sets(k.blocks)}, {"span", k.span}};
        } else if constexpr (std::is_same_v<K, typename C::Explicit>) {
          return {{"kind", "explicit"}, {"sets", sets(k.sets)}};
        } else if constexpr (std::is_same_v<K, typename C::Repetitive>) {
          Json out{{"kind", "repetitive"}, {"pattern", k.pattern}};
          if (k.pattern == "shuffled_rounds" && k.params.size() == 2) {
            out["seed"] = k.params[1];
          } else if (k.pattern == "merged_origin" && k.params.size() == 2) {
            out["a_index"] = k.params[0];
            out["b_index"] = k.params[1];
          } else if (k.pattern != "expanding") {
            throw ConfigError("repetitive pattern \"" + k.pattern + "\" has no document form");
          }
          return out;
        } else if constexpr (std::is_same_v<K, typename C::RemotestSet>) {
          return {{"kind", "remotest"}};
        } else if constexpr (std::is_same_v<K, typename C::MaxDisplacement>) {
          return {{"kind", "max_displacement"}};
        } else if constexpr (std::is_same_v<K, typename C::MaxViolation>) {
          return {{"kind", "max_violation"}};
        } else {
          Json atoms = Json::array();
          for (const auto& a : k.atoms) {
            atoms.push_back({{"set", index_array(a.set)}, {"probability", a.probability}});
          }
          return {{"kind", "random"}, {"atoms", std::move(atoms)}, {"seed", k.seed}};
        }
      },
      c.kind());
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

std::string to_string(Precision p) { return p == Precision::Extended ? "extended" : "binary64"; }
std::string to_string(CounterMode m) { return m == CounterMode::Raw ? "raw" : "bracketed"; }
std::string to_string(PhiKind k) {
  switch (k) {
    case PhiKind::One:
      return "one";
    case PhiKind::SubgradNorm:
      return "subgrad_norm";
    case PhiKind::Custom:
      return "custom";
  }
  return "?";
}

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(origin + ":" + std::to_string(line) + ": syntax error: " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

Precision precision_of(const Json& doc) {
  if (!doc.is_object() || !doc.contains("run") || !doc["run"].contains("precision")) {
    return Precision::Binary64;
  }
  const Node n(doc["run"]["precision"], "$.run.precision");
  const std::string s = n.text();
  if (s == "binary64") return Precision::Binary64;
  if (s == "extended") return Precision::Extended;
  n.fail("expected \"binary64\" or \"extended\"");
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("FEASIK_SEED");
  if (!v || !*v) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || v[0] == '-') {
    throw ConfigError(std::string("FEASIK_SEED: not an unsigned integer: ") + v);
  }
  return s;
}

template <std::floating_point Real>
std::shared_ptr<const BasicProblem<Real>> parse_problem(const Json& doc) {
  const Node root(doc, "$");
  if (!doc.is_object()) root.fail("expected an object");
  const std::uint64_t dim = root.at("dim").count();
  if (dim == 0) root.at("dim").fail("must be positive");
  const OuterSet<Real> outer =
      root.has("outer") ? parse_outer<Real>(root.at("outer")) : OuterSet<Real>();
  const Node cs = root.at("constraints");
  std::vector<Constraint<Real>> constraints;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    Constraint<Real> c = parse_constraint<Real>(cs.at(i), dim);
    if (c.dim() != dim) cs.at(i).fail("dimension does not match dim");
    constraints.push_back(std::move(c));
  }
  std::optional<CertifiedInterior<Real>> interior;
  if (root.has("interior")) {
    const Node n = root.at("interior");
    interior = CertifiedInterior<Real>{n.at("z").vector<Real>(), static_cast<Real>(n.at("R").number())};
  }
  return guarded(root, [&] {
    return std::make_shared<const BasicProblem<Real>>(dim, std::move(constraints), outer, interior);
  });
}

template <std::floating_point Real>
Json emit_problem(const BasicProblem<Real>& p) {
  if (!p.is_finite()) throw ConfigError("lazy pools have no document form");
  Json out;
  out["dim"] = p.dim();
  out["outer"] = emit_outer(p.outer());
  out["constraints"] = Json::array();
  for (const auto& c : p.constraints()) out["constraints"].push_back(emit_constraint(c));
  if (const auto& in = p.interior()) {
    out["interior"] = {{"z", real_array(in->z)}, {"R", static_cast<double>(in->R)}};
  }
  return out;
}

template <std::floating_point Real>
LoadedConfig<Real> parse_config(const Json& doc, std::optional<std::uint64_t> seed_override) {
  auto problem = parse_problem<Real>(doc);
  const Node root(doc, "$");
  const Node run = root.at("run");
  const std::uint64_t seed =
      seed_override ? *seed_override : (run.has("seed") ? run.at("seed").count() : 0);
  const Overrelaxation<Real> over = run.has("overrelaxation")
                                        ? parse_overrelaxation_node<Real>(run.at("overrelaxation"))
                                        : Overrelaxation<Real>::harmonic();
  Control<Real> control = parse_control<Real>(run.at("control"), *problem, over, seed, seed_override);
  const BasicVector<Real> x0 = run.at("x0").vector<Real>();

  return guarded(run, [&]() -> LoadedConfig<Real> {
    RunConfig<Real> cfg(problem, std::move(control), x0);
    cfg.overrelaxation = over;
    if (run.has("relaxation")) cfg.relaxation = parse_relaxation<Real>(run.at("relaxation"));
    if (run.has("phi")) cfg.phi = parse_phi(run.at("phi"));
    if (run.has("weights")) cfg.weights = parse_weights<Real>(run.at("weights"));
    if (run.has("counter_mode")) cfg.counter_mode = parse_counter_mode(run.at("counter_mode"));
    if (run.has("max_iter")) cfg.max_iter = run.at("max_iter").count();
    if (run.has("feas_window")) cfg.feas_window = run.at("feas_window").indices();
    if (run.has("feas_tol")) cfg.feas_tol = static_cast<Real>(run.at("feas_tol").number());
    cfg.validate();
    return {problem, std::move(cfg), seed, precision_of(doc)};
  });
}

template <std::floating_point Real>
Json emit_config(const LoadedConfig<Real>& c) {
  Json out = emit_problem(*c.problem);
  const RunConfig<Real>& r = c.run;
  Json run;
  run["control"] = emit_control(r.control);
  run["relaxation"] = emit_relaxation(r.relaxation);
  run["overrelaxation"] = emit_overrelaxation_impl(r.overrelaxation);
  if (r.phi.kind() == PhiKind::Custom) throw ConfigError("custom phi has no document form");
  run["phi"] = to_string(r.phi.kind());
  run["weights"] = emit_weights(r.weights);
  run["counter_mode"] = to_string(r.counter_mode);
  run["x0"] = real_array(r.x0);
  run["max_iter"] = r.max_iter;
  run["feas_window"] = index_array(r.feas_window);
  run["feas_tol"] = static_cast<double>(r.feas_tol);
  run["precision"] = to_string(c.precision);
  run["seed"] = c.seed;
  out["run"] = std::move(run);
  return out;
}

template <std::floating_point Real>
Overrelaxation<Real> parse_overrelaxation(const Json& doc) {
  return parse_overrelaxation_node<Real>(Node(doc, "$"));
}

template <std::floating_point Real>
Json emit_overrelaxation(const Overrelaxation<Real>& o) {
  return emit_overrelaxation_impl(o);
}

SweepGrid parse_sweep(const Json& doc, std::optional<std::uint64_t> seed_override) {
  const Node root(doc, "$");
  if (!doc.is_object()) root.fail("expected an object");
  SweepGrid g;
  g.instances = root.at("instances").count();
  g.seed = seed_override ? *seed_override : (root.has("seed") ? root.at("seed").count() : 0);
  const Node controls = root.at("controls");
  for (std::size_t j = 0; j < controls.size(); ++j) g.controls.push_back(controls.at(j).text());
  const Node phis = root.at("phi");
  for (std::size_t j = 0; j < phis.size(); ++j) g.phis.push_back(parse_phi(phis.at(j)));
  if (root.has("overrelaxation")) {
    const Node os = root.at("overrelaxation");
    for (std::size_t j = 0; j < os.size(); ++j) {
      (void)parse_overrelaxation_node<double>(os.at(j));
      g.overrelaxations.push_back(os.at(j).json());
    }
  } else {
    g.overrelaxations.push_back({{"kind", "harmonic"}, {"scale", 1.0}});
  }
  if (root.has("alpha")) {
    g.alpha = root.at("alpha").number();
    (void)guarded(root.at("alpha"), [&] { return Relaxation<double>::constant(g.alpha); });
  }
  if (root.has("counter_mode")) g.counter_mode = parse_counter_mode(root.at("counter_mode"));
  if (root.has("max_iter")) g.max_iter = root.at("max_iter").count();
  if (g.max_iter == 0) root.at("max_iter").fail("must be positive");
  if (g.instances == 0 || g.controls.empty() || g.phis.empty() || g.overrelaxations.empty()) {
    root.fail("empty grid");
  }
  return g;
}

#define FEASIK_INSTANTIATE(Real)                                                          \
  template std::shared_ptr<const BasicProblem<Real>> parse_problem<Real>(const Json&);    \
  template LoadedConfig<Real> parse_config<Real>(const Json&, std::optional<std::uint64_t>); \
  template Json emit_problem<Real>(const BasicProblem<Real>&);                            \
  template Json emit_config<Real>(const LoadedConfig<Real>&);                             \
  template Overrelaxation<Real> parse_overrelaxation<Real>(const Json&);                  \
  template Json emit_overrelaxation<Real>(const Overrelaxation<Real>&);

FEASIK_INSTANTIATE(double)
FEASIK_INSTANTIATE(long double)

#undef FEASIK_INSTANTIATE

}  // namespace feasik
