// dirform: command-line driver for energy measures, index, gradients and the
// invariant suites. Exit codes: 0 pass, 1 check failure, 2 usage or I/O error.

#include "dirform/dirform.hpp"

#include <CLI11.hpp>

#include <ctime>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace dirform;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::uint64_t seed = 1;
  Tolerances tol;
  std::string out;
  unsigned workers = 0;
};

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text(g.out, text);
  }
}

/// Inline JSON (starts with '[', '{' or '"') or a path to a JSON file.
json json_arg(const std::string& s) {
  if (!s.empty() && (s.front() == '[' || s.front() == '{' || s.front() == '"')) {
    try {
      return json::parse(s);
    } catch (const json::exception& e) {
      throw IoError(std::string("inline JSON does not parse: ") + e.what());
    }
  }
  return read_json(s);
}

/// Function files are {"backend":..., "function": payload}; a bare payload is
/// accepted as well.
template <DirichletModel M>
FunctionOf<M> function_arg(const M& model, const std::string& s) {
  json j = json_arg(s);
  if (j.is_object() && j.contains("function")) {
    if (j.contains("backend") && backend_from_string(j.at("backend").get<std::string>()) != model.atoms().kind()) {
      throw BackendMismatch("function file is for a different backend");
    }
    j = j.at("function");
  }
  return function_from_json(model, j);
}

std::string stamp() {
  const auto now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}


void print_report(const SuiteReport& r, std::ostream& os) {
  for (const auto& c : r.checks) {
    os << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(26) << c.name << " worst=" << format_double(c.worst)
       << " tol=" << format_double(c.tolerance);
    if (!c.location.empty()) os << " at " << c.location;
    if (!c.detail.empty()) os << " (" << c.detail << ")";
    os << "\n";
  }
  os << (r.pass() ? "overall: pass" : "overall: fail") << "\n";
}

// ---------------------------------------------------------------------------

int cmd_generate(const Globals& g, const std::string& kind, std::size_t n, int level, int dim, int grid, double edge_p) {
  AnyModel model = GraphForm{};
  if (kind == "graph:random") {
    model = make_random_graph(n, g.seed, edge_p);
  } else if (kind == "graph:path") {
    model = make_path_graph(n);
  } else if (kind == "graph:complete") {
    model = make_complete_graph(n);
  } else if (kind == "sg") {
    model = SGForm(level);
  } else if (kind == "superposition") {
    model = SuperpositionForm(dim, grid);
  } else {
    throw CLI::ValidationError("--kind", "unknown model kind '" + kind + "'");
  }
  emit(g, model_to_json(model).dump(2) + "\n");
  const auto atoms = std::visit([](const auto& m) { return m.atoms().size(); }, model);
  std::cerr << "generated " << kind << " model with " << atoms << " atoms\n";
  return kExitPass;
}

int cmd_measures(const Globals& g, const AnyModel& any, const std::string& family) {
  return std::visit(
      [&](const auto& model) {
        const auto fam = resolve_family(model, family);
        std::vector<std::string> header{"atom_id"};
        std::vector<Vector> cols;
        for (std::size_t k = 0; k < fam.size(); ++k) {
          header.push_back("mu_" + std::to_string(k + 1));
          cols.push_back(model.energy_measure(fam[k]).weights());
        }
        CsvTable t(header);
        for (std::size_t x = 0; x < model.atoms().size(); ++x) {
          std::vector<double> row;
          for (const auto& c : cols) row.push_back(c[static_cast<Eigen::Index>(x)]);
          t.add(model.atoms().id(x), row);
        }
        emit(g, t.str());
        for (std::size_t k = 0; k < fam.size(); ++k) {
          std::cerr << "energy_" << k + 1 << " = " << format_double(model.energy(fam[k], fam[k])) << "\n";
        }
        return kExitPass;
      },
      any);
}

int cmd_medm(const Globals& g, const AnyModel& any, const std::string& family) {
  return std::visit(
      [&](const auto& model) {
        const auto fam = resolve_family(model, family);
        const auto dom = build_medm(model, std::span<const FunctionOf<std::decay_t<decltype(model)>>>(fam));
        CsvTable t({"atom_id", "nu"});
        for (std::size_t x = 0; x < model.atoms().size(); ++x) t.add(model.atoms().id(x), {dom.nu[x]});
        emit(g, t.str());
        if (dom.degenerate) std::cerr << "warning: dominant measure vanishes identically\n";
        return kExitPass;
      },
      any);
}

int cmd_index(const Globals& g, const AnyModel& any, const std::string& family) {
  return std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        const auto fam = resolve_family(model, family);
        const std::span<const FunctionOf<M>> sp(fam);
        const auto dom = build_medm(model, sp);
        const auto idx = pointwise_index(gram_field(model, sp, dom.nu, g.tol.tau_zero), g.tol.rank);
        CsvTable t({"atom_id", "p"});
        for (std::size_t x = 0; x < model.atoms().size(); ++x) t.add_raw(model.atoms().id(x) + "," + std::to_string(idx.p[x]));
        emit(g, t.str());
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < idx.margin.size(); ++x)
          if (idx.nu_positive[x]) margin = std::min(margin, idx.margin[x]);
        std::cerr << "index " << idx.index << ", min stability margin " << format_double(margin) << " decades\n";
        return kExitPass;
      },
      any);
}

template <class T>
json tuple_to_json(const T& t, const AtomSpace& atoms) {
  json cond = json::object();
  for (std::size_t x = 0; x < atoms.size(); ++x) {
    cond[atoms.id(x)] = std::isfinite(t.condition[x]) ? json(t.condition[x]) : json(nullptr);
  }
  json coeffs = json::array();
  for (Eigen::Index r = 0; r < t.coefficients.rows(); ++r) {
    coeffs.push_back(std::vector<double>(t.coefficients.cols()));
    for (Eigen::Index c = 0; c < t.coefficients.cols(); ++c) coeffs.back()[static_cast<std::size_t>(c)] = t.coefficients(r, c);
  }
  return {{"seed", t.seed},
          {"redraws", t.redraws},
          {"p", t.p()},
          {"in_G", t.in_g},
          {"in_Ghat", t.in_ghat},
          {"worst_atom", atoms.id(t.worst_atom)},
          {"worst_condition", std::isfinite(t.worst_condition) ? json(t.worst_condition) : json(nullptr)},
          {"coefficients", coeffs},
          {"condition", cond}};
}

int cmd_sample(const Globals& g, const AnyModel& any, const std::string& family) {
  return std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        const auto fam = resolve_family(model, family);
        const auto s = riemann_setup<M>(model, fam, g.seed, g.tol);
        emit(g, tuple_to_json(s.tuple, model.atoms()).dump(2) + "\n");
        return kExitPass;
      },
      any);
}

int cmd_grad(const Globals& g, const AnyModel& any, const std::string& family, const std::string& function) {
  return std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        const auto f = function_arg(model, function);
        const auto s = riemann_setup<M>(model, resolve_family(model, family), g.seed, g.tol);
        const auto grad = gradient(model, f, s.tuple);
        std::vector<std::string> header{"atom_id"};
        for (std::size_t i = 0; i < s.tuple.p(); ++i) header.push_back("comp_" + std::to_string(i + 1));
        CsvTable t(header);
        for (std::size_t x = 0; x < grad.size(); ++x) t.add(model.atoms().id(x), std::span<const double>(grad[x].data(), static_cast<std::size_t>(grad[x].size())));
        emit(g, t.str());
        return kExitPass;
      },
      any);
}

// ---------------------------------------------------------------------------

const std::vector<std::string> kSuites{"total",     "polarization", "schwarz", "constant",       "sg",
                                       "kusuoka",   "partition",    "index",   "sample",         "schur",
                                       "remainder", "reconstruction", "derivation", "repr",      "isometry"};

bool selected(const CheckResult& c, const std::string& suite) {
  if (c.name == suite || c.name.starts_with(suite + "-")) return true;
  return (suite == "sg" && c.name.starts_with("sg-"));
}

SuiteReport filter(const SuiteReport& r, const std::string& suite) {
  SuiteReport out;
  for (const auto& c : r.checks)
    if (selected(c, suite)) out.add(c);
  return out;
}

SuiteReport run_suite(const std::string& suite, const std::optional<AnyModel>& model, const CheckOptions& opt, int levels) {
  auto need_model = [&]() -> const AnyModel& {
    if (!model) throw CLI::ValidationError("--model", "suite '" + suite + "' needs a model");
    return *model;
  };
  if (suite == "total" || suite == "polarization" || suite == "schwarz" || suite == "constant") {
    if (!model) return filter(check_energy_algebra_random_graphs(opt), suite);
    return std::visit([&](const auto& m) { return filter(check_energy_algebra(m, opt), suite); }, *model);
  }
  if (suite == "sg") return check_sg_structure(opt.seed);
  if (suite == "kusuoka") {
    int l = levels;
    if (model && std::holds_alternative<SGForm>(*model)) l = std::get<SGForm>(*model).level();
    return check_kusuoka(l);
  }
  if (suite == "partition") {
    const SGForm form = model && std::holds_alternative<SGForm>(*model) ? std::get<SGForm>(*model) : SGForm(std::min(levels, 8));
    const auto fam = default_family(form);
    return check_partition(form, fam, opt.tol.tau_zero);
  }
  if (suite == "derivation") return check_derivation(opt);
  if (suite == "index") {
    return std::visit([&](const auto& m) {
      const auto fam = default_family(m);
      return check_index(m, std::span<const FunctionOf<std::decay_t<decltype(m)>>>(fam), opt.tol);
    }, need_model());
  }
  if (suite == "sample") {
    return std::visit([&](const auto& m) {
      const auto fam = default_family(m);
      SuiteReport r;
      r.add(check_sampling(m, std::span<const FunctionOf<std::decay_t<decltype(m)>>>(fam), opt));
      return r;
    }, need_model());
  }
  if (suite == "schur" || suite == "remainder" || suite == "reconstruction") {
    return std::visit([&](const auto& m) {
      using M = std::decay_t<decltype(m)>;
      const auto s = riemann_setup<M>(m, default_family(m), opt.seed, opt.tol);
      return filter(check_gradient_machinery(m, s, opt, "model"), suite);
    }, need_model());
  }
  if (suite == "repr" || suite == "isometry") {
    const auto& m = need_model();
    if (!std::holds_alternative<GraphForm>(m)) throw BackendMismatch("suite '" + suite + "' runs on graph models only");
    const auto& graph = std::get<GraphForm>(m);
    return suite == "repr" ? check_representation(graph, opt, "model") : check_isometry(graph, opt, "model");
  }
  throw CLI::ValidationError("--suite", "unknown suite '" + suite + "'");
}

int cmd_check(const Globals& g, const std::optional<AnyModel>& model, const std::vector<std::string>& suites,
              CheckOptions opt, int levels) {
  SuiteReport all;
  for (const auto& s : suites) {
    auto r = run_suite(s, model, opt, levels);
    if (r.checks.empty()) throw Error("suite '" + s + "' produced no checks");
    all.merge(r);
  }
  print_report(all, std::cerr);
  if (!g.out.empty()) write_json(g.out, all.to_json());
  return all.pass() ? kExitPass : kExitFail;
}

int cmd_simulate(const Globals& g, const AnyModel& any, const std::string& function, std::size_t paths, double horizon,
                 const std::string& init, const std::string& per_path_csv) {
  if (!std::holds_alternative<GraphForm>(any)) throw BackendMismatch("simulate runs on graph models only");
  const auto& graph = std::get<GraphForm>(any);
  const ChainModel chain(graph);
  const Vector f = function.empty() ? Vector(Vector::LinSpaced(static_cast<Eigen::Index>(graph.size()), 0.0,
                                                                    static_cast<double>(graph.size()) - 1.0))
                                    : function_arg(graph, function);
  const auto law = InitialLaw::parse(init, graph.atoms());
  const auto s = riemann_setup(graph, default_family(graph), g.seed, g.tol);
  const auto ensemble = simulate_ensemble(chain, g.seed, paths, horizon, law, g.workers);
  const auto spec = MAFSpec::fukushima(f);
  const auto rep = representation_check(chain, ensemble, spec, s.tuple);
  json summary;
  if (law.stationary) {
    const auto iso = energy_isometry(chain, spec, s.tuple, ensemble);
    summary = {{"e_exact", iso.e_exact}, {"e_mc", iso.e_mc}, {"se", iso.se}, {"half_norm", iso.half_norm}};
  } else {
    const auto iso = energy_isometry(chain, spec, s.tuple, {});
    summary = {{"e_exact", iso.e_exact}, {"e_mc", nullptr}, {"se", nullptr}, {"half_norm", iso.half_norm}};
  }
  summary["sup_repr_error"] = rep.max_error;
  summary["paths"] = paths;
  summary["horizon"] = horizon;
  summary["seed"] = g.seed;
  emit(g, summary.dump(2) + "\n");
  if (!per_path_csv.empty()) {
    CsvTable t({"path_id", "jumps", "M_T", "sup_abs_M", "sup_repr_error"});
    for (const auto& p : ensemble) {
      const auto m = fukushima_martingale(chain, p, f);
      const auto r = realize(chain, p, representation_spec(representation_integrand(chain, spec, s.tuple), s.tuple));
      t.add(std::to_string(p.path_id), {static_cast<double>(p.jumps()), m.terminal(), m.sup_abs(), sup_abs_difference(m, r).value});
    }
    t.save(per_path_csv);
  }
  return rep.pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------

template <DirichletModel M>
SuiteReport pipeline_body(const M& model, const std::vector<FunctionOf<M>>& family, const CheckOptions& opt,
                          const fs::path& dir, json& summary) {
  const auto s = riemann_setup<M>(model, family, opt.seed, opt.tol);
  const auto& atoms = model.atoms();

  CsvTable nu({"atom_id", "nu"});
  CsvTable idx({"atom_id", "p"});
  for (std::size_t x = 0; x < atoms.size(); ++x) {
    nu.add(atoms.id(x), {s.dom.nu[x]});
    idx.add_raw(atoms.id(x) + "," + std::to_string(s.index.p[x]));
  }
  nu.save(dir / "nu.csv");
  idx.save(dir / "index.csv");
  write_json(dir / "tuple.json", tuple_to_json(s.tuple, atoms));

  std::mt19937_64 rng(opt.seed);
  const auto probe = random_in_span(model, std::span<const FunctionOf<M>>(s.family), rng);
  const auto grad = gradient(model, probe, s.tuple);
  const Vector schur = schur_residual(model, probe, s.tuple);
  const Vector rem = remainder_density(model, probe, s.tuple);
  std::vector<std::string> header{"atom_id"};
  for (std::size_t i = 0; i < s.tuple.p(); ++i) header.push_back("comp_" + std::to_string(i + 1));
  CsvTable gt(header);
  CsvTable rt({"atom_id", "schur_residual", "remainder_density"});
  for (std::size_t x = 0; x < atoms.size(); ++x) {
    gt.add(atoms.id(x), std::span<const double>(grad[x].data(), static_cast<std::size_t>(grad[x].size())));
    rt.add(atoms.id(x), {schur[static_cast<Eigen::Index>(x)], rem[static_cast<Eigen::Index>(x)]});
  }
  gt.save(dir / "gradient.csv");
  rt.save(dir / "residuals.csv");
  write_json(dir / "probe_function.json", {{"backend", std::string(to_string(atoms.kind()))}, {"function", function_to_json(model, probe)}});

  summary["index"] = s.index.index;
  summary["family_size"] = s.family.size();
  summary["redraws"] = s.tuple.redraws;
  summary["worst_condition"] = s.tuple.worst_condition;

  SuiteReport r;
  const std::span<const FunctionOf<M>> fam(s.family);
  r.merge(check_energy_algebra(model, opt));
  r.merge(check_index(model, fam, opt.tol));
  r.add(check_sampling(model, fam, opt));
  r.merge(check_gradient_machinery(model, s, opt, "model"));
  if constexpr (std::is_same_v<M, GraphForm>) {
    r.merge(check_representation(model, opt, "model"));
    r.merge(check_isometry(model, opt, "model"));
  } else if constexpr (std::is_same_v<M, SGForm>) {
    r.merge(check_sg_structure(opt.seed));
    r.merge(check_partition(model, fam, opt.tol.tau_zero));
    const auto st = kusuoka_ratio_stats(model.level());
    CsvTable kt({"level", "cells", "mean_ratio", "small_ratio_mass", "min_ratio", "max_ratio"});
    for (const auto& l : st.levels) {
      kt.add(std::to_string(l.level), {static_cast<double>(l.cells), l.mean_ratio, l.small_ratio_mass, l.min_ratio, l.max_ratio});
    }
    kt.save(dir / "kusuoka.csv");
    if (model.level() >= 2) r.merge(check_kusuoka(model.level()));
  } else {
    r.merge(check_derivation(opt));
    int bulk = 0, surface = 0;
    for (std::size_t x = 0; x < atoms.size(); ++x) (model.is_surface(x) ? surface : bulk) = s.index.p[x];
    summary["bulk_p"] = bulk;
    summary["surface_p"] = surface;
  }
  return r;
}

int cmd_pipeline(const Globals& g, const AnyModel& any, const std::string& family, const CheckOptions& opt) {
  const fs::path root = g.out.empty() ? fs::path("runs") : fs::path(g.out);
  const fs::path dir = root / ("run-" + stamp() + "-seed" + std::to_string(g.seed));
  fs::create_directories(dir);
  write_json(dir / "model.json", model_to_json(any));
  json summary = {{"backend", std::string(to_string(backend_of(any)))}, {"seed", g.seed}};
  SuiteReport r;
  try {
    r = std::visit([&](const auto& model) {
      using M = std::decay_t<decltype(model)>;
      return pipeline_body<M>(model, resolve_family(model, family), opt, dir, summary);
    }, any);
  } catch (const SamplingFailure& e) {
    r.add({"sample", false, e.condition(), opt.tol.cond_max, e.atom(), e.what(), 0.0});
  } catch (const DominationError& e) {
    r.add({"domination", false, e.mu_value(), opt.tol.tau_zero, e.atom(), e.what(), 0.0});
  } catch (const IllConditioned& e) {
    r.add({"gradient", false, e.condition(), opt.tol.cond_max, e.atom(), e.what(), 0.0});
  }
  json report = r.to_json();
  report["summary"] = summary;
  write_json(dir / "report.json", report);
  print_report(r, std::cerr);
  std::cout << dir.string() << "\n";
  if (const auto* f = r.first_failure()) std::cerr << "first failing check: " << f->name << "\n";
  return r.pass() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy measures, pointwise index and gradients of finite Dirichlet forms"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--tol-rank", g.tol.rank, "Relative singular-value cutoff for the pointwise index")->capture_default_str();
  app.add_option("--cond-max", g.tol.cond_max, "Condition-number ceiling for coordinate tuples")->capture_default_str();
  app.add_option("--tau-zero", g.tol.tau_zero, "Atoms with nu below this weight count as null")->capture_default_str();
  app.add_option("--out", g.out, "Output file (or run directory for pipeline)");
  app.add_option("--workers", g.workers, "Worker threads for path simulation (0 = hardware)");

  std::string model_path, family = "default", function;
  auto add_model = [&](CLI::App* c, bool required = true) {
    auto* o = c->add_option("--model", model_path, "Model JSON file")->check(CLI::ExistingFile);
    if (required) o->required();
  };
  auto add_family = [&](CLI::App* c) {
    c->add_option("--family", family, "default | indicators | path to a family JSON file")->capture_default_str();
  };

  auto* gen = app.add_subcommand("generate", "Write a model JSON file");
  std::string kind;
  std::size_t n = 3;
  int level = 4, dim = 2, grid = 32;
  double edge_p = 0.1;
  gen->add_option("--kind", kind, "graph:random | graph:path | graph:complete | sg | superposition")->required();
  gen->add_option("--n", n, "Vertex count for graphs")->capture_default_str();
  gen->add_option("--level", level, "SG level")->capture_default_str();
  gen->add_option("--dim", dim, "Superposition dimension (2 or 3)")->capture_default_str();
  gen->add_option("--grid", grid, "Superposition grid cells per axis")->capture_default_str();
  gen->add_option("--edge-p", edge_p, "Extra-edge probability for random graphs")->capture_default_str();

  auto* meas = app.add_subcommand("measures", "Energy measures of the family, one CSV column per function");
  add_model(meas);
  add_family(meas);
  auto* medm = app.add_subcommand("medm", "Minimal energy-dominant measure of the family");
  add_model(medm);
  add_family(medm);
  auto* index = app.add_subcommand("index", "Pointwise index as CSV atom_id,p");
  add_model(index);
  add_family(index);
  auto* sample = app.add_subcommand("sample", "Sample a coordinate tuple; JSON output");
  add_model(sample);
  add_family(sample);
  auto* grad = app.add_subcommand("grad", "Gradient of a function as CSV atom_id,comp_1..comp_p");
  add_model(grad);
  add_family(grad);
  grad->add_option("--function", function, "Function JSON file or inline JSON payload")->required();

  auto* check = app.add_subcommand("check", "Run named invariant suites");
  add_model(check, false);
  std::vector<std::string> suites;
  CheckOptions copt;
  int levels = 8;
  check->add_option("--suite", suites, "Suite names (comma separated)")->delimiter(',')->required()->check(CLI::IsMember(kSuites));
  check->add_option("--trials", copt.trials, "Random functions per model")->capture_default_str();
  check->add_option("--graphs", copt.graphs, "Random graphs when no model is given")->capture_default_str();
  check->add_option("--paths", copt.paths, "Paths for the representation suite")->capture_default_str();
  check->add_option("--mc-paths", copt.mc_paths, "Stationary paths for the Monte-Carlo energy")->capture_default_str();
  check->add_option("--horizon", copt.horizon, "Path horizon")->capture_default_str();
  check->add_option("--levels", levels, "SG levels for kusuoka/partition without a model")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Simulate the jump chain and check the representation of M^[f]");
  add_model(sim);
  std::size_t paths = 1000;
  double horizon = 10.0;
  std::string init = "stationary", per_path;
  sim->add_option("--function", function, "Function JSON file or inline payload (default: a linear ramp)");
  sim->add_option("--paths", paths, "Number of paths")->capture_default_str();
  sim->add_option("--horizon", horizon, "Horizon T")->capture_default_str();
  sim->add_option("--init", init, "stationary | atom:<id>")->capture_default_str();
  sim->add_option("--per-path-csv", per_path, "Optional per-path CSV");

  auto* pipe = app.add_subcommand("pipeline", "Full run into a timestamped directory");
  add_model(pipe);
  add_family(pipe);
  CheckOptions popt;
  pipe->add_option("--trials", popt.trials, "Random functions per check")->capture_default_str();
  pipe->add_option("--paths", popt.paths, "Paths for the representation suite")->capture_default_str();
  pipe->add_option("--mc-paths", popt.mc_paths, "Stationary paths for the Monte-Carlo energy")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    g.tol.validate();
    auto load = [&] { return load_model(model_path); };
    if (gen->parsed()) return cmd_generate(g, kind, n, level, dim, grid, edge_p);
    if (meas->parsed()) return cmd_measures(g, load(), family);
    if (medm->parsed()) return cmd_medm(g, load(), family);
    if (index->parsed()) return cmd_index(g, load(), family);
    if (sample->parsed()) return cmd_sample(g, load(), family);
    if (grad->parsed()) return cmd_grad(g, load(), family, function);
    if (check->parsed()) {
      CheckOptions o = copt;
      o.seed = g.seed;
      o.tol = g.tol;
      o.workers = g.workers;
      std::optional<AnyModel> m;
      if (!model_path.empty()) m = load();
      return cmd_check(g, m, suites, o, levels);
    }
    if (sim->parsed()) return cmd_simulate(g, load(), function, paths, horizon, init, per_path);
    if (pipe->parsed()) {
      CheckOptions o = popt;
      o.seed = g.seed;
      o.tol = g.tol;
      o.workers = g.workers;
      return cmd_pipeline(g, load(), family, o);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SamplingFailure& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kExitFail;
  } catch (const DominationError& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kExitFail;
  } catch (const IllConditioned& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
