#pragma once

// Invariant suites shared by the CLI and the acceptance runner. Each check
// reports its worst-case error against a fixed tolerance and where that
// worst case occurred.

#include "dirform/io.hpp"
#include "dirform/kusuoka.hpp"
#include "dirform/stoch.hpp"

#include <chrono>
#include <functional>

namespace dirform {

struct CheckResult {
  std::string name;
  bool pass = true;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string location;
  std::string detail;
  double seconds = 0.0;
};

inline CheckResult bounded(std::string name, double worst, double tolerance, std::string location = {},
                           std::string detail = {}) {
  CheckResult r{std::move(name), worst <= tolerance, worst, tolerance, std::move(location), std::move(detail), 0.0};
  return r;
}

struct SuiteReport {
  std::vector<CheckResult> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  void add(CheckResult c) { checks.push_back(std::move(c)); }
  void merge(const SuiteReport& o) { checks.insert(checks.end(), o.checks.begin(), o.checks.end()); }

  const CheckResult* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }

  json to_json() const {
    json arr = json::array();
    for (const auto& c : checks) {
      arr.push_back({{"name", c.name},
                     {"status", c.pass ? "pass" : "fail"},
                     {"worst", c.worst},
                     {"tolerance", c.tolerance},
                     {"location", c.location},
                     {"detail", c.detail}});
    }
    return {{"status", pass() ? "pass" : "fail"}, {"checks", arr}};
  }
};

struct CheckOptions {
  std::uint64_t seed = 1;
  Tolerances tol;
  /// random functions per model
  int trials = 100;
  /// random graphs for the form-level suites
  int graphs = 100;
  std::size_t max_vertices = 50;
  /// random subsets for the Cauchy-Schwarz check
  int subsets = 50;
  std::size_t paths = 1000;
  std::size_t mc_paths = 10000;
  double horizon = 10.0;
  int specs = 20;
  unsigned workers = 0;
  int sg_levels = 8;
  int sample_seeds = 100;
};

/// Random element of span(family) plus a constant.
template <DirichletModel M>
FunctionOf<M> random_in_span(const M& model, std::span<const FunctionOf<M>> family, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<FunctionOf<M>> fs(family.begin(), family.end());
  fs.push_back(model.constant(1.0));
  std::vector<double> c(fs.size());
  for (auto& v : c) v = normal(rng);
  return model.combine(c, fs);
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Running maximum with the location of the worst case.
struct Worst {
  double value = 0.0;
  std::string where;

  void update(double v, const std::function<std::string()>& loc) {
    if (v > value || std::isnan(v)) {
      value = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      where = loc();
    }
  }
};

inline std::string graph_label(std::size_t k, const GraphForm& g) {
  return "graph #" + std::to_string(k) + " (" + std::to_string(g.size()) + " vertices)";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Energy-measure algebra

struct AlgebraWorst {
  detail::Worst total, polarization, schwarz, constant;
};

template <DirichletModel M>
void accumulate_algebra(const M& model, std::mt19937_64& rng, int trials, int subsets, AlgebraWorst& w,
                        const std::string& label) {
  std::normal_distribution<double> normal;
  const auto n = model.atoms().size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (int t = 0; t < trials; ++t) {
    const auto f = random_function(model, rng);
    const auto g = random_function(model, rng);
    const auto where = [&] { return label + ", trial " + std::to_string(t); };

    const auto mf = model.energy_measure(f);
    const auto mg = model.energy_measure(g);
    const double ef = model.energy(f, f);
    w.total.update(relative_error(mf.total(), 2.0 * ef, 1e-300), where);

    const auto mfg = model.mutual_energy_measure(f, g);
    const auto pol = polarized_mutual_measure(model, f, g);
    const double scale = std::max(mf.total() + mg.total(), 1e-300);
    w.polarization.update((mfg.weights - pol.weights).cwiseAbs().maxCoeff() / scale, where);

    for (int s = 0; s < subsets; ++s) {
      std::vector<std::size_t> subset;
      const auto size = 1 + pick(rng) % n;
      for (std::size_t k = 0; k < size; ++k) subset.push_back(pick(rng));
      std::sort(subset.begin(), subset.end());
      subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
      const double lhs = std::abs(mfg.on(subset));
      const double rhs = std::sqrt(mf.on(subset) * mg.on(subset));
      w.schwarz.update(std::max(0.0, lhs - rhs) / std::max(rhs, 1e-300), where);
    }

    const double c = normal(rng);
    const auto shifted = linear_combination(model, 1.0, f, c, model.constant(1.0));
    const auto ms = model.energy_measure(shifted);
    w.constant.update((ms.weights() - mf.weights()).cwiseAbs().maxCoeff() / std::max(mf.total(), 1e-300), where);
  }
}

inline SuiteReport algebra_report(const AlgebraWorst& w, double tol) {
  SuiteReport r;
  r.add(bounded("total", w.total.value, tol, w.total.where));
  r.add(bounded("polarization", w.polarization.value, tol, w.polarization.where));
  r.add(bounded("schwarz", w.schwarz.value, tol, w.schwarz.where));
  r.add(bounded("constant", w.constant.value, tol, w.constant.where));
  return r;
}

/// Seeded random connected graphs with 2..max_vertices vertices.
inline SuiteReport check_energy_algebra_random_graphs(const CheckOptions& opt, double tol = 1e-10) {
  detail::Stopwatch clock;
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> size(2, std::max<std::size_t>(2, opt.max_vertices));
  AlgebraWorst w;
  for (int k = 0; k < opt.graphs; ++k) {
    const auto g = make_random_graph(size(rng), rng(), 0.1);
    accumulate_algebra(g, rng, std::max(1, opt.trials / 20), opt.subsets, w, detail::graph_label(static_cast<std::size_t>(k), g));
  }
  auto r = algebra_report(w, tol);
  for (auto& c : r.checks) c.seconds = clock.seconds();
  return r;
}

template <DirichletModel M>
SuiteReport check_energy_algebra(const M& model, const CheckOptions& opt, double tol = 1e-10) {
  std::mt19937_64 rng(opt.seed);
  AlgebraWorst w;
  accumulate_algebra(model, rng, opt.trials, opt.subsets, w, "model");
  return algebra_report(w, tol);
}

// ---------------------------------------------------------------------------
// Sierpinski gasket structure

inline SuiteReport check_sg_structure(std::uint64_t seed = 1, double tol = 1e-12) {
  SuiteReport r;
  const auto& mats = sg_extension_matrices();
  double rowsum = 0.0;
  double eig = 0.0;
  for (const auto& a : mats.A) {
    rowsum = std::max(rowsum, (a.rowwise().sum() - Vector3::Ones()).cwiseAbs().maxCoeff());
    Eigen::EigenSolver<Eigen::Matrix3d> es(a, false);
    std::array<double, 3> ev{};
    for (int k = 0; k < 3; ++k) {
      eig = std::max(eig, std::abs(es.eigenvalues()[k].imag()));
      ev[static_cast<std::size_t>(k)] = es.eigenvalues()[k].real();
    }
    std::sort(ev.begin(), ev.end(), std::greater<>());
    eig = std::max({eig, std::abs(ev[0] - 1.0), std::abs(ev[1] - 0.6), std::abs(ev[2] - 0.2)});
  }
  r.add(bounded("sg-row-sums", rowsum, tol));
  r.add(bounded("sg-eigenvalues", eig, tol, {}, "expected {1, 3/5, 1/5}"));

  // sum_i (5/3) Q(A_i a, A_i b) = Q(a, b)
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double self = 0.0;
  for (int t = 0; t < 100; ++t) {
    Vector3 a(normal(rng), normal(rng), normal(rng));
    Vector3 b(normal(rng), normal(rng), normal(rng));
    double s = 0.0;
    for (const auto& ai : mats.A) s += kSGRenormalization * sg_quadratic(ai * a, ai * b);
    const double q = sg_quadratic(a, b);
    self = std::max(self, std::abs(s - q) / std::max(std::sqrt(sg_quadratic(a, a) * sg_quadratic(b, b)), 1e-300));
  }
  r.add(bounded("sg-self-similarity", self, tol));
  return r;
}

inline SuiteReport check_kusuoka(int levels) {
  const auto st = kusuoka_ratio_stats(levels);
  SuiteReport r;
  std::string trend;
  double worst_step = -std::numeric_limits<double>::infinity();
  std::size_t at = 0;
  for (std::size_t l = 1; l < st.levels.size(); ++l) {
    trend += (l > 1 ? " " : "") + format_double(st.levels[l].mean_ratio);
    if (l >= 2) {
      const double step = st.levels[l].mean_ratio - st.levels[l - 1].mean_ratio;
      if (step > worst_step) {
        worst_step = step;
        at = l;
      }
    }
  }
  CheckResult c;
  c.name = "kusuoka-decreasing";
  c.pass = st.strictly_decreasing(1);
  c.worst = st.levels.size() > 2 ? worst_step : 0.0;
  c.tolerance = 0.0;
  c.location = "level " + std::to_string(at);
  c.detail = "mean ratio by level: " + trend;
  r.add(c);
  int lo = 2, hi = 0;
  for (std::size_t l = 1; l < st.levels.size(); ++l) {
    lo = std::min(lo, st.levels[l].min_rank);
    hi = std::max(hi, st.levels[l].max_rank);
  }
  CheckResult rank{"kusuoka-rank", lo >= 1 && hi <= 2, 0.0, 0.0, {}, "cell ranks in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]", 0.0};
  r.add(rank);
  return r;
}

/// L1(nu) distance of block densities to the finest densities, for every
/// ordered pair i <= j of the generator family.
inline SuiteReport check_partition(const SGForm& form, std::span<const SGFunction> family, double tau_zero = Tolerances{}.tau_zero) {
  const auto dom = build_medm(form, family);
  const auto chain = PartitionChain::sg_cells(form.level());
  const auto finest = chain.level_count() - 1;
  detail::Worst increase;
  double final_distance = 0.0;
  std::string final_where;
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = i; j < family.size(); ++j) {
      const auto mu = form.mutual_energy_measure(family[i], family[j]);
      const auto target = partition_densities(mu, dom.nu, chain, finest, tau_zero);
      double prev = std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < chain.level_count(); ++l) {
        const double d = l1_distance(partition_densities(mu, dom.nu, chain, l, tau_zero), target, dom.nu);
        if (std::isfinite(prev)) {
          increase.update(std::max(0.0, d - prev) / std::max(prev, 1e-300), [&] {
            return "pair (" + std::to_string(i) + "," + std::to_string(j) + ") level " + std::to_string(l);
          });
        }
        prev = d;
      }
      if (prev > final_distance) {
        final_distance = prev;
        final_where = "pair (" + std::to_string(i) + "," + std::to_string(j) + ")";
      }
    }
  }
  SuiteReport r;
  r.add(bounded("partition-monotone", increase.value, 1e-12, increase.where, "relative increase of the L1 distance"));
  r.add(bounded("partition-finest", final_distance, 0.0, final_where, "distance at the finest level"));
  return r;
}

// ---------------------------------------------------------------------------
// Index, sampling, gradient

/// PSD invariant of the gram field, nu(X(0)) = 0, p(x) <= N, and the
/// pointwise index where it is known in closed form.
template <DirichletModel M>
SuiteReport check_index(const M& model, std::span<const FunctionOf<M>> family, const Tolerances& tol = {}) {
  const auto dom = build_medm(model, family);
  const auto field = gram_field(model, family, dom.nu, tol.tau_zero);
  const auto index = pointwise_index(field, tol.rank);
  SuiteReport r;
  detail::Worst psd;
  for (std::size_t x = 0; x < field.size(); ++x) {
    if (!field.nu_positive[x]) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> es(field.z[x], Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    psd.update(std::max(0.0, -lo) / (hi + 1.0), [&] { return model.atoms().id(x); });
  }
  r.add(bounded("gram-psd", psd.value, 1e-10, psd.where));
  r.add(bounded("null-stratum-mass", index.null_stratum_mass, tol.tau_zero));
  const int pmax = *std::max_element(index.p.begin(), index.p.end());
  r.add(bounded("index-bound", pmax > static_cast<int>(family.size()) ? 1.0 : 0.0, 0.0, {},
                "index " + std::to_string(index.index) + ", family size " + std::to_string(family.size())));

  std::function<int(std::size_t)> expected;
  if constexpr (std::is_same_v<M, SuperpositionForm>) {
    expected = [&](std::size_t x) { return model.is_surface(x) ? model.dim() - 1 : model.dim(); };
  } else if constexpr (std::is_same_v<M, GraphForm>) {
    expected = [&](std::size_t x) { return static_cast<int>(model.degree(x)); };
  }
  if (expected) {
    std::size_t mismatches = 0;
    std::string first;
    for (std::size_t x = 0; x < index.p.size(); ++x) {
      if (field.nu_positive[x] && index.p[x] != expected(x)) {
        if (!mismatches++) {
          first = model.atoms().id(x) + ": p = " + std::to_string(index.p[x]) + ", expected " + std::to_string(expected(x));
        }
      }
    }
    r.add(bounded("pointwise-index", static_cast<double>(mismatches), 0.0, first,
                  "index " + std::to_string(index.index)));
    if constexpr (std::is_same_v<M, SuperpositionForm>) {
      r.add(bounded("global-index", std::abs(index.index - model.dim()), 0.0, {},
                    "index " + std::to_string(index.index) + ", n = " + std::to_string(model.dim())));
    }
  }
  return r;
}

struct SamplingStats {
  int seeds = 0;
  int first_draw_ghat = 0;
  int first_draw_g = 0;
  double worst_condition = 1.0;
  std::uint64_t worst_seed = 0;
  std::string worst_atom;
};

template <DirichletModel M>
SamplingStats first_draw_stats(const M& model, std::span<const FunctionOf<M>> family, std::uint64_t base_seed,
                               int seeds, const Tolerances& tol = {}) {
  const auto dom = build_medm(model, family);
  const auto index = pointwise_index(gram_field(model, family, dom.nu, tol.tau_zero), tol.rank);
  SamplingStats s;
  s.seeds = seeds;
  for (int k = 0; k < seeds; ++k) {
    const auto seed = base_seed + static_cast<std::uint64_t>(k);
    const auto t = draw_coordinates(model, family, dom.nu, index, seed, 0, tol);
    s.first_draw_g += t.in_g;
    s.first_draw_ghat += t.in_ghat;
    if (t.worst_condition > s.worst_condition) {
      s.worst_condition = t.worst_condition;
      s.worst_seed = seed;
      s.worst_atom = model.atoms().id(t.worst_atom);
    }
  }
  return s;
}

template <DirichletModel M>
CheckResult check_sampling(const M& model, std::span<const FunctionOf<M>> family, const CheckOptions& opt,
                           const std::string& label = "sample") {
  const auto s = first_draw_stats(model, family, opt.seed, opt.sample_seeds, opt.tol);
  const int need = opt.sample_seeds - opt.sample_seeds / 100;
  CheckResult c;
  c.name = label;
  c.pass = s.first_draw_ghat >= need;
  c.worst = static_cast<double>(opt.sample_seeds - s.first_draw_ghat);
  c.tolerance = static_cast<double>(opt.sample_seeds - need);
  c.location = s.worst_atom.empty() ? "" : "seed " + std::to_string(s.worst_seed) + ", atom " + s.worst_atom;
  c.detail = std::to_string(s.first_draw_ghat) + "/" + std::to_string(s.seeds) + " first draws in G-hat (" +
             std::to_string(s.first_draw_g) + " in G); worst condition " + format_double(s.worst_condition);
  return c;
}

template <DirichletModel M>
struct RiemannSetup {
  std::vector<FunctionOf<M>> family;
  DominantMeasure dom;
  GramField field;
  IndexField index;
  CoordinateTuple<FunctionOf<M>> tuple;
};

template <DirichletModel M>
RiemannSetup<M> riemann_setup(const M& model, std::vector<FunctionOf<M>> family, std::uint64_t seed,
                              const Tolerances& tol = {}) {
  RiemannSetup<M> s;
  s.family = std::move(family);
  s.dom = build_medm(model, std::span<const FunctionOf<M>>(s.family));
  s.field = gram_field(model, std::span<const FunctionOf<M>>(s.family), s.dom.nu, tol.tau_zero);
  s.index = pointwise_index(s.field, tol.rank);
  s.tuple = sample_coordinates(model, std::span<const FunctionOf<M>>(s.family), s.dom.nu, s.index, seed, tol);
  return s;
}

/// Schur identity, remainder density, and energy reconstruction on random
/// functions in the span of the family.
template <DirichletModel M>
SuiteReport check_gradient_machinery(const M& model, const RiemannSetup<M>& s, const CheckOptions& opt,
                                     const std::string& label, double tol = 1e-8) {
  std::mt19937_64 rng(opt.seed ^ 0xabcdefULL);
  detail::Worst schur, rem, rec, ident;
  const std::span<const FunctionOf<M>> fam(s.family);
  for (int t = 0; t < opt.trials; ++t) {
    const auto f = random_in_span(model, fam, rng);
    const auto h = random_in_span(model, fam, rng);
    const Vector res = schur_residual(model, f, s.tuple);
    const Vector rd = remainder_density(model, f, s.tuple);
    const Vector df = detail::self_density(model, f, s.tuple);
    for (Eigen::Index x = 0; x < res.size(); ++x) {
      const auto where = [&] { return label + " atom " + model.atoms().id(static_cast<std::size_t>(x)) + ", trial " + std::to_string(t); };
      schur.update(res[x] / (1.0 + df[x]), where);
      rem.update(std::abs(rd[x]) / (1.0 + df[x]), where);
      ident.update(std::abs(std::abs(rd[x]) - res[x]) / (1.0 + df[x]), where);
    }
    const auto e = energy_reconstruction(model, f, h, s.tuple);
    rec.update(e.relative_error, [&] { return label + ", trial " + std::to_string(t); });
  }
  SuiteReport r;
  r.add(bounded("schur", schur.value, tol, schur.where));
  r.add(bounded("remainder", rem.value, tol, rem.where));
  r.add(bounded("schur-remainder-identity", ident.value, 1e-10, ident.where));
  r.add(bounded("reconstruction", rec.value, tol, rec.where));
  return r;
}

struct DerivationCase {
  std::string label;
  QuadraticMap psi;
  std::vector<Polynomial2> fs;
};

/// Ten product / chain-rule cases across n = 2 and n = 3.
inline std::vector<std::pair<int, DerivationCase>> derivation_cases() {
  std::vector<std::pair<int, DerivationCase>> out;
  auto map = [](double c, std::vector<double> b, std::vector<std::vector<double>> q) {
    QuadraticMap psi;
    psi.constant = c;
    psi.linear = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    psi.quadratic = Matrix::Zero(psi.linear.size(), psi.linear.size());
    for (std::size_t i = 0; i < q.size(); ++i)
      for (std::size_t j = 0; j < q[i].size(); ++j) psi.quadratic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = q[i][j];
    return psi;
  };
  const SuperpositionForm f2(2, 2);
  const SuperpositionForm f3(3, 2);
  auto p2 = [&](std::map<std::string, double> t, double c = 0.0) { return f2.from_terms(t, c); };
  auto p3 = [&](std::map<std::string, double> t, double c = 0.0) { return f3.from_terms(t, c); };
  out.push_back({2, {"identity of x1*x1", map(0, {1}, {{0}}), {p2({{"x1*x1", 1}})}}});
  out.push_back({2, {"constant map", map(2.5, {0}, {{0}}), {p2({{"x1", 1}})}}});
  out.push_back({2, {"product x1*y", map(0, {0, 0}, {{0, 0.5}, {0.5, 0}}), {p2({{"x1", 1}}), p2({{"y", 1}})}}});
  out.push_back({2, {"square of x1+2y", map(0, {0}, {{1}}), {p2({{"x1", 1}, {"y", 2}})}}});
  out.push_back({2, {"1+3u-u^2 of y", map(1, {3}, {{-1}}), {p2({{"y", 1}})}}});
  out.push_back({2, {"u^2+uv-v^2", map(0, {0, 0}, {{1, 0.5}, {0.5, -1}}), {p2({{"x1", 1}, {"y", -1}}), p2({{"x1", 1}, {"y", 0.5}})}}});
  out.push_back({2, {"linear in quadratics", map(0, {2, 1}, {{0, 0}, {0, 0}}), {p2({{"x1*y", 1}}), p2({{"y*y", 1}})}}});
  out.push_back({3, {"product x1*x2", map(0, {0, 0}, {{0, 0.5}, {0.5, 0}}), {p3({{"x1", 1}}), p3({{"x2", 1}})}}});
  out.push_back({3, {"uw+vw", map(0, {0, 0, 0}, {{0, 0, 0.5}, {0, 0, 0.5}, {0.5, 0.5, 0}}),
                     {p3({{"x1", 1}}), p3({{"x2", 1}}), p3({{"y", 1}})}}});
  out.push_back({3, {"square of x1+x2+y+1", map(0, {0}, {{1}}), {p3({{"x1", 1}, {"x2", 1}, {"y", 1}}, 1.0)}}});
  return out;
}

inline SuiteReport check_derivation(const CheckOptions& opt, int grid = 8, double tol = 1e-8) {
  detail::Worst w;
  std::map<int, RiemannSetup<SuperpositionForm>> setups;
  std::map<int, SuperpositionForm> forms;
  for (int n : {2, 3}) {
    forms.emplace(n, SuperpositionForm(n, grid));
    setups.emplace(n, riemann_setup(forms.at(n), forms.at(n).full_catalogue(), opt.seed, opt.tol));
  }
  for (const auto& [n, c] : derivation_cases()) {
    const double e = derivation_check(forms.at(n), c.psi, c.fs, setups.at(n).tuple);
    w.update(e, [&, n = n, label = c.label] { return "n=" + std::to_string(n) + " " + label; });
  }
  SuiteReport r;
  r.add(bounded("derivation", w.value, tol, w.where, "10 product/chain cases"));
  return r;
}

// ---------------------------------------------------------------------------
// Stochastic representation and isometry

/// Up to three summands with Gaussian weights and functions.
inline MAFSpec random_maf_spec(std::size_t atoms, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> count(1, 3);
  MAFSpec s;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) {
    Vector phi(static_cast<Eigen::Index>(atoms)), f(static_cast<Eigen::Index>(atoms));
    for (Eigen::Index x = 0; x < phi.size(); ++x) {
      phi[x] = normal(rng);
      f[x] = normal(rng);
    }
    s.terms.push_back({phi, f});
  }
  return s;
}

inline SuiteReport check_representation(const GraphForm& graph, const CheckOptions& opt, const std::string& label) {
  const ChainModel chain(graph);
  const auto s = riemann_setup(graph, default_family(graph), opt.seed, opt.tol);
  const auto paths = simulate_ensemble(chain, opt.seed, opt.paths, opt.horizon, InitialLaw::from_stationary(), opt.workers);
  std::mt19937_64 rng(opt.seed ^ 0x5eedULL);
  std::normal_distribution<double> normal;

  Vector f(static_cast<Eigen::Index>(graph.size()));
  for (Eigen::Index x = 0; x < f.size(); ++x) f[x] = normal(rng);
  const auto spec_f = MAFSpec::fukushima(f);
  const auto rep_f = representation_check(chain, paths, spec_f, s.tuple);
  const auto h = representation_integrand(chain, spec_f, s.tuple);
  const auto grad = gradient(graph, f, s.tuple);
  detail::Worst hg;
  for (std::size_t x = 0; x < graph.size(); ++x) {
    hg.update((h.h[x] - grad[x]).cwiseAbs().maxCoeff() / (1.0 + grad[x].cwiseAbs().maxCoeff()),
              [&] { return label + " atom " + graph.atoms().id(x); });
  }

  detail::Worst specs;
  for (int k = 0; k < opt.specs; ++k) {
    const auto spec = random_maf_spec(graph.size(), rng);
    const auto rep = representation_check(chain, paths, spec, s.tuple);
    specs.update(rep.max_scaled_error, [&] {
      std::string w = label + " spec " + std::to_string(k);
      if (rep.path) w += ", path " + std::to_string(*rep.path) + ", jump " + std::to_string(*rep.jump) + ", atom " + graph.atoms().id(*rep.atom);
      return w;
    });
  }
  SuiteReport r;
  std::string where = label;
  if (rep_f.path) where += ", path " + std::to_string(*rep_f.path) + ", jump " + std::to_string(*rep_f.jump) + ", atom " + graph.atoms().id(*rep_f.atom);
  r.add(bounded("repr-fukushima", rep_f.max_scaled_error, 1e-8, where,
                std::to_string(paths.size()) + " paths, edge error " + format_double(rep_f.edge_error)));
  r.add(bounded("repr-specs", specs.value, 1e-8, specs.where, std::to_string(opt.specs) + " random specs"));
  r.add(bounded("repr-h-equals-gradient", hg.value, 1e-10, hg.where));
  return r;
}

inline SuiteReport check_isometry(const GraphForm& graph, const CheckOptions& opt, const std::string& label,
                                  const std::optional<Vector>& mc_function = std::nullopt) {
  const ChainModel chain(graph);
  const auto s = riemann_setup(graph, default_family(graph), opt.seed, opt.tol);
  std::mt19937_64 rng(opt.seed ^ 0x150ULL);
  detail::Worst gap;
  for (int k = 0; k < opt.specs; ++k) {
    const auto spec = random_maf_spec(graph.size(), rng);
    const auto rep = energy_isometry(chain, spec, s.tuple, {});
    gap.update(rep.relative_gap(), [&] { return label + " spec " + std::to_string(k); });
  }
  SuiteReport r;
  r.add(bounded("isometry-exact", gap.value, 1e-8, gap.where, std::to_string(opt.specs) + " random specs"));

  MAFSpec mc_spec;
  if (mc_function) {
    mc_spec = MAFSpec::fukushima(*mc_function);
  } else {
    mc_spec = random_maf_spec(graph.size(), rng);
  }
  const auto paths = simulate_ensemble(chain, opt.seed + 1, opt.mc_paths, opt.horizon, InitialLaw::from_stationary(), opt.workers);
  const auto iso = energy_isometry(chain, mc_spec, s.tuple, paths);
  r.add(bounded("isometry-mc", iso.z_score(), 3.0, label,
                "e_exact " + format_double(iso.e_exact) + ", e_mc " + format_double(iso.e_mc) + ", se " + format_double(iso.se)));
  return r;
}

/// Fixed 20-vertex graph used by the sampling and stochastic suites.
inline GraphForm reference_random_graph() { return make_random_graph(20, 20); }

inline GraphForm p3_graph() { return make_path_graph(3); }
inline GraphForm k3_graph() { return make_complete_graph(3); }

}  // namespace dirform
