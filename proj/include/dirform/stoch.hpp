#pragma once

// Reversible jump chain attached to a graph form, martingale additive
// functionals built from it, and the vector representation of such
// functionals as stochastic integrals against M^[g].
//
// Every functional here is piecewise linear in time with jumps at the
// chain's jump times, so sup-norms and terminal values are exact.

#include "dirform/riemann.hpp"

#include <thread>

namespace dirform {

class ChainModel {
 public:
  explicit ChainModel(GraphForm graph) : graph_(std::move(graph)) {
    rates_.resize(graph_.size());
    for (std::size_t x = 0; x < graph_.size(); ++x) {
      double s = 0.0;
      for (const auto& n : graph_.neighbors(x)) s += n.c;
      rates_[x] = s / graph_.atoms().m(x);
    }
  }

  const GraphForm& graph() const noexcept { return graph_; }
  std::size_t size() const noexcept { return graph_.size(); }

  /// q(x,y) = c(x,y)/m(x)
  double rate(std::size_t x, std::size_t y) const { return graph_.conductance(x, y) / graph_.atoms().m(x); }
  double total_rate(std::size_t x) const { return rates_.at(x); }
  Vector generator(const Vector& f) const { return graph_.generator(f); }

  /// m / sum(m)
  Vector stationary() const {
    const auto& m = graph_.atoms().m_weights();
    Vector p = Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
    return p / p.sum();
  }

  double total_mass() const {
    const auto& m = graph_.atoms().m_weights();
    return std::accumulate(m.begin(), m.end(), 0.0);
  }

 private:
  GraphForm graph_;
  std::vector<double> rates_;
};

struct InitialLaw {
  bool stationary = true;
  std::size_t atom = 0;

  static InitialLaw from_stationary() { return {}; }
  static InitialLaw at(std::size_t atom) { return {false, atom}; }

  /// "stationary" or "atom:<id>"
  static InitialLaw parse(std::string_view s, const AtomSpace& atoms) {
    if (s == "stationary") return from_stationary();
    if (s.starts_with("atom:")) return at(atoms.index_of(s.substr(5)));
    throw Error("initial law must be 'stationary' or 'atom:<id>', got '" + std::string(s) + "'");
  }
};

struct PathRecord {
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;
  double horizon = 0.0;
  /// 0 < t_1 < ... < t_k <= horizon
  std::vector<double> jump_times;
  /// states[0] is the initial state; states[k] the state after jump k.
  std::vector<std::size_t> states;

  std::size_t jumps() const noexcept { return jump_times.size(); }
  /// Start of the segment on which states[j] is occupied.
  double segment_start(std::size_t j) const { return j == 0 ? 0.0 : jump_times[j - 1]; }
  double segment_end(std::size_t j) const { return j < jump_times.size() ? jump_times[j] : horizon; }

  bool operator==(const PathRecord&) const = default;
};

/// Independent stream per (seed, path id).
inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path_id), static_cast<std::uint32_t>(path_id >> 32), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

/// Exponential holding times with rate sum_y q(x,y); jumps to y with
/// probability q(x,y)/sum_y q(x,y). A state with zero total rate holds
/// until the horizon.
inline PathRecord simulate_path(const ChainModel& chain, std::uint64_t seed, std::uint64_t path_id, double horizon,
                                const InitialLaw& init = {}) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error("horizon must be positive and finite");
  const auto& graph = chain.graph();
  auto rng = path_stream(seed, path_id);
  PathRecord p{seed, path_id, horizon, {}, {}};
  std::size_t x = 0;
  if (init.stationary) {
    const auto& m = graph.atoms().m_weights();
    std::discrete_distribution<std::size_t> pick(m.begin(), m.end());
    x = pick(rng);
  } else {
    if (init.atom >= chain.size()) throw Error("initial atom out of range");
    x = init.atom;
  }
  p.states.push_back(x);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double t = 0.0;
  while (true) {
    const double rate = chain.total_rate(x);
    if (!(rate > 0.0)) break;
    t += std::exponential_distribution<double>(rate)(rng);
    if (t > horizon) break;
    const auto nbrs = graph.neighbors(x);
    double total = 0.0;
    for (const auto& n : nbrs) total += n.c;
    double u = unit(rng) * total;
    std::size_t y = nbrs.back().atom;
    for (const auto& n : nbrs) {
      if (u < n.c) {
        y = n.atom;
        break;
      }
      u -= n.c;
    }
    p.jump_times.push_back(t);
    p.states.push_back(y);
    x = y;
  }
  return p;
}

/// Paths 0..count-1 split across workers by stride; the output depends only
/// on (seed, path id), never on the worker count.
inline std::vector<PathRecord> simulate_ensemble(const ChainModel& chain, std::uint64_t seed, std::size_t count,
                                                 double horizon, const InitialLaw& init = {}, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  std::vector<PathRecord> out(count);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) out[i] = simulate_path(chain, seed, i, horizon, init);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// Fraction of [0, horizon] spent in each state.
inline Vector occupation_fractions(const PathRecord& path, std::size_t atoms) {
  Vector occ = Vector::Zero(static_cast<Eigen::Index>(atoms));
  for (std::size_t j = 0; j < path.states.size(); ++j) {
    occ[static_cast<Eigen::Index>(path.states[j])] += path.segment_end(j) - path.segment_start(j);
  }
  return occ / path.horizon;
}

/// Fixed-order pairwise summation.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) return std::accumulate(v.begin(), v.end(), 0.0);
  const auto h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

/// A path-indexed function t -> F_t on [0, horizon], linear on each holding
/// segment. Segment j starts at value start[j] and has slope slope[j].
struct PathFunctional {
  std::vector<double> knots;
  std::vector<double> start;
  std::vector<double> slope;
  double horizon = 0.0;

  std::size_t segments() const noexcept { return start.size(); }
  double segment_end(std::size_t j) const { return j + 1 < knots.size() ? knots[j + 1] : horizon; }
  double left_limit(std::size_t j) const { return start[j] + slope[j] * (segment_end(j) - knots[j]); }

  double value(double t) const {
    if (t < 0.0 || t > horizon) throw Error("time outside the path horizon");
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const auto j = static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1;
    return start[j] + slope[j] * (t - knots[j]);
  }

  double terminal() const { return left_limit(segments() - 1); }

  /// sup_t |F_t|, attained at a segment endpoint.
  double sup_abs() const {
    double s = 0.0;
    for (std::size_t j = 0; j < segments(); ++j) s = std::max({s, std::abs(start[j]), std::abs(left_limit(j))});
    return s;
  }

  PathFunctional& operator-=(const PathFunctional& o) {
    if (o.segments() != segments()) throw Error("path functionals live on different paths");
    for (std::size_t j = 0; j < segments(); ++j) {
      start[j] -= o.start[j];
      slope[j] -= o.slope[j];
    }
    return *this;
  }
  friend PathFunctional operator-(PathFunctional a, const PathFunctional& b) { return a -= b; }
};

/// sup_t |a_t - b_t| and the segment where it is first attained.
struct SupDifference {
  double value = 0.0;
  std::size_t segment = 0;
};

inline SupDifference sup_abs_difference(const PathFunctional& a, const PathFunctional& b) {
  const auto d = a - b;
  SupDifference out;
  for (std::size_t j = 0; j < d.segments(); ++j) {
    const double v = std::max(std::abs(d.start[j]), std::abs(d.left_limit(j)));
    if (v > out.value) out = {v, j};
  }
  return out;
}

/// sum_k phi_k . M^[f_k]; an empty term list is the zero functional.
struct MAFSpec {
  struct Term {
    Vector phi;
    Vector f;
  };
  std::vector<Term> terms;

  static MAFSpec fukushima(const Vector& f) { return {{{Vector::Ones(f.size()), f}}}; }

  MAFSpec scaled(double c) const {
    MAFSpec out = *this;
    for (auto& t : out.terms) t.phi *= c;
    return out;
  }

  void validate(std::size_t atoms) const {
    for (const auto& t : terms) {
      if (static_cast<std::size_t>(t.phi.size()) != atoms || static_cast<std::size_t>(t.f.size()) != atoms) {
        throw BackendMismatch("MAF term has the wrong number of atoms");
      }
      if (!t.phi.allFinite() || !t.f.allFinite()) throw Error("MAF term has a non-finite entry");
    }
  }
};

namespace detail {

/// Jump increment J(x,y) = sum_k phi_k(x)(f_k(y) - f_k(x)) and drift
/// d(x) = sum_k phi_k(x) Lf_k(x).
struct MAFKernel {
  std::vector<const MAFSpec::Term*> terms;
  Vector drift;

  MAFKernel(const ChainModel& chain, const MAFSpec& spec) : drift(Vector::Zero(static_cast<Eigen::Index>(chain.size()))) {
    spec.validate(chain.size());
    for (const auto& t : spec.terms) {
      terms.push_back(&t);
      drift += t.phi.cwiseProduct(chain.generator(t.f));
    }
  }

  double jump(std::size_t x, std::size_t y) const {
    const auto i = static_cast<Eigen::Index>(x);
    const auto j = static_cast<Eigen::Index>(y);
    double s = 0.0;
    for (const auto* t : terms) s += t->phi[i] * (t->f[j] - t->f[i]);
    return s;
  }
};

/// Jumps weighted by h at the pre-jump state; compensator slope -h(x) d(x).
inline PathFunctional integrate(const PathRecord& path, const MAFKernel& kernel, const Vector* h) {
  PathFunctional out;
  out.horizon = path.horizon;
  const auto k = path.states.size();
  out.knots.resize(k);
  out.start.resize(k);
  out.slope.resize(k);
  for (std::size_t j = 0; j < k; ++j) out.knots[j] = path.segment_start(j);
  double value = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const auto x = path.states[j];
    const double w = h ? (*h)[static_cast<Eigen::Index>(x)] : 1.0;
    if (j > 0) {
      const auto prev = path.states[j - 1];
      const double wp = h ? (*h)[static_cast<Eigen::Index>(prev)] : 1.0;
      value = out.left_limit(j - 1) + wp * kernel.jump(prev, x);
    }
    out.start[j] = value;
    out.slope[j] = -w * kernel.drift[static_cast<Eigen::Index>(x)];
  }
  return out;
}

}  // namespace detail

/// Pathwise realization of an MAFSpec: sum over jumps of J(X_{s-}, X_s) minus
/// the integral of d(X_s).
inline PathFunctional realize(const ChainModel& chain, const PathRecord& path, const MAFSpec& spec) {
  return detail::integrate(path, detail::MAFKernel(chain, spec), nullptr);
}

/// M^[f]_t = f(X_t) - f(X_0) - int_0^t Lf(X_s) ds
inline PathFunctional fukushima_martingale(const ChainModel& chain, const PathRecord& path, const Vector& f) {
  return realize(chain, path, MAFSpec::fukushima(f));
}

/// (h . M)_t with h evaluated at the pre-jump state.
inline PathFunctional stochastic_integral(const ChainModel& chain, const PathRecord& path, const Vector& h,
                                          const MAFSpec& spec) {
  if (static_cast<std::size_t>(h.size()) != chain.size()) throw BackendMismatch("integrand has the wrong number of atoms");
  return detail::integrate(path, detail::MAFKernel(chain, spec), &h);
}

/// Gamma f(x) = mu<f>({x}) / m(x)
inline Vector carre_du_champ(const ChainModel& chain, const Vector& f) {
  const auto mu = chain.graph().energy_measure(f);
  Vector out(static_cast<Eigen::Index>(chain.size()));
  for (std::size_t x = 0; x < chain.size(); ++x) out[static_cast<Eigen::Index>(x)] = mu[x] / chain.graph().atoms().m(x);
  return out;
}

/// mu<M>({x}) = sum_{k,k'} phi_k(x) phi_k'(x) mu<f_k, f_k'>({x})
inline Vector maf_energy_measure(const ChainModel& chain, const MAFSpec& spec) {
  spec.validate(chain.size());
  Vector out = Vector::Zero(static_cast<Eigen::Index>(chain.size()));
  for (const auto& a : spec.terms) {
    for (const auto& b : spec.terms) {
      out += a.phi.cwiseProduct(b.phi).cwiseProduct(chain.graph().mutual_energy_measure(a.f, b.f).weights);
    }
  }
  return out;
}

/// Sum of squared jumps of M over the path, and the compensator
/// int_0^T mu<M>(X_s)/m(X_s) ds. Their difference is a martingale.
struct QuadraticVariation {
  double jumps = 0.0;
  double compensator = 0.0;
};

inline QuadraticVariation quadratic_variation(const ChainModel& chain, const PathRecord& path, const MAFSpec& spec) {
  const detail::MAFKernel kernel(chain, spec);
  const Vector mu = maf_energy_measure(chain, spec);
  QuadraticVariation q;
  for (std::size_t j = 0; j < path.states.size(); ++j) {
    const auto x = path.states[j];
    q.compensator += mu[static_cast<Eigen::Index>(x)] / chain.graph().atoms().m(x) * (path.segment_end(j) - path.segment_start(j));
    if (j > 0) {
      const double d = kernel.jump(path.states[j - 1], x);
      q.jumps += d * d;
    }
  }
  return q;
}

/// h(x) in R^p with h_i(x) = 0 for i > p(x).
struct VectorIntegrand {
  std::vector<Vector> h;

  std::size_t size() const noexcept { return h.size(); }
  /// Component i across atoms.
  Vector component(std::size_t i) const {
    Vector out(static_cast<Eigen::Index>(h.size()));
    for (std::size_t x = 0; x < h.size(); ++x) out[static_cast<Eigen::Index>(x)] = h[x][static_cast<Eigen::Index>(i)];
    return out;
  }
};

/// On atoms with p(x) = r the first r components solve Z_{g,r} h = v_r with
/// v_i = sum_k phi_k mu<f_k, g_i> / nu; the rest are zero.
inline VectorIntegrand representation_integrand(const ChainModel& chain, const MAFSpec& spec,
                                                const CoordinateTuple<Vector>& tuple) {
  if (!tuple.in_g) throw Error("representation needs a coordinate tuple in G");
  spec.validate(chain.size());
  const auto n = chain.size();
  const auto p = static_cast<Eigen::Index>(tuple.p());
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(n), p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (const auto& t : spec.terms) {
      const auto mu = chain.graph().mutual_energy_measure(t.f, tuple.g[static_cast<std::size_t>(i)]);
      v.col(i) += t.phi.cwiseProduct(mu.weights);
    }
  }
  VectorIntegrand out;
  out.h.reserve(n);
  for (std::size_t x = 0; x < n; ++x) {
    Vector rhs = Vector::Zero(p);
    if (tuple.nu_positive[x]) rhs = v.row(static_cast<Eigen::Index>(x)).transpose() / tuple.nu[static_cast<Eigen::Index>(x)];
    out.h.push_back(detail::solve_leading(tuple, x, rhs, chain.graph().atoms()));
  }
  return out;
}

/// sum_i h_i . M^[g_i], itself an MAFSpec with terms (h_i, g_i).
inline MAFSpec representation_spec(const VectorIntegrand& h, const CoordinateTuple<Vector>& tuple) {
  MAFSpec out;
  for (std::size_t i = 0; i < tuple.p(); ++i) out.terms.push_back({h.component(i), tuple.g[i]});
  return out;
}

struct RepresentationReport {
  /// max over paths of sup_t |M_t - (h . M^[g])_t|
  double max_error = 0.0;
  /// max over paths of the sup error divided by 1 + sup_t |M_t|
  double max_scaled_error = 0.0;
  /// max over directed edges of |J_M(x,y) - sum_i h_i(x)(g_i(y) - g_i(x))|
  double edge_error = 0.0;
  double tolerance = 1e-8;
  bool pass = true;
  /// First offending path, jump index and pre-jump atom (when !pass).
  std::optional<std::size_t> path;
  std::optional<std::size_t> jump;
  std::optional<std::size_t> atom;
};

inline RepresentationReport representation_check(const ChainModel& chain, std::span<const PathRecord> paths,
                                                 const MAFSpec& spec, const CoordinateTuple<Vector>& tuple,
                                                 double tolerance = 1e-8) {
  if (!tuple.in_g) throw Error("representation check refused: coordinate tuple is not in G");
  const auto h = representation_integrand(chain, spec, tuple);
  const auto rep = representation_spec(h, tuple);
  const detail::MAFKernel km(chain, spec);
  const detail::MAFKernel kr(chain, rep);
  RepresentationReport out;
  out.tolerance = tolerance;
  for (std::size_t x = 0; x < chain.size(); ++x) {
    for (const auto& n : chain.graph().neighbors(x)) {
      out.edge_error = std::max(out.edge_error, std::abs(km.jump(x, n.atom) - kr.jump(x, n.atom)));
    }
  }
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const auto m = detail::integrate(paths[k], km, nullptr);
    const auto r = detail::integrate(paths[k], kr, nullptr);
    const auto d = sup_abs_difference(m, r);
    const double scaled = d.value / (1.0 + m.sup_abs());
    out.max_error = std::max(out.max_error, d.value);
    out.max_scaled_error = std::max(out.max_scaled_error, scaled);
    if (scaled > tolerance && out.pass) {
      out.pass = false;
      out.path = k;
      // the error first appears on the segment after jump d.segment
      std::size_t j = 0;
      const auto diff = m - r;
      for (; j < diff.segments(); ++j) {
        if (std::max(std::abs(diff.start[j]), std::abs(diff.left_limit(j))) / (1.0 + m.sup_abs()) > tolerance) break;
      }
      out.jump = j;
      out.atom = paths[k].states[j > 0 ? j - 1 : 0];
    }
  }
  return out;
}

/// (h,h)_{M^[g]} = sum_x nu(x) h(x)^T Z_g(x) h(x)
inline double integrand_norm(const VectorIntegrand& h, const CoordinateTuple<Vector>& tuple) {
  double s = 0.0;
  for (std::size_t x = 0; x < h.size(); ++x) {
    if (!tuple.nu_positive[x]) continue;
    s += tuple.nu[static_cast<Eigen::Index>(x)] * h.h[x].dot(tuple.z[x] * h.h[x]);
  }
  return s;
}

/// Zeroes h outside A_k = { x : h(x)^T Z_g(x) h(x) <= k }.
inline VectorIntegrand truncate_integrand(const VectorIntegrand& h, const CoordinateTuple<Vector>& tuple, double k) {
  if (!(k >= 0.0)) throw Error("truncation level must be >= 0");
  VectorIntegrand out = h;
  for (std::size_t x = 0; x < h.size(); ++x) {
    if (h.h[x].dot(tuple.z[x] * h.h[x]) > k) out.h[x].setZero();
  }
  return out;
}

struct IsometryReport {
  /// (1/2) mu<M>(X)
  double e_exact = 0.0;
  /// (1/2)(h,h)_{M^[g]}
  double half_norm = 0.0;
  /// sum(m)/(2T) mean[M_T^2] over stationary paths
  double e_mc = 0.0;
  double se = 0.0;
  std::size_t paths = 0;

  double relative_gap() const { return relative_error(e_exact, half_norm, 1e-300); }
  /// |e_mc - e_exact| in standard errors
  double z_score() const { return se > 0.0 ? std::abs(e_mc - e_exact) / se : (e_mc == e_exact ? 0.0 : std::numeric_limits<double>::infinity()); }
};

/// Paths must start from the stationary law and share one horizon. The
/// factor sum(m) converts the probability-normalized expectation back to m.
inline IsometryReport energy_isometry(const ChainModel& chain, const MAFSpec& spec, const CoordinateTuple<Vector>& tuple,
                                      std::span<const PathRecord> paths) {
  IsometryReport out;
  out.e_exact = 0.5 * maf_energy_measure(chain, spec).sum();
  out.half_norm = 0.5 * integrand_norm(representation_integrand(chain, spec, tuple), tuple);
  out.paths = paths.size();
  if (paths.empty()) return out;
  const double horizon = paths.front().horizon;
  const detail::MAFKernel kernel(chain, spec);
  std::vector<double> sq(paths.size());
  for (std::size_t k = 0; k < paths.size(); ++k) {
    if (paths[k].horizon != horizon) throw Error("energy_isometry: paths have different horizons");
    const double mt = detail::integrate(paths[k], kernel, nullptr).terminal();
    sq[k] = mt * mt;
  }
  const auto n = static_cast<double>(paths.size());
  const double mean = pairwise_sum(sq) / n;
  std::vector<double> dev(sq.size());
  for (std::size_t k = 0; k < sq.size(); ++k) dev[k] = (sq[k] - mean) * (sq[k] - mean);
  const double var = paths.size() > 1 ? pairwise_sum(dev) / (n - 1.0) : 0.0;
  const double scale = chain.total_mass() / (2.0 * horizon);
  out.e_mc = scale * mean;
  out.se = scale * std::sqrt(var / n);
  return out;
}

}  // namespace dirform
