#pragma once

// Density matrices of energy measures, pointwise index, coordinate tuples
// and the gradient they induce.
//
// For a family f_1..f_N and a dominant measure nu, Z(x) is the N x N matrix
// of densities d mu<f_i,f_j>/d nu at atom x. The pointwise index p(x) is its
// numerical rank. A coordinate tuple g = (g_1..g_p) is usable when the
// leading p(x) x p(x) block Z_{g,p(x)}(x) is invertible on every nu-positive
// atom; the gradient of f then solves Z_{g,r} w = u_r with
// u_r = (d mu<f,g_i>/d nu)_{i <= r} and zero-pads the remaining components.

#include "dirform/medm.hpp"

#include <random>

namespace dirform {

struct GramField {
  std::vector<Matrix> z;
  Vector nu;
  std::vector<bool> nu_positive;
  std::size_t family_size = 0;

  std::size_t size() const noexcept { return z.size(); }
};

/// Z^{ij}(x) = d mu<f_i,f_j>/d nu (x). Atoms with nu <= tau_zero get the zero
/// matrix; a family member charging such an atom is a domination error.
template <DirichletModel M>
GramField gram_field(const M& model, std::span<const FunctionOf<M>> family, const MeasureVec& nu,
                     double tau_zero = Tolerances{}.tau_zero) {
  if (family.empty()) throw Error("gram_field needs a nonempty family");
  const auto& atoms = model.atoms();
  const auto n = atoms.size();
  const auto k = static_cast<Eigen::Index>(family.size());
  if (nu.size() != n) throw Error("gram_field: dominant measure has the wrong number of atoms");

  GramField out;
  out.family_size = family.size();
  out.nu = nu.weights();
  out.nu_positive.resize(n);
  out.z.assign(n, Matrix::Zero(k, k));
  for (std::size_t x = 0; x < n; ++x) out.nu_positive[x] = nu[x] > tau_zero;

  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      const auto mu = model.mutual_energy_measure(family[static_cast<std::size_t>(i)],
                                                  family[static_cast<std::size_t>(j)]);
      for (std::size_t x = 0; x < n; ++x) {
        if (!out.nu_positive[x]) {
          if (i == j && mu[x] > tau_zero) throw DominationError(atoms.id(x), mu[x]);
          continue;
        }
        const double d = mu[x] / nu[x];
        out.z[x](i, j) = d;
        out.z[x](j, i) = d;
      }
    }
  }
  return out;
}

struct IndexField {
  /// p(x) per atom; 0 on nu-null atoms.
  std::vector<int> p;
  /// max of p(x) over nu-positive atoms.
  int index = 0;
  /// log10 gap between the rank cutoff and the nearest singular value on
  /// either side; +inf when no nonzero singular value was discarded.
  std::vector<double> margin;
  /// strata[r] = atoms with p(x) = r.
  std::vector<std::vector<std::size_t>> strata;
  std::vector<bool> nu_positive;
  /// nu-mass of X(0).
  double null_stratum_mass = 0.0;
  /// Set when the family is not known to span the function space; p(x) is
  /// then only a lower bound.
  bool lower_bound = false;
};

/// p(x) = #{ singular values of Z(x) > tol * sigma_max(x) }.
inline IndexField pointwise_index(const GramField& field, double tol = Tolerances{}.rank,
                                  bool family_spans = true) {
  IndexField out;
  const auto n = field.size();
  out.p.assign(n, 0);
  out.margin.assign(n, std::numeric_limits<double>::infinity());
  out.nu_positive = field.nu_positive;
  out.lower_bound = !family_spans;
  for (std::size_t x = 0; x < n; ++x) {
    if (!field.nu_positive[x]) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> es(field.z[x], Eigen::EigenvaluesOnly);
    Vector s = es.eigenvalues().cwiseAbs();
    std::sort(s.data(), s.data() + s.size(), std::greater<>());
    const double smax = s.size() ? s[0] : 0.0;
    if (!(smax > 0.0)) continue;
    const double cut = tol * smax;
    int r = 0;
    while (r < s.size() && s[r] > cut) ++r;
    out.p[x] = r;
    const double above = std::log10(s[r - 1] / cut);
    const double below = r < s.size() && s[r] > 0.0 ? std::log10(cut / s[r]) : std::numeric_limits<double>::infinity();
    out.margin[x] = std::min(above, below);
  }
  int pmax = 0;
  for (std::size_t x = 0; x < n; ++x) {
    if (field.nu_positive[x]) pmax = std::max(pmax, out.p[x]);
  }
  out.index = pmax;
  out.strata.assign(static_cast<std::size_t>(pmax) + 1, {});
  for (std::size_t x = 0; x < n; ++x) {
    out.strata[static_cast<std::size_t>(out.p[x])].push_back(x);
    if (out.p[x] == 0) out.null_stratum_mass += field.nu[static_cast<Eigen::Index>(x)];
  }
  return out;
}

class SamplingFailure : public Error {
 public:
  SamplingFailure(std::string atom, double condition, int draws)
      : Error("no coordinate tuple in G-hat after " + std::to_string(draws) + " draws; worst atom '" + atom +
              "' (condition number " + std::to_string(condition) + ")"),
        atom_(std::move(atom)),
        condition_(condition) {}
  const std::string& atom() const noexcept { return atom_; }
  double condition() const noexcept { return condition_; }

 private:
  std::string atom_;
  double condition_;
};

template <class Function>
struct CoordinateTuple {
  std::vector<Function> g;
  /// Gaussian coefficients a^{(k)}_i (rows k, columns i), before 2^{-i/2} scaling.
  Matrix coefficients;
  /// p(x) used for the leading block at each atom.
  std::vector<int> rank;
  /// Full p x p density matrix Z_g(x).
  std::vector<Matrix> z;
  /// Condition number of Z_{g,p(x)}(x); 1 on atoms with p(x) = 0.
  std::vector<double> condition;
  std::vector<Eigen::LDLT<Matrix>> factor;
  Vector nu;
  std::vector<bool> nu_positive;
  Tolerances tol;

  bool in_g = false;
  bool in_ghat = false;
  std::optional<std::size_t> failing_atom;
  std::optional<std::size_t> ghat_failing_atom;
  std::size_t worst_atom = 0;
  double worst_condition = 1.0;

  std::uint64_t seed = 0;
  int redraws = 0;

  std::size_t p() const noexcept { return g.size(); }
};

namespace detail {

inline double spd_condition(const Matrix& a) {
  if (a.rows() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

/// Densities d mu<f, g_i>/d nu as an atoms x p matrix, zero on nu-null atoms.
template <DirichletModel M>
Matrix coordinate_densities(const M& model, const FunctionOf<M>& f, const CoordinateTuple<FunctionOf<M>>& t) {
  const auto n = model.atoms().size();
  Matrix u = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t.p()));
  for (std::size_t i = 0; i < t.p(); ++i) {
    const auto mu = model.mutual_energy_measure(f, t.g[i]);
    for (std::size_t x = 0; x < n; ++x) {
      if (t.nu_positive[x]) u(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(i)) = mu[x] / t.nu[static_cast<Eigen::Index>(x)];
    }
  }
  return u;
}

template <DirichletModel M>
Vector self_density(const M& model, const FunctionOf<M>& f, const CoordinateTuple<FunctionOf<M>>& t) {
  const auto mu = model.energy_measure(f);
  Vector d = Vector::Zero(static_cast<Eigen::Index>(mu.size()));
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (t.nu_positive[x]) d[static_cast<Eigen::Index>(x)] = mu[x] / t.nu[static_cast<Eigen::Index>(x)];
  }
  return d;
}

}  // namespace detail

/// Builds the tuple diagnostics for a given g: density matrices, leading-block
/// factorizations, condition numbers and G / G-hat membership.
template <DirichletModel M>
CoordinateTuple<FunctionOf<M>> assess_tuple(const M& model, std::vector<FunctionOf<M>> g, const IndexField& index,
                                            const MeasureVec& nu, const Tolerances& tol = {}) {
  const auto n = model.atoms().size();
  if (index.p.size() != n || nu.size() != n) throw Error("assess_tuple: index/measure size mismatch");
  CoordinateTuple<FunctionOf<M>> t;
  t.g = std::move(g);
  t.tol = tol;
  t.nu = nu.weights();
  t.nu_positive.resize(n);
  for (std::size_t x = 0; x < n; ++x) t.nu_positive[x] = nu[x] > tol.tau_zero;
  const auto p = static_cast<Eigen::Index>(t.g.size());
  t.z.assign(n, Matrix::Zero(p, p));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      const auto mu = model.mutual_energy_measure(t.g[static_cast<std::size_t>(i)], t.g[static_cast<std::size_t>(j)]);
      for (std::size_t x = 0; x < n; ++x) {
        if (!t.nu_positive[x]) continue;
        const double d = mu[x] / nu[x];
        t.z[x](i, j) = d;
        t.z[x](j, i) = d;
      }
    }
  }
  t.rank.resize(n);
  t.condition.assign(n, 1.0);
  t.factor.resize(n);
  t.in_g = true;
  t.in_ghat = true;
  for (std::size_t x = 0; x < n; ++x) {
    const int r = t.nu_positive[x] ? std::min<int>(index.p[x], static_cast<int>(p)) : 0;
    t.rank[x] = r;
    if (t.nu_positive[x] && index.p[x] > p) {
      // fewer coordinates than the local dimension
      t.condition[x] = std::numeric_limits<double>::infinity();
    } else if (r > 0) {
      const Matrix lead = t.z[x].topLeftCorner(r, r);
      t.condition[x] = detail::spd_condition(lead);
      t.factor[x].compute(lead);
    }
    if (t.condition[x] > t.worst_condition || (std::isinf(t.condition[x]) && !std::isinf(t.worst_condition))) {
      t.worst_condition = t.condition[x];
      t.worst_atom = x;
    }
    if (!(t.condition[x] <= tol.cond_max)) {
      if (t.in_g) t.failing_atom = x;
      t.in_g = false;
    }
    if (t.nu_positive[x]) {
      for (Eigen::Index i = 0; i < p; ++i) {
        if (!(t.z[x](i, i) * nu[x] > tol.tau_zero)) {
          if (!t.ghat_failing_atom) t.ghat_failing_atom = x;
        }
      }
    }
  }
  t.in_ghat = t.in_g && !t.ghat_failing_atom;
  return t;
}

/// One Gaussian draw: g_k = sum_i a^{(k)}_i 2^{-i/2} f_i with a^{(k)} iid
/// standard normal. The stream is keyed by (seed, draw).
template <DirichletModel M>
CoordinateTuple<FunctionOf<M>> draw_coordinates(const M& model, std::span<const FunctionOf<M>> family,
                                                const MeasureVec& nu, const IndexField& index, std::uint64_t seed,
                                                int draw = 0, const Tolerances& tol = {}) {
  if (family.empty()) throw Error("draw_coordinates needs a nonempty family");
  const auto p = static_cast<Eigen::Index>(index.index);
  const auto k = static_cast<Eigen::Index>(family.size());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(draw), 0x5a3c0001u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  Matrix a(p, k);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index i = 0; i < k; ++i) a(r, i) = normal(rng);

  std::vector<FunctionOf<M>> g;
  std::vector<double> c(static_cast<std::size_t>(k));
  for (Eigen::Index r = 0; r < p; ++r) {
    for (Eigen::Index i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = a(r, i) * std::pow(2.0, -0.5 * static_cast<double>(i + 1));
    g.push_back(model.combine(c, family));
  }
  auto t = assess_tuple(model, std::move(g), index, nu, tol);
  t.coefficients = std::move(a);
  t.seed = seed;
  t.redraws = draw;
  return t;
}

inline constexpr int kMaxRedraws = 32;

/// Draws until the tuple lies in G-hat; throws SamplingFailure after
/// `max_draws` attempts, naming the worst atom seen.
template <DirichletModel M>
CoordinateTuple<FunctionOf<M>> sample_coordinates(const M& model, std::span<const FunctionOf<M>> family,
                                                  const MeasureVec& nu, const IndexField& index, std::uint64_t seed,
                                                  const Tolerances& tol = {}, int max_draws = kMaxRedraws) {
  if (index.index <= 0) throw Error("sample_coordinates: index is 0 (the form vanishes)");
  std::size_t worst_atom = 0;
  double worst = 0.0;
  for (int d = 0; d < max_draws; ++d) {
    auto t = draw_coordinates(model, family, nu, index, seed, d, tol);
    if (t.in_ghat) return t;
    const auto atom = t.failing_atom.value_or(t.ghat_failing_atom.value_or(t.worst_atom));
    const double cond = t.condition[atom];
    if (d == 0 || cond > worst) {
      worst = cond;
      worst_atom = atom;
    }
  }
  throw SamplingFailure(model.atoms().id(worst_atom), worst, max_draws);
}

struct GradientField {
  /// Per-atom vector of length p; entries beyond p(x) are zero.
  std::vector<Vector> components;

  std::size_t size() const noexcept { return components.size(); }
  const Vector& operator[](std::size_t x) const { return components.at(x); }
};

namespace detail {

template <class Function>
Vector solve_leading(const CoordinateTuple<Function>& t, std::size_t x, const Vector& rhs, const AtomSpace& atoms) {
  const auto p = static_cast<Eigen::Index>(t.p());
  Vector w = Vector::Zero(p);
  const int r = t.rank[x];
  if (!t.nu_positive[x] || r == 0) return w;
  if (!(t.condition[x] <= t.tol.cond_max)) throw IllConditioned(atoms.id(x), t.condition[x]);
  w.head(r) = t.factor[x].solve(rhs.head(r));
  return w;
}

}  // namespace detail

/// grad_g f: Z_{g,r}(x) w = u_r(x) on atoms with p(x) = r, zero beyond r.
template <DirichletModel M>
GradientField gradient(const M& model, const FunctionOf<M>& f, const CoordinateTuple<FunctionOf<M>>& t) {
  const Matrix u = detail::coordinate_densities(model, f, t);
  GradientField out;
  out.components.reserve(u.rows());
  for (Eigen::Index x = 0; x < u.rows(); ++x) {
    out.components.push_back(detail::solve_leading(t, static_cast<std::size_t>(x), u.row(x).transpose(), model.atoms()));
  }
  return out;
}

/// |d mu<f>/d nu - u_r^T Z_{g,r}^{-1} u_r| per atom; zero on nu-null atoms.
template <DirichletModel M>
Vector schur_residual(const M& model, const FunctionOf<M>& f, const CoordinateTuple<FunctionOf<M>>& t) {
  const Matrix u = detail::coordinate_densities(model, f, t);
  const Vector df = detail::self_density(model, f, t);
  Vector out = Vector::Zero(df.size());
  for (Eigen::Index x = 0; x < u.rows(); ++x) {
    const auto xs = static_cast<std::size_t>(x);
    if (!t.nu_positive[xs]) continue;
    const int r = t.rank[xs];
    double quad = 0.0;
    if (r > 0) {
      if (!(t.condition[xs] <= t.tol.cond_max)) throw IllConditioned(model.atoms().id(xs), t.condition[xs]);
      const Vector ur = u.row(x).head(r).transpose();
      quad = ur.dot(t.factor[xs].solve(ur));
    }
    out[x] = std::abs(df[x] - quad);
  }
  return out;
}

/// d mu<R_x>/d nu (x) = df - 2 sum_i D_i u_i + sum_{ij} D_i D_j Z_g^{ij}, sums over i, j <= p(x),
/// with D = grad_g f.
template <DirichletModel M>
Vector remainder_density(const M& model, const FunctionOf<M>& f, const CoordinateTuple<FunctionOf<M>>& t) {
  const Matrix u = detail::coordinate_densities(model, f, t);
  const Vector df = detail::self_density(model, f, t);
  Vector out = Vector::Zero(df.size());
  for (Eigen::Index x = 0; x < u.rows(); ++x) {
    const auto xs = static_cast<std::size_t>(x);
    if (!t.nu_positive[xs]) continue;
    const int r = t.rank[xs];
    const Vector d = detail::solve_leading(t, xs, u.row(x).transpose(), model.atoms());
    const Vector dr = d.head(r);
    out[x] = df[x] - 2.0 * dr.dot(u.row(x).head(r).transpose()) + dr.dot(t.z[xs].topLeftCorner(r, r) * dr);
  }
  return out;
}

struct Reconstruction {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_error = 0.0;
};

/// E(f,h) against (1/2) sum_x nu(x) <Z_g(x) grad f(x), grad h(x)>.
template <DirichletModel M>
Reconstruction energy_reconstruction(const M& model, const FunctionOf<M>& f, const FunctionOf<M>& h,
                                     const CoordinateTuple<FunctionOf<M>>& t) {
  const auto gf = gradient(model, f, t);
  const auto gh = gradient(model, h, t);
  double rhs = 0.0;
  for (std::size_t x = 0; x < gf.size(); ++x) {
    if (!t.nu_positive[x]) continue;
    rhs += t.nu[static_cast<Eigen::Index>(x)] * gf[x].dot(t.z[x] * gh[x]);
  }
  rhs *= 0.5;
  const double lhs = model.energy(f, h);
  const double scale = std::sqrt(std::abs(model.energy(f, f) * model.energy(h, h)));
  return {lhs, rhs, std::abs(lhs - rhs) / std::max({std::abs(lhs), scale, std::numeric_limits<double>::min()})};
}

/// Psi(u) = constant + <linear, u> + u^T quadratic u on R^k.
struct QuadraticMap {
  double constant = 0.0;
  Vector linear;
  Matrix quadratic;

  Eigen::Index arity() const noexcept { return linear.size(); }
  Vector gradient(const Vector& u) const { return linear + 2.0 * quadratic * u; }
};

/// Psi(f_1, ..., f_k) as a catalogue polynomial; throws NotRepresentable when
/// a product leaves degree 2.
inline Polynomial2 compose(const SuperpositionForm& form, const QuadraticMap& psi, std::span<const Polynomial2> fs) {
  if (static_cast<std::size_t>(psi.arity()) != fs.size()) throw Error("compose: arity mismatch");
  const Matrix q = 0.5 * (psi.quadratic + psi.quadratic.transpose());
  Polynomial2 out = form.constant(psi.constant);
  for (std::size_t i = 0; i < fs.size(); ++i) out += psi.linear[static_cast<Eigen::Index>(i)] * fs[i];
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (std::size_t j = 0; j < fs.size(); ++j) {
      const double c = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (c != 0.0) out += c * multiply(fs[i], fs[j]);
    }
  }
  return out;
}

/// max over atoms of |grad_g Psi(f) - sum_i d_i Psi(f) grad_g f_i| / (1 + |rhs|).
inline double derivation_check(const SuperpositionForm& form, const QuadraticMap& psi, std::span<const Polynomial2> fs,
                               const CoordinateTuple<Polynomial2>& t) {
  const Polynomial2 composite = compose(form, psi, fs);
  const auto lhs = gradient(form, composite, t);
  std::vector<GradientField> parts;
  for (const auto& f : fs) parts.push_back(gradient(form, f, t));
  double worst = 0.0;
  for (std::size_t x = 0; x < form.atoms().size(); ++x) {
    if (!t.nu_positive[x]) continue;
    const Vector z = form.center(x);
    Vector u(static_cast<Eigen::Index>(fs.size()));
    for (std::size_t i = 0; i < fs.size(); ++i) u[static_cast<Eigen::Index>(i)] = fs[i].value(z);
    const Vector dpsi = psi.gradient(u);
    Vector rhs = Vector::Zero(static_cast<Eigen::Index>(t.p()));
    for (std::size_t i = 0; i < fs.size(); ++i) rhs += dpsi[static_cast<Eigen::Index>(i)] * parts[i][x];
    worst = std::max(worst, (lhs[x] - rhs).norm() / (1.0 + rhs.norm()));
  }
  return worst;
}

}  // namespace dirform
