#pragma once

// Backend-generic entry points. Every backend models DirichletModel: an atom
// space, a function type closed under linear combination, the bilinear
// energy and the per-atom mutual energy measure.

#include "dirform/core.hpp"
#include "dirform/graph_form.hpp"
#include "dirform/sg_form.hpp"
#include "dirform/superposition_form.hpp"

#include <concepts>
#include <random>

namespace dirform {

template <class M>
concept DirichletModel = requires(const M& model, const typename M::function_type& f,
                                  std::span<const double> coeffs,
                                  std::span<const typename M::function_type> fs, double c) {
  typename M::function_type;
  { model.atoms() } -> std::same_as<const AtomSpace&>;
  { model.energy(f, f) } -> std::convertible_to<double>;
  { model.mutual_energy_measure(f, f) } -> std::same_as<SignedMeasureVec>;
  { model.energy_measure(f) } -> std::same_as<MeasureVec>;
  { model.constant(c) } -> std::same_as<typename M::function_type>;
  { model.combine(coeffs, fs) } -> std::same_as<typename M::function_type>;
  model.validate(f);
};

template <DirichletModel M>
using FunctionOf = typename M::function_type;

template <DirichletModel M>
double energy(const M& model, const FunctionOf<M>& f, const FunctionOf<M>& g) {
  return model.energy(f, g);
}

template <DirichletModel M>
MeasureVec energy_measure(const M& model, const FunctionOf<M>& f) {
  return model.energy_measure(f);
}

template <DirichletModel M>
SignedMeasureVec mutual_energy_measure(const M& model, const FunctionOf<M>& f, const FunctionOf<M>& g) {
  return model.mutual_energy_measure(f, g);
}

/// a*f + b*g
template <DirichletModel M>
FunctionOf<M> linear_combination(const M& model, double a, const FunctionOf<M>& f, double b,
                                 const FunctionOf<M>& g) {
  const std::array<double, 2> c{a, b};
  const std::array<FunctionOf<M>, 2> fs{f, g};
  return model.combine(c, fs);
}

/// (1/2)(mu<f+g> - mu<f> - mu<g>)
template <DirichletModel M>
SignedMeasureVec polarized_mutual_measure(const M& model, const FunctionOf<M>& f, const FunctionOf<M>& g) {
  const auto sum = model.energy_measure(linear_combination(model, 1.0, f, 1.0, g));
  const auto mf = model.energy_measure(f);
  const auto mg = model.energy_measure(g);
  return {0.5 * (sum.weights() - mf.weights() - mg.weights())};
}

/// Random element of the backend's function space, for property checks.
inline Vector random_function(const GraphForm& model, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector f(static_cast<Eigen::Index>(model.size()));
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = normal(rng);
  return f;
}

inline SGFunction random_function(const SGForm& model, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const int level = std::min(model.level(), 2);
  SGFunction f{level, Vector(static_cast<Eigen::Index>(model.mesh(level).vertex_count()))};
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values[i] = normal(rng);
  return f;
}

inline Polynomial2 random_function(const SuperpositionForm& model, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Polynomial2 f = model.constant(normal(rng));
  for (const auto& name : model.catalogue_names()) f += normal(rng) * model.catalogue(name);
  return f;
}

/// Vertex indicators.
inline std::vector<Vector> indicator_family(const GraphForm& model) {
  std::vector<Vector> out;
  const auto n = static_cast<Eigen::Index>(model.size());
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(Vector::Unit(n, i));
  return out;
}

/// Orthonormal basis of the graph's function space for the inner product
/// E(f,g) + sum_x f(x) g(x) m(x): generalized eigenvectors of (K, M), where K
/// is the weighted Laplacian, in order of increasing energy.
inline std::vector<Vector> orthonormal_family(const GraphForm& model) {
  const auto n = static_cast<Eigen::Index>(model.size());
  Matrix k = Matrix::Zero(n, n);
  for (const auto& e : model.edges()) {
    const auto a = static_cast<Eigen::Index>(e.a);
    const auto b = static_cast<Eigen::Index>(e.b);
    k(a, a) += e.c;
    k(b, b) += e.c;
    k(a, b) -= e.c;
    k(b, a) -= e.c;
  }
  Matrix mass = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) mass(i, i) = model.atoms().m(static_cast<std::size_t>(i));
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(k, mass);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed for orthonormal family");
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lambda = std::max(solver.eigenvalues()[i], 0.0);
    out.push_back(solver.eigenvectors().col(i) / std::sqrt(1.0 + lambda));
  }
  return out;
}

/// Harmonic functions with boundary values e_0, e_1, e_2, followed by tent
/// functions at the level-`spline_level` vertices that are not level-0 vertices.
inline std::vector<SGFunction> default_family(const SGForm& model, int spline_level = 1) {
  std::vector<SGFunction> out;
  for (int k = 0; k < 3; ++k) out.push_back(SGFunction::harmonic(Vector3::Unit(k)));
  const int m = std::min(spline_level, model.level());
  if (m >= 1) {
    const auto& mesh = model.mesh(m);
    const auto boundary = mesh.boundary_vertices();
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      if (std::find(boundary.begin(), boundary.end(), v) == boundary.end()) out.push_back(model.spline(m, v));
    }
  }
  return out;
}

inline std::vector<Polynomial2> default_family(const SuperpositionForm& model) { return model.full_catalogue(); }

inline std::vector<Vector> default_family(const GraphForm& model) { return orthonormal_family(model); }

}  // namespace dirform
