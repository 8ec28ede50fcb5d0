#pragma once

// Weighted-graph backend: E(f,g) = 1/2 sum_{x,y} c(x,y)(f(x)-f(y))(g(x)-g(y)).

#include "dirform/core.hpp"

#include <random>
#include <numeric>

namespace dirform {

class GraphForm {
 public:
  using function_type = Vector;

  struct Edge {
    std::size_t a;
    std::size_t b;
    double c;
  };

  struct Neighbor {
    std::size_t atom;
    double c;
  };

  GraphForm() = default;

  GraphForm(AtomSpace space, std::vector<Edge> edges) : space_(std::move(space)) {
    if (space_.kind() != Backend::graph) {
      throw BackendMismatch("GraphForm needs a graph atom space");
    }
    adjacency_.resize(space_.size());
    for (const auto& e : edges) {
      if (e.a >= space_.size() || e.b >= space_.size()) {
        throw Error("edge endpoint out of range");
      }
      if (e.a == e.b) throw Error("self-loop at atom '" + space_.id(e.a) + "'");
      if (!(e.c >= 0.0) || !std::isfinite(e.c)) throw Error("conductance must be finite and >= 0");
      if (e.c == 0.0) continue;
      if (conductance(e.a, e.b) != 0.0) {
        throw Error("duplicate edge " + space_.id(e.a) + "-" + space_.id(e.b));
      }
      adjacency_[e.a].push_back({e.b, e.c});
      adjacency_[e.b].push_back({e.a, e.c});
      edges_.push_back({std::min(e.a, e.b), std::max(e.a, e.b), e.c});
    }
    for (auto& nb : adjacency_) {
      std::sort(nb.begin(), nb.end(), [](const Neighbor& l, const Neighbor& r) { return l.atom < r.atom; });
    }
  }

  const AtomSpace& atoms() const noexcept { return space_; }
  std::size_t size() const noexcept { return space_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(std::size_t x) const { return adjacency_.at(x); }
  std::size_t degree(std::size_t x) const { return adjacency_.at(x).size(); }

  double conductance(std::size_t x, std::size_t y) const {
    for (const auto& n : adjacency_.at(x)) {
      if (n.atom == y) return n.c;
    }
    return 0.0;
  }

  std::vector<std::size_t> isolated_atoms() const {
    std::vector<std::size_t> out;
    for (std::size_t x = 0; x < size(); ++x) {
      if (adjacency_[x].empty()) out.push_back(x);
    }
    return out;
  }

  bool connected() const {
    if (size() == 0) return true;
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      for (const auto& n : adjacency_[x]) {
        if (!seen[n.atom]) {
          seen[n.atom] = true;
          ++count;
          stack.push_back(n.atom);
        }
      }
    }
    return count == size();
  }

  void validate(const Vector& f) const {
    if (static_cast<std::size_t>(f.size()) != size()) {
      throw BackendMismatch("graph function has " + std::to_string(f.size()) + " values, model has " +
                            std::to_string(size()) + " atoms");
    }
  }

  double energy(const Vector& f, const Vector& g) const {
    validate(f);
    validate(g);
    double s = 0.0;
    for (const auto& e : edges_) {
      s += e.c * (f[idx(e.a)] - f[idx(e.b)]) * (g[idx(e.a)] - g[idx(e.b)]);
    }
    return s;
  }

  /// mu<f,g>({x}) = sum_y c(x,y)(f(x)-f(y))(g(x)-g(y)).
  SignedMeasureVec mutual_energy_measure(const Vector& f, const Vector& g) const {
    validate(f);
    validate(g);
    Vector w = Vector::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t x = 0; x < size(); ++x) {
      double s = 0.0;
      for (const auto& n : adjacency_[x]) {
        s += n.c * (f[idx(x)] - f[idx(n.atom)]) * (g[idx(x)] - g[idx(n.atom)]);
      }
      w[idx(x)] = s;
    }
    return {std::move(w)};
  }

  MeasureVec energy_measure(const Vector& f) const {
    return MeasureVec(mutual_energy_measure(f, f));
  }

  Vector constant(double c) const { return Vector::Constant(static_cast<Eigen::Index>(size()), c); }

  Vector combine(std::span<const double> coeffs, std::span<const Vector> fs) const {
    if (coeffs.size() != fs.size()) throw Error("coefficient count does not match function count");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k < fs.size(); ++k) {
      validate(fs[k]);
      out += coeffs[k] * fs[k];
    }
    return out;
  }

  /// (Lf)(x) = (1/m(x)) sum_y c(x,y)(f(y) - f(x)).
  Vector generator(const Vector& f) const {
    validate(f);
    Vector out(static_cast<Eigen::Index>(size()));
    for (std::size_t x = 0; x < size(); ++x) {
      double s = 0.0;
      for (const auto& n : adjacency_[x]) s += n.c * (f[idx(n.atom)] - f[idx(x)]);
      out[idx(x)] = s / space_.m(x);
    }
    return out;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  AtomSpace space_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

inline std::vector<std::string> vertex_ids(std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
  return ids;
}

/// Path v0 - v1 - ... with unit conductances and unit base weights.
inline GraphForm make_path_graph(std::size_t n) {
  if (n == 0) throw Error("path graph needs at least one vertex");
  std::vector<GraphForm::Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return GraphForm(AtomSpace(Backend::graph, vertex_ids(n), std::vector<double>(n, 1.0)), std::move(edges));
}

inline GraphForm make_complete_graph(std::size_t n) {
  if (n == 0) throw Error("complete graph needs at least one vertex");
  std::vector<GraphForm::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
  return GraphForm(AtomSpace(Backend::graph, vertex_ids(n), std::vector<double>(n, 1.0)), std::move(edges));
}

/// Connected random graph: a random recursive spanning tree plus independent
/// extra edges with probability `extra_edge_p`. Conductances and base weights
/// are uniform in [0.5, 2].
inline GraphForm make_random_graph(std::size_t n, std::uint64_t seed, double extra_edge_p = 0.1) {
  if (n == 0) throw Error("random graph needs at least one vertex");
  if (!(extra_edge_p >= 0.0 && extra_edge_p <= 1.0)) throw Error("edge probability must be in [0,1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  std::vector<GraphForm::Edge> edges;
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    const auto a = order[k];
    const auto b = order[pick(rng)];
    present[a][b] = present[b][a] = true;
    edges.push_back({std::min(a, b), std::max(a, b), weight(rng)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double u = unit(rng);
      const double c = weight(rng);
      if (!present[i][j] && u < extra_edge_p) {
        present[i][j] = present[j][i] = true;
        edges.push_back({i, j, c});
      }
    }
  }
  std::vector<double> m(n);
  for (auto& w : m) w = weight(rng);
  return GraphForm(AtomSpace(Backend::graph, vertex_ids(n), std::move(m)), std::move(edges));
}

}  // namespace dirform
