#pragma once

// Cell-wise 2x2 density matrices of two harmonic functions on the gasket,
// taken with respect to nu = (mu<h1> + mu<h2>)/2. Their eigenvalue ratio
// lambda_2/lambda_1 per cell measures how far the matrix is from rank one.

#include "dirform/sg_form.hpp"

namespace dirform {

struct KusuokaLevel {
  int level = 0;
  std::size_t cells = 0;
  /// sum_w nu(K_w) ratio(K_w) / sum_w nu(K_w)
  double mean_ratio = 0.0;
  /// nu-mass fraction of cells with ratio < 0.1
  double small_ratio_mass = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  int min_rank = 0;
  int max_rank = 0;
};

struct KusuokaStats {
  std::vector<KusuokaLevel> levels;
  /// Set when the boundary vectors were not energy-orthonormal and were
  /// replaced by their Gram-Schmidt orthonormalization.
  bool reorthogonalized = false;
  Vector3 h1;
  Vector3 h2;

  bool strictly_decreasing(int from = 1) const {
    for (std::size_t l = static_cast<std::size_t>(from) + 1; l < levels.size(); ++l) {
      if (!(levels[l].mean_ratio < levels[l - 1].mean_ratio)) return false;
    }
    return true;
  }
};

/// Boundary values of two energy-orthonormal harmonic functions.
inline std::pair<Vector3, Vector3> default_kusuoka_generators() {
  const Vector3 a1(1.0, -1.0, 0.0);
  const Vector3 a2(1.0, 1.0, -2.0);
  return {a1 / std::sqrt(sg_quadratic(a1, a1)), a2 / std::sqrt(sg_quadratic(a2, a2))};
}

/// Levels 0..max_level. Level 0 has one cell, whose matrix is the global
/// energy Gram of (h1, h2).
inline KusuokaStats kusuoka_ratio_stats(int max_level, Vector3 a1, Vector3 a2, double tol_rank = Tolerances{}.rank) {
  if (max_level < 0 || max_level > 14) throw Error("kusuoka levels must lie in 0..14");
  KusuokaStats out;
  constexpr double kOrthoTol = 1e-12;
  const double q11 = sg_quadratic(a1, a1);
  const double q22 = sg_quadratic(a2, a2);
  const double q12 = sg_quadratic(a1, a2);
  if (!(q11 > 0.0)) throw Error("first kusuoka generator has zero energy");
  if (std::abs(q11 - 1.0) > kOrthoTol || std::abs(q22 - 1.0) > kOrthoTol || std::abs(q12) > kOrthoTol) {
    out.reorthogonalized = true;
    a1 /= std::sqrt(q11);
    a2 -= sg_quadratic(a1, a2) * a1;
    const double r = sg_quadratic(a2, a2);
    if (!(r > 0.0)) throw Error("kusuoka generators are linearly dependent modulo constants");
    a2 /= std::sqrt(r);
  }
  out.h1 = a1;
  out.h2 = a2;

  const auto& mats = sg_extension_matrices();
  std::vector<std::pair<Vector3, Vector3>> cur{{a1, a2}};
  for (int level = 0; level <= max_level; ++level) {
    if (level > 0) {
      std::vector<std::pair<Vector3, Vector3>> next;
      next.reserve(cur.size() * 3);
      for (const auto& [x, y] : cur)
        for (const auto& ai : mats.A) next.emplace_back(ai * x, ai * y);
      cur = std::move(next);
    }
    KusuokaLevel st;
    st.level = level;
    st.cells = cur.size();
    st.min_ratio = std::numeric_limits<double>::infinity();
    st.max_ratio = 0.0;
    st.min_rank = 2;
    st.max_rank = 0;
    double mass = 0.0;
    double weighted = 0.0;
    double small = 0.0;
    for (const auto& [x, y] : cur) {
      // The common factor 2 (5/3)^n cancels in Z = M / nu and in the ratio;
      // only the relative cell masses matter.
      const double m11 = sg_quadratic(x, x);
      const double m22 = sg_quadratic(y, y);
      const double m12 = sg_quadratic(x, y);
      const double nu = 0.5 * (m11 + m22);
      if (!(nu > 0.0)) continue;
      Eigen::Matrix2d z;
      z << m11 / nu, m12 / nu, m12 / nu, m22 / nu;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(z, Eigen::EigenvaluesOnly);
      const double hi = es.eigenvalues()[1];
      const double lo = std::max(es.eigenvalues()[0], 0.0);
      const double ratio = lo / hi;
      const int rank = ratio > tol_rank ? 2 : 1;
      mass += nu;
      weighted += nu * ratio;
      if (ratio < 0.1) small += nu;
      st.min_ratio = std::min(st.min_ratio, ratio);
      st.max_ratio = std::max(st.max_ratio, ratio);
      st.min_rank = std::min(st.min_rank, rank);
      st.max_rank = std::max(st.max_rank, rank);
    }
    st.mean_ratio = weighted / mass;
    st.small_ratio_mass = small / mass;
    out.levels.push_back(st);
  }
  return out;
}

inline KusuokaStats kusuoka_ratio_stats(int max_level) {
  const auto [a1, a2] = default_kusuoka_generators();
  return kusuoka_ratio_stats(max_level, a1, a2);
}

}  // namespace dirform
