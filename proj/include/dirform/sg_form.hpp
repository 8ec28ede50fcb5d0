#pragma once

// Sierpinski-gasket backend built on the standard harmonic structure
// (renormalization factor 5/3). Atoms are the 3^n level-n cells K_w, indexed
// lexicographically with w_1 the most significant digit.
//
// Cell K_w = F_{w_1} o ... o F_{w_n}(K) with F_i(z) = (z + p_i)/2. The
// extension matrices map corner values of a cell to corner values of its
// children, so the corner values of K_w are A_w a = A_{w_n} ... A_{w_1} a.

#include "dirform/core.hpp"

#include <array>
#include <memory>

namespace dirform {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Q(a,b) = sum_{i<j} (a_i - a_j)(b_i - b_j); the level-0 energy.
inline double sg_quadratic(const Vector3& a, const Vector3& b) {
  return (a[0] - a[1]) * (b[0] - b[1]) + (a[0] - a[2]) * (b[0] - b[2]) +
         (a[1] - a[2]) * (b[1] - b[2]);
}

inline constexpr double kSGRenormalization = 5.0 / 3.0;

/// Vertices and cells of the level-n approximation. Vertices are numbered in
/// order of first appearance while walking cells lexicographically, corners
/// in the order F_w(p_0), F_w(p_1), F_w(p_2); lattice coordinates use the
/// basis p_1 = (1,0), p_2 = (0,1) scaled by 2^n.
class SGMesh {
 public:
  explicit SGMesh(int level) : level_(level) {
    if (level < 0 || level > 12) throw Error("SG level must be in [0, 12]");
    const std::size_t cells = pow3(level);
    corners_.resize(cells);
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t c = 0; c < cells; ++c) {
      std::int64_t ox = 0;
      std::int64_t oy = 0;
      std::size_t rest = c;
      // digits from least significant (w_n) to most significant (w_1)
      for (int j = level; j >= 1; --j) {
        const auto digit = rest % 3;
        rest /= 3;
        const std::int64_t scale = std::int64_t{1} << (level - j);
        if (digit == 1) ox += scale;
        if (digit == 2) oy += scale;
      }
      const std::array<std::array<std::int64_t, 2>, 3> pts{{{ox, oy}, {ox + 1, oy}, {ox, oy + 1}}};
      for (int k = 0; k < 3; ++k) {
        const auto key = (static_cast<std::uint64_t>(pts[k][0]) << 32) | static_cast<std::uint64_t>(pts[k][1]);
        auto [it, fresh] = index.emplace(key, coords_.size());
        if (fresh) coords_.push_back(pts[k]);
        corners_[c][k] = it->second;
      }
    }
  }

  int level() const noexcept { return level_; }
  std::size_t cell_count() const noexcept { return corners_.size(); }
  std::size_t vertex_count() const noexcept { return coords_.size(); }
  const std::array<std::size_t, 3>& corners(std::size_t cell) const { return corners_.at(cell); }
  const std::array<std::int64_t, 2>& coordinates(std::size_t vertex) const { return coords_.at(vertex); }

  /// Vertices at lattice positions of the outer triangle (p_0, p_1, p_2).
  std::array<std::size_t, 3> boundary_vertices() const {
    const std::int64_t n = std::int64_t{1} << level_;
    const std::array<std::array<std::int64_t, 2>, 3> pts{{{0, 0}, {n, 0}, {0, n}}};
    std::array<std::size_t, 3> out{};
    for (int k = 0; k < 3; ++k) {
      for (std::size_t v = 0; v < coords_.size(); ++v) {
        if (coords_[v] == pts[k]) out[k] = v;
      }
    }
    return out;
  }

  static std::size_t pow3(int n) {
    std::size_t p = 1;
    for (int i = 0; i < n; ++i) p *= 3;
    return p;
  }

 private:
  int level_;
  std::vector<std::array<std::size_t, 3>> corners_;
  std::vector<std::array<std::int64_t, 2>> coords_;
};

struct SGExtensionMatrices {
  std::array<Matrix3, 3> A;
};

/// Harmonic extension matrices obtained by minimizing the level-1 network
/// energy (unit conductances on the 9 edges of the three cells) over the
/// three interior vertex values.
inline SGExtensionMatrices derive_sg_extension_matrices() {
  const SGMesh mesh(1);
  const auto nv = static_cast<Eigen::Index>(mesh.vertex_count());
  Matrix laplacian = Matrix::Zero(nv, nv);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto& k = mesh.corners(c);
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const auto a = static_cast<Eigen::Index>(k[i]);
        const auto b = static_cast<Eigen::Index>(k[j]);
        laplacian(a, a) += 1.0;
        laplacian(b, b) += 1.0;
        laplacian(a, b) -= 1.0;
        laplacian(b, a) -= 1.0;
      }
    }
  }
  const auto boundary = mesh.boundary_vertices();
  std::vector<Eigen::Index> interior;
  for (Eigen::Index v = 0; v < nv; ++v) {
    if (std::find(boundary.begin(), boundary.end(), static_cast<std::size_t>(v)) == boundary.end()) {
      interior.push_back(v);
    }
  }
  const auto ni = static_cast<Eigen::Index>(interior.size());
  Matrix lii(ni, ni);
  Matrix lib(ni, 3);
  for (Eigen::Index r = 0; r < ni; ++r) {
    for (Eigen::Index s = 0; s < ni; ++s) lii(r, s) = laplacian(interior[r], interior[s]);
    for (Eigen::Index s = 0; s < 3; ++s) lib(r, s) = laplacian(interior[r], static_cast<Eigen::Index>(boundary[s]));
  }
  Eigen::FullPivLU<Matrix> lu(lii);
  if (!lu.isInvertible()) throw std::logic_error("singular interior system in SG harmonic extension");
  const Matrix interior_map = -lu.solve(lib);

  // Rows of the full vertex-value map a -> values on all level-1 vertices.
  Matrix full = Matrix::Zero(nv, 3);
  for (int k = 0; k < 3; ++k) full(static_cast<Eigen::Index>(boundary[k]), k) = 1.0;
  for (Eigen::Index r = 0; r < ni; ++r) full.row(interior[r]) = interior_map.row(r);

  SGExtensionMatrices out;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& k = mesh.corners(i);
    for (int row = 0; row < 3; ++row) out.A[i].row(row) = full.row(static_cast<Eigen::Index>(k[row]));
  }
  return out;
}

/// Process-wide copy of the derived matrices.
inline const SGExtensionMatrices& sg_extension_matrices() {
  static const SGExtensionMatrices matrices = derive_sg_extension_matrices();
  return matrices;
}

/// Piecewise-harmonic function: harmonic on each level-`level` cell, given by
/// its values on the level-`level` vertices.
struct SGFunction {
  int level = 0;
  Vector values;

  static SGFunction harmonic(const Vector3& boundary) { return {0, Vector(boundary)}; }
};

class SGForm {
 public:
  using function_type = SGFunction;

  explicit SGForm(int level) : level_(level) {
    if (level < 0 || level > 10) throw Error("SG model level must be in [0, 10]");
    meshes_.reserve(static_cast<std::size_t>(level) + 1);
    for (int l = 0; l <= level; ++l) meshes_.push_back(std::make_shared<const SGMesh>(l));
    const auto cells = meshes_.back()->cell_count();
    std::vector<std::string> ids;
    ids.reserve(cells);
    for (std::size_t c = 0; c < cells; ++c) ids.push_back(cell_id(c, level));
    std::vector<double> m(cells, 1.0 / static_cast<double>(cells));
    space_ = AtomSpace(Backend::sg_cells, std::move(ids), std::move(m));
  }

  int level() const noexcept { return level_; }
  const AtomSpace& atoms() const noexcept { return space_; }
  const SGMesh& mesh(int l) const {
    if (l < 0 || l > level_) throw Error("mesh level out of range");
    return *meshes_[static_cast<std::size_t>(l)];
  }
  const SGExtensionMatrices& matrices() const { return sg_extension_matrices(); }

  /// "K" followed by the word digits, e.g. K012.
  static std::string cell_id(std::size_t cell, int level) {
    std::string digits(static_cast<std::size_t>(level), '0');
    for (int j = level - 1; j >= 0; --j) {
      digits[static_cast<std::size_t>(j)] = static_cast<char>('0' + cell % 3);
      cell /= 3;
    }
    return "K" + digits;
  }

  void validate(const SGFunction& f) const {
    if (f.level < 0 || f.level > level_) {
      throw BackendMismatch("SG function level " + std::to_string(f.level) + " exceeds model level " +
                            std::to_string(level_));
    }
    if (static_cast<std::size_t>(f.values.size()) != mesh(f.level).vertex_count()) {
      throw BackendMismatch("SG function at level " + std::to_string(f.level) + " needs " +
                            std::to_string(mesh(f.level).vertex_count()) + " vertex values");
    }
  }

  /// Harmonic extension of a piecewise-harmonic function to a finer level.
  SGFunction refine(const SGFunction& f, int target) const {
    validate(f);
    if (target < f.level || target > level_) throw Error("refinement target out of range");
    SGFunction cur = f;
    const auto& mats = matrices();
    while (cur.level < target) {
      const SGMesh& coarse = mesh(cur.level);
      const SGMesh& fine = mesh(cur.level + 1);
      Vector next = Vector::Zero(static_cast<Eigen::Index>(fine.vertex_count()));
      for (std::size_t c = 0; c < coarse.cell_count(); ++c) {
        const Vector3 b = corner_values(coarse, cur.values, c);
        for (std::size_t i = 0; i < 3; ++i) {
          const Vector3 child = mats.A[i] * b;
          const auto& k = fine.corners(3 * c + i);
          for (int j = 0; j < 3; ++j) next[static_cast<Eigen::Index>(k[j])] = child[j];
        }
      }
      cur = {cur.level + 1, std::move(next)};
    }
    return cur;
  }

  /// (5/3)^L sum over level-L cells of Q on corner values, L the finer of the two levels.
  double energy(const SGFunction& f, const SGFunction& g) const {
    const int l = std::max(f.level, g.level);
    const SGFunction ff = refine(f, l);
    const SGFunction gg = refine(g, l);
    const SGMesh& m = mesh(l);
    double s = 0.0;
    for (std::size_t c = 0; c < m.cell_count(); ++c) {
      s += sg_quadratic(corner_values(m, ff.values, c), corner_values(m, gg.values, c));
    }
    return std::pow(kSGRenormalization, l) * s;
  }

  /// mu<f,g>(K_w) = 2 (5/3)^n Q(f|corners(K_w), g|corners(K_w)) on level-n cells.
  SignedMeasureVec mutual_energy_measure(const SGFunction& f, const SGFunction& g) const {
    const SGFunction ff = refine(f, level_);
    const SGFunction gg = refine(g, level_);
    const SGMesh& m = mesh(level_);
    const double scale = 2.0 * std::pow(kSGRenormalization, level_);
    Vector w(static_cast<Eigen::Index>(m.cell_count()));
    for (std::size_t c = 0; c < m.cell_count(); ++c) {
      w[static_cast<Eigen::Index>(c)] =
          scale * sg_quadratic(corner_values(m, ff.values, c), corner_values(m, gg.values, c));
    }
    return {std::move(w)};
  }

  MeasureVec energy_measure(const SGFunction& f) const { return MeasureVec(mutual_energy_measure(f, f)); }

  SGFunction constant(double c) const { return {0, Vector::Constant(3, c)}; }

  SGFunction combine(std::span<const double> coeffs, std::span<const SGFunction> fs) const {
    if (coeffs.size() != fs.size()) throw Error("coefficient count does not match function count");
    int l = 0;
    for (const auto& f : fs) {
      validate(f);
      l = std::max(l, f.level);
    }
    SGFunction out{l, Vector::Zero(static_cast<Eigen::Index>(mesh(l).vertex_count()))};
    for (std::size_t k = 0; k < fs.size(); ++k) out.values += coeffs[k] * refine(fs[k], l).values;
    return out;
  }

  /// Cell energy measure of harmonic functions via explicit products A_w:
  /// mu<h_a,h_b>(K_w) = 2 (5/3)^n Q(A_w a, A_w b).
  SignedMeasureVec cell_energy_measure(const Vector3& a, const Vector3& b) const {
    std::vector<std::pair<Vector3, Vector3>> cur{{a, b}};
    const auto& mats = matrices();
    for (int l = 0; l < level_; ++l) {
      std::vector<std::pair<Vector3, Vector3>> next;
      next.reserve(cur.size() * 3);
      for (const auto& [x, y] : cur) {
        for (const auto& ai : mats.A) next.emplace_back(ai * x, ai * y);
      }
      cur = std::move(next);
    }
    const double scale = 2.0 * std::pow(kSGRenormalization, level_);
    Vector w(static_cast<Eigen::Index>(cur.size()));
    for (std::size_t c = 0; c < cur.size(); ++c) {
      w[static_cast<Eigen::Index>(c)] = scale * sg_quadratic(cur[c].first, cur[c].second);
    }
    return {std::move(w)};
  }

  /// Energy measure of a level-m piecewise-harmonic f on the model's level-n
  /// cells: inside each level-m cell the corner values are propagated with
  /// A_v products over the remaining n - m digits.
  MeasureVec pwh_energy_measure(const SGFunction& f) const {
    validate(f);
    const SGMesh& coarse = mesh(f.level);
    const int depth = level_ - f.level;
    const auto per_cell = SGMesh::pow3(depth);
    const auto& mats = matrices();
    const double scale = 2.0 * std::pow(kSGRenormalization, level_);
    Vector w(static_cast<Eigen::Index>(coarse.cell_count() * per_cell));
    for (std::size_t c = 0; c < coarse.cell_count(); ++c) {
      std::vector<Vector3> cur{corner_values(coarse, f.values, c)};
      for (int l = 0; l < depth; ++l) {
        std::vector<Vector3> next;
        next.reserve(cur.size() * 3);
        for (const auto& x : cur)
          for (const auto& ai : mats.A) next.push_back(ai * x);
        cur = std::move(next);
      }
      for (std::size_t s = 0; s < per_cell; ++s) {
        w[static_cast<Eigen::Index>(c * per_cell + s)] = scale * sg_quadratic(cur[s], cur[s]);
      }
    }
    return MeasureVec(std::move(w));
  }

  /// Tent function: 1 at one level-m vertex, 0 at the others.
  SGFunction spline(int m, std::size_t vertex) const {
    const auto nv = mesh(m).vertex_count();
    if (vertex >= nv) throw Error("spline vertex out of range");
    SGFunction f{m, Vector::Zero(static_cast<Eigen::Index>(nv))};
    f.values[static_cast<Eigen::Index>(vertex)] = 1.0;
    return f;
  }

 private:
  static Vector3 corner_values(const SGMesh& m, const Vector& values, std::size_t cell) {
    const auto& k = m.corners(cell);
    return {values[static_cast<Eigen::Index>(k[0])], values[static_cast<Eigen::Index>(k[1])],
            values[static_cast<Eigen::Index>(k[2])]};
  }

  int level_;
  std::vector<std::shared_ptr<const SGMesh>> meshes_;
  AtomSpace space_;
};

}  // namespace dirform
