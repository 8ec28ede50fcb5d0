#pragma once

// Superposition backend on [-1,1]^n: bulk Dirichlet energy plus the
// tangential energy on the hyperplane {y = 0}. Coordinates are
// (x_1, ..., x_{n-1}, y); y is the last coordinate.
//
//   E(f,g) = 1/2 int <grad f, grad g> dz + 1/2 int_{y=0} sum_{k<n} d_k f d_k g dx
//
// Both integrals use the midpoint rule per grid cell. Functions are
// polynomials of degree <= 2, so gradients are exact.

#include "dirform/core.hpp"

#include <map>

namespace dirform {

/// f(z) = constant + <linear, z> + z^T quadratic z, quadratic symmetric.
struct Polynomial2 {
  double constant = 0.0;
  Vector linear;
  Matrix quadratic;

  static Polynomial2 zero(int n) {
    return {0.0, Vector::Zero(n), Matrix::Zero(n, n)};
  }

  int dim() const noexcept { return static_cast<int>(linear.size()); }

  int degree() const {
    if (quadratic.cwiseAbs().maxCoeff() > 0.0) return 2;
    if (linear.cwiseAbs().maxCoeff() > 0.0) return 1;
    return 0;
  }

  double value(const Vector& z) const { return constant + linear.dot(z) + z.dot(quadratic * z); }
  Vector gradient(const Vector& z) const { return linear + 2.0 * quadratic * z; }

  Polynomial2& operator+=(const Polynomial2& o) {
    constant += o.constant;
    linear += o.linear;
    quadratic += o.quadratic;
    return *this;
  }
  Polynomial2& operator*=(double s) {
    constant *= s;
    linear *= s;
    quadratic *= s;
    return *this;
  }
  friend Polynomial2 operator+(Polynomial2 a, const Polynomial2& b) { return a += b; }
  friend Polynomial2 operator*(double s, Polynomial2 a) { return a *= s; }
};

/// Product of two polynomials when the result stays within degree 2.
inline Polynomial2 multiply(const Polynomial2& a, const Polynomial2& b) {
  if (a.dim() != b.dim()) throw BackendMismatch("polynomials live in different dimensions");
  if (a.degree() + b.degree() > 2) {
    throw NotRepresentable("product of degree " + std::to_string(a.degree()) + " and degree " +
                           std::to_string(b.degree()) + " leaves the degree-2 catalogue closure");
  }
  const int n = a.dim();
  Polynomial2 out = Polynomial2::zero(n);
  out.constant = a.constant * b.constant;
  out.linear = a.constant * b.linear + b.constant * a.linear;
  const Matrix outer = a.linear * b.linear.transpose();
  out.quadratic = a.constant * b.quadratic + b.constant * a.quadratic + 0.5 * (outer + outer.transpose());
  return out;
}

class SuperpositionForm {
 public:
  using function_type = Polynomial2;

  SuperpositionForm(int n, int grid) : n_(n), grid_(grid) {
    if (n < 2 || n > 3) throw Error("superposition dimension must be 2 or 3");
    if (grid < 2 || grid % 2 != 0) throw Error("superposition grid must be an even number >= 2");
    const double h = 2.0 / grid;
    const double bulk_volume = std::pow(h, n);
    const double surface_volume = std::pow(h, n - 1);

    std::vector<std::string> ids;
    std::vector<double> m;
    std::size_t bulk = 1;
    for (int k = 0; k < n; ++k) bulk *= static_cast<std::size_t>(grid);
    std::size_t surface = bulk / static_cast<std::size_t>(grid);
    centers_.resize(n, static_cast<Eigen::Index>(bulk + surface));

    auto emit = [&](const std::vector<int>& cell, bool on_surface) {
      const auto col = static_cast<Eigen::Index>(ids.size());
      std::string id = on_surface ? "surf:" : "bulk:";
      for (std::size_t k = 0; k < cell.size(); ++k) {
        if (k) id += ',';
        id += std::to_string(cell[k]);
        centers_(static_cast<Eigen::Index>(k), col) = -1.0 + (cell[k] + 0.5) * h;
      }
      if (on_surface) centers_(n - 1, col) = 0.0;
      ids.push_back(std::move(id));
      m.push_back(on_surface ? surface_volume : bulk_volume);
      volumes_.push_back(on_surface ? surface_volume : bulk_volume);
      surface_.push_back(on_surface);
    };

    std::vector<int> cell(static_cast<std::size_t>(n), 0);
    for (std::size_t c = 0; c < bulk; ++c) {
      std::size_t rest = c;
      for (int k = n - 1; k >= 0; --k) {
        cell[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(grid));
        rest /= static_cast<std::size_t>(grid);
      }
      emit(cell, false);
    }
    std::vector<int> scell(static_cast<std::size_t>(n - 1), 0);
    for (std::size_t c = 0; c < surface; ++c) {
      std::size_t rest = c;
      for (int k = n - 2; k >= 0; --k) {
        scell[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(grid));
        rest /= static_cast<std::size_t>(grid);
      }
      emit(scell, true);
    }
    space_ = AtomSpace(Backend::superposition, std::move(ids), std::move(m));
    build_catalogue();
  }

  int dim() const noexcept { return n_; }
  int grid() const noexcept { return grid_; }
  const AtomSpace& atoms() const noexcept { return space_; }
  bool is_surface(std::size_t atom) const { return surface_.at(atom); }
  double volume(std::size_t atom) const { return volumes_.at(atom); }
  Vector center(std::size_t atom) const { return centers_.col(static_cast<Eigen::Index>(atom)); }

  /// Catalogue names in order: x1..x_{n-1}, y, then x_j*x_k (j <= k), x_k*y, y*y.
  const std::vector<std::string>& catalogue_names() const noexcept { return names_; }

  const Polynomial2& catalogue(std::string_view id) const {
    auto it = catalogue_.find(std::string(id));
    if (it == catalogue_.end()) throw Error("unknown catalogue function '" + std::string(id) + "'");
    return it->second;
  }

  std::vector<Polynomial2> full_catalogue() const {
    std::vector<Polynomial2> out;
    for (const auto& name : names_) out.push_back(catalogue_.at(name));
    return out;
  }

  void validate(const Polynomial2& f) const {
    if (f.dim() != n_ || f.quadratic.rows() != n_ || f.quadratic.cols() != n_) {
      throw BackendMismatch("polynomial dimension does not match superposition model (n = " +
                            std::to_string(n_) + ")");
    }
  }

  /// Density of mu<f,g> with respect to nu = m + dx (x) delta_0(dy) at the atom center.
  double density(const Polynomial2& f, const Polynomial2& g, std::size_t atom) const {
    validate(f);
    validate(g);
    const Vector z = center(atom);
    const Vector df = f.gradient(z);
    const Vector dg = g.gradient(z);
    if (surface_.at(atom)) return df.head(n_ - 1).dot(dg.head(n_ - 1));
    return df.dot(dg);
  }

  double density(std::string_view f, std::string_view g, std::size_t atom) const {
    return density(catalogue(f), catalogue(g), atom);
  }

  SignedMeasureVec mutual_energy_measure(const Polynomial2& f, const Polynomial2& g) const {
    validate(f);
    validate(g);
    Vector w(static_cast<Eigen::Index>(space_.size()));
    for (std::size_t a = 0; a < space_.size(); ++a) {
      w[static_cast<Eigen::Index>(a)] = density(f, g, a) * volumes_[a];
    }
    return {std::move(w)};
  }

  MeasureVec energy_measure(const Polynomial2& f) const { return MeasureVec(mutual_energy_measure(f, f)); }

  double energy(const Polynomial2& f, const Polynomial2& g) const {
    return 0.5 * mutual_energy_measure(f, g).total();
  }

  Polynomial2 constant(double c) const {
    Polynomial2 p = Polynomial2::zero(n_);
    p.constant = c;
    return p;
  }

  Polynomial2 combine(std::span<const double> coeffs, std::span<const Polynomial2> fs) const {
    if (coeffs.size() != fs.size()) throw Error("coefficient count does not match function count");
    Polynomial2 out = Polynomial2::zero(n_);
    for (std::size_t k = 0; k < fs.size(); ++k) {
      validate(fs[k]);
      out += coeffs[k] * fs[k];
    }
    return out;
  }

  /// Sum of named catalogue terms plus a constant.
  Polynomial2 from_terms(const std::map<std::string, double>& terms, double constant = 0.0) const {
    Polynomial2 out = this->constant(constant);
    for (const auto& [name, c] : terms) out += c * catalogue(name);
    return out;
  }

 private:
  std::string coordinate_name(int k) const { return k == n_ - 1 ? "y" : "x" + std::to_string(k + 1); }

  void build_catalogue() {
    auto unit = [&](int k) {
      Polynomial2 p = Polynomial2::zero(n_);
      p.linear[k] = 1.0;
      return p;
    };
    for (int k = 0; k < n_; ++k) {
      names_.push_back(coordinate_name(k));
      catalogue_.emplace(names_.back(), unit(k));
    }
    for (int j = 0; j < n_; ++j) {
      for (int k = j; k < n_; ++k) {
        names_.push_back(coordinate_name(j) + "*" + coordinate_name(k));
        catalogue_.emplace(names_.back(), multiply(unit(j), unit(k)));
      }
    }
  }

  int n_;
  int grid_;
  AtomSpace space_;
  Matrix centers_;
  std::vector<double> volumes_;
  std::vector<bool> surface_;
  std::vector<std::string> names_;
  std::map<std::string, Polynomial2> catalogue_;
};

}  // namespace dirform
