#pragma once

// Shared vocabulary: atom spaces, measure vectors, tolerances, errors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dirform {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Backend { graph, sg_cells, superposition };

inline std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::graph: return "graph";
    case Backend::sg_cells: return "sg-cells";
    case Backend::superposition: return "superposition";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendMismatch : public Error {
 public:
  using Error::Error;
};

class NotRepresentable : public Error {
 public:
  using Error::Error;
};

inline Backend backend_from_string(std::string_view s) {
  if (s == "graph") return Backend::graph;
  if (s == "sg-cells" || s == "sg") return Backend::sg_cells;
  if (s == "superposition") return Backend::superposition;
  throw Error("unknown backend '" + std::string(s) + "'");
}

/// Raised when a measure charges an atom that the reference measure does
/// not (mu is not absolutely continuous with respect to nu).
class DominationError : public Error {
 public:
  DominationError(std::string atom, double mu_value)
      : Error("domination violated at atom '" + atom + "' (mu = " + std::to_string(mu_value) +
              ", nu = 0)"),
        atom_(std::move(atom)),
        mu_(mu_value) {}
  const std::string& atom() const noexcept { return atom_; }
  double mu_value() const noexcept { return mu_; }

 private:
  std::string atom_;
  double mu_;
};

class IllConditioned : public Error {
 public:
  IllConditioned(std::string atom, double condition)
      : Error("ill-conditioned coordinate matrix at atom '" + atom +
              "' (condition number " + std::to_string(condition) + ")"),
        atom_(std::move(atom)),
        condition_(condition) {}
  const std::string& atom() const noexcept { return atom_; }
  double condition() const noexcept { return condition_; }

 private:
  std::string atom_;
  double condition_;
};

/// Numerical thresholds shared by every module.
struct Tolerances {
  /// nu(atom) <= tau_zero counts as a nu-null atom.
  double tau_zero = 1e-14;
  /// Singular values below rank * sigma_max count as zero.
  double rank = 1e-9;
  /// Condition-number ceiling for coordinate matrices.
  double cond_max = 1e8;

  void validate() const {
    if (!(tau_zero > 0) || !(rank > 0) || !(cond_max > 0)) {
      throw Error("tolerances must be positive");
    }
  }
};

/// Finite stand-in for the state space: ordered atoms with base-measure weights.
class AtomSpace {
 public:
  AtomSpace() = default;

  AtomSpace(Backend kind, std::vector<std::string> ids, std::vector<double> m)
      : kind_(kind), ids_(std::move(ids)), m_(std::move(m)) {
    if (ids_.size() != m_.size()) {
      throw Error("atom ids and weights differ in length");
    }
    index_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!(m_[i] > 0) || !std::isfinite(m_[i])) {
        throw Error("atom '" + ids_[i] + "' has non-positive base weight");
      }
      if (!index_.emplace(ids_[i], i).second) {
        throw Error("duplicate atom id '" + ids_[i] + "'");
      }
    }
  }

  Backend kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  double m(std::size_t i) const { return m_.at(i); }
  const std::vector<double>& m_weights() const noexcept { return m_; }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view id) const {
    if (auto i = find(id)) return *i;
    throw Error("unknown atom id '" + std::string(id) + "'");
  }

 private:
  Backend kind_ = Backend::graph;
  std::vector<std::string> ids_;
  std::vector<double> m_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-atom real weights of a signed measure.
struct SignedMeasureVec {
  Vector weights;

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights.size()); }
  double operator[](std::size_t i) const { return weights[static_cast<Eigen::Index>(i)]; }
  double total() const { return weights.sum(); }
  double on(std::span<const std::size_t> subset) const {
    double s = 0.0;
    for (auto i : subset) s += weights[static_cast<Eigen::Index>(i)];
    return s;
  }
};

/// Per-atom nonnegative weights.
class MeasureVec {
 public:
  MeasureVec() = default;
  explicit MeasureVec(Vector w) : weights_(std::move(w)) {
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] >= 0.0)) {
        throw Error("measure has a negative or NaN entry at position " + std::to_string(i));
      }
    }
  }
  explicit MeasureVec(SignedMeasureVec s) : MeasureVec(std::move(s.weights)) {}

  const Vector& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  double operator[](std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  double total() const { return weights_.sum(); }
  double on(std::span<const std::size_t> subset) const {
    double s = 0.0;
    for (auto i : subset) s += weights_[static_cast<Eigen::Index>(i)];
    return s;
  }
  SignedMeasureVec as_signed() const { return SignedMeasureVec{weights_}; }

 private:
  Vector weights_;
};

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = std::numeric_limits<double>::min()) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

}  // namespace dirform
