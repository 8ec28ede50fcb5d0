#pragma once

// Minimal energy-dominant measures, Radon-Nikodym densities on atoms, and
// block-constant densities over a refining chain of partitions.

#include "dirform/forms.hpp"

namespace dirform {

struct DominantMeasure {
  MeasureVec nu;
  /// 2^{-i} for the i-th generator, i = 1, 2, ...
  std::vector<double> mix_weights;
  /// True when nu vanishes identically (every generator has zero energy).
  bool degenerate = false;

  bool positive(std::size_t atom, double tau_zero) const { return nu[atom] > tau_zero; }
};

/// nu = sum_i 2^{-i} mu<f_i>.
template <DirichletModel M>
DominantMeasure build_medm(const M& model, std::span<const FunctionOf<M>> family) {
  if (family.empty()) throw Error("build_medm needs a nonempty family");
  Vector nu = Vector::Zero(static_cast<Eigen::Index>(model.atoms().size()));
  std::vector<double> mix;
  double w = 1.0;
  for (const auto& f : family) {
    w *= 0.5;
    mix.push_back(w);
    nu += w * model.energy_measure(f).weights();
  }
  const bool degenerate = nu.cwiseAbs().maxCoeff() == 0.0;
  return {MeasureVec(std::move(nu)), std::move(mix), degenerate};
}

/// Per-atom density dmu/dnu; 0/0 := 1.
struct DensityField {
  Vector values;

  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

/// Throws DominationError naming the first atom where nu vanishes but mu does not.
inline DensityField density(const SignedMeasureVec& mu, const MeasureVec& nu, const AtomSpace& atoms,
                            double tau_zero = Tolerances{}.tau_zero) {
  if (mu.size() != nu.size() || mu.size() != atoms.size()) throw Error("density: size mismatch");
  Vector out(mu.weights.size());
  for (std::size_t x = 0; x < mu.size(); ++x) {
    const auto i = static_cast<Eigen::Index>(x);
    if (nu[x] > tau_zero) {
      out[i] = mu[x] / nu[x];
    } else if (std::abs(mu[x]) <= tau_zero) {
      out[i] = 1.0;
    } else {
      throw DominationError(atoms.id(x), mu[x]);
    }
  }
  return {std::move(out)};
}

struct MedmReport {
  bool domination = true;
  bool minimality = true;
  /// Atoms charged by some mu<f> but not by the candidate.
  std::vector<std::size_t> domination_violations;
  /// Atoms charged by the candidate but null for the reference measure.
  std::vector<std::size_t> minimality_violations;

  bool ok() const noexcept { return domination && minimality; }
};

/// Checks (a) domination of every mu<f>, f in the test family, and
/// (b) minimality against the reference build_medm(test_family). Zero sets
/// only; weights are never compared.
template <DirichletModel M>
MedmReport is_medm(const MeasureVec& candidate, const M& model, std::span<const FunctionOf<M>> test_family,
                   double tau_zero = Tolerances{}.tau_zero) {
  const auto n = model.atoms().size();
  if (candidate.size() != n) throw Error("candidate measure has the wrong number of atoms");
  MedmReport report;
  std::vector<bool> charged(n, false);
  for (const auto& f : test_family) {
    const auto mu = model.energy_measure(f);
    for (std::size_t x = 0; x < n; ++x) charged[x] = charged[x] || mu[x] > tau_zero;
  }
  const auto reference = build_medm(model, test_family);
  for (std::size_t x = 0; x < n; ++x) {
    const bool cand = candidate[x] > tau_zero;
    if (charged[x] && !cand) report.domination_violations.push_back(x);
    if (cand && !(reference.nu[x] > tau_zero)) report.minimality_violations.push_back(x);
  }
  report.domination = report.domination_violations.empty();
  report.minimality = report.minimality_violations.empty();
  return report;
}

/// Nested partitions of the atom set. levels()[n][x] is the block id of atom
/// x at level n; every level refines the previous one and the last level
/// consists of singletons.
class PartitionChain {
 public:
  PartitionChain() = default;

  explicit PartitionChain(std::vector<std::vector<std::size_t>> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw Error("partition chain has no levels");
    const auto n = levels_.front().size();
    for (const auto& lvl : levels_) {
      if (lvl.size() != n) throw Error("partition levels cover different atom counts");
    }
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      block_counts_.push_back(compact(levels_[l]));
    }
    for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
      std::vector<std::size_t> parent(block_counts_[l + 1], SIZE_MAX);
      for (std::size_t x = 0; x < n; ++x) {
        auto& p = parent[levels_[l + 1][x]];
        if (p == SIZE_MAX) {
          p = levels_[l][x];
        } else if (p != levels_[l][x]) {
          throw Error("partition level " + std::to_string(l + 1) + " does not refine level " + std::to_string(l));
        }
      }
    }
    if (block_counts_.back() != n) throw Error("finest partition level must consist of singletons");
  }

  /// Level n block of a level-L SG cell is the ancestor cell at level n.
  static PartitionChain sg_cells(int finest_level, int coarsest_level = 0) {
    if (coarsest_level < 0 || coarsest_level > finest_level) throw Error("invalid SG chain levels");
    const auto cells = SGMesh::pow3(finest_level);
    std::vector<std::vector<std::size_t>> levels;
    for (int l = coarsest_level; l <= finest_level; ++l) {
      const auto width = SGMesh::pow3(finest_level - l);
      std::vector<std::size_t> ids(cells);
      for (std::size_t c = 0; c < cells; ++c) ids[c] = c / width;
      levels.push_back(std::move(ids));
    }
    return PartitionChain(std::move(levels));
  }

  std::size_t level_count() const noexcept { return levels_.size(); }
  std::size_t atom_count() const noexcept { return levels_.empty() ? 0 : levels_.front().size(); }
  std::size_t block_count(std::size_t level) const { return block_counts_.at(level); }
  const std::vector<std::size_t>& blocks(std::size_t level) const { return levels_.at(level); }
  const std::vector<std::vector<std::size_t>>& levels() const noexcept { return levels_; }

 private:
  /// Renumbers block ids to 0..k-1 in order of first appearance; returns k.
  static std::size_t compact(std::vector<std::size_t>& ids) {
    std::unordered_map<std::size_t, std::size_t> remap;
    for (auto& id : ids) {
      auto [it, fresh] = remap.emplace(id, remap.size());
      id = it->second;
    }
    return remap.size();
  }

  std::vector<std::vector<std::size_t>> levels_;
  std::vector<std::size_t> block_counts_;
};

/// Z_n(x) = mu(B)/nu(B) for the level-n block B containing x; 0/0 := 1.
inline DensityField partition_densities(const SignedMeasureVec& mu, const MeasureVec& nu,
                                        const PartitionChain& chain, std::size_t level,
                                        double tau_zero = Tolerances{}.tau_zero) {
  if (level >= chain.level_count()) throw Error("partition level out of range");
  if (mu.size() != chain.atom_count() || nu.size() != chain.atom_count()) {
    throw Error("partition chain does not match the measure's atoms");
  }
  const auto& ids = chain.blocks(level);
  const auto k = chain.block_count(level);
  std::vector<double> mu_b(k, 0.0);
  std::vector<double> nu_b(k, 0.0);
  for (std::size_t x = 0; x < ids.size(); ++x) {
    mu_b[ids[x]] += mu[x];
    nu_b[ids[x]] += nu[x];
  }
  std::vector<double> ratio(k);
  for (std::size_t b = 0; b < k; ++b) {
    if (nu_b[b] > tau_zero) {
      ratio[b] = mu_b[b] / nu_b[b];
    } else if (std::abs(mu_b[b]) <= tau_zero) {
      ratio[b] = 1.0;
    } else {
      throw DominationError("block " + std::to_string(b) + " of level " + std::to_string(level), mu_b[b]);
    }
  }
  Vector out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t x = 0; x < ids.size(); ++x) out[static_cast<Eigen::Index>(x)] = ratio[ids[x]];
  return {std::move(out)};
}

/// sum_x nu(x) |a(x) - b(x)|
inline double l1_distance(const DensityField& a, const DensityField& b, const MeasureVec& nu) {
  return (nu.weights().array() * (a.values - b.values).array().abs()).sum();
}

}  // namespace dirform
