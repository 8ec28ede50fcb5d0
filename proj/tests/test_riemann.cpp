#include "generators.hpp"

#include <gtest/gtest.h>

using namespace dirform;
using dirform::testing::Gen;
using dirform::testing::max_abs;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

template <DirichletModel M>
struct Setup {
  std::vector<FunctionOf<M>> family;
  DominantMeasure dom;
  GramField field;
  IndexField index;
};

template <DirichletModel M>
Setup<M> setup(const M& model, std::vector<FunctionOf<M>> family) {
  Setup<M> s;
  s.family = std::move(family);
  const std::span<const FunctionOf<M>> fam(s.family);
  s.dom = build_medm(model, fam);
  s.field = gram_field(model, fam, s.dom.nu);
  s.index = pointwise_index(s.field);
  return s;
}

/// d mu<f,g>/d nu by brute force from the edge list.
double graph_density(const GraphForm& g, const Vector& f, const Vector& h, std::size_t x, double nu) {
  double s = 0.0;
  for (const auto& e : g.edges()) {
    if (e.a == x || e.b == x) s += e.c * (f[static_cast<Eigen::Index>(e.a)] - f[static_cast<Eigen::Index>(e.b)]) *
                                   (h[static_cast<Eigen::Index>(e.a)] - h[static_cast<Eigen::Index>(e.b)]);
  }
  return s / nu;
}

GraphForm two_components() {
  AtomSpace s(Backend::graph, vertex_ids(4), {1.0, 1.0, 1.0, 1.0});
  return GraphForm(std::move(s), {{0, 1, 1.0}, {2, 3, 2.0}});
}

}  // namespace

// --- Gram field and pointwise index -----------------------------------------

TEST(GramField, TriangleIndicatorsAgainstEdgeSums) {
  const auto k3 = make_complete_graph(3);
  const auto s = setup(k3, indicator_family(k3));
  for (std::size_t x = 0; x < 3; ++x) {
    ASSERT_TRUE(s.field.nu_positive[x]);
    const Matrix& z = s.field.z[x];
    EXPECT_LT((z - z.transpose()).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
    Eigen::SelfAdjointEigenSolver<Matrix> es(z);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        EXPECT_NEAR(z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                    graph_density(k3, s.family[i], s.family[j], x, s.dom.nu[x]), 1e-14);
  }
}

TEST(GramField, SingleFunctionAgainstItsOwnMeasure) {
  const auto g = make_random_graph(12, 3);
  const Vector f = Vector::LinSpaced(12, -1.0, 2.0);
  const std::vector<Vector> fam{f};
  const auto field = gram_field(g, std::span<const Vector>(fam), g.energy_measure(f));
  for (std::size_t x = 0; x < g.size(); ++x) {
    if (field.nu_positive[x]) EXPECT_NEAR(field.z[x](0, 0), 1.0, 1e-14);
  }
}

TEST(GramField, ConstantsGiveZeroMatrices) {
  const auto p3 = make_path_graph(3);
  const std::vector<Vector> fam{p3.constant(1.0), p3.constant(-3.0)};
  const auto s = setup(p3, fam);
  EXPECT_TRUE(s.dom.degenerate);
  for (const auto& z : s.field.z) EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.index.index, 0);
}

TEST(GramField, NullAtomChargedByFamilyIsADominationError) {
  const auto p3 = make_path_graph(3);
  const std::vector<Vector> fam{vec({0, 1, 3})};
  EXPECT_THROW(gram_field(p3, std::span<const Vector>(fam), MeasureVec(vec({1, 1, 0}))), DominationError);
}

TEST(PointwiseIndex, PathGraph) {
  const auto p3 = make_path_graph(3);
  for (const auto& fam : {indicator_family(p3), orthonormal_family(p3)}) {
    const auto s = setup(p3, fam);
    EXPECT_EQ(s.index.p, (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(s.index.index, 2);
    EXPECT_EQ(s.index.null_stratum_mass, 0.0);
    ASSERT_EQ(s.index.strata.size(), 3u);
    EXPECT_EQ(s.index.strata[2], (std::vector<std::size_t>{1}));
    for (double m : s.index.margin) EXPECT_GT(m, 3.0);
  }
}

TEST(PointwiseIndex, DegreeOnRandomGraphs) {
  Gen gen(2024);
  for (int k = 0; k < 20; ++k) {
    const auto g = gen.graph(2, 25);
    const auto s = setup(g, orthonormal_family(g));
    for (std::size_t x = 0; x < g.size(); ++x) {
      EXPECT_EQ(s.index.p[x], static_cast<int>(g.degree(x))) << "case " << k << " atom " << x;
      EXPECT_LE(s.index.p[x], static_cast<int>(g.size()));
    }
  }
}

TEST(PointwiseIndex, SuperpositionBulkAndSurface) {
  const SuperpositionForm form(2, 8);
  const auto s = setup(form, std::vector<Polynomial2>{form.catalogue("x1"), form.catalogue("y")});
  for (std::size_t x = 0; x < form.atoms().size(); ++x) EXPECT_EQ(s.index.p[x], form.is_surface(x) ? 1 : 2);
  EXPECT_EQ(s.index.index, 2);
  const auto full = setup(form, form.full_catalogue());
  EXPECT_EQ(full.index.index, 2);
  const SuperpositionForm form3(3, 4);
  const auto s3 = setup(form3, form3.full_catalogue());
  for (std::size_t x = 0; x < form3.atoms().size(); ++x) EXPECT_EQ(s3.index.p[x], form3.is_surface(x) ? 2 : 3);
}

TEST(PointwiseIndex, ZeroFormHasIndexZero) {
  const GraphForm empty(AtomSpace(Backend::graph, vertex_ids(4), {1, 1, 1, 1}), {});
  const auto s = setup(empty, indicator_family(empty));
  for (int p : s.index.p) EXPECT_EQ(p, 0);
  EXPECT_EQ(s.index.index, 0);
  EXPECT_THROW(sample_coordinates(empty, std::span<const Vector>(s.family), s.dom.nu, s.index, 1), Error);
}

TEST(PointwiseIndex, NestedFamiliesNeverLoseRank) {
  Gen gen(55);
  for (int k = 0; k < 20; ++k) {
    const auto g = gen.graph(3, 15);
    std::vector<Vector> fam;
    std::vector<int> prev(g.size(), 0);
    for (std::size_t j = 0; j < g.size() + 2; ++j) {
      fam.push_back(gen.vector(g.size()));
      const auto s = setup(g, fam);
      for (std::size_t x = 0; x < g.size(); ++x) EXPECT_GE(s.index.p[x], prev[x]) << "case " << k << " step " << j;
      prev = s.index.p;
    }
  }
}

// --- Coordinate tuples ------------------------------------------------------

TEST(Sampling, TriangleFirstDrawsSucceed) {
  const auto k3 = make_complete_graph(3);
  for (const auto& fam : {orthonormal_family(k3), indicator_family(k3)}) {
    const auto st = first_draw_stats(k3, std::span<const Vector>(fam), 1, 100);
    EXPECT_GE(st.first_draw_ghat, 99) << "worst condition " << st.worst_condition;
  }
}

TEST(Sampling, DrawsAreDeterministicInSeedAndDraw) {
  const auto g = make_random_graph(10, 1);
  const auto s = setup(g, orthonormal_family(g));
  const std::span<const Vector> fam(s.family);
  const auto a = draw_coordinates(g, fam, s.dom.nu, s.index, 42, 3);
  const auto b = draw_coordinates(g, fam, s.dom.nu, s.index, 42, 3);
  const auto c = draw_coordinates(g, fam, s.dom.nu, s.index, 42, 4);
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_NE(a.coefficients, c.coefficients);
  EXPECT_EQ(a.coefficients.rows(), s.index.index);
  EXPECT_EQ(a.coefficients.cols(), static_cast<Eigen::Index>(g.size()));
  // g_k = sum_i a_ki 2^{-i/2} f_i
  Vector g0 = Vector::Zero(10);
  for (std::size_t i = 0; i < 10; ++i) g0 += a.coefficients(0, static_cast<Eigen::Index>(i)) * std::pow(2.0, -0.5 * (i + 1.0)) * s.family[i];
  EXPECT_LT(max_abs(g0 - a.g[0]), 1e-14);
}

TEST(Sampling, DegenerateFamilyReportsFailingAtom) {
  const auto k3 = make_complete_graph(3);
  const auto s = setup(k3, indicator_family(k3));
  const std::vector<Vector> narrow{vec({1, 0, 0})};
  const auto t = draw_coordinates(k3, std::span<const Vector>(narrow), s.dom.nu, s.index, 7);
  EXPECT_FALSE(t.in_g);
  EXPECT_FALSE(t.in_ghat);
  ASSERT_TRUE(t.failing_atom.has_value());
  EXPECT_TRUE(std::isinf(t.condition[*t.failing_atom]) || t.condition[*t.failing_atom] > 1e8);
  try {
    sample_coordinates(k3, std::span<const Vector>(narrow), s.dom.nu, s.index, 7);
    FAIL() << "expected a sampling failure";
  } catch (const SamplingFailure& e) {
    EXPECT_FALSE(e.atom().empty());
  }
}

TEST(Sampling, RankOneTupleIsAlwaysAdmissible) {
  const auto g = make_random_graph(8, 5);
  const Vector f = Vector::LinSpaced(8, 0.0, 7.0);
  const std::vector<Vector> fam{f};
  const auto nu = g.energy_measure(f);
  const auto index = pointwise_index(gram_field(g, std::span<const Vector>(fam), nu));
  EXPECT_EQ(index.index, 1);
  for (double a : {-3.0, 1e-3, 0.5, 40.0}) {
    const auto t = assess_tuple(g, std::vector<Vector>{a * f}, index, nu);
    EXPECT_TRUE(t.in_ghat) << "a = " << a;
  }
}

TEST(Sampling, ScalingCoordinatesPreservesMembership) {
  Gen gen(9);
  const auto g = make_random_graph(12, 9);
  const auto s = setup(g, orthonormal_family(g));
  const auto t = sample_coordinates(g, std::span<const Vector>(s.family), s.dom.nu, s.index, 3);
  ASSERT_TRUE(t.in_g);
  for (int k = 0; k < 10; ++k) {
    auto scaled = t.g;
    for (auto& f : scaled) f *= gen.uniform(0.5, 2.0) * (gen.uniform(0, 1) < 0.5 ? -1.0 : 1.0);
    EXPECT_TRUE(assess_tuple(g, scaled, s.index, s.dom.nu).in_g);
  }
}

// --- Gradient ---------------------------------------------------------------

TEST(Gradient, TriangleExactCombination) {
  const auto k3 = make_complete_graph(3);
  const auto s = setup(k3, indicator_family(k3));
  const auto t = assess_tuple(k3, std::vector<Vector>{vec({1, 0, 0}), vec({0, 1, 0})}, s.index, s.dom.nu);
  ASSERT_TRUE(t.in_ghat);
  const auto grad = gradient(k3, vec({1, 2, 0}), t);
  for (std::size_t x = 0; x < 3; ++x) {
    EXPECT_NEAR(grad[x][0], 1.0, 1e-14);
    EXPECT_NEAR(grad[x][1], 2.0, 1e-14);
  }
  const auto first = gradient(k3, t.g[0], t);
  const auto zero = gradient(k3, k3.constant(5.0), t);
  for (std::size_t x = 0; x < 3; ++x) {
    EXPECT_LT((first[x] - vec({1, 0})).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(max_abs(zero[x]), 0.0);
  }
}

TEST(Gradient, ComponentsBeyondLocalIndexVanish) {
  const auto g = make_random_graph(20, 4);
  const auto s = setup(g, orthonormal_family(g));
  const auto t = sample_coordinates(g, std::span<const Vector>(s.family), s.dom.nu, s.index, 11);
  Gen gen(3);
  const auto grad = gradient(g, gen.vector(20), t);
  for (std::size_t x = 0; x < g.size(); ++x)
    for (Eigen::Index i = s.index.p[x]; i < grad[x].size(); ++i) EXPECT_EQ(grad[x][i], 0.0);
}

TEST(Gradient, IndependentFactorizationAgrees) {
  Gen gen(17);
  for (int k = 0; k < 10; ++k) {
    const auto g = gen.graph(3, 20);
    const auto s = setup(g, orthonormal_family(g));
    const auto t = sample_coordinates(g, std::span<const Vector>(s.family), s.dom.nu, s.index, gen.rng()());
    const Vector f = gen.vector(g.size());
    const auto grad = gradient(g, f, t);
    for (std::size_t x = 0; x < g.size(); ++x) {
      const int r = t.rank[x];
      if (r == 0) continue;
      Vector u(r);
      for (int i = 0; i < r; ++i) u[i] = graph_density(g, f, t.g[static_cast<std::size_t>(i)], x, s.dom.nu[x]);
      const Vector w = t.z[x].topLeftCorner(r, r).colPivHouseholderQr().solve(u);
      // two backward-stable solvers agree to within eps * condition
      const double bound = 1e-13 * (1.0 + t.condition[x]) * (1.0 + w.cwiseAbs().maxCoeff());
      EXPECT_LT((w - grad[x].head(r)).cwiseAbs().maxCoeff(), bound) << "case " << k << " condition " << t.condition[x];
    }
  }
}

TEST(SchurResidual, MatchesBorderedDeterminantOracle) {
  const auto p3 = make_path_graph(3);
  const auto s = setup(p3, indicator_family(p3));
  const auto t = sample_coordinates(p3, std::span<const Vector>(s.family), s.dom.nu, s.index, 5);
  Gen gen(100);
  for (int k = 0; k < 100; ++k) {
    const Vector f = gen.vector(3);
    const Vector res = schur_residual(p3, f, t);
    for (std::size_t x = 0; x < 3; ++x) {
      const int r = t.rank[x];
      Matrix b(r + 1, r + 1);
      b.topLeftCorner(r, r) = t.z[x].topLeftCorner(r, r);
      for (int i = 0; i < r; ++i) {
        b(i, r) = b(r, i) = graph_density(p3, f, t.g[static_cast<std::size_t>(i)], x, s.dom.nu[x]);
      }
      const double df = graph_density(p3, f, f, x, s.dom.nu[x]);
      b(r, r) = df;
      const double oracle = std::abs(b.determinant() / t.z[x].topLeftCorner(r, r).determinant());
      EXPECT_NEAR(res[static_cast<Eigen::Index>(x)], oracle, 1e-9 * (1.0 + df)) << "trial " << k;
      EXPECT_LE(res[static_cast<Eigen::Index>(x)], 1e-8 * (1.0 + df));
    }
  }
}

TEST(SchurResidual, NonzeroWhenFunctionLeavesTheSpan) {
  // one coordinate on a vertex of degree 2 cannot reproduce every direction there
  const auto p3 = make_path_graph(3);
  const auto s = setup(p3, indicator_family(p3));
  auto t = assess_tuple(p3, std::vector<Vector>{vec({1, 0, 0})}, s.index, s.dom.nu);
  EXPECT_FALSE(t.in_g);
  const std::vector<Vector> one{vec({1, 0, 0})};
  const auto nu1 = p3.energy_measure(one[0]);
  const auto idx1 = pointwise_index(gram_field(p3, std::span<const Vector>(one), nu1));
  t = assess_tuple(p3, one, idx1, nu1);
  ASSERT_TRUE(t.in_g);
  // f = 1_c is charged on {b, c}; c is nu1-null, b sees an orthogonal direction
  const Vector res = schur_residual(p3, vec({0, 0, 1}), t);
  EXPECT_GT(res[1], 0.5);
}

TEST(RemainderDensity, AgreesWithSchurAndVanishesOnTheSpan) {
  Gen gen(61);
  const auto g = make_random_graph(15, 61);
  const auto s = setup(g, orthonormal_family(g));
  const auto t = sample_coordinates(g, std::span<const Vector>(s.family), s.dom.nu, s.index, 61);
  {
    // a three-function family leaves most directions outside the span
    const auto full = orthonormal_family(g);
    const auto n = setup(g, std::vector<Vector>(full.begin(), full.begin() + 3));
    const auto tn = sample_coordinates(g, std::span<const Vector>(n.family), n.dom.nu, n.index, 61);
    double largest = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vector f = gen.vector(15);
      const Vector rd = remainder_density(g, f, tn);
      const Vector res = schur_residual(g, f, tn);
      const Vector df = detail::self_density(g, f, tn);
      for (Eigen::Index x = 0; x < rd.size(); ++x) {
        EXPECT_NEAR(std::abs(rd[x]), res[x], 1e-10 * (1.0 + df[x]));
        largest = std::max(largest, res[x] / (1.0 + df[x]));
      }
    }
    EXPECT_GT(largest, 0.1);
  }
  Vector lin = g.constant(3.0);
  for (std::size_t i = 0; i < t.p(); ++i) lin += gen.normal() * t.g[i];
  const Vector rd = remainder_density(g, lin, t);
  const Vector df = detail::self_density(g, lin, t);
  for (Eigen::Index x = 0; x < rd.size(); ++x) EXPECT_LE(std::abs(rd[x]), 1e-10 * (1.0 + df[x]));
  const Vector shifted = remainder_density(g, Vector(t.g[0] + g.constant(-8.0)), t);
  EXPECT_LT(max_abs(shifted), 1e-10);
}

TEST(Reconstruction, PathGraphEnergy) {
  const auto p3 = make_path_graph(3);
  const auto s = setup(p3, orthonormal_family(p3));
  const auto t = sample_coordinates(p3, std::span<const Vector>(s.family), s.dom.nu, s.index, 2);
  const auto r = energy_reconstruction(p3, vec({0, 1, 3}), vec({0, 1, 3}), t);
  EXPECT_DOUBLE_EQ(r.lhs, 5.0);
  EXPECT_NEAR(r.rhs, 5.0, 1e-10);
}

TEST(Reconstruction, DisjointComponentsGiveZero) {
  const auto g = two_components();
  const auto s = setup(g, orthonormal_family(g));
  const auto t = sample_coordinates(g, std::span<const Vector>(s.family), s.dom.nu, s.index, 4);
  const auto r = energy_reconstruction(g, vec({1, 2, 0, 0}), vec({0, 0, 3, -1}), t);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_LT(std::abs(r.rhs), 1e-12);
}

TEST(Reconstruction, GasketHarmonicEnergy) {
  const SGForm form(4);
  const auto s = setup(form, std::vector<SGFunction>{SGFunction::harmonic({1, -1, 0}), SGFunction::harmonic({1, 1, -2})});
  const auto t = sample_coordinates(form, std::span<const SGFunction>(s.family), s.dom.nu, s.index, 8);
  const auto h = SGFunction::harmonic({1, 0, 0});
  const auto r = energy_reconstruction(form, h, h, t);
  EXPECT_NEAR(r.lhs, 2.0, 1e-12);
  EXPECT_NEAR(r.rhs, 2.0, 1e-8);
}

TEST(Reconstruction, RandomGraphsAndPolarization) {
  Gen gen(71);
  for (int k = 0; k < 10; ++k) {
    const auto g = gen.graph(3, 20);
    const auto s = setup(g, orthonormal_family(g));
    const auto t = sample_coordinates(g, std::span<const Vector>(s.family), s.dom.nu, s.index, gen.rng()());
    const Vector f = gen.vector(g.size()), h = gen.vector(g.size());
    EXPECT_LT(energy_reconstruction(g, f, h, t).relative_error, 1e-8) << "case " << k;
  }
}

// --- Derivation property ----------------------------------------------------

TEST(Derivation, IdentityConstantAndProduct) {
  const SuperpositionForm form(2, 8);
  const auto fam = form.full_catalogue();
  const auto s = setup(form, fam);
  const auto t = sample_coordinates(form, std::span<const Polynomial2>(s.family), s.dom.nu, s.index, 1);

  QuadraticMap id{0.0, vec({1.0}), Matrix::Zero(1, 1)};
  const std::vector<Polynomial2> x1{form.catalogue("x1")};
  EXPECT_LT(derivation_check(form, id, x1, t), 1e-12);

  QuadraticMap constant{4.0, vec({0.0}), Matrix::Zero(1, 1)};
  EXPECT_LT(derivation_check(form, constant, x1, t), 1e-12);

  Matrix q(2, 2);
  q << 0.0, 0.5, 0.5, 0.0;
  QuadraticMap product{0.0, vec({0.0, 0.0}), q};
  const std::vector<Polynomial2> uv{form.catalogue("x1"), form.catalogue("y")};
  EXPECT_LT(derivation_check(form, product, uv, t), 1e-8);
  EXPECT_LT(max_abs(compose(form, product, uv).quadratic - form.catalogue("x1*y").quadratic), 1e-15);
}

TEST(Derivation, AllCasesOnBothDimensions) {
  CheckOptions opt;
  const auto r = check_derivation(opt);
  for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.name << " worst " << c.worst << " at " << c.location;
}

TEST(Derivation, CubicCompositionIsRejected) {
  const SuperpositionForm form(2, 4);
  Matrix q(1, 1);
  q << 1.0;
  QuadraticMap square{0.0, vec({0.0}), q};
  const std::vector<Polynomial2> quad{form.catalogue("x1*y")};
  EXPECT_THROW(compose(form, square, quad), NotRepresentable);
}

// --- Cell ratio statistics on the gasket ------------------------------------

namespace {

/// Exact level-1 extension matrices (rational entries) and the 2x2
/// eigenvalue ratio in closed form.
double oracle_mean_ratio(int level) {
  Matrix3 a0, a1, a2;
  a0 << 1, 0, 0, 0.4, 0.4, 0.2, 0.4, 0.2, 0.4;
  a1 << 0.4, 0.4, 0.2, 0, 1, 0, 0.2, 0.4, 0.4;
  a2 << 0.4, 0.2, 0.4, 0.2, 0.4, 0.4, 0, 0, 1;
  auto q = [](const Vector3& x, const Vector3& y) {
    return (x[0] - x[1]) * (y[0] - y[1]) + (x[1] - x[2]) * (y[1] - y[2]) + (x[0] - x[2]) * (y[0] - y[2]);
  };
  Vector3 h1(1, -1, 0), h2(1, 1, -2);
  h1 /= std::sqrt(q(h1, h1));
  h2 /= std::sqrt(q(h2, h2));
  std::vector<std::pair<Vector3, Vector3>> cells{{h1, h2}};
  for (int l = 0; l < level; ++l) {
    std::vector<std::pair<Vector3, Vector3>> next;
    for (const auto& [x, y] : cells)
      for (const Matrix3* m : {&a0, &a1, &a2}) next.emplace_back(*m * x, *m * y);
    cells = next;
  }
  double num = 0.0, den = 0.0;
  for (const auto& [x, y] : cells) {
    const double a = q(x, x), d = q(y, y), b = q(x, y);
    const double tr = a + d, det = a * d - b * b;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double hi = tr / 2.0 + disc, lo = std::max(0.0, tr / 2.0 - disc);
    const double nu = 0.5 * tr;
    num += nu * lo / hi;
    den += nu;
  }
  return num / den;
}

}  // namespace

TEST(Kusuoka, FrozenLowLevelRatios) {
  const auto st = kusuoka_ratio_stats(2);
  EXPECT_FALSE(st.reorthogonalized);
  EXPECT_NEAR(st.levels[0].mean_ratio, 1.0, 1e-14);
  EXPECT_NEAR(st.levels[1].mean_ratio, 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(st.levels[2].mean_ratio, 0.043939243169467221, 1e-15);
  EXPECT_NEAR(oracle_mean_ratio(1), 1.0 / 9.0, 1e-14);
  EXPECT_NEAR(oracle_mean_ratio(2), 0.043939243169467221, 1e-14);
}

TEST(Kusuoka, AgreesWithOracleAndDecreases) {
  const auto st = kusuoka_ratio_stats(8);
  ASSERT_EQ(st.levels.size(), 9u);
  for (int l = 0; l <= 6; ++l) EXPECT_NEAR(st.levels[static_cast<std::size_t>(l)].mean_ratio, oracle_mean_ratio(l), 1e-12) << "level " << l;
  EXPECT_TRUE(st.strictly_decreasing(1));
  EXPECT_LT(st.levels[4].mean_ratio, st.levels[1].mean_ratio);
  for (const auto& lv : st.levels) {
    EXPECT_EQ(lv.cells, SGMesh::pow3(lv.level));
    EXPECT_GE(lv.min_rank, 1);
    EXPECT_LE(lv.max_rank, 2);
    EXPECT_LE(lv.min_ratio, lv.mean_ratio);
    EXPECT_GE(lv.max_ratio, lv.mean_ratio);
  }
}

TEST(Kusuoka, NonOrthonormalGeneratorsAreReorthogonalized) {
  const auto st = kusuoka_ratio_stats(3, Vector3(1, 0, 0), Vector3(0, 1, 0));
  EXPECT_TRUE(st.reorthogonalized);
  EXPECT_NEAR(sg_quadratic(st.h1, st.h1), 1.0, 1e-14);
  EXPECT_NEAR(sg_quadratic(st.h2, st.h2), 1.0, 1e-14);
  EXPECT_NEAR(sg_quadratic(st.h1, st.h2), 0.0, 1e-14);
  EXPECT_NEAR(st.levels[0].mean_ratio, 1.0, 1e-12);
  EXPECT_THROW(kusuoka_ratio_stats(2, Vector3(1, 0, 0), Vector3(1, 1, 1)), Error);
  EXPECT_THROW(kusuoka_ratio_stats(15), Error);
}
