#include <cmath>
#include <complex>
#include <map>

#include "ballistica/error.hpp"
#include "ballistica/trees.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ballistica;
using oracles::TestRng;

TEST_SUITE("trees") {

TEST_CASE("model construction") {
  SUBCASE("regular tree") {
    TreeModel t3 = TreeModel::regular_tree(3);
    CHECK(t3.num_edge_classes() == 1);
    CHECK(t3.outgoing(0).size() == 2);
    CHECK(t3.edges_at(0).size() == 3);
  }
  SUBCASE("K4 compiles to 12 directed classes") {
    TreeModel k4 = TreeModel::from_base_graph(oracles::complete_graph(4));
    CHECK(k4.num_edge_classes() == 12);
    CHECK(k4.min_degree() == 3);
    for (int b = 0; b < 12; ++b) {
      CHECK(k4.outgoing(b).size() == 2);
      CHECK(k4.edge_reverse(k4.edge_reverse(b)) == b);
    }
  }
  SUBCASE("K23 has alternating degrees") {
    TreeModel k23 = TreeModel::from_base_graph(oracles::complete_bipartite_23());
    CHECK(k23.min_degree() == 2);
    CHECK(k23.max_degree() == 3);
    CHECK(k23.num_edge_classes() == 12);
    CHECK_FALSE(k23.anderson_ready());
    CHECK_THROWS_AS(TreeModel::from_base_graph(oracles::complete_bipartite_23(), true), Error);
  }
  SUBCASE("disconnected graphs are rejected") {
    BaseGraph g;
    g.num_vertices = 4;
    g.edges = {{0, 1}, {2, 3}};
    g.potential.assign(4, 0.0);
    CHECK_THROWS_AS(TreeModel::from_base_graph(g), Error);
  }
  SUBCASE("degree-1 vertices are rejected") {
    BaseGraph g;
    g.num_vertices = 3;
    g.edges = {{0, 1}, {1, 2}};
    g.potential.assign(3, 0.0);
    CHECK_THROWS_AS(TreeModel::from_base_graph(g), Error);
  }
}

TEST_CASE("regular tree zeta matches the quadratic oracle") {
  TreeModel t3 = TreeModel::regular_tree(3);
  TestRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    cplx_t gamma(rng.uniform(-3.0, 3.0), rng.uniform(0.005, 0.5));
    GreenCache cache = zeta_fixed_point(t3, gamma);
    cplx_t want = oracles::regular_tree_zeta(2, gamma);
    CHECK(std::abs(cache.zeta[0] - want) < 1e-10);
    green_diagonal(t3, cache);
    CHECK(std::abs(cache.g_diag[0] - oracles::regular_tree_green(2, gamma)) < 1e-10);
    CHECK(cache.g_diag[0].imag() > 0.0);
  }
}

TEST_CASE("large eta asymptotics") {
  TreeModel t3 = TreeModel::regular_tree(3);
  cplx_t gamma(0.3, 50.0);
  GreenCache cache = zeta_fixed_point(t3, gamma);
  // zeta ~ 1/gamma and G ~ -1/gamma for |gamma| large
  CHECK(std::abs(cache.zeta[0] - 1.0 / gamma) < 2.0 / std::norm(gamma));
  green_diagonal(t3, cache);
  CHECK(std::abs(cache.g_diag[0] + 1.0 / gamma) < 10.0 / std::norm(gamma));
  CHECK(std::abs(cache.zeta[0]) < 1.5 / std::abs(gamma));
}

TEST_CASE("identities hold at convergence") {
  for (bool regular : {true, false}) {
    TreeModel model = regular
                          ? TreeModel::regular_tree(3)
                          : TreeModel::from_base_graph(oracles::complete_bipartite_23());
    TestRng rng(regular ? 5 : 7);
    for (int trial = 0; trial < 10; ++trial) {
      cplx_t gamma(rng.uniform(-2.5, 2.5), rng.uniform(0.01, 1.0));
      GreenCache cache = zeta_fixed_point(model, gamma);
      CHECK(herglotz_identity_residual(model, cache) < 1e-10);
      CHECK(zeta_inversion_residual(model, cache) < 1e-10);
      for (const auto& z : cache.zeta) CHECK(z.imag() < 0.0);
      for (const auto& g : cache.g_diag) CHECK(g.imag() > 0.0);
    }
  }
}

TEST_CASE("spectral floor") {
  TreeModel t3 = TreeModel::regular_tree(3);
  SUBCASE("inside the band all edges share |Im zeta|") {
    GreenCache cache = zeta_fixed_point(t3, {0.5, 0.01});
    CHECK(spectral_floor(cache) ==
          doctest::Approx(std::abs(oracles::regular_tree_zeta(2, {0.5, 0.01}).imag()))
              .epsilon(1e-10));
    CHECK(spectral_floor(cache) > 0.0);
  }
  SUBCASE("far outside the spectrum zeta is nearly real") {
    CHECK(spectral_floor(t3, 10.0, 1e-6) < 1e-6);
  }
  SUBCASE("positive for eta > 0") {
    for (double lambda : {-2.0, 0.0, 1.7}) {
      CHECK(spectral_floor(t3, lambda, 0.05) > 0.0);
    }
  }
}

TEST_CASE("explicit cover cross-checks") {
  SUBCASE("K4 cover vs regular tree builtin and quadratic oracle") {
    BaseGraph k4 = oracles::complete_graph(4);
    TreeModel model = TreeModel::from_base_graph(k4);
    cplx_t gamma(0.5, 0.01);
    GreenCache cache = zeta_fixed_point(model, gamma);
    green_diagonal(model, cache);
    cplx_t quad = oracles::regular_tree_green(2, gamma);
    CHECK(std::abs(cache.g_diag[0] - quad) < 1e-10);

    // matched-boundary explicit cover reproduces G(o,o) through an
    // elimination over individual vertices (no class collapsing)
    std::map<std::pair<int, int>, int> class_of;
    for (int b = 0; b < model.num_edge_classes(); ++b)
      class_of[{model.edge_origin(b), model.edge_target(b)}] = b;
    auto boundary = [&](int from, int to) {
      cplx_t acc(0.0, 0.0);
      int b = class_of.at({from, to});
      for (int child : model.outgoing(b)) acc += cache.zeta[child];
      return acc;
    };
    auto cover = oracles::ExplicitCover::build(k4, 18);
    auto solve = oracles::solve_cover(k4, cover, gamma, 18, boundary);
    CHECK(std::abs(solve.g_root - cache.g_diag[0]) < 1e-10);
  }
  SUBCASE("Dirichlet wall at large eta needs no zeta input at all") {
    BaseGraph k23 = oracles::complete_bipartite_23();
    TreeModel model = TreeModel::from_base_graph(k23);
    cplx_t gamma(0.3, 3.0);
    GreenCache cache = zeta_fixed_point(model, gamma);
    green_diagonal(model, cache);
    auto cover = oracles::ExplicitCover::build(k23, 30);
    auto solve = oracles::solve_cover(k23, cover, gamma, 30,
                                      [](int, int) { return cplx_t(0.0, 0.0); });
    CHECK(std::abs(solve.g_root - cache.g_diag[k23.root]) < 1e-10);
  }
  SUBCASE("sphere sums match the explicit cover level sums") {
    BaseGraph k4 = oracles::complete_graph(4);
    TreeModel model = TreeModel::from_base_graph(k4);
    cplx_t gamma(0.7, 0.05);
    GreenCache cache = zeta_fixed_point(model, gamma);
    green_diagonal(model, cache);
    std::map<std::pair<int, int>, int> class_of;
    for (int b = 0; b < model.num_edge_classes(); ++b)
      class_of[{model.edge_origin(b), model.edge_target(b)}] = b;
    auto boundary = [&](int from, int to) {
      cplx_t acc(0.0, 0.0);
      for (int child : model.outgoing(class_of.at({from, to}))) acc += cache.zeta[child];
      return acc;
    };
    const int depth = 16;
    auto cover = oracles::ExplicitCover::build(k4, depth);
    auto solve = oracles::solve_cover(k4, cover, gamma, depth, boundary);
    auto sums = sphere_sums(model, cache, depth);
    for (int r = 0; r <= depth; ++r)
      CHECK(sums[r] == doctest::Approx(solve.level_sums[r]).epsilon(1e-9));
  }
}

TEST_CASE("averaged moment") {
  TreeModel t3 = TreeModel::regular_tree(3);
  SUBCASE("beta = 0 reduces to the Plancherel mass identity") {
    LambdaGrid grid = LambdaGrid::uniform(-4.0, 4.0, 400);
    double eta = 0.05;
    AveragedMomentResult r = averaged_moment(t3, 0, eta, grid);
    // (1/pi) int Im G dlambda over the grid
    double direct = 0.0;
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
      GreenCache cache = zeta_fixed_point(t3, {grid.points[i], eta});
      green_diagonal(t3, cache);
      direct += grid.weights[i] * cache.g_diag[0].imag() / M_PI;
    }
    CHECK(r.value == doctest::Approx(direct).epsilon(1e-9));  // tail target 1e-10
  }
  SUBCASE("upshot bound: partial sums controlled by Im G / z") {
    cplx_t gamma(0.5, 0.02);
    GreenCache cache = zeta_fixed_point(t3, gamma);
    green_diagonal(t3, cache);
    auto sums = sphere_sums(t3, cache, 400);
    double g2 = std::norm(cache.g_diag[0]);
    double run = 0.0;
    double z = spectral_floor(cache);
    for (int m = 0; m <= 400; ++m) {
      run += sums[m];
      CHECK(run <= g2 + m * cache.g_diag[0].imag() / z + 1e-9);
    }
  }
  SUBCASE("eta stability near the limit") {
    LambdaGrid grid = LambdaGrid::uniform(-3.0, 3.0, 300);
    double a = averaged_moment(t3, 1, 0.02, grid).value;
    double b = averaged_moment(t3, 1, 0.01, grid).value;
    CHECK(std::abs(a - b) / std::abs(b) < 0.10);
  }
}

TEST_CASE("per-tree lower bound") {
  TreeModel t3 = TreeModel::regular_tree(3);
  SUBCASE("beta = 0 gives half the spectral mass") {
    LambdaGrid grid = LambdaGrid::uniform(-3.0, 3.0, 1500);
    LowerBoundResult r = pertree_lower_bound(t3, 0, grid, 1e-6);
    CHECK(r.value == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(std::abs(r.value - r.value_at_2eta) < 1e-3);
  }
  SUBCASE("positive whenever the grid meets a band and Thm 4.1 holds at finite eta") {
    LambdaGrid grid = LambdaGrid::uniform(-3.0, 3.0, 400);
    for (int beta : {1, 2}) {
      LowerBoundResult lower = pertree_lower_bound(t3, beta, grid, 1e-5);
      CHECK(lower.value > 0.0);
      AveragedMomentResult avg = averaged_moment(t3, beta, 0.01, grid);
      CHECK(avg.value >= lower.value * 0.98);
    }
  }
}

TEST_CASE("anderson sampling") {
  TreeModel t3 = TreeModel::regular_tree(3);
  cplx_t gamma(0.5, 0.01);

  SUBCASE("epsilon = 0 reproduces the periodic values for any seed") {
    GreenCache cache = zeta_fixed_point(t3, gamma);
    green_diagonal(t3, cache);
    AndersonConfig cfg{0.0, 8, 4, 99};
    for (std::uint64_t i = 0; i < 4; ++i) {
      AndersonSample s = anderson_sample(t3, cfg, gamma, i);
      CHECK(std::abs(s.zeta_root - cache.zeta[0]) < 1e-11);
      CHECK(std::abs(s.g_root - cache.g_diag[0]) < 1e-10);
      CHECK(s.herglotz_ok);
    }
  }
  SUBCASE("Herglotz signs and the identity residual per sample") {
    AndersonConfig cfg{0.2, 10, 64, 12345};
    for (std::uint64_t i = 0; i < 64; ++i) {
      AndersonSample s = anderson_sample(t3, cfg, gamma, i);
      CHECK(s.herglotz_ok);
      CHECK(s.zeta_root.imag() < 0.0);
      CHECK(s.g_root.imag() > 0.0);
      CHECK(s.redu_residual < 1e-10);
    }
  }
  SUBCASE("samples are deterministic in the seed") {
    AndersonConfig cfg{0.1, 10, 4, 2024};
    AndersonSample a = anderson_sample(t3, cfg, gamma, 3);
    AndersonSample b = anderson_sample(t3, cfg, gamma, 3);
    CHECK(a.zeta_root == b.zeta_root);
    CHECK(a.g_root == b.g_root);
    AndersonSample c = anderson_sample(t3, cfg, gamma, 4);
    CHECK(a.zeta_root != c.zeta_root);
  }
  SUBCASE("statistics: positive mean, finite inverse moments, zero-variance degeneracy") {
    AndersonConfig cfg{0.1, 8, 400, 777};
    AndersonStatistics stats = anderson_statistics(t3, cfg, 0.5, 0.01, {1.0, 2.0});
    CHECK(stats.herglotz_violations == 0);
    CHECK(stats.mean_im_g > 0.0);
    CHECK(stats.stderr_im_g < stats.mean_im_g);
    CHECK(stats.mean_inv_im_zeta[0] > 0.0);
    CHECK(stats.max_redu_residual < 1e-10);

    AndersonConfig frozen{0.0, 8, 200, 42};
    AndersonStatistics degenerate = anderson_statistics(t3, frozen, 0.5, 0.01, {1.0});
    // identical samples; only summation roundoff remains
    CHECK(degenerate.stderr_im_g < 1e-14);
    GreenCache cache = zeta_fixed_point(t3, gamma);
    green_diagonal(t3, cache);
    CHECK(degenerate.mean_im_g == doctest::Approx(cache.g_diag[0].imag()).epsilon(1e-10));
  }
  SUBCASE("K23 is rejected in Anderson mode") {
    TreeModel k23 = TreeModel::from_base_graph(oracles::complete_bipartite_23());
    AndersonConfig cfg{0.1, 5, 4, 1};
    CHECK_THROWS_AS(anderson_sample(k23, cfg, gamma, 0), Error);
  }
}

}  // TEST_SUITE
