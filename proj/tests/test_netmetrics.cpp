#include <catch_amalgamated.hpp>

#include <random>

#include "cohortnet/netmetrics.hpp"
#include "oracles.hpp"

using namespace cohortnet;
using Catch::Approx;

namespace {

constexpr auto N = CohortLabel::newcomer;
constexpr auto X = CohortLabel::existing;

MonthlyGraph make_graph(std::size_t n, std::vector<Edge> edges) {
  MonthlyGraph g;
  for (std::size_t i = 0; i < n; ++i) g.nodes.push_back("u" + std::to_string(100 + i));
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  g.edges = std::move(edges);
  return g;
}

MonthlyGraph star(std::size_t leaves) {
  std::vector<Edge> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return make_graph(leaves + 1, e);
}

MonthlyGraph cycle(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) e.emplace_back(i, static_cast<NodeId>((i + 1) % n));
  return make_graph(n, e);
}

std::optional<double> gini(std::vector<double> x) { return degree_gini(std::span<const double>(x)); }

}  // namespace

TEST_CASE("degree sequence") {
  CHECK(degree_sequence(star(4)) == std::vector<std::size_t>{4, 1, 1, 1, 1});
  CHECK(degree_sequence(MonthlyGraph{}).empty());
  CHECK(degree_sequence(cycle(3)) == std::vector<std::size_t>{2, 2, 2});
  CHECK(degree_sequence(make_graph(3, {{0, 1}})) == std::vector<std::size_t>{1, 1, 0});
}

TEST_CASE("degree gini") {
  CHECK(*gini({3, 3, 3, 3}) == 0.0);
  CHECK(*gini({0, 0, 0, 10}) == Approx(0.75).margin(1e-15));
  CHECK(*oracle::gini({0, 0, 0, 10}) == 0.75);
  CHECK_FALSE(gini({}));
  CHECK_FALSE(gini({0, 0}));
  CHECK_THROWS(gini({1, -1}));
}

TEST_CASE("degree assortativity") {
  CHECK(*degree_assortativity(star(4)) == Approx(-1.0).margin(1e-12));
  CHECK_FALSE(degree_assortativity(cycle(5)));
  CHECK_FALSE(degree_assortativity(make_graph(4, {{0, 1}, {2, 3}})));
  CHECK_FALSE(degree_assortativity(make_graph(2, {{0, 1}})));
  // Path of four nodes: degrees 1-2-2-1, perfectly disassortative ends.
  const auto path = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  CHECK(*degree_assortativity(path) == Approx(*oracle::assortativity(path)).margin(1e-12));
}

TEST_CASE("E-I index") {
  const auto g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  CHECK(*ei_index({g, {N, N, N, N, N}}) == -1.0);
  CHECK(*ei_index({g, {N, X, X, N, N}}) == 0.0);
  CHECK(*ei_index({g, {N, X, N, X, X}}) == 0.5);
  CHECK_FALSE(ei_index({g, {N, std::nullopt, N, std::nullopt, N}}));
  CHECK_FALSE(ei_index({MonthlyGraph{}, {}}));
}

TEST_CASE("newcomer hub rate") {
  SECTION("threshold from nearest rank") {
    const std::vector<std::size_t> deg{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 10, 5, 1};
    std::vector<std::optional<CohortLabel>> labels(10, X);
    labels.insert(labels.end(), {N, N, N});
    CHECK(*newcomer_hub_rate(deg, labels, 0.9) == Approx(1.0 / 3.0).margin(1e-15));
  }
  SECTION("isolated newcomers") {
    const auto g = make_graph(5, {{0, 1}, {1, 2}});
    CHECK(*newcomer_hub_rate({g, {X, X, X, N, N}}) == 0.0);
  }
  SECTION("no existing users") {
    const auto g = make_graph(3, {{0, 1}});
    CHECK_FALSE(newcomer_hub_rate({g, {N, N, N}}));
    CHECK_FALSE(newcomer_hub_rate({g, {X, X, X}}));
  }
  CHECK_THROWS(newcomer_hub_rate({star(2), {X, N, N}}, 1.0));
}

TEST_CASE("degree share ratio") {
  const std::vector<std::size_t> deg{1, 2, 4, 5};
  const std::vector<std::optional<CohortLabel>> labels{N, N, X, X};
  CHECK(*degree_share_ratio(deg, labels) == 0.5);
  CHECK(*degree_share_ratio({cycle(6), {N, X, N, X, X, X}}) == Approx(1.0).margin(1e-15));
  CHECK_FALSE(degree_share_ratio({cycle(4), {X, X, X, X}}));
  CHECK_FALSE(degree_share_ratio({make_graph(3, {}), {N, X, X}}));
}

TEST_CASE("existing gini") {
  CHECK(*existing_gini({cycle(4), {X, X, X, X}}) == 0.0);
  // Existing users 1,2,3 isolated; existing user 0 is the hub of ten newcomer leaves.
  std::vector<Edge> e;
  for (NodeId i = 4; i < 14; ++i) e.emplace_back(0, i);
  const auto g = make_graph(14, e);
  std::vector<std::optional<CohortLabel>> labels{X, X, X, X};
  labels.resize(14, N);
  CHECK(*existing_gini({g, labels}) == Approx(0.75).margin(1e-15));
  CHECK_FALSE(existing_gini({g, std::vector<std::optional<CohortLabel>>(14, N)}));
}

TEST_CASE("metrics agree with brute-force oracles on random graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto cell = oracle::random_cell(rng);
    const CohortedGraph cg{cell.graph, cell.labels};
    const auto deg = oracle::degrees(cell.graph);
    const auto ldeg = oracle::labeled_degrees(cell.graph, cell.labels);

    auto same = [](std::optional<double> a, std::optional<double> b) {
      REQUIRE(a.has_value() == b.has_value());
      if (a) REQUIRE(std::fabs(*a - *b) <= 1e-9);
    };
    same(degree_gini(degree_sequence(cell.graph)), oracle::gini(deg));
    same(degree_assortativity(cell.graph), oracle::assortativity(cell.graph));
    same(ei_index(cg), oracle::ei(cell.graph, cell.labels));
    for (double p : {0.8, 0.9, 0.95}) same(newcomer_hub_rate(cg, p), oracle::hub_rate(ldeg, cell.labels, p));
    same(degree_share_ratio(cg), oracle::share_ratio(ldeg, cell.labels));
  }
}

TEST_CASE("metric properties on random graphs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto cell = oracle::random_cell(rng);
    const CohortedGraph cg{cell.graph, cell.labels};

    // E-I is symmetric under swapping cohort labels.
    auto swapped = cell.labels;
    for (auto& l : swapped) {
      if (l) l = *l == N ? X : N;
    }
    REQUIRE(ei_index(cg) == ei_index({cell.graph, swapped}));

    // Hub rate is non-increasing in the percentile.
    const auto r95 = newcomer_hub_rate(cg, 0.95), r90 = newcomer_hub_rate(cg, 0.90), r80 = newcomer_hub_rate(cg, 0.80);
    if (r90) {
      REQUIRE(*r95 <= *r90);
      REQUIRE(*r90 <= *r80);
    }

    // Gini is scale invariant.
    auto deg = oracle::degrees(cell.graph);
    const auto g1 = degree_gini(std::span<const double>(deg));
    for (auto& d : deg) d *= 3.7;
    const auto g2 = degree_gini(std::span<const double>(deg));
    REQUIRE(g1.has_value() == g2.has_value());
    if (g1) REQUIRE(std::fabs(*g1 - *g2) <= 1e-12);

    // An extra isolated newcomer never raises the degree-share ratio.
    const auto before = degree_share_ratio(cg);
    cell.graph.nodes.push_back("zz_isolated");
    cell.labels.push_back(N);
    const auto after = degree_share_ratio({cell.graph, cell.labels});
    if (before && after) REQUIRE(*after <= *before + 1e-12);
  }
}
