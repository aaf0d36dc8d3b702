#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include <json.hpp>

#include "cohortnet/breakpoints.hpp"

using namespace cohortnet;
using Catch::Approx;

namespace {

const MonthKey kStart{2016, 1};

MetricSeries series_of(const std::vector<double>& y, MonthKey start = kStart) {
  MetricSeries s{"m", "c", {}};
  for (std::size_t i = 0; i < y.size(); ++i) s.points.push_back({start.plus(static_cast<std::int64_t>(i)), y[i]});
  return s;
}

// Month t (1-based) is flat at 0 up to month 12, then rises by 0.02 per month from month 13.
MetricSeries planted_kink() {
  std::vector<double> y;
  for (int t = 1; t <= 24; ++t) y.push_back(t <= 12 ? 0.0 : 0.02 * (t - 13));
  return series_of(y);
}

std::vector<Point> pts(const std::vector<double>& y) {
  std::vector<Point> p;
  for (std::size_t i = 0; i < y.size(); ++i) p.push_back({static_cast<double>(i), y[i]});
  return p;
}

}  // namespace

TEST_CASE("line fits") {
  const auto exact = fit_line(pts({1, 3, 5, 7, 9}));
  CHECK(exact.slope == Approx(2.0));
  CHECK(exact.intercept == Approx(1.0));
  CHECK(exact.sse == Approx(0.0).margin(1e-20));
  const auto flat = fit_line(pts({4, 4, 4}));
  CHECK(flat.slope == 0.0);
  CHECK(flat.sse == 0.0);
  const auto tent = fit_line(pts({0, 1, 0}));
  CHECK(tent.slope == Approx(0.0).margin(1e-15));
  CHECK(tent.intercept == Approx(1.0 / 3.0));
  CHECK(tent.sse == Approx(2.0 / 3.0));
  CHECK_THROWS_AS(fit_line(pts({1})), InsufficientData);
  const std::vector<Point> same_x{{1, 0}, {1, 1}};
  CHECK_THROWS_AS(fit_line(same_x), InsufficientData);
}

TEST_CASE("segmented fit at a given break") {
  const auto s = planted_kink();
  const auto f = fit_segmented(s, {2017, 1});
  CHECK(f.sse == Approx(0.0).margin(1e-20));
  CHECK(f.right.slope == Approx(0.02));
  CHECK_NOTHROW(fit_segmented(s, kStart.plus(6)));
  CHECK_NOTHROW(fit_segmented(s, kStart.plus(18)));
  CHECK_THROWS_WITH(fit_segmented(s, kStart.plus(5)), Catch::Matchers::ContainsSubstring("segment too short"));
  CHECK_THROWS_WITH(fit_segmented(s, kStart.plus(19)), Catch::Matchers::ContainsSubstring("segment too short"));

  std::vector<double> line;
  for (int i = 0; i < 20; ++i) line.push_back(0.5 - 0.1 * i);
  for (int k = 6; k <= 14; ++k) CHECK(fit_segmented(series_of(line), kStart.plus(k)).sse == Approx(0.0).margin(1e-20));
}

TEST_CASE("planted kink is recovered exactly") {
  const auto r = find_breakpoint(planted_kink());
  CHECK(r.tau == kStart.plus(12));
  CHECK(r.sse_ratio == Approx(0.0).margin(1e-12));
  CHECK_FALSE(r.degenerate);
  CHECK(r.sse_single > 0.0);
}

TEST_CASE("noiseless line is flagged degenerate") {
  std::vector<double> y;
  for (int i = 0; i < 23; ++i) y.push_back(1.0 + 0.25 * i);
  const auto r = find_breakpoint(series_of(y));
  CHECK(r.degenerate);
  CHECK(r.sse_ratio == 0.0);
  CHECK(r.tau == kStart.plus(6));
}

TEST_CASE("ratio guard") {
  CHECK(detail::sse_ratio(0.0, 0.0) == 0.0);
  CHECK(detail::sse_ratio(1e-3, 1e-13) == 1.0);
  CHECK(detail::sse_ratio(1.0, 4.0) == 0.25);
}

TEST_CASE("short series") {
  std::vector<double> y(11, 1.0);
  CHECK_THROWS_AS(find_breakpoint(series_of(y)), InsufficientData);
  y.push_back(2.0);
  CHECK_NOTHROW(find_breakpoint(series_of(y)));
  auto s = series_of(std::vector<double>(14, 1.0));
  s.points[3].value.reset();
  s.points[9].value.reset();
  s.points[10].value.reset();
  CHECK_THROWS_AS(find_breakpoint(s), InsufficientData);
}

TEST_CASE("nulls keep their calendar positions") {
  auto s = planted_kink();
  s.points[4].value.reset();
  s.points[17].value.reset();
  const auto r = find_breakpoint(s);
  CHECK(r.tau == kStart.plus(12));
  CHECK(r.sse_ratio == Approx(0.0).margin(1e-12));
}

TEST_CASE("agreement with the independent numpy oracle") {
  std::ifstream in(COHORTNET_TEST_DATA "/breakpoint_oracle.json");
  REQUIRE(in);
  const auto j = nlohmann::json::parse(in);
  const auto min_seg = j.at("min_seg").get<std::size_t>();
  std::size_t n = 0;
  for (const auto& c : j.at("cases")) {
    const auto s = series_of(c.at("y").get<std::vector<double>>());
    const auto r = find_breakpoint(s, {min_seg, FitVariant::independent});
    REQUIRE(months_between(kStart, r.tau) == c.at("split").get<std::int64_t>());
    REQUIRE(r.sse_segmented == Approx(c.at("sse_segmented").get<double>()).epsilon(1e-9));
    REQUIRE(r.sse_single == Approx(c.at("sse_single").get<double>()).epsilon(1e-9));
    REQUIRE(r.sse_ratio <= 1.0 + 1e-12);
    ++n;
  }
  CHECK(n == 40);
}

TEST_CASE("segmented SSE never exceeds the better restricted line") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> y;
    for (int i = 0; i < 12 + trial % 40; ++i) y.push_back(0.1 * i + noise(rng) + (i > 20 ? 3.0 : 0.0));
    const auto s = series_of(y);
    const auto r = find_breakpoint(s);
    REQUIRE(r.sse_ratio <= 1.0 + 1e-12);
    const auto p = series_points(s);
    for (std::size_t k = 6; k + 6 <= p.size(); ++k) {
      const auto f = detail::fit_split(p, k, FitVariant::independent);
      REQUIRE(r.sse_segmented <= f.sse + 1e-12 * (1.0 + r.sse_single));
    }
  }
}

TEST_CASE("continuous hinge variant") {
  std::vector<double> y;
  for (int i = 0; i < 24; ++i) y.push_back(i < 12 ? 1.0 : 1.0 + 0.5 * (i - 11));
  const auto s = series_of(y);
  const auto r = find_breakpoint(s, {6, FitVariant::continuous});
  CHECK(r.tau == kStart.plus(12));
  CHECK(r.sse_segmented == Approx(0.0).margin(1e-18));
  CHECK(r.fit.left.at(11.0) == Approx(r.fit.right.at(11.0)));
  // The continuous model is nested in the independent one.
  const auto ind = find_breakpoint(s, {6, FitVariant::independent});
  CHECK(ind.sse_segmented <= r.sse_segmented + 1e-12);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z;
    for (int i = 0; i < 30; ++i) z.push_back(noise(rng) + (i > 14 ? 0.2 * (i - 14) : 0.0));
    const auto p = series_points(series_of(z));
    for (std::size_t k = 6; k + 6 <= p.size(); ++k) {
      REQUIRE(detail::fit_split(p, k, FitVariant::independent).sse <=
              detail::fit_split(p, k, FitVariant::continuous).sse + 1e-9);
    }
  }
}

TEST_CASE("bootstrap on a noiseless kink collapses") {
  const auto s = planted_kink();
  const auto r = bootstrap(s, find_breakpoint(s), {}, {200, 42, 3, 1});
  CHECK(r.ci_low == r.tau);
  CHECK(r.ci_high == r.tau);
  CHECK(r.stability == 1.0);
  CHECK(r.n_bootstrap == 200);
}

TEST_CASE("bootstrap on strong and weak breaks") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> strong, weak;
  for (int i = 0; i < 48; ++i) {
    strong.push_back((i < 24 ? 0.0 : 1.0) + noise(rng));
    weak.push_back(noise(rng) * 10.0);
  }
  const auto rs = bootstrap(series_of(strong), find_breakpoint(series_of(strong)), {}, {200, 5, 3, 1});
  CHECK(rs.tau == kStart.plus(24));
  CHECK(rs.stability == 1.0);
  CHECK(rs.ci_low == rs.ci_high);
  CHECK(rs.sse_ratio < 0.05);

  const auto rw = bootstrap(series_of(weak), find_breakpoint(series_of(weak)), {}, {200, 5, 3, 1});
  CHECK(*rw.stability < 0.9);
  CHECK(months_between(*rw.ci_low, *rw.ci_high) > 6);
}

TEST_CASE("bootstrap is reproducible across runs and worker counts") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) y.push_back(0.01 * i + (i >= 22 ? 0.15 : 0.0) + noise(rng));
  const auto s = series_of(y);
  const auto base = find_breakpoint(s);
  const auto a = bootstrap(s, base, {}, {200, 99, 3, 1});
  const auto b = bootstrap(s, base, {}, {200, 99, 3, 1});
  const auto c = bootstrap(s, base, {}, {200, 99, 3, 4});
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.stability == b.stability);
  CHECK(a.ci_low == c.ci_low);
  CHECK(a.ci_high == c.ci_high);
  CHECK(a.stability == c.stability);
  const auto d = bootstrap(s, base, {}, {200, 100, 3, 1});
  CHECK(d.n_bootstrap == 200);
}

TEST_CASE("near-event window") {
  CHECK(near_event({2018, 10}, {2018, 9}));
  CHECK_FALSE(near_event({2019, 1}, {2018, 9}));
  CHECK(near_event({2018, 9}, {2018, 9}));
  CHECK(near_event({2018, 6}, {2018, 9}));
  CHECK(near_event({2019, 1}, {2018, 9}, 4));
}
