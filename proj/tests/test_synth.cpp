#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "cohortnet/graphs.hpp"
#include "cohortnet/netmetrics.hpp"
#include "cohortnet/series.hpp"
#include "cohortnet/synth.hpp"

using namespace cohortnet;

namespace {

ScenarioConfig small(std::vector<double> p_cross) {
  ScenarioConfig c;
  c.months = 8;
  c.ban_months = {{2016, 1}, {2016, 5}};
  c.existing_pool = 300;
  c.newcomer_wave_size = 400;
  c.p_cross = std::move(p_cross);
  c.toxicity_existing = {{0.10, 0.05}, {0.15, 0.05}};
  c.toxicity_newcomer = {{0.30, 0.10}, {0.20, 0.05}};
  c.posts_per_month = 400;
  c.comments_per_post = 6;
  c.seed = 123;
  return c;
}

std::string dump(const std::vector<InteractionEvent>& ev) {
  std::ostringstream os;
  write_jsonl(os, ev);
  return os.str();
}

struct Measured {
  std::optional<double> ei;
  std::size_t edges = 0;
};

std::vector<Measured> measure_ei(const SynthCorpus& corpus, const ScenarioConfig& cfg) {
  const auto posts = build_post_index(corpus.events);
  const auto first = build_first_seen(corpus.events);
  const auto cal = cfg.calendar();
  std::vector<Measured> out;
  for (int i = 0; i < cfg.months; ++i) {
    const auto g = build_monthly_graph(corpus.events, cfg.community, cfg.month(i), posts);
    std::vector<std::optional<CohortLabel>> labels;
    for (const auto& u : g.nodes) labels.push_back(retrospective_label(first.at(u, cfg.community), g.month, cal));
    out.push_back({ei_index({g, labels}), g.edges.size()});
  }
  return out;
}

}  // namespace

TEST_CASE("scenario validation") {
  CHECK_NOTHROW(small({0.2, 0.5}).validate());
  auto c = small({0.2, 0.5});
  c.newcomer_wave_size = 0;
  CHECK_THROWS_AS(c.validate(), DataError);
  c = small({0.2});
  CHECK_THROWS_AS(c.validate(), DataError);
  c = small({0.2, 1.5});
  CHECK_THROWS_AS(c.validate(), DataError);
  c = small({0.2, 0.5});
  c.toxicity_newcomer[0] = {0.5, 0.6};
  CHECK_THROWS_AS(c.validate(), DataError);
  c = small({0.2, 0.5});
  c.ban_months = {{2016, 5}, {2016, 1}};
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("ground truth") {
  const auto cfg = small({0.17, 0.525});
  const auto corpus = generate(cfg);
  CHECK(corpus.truth.planted_break == MonthKey{2016, 5});
  REQUIRE(corpus.truth.expected_ei.size() == 2);
  CHECK(corpus.truth.expected_ei[0] == Catch::Approx(-0.66));
  CHECK(corpus.truth.expected_ei[1] == Catch::Approx(0.05));
  CHECK(corpus.truth.roster.size() == 8);
  CHECK(corpus.truth.roster[4].existing == 700);
  CHECK(corpus.truth.roster[4].newcomers == 400);
  const auto j = corpus.truth.to_json();
  const auto back = GroundTruth::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.planted_break == corpus.truth.planted_break);
  CHECK(back.expected_ei == corpus.truth.expected_ei);
  CHECK(back.calendar.entries().size() == 2);
}

TEST_CASE("generation is deterministic and independent of the worker count") {
  const auto cfg = small({0.3, 0.6});
  const auto a = dump(generate(cfg, 1).events);
  CHECK(a == dump(generate(cfg, 1).events));
  CHECK(a == dump(generate(cfg, 4).events));
  auto other = cfg;
  other.seed = 124;
  CHECK(a != dump(generate(other).events));
}

TEST_CASE("generated events satisfy the ingestion schema") {
  const auto cfg = small({0.3, 0.6});
  const auto corpus = generate(cfg);
  const auto text = dump(corpus.events);
  std::istringstream in(text);
  const auto loaded = parse_events(in, InputFormat::jsonl, true);
  CHECK(loaded.events == corpus.events);

  const auto posts = build_post_index(corpus.events);
  for (const auto& ev : corpus.events) {
    REQUIRE(ev.toxicity.has_value());
    REQUIRE(*ev.toxicity >= 0.0);
    REQUIRE(*ev.toxicity <= 1.0);
    if (ev.kind == EventKind::comment) {
      const auto& parent = posts.at(*ev.parent_post_id);
      REQUIRE(parent.user_id != ev.user_id);
      REQUIRE(parent.timestamp <= ev.timestamp);
      REQUIRE(month_of(parent.timestamp) == month_of(ev.timestamp));
    }
  }
}

TEST_CASE("measured E-I converges to 2 p_cross - 1") {
  for (const auto& pc : {std::vector<double>{0.5, 0.5}, std::vector<double>{0.17, 0.525}}) {
    const auto cfg = small(pc);
    const auto corpus = generate(cfg);
    const auto measured = measure_ei(corpus, cfg);
    for (int i = 0; i < cfg.months; ++i) {
      const double expected = 2.0 * pc[i < 4 ? 0 : 1] - 1.0;
      const auto& m = measured[static_cast<std::size_t>(i)];
      REQUIRE(m.ei.has_value());
      // Three binomial standard errors of the cross-edge share, mapped to the E-I scale.
      const double p = (expected + 1.0) / 2.0;
      const double tol = 2.0 * 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(m.edges));
      INFO("month " << i << " edges " << m.edges << " ei " << *m.ei);
      REQUIRE(std::fabs(*m.ei - expected) <= tol);
    }
  }
}

TEST_CASE("measured toxicity tracks the configured user means") {
  auto cfg = small({0.3, 0.6});
  cfg.months = 6;
  const auto corpus = generate(cfg);
  for (int i = 0; i < cfg.months; ++i) {
    const MonthKey m = cfg.month(i);
    const auto value = community_month_toxicity(user_month_toxicity(corpus.events, cfg.community, m));
    const auto& truth = corpus.truth.roster[static_cast<std::size_t>(i)];
    REQUIRE(value.has_value());
    // Users with no events that month drop out, so the population weights drift slightly.
    REQUIRE(std::fabs(*value - truth.expected_toxicity) <= 0.01);
  }
}

TEST_CASE("no bans leaves every cohort metric undefined") {
  ScenarioConfig cfg;
  cfg.months = 3;
  cfg.existing_pool = 100;
  cfg.newcomer_wave_size = 0;
  cfg.toxicity_existing = {{0.1, 0.02}};
  cfg.toxicity_newcomer = {{0.1, 0.02}};
  cfg.posts_per_month = 100;
  const auto corpus = generate(cfg);
  const auto measured = measure_ei(corpus, cfg);
  for (const auto& m : measured) {
    CHECK(m.edges > 0);
    CHECK_FALSE(m.ei.has_value());
  }
  CHECK_FALSE(corpus.truth.planted_break.has_value());
}
