#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cohortnet/cohorts.hpp"
#include "cohortnet/error.hpp"
#include "cohortnet/events.hpp"
#include "cohortnet/month.hpp"
#include "cohortnet/parallel.hpp"
#include "cohortnet/rng.hpp"

namespace cohortnet {

// Beta-distributed toxicity with the given mean and standard deviation.
struct ToxicityParams {
  double mean = 0.1;
  double spread = 0.05;
};

// A synthetic community. Each ban month opens a regime and brings a wave of newcomers;
// regime r uses p_cross[r] and the r-th toxicity parameters.
struct ScenarioConfig {
  std::string community = "synth";
  MonthKey start{2016, 1};
  int months = 36;
  std::vector<MonthKey> ban_months;
  std::size_t existing_pool = 600;
  std::size_t newcomer_wave_size = 900;
  std::vector<double> p_cross;
  std::vector<ToxicityParams> toxicity_existing;
  std::vector<ToxicityParams> toxicity_newcomer;
  double posts_per_month = 500.0;
  double comments_per_post = 6.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (months <= 0) throw DataError("scenario: months must be positive");
    if (existing_pool == 0) throw DataError("scenario: existing_pool must be positive");
    if (!(posts_per_month > 0.0) || !(comments_per_post >= 0.0)) throw DataError("scenario: rates must be positive");
    for (std::size_t i = 1; i < ban_months.size(); ++i) {
      if (!(ban_months[i - 1] < ban_months[i])) throw DataError("scenario: ban months must strictly increase");
    }
    if (!ban_months.empty() && ban_months.front() < start)
      throw DataError("scenario: ban months must not precede the start month");
    const std::size_t regimes = std::max<std::size_t>(ban_months.size(), 1);
    if (p_cross.size() != ban_months.size())
      throw DataError("scenario: p_cross needs one value per ban month");
    if (toxicity_existing.size() != regimes || toxicity_newcomer.size() != regimes)
      throw DataError("scenario: toxicity parameters need one entry per regime");
    for (double p : p_cross) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("scenario: p_cross must lie in [0, 1]");
      if (p > 0.0 && newcomer_wave_size == 0)
        throw DataError("scenario: p_cross > 0 is infeasible with a single cohort (newcomer_wave_size = 0)");
    }
    for (const auto* v : {&toxicity_existing, &toxicity_newcomer}) {
      for (const auto& t : *v) {
        if (!(t.mean > 0.0 && t.mean < 1.0)) throw DataError("scenario: toxicity mean must lie in (0, 1)");
        if (!(t.spread >= 0.0) || t.spread * t.spread >= t.mean * (1.0 - t.mean))
          throw DataError("scenario: toxicity spread too large for a Beta distribution");
      }
    }
  }

  [[nodiscard]] MonthKey month(int i) const { return start.plus(i); }

  // Regime index of a month, or nullopt before the first ban.
  [[nodiscard]] std::optional<std::size_t> regime_of(const MonthKey& m) const {
    std::optional<std::size_t> r;
    for (std::size_t i = 0; i < ban_months.size(); ++i) {
      if (ban_months[i] <= m) r = i;
    }
    return r;
  }

  [[nodiscard]] BanCalendar calendar() const {
    std::vector<BanEvent> entries;
    for (std::size_t i = 0; i < ban_months.size(); ++i)
      entries.push_back({"wave" + std::to_string(i + 1), first_day(ban_months[i])});
    return BanCalendar(std::move(entries));
  }
};

struct MonthTruth {
  MonthKey month;
  std::optional<std::size_t> regime;
  std::size_t existing = 0;
  std::size_t newcomers = 0;
  std::optional<double> expected_ei;
  double expected_toxicity = 0.0;
};

struct GroundTruth {
  std::optional<MonthKey> planted_break;  // second ban month: first regime change visible in cohort metrics
  std::vector<double> expected_ei;        // per regime, 2 p_cross - 1
  std::vector<double> expected_toxicity;  // per regime, population-weighted user mean
  std::vector<MonthTruth> roster;
  BanCalendar calendar;

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["planted_break"] = planted_break ? nlohmann::ordered_json(planted_break->str()) : nlohmann::ordered_json();
    j["expected_ei"] = expected_ei;
    j["expected_toxicity"] = expected_toxicity;
    j["ban_calendar"] = nlohmann::ordered_json::array();
    for (const auto& b : calendar.entries()) j["ban_calendar"].push_back({{"label", b.label}, {"date", format_date(b.day)}});
    j["roster"] = nlohmann::ordered_json::array();
    for (const auto& m : roster) {
      nlohmann::ordered_json row;
      row["month"] = m.month.str();
      row["regime"] = m.regime ? nlohmann::ordered_json(*m.regime) : nlohmann::ordered_json();
      row["existing"] = m.existing;
      row["newcomers"] = m.newcomers;
      row["expected_ei"] = m.expected_ei ? nlohmann::ordered_json(*m.expected_ei) : nlohmann::ordered_json();
      row["expected_toxicity"] = m.expected_toxicity;
      j["roster"].push_back(std::move(row));
    }
    return j;
  }

  [[nodiscard]] static GroundTruth from_json(const nlohmann::json& j) {
    GroundTruth g;
    if (j.contains("planted_break") && j["planted_break"].is_string())
      g.planted_break = parse_month(j["planted_break"].get<std::string>());
    g.expected_ei = j.value("expected_ei", std::vector<double>{});
    g.expected_toxicity = j.value("expected_toxicity", std::vector<double>{});
    std::vector<BanEvent> bans;
    for (const auto& b : j.value("ban_calendar", nlohmann::json::array())) {
      auto day = parse_date(b.at("date").get<std::string>());
      if (!day) throw DataError("ground truth: bad ban date");
      bans.push_back({b.at("label").get<std::string>(), *day});
    }
    g.calendar = BanCalendar(std::move(bans));
    return g;
  }
};

struct SynthCorpus {
  std::vector<InteractionEvent> events;
  GroundTruth truth;
};

namespace detail {

inline double sample_beta(Rng& rng, const ToxicityParams& t) {
  if (t.spread == 0.0) return t.mean;
  const double kappa = t.mean * (1.0 - t.mean) / (t.spread * t.spread) - 1.0;
  std::gamma_distribution<double> ga(t.mean * kappa, 1.0);
  std::gamma_distribution<double> gb((1.0 - t.mean) * kappa, 1.0);
  const double a = ga(rng);
  const double b = gb(rng);
  return a + b > 0.0 ? a / (a + b) : t.mean;
}

inline std::string user_name(char prefix, std::size_t wave, std::size_t i) {
  char buf[32];
  if (prefix == 'e') {
    std::snprintf(buf, sizeof buf, "e%06zu", i);
  } else {
    std::snprintf(buf, sizeof buf, "n%zu_%06zu", wave, i);
  }
  return buf;
}

struct Member {
  std::string id;
  bool newcomer = false;
};

}  // namespace detail

// Generates the corpus month by month from seed substreams, so the output does not depend
// on `workers`. Existing-pool users make one seed post in the month before `start`.
[[nodiscard]] inline SynthCorpus generate(const ScenarioConfig& cfg, std::size_t workers = 1) {
  cfg.validate();
  SynthCorpus out;
  out.truth.calendar = cfg.calendar();
  if (cfg.ban_months.size() >= 2) out.truth.planted_break = cfg.ban_months[1];

  const std::size_t regimes = std::max<std::size_t>(cfg.ban_months.size(), 1);
  for (std::size_t r = 0; r < regimes; ++r) {
    if (r < cfg.p_cross.size()) out.truth.expected_ei.push_back(2.0 * cfg.p_cross[r] - 1.0);
    const double n_e = static_cast<double>(cfg.existing_pool + r * cfg.newcomer_wave_size);
    const double n_n = cfg.ban_months.empty() ? 0.0 : static_cast<double>(cfg.newcomer_wave_size);
    out.truth.expected_toxicity.push_back((n_e * cfg.toxicity_existing[r].mean + n_n * cfg.toxicity_newcomer[r].mean) /
                                          (n_e + n_n));
  }

  // Seed posts establish the existing pool before the first ban.
  {
    Rng rng = substream(cfg.seed, 0);
    const MonthKey pre = cfg.start.plus(-1);
    std::uniform_int_distribution<Timestamp> when(month_start(pre), month_start(cfg.start) - 1);
    for (std::size_t i = 0; i < cfg.existing_pool; ++i) {
      InteractionEvent ev;
      ev.event_id = "s" + std::to_string(i);
      ev.user_id = detail::user_name('e', 0, i);
      ev.community_id = cfg.community;
      ev.kind = EventKind::post;
      ev.timestamp = when(rng);
      ev.toxicity = detail::sample_beta(rng, cfg.toxicity_existing.front());
      out.events.push_back(std::move(ev));
    }
  }

  std::vector<std::vector<InteractionEvent>> per_month(static_cast<std::size_t>(cfg.months));
  out.truth.roster.resize(per_month.size());
  parallel_for(per_month.size(), workers, [&](std::size_t mi) {
    const MonthKey m = cfg.month(static_cast<int>(mi));
    const auto regime = cfg.regime_of(m);
    const std::size_t r = regime.value_or(0);
    const std::size_t waves_before = regime ? *regime : 0;

    std::vector<detail::Member> members;
    for (std::size_t i = 0; i < cfg.existing_pool; ++i) members.push_back({detail::user_name('e', 0, i), false});
    for (std::size_t w = 1; w <= waves_before; ++w) {
      for (std::size_t i = 0; i < cfg.newcomer_wave_size; ++i) members.push_back({detail::user_name('n', w, i), false});
    }
    const std::size_t n_existing = members.size();
    if (regime) {
      for (std::size_t i = 0; i < cfg.newcomer_wave_size; ++i)
        members.push_back({detail::user_name('n', *regime + 1, i), true});
    }
    const double p_cross = regime ? cfg.p_cross[*regime] : 0.0;

    MonthTruth& truth = out.truth.roster[mi];
    truth.month = m;
    truth.regime = regime;
    truth.existing = n_existing;
    truth.newcomers = members.size() - n_existing;
    if (regime) truth.expected_ei = 2.0 * p_cross - 1.0;
    truth.expected_toxicity = out.truth.expected_toxicity[r];

    Rng rng = substream(cfg.seed, mi + 1);
    // Newcomers of a ban month arrive on or after the ban date (first of the month).
    const Timestamp t0 = month_start(m);
    const Timestamp t1 = month_start(m.plus(1)) - 1;
    std::uniform_int_distribution<std::size_t> pick_member(0, members.size() - 1);
    std::uniform_int_distribution<Timestamp> when(t0, t1);
    auto toxicity = [&](const detail::Member& u) {
      return detail::sample_beta(rng, u.newcomer ? cfg.toxicity_newcomer[r] : cfg.toxicity_existing[r]);
    };

    struct Post {
      std::size_t author;
      Timestamp time;
      std::string id;
    };
    std::vector<Post> posts;
    std::vector<std::size_t> pool[2];  // post indices by author cohort: 0 existing, 1 newcomer
    auto& events = per_month[mi];
    const std::string tag = std::to_string(m.year * 100 + m.month);

    const auto n_posts = std::poisson_distribution<std::size_t>(cfg.posts_per_month)(rng);
    for (std::size_t k = 0; k < n_posts; ++k) {
      const std::size_t a = pick_member(rng);
      Post p{a, when(rng), "p" + tag + "_" + std::to_string(k)};
      pool[members[a].newcomer ? 1 : 0].push_back(posts.size());
      InteractionEvent ev;
      ev.event_id = p.id;
      ev.user_id = members[a].id;
      ev.community_id = cfg.community;
      ev.kind = EventKind::post;
      ev.timestamp = p.time;
      ev.toxicity = toxicity(members[a]);
      events.push_back(std::move(ev));
      posts.push_back(std::move(p));
    }
    if (posts.empty()) return;

    // Comment-first sampling: the commenter is uniform over the month's members, then a
    // Bernoulli(p_cross) draw picks a post from the other cohort or from its own.
    std::bernoulli_distribution cross(p_cross);
    const auto n_comments =
        std::poisson_distribution<std::size_t>(cfg.posts_per_month * cfg.comments_per_post)(rng);
    for (std::size_t k = 0; k < n_comments; ++k) {
      const std::size_t c = pick_member(rng);
      const int own = members[c].newcomer ? 1 : 0;
      const int target = cross(rng) ? 1 - own : own;
      std::optional<std::size_t> chosen;
      for (int side : {target, 1 - target}) {
        const auto& candidates = pool[side];
        if (candidates.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick_post(0, candidates.size() - 1);
        for (int attempt = 0; attempt < 16 && !chosen; ++attempt) {
          const std::size_t pi = candidates[pick_post(rng)];
          if (posts[pi].author != c) chosen = pi;
        }
        if (chosen) break;
      }
      if (!chosen) continue;
      const Post& parent = posts[*chosen];
      std::uniform_int_distribution<Timestamp> after(parent.time, t1);
      InteractionEvent ev;
      ev.event_id = "c" + tag + "_" + std::to_string(k);
      ev.user_id = members[c].id;
      ev.community_id = cfg.community;
      ev.kind = EventKind::comment;
      ev.parent_post_id = parent.id;
      ev.timestamp = after(rng);
      ev.toxicity = toxicity(members[c]);
      events.push_back(std::move(ev));
    }
  });

  for (auto& month_events : per_month) {
    out.events.insert(out.events.end(), std::make_move_iterator(month_events.begin()),
                      std::make_move_iterator(month_events.end()));
  }
  return out;
}

}  // namespace cohortnet
