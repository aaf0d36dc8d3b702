#pragma once

// Brute-force reference implementations used only by the tests. They follow the textbook
// definitions directly and share no code with the library's metric kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cohortnet/cohorts.hpp"
#include "cohortnet/graphs.hpp"

namespace oracle {

using cohortnet::CohortLabel;
using Labels = std::vector<std::optional<CohortLabel>>;

// Double-sum Gini: sum_i sum_j |x_i - x_j| / (2 n^2 mean).
inline std::optional<double> gini(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) return std::nullopt;
  double total = 0.0;
  for (double v : x) total += v;
  if (total == 0.0) return std::nullopt;
  double diff = 0.0;
  for (double a : x)
    for (double b : x) diff += std::fabs(a - b);
  const double mean = total / static_cast<double>(n);
  return diff / (2.0 * static_cast<double>(n) * static_cast<double>(n) * mean);
}

// Neighbour sets rebuilt from the edge list.
inline std::vector<std::set<std::size_t>> adjacency(const cohortnet::MonthlyGraph& g) {
  std::vector<std::set<std::size_t>> adj(g.nodes.size());
  for (const auto& [a, b] : g.edges) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  return adj;
}

inline std::vector<double> degrees(const cohortnet::MonthlyGraph& g) {
  std::vector<double> d;
  for (const auto& s : adjacency(g)) d.push_back(static_cast<double>(s.size()));
  return d;
}

// Pearson correlation over the explicit list of ordered endpoint pairs.
inline std::optional<double> assortativity(const cohortnet::MonthlyGraph& g) {
  if (g.edges.size() < 2) return std::nullopt;
  const auto deg = degrees(g);
  std::vector<std::pair<double, double>> pairs;
  for (const auto& [a, b] : g.edges) {
    pairs.emplace_back(deg[a], deg[b]);
    pairs.emplace_back(deg[b], deg[a]);
  }
  const double n = static_cast<double>(pairs.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : pairs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& [x, y] : pairs) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
  }
  bool constant = true;
  for (const auto& [x, y] : pairs) constant = constant && x == pairs.front().first;
  if (constant) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

inline std::optional<double> ei(const cohortnet::MonthlyGraph& g, const Labels& labels) {
  double e = 0, i = 0;
  for (const auto& [a, b] : g.edges) {
    if (!labels[a] || !labels[b]) continue;
    if (labels[a] == labels[b]) {
      i += 1;
    } else {
      e += 1;
    }
  }
  if (e + i == 0) return std::nullopt;
  return (e - i) / (e + i);
}

// Degrees counting only neighbours that carry a label.
inline std::vector<double> labeled_degrees(const cohortnet::MonthlyGraph& g, const Labels& labels) {
  const auto adj = adjacency(g);
  std::vector<double> d(g.nodes.size(), 0.0);
  for (std::size_t v = 0; v < adj.size(); ++v) {
    if (!labels[v]) continue;
    for (std::size_t u : adj[v]) d[v] += labels[u] ? 1.0 : 0.0;
  }
  return d;
}

// Nearest-rank percentile by definition: the smallest sample value v such that at least
// p*n sample values are <= v.
inline double percentile_by_count(const std::vector<double>& sample, double p) {
  const double need = p * static_cast<double>(sample.size());
  double best = 0;
  bool found = false;
  for (double v : sample) {
    std::size_t at_most = 0;
    for (double w : sample) at_most += w <= v ? 1 : 0;
    if (static_cast<double>(at_most) + 1e-9 >= need && (!found || v < best)) {
      best = v;
      found = true;
    }
  }
  return best;
}

inline std::optional<double> hub_rate(const std::vector<double>& deg, const Labels& labels, double percentile) {
  std::vector<double> existing, newcomers;
  for (std::size_t i = 0; i < deg.size(); ++i) {
    if (labels[i] == CohortLabel::existing) existing.push_back(deg[i]);
    if (labels[i] == CohortLabel::newcomer) newcomers.push_back(deg[i]);
  }
  if (existing.empty() || newcomers.empty()) return std::nullopt;
  const double threshold = percentile_by_count(existing, percentile);
  double above = 0;
  for (double d : newcomers) above += d > threshold ? 1 : 0;
  return above / static_cast<double>(newcomers.size());
}

inline std::optional<double> share_ratio(const std::vector<double>& deg, const Labels& labels) {
  double n_new = 0, n_ex = 0, d_new = 0, d_ex = 0;
  for (std::size_t i = 0; i < deg.size(); ++i) {
    if (labels[i] == CohortLabel::newcomer) {
      n_new += 1;
      d_new += deg[i];
    } else if (labels[i] == CohortLabel::existing) {
      n_ex += 1;
      d_ex += deg[i];
    }
  }
  if (n_new == 0 || n_ex == 0 || d_new + d_ex == 0) return std::nullopt;
  return (d_new / (d_new + d_ex)) / (n_new / (n_new + n_ex));
}

struct RandomCell {
  cohortnet::MonthlyGraph graph;
  Labels labels;
};

// Random simple graph with up to max_nodes nodes and max_edges edges; a small share of
// nodes is left unlabeled.
inline RandomCell random_cell(std::mt19937_64& rng, std::size_t max_nodes = 200, std::size_t max_edges = 1000) {
  RandomCell c;
  const std::size_t n = std::uniform_int_distribution<std::size_t>(2, max_nodes)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%05zu", i);
    c.graph.nodes.emplace_back(buf);
  }
  const std::size_t possible = n * (n - 1) / 2;
  const std::size_t m = std::uniform_int_distribution<std::size_t>(0, std::min(max_edges, possible))(rng);
  std::set<cohortnet::Edge> edges;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  // Skewed endpoint choice produces hubs, so the degree metrics are not all degenerate.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (edges.size() < m) {
    const auto a = static_cast<cohortnet::NodeId>(unit(rng) < 0.3 ? pick(rng) % std::max<std::size_t>(1, n / 10) : pick(rng));
    const auto b = static_cast<cohortnet::NodeId>(pick(rng));
    if (a == b) continue;
    edges.insert(std::minmax(a, b));
  }
  c.graph.edges.assign(edges.begin(), edges.end());
  const double newcomer_share = unit(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit(rng);
    if (u < 0.05) {
      c.labels.push_back(std::nullopt);
    } else {
      c.labels.push_back(unit(rng) < newcomer_share ? CohortLabel::newcomer : CohortLabel::existing);
    }
  }
  return c;
}

}  // namespace oracle
