#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cohortnet/cohorts.hpp"
#include "cohortnet/graphs.hpp"
#include "cohortnet/stats.hpp"

namespace cohortnet {

// Cohort labels aligned with graph.nodes; a null label marks an unlabeled user.
struct CohortedGraph {
  const MonthlyGraph& graph;
  std::vector<std::optional<CohortLabel>> labels;
};

// Number of distinct neighbours per node, aligned with graph.nodes.
[[nodiscard]] inline std::vector<std::size_t> degree_sequence(const MonthlyGraph& g) {
  std::vector<std::size_t> deg(g.nodes.size(), 0);
  for (const auto& [a, b] : g.edges) {
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

// Population Gini coefficient, sum_i sum_j |x_i - x_j| / (2 n^2 mean).
// Null for an empty sample or an all-zero sample.
[[nodiscard]] inline std::optional<double> degree_gini(std::span<const double> values) {
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("degree_gini: negative value");
  }
  const std::size_t n = values.size();
  if (n == 0) return std::nullopt;
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  // Sorted form of the double sum: sum_i (2i - n - 1) x_(i) / (n * sum x), i = 1..n.
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += x[i];
    weighted += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * x[i];
  }
  if (total <= 0.0) return std::nullopt;
  return weighted / (static_cast<double>(n) * total);
}

[[nodiscard]] inline std::optional<double> degree_gini(std::span<const std::size_t> degrees) {
  std::vector<double> x(degrees.begin(), degrees.end());
  return degree_gini(std::span<const double>(x));
}

// Pearson correlation of endpoint degrees over both orientations of every edge.
// Null with fewer than two edges or when every endpoint has the same degree.
[[nodiscard]] inline std::optional<double> degree_assortativity(const MonthlyGraph& g) {
  if (g.edges.size() < 2) return std::nullopt;
  const auto deg = degree_sequence(g);

  // Both marginals are the endpoint-degree multiset, so they share one mean and variance.
  double sum = 0.0;
  std::size_t lo = deg[g.edges.front().first];
  std::size_t hi = lo;
  for (const auto& [a, b] : g.edges) {
    sum += static_cast<double>(deg[a] + deg[b]);
    lo = std::min({lo, deg[a], deg[b]});
    hi = std::max({hi, deg[a], deg[b]});
  }
  if (lo == hi) return std::nullopt;
  const double mean = sum / (2.0 * static_cast<double>(g.edges.size()));
  double cov = 0.0;
  double var = 0.0;
  for (const auto& [a, b] : g.edges) {
    const double da = static_cast<double>(deg[a]) - mean;
    const double db = static_cast<double>(deg[b]) - mean;
    cov += 2.0 * da * db;
    var += da * da + db * db;
  }
  return cov / var;
}

struct EiCounts {
  std::size_t external = 0;
  std::size_t internal = 0;
};

// Edge counts across / within cohorts; edges touching an unlabeled node are skipped.
[[nodiscard]] inline EiCounts ei_counts(const CohortedGraph& cg) {
  EiCounts c;
  for (const auto& [a, b] : cg.graph.edges) {
    const auto& la = cg.labels[a];
    const auto& lb = cg.labels[b];
    if (!la || !lb) continue;
    if (*la == *lb) {
      ++c.internal;
    } else {
      ++c.external;
    }
  }
  return c;
}

// Krackhardt E-I index (E - I) / (E + I); null without labeled edges.
[[nodiscard]] inline std::optional<double> ei_index(const CohortedGraph& cg) {
  const EiCounts c = ei_counts(cg);
  const std::size_t total = c.external + c.internal;
  if (total == 0) return std::nullopt;
  return (static_cast<double>(c.external) - static_cast<double>(c.internal)) / static_cast<double>(total);
}

// Degrees counted over edges whose endpoints are both labeled; 0 for unlabeled nodes.
[[nodiscard]] inline std::vector<std::size_t> labeled_degrees(const CohortedGraph& cg) {
  std::vector<std::size_t> deg(cg.graph.nodes.size(), 0);
  for (const auto& [a, b] : cg.graph.edges) {
    if (!cg.labels[a] || !cg.labels[b]) continue;
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

// Share of newcomers whose degree strictly exceeds the nearest-rank `percentile` of
// existing-user degrees. Null when either cohort is empty.
[[nodiscard]] inline std::optional<double> newcomer_hub_rate(std::span<const std::size_t> degrees,
                                                             std::span<const std::optional<CohortLabel>> labels,
                                                             double percentile = 0.90) {
  if (!(percentile > 0.0 && percentile < 1.0)) throw std::invalid_argument("percentile must lie in (0, 1)");
  std::vector<std::size_t> existing;
  std::vector<std::size_t> newcomers;
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    if (!labels[i]) continue;
    (*labels[i] == CohortLabel::existing ? existing : newcomers).push_back(degrees[i]);
  }
  if (existing.empty() || newcomers.empty()) return std::nullopt;
  const std::size_t threshold = nearest_rank(std::move(existing), percentile);
  const auto hubs = std::count_if(newcomers.begin(), newcomers.end(), [&](std::size_t d) { return d > threshold; });
  return static_cast<double>(hubs) / static_cast<double>(newcomers.size());
}

[[nodiscard]] inline std::optional<double> newcomer_hub_rate(const CohortedGraph& cg, double percentile = 0.90) {
  const auto deg = labeled_degrees(cg);
  return newcomer_hub_rate(deg, cg.labels, percentile);
}

// Newcomers' share of total degree divided by their share of the labeled population.
// Null when total degree is zero or either cohort is empty.
[[nodiscard]] inline std::optional<double> degree_share_ratio(std::span<const std::size_t> degrees,
                                                              std::span<const std::optional<CohortLabel>> labels) {
  std::size_t n_new = 0, n_all = 0, d_new = 0, d_all = 0;
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    if (!labels[i]) continue;
    ++n_all;
    d_all += degrees[i];
    if (*labels[i] == CohortLabel::newcomer) {
      ++n_new;
      d_new += degrees[i];
    }
  }
  if (d_all == 0 || n_new == 0 || n_new == n_all) return std::nullopt;
  const double degree_share = static_cast<double>(d_new) / static_cast<double>(d_all);
  const double population_share = static_cast<double>(n_new) / static_cast<double>(n_all);
  return degree_share / population_share;
}

[[nodiscard]] inline std::optional<double> degree_share_ratio(const CohortedGraph& cg) {
  const auto deg = labeled_degrees(cg);
  return degree_share_ratio(deg, cg.labels);
}

// Gini of full-graph degrees restricted to existing users.
[[nodiscard]] inline std::optional<double> existing_gini(const CohortedGraph& cg) {
  const auto deg = degree_sequence(cg.graph);
  std::vector<double> x;
  for (std::size_t i = 0; i < deg.size(); ++i) {
    if (cg.labels[i] == CohortLabel::existing) x.push_back(static_cast<double>(deg[i]));
  }
  return degree_gini(std::span<const double>(x));
}

}  // namespace cohortnet
