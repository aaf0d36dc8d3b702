#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <ranges>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cohortnet/events.hpp"
#include "cohortnet/month.hpp"

namespace cohortnet {

struct PostInfo {
  std::string user_id;
  std::string community_id;
  Timestamp timestamp = 0;
};

using PostAuthorIndex = std::unordered_map<std::string, PostInfo>;

// Indexes every post by id; the first occurrence of a repeated id wins.
template <std::ranges::input_range R>
[[nodiscard]] PostAuthorIndex build_post_index(const R& events) {
  PostAuthorIndex index;
  for (const auto& item : events) {
    const InteractionEvent& ev = as_event(item);
    if (ev.kind != EventKind::post) continue;
    index.try_emplace(ev.event_id, PostInfo{ev.user_id, ev.community_id, ev.timestamp});
  }
  return index;
}

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;  // first < second

// Undirected, unweighted reply network for one (community, month).
// Nodes are sorted user ids; edges index into `nodes`, are unique and sorted.
struct MonthlyGraph {
  std::string community_id;
  MonthKey month;
  std::vector<std::string> nodes;
  std::vector<Edge> edges;

  // Reply bookkeeping for the cell.
  std::size_t comments = 0;
  std::size_t dangling_parents = 0;
  std::size_t cross_community_parents = 0;
  std::size_t self_replies = 0;

  [[nodiscard]] std::optional<NodeId> find(const std::string& user) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), user);
    if (it == nodes.end() || *it != user) return std::nullopt;
    return static_cast<NodeId>(it - nodes.begin());
  }

  [[nodiscard]] bool has_edge(const std::string& a, const std::string& b) const {
    auto ia = find(a);
    auto ib = find(b);
    if (!ia || !ib) return false;
    Edge e = std::minmax(*ia, *ib);
    return std::binary_search(edges.begin(), edges.end(), e);
  }
};

// Builds the comment-to-post reply graph of `community` in `month`. Events outside the cell are
// ignored, so callers may pass either the whole corpus or a pre-bucketed cell.
template <std::ranges::input_range R>
[[nodiscard]] MonthlyGraph build_monthly_graph(const R& events, const std::string& community, const MonthKey& month,
                                               const PostAuthorIndex& posts) {
  MonthlyGraph g;
  g.community_id = community;
  g.month = month;

  std::vector<std::string> users;
  std::vector<std::pair<const std::string*, const std::string*>> raw_edges;
  for (const auto& item : events) {
    const InteractionEvent& ev = as_event(item);
    if (ev.community_id != community || month_of(ev.timestamp) != month) continue;
    users.push_back(ev.user_id);
    if (ev.kind != EventKind::comment) continue;
    ++g.comments;
    auto it = posts.find(*ev.parent_post_id);
    if (it == posts.end()) {
      ++g.dangling_parents;
      continue;
    }
    const PostInfo& parent = it->second;
    if (parent.community_id != community) {
      ++g.cross_community_parents;
      continue;
    }
    users.push_back(parent.user_id);
    if (parent.user_id == ev.user_id) {
      ++g.self_replies;
      continue;
    }
    raw_edges.emplace_back(&ev.user_id, &parent.user_id);
  }

  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  g.nodes = std::move(users);

  g.edges.reserve(raw_edges.size());
  for (const auto& [a, b] : raw_edges) {
    const NodeId ia = *g.find(*a);
    const NodeId ib = *g.find(*b);
    g.edges.push_back(std::minmax(ia, ib));
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

// "u v" per edge, lexicographically sorted.
inline void write_edge_list(std::ostream& os, const MonthlyGraph& g) {
  for (const auto& [a, b] : g.edges) os << g.nodes[a] << ' ' << g.nodes[b] << '\n';
}

}  // namespace cohortnet
