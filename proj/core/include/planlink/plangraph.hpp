#pragma once
// Directed AND-graph plan model. Nodes are materials; an edge src -> dst
// says "crafting src requires ingredient dst" and carries the tool used.
// Starting materials exist in the world from the beginning, so they are
// never products (out-degree 0); the goal is never an ingredient
// (in-degree 0).

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "planlink/rng.hpp"

namespace planlink {

struct Material {
  int id = 0;  // index within the plan's vocabulary, [0, num_materials)
  bool is_starting = false;
};

struct PlanEdge {
  int src = 0;   // product being crafted
  int dst = 0;   // required ingredient
  int tool = 0;

  friend bool operator==(const PlanEdge& a, const PlanEdge& b) {
    return a.src == b.src && a.dst == b.dst && a.tool == b.tool;
  }
  friend auto operator<=>(const PlanEdge& a, const PlanEdge& b) {
    if (auto c = a.src <=> b.src; c != 0) return c;
    if (auto c = a.dst <=> b.dst; c != 0) return c;
    return a.tool <=> b.tool;
  }
};

using EdgePair = std::pair<int, int>;  // (src, dst) with the tool stripped

struct PlanGraph {
  std::vector<Material> materials;
  std::vector<PlanEdge> edges;  // kept sorted by (src, dst, tool)
  int goal = 0;

  int num_materials() const { return static_cast<int>(materials.size()); }
  bool is_starting(int id) const { return materials[static_cast<std::size_t>(id)].is_starting; }
  std::vector<int> starting_set() const;
  bool has_edge(int src, int dst) const;

  // Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  std::string to_json() const;
  static PlanGraph from_json(const std::string& text);
};

struct PartialPlan {
  const PlanGraph* base = nullptr;  // full vocabulary (and, for oracles, full edges)
  std::vector<PlanEdge> known_edges;
  int owner = 1;  // player index, 1 or 2

  void validate() const;  // known_edges must be a subset of base->edges
};

struct CandidateSet {
  std::vector<EdgePair> candidates;  // ordered, no duplicates

  bool contains(int src, int dst) const;
  int size() const { return static_cast<int>(candidates.size()); }
};

// --- Graph-view helpers over an arbitrary edge list -------------------------

int degree_out(const std::vector<PlanEdge>& edges, int node);
int degree_in(const std::vector<PlanEdge>& edges, int node);
bool is_acyclic(int num_nodes, const std::vector<PlanEdge>& edges);
// Kahn's algorithm; throws std::invalid_argument on cycles. Ties broken by
// lowest node id so the order is deterministic.
std::vector<int> topological_order(int num_nodes, const std::vector<PlanEdge>& edges);
// True if `edges` contains a directed path from `from` to `to`.
bool has_path(int num_nodes, const std::vector<PlanEdge>& edges, int from, int to);

// --- Core operations ---------------------------------------------------------

// E \ E_i. Throws std::invalid_argument if partial refers to a different
// vocabulary or contains edges outside `full`.
std::vector<PlanEdge> missing_edges(const PlanGraph& full, const PartialPlan& partial);

// Constrained candidate pool for missing-edge prediction, evaluated on the
// known-edge subgraph before insertion: keep (u, v), u != v, not already
// known, with out-degree(u) < 4, in-degree(v) <= 1, u not a starting
// material (starting materials are never products), and no directed cycle
// when the edge is added. Result sorted by (src, dst).
CandidateSet candidate_sampling(const PartialPlan& partial,
                                const std::vector<int>& starting_set);

// Uniform sample without replacement from all ordered pairs minus self-loops
// minus known edges. count >= pool size returns the whole pool (sorted);
// otherwise the sampled subset, sorted.
CandidateSet naive_sampling(const PartialPlan& partial, int count, Rng& rng);

}  // namespace planlink
