#include "planlink/plangraph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

#include <json.hpp>

namespace planlink {

std::vector<int> PlanGraph::starting_set() const {
  std::vector<int> out;
  for (const Material& m : materials)
    if (m.is_starting) out.push_back(m.id);
  return out;
}

bool PlanGraph::has_edge(int src, int dst) const {
  for (const PlanEdge& e : edges)
    if (e.src == src && e.dst == dst) return true;
  return false;
}

void PlanGraph::validate() const {
  const int n = num_materials();
  if (n < 2) throw std::invalid_argument("PlanGraph: needs at least two materials");
  for (int i = 0; i < n; ++i)
    if (materials[static_cast<std::size_t>(i)].id != i)
      throw std::invalid_argument("PlanGraph: material ids must be 0..n-1 in order");
  if (goal < 0 || goal >= n) throw std::invalid_argument("PlanGraph: goal out of range");
  if (is_starting(goal)) throw std::invalid_argument("PlanGraph: goal in starting set");
  bool any_non_starting = false;
  for (const Material& m : materials) any_non_starting |= !m.is_starting;
  if (!any_non_starting)
    throw std::invalid_argument("PlanGraph: all materials are starting materials");
  for (const PlanEdge& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      throw std::invalid_argument("PlanGraph: edge endpoint out of range");
    if (e.src == e.dst) throw std::invalid_argument("PlanGraph: self-loop edge");
    if (e.tool < 0) throw std::invalid_argument("PlanGraph: negative tool id");
  }
  if (!std::is_sorted(edges.begin(), edges.end()))
    throw std::invalid_argument("PlanGraph: edges not sorted");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i - 1].src == edges[i].src && edges[i - 1].dst == edges[i].dst)
      throw std::invalid_argument("PlanGraph: duplicate edge (src, dst)");
  if (!is_acyclic(n, edges)) throw std::invalid_argument("PlanGraph: cycle detected");
  if (degree_in(edges, goal) != 0)
    throw std::invalid_argument("PlanGraph: goal used as an ingredient");
  for (int i = 0; i < n; ++i) {
    if (is_starting(i) && degree_out(edges, i) != 0)
      throw std::invalid_argument("PlanGraph: starting material is a product");
    if (degree_in(edges, i) > 2)
      throw std::invalid_argument("PlanGraph: in-degree > 2 at node " +
                                  std::to_string(i));
  }
  // Recipe sizes, checked for every non-starting node reachable from the goal.
  std::vector<char> reachable(static_cast<std::size_t>(n), 0);
  std::queue<int> frontier;
  frontier.push(goal);
  reachable[static_cast<std::size_t>(goal)] = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (const PlanEdge& e : edges)
      if (e.src == u && !reachable[static_cast<std::size_t>(e.dst)]) {
        reachable[static_cast<std::size_t>(e.dst)] = 1;
        frontier.push(e.dst);
      }
  }
  for (int i = 0; i < n; ++i) {
    if (!reachable[static_cast<std::size_t>(i)] || is_starting(i)) continue;
    const int out = degree_out(edges, i);
    if (out < 1 || out > 3)
      throw std::invalid_argument("PlanGraph: recipe size " + std::to_string(out) +
                                  " out of [1,3] at node " + std::to_string(i));
  }
}

std::string PlanGraph::to_json() const {
  nlohmann::json j;
  j["materials"] = nlohmann::json::array();
  for (const Material& m : materials)
    j["materials"].push_back({{"id", m.id}, {"is_starting", m.is_starting}});
  j["goal"] = goal;
  std::vector<PlanEdge> sorted = edges;
  std::sort(sorted.begin(), sorted.end());
  j["edges"] = nlohmann::json::array();
  for (const PlanEdge& e : sorted)
    j["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"tool", e.tool}});
  return j.dump();
}

PlanGraph PlanGraph::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PlanGraph g;
  for (const auto& jm : j.at("materials"))
    g.materials.push_back({jm.at("id").get<int>(), jm.at("is_starting").get<bool>()});
  g.goal = j.at("goal").get<int>();
  for (const auto& je : j.at("edges"))
    g.edges.push_back(
        {je.at("src").get<int>(), je.at("dst").get<int>(), je.at("tool").get<int>()});
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

void PartialPlan::validate() const {
  if (!base) throw std::invalid_argument("PartialPlan: no base graph");
  if (owner != 1 && owner != 2) throw std::invalid_argument("PartialPlan: owner must be 1 or 2");
  for (const PlanEdge& e : known_edges) {
    if (std::find(base->edges.begin(), base->edges.end(), e) == base->edges.end())
      throw std::invalid_argument("PartialPlan: known edge not in base plan");
  }
}

bool CandidateSet::contains(int src, int dst) const {
  return std::binary_search(candidates.begin(), candidates.end(), EdgePair{src, dst});
}

int degree_out(const std::vector<PlanEdge>& edges, int node) {
  int d = 0;
  for (const PlanEdge& e : edges) d += e.src == node;
  return d;
}

int degree_in(const std::vector<PlanEdge>& edges, int node) {
  int d = 0;
  for (const PlanEdge& e : edges) d += e.dst == node;
  return d;
}

std::vector<int> topological_order(int num_nodes, const std::vector<PlanEdge>& edges) {
  std::vector<int> indeg(static_cast<std::size_t>(num_nodes), 0);
  for (const PlanEdge& e : edges) ++indeg[static_cast<std::size_t>(e.dst)];
  // Min-heap on node id keeps the order deterministic.
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < num_nodes; ++i)
    if (indeg[static_cast<std::size_t>(i)] == 0) ready.push(i);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(num_nodes));
  while (!ready.empty()) {
    const int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (const PlanEdge& e : edges)
      if (e.src == u && --indeg[static_cast<std::size_t>(e.dst)] == 0) ready.push(e.dst);
  }
  if (static_cast<int>(order.size()) != num_nodes)
    throw std::invalid_argument("topological_order: graph has a cycle");
  return order;
}

bool is_acyclic(int num_nodes, const std::vector<PlanEdge>& edges) {
  try {
    topological_order(num_nodes, edges);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

bool has_path(int num_nodes, const std::vector<PlanEdge>& edges, int from, int to) {
  if (from == to) return true;
  std::vector<char> seen(static_cast<std::size_t>(num_nodes), 0);
  std::queue<int> frontier;
  frontier.push(from);
  seen[static_cast<std::size_t>(from)] = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (const PlanEdge& e : edges) {
      if (e.src != u || seen[static_cast<std::size_t>(e.dst)]) continue;
      if (e.dst == to) return true;
      seen[static_cast<std::size_t>(e.dst)] = 1;
      frontier.push(e.dst);
    }
  }
  return false;
}

std::vector<PlanEdge> missing_edges(const PlanGraph& full, const PartialPlan& partial) {
  if (partial.base != &full &&
      (partial.base == nullptr ||
       partial.base->num_materials() != full.num_materials()))
    throw std::invalid_argument("missing_edges: material vocabulary mismatch");
  for (const PlanEdge& e : partial.known_edges)
    if (std::find(full.edges.begin(), full.edges.end(), e) == full.edges.end())
      throw std::invalid_argument("missing_edges: known edge not in full plan");
  std::vector<PlanEdge> out;
  for (const PlanEdge& e : full.edges)
    if (std::find(partial.known_edges.begin(), partial.known_edges.end(), e) ==
        partial.known_edges.end())
      out.push_back(e);
  return out;
}

CandidateSet candidate_sampling(const PartialPlan& partial,
                                const std::vector<int>& starting_set) {
  partial.validate();
  const int n = partial.base->num_materials();
  std::vector<char> starting(static_cast<std::size_t>(n), 0);
  for (int s : starting_set) starting[static_cast<std::size_t>(s)] = 1;
  std::vector<int> outdeg(static_cast<std::size_t>(n), 0);
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (const PlanEdge& e : partial.known_edges) {
    ++outdeg[static_cast<std::size_t>(e.src)];
    ++indeg[static_cast<std::size_t>(e.dst)];
  }
  CandidateSet cs;
  for (int u = 0; u < n; ++u) {
    if (starting[static_cast<std::size_t>(u)]) continue;  // never a product
    if (outdeg[static_cast<std::size_t>(u)] >= 4) continue;
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (indeg[static_cast<std::size_t>(v)] > 1) continue;
      bool known = false;
      for (const PlanEdge& e : partial.known_edges)
        known |= e.src == u && e.dst == v;
      if (known) continue;
      // Adding u -> v must not close a directed cycle with the known edges.
      if (has_path(n, partial.known_edges, v, u)) continue;
      cs.candidates.emplace_back(u, v);
    }
  }
  std::sort(cs.candidates.begin(), cs.candidates.end());
  return cs;
}

CandidateSet naive_sampling(const PartialPlan& partial, int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("naive_sampling: count must be >= 1");
  partial.validate();
  const int n = partial.base->num_materials();
  std::vector<EdgePair> pool;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      bool known = false;
      for (const PlanEdge& e : partial.known_edges)
        known |= e.src == u && e.dst == v;
      if (!known) pool.emplace_back(u, v);
    }
  CandidateSet cs;
  if (count >= static_cast<int>(pool.size())) {
    cs.candidates = std::move(pool);
  } else {
    rng.shuffle(pool);
    cs.candidates.assign(pool.begin(), pool.begin() + count);
  }
  std::sort(cs.candidates.begin(), cs.candidates.end());
  return cs;
}

}  // namespace planlink
