#include "planlink/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace planlink {
namespace {

using nlohmann::json;

constexpr double kFeatureNoise = 0.1;
constexpr double kBlockedChatProb = 0.15;

int partner_of(int player) { return player == 1 ? 2 : 1; }

bool contains_edge(const std::vector<PlanEdge>& edges, const PlanEdge& e) {
  return std::find(edges.begin(), edges.end(), e) != edges.end();
}

std::vector<PlanEdge> recipe_of(const PlanGraph& plan, int material) {
  std::vector<PlanEdge> r;
  for (const PlanEdge& e : plan.edges)
    if (e.src == material) r.push_back(e);
  return r;
}

bool last_craft_by(const GameSession& s, int player, int material, int t) {
  for (const CraftEvent& c : s.crafts)
    if (c.player == player && c.material == material && c.time <= t) return true;
  return false;
}

std::vector<std::vector<double>> random_projection(int out_dim, int in_dim, Rng& rng) {
  std::vector<std::vector<double>> p(static_cast<std::size_t>(out_dim),
                                     std::vector<double>(static_cast<std::size_t>(in_dim)));
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& row : p)
    for (double& v : row) v = rng.normal() * scale;
  return p;
}

std::vector<double> project_onehot(const std::vector<std::vector<double>>& proj, int hot,
                                   double noise_scale, Rng& rng) {
  std::vector<double> out(proj.size());
  for (std::size_t i = 0; i < proj.size(); ++i)
    out[i] = proj[i][static_cast<std::size_t>(hot)] + noise_scale * rng.normal();
  return out;
}

}  // namespace

int GameConfig::interval_steps() const {
  if (timestep <= 0.0) throw std::invalid_argument("GameConfig: timestep must be > 0");
  return std::max(1, static_cast<int>(std::llround(question_interval / timestep)));
}

void GameConfig::validate() const {
  if (num_materials != 0 && (num_materials < 5 || num_materials > 10))
    throw std::invalid_argument("GameConfig: num_materials must be 0 or in [5,10]");
  if (num_steps != 0 && (num_steps < 7 || num_steps > 11))
    throw std::invalid_argument("GameConfig: num_steps must be 0 or in [7,11]");
  if (num_tools < 2) throw std::invalid_argument("GameConfig: num_tools must be >= 2");
  if (question_interval <= 0.0 || timestep <= 0.0)
    throw std::invalid_argument("GameConfig: intervals must be positive");
  if (share_probability < 0.0 || share_probability > 1.0)
    throw std::invalid_argument("GameConfig: share_probability in [0,1]");
  if (overlap_fraction < 0.0 || overlap_fraction > 1.0)
    throw std::invalid_argument("GameConfig: overlap_fraction in [0,1]");
  if (craft_ticks_min < 1 || craft_ticks_max < craft_ticks_min)
    throw std::invalid_argument("GameConfig: bad craft tick range");
  if (observe_probability < 0.0 || observe_probability > 1.0 ||
      announce_probability < 0.0 || announce_probability > 1.0)
    throw std::invalid_argument("GameConfig: probabilities in [0,1]");
  if (max_intervals < 1) throw std::invalid_argument("GameConfig: max_intervals >= 1");
}

PartialPlan GameSession::partial(int player) const {
  if (player != 1 && player != 2)
    throw std::invalid_argument("GameSession::partial: player must be 1 or 2");
  PartialPlan p;
  p.base = &plan;
  p.known_edges = known0[player - 1];
  p.owner = player;
  return p;
}

std::vector<PlanEdge> GameSession::known_at(int player, int t) const {
  std::vector<PlanEdge> k = known0[player - 1];
  for (const ShareEvent& sh : shares)
    if (sh.to_player == player && sh.time <= t && !contains_edge(k, sh.edge))
      k.push_back(sh.edge);
  std::sort(k.begin(), k.end());
  return k;
}

// --- Plan generation ----------------------------------------------------------

namespace {

// One construction attempt; nullopt when the random choices paint us into a
// corner (caller retries with a fresh stream).
std::optional<PlanGraph> try_build_plan(int num_materials, int num_starting,
                                        int num_steps, int num_tools, Rng& rng) {
  const int n = num_materials;
  const int craftable = n - num_starting;
  std::vector<int> outdeg(static_cast<std::size_t>(n), 0);
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  std::vector<std::pair<int, int>> pairs;  // (src, dst), src < dst by id
  auto add_edge = [&](int u, int v) {
    pairs.emplace_back(u, v);
    ++outdeg[static_cast<std::size_t>(u)];
    ++indeg[static_cast<std::size_t>(v)];
  };
  // Local ids double as a topological order: 0 is the goal, high ids are the
  // starting materials; every edge points from a lower id to a higher one.
  // Pass 1: every non-goal node gets one incoming edge, so everything is
  // reachable from the goal.
  for (int v = 1; v < n; ++v) {
    std::vector<int> options;
    for (int u = 0; u < std::min(v, craftable); ++u)
      if (outdeg[static_cast<std::size_t>(u)] < 3) options.push_back(u);
    if (options.empty()) return std::nullopt;
    add_edge(rng.pick(options), v);
  }
  // Pass 2: every craftable node needs a recipe (out-degree >= 1).
  for (int u = 0; u < craftable; ++u) {
    if (outdeg[static_cast<std::size_t>(u)] > 0) continue;
    std::vector<int> options;
    for (int v = u + 1; v < n; ++v)
      if (indeg[static_cast<std::size_t>(v)] < 2) options.push_back(v);
    if (options.empty()) return std::nullopt;
    add_edge(u, rng.pick(options));
  }
  // Pass 3: fill to the requested step count.
  while (static_cast<int>(pairs.size()) < num_steps) {
    std::vector<std::pair<int, int>> options;
    for (int u = 0; u < craftable; ++u) {
      if (outdeg[static_cast<std::size_t>(u)] >= 3) continue;
      for (int v = u + 1; v < n; ++v) {
        if (indeg[static_cast<std::size_t>(v)] >= 2) continue;
        if (std::find(pairs.begin(), pairs.end(), std::pair<int, int>{u, v}) !=
            pairs.end())
          continue;
        options.emplace_back(u, v);
      }
    }
    if (options.empty()) return std::nullopt;
    const auto [u, v] = rng.pick(options);
    add_edge(u, v);
  }
  if (static_cast<int>(pairs.size()) != num_steps) return std::nullopt;

  PlanGraph g;
  for (int i = 0; i < n; ++i) g.materials.push_back({i, i >= craftable});
  g.goal = 0;
  // One tool per product: every edge of a recipe carries the product's tool.
  std::vector<int> tool_of(static_cast<std::size_t>(craftable));
  for (int& t : tool_of) t = rng.uniform_int(0, num_tools - 1);
  for (const auto& [u, v] : pairs)
    g.edges.push_back({u, v, tool_of[static_cast<std::size_t>(u)]});
  std::sort(g.edges.begin(), g.edges.end());
  g.validate();
  return g;
}

}  // namespace

PlanGraph generate_plan(const GameConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int attempt = 0; attempt < 200; ++attempt) {
    Rng r = rng.split(0x504C414EULL + static_cast<std::uint64_t>(attempt));
    const int n = cfg.num_materials ? cfg.num_materials : r.uniform_int(5, 10);
    int steps = cfg.num_steps;
    // Feasibility: craftable nodes need out-degree in [1,3]; in-degree <= 2
    // everywhere with the goal at 0 caps the total at 2(n-1).
    const int max_start = n - std::max(3, (std::max(steps, 7) + 2) / 3);
    if (max_start < 1) {
      if (cfg.num_materials && cfg.num_steps)
        throw std::invalid_argument("generate_plan: infeasible material/step counts");
      continue;
    }
    const int num_starting = r.uniform_int(std::min(2, max_start), std::min(4, max_start));
    const int craftable = n - num_starting;
    const int lo = std::max(7, craftable);
    const int hi = std::min({11, 3 * craftable, 2 * (n - 1)});
    if (steps == 0) {
      if (lo > hi) continue;
      steps = r.uniform_int(lo, hi);
    } else if (steps < craftable || steps > std::min(3 * craftable, 2 * (n - 1))) {
      if (cfg.num_materials && cfg.num_steps && attempt > 50)
        throw std::invalid_argument("generate_plan: infeasible material/step counts");
      continue;
    }
    if (auto g = try_build_plan(n, num_starting, steps, cfg.num_tools, r)) return *g;
  }
  throw std::invalid_argument("generate_plan: no valid plan after 200 attempts");
}

std::pair<std::vector<PlanEdge>, std::vector<PlanEdge>> split_knowledge(
    const PlanGraph& plan, double overlap_fraction, Rng& rng) {
  if (overlap_fraction < 0.0 || overlap_fraction > 1.0)
    throw std::invalid_argument("split_knowledge: overlap_fraction in [0,1]");
  const int total = static_cast<int>(plan.edges.size());
  if (total < 2) throw std::invalid_argument("split_knowledge: need at least 2 edges");
  if (overlap_fraction >= 1.0) return {plan.edges, plan.edges};

  int shared = static_cast<int>(std::llround(overlap_fraction * total));
  shared = std::min(shared, total - 2);  // keep both hands proper subsets
  std::vector<PlanEdge> order = plan.edges;
  rng.shuffle(order);
  std::vector<PlanEdge> e1(order.begin(), order.begin() + shared);
  std::vector<PlanEdge> e2 = e1;
  // Exclusive remainder alternates, random first owner, so each player gets
  // at least one private edge.
  int turn = rng.bernoulli(0.5) ? 0 : 1;
  for (int i = shared; i < total; ++i) {
    (turn == 0 ? e1 : e2).push_back(order[static_cast<std::size_t>(i)]);
    turn ^= 1;
  }
  std::sort(e1.begin(), e1.end());
  std::sort(e2.begin(), e2.end());
  return {e1, e2};
}

std::pair<std::vector<int>, std::vector<int>> split_tools(int num_tools, Rng& rng) {
  if (num_tools < 2) throw std::invalid_argument("split_tools: need >= 2 tools");
  std::vector<int> ids(static_cast<std::size_t>(num_tools));
  for (int i = 0; i < num_tools; ++i) ids[static_cast<std::size_t>(i)] = i;
  rng.shuffle(ids);
  const int cut = num_tools / 2;
  std::vector<int> a(ids.begin(), ids.begin() + cut);
  std::vector<int> b(ids.begin() + cut, ids.end());
  if (rng.bernoulli(0.5)) std::swap(a, b);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {a, b};
}

// --- Session simulation -------------------------------------------------------

namespace {

struct Busy {
  int material = -1;
  int ticks_left = 0;
  int start = 0;
};

struct Outgoing {
  int player = 1;
  MoveType move = MoveType::kNoop;
  int material = -1;
};

}  // namespace

GameSession simulate_session(PlanGraph plan, std::vector<int> material_globals,
                             std::vector<PlanEdge> known1, std::vector<PlanEdge> known2,
                             std::pair<std::vector<int>, std::vector<int>> tool_split,
                             const GameConfig& cfg, Rng& rng) {
  cfg.validate();
  plan.validate();
  const int n = plan.num_materials();
  if (static_cast<int>(material_globals.size()) != n)
    throw std::invalid_argument("simulate_session: material_globals size mismatch");

  GameSession s;
  s.plan = std::move(plan);
  s.material_globals = std::move(material_globals);
  std::sort(known1.begin(), known1.end());
  std::sort(known2.begin(), known2.end());
  s.known0[0] = std::move(known1);
  s.known0[1] = std::move(known2);
  std::sort(tool_split.first.begin(), tool_split.first.end());
  std::sort(tool_split.second.begin(), tool_split.second.end());
  s.tools[0] = std::move(tool_split.first);
  s.tools[1] = std::move(tool_split.second);

  // Fixed projections shared by every session of a dataset seed.
  Rng proj_rng(splitmix64(cfg.seed ^ 0xFEA7C0DEULL));
  const auto dialogue_proj = random_projection(kDialogueFeatDim, kMoveVocab, proj_rng);
  const auto visual_proj = random_projection(kVisualFeatDim, kMaterialVocab, proj_rng);

  const int interval = cfg.interval_steps();
  const int t_max = cfg.max_steps();
  s.interval_steps = interval;

  std::vector<char> available(static_cast<std::size_t>(n), 0);
  for (const Material& m : s.plan.materials)
    if (m.is_starting) available[static_cast<std::size_t>(m.id)] = 1;
  std::vector<char> crafted_any(static_cast<std::size_t>(n), 0);
  std::set<PlanEdge> known[2] = {{s.known0[0].begin(), s.known0[0].end()},
                                 {s.known0[1].begin(), s.known0[1].end()}};
  Busy busy[2];
  int pending_request[2] = {-1, -1};
  int last_craft[2] = {-1, -1};
  std::deque<Outgoing> outbox;

  auto holds_tools = [&](int p, const std::vector<PlanEdge>& recipe) {
    for (const PlanEdge& e : recipe)
      if (!std::binary_search(s.tools[p].begin(), s.tools[p].end(), e.tool)) return false;
    return true;
  };
  auto knows_recipe = [&](int p, const std::vector<PlanEdge>& recipe) {
    for (const PlanEdge& e : recipe)
      if (!known[p].count(e)) return false;
    return true;
  };
  auto ingredients_ready = [&](const std::vector<PlanEdge>& recipe) {
    for (const PlanEdge& e : recipe)
      if (!available[static_cast<std::size_t>(e.dst)]) return false;
    return true;
  };

  auto emit_move = [&](int t, int player, MoveType move, int material) {
    s.moves.push_back({t, player, move, material});
    Rng noise = rng.split(0xD1A0ULL ^ (static_cast<std::uint64_t>(t) << 8));
    s.dialogue_feats.entries.emplace_back(
        t, project_onehot(dialogue_proj, static_cast<int>(move), kFeatureNoise, noise));
  };

  bool goal_done = false;
  int t = 0;
  for (; t < t_max && !goal_done; ++t) {
    const bool boundary = (t + 1) % interval == 0;
    bool chat_used = false;

    // Knowledge sharing once per question interval.
    if (boundary && rng.bernoulli(cfg.share_probability)) {
      int giver = -1, receiver = -1;
      PlanEdge edge{};
      bool found = false;
      // Prefer answering an open request.
      for (int p = 0; p < 2 && !found; ++p) {
        const int m = pending_request[p];
        if (m < 0) continue;
        for (const PlanEdge& e : recipe_of(s.plan, m)) {
          if (known[1 - p].count(e) && !known[p].count(e)) {
            giver = 1 - p;
            receiver = p;
            edge = e;
            found = true;
            break;
          }
        }
      }
      if (!found) {
        const int g = rng.uniform_int(0, 1);
        for (int attempt = 0; attempt < 2 && !found; ++attempt) {
          const int giver_try = (g + attempt) % 2;
          std::vector<PlanEdge> transferable;
          for (const PlanEdge& e : known[giver_try])
            if (!known[1 - giver_try].count(e)) transferable.push_back(e);
          if (!transferable.empty()) {
            giver = giver_try;
            receiver = 1 - giver_try;
            edge = transferable[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(transferable.size()) - 1))];
            found = true;
          }
        }
      }
      if (found) {
        known[receiver].insert(edge);
        if (pending_request[receiver] >= 0 &&
            knows_recipe(receiver, recipe_of(s.plan, pending_request[receiver])))
          pending_request[receiver] = -1;
        s.shares.push_back({t, giver + 1, receiver + 1, edge});
        emit_move(t, giver + 1, MoveType::kShareEdge, edge.src);
        chat_used = true;
      }
    }

    // One chat line per tick.
    if (!chat_used && !outbox.empty()) {
      Outgoing o = outbox.front();
      outbox.pop_front();
      if (o.move == MoveType::kInformStatus &&
          !(o.material >= 0 && last_craft_by(s, o.player, o.material, t)))
        o.move = MoveType::kAck;  // truthful: nothing to report
      emit_move(t, o.player, o.move, o.move == MoveType::kAck ? -1 : o.material);
      if (o.move == MoveType::kAskStatus)
        outbox.push_back({partner_of(o.player), MoveType::kInformStatus, o.material});
    }

    // Players act in fixed order.
    for (int p = 0; p < 2; ++p) {
      if (busy[p].material >= 0) {
        if (--busy[p].ticks_left > 0) continue;
        const int m = busy[p].material;
        const bool observed = rng.bernoulli(cfg.observe_probability);
        const bool announced = rng.bernoulli(cfg.announce_probability);
        s.crafts.push_back({t, p + 1, m, observed, announced});
        s.spans[p].push_back({busy[p].start, t, m});
        available[static_cast<std::size_t>(m)] = 1;
        crafted_any[static_cast<std::size_t>(m)] = 1;
        last_craft[p] = m;
        if (announced) outbox.push_back({p + 1, MoveType::kAnnounceCraft, m});
        busy[p].material = -1;
        if (m == s.plan.goal) goal_done = true;
        continue;
      }
      // Deepest ready material first (high local ids sit near the leaves).
      int target = -1;
      for (int m = n - 1; m >= 0; --m) {
        if (available[static_cast<std::size_t>(m)] || s.plan.is_starting(m)) continue;
        if (busy[1 - p].material == m) continue;
        const auto recipe = recipe_of(s.plan, m);
        if (recipe.empty()) continue;
        if (!knows_recipe(p, recipe) || !holds_tools(p, recipe) ||
            !ingredients_ready(recipe))
          continue;
        target = m;
        break;
      }
      if (target >= 0) {
        busy[p] = {target, rng.uniform_int(cfg.craft_ticks_min, cfg.craft_ticks_max), t};
        if (rng.bernoulli(cfg.announce_probability))
          outbox.push_back({p + 1, MoveType::kAnnounceTarget, target});
        continue;
      }
      // Blocked: occasionally talk about it.
      if (!rng.bernoulli(kBlockedChatProb)) continue;
      int ask_about = -1;
      for (int m = n - 1; m >= 0; --m) {
        if (available[static_cast<std::size_t>(m)] || s.plan.is_starting(m)) continue;
        const auto recipe = recipe_of(s.plan, m);
        if (recipe.empty() || knows_recipe(p, recipe)) continue;
        if (ingredients_ready(recipe) || holds_tools(p, recipe)) {
          ask_about = m;
          break;
        }
      }
      if (ask_about >= 0) {
        pending_request[p] = ask_about;
        outbox.push_back({p + 1, MoveType::kRequestKnowledge, ask_about});
      } else if (rng.bernoulli(0.5)) {
        std::vector<int> unknowns;
        for (int m = 0; m < n; ++m)
          if (!s.plan.is_starting(m) && !crafted_any[static_cast<std::size_t>(m)])
            unknowns.push_back(m);
        if (!unknowns.empty())
          outbox.push_back({p + 1, MoveType::kAskStatus, rng.pick(unknowns)});
      } else {
        outbox.push_back({p + 1, MoveType::kNoop, -1});
      }
    }

    // Question pop-ups, all three kinds, paired across the two players.
    if (boundary) {
      for (const ToMKind kind :
           {ToMKind::kStatus, ToMKind::kKnowledge, ToMKind::kIntention}) {
        const int about_player = rng.uniform_int(1, 2);
        int subject = s.plan.goal;
        if (kind == ToMKind::kStatus) {
          subject = rng.uniform_int(0, n - 1);
        } else if (kind == ToMKind::kKnowledge) {
          std::vector<int> non_starting;
          for (int m = 0; m < n; ++m)
            if (!s.plan.is_starting(m)) non_starting.push_back(m);
          subject = rng.pick(non_starting);
        }
        ToMQuestion self_q{kind, subject, about_player, About::kSelf, t};
        ToMQuestion partner_q{kind, subject, partner_of(about_player), About::kPartner, t};
        for (const ToMQuestion& q : {self_q, partner_q}) {
          ToMAnswer a;
          switch (kind) {
            case ToMKind::kStatus:
              a = answer_status(s, t, q.subject, q.asked_of, q.about);
              break;
            case ToMKind::kKnowledge:
              a = answer_knowledge(s, t, q.subject, q.asked_of, q.about);
              break;
            case ToMKind::kIntention:
              a = answer_intention(s, t, q.asked_of, q.about);
              break;
          }
          s.questions.push_back({q, a});
        }
      }
    }

    // Per-tick visual features once a player has crafted something.
    for (int p = 0; p < 2; ++p) {
      if (last_craft[p] < 0) continue;
      Rng noise = rng.split(0x7151ULL ^ (static_cast<std::uint64_t>(t) << 8) ^
                            static_cast<std::uint64_t>(p));
      s.visual_feats[p].entries.emplace_back(
          t, project_onehot(visual_proj, s.global_id(last_craft[p]), kFeatureNoise,
                            noise));
    }
  }

  s.length = t;
  s.complete = goal_done;

  // Record any in-flight work as a truncated span so intention queries at the
  // tail of an incomplete session still resolve.
  for (int p = 0; p < 2; ++p)
    if (busy[p].material >= 0) s.spans[p].push_back({busy[p].start, s.length - 1, busy[p].material});

  return s;
}

// --- Ground-truth answers -----------------------------------------------------

namespace {

// Craft of `material` by `player` up to time t that the partner could see.
bool visible_craft(const GameSession& s, int player, int material, int t) {
  for (const CraftEvent& c : s.crafts) {
    if (c.player != player || c.material != material || c.time > t) continue;
    if (c.observed_by_partner || c.announced) return true;
    // A later truthful status report reveals it too.
    for (const MoveEvent& m : s.moves)
      if (m.player == player && m.move == MoveType::kInformStatus &&
          m.material == material && m.time >= c.time && m.time <= t)
        return true;
  }
  return false;
}

int hidden_craft_count(const GameSession& s, int player, int t) {
  int hidden = 0;
  for (const CraftEvent& c : s.crafts) {
    if (c.player != player || c.time > t) continue;
    if (c.observed_by_partner || c.announced) continue;
    bool reported = false;
    for (const MoveEvent& m : s.moves)
      if (m.player == player && m.move == MoveType::kInformStatus &&
          m.material == c.material && m.time >= c.time && m.time <= t)
        reported = true;
    if (!reported) ++hidden;
  }
  return hidden;
}

}  // namespace

ToMAnswer answer_status(const GameSession& s, int t, int subject, int player,
                        About about) {
  if (subject < 0 || subject >= s.plan.num_materials())
    throw std::invalid_argument("answer_status: unknown material");
  if (about == About::kSelf)
    return {last_craft_by(s, player, subject, t) ? kYes : kNo};
  const int q = partner_of(player);
  if (visible_craft(s, q, subject, t)) return {kYes};
  if (hidden_craft_count(s, q, t) == 0) return {kNo};
  return {kMaybe};
}

ToMAnswer answer_knowledge(const GameSession& s, int t, int subject, int player,
                           About about) {
  if (subject < 0 || subject >= s.plan.num_materials())
    throw std::invalid_argument("answer_knowledge: unknown material");
  if (s.plan.is_starting(subject))
    throw std::invalid_argument("answer_knowledge: starting materials are never asked");
  const auto recipe = recipe_of(s.plan, subject);
  if (about == About::kSelf) {
    const auto known = s.known_at(player, t);
    for (const PlanEdge& e : recipe)
      if (!contains_edge(known, e)) return {kNo};
    return {kYes};
  }
  const int q = partner_of(player);
  // Demonstrated knowledge: the partner crafted it in view or said they were
  // working on it or reported it done.
  if (visible_craft(s, q, subject, t)) return {kYes};
  for (const MoveEvent& m : s.moves)
    if (m.player == q && m.time <= t && m.material == subject &&
        (m.move == MoveType::kAnnounceTarget || m.move == MoveType::kInformStatus))
      return {kYes};
  // Edge-level evidence from shares in either direction.
  std::set<PlanEdge> evidence;
  for (const ShareEvent& sh : s.shares) {
    if (sh.time > t) continue;
    if (sh.to_player == q || sh.from_player == q) evidence.insert(sh.edge);
  }
  // The partner started with known0, but the asked player only learns that
  // through communication, so initial knowledge is not evidence here.
  bool covered = true;
  for (const PlanEdge& e : recipe) covered &= evidence.count(e) > 0;
  if (covered && !recipe.empty()) return {kYes};
  // An unanswered plea for this recipe is evidence of ignorance.
  int last_request = -1;
  for (const MoveEvent& m : s.moves)
    if (m.player == q && m.move == MoveType::kRequestKnowledge &&
        m.material == subject && m.time <= t)
      last_request = std::max(last_request, m.time);
  if (last_request >= 0) {
    bool resupplied = false;
    for (const ShareEvent& sh : s.shares)
      if (sh.to_player == q && sh.time > last_request && sh.time <= t &&
          sh.edge.src == subject)
        resupplied = true;
    if (!resupplied) return {kNo};
  }
  return {kMaybe};
}

ToMAnswer answer_intention(const GameSession& s, int t, int player, About about) {
  if (about == About::kSelf) {
    for (const WorkSpan& w : s.spans[player - 1])
      if (w.start <= t && t <= w.end) return {s.global_id(w.material)};
    return {kNotSure};
  }
  const int q = partner_of(player);
  int best_time = -1, best_material = -1;
  for (const MoveEvent& m : s.moves)
    if (m.player == q && m.move == MoveType::kAnnounceTarget && m.time <= t &&
        m.time > best_time) {
      best_time = m.time;
      best_material = m.material;
    }
  if (best_time >= 0 && t - best_time < s.interval_steps)
    return {s.global_id(best_material)};
  return {kNotSure};
}

// --- Dataset pipeline ---------------------------------------------------------

std::vector<GameSession> generate_sessions(const GameConfig& cfg, int count) {
  cfg.validate();
  if (count < 1) throw std::invalid_argument("generate_sessions: count >= 1");
  Rng master(cfg.seed);
  std::vector<GameSession> sessions;
  sessions.reserve(static_cast<std::size_t>(count));
  std::vector<int> globals(kMaterialVocab);
  for (int i = 0; i < kMaterialVocab; ++i) globals[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < count; ++i) {
    Rng rng = master.split(1000 + static_cast<std::uint64_t>(i));
    PlanGraph plan = generate_plan(cfg, rng);
    std::vector<int> shuffled = globals;
    rng.shuffle(shuffled);
    std::vector<int> assignment(shuffled.begin(),
                                shuffled.begin() + plan.num_materials());
    auto [e1, e2] = split_knowledge(plan, cfg.overlap_fraction, rng);
    auto tools = split_tools(cfg.num_tools, rng);
    GameSession s = simulate_session(std::move(plan), std::move(assignment),
                                     std::move(e1), std::move(e2), std::move(tools),
                                     cfg, rng);
    s.id = i;
    s.seed = splitmix64(cfg.seed ^ (1000 + static_cast<std::uint64_t>(i)));
    sessions.push_back(std::move(s));
  }
  // Seed-stable 60/20/20 labels.
  std::vector<int> order(sessions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng split_rng = master.split(0x5EED5EEDULL);
  split_rng.shuffle(order);
  const int n_train = static_cast<int>(std::llround(0.6 * count));
  const int n_val = static_cast<int>(std::llround(0.2 * count));
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const int idx = order[pos];
    const char* label = pos < static_cast<std::size_t>(n_train)         ? "train"
                        : pos < static_cast<std::size_t>(n_train + n_val) ? "val"
                                                                          : "test";
    sessions[static_cast<std::size_t>(idx)].split = label;
  }
  return sessions;
}

bool jointly_reachable(const PlanGraph& plan, const std::vector<PlanEdge>& known1,
                       const std::vector<int>& tools1,
                       const std::vector<PlanEdge>& known2,
                       const std::vector<int>& tools2) {
  const int n = plan.num_materials();
  std::vector<char> avail(static_cast<std::size_t>(n), 0);
  for (const Material& m : plan.materials)
    if (m.is_starting) avail[static_cast<std::size_t>(m.id)] = 1;
  auto can_craft = [&](const std::vector<PlanEdge>& known, const std::vector<int>& tools,
                       int m) {
    const auto recipe = recipe_of(plan, m);
    if (recipe.empty()) return false;
    for (const PlanEdge& e : recipe) {
      if (!contains_edge(known, e)) return false;
      if (std::find(tools.begin(), tools.end(), e.tool) == tools.end()) return false;
      if (!avail[static_cast<std::size_t>(e.dst)]) return false;
    }
    return true;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int m = 0; m < n; ++m) {
      if (avail[static_cast<std::size_t>(m)] || plan.is_starting(m)) continue;
      if (can_craft(known1, tools1, m) || can_craft(known2, tools2, m)) {
        avail[static_cast<std::size_t>(m)] = 1;
        changed = true;
      }
    }
  }
  return avail[static_cast<std::size_t>(plan.goal)] != 0;
}

// --- Serialization ------------------------------------------------------------

namespace {

json edges_to_json(const std::vector<PlanEdge>& edges) {
  json out = json::array();
  for (const PlanEdge& e : edges) out.push_back({e.src, e.dst, e.tool});
  return out;
}

std::vector<PlanEdge> edges_from_json(const json& j) {
  std::vector<PlanEdge> out;
  for (const auto& e : j) out.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
  return out;
}

json stream_to_json(const SparseStream& s) {
  json out = json::array();
  for (const auto& [t, vec] : s.entries) out.push_back({t, vec});
  return out;
}

SparseStream stream_from_json(const json& j) {
  SparseStream s;
  for (const auto& e : j)
    s.entries.emplace_back(e.at(0).get<int>(), e.at(1).get<std::vector<double>>());
  return s;
}

}  // namespace

std::string session_to_json(const GameSession& s) {
  json j;
  j["version"] = "v1";
  j["id"] = s.id;
  j["seed"] = s.seed;
  j["split"] = s.split;
  j["plan"] = json::parse(s.plan.to_json());
  j["material_globals"] = s.material_globals;
  j["known1"] = edges_to_json(s.known0[0]);
  j["known2"] = edges_to_json(s.known0[1]);
  j["tools1"] = s.tools[0];
  j["tools2"] = s.tools[1];
  j["length"] = s.length;
  j["interval_steps"] = s.interval_steps;
  j["complete"] = s.complete;
  j["crafts"] = json::array();
  for (const CraftEvent& c : s.crafts)
    j["crafts"].push_back({{"t", c.time},
                           {"player", c.player},
                           {"material", c.material},
                           {"observed", c.observed_by_partner},
                           {"announced", c.announced}});
  j["shares"] = json::array();
  for (const ShareEvent& sh : s.shares)
    j["shares"].push_back({{"t", sh.time},
                           {"from", sh.from_player},
                           {"to", sh.to_player},
                           {"edge", {sh.edge.src, sh.edge.dst, sh.edge.tool}}});
  j["moves"] = json::array();
  for (const MoveEvent& m : s.moves)
    j["moves"].push_back({{"t", m.time},
                          {"player", m.player},
                          {"move", static_cast<int>(m.move)},
                          {"material", m.material}});
  j["spans1"] = json::array();
  j["spans2"] = json::array();
  for (int p = 0; p < 2; ++p)
    for (const WorkSpan& w : s.spans[p])
      j[p == 0 ? "spans1" : "spans2"].push_back({w.start, w.end, w.material});
  j["questions"] = json::array();
  for (const QuestionEvent& q : s.questions)
    j["questions"].push_back({{"t", q.question.time},
                              {"kind", static_cast<int>(q.question.kind)},
                              {"subject", q.question.subject},
                              {"asked_of", q.question.asked_of},
                              {"about", static_cast<int>(q.question.about)},
                              {"answer", q.truth.label}});
  j["dialogue_feats"] = stream_to_json(s.dialogue_feats);
  j["visual_feats1"] = stream_to_json(s.visual_feats[0]);
  j["visual_feats2"] = stream_to_json(s.visual_feats[1]);
  return j.dump();
}

GameSession session_from_json(const std::string& line) {
  json j = json::parse(line);
  if (j.at("version").get<std::string>() != "v1")
    throw std::runtime_error("session_from_json: unsupported schema version");
  GameSession s;
  s.id = j.at("id").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.split = j.at("split").get<std::string>();
  s.plan = PlanGraph::from_json(j.at("plan").dump());
  s.material_globals = j.at("material_globals").get<std::vector<int>>();
  s.known0[0] = edges_from_json(j.at("known1"));
  s.known0[1] = edges_from_json(j.at("known2"));
  s.tools[0] = j.at("tools1").get<std::vector<int>>();
  s.tools[1] = j.at("tools2").get<std::vector<int>>();
  s.length = j.at("length").get<int>();
  s.interval_steps = j.at("interval_steps").get<int>();
  s.complete = j.at("complete").get<bool>();
  for (const auto& c : j.at("crafts"))
    s.crafts.push_back({c.at("t").get<int>(), c.at("player").get<int>(),
                        c.at("material").get<int>(), c.at("observed").get<bool>(),
                        c.at("announced").get<bool>()});
  for (const auto& sh : j.at("shares")) {
    const auto& e = sh.at("edge");
    s.shares.push_back({sh.at("t").get<int>(), sh.at("from").get<int>(),
                        sh.at("to").get<int>(),
                        {e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()}});
  }
  for (const auto& m : j.at("moves"))
    s.moves.push_back({m.at("t").get<int>(), m.at("player").get<int>(),
                       static_cast<MoveType>(m.at("move").get<int>()),
                       m.at("material").get<int>()});
  for (int p = 0; p < 2; ++p)
    for (const auto& w : j.at(p == 0 ? "spans1" : "spans2"))
      s.spans[p].push_back(
          {w.at(0).get<int>(), w.at(1).get<int>(), w.at(2).get<int>()});
  for (const auto& q : j.at("questions"))
    s.questions.push_back({{static_cast<ToMKind>(q.at("kind").get<int>()),
                            q.at("subject").get<int>(), q.at("asked_of").get<int>(),
                            static_cast<About>(q.at("about").get<int>()),
                            q.at("t").get<int>()},
                           {q.at("answer").get<int>()}});
  s.dialogue_feats = stream_from_json(j.at("dialogue_feats"));
  s.visual_feats[0] = stream_from_json(j.at("visual_feats1"));
  s.visual_feats[1] = stream_from_json(j.at("visual_feats2"));
  return s;
}

void serialize_dataset(const std::vector<GameSession>& sessions, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("serialize_dataset: cannot open " + path);
  for (const GameSession& s : sessions) os << session_to_json(s) << "\n";
  if (!os) throw std::runtime_error("serialize_dataset: write failed for " + path);
}

DatasetSplit load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
  DatasetSplit split;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      GameSession s = session_from_json(line);
      if (s.split == "train")
        split.train.push_back(std::move(s));
      else if (s.split == "val")
        split.val.push_back(std::move(s));
      else if (s.split == "test")
        split.test.push_back(std::move(s));
      else
        throw std::runtime_error("unknown split label '" + s.split + "'");
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("load_dataset: parse error in " + path + " line " +
                               std::to_string(line_no) + " byte " +
                               std::to_string(e.byte) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("load_dataset: bad session in " + path + " line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  return split;
}

}  // namespace planlink
