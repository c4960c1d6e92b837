#pragma once
// Synthetic two-player crafting sessions: plan generation, complementary
// knowledge/tool splits, a scripted session simulator, and ground-truth
// answers for the three belief tasks. The simulator is deterministic given
// a single 64-bit seed; every "belief" answer is derived from an explicit
// observability and communication model over the event trace.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "planlink/plangraph.hpp"
#include "planlink/rng.hpp"

namespace planlink {

// Global vocabularies shared by every game.
inline constexpr int kMaterialVocab = 21;  // fixed material universe
inline constexpr int kNotSure = kMaterialVocab;
inline constexpr int kIntentionClasses = kMaterialVocab + 1;  // + NOT_SURE
inline constexpr int kMoveVocab = 8;
inline constexpr int kDialogueFeatDim = 16;
inline constexpr int kVisualFeatDim = 16;

// 3-class answers for Status and Knowledge.
inline constexpr int kYes = 0;
inline constexpr int kNo = 1;
inline constexpr int kMaybe = 2;

enum class MoveType : int {
  kRequestKnowledge = 0,
  kShareEdge = 1,
  kAnnounceCraft = 2,
  kAnnounceTarget = 3,
  kAck = 4,
  kAskStatus = 5,
  kInformStatus = 6,
  kNoop = 7,
};

enum class ToMKind : int { kStatus = 0, kKnowledge = 1, kIntention = 2 };
enum class About : int { kSelf = 0, kPartner = 1 };

struct GameConfig {
  int num_materials = 0;  // 0 = draw per session from [5, 10]
  int num_steps = 0;      // 0 = draw a feasible count from [7, 11]
  int num_tools = 4;
  double question_interval = 75.0;  // seconds between question pop-ups
  double timestep = 1.0;            // seconds per tick
  double share_probability = 0.8;   // per question interval
  double overlap_fraction = 0.25;   // of edges known to both players
  std::uint64_t seed = 1;

  // Simulator mechanics.
  int craft_ticks_min = 15;
  int craft_ticks_max = 45;
  double observe_probability = 0.5;   // partner directly sees a craft event
  double announce_probability = 0.6;  // crafter announces target/completion
  int max_intervals = 8;              // session cap, in question intervals

  int interval_steps() const;
  int max_steps() const { return max_intervals * interval_steps(); }
  void validate() const;
};

struct ToMQuestion {
  ToMKind kind = ToMKind::kStatus;
  int subject = 0;   // local material id
  int asked_of = 1;  // player index, 1 or 2
  About about = About::kSelf;
  int time = 0;      // timestep index
};

struct ToMAnswer {
  // Status/Knowledge: kYes/kNo/kMaybe. Intention: global material id or kNotSure.
  int label = 0;
};

struct QuestionEvent {
  ToMQuestion question;
  ToMAnswer truth;
};

struct CraftEvent {
  int time = 0;
  int player = 1;
  int material = 0;               // local id
  bool observed_by_partner = false;
  bool announced = false;
};

struct ShareEvent {
  int time = 0;
  int from_player = 1;
  int to_player = 2;
  PlanEdge edge;
};

struct MoveEvent {
  int time = 0;
  int player = 1;
  MoveType move = MoveType::kNoop;
  int material = -1;  // local id payload, -1 when not applicable
};

struct WorkSpan {
  int start = 0;
  int end = 0;  // inclusive completion/truncation tick
  int material = 0;
};

// Sparse per-timestep feature streams; a missing timestep means the modality
// is absent there and the model input is the zero vector.
struct SparseStream {
  std::vector<std::pair<int, std::vector<double>>> entries;  // (t, vector), t ascending
};

struct GameSession {
  int id = 0;
  std::uint64_t seed = 0;
  std::string split;  // train / val / test
  PlanGraph plan;
  std::vector<int> material_globals;  // local id -> global id in [0, kMaterialVocab)
  std::vector<PlanEdge> known0[2];    // initial knowledge per player (sorted)
  std::vector<int> tools[2];          // tool split per player (sorted)
  int length = 0;                     // T, in ticks
  int interval_steps = 75;            // question cadence the session ran with
  bool complete = false;

  std::vector<CraftEvent> crafts;
  std::vector<ShareEvent> shares;
  std::vector<MoveEvent> moves;  // shared chat, at most one per tick
  std::vector<WorkSpan> spans[2];
  std::vector<QuestionEvent> questions;

  SparseStream dialogue_feats;   // shared chat embedding stand-in
  SparseStream visual_feats[2];  // per-player view stand-in

  PartialPlan partial(int player) const;
  int global_id(int local) const { return material_globals[static_cast<std::size_t>(local)]; }
  // Initial knowledge plus every share received up to and including t.
  std::vector<PlanEdge> known_at(int player, int t) const;
  const std::vector<MoveEvent>& chat() const { return moves; }
};

struct DatasetSplit {
  std::vector<GameSession> train;
  std::vector<GameSession> val;
  std::vector<GameSession> test;

  std::size_t size() const { return train.size() + val.size() + test.size(); }
};

// --- Generation --------------------------------------------------------------

// Deterministic plan generator honoring every PlanGraph invariant. Throws
// std::invalid_argument when a pinned (num_materials, num_steps) pair is
// structurally infeasible.
PlanGraph generate_plan(const GameConfig& cfg, Rng& rng);

// Covers E with two overlapping hands: E1 u E2 = E and |E1 n E2| =
// round(overlap * |E|), capped at |E| - 2 when overlap < 1 so both hands
// stay proper subsets. Throws on |E| < 2.
std::pair<std::vector<PlanEdge>, std::vector<PlanEdge>> split_knowledge(
    const PlanGraph& plan, double overlap_fraction, Rng& rng);

// Partitions tool ids into two non-empty hands.
std::pair<std::vector<int>, std::vector<int>> split_tools(int num_tools, Rng& rng);

GameSession simulate_session(PlanGraph plan, std::vector<int> material_globals,
                             std::vector<PlanEdge> known1, std::vector<PlanEdge> known2,
                             std::pair<std::vector<int>, std::vector<int>> tool_split,
                             const GameConfig& cfg, Rng& rng);

// Full pipeline for `count` sessions with seed-stable 60/20/20 split labels.
std::vector<GameSession> generate_sessions(const GameConfig& cfg, int count);

// --- Ground-truth answers (recomputable from a finished session) -------------

ToMAnswer answer_status(const GameSession& s, int t, int subject, int player, About about);
ToMAnswer answer_knowledge(const GameSession& s, int t, int subject, int player, About about);
ToMAnswer answer_intention(const GameSession& s, int t, int player, About about);

// --- Serialization ------------------------------------------------------------

// JSON-lines, one session per line, schema version "v1".
void serialize_dataset(const std::vector<GameSession>& sessions, const std::string& path);
DatasetSplit load_dataset(const std::string& path);
std::string session_to_json(const GameSession& s);
GameSession session_from_json(const std::string& line);

// Joint knowledge/tool closure: a material becomes craftable once some player
// knows its whole recipe, holds the recipe's tools, and every ingredient is
// available. Completion oracle for share-free sessions.
bool jointly_reachable(const PlanGraph& plan, const std::vector<PlanEdge>& known1,
                       const std::vector<int>& tools1,
                       const std::vector<PlanEdge>& known2,
                       const std::vector<int>& tools2);

}  // namespace planlink
