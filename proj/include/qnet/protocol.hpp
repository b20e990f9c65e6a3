#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qnet/fraction.hpp"
#include "qnet/rng.hpp"

namespace qnet {

/// Condition under which a node adopts its held mass as state and forwards
/// it. geq1 (z >= 1) is the default; gt1 (z > 1) follows the stricter
/// algorithm text and can freeze the whole network (see SimWorld deadlock
/// detection), so it is only offered for fidelity experiments.
enum class Trigger { geq1, gt1 };

/// What a node votes on at the start of each voting cycle: the full state
/// ratio y_s/z_s, or the numerator y_s alone.
enum class VoteSource { ratio, numerator };

/// Mass pair in flight. y may be negative for correction tokens.
struct MassMessage {
  std::int64_t y = 0;
  std::int64_t z = 0;
};

/// Min/max votes travel as two integer pairs, never as floats.
struct VoteMessage {
  Fraction max_val;
  Fraction min_val;
};

/// Election value in flight; -1 marks a follower.
using LeaderValue = std::int64_t;

/// Per-node protocol state. All fields live across rounds; transitions are
/// the free functions below, which are pure in (state, inputs, rng draws).
struct NodeState {
  std::int64_t mass_y = 0;  // held mass numerator y_j
  std::int64_t mass_z = 0;  // held mass denominator z_j (>= 0; counters only)
  std::int64_t state_y = 0; // last adopted mass y_j^s
  std::int64_t state_z = 1; // last adopted mass z_j^s (>= 1)
  Fraction state_q{0, 1};   // y_j^s / z_j^s
  Fraction vote_min{0, 1};  // m_j
  Fraction vote_max{0, 1};  // M_j
  bool leader_flag = false;
  std::int64_t eta = -1;        // election draw; -1 while follower
  std::int64_t leader_max = -1; // running election max M'_j
  bool halted = false;
};

/// Uniform choice over the out-neighbors plus a virtual self-loop. The slot
/// order (neighbors ascending, self last) and the single-draw selection are
/// part of the reproducibility contract.
struct TargetDistribution {
  std::vector<int> targets;
  Fraction probability{0, 1};  // 1/(1+out_degree), identical for every slot

  int choose(Rng& rng) const { return targets[rng.uniform_int(static_cast<int>(targets.size()))]; }
};

/// Builds the per-node forwarding distribution: each listed out-neighbor and
/// the node itself get probability 1/(1+out_degree) exactly.
/// Throws std::invalid_argument when out_degree is 0 or != |out_neighbors|.
TargetDistribution assign_probabilities(int out_degree, std::span<const int> out_neighbors,
                                        int self);

struct Transmission {
  int target = -1;
  MassMessage mass;
};

struct TransmitPolicy {
  Trigger trigger = Trigger::geq1;
  bool correction_tokens = false;  // also forward pure-y mass (z = 0, y != 0)
};

/// Average-degree initialization: state and mass become (out_degree, 1) and
/// the mass is transmitted immediately (a round-0 send, delivered in round 1).
Transmission init_average_degree(NodeState& node, int out_degree, const TargetDistribution& dist,
                                 Rng& rng);

/// Network-size initialization: leaders start with mass (1,1), followers with
/// (0,1); state mirrors the mass. The first transmission happens through the
/// regular round-1 transmit rule.
void init_network_size(NodeState& node, bool is_leader);

/// Sums delivered mass pairs into the held mass.
void merge_received(NodeState& node, std::span<const MassMessage> delivered);

/// State adoption + forwarding. Under geq1, mass with z >= 1 is adopted as
/// state and forwarded (held mass zeroed); under gt1 the same applies only
/// for z > 1, and mass with z == 1 is silently retained. With
/// correction_tokens set, mass with z == 0 but y != 0 is forwarded too,
/// without touching the state.
std::optional<Transmission> update_state_and_transmit(NodeState& node, TransmitPolicy policy,
                                                      const TargetDistribution& dist, Rng& rng);

/// Start of a voting cycle: both votes become the state ratio (ratio mode) or
/// the state numerator over 1 (numerator mode).
void vote_reset(NodeState& node, VoteSource source);

/// One synchronous min/max-consensus hop over the received votes.
void vote_merge(NodeState& node, std::span<const VoteMessage> received);

/// End of a voting cycle: returns vote_max == vote_min (exact, representation
/// independent) and marks the node halted when they agree.
bool stop_check(NodeState& node);

/// Start of an election round: still-flagged nodes draw eta uniformly from
/// {0..eta_max}; followers take -1. Throws std::invalid_argument if
/// eta_max < 1.
void leader_round_reset(NodeState& node, int eta_max, Rng& rng);

/// One synchronous max-consensus hop over received election values.
void leader_max_step(NodeState& node, std::span<const LeaderValue> received);

/// End of an election round: nodes whose draw lost the max clear their flag.
void leader_round_conclude(NodeState& node);

}  // namespace qnet
