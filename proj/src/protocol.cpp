#include "qnet/protocol.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace qnet {

TargetDistribution assign_probabilities(int out_degree, std::span<const int> out_neighbors,
                                        int self) {
  if (out_degree < 1)
    throw std::invalid_argument("assign_probabilities: out_degree must be >= 1");
  if (out_degree != static_cast<int>(out_neighbors.size()))
    throw std::invalid_argument("assign_probabilities: out_degree != |out_neighbors|");
  TargetDistribution dist;
  dist.targets.assign(out_neighbors.begin(), out_neighbors.end());
  std::sort(dist.targets.begin(), dist.targets.end());
  dist.targets.push_back(self);
  dist.probability = Fraction(1, 1 + out_degree);
  return dist;
}

Transmission init_average_degree(NodeState& node, int out_degree, const TargetDistribution& dist,
                                 Rng& rng) {
  node.state_y = out_degree;
  node.state_z = 1;
  node.state_q = Fraction(out_degree, 1);
  node.mass_y = 0;
  node.mass_z = 0;
  return Transmission{dist.choose(rng), MassMessage{out_degree, 1}};
}

void init_network_size(NodeState& node, bool is_leader) {
  node.mass_y = is_leader ? 1 : 0;
  node.mass_z = 1;
  node.state_y = node.mass_y;
  node.state_z = 1;
  node.state_q = Fraction(node.state_y, 1);
}

void merge_received(NodeState& node, std::span<const MassMessage> delivered) {
  assert(!node.halted);
  for (const auto& m : delivered) {
    node.mass_y += m.y;
    node.mass_z += m.z;
  }
}

std::optional<Transmission> update_state_and_transmit(NodeState& node, TransmitPolicy policy,
                                                      const TargetDistribution& dist, Rng& rng) {
  assert(!node.halted);
  const bool adopt =
      policy.trigger == Trigger::geq1 ? node.mass_z >= 1 : node.mass_z > 1;
  if (adopt) {
    node.state_y = node.mass_y;
    node.state_z = node.mass_z;
    node.state_q = Fraction(node.mass_y, node.mass_z);
  }
  const bool send = adopt || (policy.correction_tokens && node.mass_y != 0);
  if (!send) return std::nullopt;
  Transmission t{dist.choose(rng), MassMessage{node.mass_y, node.mass_z}};
  node.mass_y = 0;
  node.mass_z = 0;
  return t;
}

void vote_reset(NodeState& node, VoteSource source) {
  const Fraction v = source == VoteSource::ratio ? Fraction(node.state_y, node.state_z)
                                                 : Fraction(node.state_y, 1);
  node.vote_min = v;
  node.vote_max = v;
}

void vote_merge(NodeState& node, std::span<const VoteMessage> received) {
  for (const auto& v : received) {
    node.vote_max = max(node.vote_max, v.max_val);
    node.vote_min = min(node.vote_min, v.min_val);
  }
}

bool stop_check(NodeState& node) {
  if (node.vote_max == node.vote_min) {
    node.halted = true;
    return true;
  }
  return false;
}

void leader_round_reset(NodeState& node, int eta_max, Rng& rng) {
  if (eta_max < 1) throw std::invalid_argument("leader_round_reset: eta_max must be >= 1");
  if (node.leader_flag) {
    node.eta = rng.uniform_int(eta_max + 1);
    node.leader_max = node.eta;
  } else {
    node.eta = -1;
    node.leader_max = -1;
  }
}

void leader_max_step(NodeState& node, std::span<const LeaderValue> received) {
  for (LeaderValue v : received) node.leader_max = std::max(node.leader_max, v);
}

void leader_round_conclude(NodeState& node) {
  if (node.leader_max != node.eta) node.leader_flag = false;
}

}  // namespace qnet
