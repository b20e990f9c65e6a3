#include <doctest.h>

#include <array>
#include <vector>

#include "qnet/protocol.hpp"

using qnet::Fraction;
using qnet::MassMessage;
using qnet::NodeState;
using qnet::TargetDistribution;
using qnet::Transmission;
using qnet::Trigger;
using qnet::VoteMessage;
using qnet::VoteSource;

namespace {

TargetDistribution dist_for(std::vector<int> neighbors, int self) {
  return qnet::assign_probabilities(static_cast<int>(neighbors.size()), neighbors, self);
}

}  // namespace

TEST_SUITE_BEGIN("protocol");

TEST_CASE("probability assignment is uniform over neighbors plus self") {
  const std::vector<int> neighbors{2, 5, 7};
  const TargetDistribution d = qnet::assign_probabilities(3, neighbors, 1);
  CHECK(d.targets == std::vector<int>{2, 5, 7, 1});  // self last
  CHECK(d.probability == Fraction(1, 4));

  const TargetDistribution single = dist_for({0}, 3);
  CHECK(single.targets == std::vector<int>{0, 3});
  CHECK(single.probability == Fraction(1, 2));

  for (int deg = 1; deg <= 50; ++deg) {
    std::vector<int> nbrs;
    for (int i = 0; i < deg; ++i) nbrs.push_back(i);
    const TargetDistribution dd = qnet::assign_probabilities(deg, nbrs, deg);
    // slot count times the per-slot probability is exactly one
    CHECK(Fraction(static_cast<std::int64_t>(dd.targets.size()), 1 + deg) == Fraction(1, 1));
  }

  CHECK_THROWS_AS(qnet::assign_probabilities(0, std::vector<int>{}, 0), std::invalid_argument);
  CHECK_THROWS_AS(qnet::assign_probabilities(2, neighbors, 1), std::invalid_argument);
}

TEST_CASE("target choice consumes one draw and maps the top draw to self") {
  const TargetDistribution d = dist_for({0, 2}, 4);
  qnet::StubSelfLoopRng stub;
  CHECK(d.choose(stub) == 4);
  qnet::SplitMixRng a(9), b(9);
  CHECK(d.choose(a) == d.choose(b));
  a.next_u64();
  // one draw consumed per choice keeps the streams aligned
  b.next_u64();
  CHECK(d.choose(a) == d.choose(b));
}

TEST_CASE("average-degree initialization") {
  NodeState node;
  qnet::SplitMixRng rng(4);
  const TargetDistribution d = dist_for({1, 2, 3, 4, 5, 6, 7}, 0);
  const Transmission t = qnet::init_average_degree(node, 7, d, rng);
  CHECK(node.state_y == 7);
  CHECK(node.state_z == 1);
  CHECK(node.state_q == Fraction(7, 1));
  CHECK(node.mass_y == 0);
  CHECK(node.mass_z == 0);
  CHECK(t.mass.y == 7);
  CHECK(t.mass.z == 1);

  qnet::SplitMixRng again(4);
  NodeState node2;
  CHECK(qnet::init_average_degree(node2, 7, d, again).target == t.target);
}

TEST_CASE("network-size initialization") {
  NodeState leader, follower;
  qnet::init_network_size(leader, true);
  qnet::init_network_size(follower, false);
  CHECK(leader.mass_y == 1);
  CHECK(leader.mass_z == 1);
  CHECK(leader.state_y == 1);
  CHECK(leader.state_z == 1);
  CHECK(follower.mass_y == 0);
  CHECK(follower.mass_z == 1);
  CHECK(follower.state_y == 0);
  CHECK(follower.state_z == 1);

  // one leader among n nodes: mass sums are (1, n)
  const int n = 9;
  std::int64_t sum_y = 0, sum_z = 0;
  for (int v = 0; v < n; ++v) {
    NodeState s;
    qnet::init_network_size(s, v == 3);
    sum_y += s.mass_y;
    sum_z += s.mass_z;
  }
  CHECK(sum_y == 1);
  CHECK(sum_z == n);
}

TEST_CASE("mass merge sums componentwise") {
  NodeState node;
  const std::vector<MassMessage> two{{3, 1}, {5, 2}};
  qnet::merge_received(node, two);
  CHECK(node.mass_y == 8);
  CHECK(node.mass_z == 3);

  NodeState held;
  held.mass_y = 2;
  held.mass_z = 1;
  qnet::merge_received(held, std::vector<MassMessage>{});
  CHECK(held.mass_y == 2);
  CHECK(held.mass_z == 1);

  NodeState corr;
  corr.mass_y = 4;
  corr.mass_z = 2;
  qnet::merge_received(corr, std::vector<MassMessage>{{-1, 0}});
  CHECK(corr.mass_y == 3);
  CHECK(corr.mass_z == 2);
}

TEST_CASE("state update and transmission under geq1") {
  NodeState node;
  node.mass_y = 8;
  node.mass_z = 3;
  qnet::SplitMixRng rng(2);
  const TargetDistribution d = dist_for({1}, 0);
  auto sent = qnet::update_state_and_transmit(node, {Trigger::geq1, false}, d, rng);
  REQUIRE(sent.has_value());
  CHECK(sent->mass.y == 8);
  CHECK(sent->mass.z == 3);
  CHECK(node.state_y == 8);
  CHECK(node.state_z == 3);
  CHECK(node.state_q == Fraction(8, 3));
  CHECK(node.mass_y == 0);
  CHECK(node.mass_z == 0);

  NodeState idle;
  CHECK_FALSE(qnet::update_state_and_transmit(idle, {Trigger::geq1, false}, d, rng).has_value());
}

TEST_CASE("gt1 retains unit mass without adopting it") {
  NodeState node;
  node.state_y = 5;
  node.state_z = 2;
  node.state_q = Fraction(5, 2);
  node.mass_y = 1;
  node.mass_z = 1;
  qnet::SplitMixRng rng(2);
  const TargetDistribution d = dist_for({1}, 0);
  CHECK_FALSE(qnet::update_state_and_transmit(node, {Trigger::gt1, false}, d, rng).has_value());
  CHECK(node.mass_y == 1);
  CHECK(node.mass_z == 1);
  CHECK(node.state_y == 5);
  CHECK(node.state_z == 2);

  node.mass_y += 1;
  node.mass_z += 1;  // now z = 2 > 1
  auto sent = qnet::update_state_and_transmit(node, {Trigger::gt1, false}, d, rng);
  REQUIRE(sent.has_value());
  CHECK(node.state_z == 2);
  CHECK(node.state_y == 2);
}

TEST_CASE("correction tokens forward pure-y mass without touching the state") {
  NodeState node;
  node.state_y = 3;
  node.state_z = 4;
  node.state_q = Fraction(3, 4);
  node.mass_y = -1;
  node.mass_z = 0;
  qnet::SplitMixRng rng(6);
  const TargetDistribution d = dist_for({1}, 0);
  auto sent = qnet::update_state_and_transmit(node, {Trigger::geq1, true}, d, rng);
  REQUIRE(sent.has_value());
  CHECK(sent->mass.y == -1);
  CHECK(sent->mass.z == 0);
  CHECK(node.state_y == 3);
  CHECK(node.state_z == 4);
  CHECK(node.mass_y == 0);

  NodeState zero;
  CHECK_FALSE(qnet::update_state_and_transmit(zero, {Trigger::geq1, true}, d, rng).has_value());
}

TEST_CASE("vote reset takes the ratio or the numerator") {
  NodeState node;
  node.state_y = 206;
  node.state_z = 20;
  qnet::vote_reset(node, VoteSource::ratio);
  CHECK(node.vote_min == Fraction(206, 20));
  CHECK(node.vote_max == Fraction(206, 20));

  node.state_y = 1;
  node.state_z = 20;
  qnet::vote_reset(node, VoteSource::numerator);
  CHECK(node.vote_min == Fraction(1, 1));
  CHECK(node.vote_max == Fraction(1, 1));

  qnet::vote_reset(node, VoteSource::numerator);  // idempotent
  CHECK(node.vote_min == Fraction(1, 1));
  CHECK(node.vote_max == Fraction(1, 1));
}

TEST_CASE("vote merge keeps exact extremes") {
  NodeState node;
  node.vote_min = Fraction(3, 2);
  node.vote_max = Fraction(3, 2);
  const std::vector<VoteMessage> received{{Fraction(10, 7), Fraction(10, 7)},
                                          {Fraction(3, 2), Fraction(3, 2)}};
  qnet::vote_merge(node, received);
  CHECK(node.vote_max == Fraction(3, 2));
  CHECK(node.vote_min == Fraction(10, 7));

  NodeState same;
  same.vote_min = Fraction(2, 4);
  same.vote_max = Fraction(2, 4);
  qnet::vote_merge(same, std::vector<VoteMessage>{{Fraction(1, 2), Fraction(1, 2)}});
  CHECK(same.vote_max == same.vote_min);

  NodeState alone;
  alone.vote_min = Fraction(5, 3);
  alone.vote_max = Fraction(5, 3);
  qnet::vote_merge(alone, std::vector<VoteMessage>{});
  CHECK(alone.vote_min == Fraction(5, 3));
  CHECK(alone.vote_max == Fraction(5, 3));
}

TEST_CASE("vote merge is commutative, associative and idempotent") {
  qnet::SplitMixRng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<VoteMessage> votes;
    for (int i = 0; i < 6; ++i) {
      const Fraction f(static_cast<std::int64_t>(rng.next_u64() % 40) - 20,
                       1 + static_cast<std::int64_t>(rng.next_u64() % 9));
      votes.push_back({f, f});
    }
    NodeState forward;
    forward.vote_min = votes[0].min_val;
    forward.vote_max = votes[0].max_val;
    qnet::vote_merge(forward, std::span<const VoteMessage>(votes).subspan(1));

    NodeState backward;
    backward.vote_min = votes[5].min_val;
    backward.vote_max = votes[5].max_val;
    std::vector<VoteMessage> reversed(votes.rbegin() + 1, votes.rend());
    qnet::vote_merge(backward, reversed);

    NodeState twice = forward;
    qnet::vote_merge(twice, votes);  // merging the same multiset again changes nothing

    CHECK(forward.vote_min == backward.vote_min);
    CHECK(forward.vote_max == backward.vote_max);
    CHECK(twice.vote_min == forward.vote_min);
    CHECK(twice.vote_max == forward.vote_max);
  }
}

TEST_CASE("stop check is exact and marks the halt") {
  NodeState node;
  node.vote_min = Fraction(206, 20);
  node.vote_max = Fraction(206, 20);
  CHECK(qnet::stop_check(node));
  CHECK(node.halted);

  NodeState going;
  going.vote_min = Fraction(0, 1);
  going.vote_max = Fraction(1, 1);
  CHECK_FALSE(qnet::stop_check(going));
  CHECK_FALSE(going.halted);

  NodeState mixed;
  mixed.vote_min = Fraction(1, 2);
  mixed.vote_max = Fraction(2, 4);
  CHECK(qnet::stop_check(mixed));  // representation independent
}

TEST_CASE("election round reset draws only at flagged nodes") {
  qnet::SplitMixRng rng(12);
  NodeState active;
  active.leader_flag = true;
  qnet::leader_round_reset(active, 15, rng);
  CHECK(active.eta >= 0);
  CHECK(active.eta <= 15);
  CHECK(active.leader_max == active.eta);

  NodeState follower;
  follower.leader_flag = false;
  qnet::leader_round_reset(follower, 15, rng);
  CHECK(follower.eta == -1);
  CHECK(follower.leader_max == -1);

  CHECK_THROWS_AS(qnet::leader_round_reset(active, 0, rng), std::invalid_argument);

  qnet::SplitMixRng r1(33), r2(33);
  NodeState a, b;
  a.leader_flag = b.leader_flag = true;
  qnet::leader_round_reset(a, 255, r1);
  qnet::leader_round_reset(b, 255, r2);
  CHECK(a.eta == b.eta);
}

TEST_CASE("election max step and conclusion") {
  NodeState node;
  node.leader_max = 7;
  qnet::leader_max_step(node, std::vector<qnet::LeaderValue>{3, -1});
  CHECK(node.leader_max == 7);

  NodeState low;
  low.leader_max = -1;
  qnet::leader_max_step(low, std::vector<qnet::LeaderValue>{12});
  CHECK(low.leader_max == 12);

  NodeState winner;
  winner.leader_flag = true;
  winner.eta = 7;
  winner.leader_max = 7;
  qnet::leader_round_conclude(winner);
  CHECK(winner.leader_flag);

  NodeState loser;
  loser.leader_flag = true;
  loser.eta = 3;
  loser.leader_max = 7;
  qnet::leader_round_conclude(loser);
  CHECK_FALSE(loser.leader_flag);
}

TEST_CASE("a full tie survives the round") {
  // n = 2, both draw the same value: neither node clears its flag.
  NodeState a, b;
  a.leader_flag = b.leader_flag = true;
  a.eta = a.leader_max = 7;
  b.eta = b.leader_max = 7;
  qnet::leader_max_step(a, std::vector<qnet::LeaderValue>{b.leader_max});
  qnet::leader_max_step(b, std::vector<qnet::LeaderValue>{a.leader_max});
  qnet::leader_round_conclude(a);
  qnet::leader_round_conclude(b);
  CHECK(a.leader_flag);
  CHECK(b.leader_flag);
}

// On the directed 3-cycle every draw assignment reaches the global maximum at
// every node within D = 2 synchronous hops.
TEST_CASE("max consensus covers the 3-cycle in diameter steps for all draws") {
  for (int e0 = 0; e0 <= 2; ++e0)
    for (int e1 = 0; e1 <= 2; ++e1)
      for (int e2 = 0; e2 <= 2; ++e2) {
        std::array<NodeState, 3> nodes;
        const std::array<int, 3> etas{e0, e1, e2};
        for (int v = 0; v < 3; ++v) {
          nodes[v].leader_flag = true;
          nodes[v].eta = etas[v];
          nodes[v].leader_max = etas[v];
        }
        const int global_max = std::max({e0, e1, e2});
        for (int step = 0; step < 2; ++step) {
          std::array<qnet::LeaderValue, 3> snapshot{nodes[0].leader_max, nodes[1].leader_max,
                                                    nodes[2].leader_max};
          // in-neighbor of v on the cycle v0 -> v1 -> v2 -> v0 is v-1
          for (int v = 0; v < 3; ++v) {
            const std::vector<qnet::LeaderValue> received{snapshot[(v + 2) % 3]};
            qnet::leader_max_step(nodes[v], received);
          }
        }
        for (int v = 0; v < 3; ++v) CHECK(nodes[v].leader_max == global_max);
      }
}

TEST_SUITE_END();
