#include <doctest.h>

#include <string>
#include <vector>

#include "qnet/digraph.hpp"
#include "qnet/engine.hpp"
#include "qnet/sweep.hpp"
#include "qnet/trace.hpp"

using qnet::Digraph;
using qnet::Fraction;
using qnet::Mode;
using qnet::RoundTrace;
using qnet::SimConfig;
using qnet::TrialResult;
using qnet::Trigger;
using qnet::VoteSource;

namespace {

struct ConstZeroRng final : qnet::Rng {
  std::uint64_t next_u64() override { return 0; }
};

SimConfig base_config(Mode mode, int d_prime) {
  SimConfig cfg;
  cfg.mode = mode;
  cfg.d_prime = d_prime;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("engine");

TEST_CASE("config resolution and validation") {
  const Digraph cycle = qnet::directed_cycle(5);
  SimConfig cfg;
  cfg.d_prime = 0;
  SimConfig resolved = qnet::resolve_config(cycle, cfg);
  CHECK(resolved.d_prime == 4);  // exact diameter
  CHECK(resolved.max_steps == 100 * 5 * 4);

  SimConfig bad = cfg;
  bad.u_v = 0;
  CHECK_THROWS_AS(qnet::resolve_config(cycle, bad), std::invalid_argument);

  SimConfig tight = cfg;
  tight.mode = Mode::size_seq;
  tight.u_v = 30;
  tight.d_prime = 4;
  tight.max_steps = 120;  // == u_v * d_prime
  CHECK_THROWS_AS(qnet::resolve_config(cycle, tight), std::invalid_argument);

  SimConfig per_node = cfg;
  per_node.eta_max_per_node = {3, 3};  // wrong length
  CHECK_THROWS_AS(qnet::resolve_config(cycle, per_node), std::invalid_argument);

  SimConfig low = cfg;
  low.d_prime = 2;
  const auto findings = qnet::check_assumptions(cycle, low);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].find("below the graph diameter") != std::string::npos);
  CHECK(qnet::check_assumptions(cycle, resolved).empty());
}

TEST_CASE("average degree on the directed 3-cycle halts at the first boundary") {
  const Digraph g = qnet::directed_cycle(3);
  qnet::SplitMixRng rng(1);
  RoundTrace trace;
  const TrialResult r = qnet::run_average_degree(g, base_config(Mode::avg_degree, 2), rng, &trace);
  CHECK(r.steps_halted == 2);
  CHECK(r.steps_converged == 1);
  CHECK(r.correct);
  for (const auto& [y, z] : r.final_states) CHECK(Fraction(y, z) == Fraction(1, 1));
  CHECK(qnet::ground_truth_verify(g, base_config(Mode::avg_degree, 2), r, &trace).ok());
}

TEST_CASE("average degree on the complete 3-node digraph") {
  const Digraph g = qnet::complete_digraph(3);
  qnet::SplitMixRng rng(5);
  const TrialResult r = qnet::run_average_degree(g, base_config(Mode::avg_degree, 1), rng);
  CHECK(r.correct);
  CHECK(r.steps_halted == 1);
  for (const auto& [y, z] : r.final_states) CHECK(Fraction(y, z) == Fraction(6, 3));
}

TEST_CASE("average degree on a 20-node instance is exact and verified") {
  qnet::SplitMixRng graph_rng(1);
  const Digraph g = qnet::generate_random_digraph(20, 0.5, graph_rng).graph;
  const SimConfig cfg = base_config(Mode::avg_degree, 4);
  qnet::SplitMixRng rng(2);
  RoundTrace trace;
  const TrialResult r = qnet::run_average_degree(g, cfg, rng, &trace);
  CHECK(r.correct);
  CHECK(r.steps_halted % 4 == 0);
  CHECK(r.steps_halted - r.steps_converged <= 2 * 4);
  const Fraction target(g.total_out_degree(), 20);
  for (const auto& [y, z] : r.final_states) CHECK(Fraction(y, z) == target);
  CHECK(qnet::ground_truth_verify(g, cfg, r, &trace).ok());
}

TEST_CASE("identical seeds give byte-identical traces; replay reproduces the result") {
  qnet::SplitMixRng graph_rng(9);
  const Digraph g = qnet::generate_random_digraph(12, 0.4, graph_rng).graph;
  for (Mode mode : {Mode::avg_degree, Mode::size_seq, Mode::size_par_oracle,
                    Mode::size_par_correction, Mode::size_anonymous}) {
    SimConfig cfg = base_config(mode, 4);
    cfg.u_v = 8;
    cfg.eta_max = 31;
    RoundTrace t1, t2;
    qnet::SplitMixRng r1(77), r2(77);
    const TrialResult a = qnet::run_trial(g, cfg, r1, &t1);
    const TrialResult b = qnet::run_trial(g, cfg, r2, &t2);
    CHECK(qnet::serialize_trace(t1) == qnet::serialize_trace(t2));
    CHECK(a.final_states == b.final_states);
    CHECK(a.steps_halted == b.steps_halted);

    const TrialResult replayed = qnet::replay_trace(g, cfg, t1);
    CHECK(replayed.final_states == a.final_states);
    CHECK(replayed.steps_halted == a.steps_halted);
    CHECK(replayed.steps_converged == a.steps_converged);
    CHECK(replayed.correct == a.correct);
    CHECK(replayed.leader_count == a.leader_count);
    CHECK(replayed.deadlocked == a.deadlocked);

    const RoundTrace reparsed = qnet::parse_trace(qnet::serialize_trace(t1));
    CHECK(qnet::serialize_trace(reparsed) == qnet::serialize_trace(t1));
  }
}

TEST_CASE("network size with a preset leader on the 3-cycle ends at (1,3) everywhere") {
  const Digraph g = qnet::directed_cycle(3);
  SimConfig cfg = base_config(Mode::size_seq, 2);
  cfg.preset_leader = 0;
  qnet::SplitMixRng rng(3);
  RoundTrace trace;
  const TrialResult r = qnet::run_network_size(g, cfg, rng, &trace);
  CHECK(r.correct);
  CHECK(r.leader_count == 1);
  CHECK(r.steps_halted % 2 == 0);
  for (const auto& [y, z] : r.final_states) {
    CHECK(y == 1);
    CHECK(z == 3);
  }
  CHECK(qnet::ground_truth_verify(g, cfg, r, &trace).ok());
}

TEST_CASE("sequential network size elects, computes and verifies") {
  qnet::SplitMixRng graph_rng(21);
  const Digraph g = qnet::generate_random_digraph(12, 0.5, graph_rng).graph;
  SimConfig cfg = base_config(Mode::size_seq, 3);
  cfg.u_v = 10;
  cfg.eta_max = 255;
  qnet::SplitMixRng rng(4);
  RoundTrace trace;
  const TrialResult r = qnet::run_network_size(g, cfg, rng, &trace);
  CHECK(r.leader_count == 1);
  CHECK(r.correct);
  CHECK(r.steps_halted > 10 * 3);  // counted from round 1 of the election
  CHECK(r.steps_halted % 3 == 0);
  CHECK(qnet::ground_truth_verify(g, cfg, r, &trace).ok());
}

TEST_CASE("parallel-oracle size never reports fewer steps than the election window") {
  qnet::SplitMixRng graph_rng(2);
  const Digraph g = qnet::generate_random_digraph(10, 0.6, graph_rng).graph;
  SimConfig cfg = base_config(Mode::size_par_oracle, 2);
  cfg.u_v = 25;  // long election so the size iteration finishes first
  cfg.eta_max = 255;
  qnet::SplitMixRng rng(8);
  RoundTrace trace;
  const TrialResult r = qnet::run_network_size(g, cfg, rng, &trace);
  CHECK(r.correct);
  CHECK(r.steps_halted >= 25 * 2);
  CHECK(qnet::ground_truth_verify(g, cfg, r, &trace).ok());
  const TrialResult replayed = qnet::replay_trace(g, cfg, trace);
  CHECK(replayed.steps_halted == r.steps_halted);
}

TEST_CASE("correction-token size keeps conservation and at least one leader") {
  qnet::SplitMixRng graph_rng(31);
  const Digraph g = qnet::generate_random_digraph(9, 0.5, graph_rng).graph;
  SimConfig cfg = base_config(Mode::size_par_correction, 3);
  cfg.u_v = 6;
  cfg.eta_max = 63;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    qnet::SplitMixRng rng(qnet::trial_seed(500, seed));
    RoundTrace trace;
    const TrialResult r = qnet::run_trial(g, cfg, rng, &trace);
    CHECK(r.leader_count >= 1);
    CHECK(r.correct);
    CHECK(r.steps_halted % 3 == 0);
    CHECK(r.steps_halted > 6 * 3);  // stop checks open after the election window
    CHECK(qnet::ground_truth_verify(g, cfg, r, &trace).ok());
  }
}

TEST_CASE("anonymous size converges without a distributed stop") {
  qnet::SplitMixRng graph_rng(13);
  const Digraph g = qnet::generate_random_digraph(8, 0.5, graph_rng).graph;
  const SimConfig cfg = base_config(Mode::size_anonymous, 2);
  qnet::SplitMixRng rng(14);
  RoundTrace trace;
  const TrialResult r = qnet::run_trial(g, cfg, rng, &trace);
  CHECK(r.correct);
  CHECK(r.steps_halted == -1);
  CHECK(r.steps_converged > 0);
  for (const auto& [y, z] : r.final_states) CHECK(z == 8);
  const TrialResult replayed = qnet::replay_trace(g, cfg, trace);
  CHECK(replayed.steps_converged == r.steps_converged);
  CHECK(replayed.correct);
}

TEST_CASE("gt1 with the self-loop stub freezes and is reported as deadlock") {
  qnet::SplitMixRng graph_rng(1);
  const Digraph g = qnet::generate_random_digraph(20, 0.5, graph_rng).graph;
  SimConfig cfg = base_config(Mode::avg_degree, 4);
  cfg.trigger = Trigger::gt1;
  qnet::StubSelfLoopRng stub;
  RoundTrace trace;
  const TrialResult r = qnet::run_trial(g, cfg, stub, &trace);
  CHECK(r.deadlocked);
  CHECK(r.steps_halted == -1);
  CHECK_FALSE(r.correct);
  const qnet::VerifyReport report = qnet::ground_truth_verify(g, cfg, r, &trace);
  bool found = false;
  for (const auto& v : report.violations)
    if (v.what.find("no transmissions after round") != std::string::npos) found = true;
  CHECK(found);
  const TrialResult replayed = qnet::replay_trace(g, cfg, trace);
  CHECK(replayed.deadlocked);
}

TEST_CASE("gt1 can also halt legitimately when all states agree from the start") {
  // On the cycle every token is (1,1); states never change and the first
  // boundary stops everything with the exact answer.
  const Digraph g = qnet::directed_cycle(4);
  SimConfig cfg = base_config(Mode::avg_degree, 3);
  cfg.trigger = Trigger::gt1;
  qnet::SplitMixRng rng(2);
  const TrialResult r = qnet::run_trial(g, cfg, rng);
  CHECK(r.correct);
  CHECK(r.steps_halted == 3);
}

TEST_CASE("elections always keep at least one leader") {
  qnet::SplitMixRng graph_rng(41);
  const Digraph g = qnet::generate_random_digraph(20, 0.5, graph_rng).graph;
  SimConfig cfg = base_config(Mode::size_seq, 4);
  cfg.u_v = 10;
  cfg.eta_max = 15;

  qnet::SplitMixRng rng(6);
  const auto normal = qnet::run_leader_election(g, cfg, rng);
  CHECK(normal.leader_count >= 1);

  // Stub rng: every node draws eta_max every round, so ties never break.
  qnet::StubSelfLoopRng stub;
  const auto tied = qnet::run_leader_election(g, cfg, stub);
  CHECK(tied.leader_count == 20);
  for (int c : tied.leaders_per_round) CHECK(c == 20);

  ConstZeroRng zeros;
  const auto zero_draws = qnet::run_leader_election(g, cfg, zeros);
  CHECK(zero_draws.leader_count == 20);
}

TEST_CASE("two-node election ties at the expected rate and always resolves") {
  const Digraph g = qnet::complete_digraph(2);
  SimConfig cfg = base_config(Mode::size_seq, 1);
  cfg.u_v = 10;
  cfg.eta_max = 15;
  int first_round_ties = 0;
  const int trials = 2000;
  for (int i = 0; i < trials; ++i) {
    qnet::SplitMixRng rng(qnet::trial_seed(910, static_cast<std::uint64_t>(i)));
    const auto election = qnet::run_leader_election(g, cfg, rng);
    CHECK(election.leader_count == 1);
    if (election.leaders_per_round.front() > 1) ++first_round_ties;
  }
  // P(first-round tie) = 1/16 = 0.0625
  const double rate = static_cast<double>(first_round_ties) / trials;
  CHECK(rate > 0.040);
  CHECK(rate < 0.090);
}

TEST_CASE("per-node eta ranges are honored") {
  const Digraph g = qnet::complete_digraph(3);
  SimConfig cfg = base_config(Mode::size_seq, 1);
  cfg.u_v = 4;
  cfg.eta_max = 7;
  cfg.eta_max_per_node = {1, 1, 1023};
  qnet::SplitMixRng rng(19);
  const auto election = qnet::run_leader_election(g, cfg, rng);
  CHECK(election.leader_count >= 1);
  RoundTrace trace;
  qnet::SplitMixRng rng2(19);
  qnet::run_leader_election(g, cfg, rng2, &trace);
  for (const auto& e : trace.events)
    if (e.kind == qnet::TraceEventKind::Draw && (e.node == 0 || e.node == 1)) CHECK(e.a <= 1);
}

TEST_CASE("a forged trace is flagged by the verifier") {
  const Digraph g = qnet::directed_cycle(3);
  SimConfig cfg = base_config(Mode::size_seq, 2);
  cfg.preset_leader = 0;
  qnet::SplitMixRng rng(3);
  RoundTrace trace;
  const TrialResult r = qnet::run_network_size(g, cfg, rng, &trace);
  REQUIRE(qnet::ground_truth_verify(g, cfg, r, &trace).ok());

  RoundTrace forged = trace;
  for (auto it = forged.events.rbegin(); it != forged.events.rend(); ++it) {
    if (it->kind == qnet::TraceEventKind::State) {
      it->b -= 1;  // one node now claims z_s = n-1
      break;
    }
  }
  const qnet::VerifyReport report = qnet::ground_truth_verify(g, cfg, r, &forged);
  CHECK_FALSE(report.ok());
}

TEST_CASE("numerator voting runs but may stop on a stale numerator") {
  qnet::SplitMixRng graph_rng(55);
  const Digraph g = qnet::generate_random_digraph(8, 0.4, graph_rng).graph;
  SimConfig cfg = base_config(Mode::size_seq, 0);
  cfg.vote = VoteSource::numerator;
  cfg.preset_leader = 0;
  int incorrect = 0;
  for (int i = 0; i < 200; ++i) {
    qnet::SplitMixRng rng(qnet::trial_seed(3000, static_cast<std::uint64_t>(i)));
    const TrialResult r = qnet::run_trial(g, cfg, rng);
    CHECK(r.steps_halted >= 0);
    const bool all_n = [&] {
      for (const auto& [y, z] : r.final_states)
        if (z != g.node_count()) return false;
      return true;
    }();
    CHECK(r.correct == all_n);
    if (!r.correct) ++incorrect;
  }
  INFO("numerator-vote false stops: ", incorrect, "/200");
  CHECK(incorrect < 200);  // it does something useful; ratio mode is the safe default
}

TEST_CASE("a d_prime below the diameter terminates one way or another") {
  // Heterogeneous degrees plus an underestimated d_prime; the run must end
  // within the budget (halted, frozen, or exhausted) without tripping asserts.
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < 6; ++v) edges.emplace_back(v, (v + 1) % 6);
  edges.emplace_back(0, 3);
  const Digraph g(6, edges);
  SimConfig cfg = base_config(Mode::avg_degree, 2);
  REQUIRE(qnet::diameter(g) > 2);
  cfg.max_steps = 600;
  qnet::SplitMixRng rng(77);
  const TrialResult r = qnet::run_trial(g, cfg, rng);
  if (r.steps_halted >= 0) CHECK(r.steps_halted <= 600);
}

TEST_CASE("sweeps are deterministic and carry per-trial records") {
  qnet::GraphSource source;
  source.n = 10;
  source.p = 0.5;
  SimConfig cfg = base_config(Mode::avg_degree, 0);
  cfg.trials = 25;
  cfg.master_seed = 3;
  const auto a = qnet::run_sweep(source, cfg, 1);
  const auto b = qnet::run_sweep(source, cfg, 2);
  REQUIRE(a.trials.size() == 25);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].seed == b.trials[i].seed);
    CHECK(a.trials[i].m_edges == b.trials[i].m_edges);
    CHECK(a.trials[i].result.steps_halted == b.trials[i].result.steps_halted);
    CHECK(a.trials[i].result.correct);
    CHECK(a.trials[i].d_prime == a.trials[i].diam);  // d_prime 0 resolves per instance
  }
}

TEST_CASE("diameter-filtered sweeps only keep matching graphs") {
  qnet::GraphSource source;
  source.n = 12;
  source.p = 0.5;
  source.target_diameter = 3;
  SimConfig cfg = base_config(Mode::avg_degree, 4);
  cfg.trials = 10;
  cfg.master_seed = 8;
  const auto sweep = qnet::run_sweep(source, cfg, 1);
  for (const auto& rec : sweep.trials) CHECK(rec.diam == 3);
}

TEST_SUITE_END();
