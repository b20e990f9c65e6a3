#include "qnet/engine.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>

namespace qnet {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::avg_degree: return "avg-degree";
    case Mode::size_seq: return "size-seq";
    case Mode::size_par_oracle: return "size-par-oracle";
    case Mode::size_par_correction: return "size-par-correction";
    case Mode::size_anonymous: return "size-anonymous";
  }
  return "?";
}

std::string to_string(Trigger t) { return t == Trigger::geq1 ? "geq1" : "gt1"; }

std::string to_string(VoteSource v) { return v == VoteSource::ratio ? "ratio" : "numerator"; }

std::optional<Mode> mode_from_string(std::string_view s) {
  if (s == "avg-degree") return Mode::avg_degree;
  if (s == "size-seq") return Mode::size_seq;
  if (s == "size-par-oracle") return Mode::size_par_oracle;
  if (s == "size-par-correction") return Mode::size_par_correction;
  if (s == "size-anonymous") return Mode::size_anonymous;
  return std::nullopt;
}

std::optional<Trigger> trigger_from_string(std::string_view s) {
  if (s == "geq1") return Trigger::geq1;
  if (s == "gt1") return Trigger::gt1;
  return std::nullopt;
}

std::optional<VoteSource> vote_from_string(std::string_view s) {
  if (s == "ratio") return VoteSource::ratio;
  if (s == "numerator") return VoteSource::numerator;
  return std::nullopt;
}

namespace {

bool is_size_mode(Mode m) { return m != Mode::avg_degree; }

bool mode_elects(const SimConfig& cfg) {
  return (cfg.mode == Mode::size_seq || cfg.mode == Mode::size_par_oracle) &&
         cfg.preset_leader < 0;
}

int eta_max_for(const SimConfig& cfg, int node) {
  return cfg.eta_max_per_node.empty() ? cfg.eta_max : cfg.eta_max_per_node[node];
}

}  // namespace

SimConfig resolve_config(const Digraph& g, SimConfig cfg) {
  const int n = g.node_count();
  if (cfg.d_prime == 0) cfg.d_prime = diameter(g);
  if (cfg.d_prime < 1) throw std::invalid_argument("config: d_prime must be >= 1");
  if (cfg.u_v < 1) throw std::invalid_argument("config: u_v must be >= 1");
  if (cfg.eta_max < 1) throw std::invalid_argument("config: eta_max must be >= 1");
  if (!cfg.eta_max_per_node.empty()) {
    if (static_cast<int>(cfg.eta_max_per_node.size()) != n)
      throw std::invalid_argument("config: eta_max_per_node must have one entry per node");
    for (int e : cfg.eta_max_per_node)
      if (e < 1) throw std::invalid_argument("config: per-node eta_max must be >= 1");
  }
  if (cfg.preset_leader >= n)
    throw std::invalid_argument("config: preset leader id out of range");
  if (cfg.max_steps == 0) cfg.max_steps = 100ll * n * cfg.d_prime;
  if (cfg.max_steps < 1) throw std::invalid_argument("config: max_steps must be >= 1");
  const bool uses_election = cfg.mode == Mode::size_par_correction || mode_elects(cfg);
  if (uses_election && cfg.max_steps <= static_cast<std::int64_t>(cfg.u_v) * cfg.d_prime)
    throw std::invalid_argument("config: max_steps must exceed u_v * d_prime");
  if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  return cfg;
}

std::vector<std::string> check_assumptions(const Digraph& g, const SimConfig& cfg) {
  std::vector<std::string> findings;
  const int d = diameter(g);
  if (cfg.d_prime > 0 && cfg.d_prime < d)
    findings.push_back("d_prime (" + std::to_string(cfg.d_prime) +
                       ") is below the graph diameter (" + std::to_string(d) +
                       "); distributed stopping may misfire");
  return findings;
}

// ---------------------------------------------------------------------------
// SimWorld
// ---------------------------------------------------------------------------

SimWorld::SimWorld(const Digraph& g, const SimConfig& cfg, Rng& rng, RoundTrace* trace)
    : g_(g), cfg_(cfg), rng_(rng), trace_(trace) {
  const int n = g.node_count();
  nodes_.resize(n);
  dists_.reserve(n);
  for (int v = 0; v < n; ++v)
    dists_.push_back(assign_probabilities(g.out_degree(v), g.out_neighbors(v), v));
  inbox_.resize(n);
  inbox_next_.resize(n);
  max_rounds_ = cfg.max_steps;
}

void SimWorld::init_avg_degree() {
  target_ = Fraction(g_.total_out_degree(), g_.node_count());
  votes_enabled_ = true;
  stop_checks_from_ = cfg_.d_prime;
  for (int v = 0; v < g_.node_count(); ++v) {
    Transmission t = init_average_degree(nodes_[v], g_.out_degree(v), dists_[v], rng_);
    inbox_next_[t.target].push_back(t.mass);
    if (trace_) {
      trace_->add({0, TraceEventKind::Init, v, -1, g_.out_degree(v), 1});
      trace_->add({0, TraceEventKind::Send, v, t.target, t.mass.y, t.mass.z});
    }
  }
}

void SimWorld::init_size(const std::vector<bool>& leader_flags) {
  votes_enabled_ = true;
  stop_checks_from_ = cfg_.d_prime;
  for (int v = 0; v < g_.node_count(); ++v) {
    nodes_[v].leader_flag = leader_flags[v];
    init_network_size(nodes_[v], leader_flags[v]);
    if (trace_)
      trace_->add({0, TraceEventKind::Init, v, -1, nodes_[v].mass_y, nodes_[v].mass_z});
  }
}

void SimWorld::init_size_anonymous() {
  votes_enabled_ = false;
  for (int v = 0; v < g_.node_count(); ++v) {
    init_network_size(nodes_[v], false);
    if (trace_) trace_->add({0, TraceEventKind::Init, v, -1, 0, 1});
  }
}

void SimWorld::init_size_correction() {
  votes_enabled_ = true;
  election_inline_ = true;
  // Everyone starts as a provisional leader, so every state ratio is 1/1 and
  // a halt vote would agree immediately. Stop checks therefore begin at the
  // first boundary after the election window, once demotions can no longer
  // change the mass totals.
  stop_checks_from_ = static_cast<std::int64_t>(cfg_.u_v) * cfg_.d_prime + cfg_.d_prime;
  for (int v = 0; v < g_.node_count(); ++v) {
    nodes_[v].leader_flag = true;
    init_network_size(nodes_[v], true);
    if (trace_) trace_->add({0, TraceEventKind::Init, v, -1, 1, 1});
  }
}

bool SimWorld::all_halted() const {
  for (const auto& node : nodes_)
    if (!node.halted) return false;
  return true;
}

int SimWorld::flagged_leaders() const {
  int count = 0;
  for (const auto& node : nodes_) count += node.leader_flag ? 1 : 0;
  return count;
}

bool SimWorld::target_condition() const {
  if (cfg_.mode == Mode::avg_degree) {
    for (const auto& node : nodes_)
      if (Fraction(node.state_y, node.state_z) != target_) return false;
  } else {
    for (const auto& node : nodes_)
      if (node.state_z != g_.node_count()) return false;
  }
  return true;
}

bool SimWorld::mass_flow_frozen() const {
  for (const auto& box : inbox_next_)
    if (!box.empty()) return false;
  for (const auto& node : nodes_) {
    if (node.halted) continue;
    const bool adopt = cfg_.trigger == Trigger::geq1 ? node.mass_z >= 1 : node.mass_z > 1;
    if (adopt || (election_inline_ && node.mass_y != 0)) return false;
  }
  return true;
}

void SimWorld::election_phase_pre(std::int64_t k) {
  if ((k - 1) % cfg_.d_prime == 0) {
    for (int v = 0; v < g_.node_count(); ++v) {
      leader_round_reset(nodes_[v], eta_max_for(cfg_, v), rng_);
      if (trace_ && nodes_[v].leader_flag)
        trace_->add({k, TraceEventKind::Draw, v, -1, nodes_[v].eta});
    }
  }
  std::vector<LeaderValue> snapshot(nodes_.size());
  for (std::size_t v = 0; v < nodes_.size(); ++v) snapshot[v] = nodes_[v].leader_max;
  std::vector<LeaderValue> received;
  for (int v = 0; v < g_.node_count(); ++v) {
    received.clear();
    for (int u : g_.in_neighbors(v)) received.push_back(snapshot[u]);
    leader_max_step(nodes_[v], received);
  }
}

void SimWorld::election_phase_post(std::int64_t k) {
  if (k % cfg_.d_prime != 0) return;
  for (int v = 0; v < g_.node_count(); ++v) {
    const bool was = nodes_[v].leader_flag;
    leader_round_conclude(nodes_[v]);
    if (was && !nodes_[v].leader_flag) {
      // Demoted: cancel the provisional unit with a correction token. It is
      // injected after this round's transmissions, so it travels next round.
      nodes_[v].mass_y -= 1;
      if (trace_) {
        trace_->add({k, TraceEventKind::Clear, v});
        trace_->add({k, TraceEventKind::Inject, v, -1, -1, 0});
      }
    }
  }
  if (trace_) trace_->add({k, TraceEventKind::Leaders, -1, -1, flagged_leaders()});
}

bool SimWorld::step_round() {
  if (all_halted() || deadlocked_ || anonymous_done_ || round_ >= max_rounds_) return false;
  const std::int64_t k = round_ + 1;
  const std::int64_t election_window =
      election_inline_ ? static_cast<std::int64_t>(cfg_.u_v) * cfg_.d_prime : 0;

  if (election_inline_ && k <= election_window) election_phase_pre(k);

  if (votes_enabled_) {
    if ((k - 1) % cfg_.d_prime == 0)
      for (auto& node : nodes_)
        if (!node.halted) vote_reset(node, cfg_.vote);
    // Synchronous exchange: everyone broadcasts, then everyone merges.
    std::vector<VoteMessage> snapshot(nodes_.size());
    for (std::size_t v = 0; v < nodes_.size(); ++v)
      snapshot[v] = VoteMessage{nodes_[v].vote_max, nodes_[v].vote_min};
    std::vector<VoteMessage> received;
    for (int v = 0; v < g_.node_count(); ++v) {
      if (nodes_[v].halted) continue;
      received.clear();
      for (int u : g_.in_neighbors(v))
        if (!nodes_[u].halted) received.push_back(snapshot[u]);
      vote_merge(nodes_[v], received);
    }
  }

  // Phase 5: deliver the masses sent in round k-1.
  std::swap(inbox_, inbox_next_);
  for (int v = 0; v < g_.node_count(); ++v) {
    if (!inbox_[v].empty()) {
      if (!nodes_[v].halted) merge_received(nodes_[v], inbox_[v]);
      inbox_[v].clear();
    }
  }

  // Phase 6: state adoption and forwarding, ascending node id.
  const TransmitPolicy policy{cfg_.trigger, election_inline_};
  for (int v = 0; v < g_.node_count(); ++v) {
    auto& node = nodes_[v];
    if (node.halted) continue;
    const std::int64_t old_y = node.state_y, old_z = node.state_z;
    auto sent = update_state_and_transmit(node, policy, dists_[v], rng_);
    if (trace_ && (node.state_y != old_y || node.state_z != old_z))
      trace_->add({k, TraceEventKind::State, v, -1, node.state_y, node.state_z});
    if (sent) {
      inbox_next_[sent->target].push_back(sent->mass);
      if (trace_)
        trace_->add({k, TraceEventKind::Send, v, sent->target, sent->mass.y, sent->mass.z});
    }
  }

  if (election_inline_ && k <= election_window) election_phase_post(k);

  // Phase 7: stop check at eligible boundaries.
  if (votes_enabled_ && k % cfg_.d_prime == 0 && k >= stop_checks_from_) {
    for (int v = 0; v < g_.node_count(); ++v) {
      auto& node = nodes_[v];
      if (node.halted) continue;
      if (trace_)
        trace_->add({k, TraceEventKind::Vote, v, -1, node.vote_min.num, node.vote_min.den,
                     node.vote_max.num, node.vote_max.den});
      if (stop_check(node) && trace_) trace_->add({k, TraceEventKind::Halt, v});
    }
    if (all_halted()) halt_round_ = k;
  }

  const bool condition = target_condition();
  if (condition) {
    if (stable_since_ < 0) stable_since_ = k;
  } else {
    stable_since_ = -1;
  }
  if (!votes_enabled_ && condition) anonymous_done_ = true;

  // Frozen mass flow is only a deadlock once a stop boundary has come and
  // gone without halting everyone: states can no longer change, so that
  // boundary's vote outcome repeats forever.
  if (!all_halted() && !anonymous_done_ && k >= election_window && mass_flow_frozen()) {
    if (!votes_enabled_ || (k % cfg_.d_prime == 0 && k >= stop_checks_from_))
      deadlocked_ = true;
  }

  round_ = k;
  return !(all_halted() || deadlocked_ || anonymous_done_ || round_ >= max_rounds_);
}

void SimWorld::run_to_completion() {
  while (step_round()) {
  }
}

TrialResult SimWorld::result() const {
  TrialResult r;
  r.final_states.reserve(nodes_.size());
  for (const auto& node : nodes_) r.final_states.emplace_back(node.state_y, node.state_z);
  r.steps_halted = all_halted() ? halt_round_ : -1;
  r.steps_converged = stable_since_;
  r.correct = target_condition();
  r.deadlocked = deadlocked_;
  r.leader_count = 0;
  return r;
}

// ---------------------------------------------------------------------------
// Run entry points
// ---------------------------------------------------------------------------

ElectionResult run_leader_election(const Digraph& g, const SimConfig& cfg, Rng& rng,
                                   RoundTrace* trace) {
  const int n = g.node_count();
  std::vector<NodeState> nodes(n);
  for (auto& node : nodes) node.leader_flag = true;
  ElectionResult out;
  out.leaders_per_round.reserve(cfg.u_v);

  std::vector<LeaderValue> snapshot(n);
  std::vector<LeaderValue> received;
  const std::int64_t total = static_cast<std::int64_t>(cfg.u_v) * cfg.d_prime;
  for (std::int64_t k = 1; k <= total; ++k) {
    if ((k - 1) % cfg.d_prime == 0) {
      for (int v = 0; v < n; ++v) {
        leader_round_reset(nodes[v], eta_max_for(cfg, v), rng);
        if (trace && nodes[v].leader_flag)
          trace->add({k, TraceEventKind::Draw, v, -1, nodes[v].eta});
      }
    }
    for (int v = 0; v < n; ++v) snapshot[v] = nodes[v].leader_max;
    for (int v = 0; v < n; ++v) {
      received.clear();
      for (int u : g.in_neighbors(v)) received.push_back(snapshot[u]);
      leader_max_step(nodes[v], received);
    }
    if (k % cfg.d_prime == 0) {
      int count = 0;
      for (int v = 0; v < n; ++v) {
        const bool was = nodes[v].leader_flag;
        leader_round_conclude(nodes[v]);
        if (was && !nodes[v].leader_flag && trace) trace->add({k, TraceEventKind::Clear, v});
        count += nodes[v].leader_flag ? 1 : 0;
      }
      out.leaders_per_round.push_back(count);
      if (trace) trace->add({k, TraceEventKind::Leaders, -1, -1, count});
    }
  }
  out.leader_flags.resize(n);
  out.leader_count = 0;
  for (int v = 0; v < n; ++v) {
    out.leader_flags[v] = nodes[v].leader_flag;
    out.leader_count += nodes[v].leader_flag ? 1 : 0;
  }
  assert(out.leader_count >= 1);
  return out;
}

namespace {

void fill_trace_header(RoundTrace* trace, const Digraph& g, const SimConfig& cfg) {
  if (!trace) return;
  trace->header["mode"] = to_string(cfg.mode);
  trace->header["n"] = std::to_string(g.node_count());
  trace->header["m"] = std::to_string(g.edge_count());
  trace->header["d_prime"] = std::to_string(cfg.d_prime);
  trace->header["u_v"] = std::to_string(cfg.u_v);
  trace->header["eta_max"] = std::to_string(cfg.eta_max);
  trace->header["trigger"] = to_string(cfg.trigger);
  trace->header["vote"] = to_string(cfg.vote);
  trace->header["preset_leader"] = std::to_string(cfg.preset_leader);
  trace->header["max_steps"] = std::to_string(cfg.max_steps);
}

}  // namespace

TrialResult run_trial(const Digraph& g, const SimConfig& raw_cfg, Rng& rng, RoundTrace* trace) {
  const SimConfig cfg = resolve_config(g, raw_cfg);
  fill_trace_header(trace, g, cfg);

  switch (cfg.mode) {
    case Mode::avg_degree: {
      SimWorld world(g, cfg, rng, trace);
      world.init_avg_degree();
      world.run_to_completion();
      TrialResult r = world.result();
      if (trace) trace->header["rounds"] = std::to_string(world.round());
      return r;
    }
    case Mode::size_seq:
    case Mode::size_par_oracle: {
      std::vector<bool> flags(g.node_count(), false);
      int leader_count = 1;
      std::int64_t election_rounds = 0;
      if (cfg.preset_leader >= 0) {
        flags[cfg.preset_leader] = true;
      } else {
        ElectionResult election = run_leader_election(g, cfg, rng, trace);
        flags = election.leader_flags;
        leader_count = election.leader_count;
        election_rounds = static_cast<std::int64_t>(cfg.u_v) * cfg.d_prime;
      }
      const bool sequential = cfg.mode == Mode::size_seq;
      const std::int64_t offset = sequential ? election_rounds : 0;

      SimConfig world_cfg = cfg;
      if (sequential) world_cfg.max_steps = cfg.max_steps - election_rounds;
      const std::size_t first_event = trace ? trace->events.size() : 0;
      SimWorld world(g, world_cfg, rng, trace);
      world.init_size(flags);
      world.run_to_completion();
      if (trace && offset != 0)
        for (std::size_t i = first_event; i < trace->events.size(); ++i)
          trace->events[i].round += offset;

      TrialResult r = world.result();
      r.leader_count = leader_count;
      if (sequential) {
        if (r.steps_converged >= 0) r.steps_converged += offset;
        if (r.steps_halted >= 0) r.steps_halted += offset;
        if (trace) trace->header["rounds"] = std::to_string(offset + world.round());
      } else {
        // Oracle measurement model: total time is the slower of the two
        // parallel strands.
        if (r.steps_converged >= 0)
          r.steps_converged = std::max(r.steps_converged, election_rounds);
        if (r.steps_halted >= 0) r.steps_halted = std::max(r.steps_halted, election_rounds);
        if (trace)
          trace->header["rounds"] = std::to_string(std::max(election_rounds, world.round()));
      }
      return r;
    }
    case Mode::size_par_correction: {
      SimWorld world(g, cfg, rng, trace);
      world.init_size_correction();
      world.run_to_completion();
      TrialResult r = world.result();
      r.leader_count = world.flagged_leaders();
      if (trace) trace->header["rounds"] = std::to_string(world.round());
      return r;
    }
    case Mode::size_anonymous: {
      SimWorld world(g, cfg, rng, trace);
      world.init_size_anonymous();
      world.run_to_completion();
      TrialResult r = world.result();
      if (trace) trace->header["rounds"] = std::to_string(world.round());
      return r;
    }
  }
  throw std::logic_error("run_trial: unknown mode");
}

TrialResult run_average_degree(const Digraph& g, const SimConfig& cfg, Rng& rng,
                               RoundTrace* trace) {
  if (cfg.mode != Mode::avg_degree)
    throw std::invalid_argument("run_average_degree: config mode mismatch");
  return run_trial(g, cfg, rng, trace);
}

TrialResult run_network_size(const Digraph& g, const SimConfig& cfg, Rng& rng,
                             RoundTrace* trace) {
  if (!is_size_mode(cfg.mode))
    throw std::invalid_argument("run_network_size: config mode mismatch");
  return run_trial(g, cfg, rng, trace);
}

// ---------------------------------------------------------------------------
// Replay and verification
// ---------------------------------------------------------------------------

namespace {

// Rebuilds a trial from its event log. When `violations` is supplied, also
// checks send integrity, mass conservation and token-count monotonicity at
// every round.
class Replayer {
 public:
  Replayer(const Digraph& g, const SimConfig& cfg, const RoundTrace& trace,
           std::vector<Violation>* violations)
      : g_(g), cfg_(resolve_config(g, cfg)), trace_(trace), violations_(violations) {}

  TrialResult run() {
    const int n = g_.node_count();
    held_.assign(n, {0, 0});
    states_.assign(n, {0, 1});
    halt_round_.assign(n, -1);

    std::vector<TraceEvent> events = trace_.events;
    std::stable_sort(events.begin(), events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.round < b.round; });

    std::int64_t total_rounds = events.empty() ? 0 : events.back().round;
    if (auto it = trace_.header.find("rounds"); it != trace_.header.end())
      total_rounds = std::max(total_rounds, static_cast<std::int64_t>(std::stoll(it->second)));

    const std::int64_t first_round = events.empty() ? 0 : events.front().round;
    std::size_t i = 0;
    for (std::int64_t r = first_round; r <= total_rounds; ++r) {
      deliver_inflight();
      while (i < events.size() && events[i].round == r) process(events[i++]);
      end_of_round(r);
    }
    return finish(total_rounds);
  }

 private:
  void flag(std::int64_t round, int node, std::string what) {
    if (violations_) violations_->push_back({round, node, std::move(what)});
  }

  void deliver_inflight() {
    for (const auto& msg : inflight_) {
      held_[msg.dst].first += msg.y;
      held_[msg.dst].second += msg.z;
    }
    inflight_.clear();
  }

  void process(const TraceEvent& e) {
    switch (e.kind) {
      case TraceEventKind::Init:
        held_[e.node] = {e.a, e.b};
        states_[e.node] = {e.a, e.b == 0 ? 1 : e.b};
        expected_y_ += e.a;
        expected_z_ += e.b;
        initialized_ = true;
        break;
      case TraceEventKind::Send:
        if (held_[e.node] != std::pair<std::int64_t, std::int64_t>{e.a, e.b})
          flag(e.round, e.node,
               "send does not match held mass: sent (" + std::to_string(e.a) + "," +
                   std::to_string(e.b) + "), held (" + std::to_string(held_[e.node].first) +
                   "," + std::to_string(held_[e.node].second) + ")");
        held_[e.node] = {0, 0};
        inflight_.push_back({e.peer, e.a, e.b});
        last_send_round_ = e.round;
        break;
      case TraceEventKind::State:
        states_[e.node] = {e.a, e.b};
        break;
      case TraceEventKind::Inject:
        held_[e.node].first += e.a;
        held_[e.node].second += e.b;
        expected_y_ += e.a;
        expected_z_ += e.b;
        break;
      case TraceEventKind::Halt:
        halt_round_[e.node] = e.round;
        break;
      case TraceEventKind::Leaders:
        last_leaders_ = static_cast<int>(e.a);
        break;
      case TraceEventKind::Vote:
      case TraceEventKind::Draw:
      case TraceEventKind::Clear:
        break;
    }
  }

  bool condition() const {
    if (!initialized_) return false;
    if (cfg_.mode == Mode::avg_degree) {
      const Fraction target(g_.total_out_degree(), g_.node_count());
      for (const auto& [y, z] : states_)
        if (Fraction(y, z) != target) return false;
    } else {
      for (const auto& [y, z] : states_)
        if (z != g_.node_count()) return false;
    }
    return true;
  }

  void end_of_round(std::int64_t r) {
    if (!initialized_) return;
    if (r >= 1) {
      if (condition()) {
        if (stable_since_ < 0) stable_since_ = r;
      } else {
        stable_since_ = -1;
      }
    }
    if (!violations_) return;
    std::int64_t sum_y = 0, sum_z = 0, tokens = 0;
    for (const auto& [y, z] : held_) {
      sum_y += y;
      sum_z += z;
      if (z > 0) ++tokens;
    }
    for (const auto& msg : inflight_) {
      sum_y += msg.y;
      sum_z += msg.z;
      if (msg.z > 0) ++tokens;
    }
    if (sum_y != expected_y_ || sum_z != expected_z_)
      flag(r, -1,
           "mass conservation broken: held+inflight = (" + std::to_string(sum_y) + "," +
               std::to_string(sum_z) + "), expected (" + std::to_string(expected_y_) + "," +
               std::to_string(expected_z_) + ")");
    if (cfg_.trigger == Trigger::geq1 && prev_tokens_ >= 0 && tokens > prev_tokens_)
      flag(r, -1, "nonzero-z token count increased from " + std::to_string(prev_tokens_) +
                      " to " + std::to_string(tokens));
    prev_tokens_ = tokens;
  }

  TrialResult finish(std::int64_t total_rounds) {
    const int n = g_.node_count();
    TrialResult r;
    r.final_states = states_;
    std::int64_t halt = -1;
    bool all_halted = true;
    for (int v = 0; v < n; ++v) {
      if (halt_round_[v] < 0) all_halted = false;
      halt = std::max(halt, halt_round_[v]);
    }
    r.steps_halted = all_halted ? halt : -1;
    r.steps_converged = stable_since_;
    if (cfg_.mode == Mode::size_par_oracle && cfg_.preset_leader < 0) {
      const std::int64_t election_rounds = static_cast<std::int64_t>(cfg_.u_v) * cfg_.d_prime;
      if (r.steps_halted >= 0) r.steps_halted = std::max(r.steps_halted, election_rounds);
      if (r.steps_converged >= 0)
        r.steps_converged = std::max(r.steps_converged, election_rounds);
    }
    r.correct = condition();
    r.leader_count = cfg_.mode == Mode::avg_degree ? 0
                     : last_leaders_ >= 0          ? last_leaders_
                     : cfg_.preset_leader >= 0     ? 1
                                                   : 0;
    if (!all_halted && initialized_) {
      bool frozen = inflight_.empty();
      for (int v = 0; frozen && v < n; ++v) {
        if (halt_round_[v] >= 0) continue;
        const auto& [y, z] = held_[v];
        const bool adopt = cfg_.trigger == Trigger::geq1 ? z >= 1 : z > 1;
        if (adopt || (cfg_.mode == Mode::size_par_correction && y != 0)) frozen = false;
      }
      // Mirror the engine: a freeze counts as deadlock only at a stop-eligible
      // boundary (anonymous mode has none, so any freeze is final there).
      const std::int64_t stop_from =
          cfg_.mode == Mode::size_par_correction
              ? static_cast<std::int64_t>(cfg_.u_v) * cfg_.d_prime + cfg_.d_prime
              : cfg_.d_prime;
      const bool at_boundary = cfg_.mode == Mode::size_anonymous ||
                               (total_rounds % cfg_.d_prime == 0 && total_rounds >= stop_from);
      const bool anonymous_success = cfg_.mode == Mode::size_anonymous && r.correct;
      r.deadlocked = frozen && at_boundary && !anonymous_success;
      if (r.deadlocked)
        flag(last_send_round_, -1,
             "no transmissions after round " + std::to_string(last_send_round_) +
                 "; not converged");
    }
    return r;
  }

  struct Inflight {
    int dst;
    std::int64_t y, z;
  };

  const Digraph& g_;
  SimConfig cfg_;
  const RoundTrace& trace_;
  std::vector<Violation>* violations_;
  std::vector<std::pair<std::int64_t, std::int64_t>> held_;
  std::vector<std::pair<std::int64_t, std::int64_t>> states_;
  std::vector<std::int64_t> halt_round_;
  std::vector<Inflight> inflight_;
  std::int64_t expected_y_ = 0, expected_z_ = 0;
  bool initialized_ = false;
  std::int64_t last_send_round_ = -1;
  std::int64_t prev_tokens_ = -1;
  std::int64_t stable_since_ = -1;
  int last_leaders_ = -1;
};

}  // namespace

TrialResult replay_trace(const Digraph& g, const SimConfig& cfg, const RoundTrace& trace) {
  return Replayer(g, cfg, trace, nullptr).run();
}

VerifyReport ground_truth_verify(const Digraph& g, const SimConfig& raw_cfg,
                                 const TrialResult& result, const RoundTrace* trace) {
  VerifyReport report;
  const SimConfig cfg = resolve_config(g, raw_cfg);
  const int n = g.node_count();

  bool values_ok = true;
  if (static_cast<int>(result.final_states.size()) != n) {
    report.violations.push_back({-1, -1, "result holds wrong number of node states"});
    values_ok = false;
  } else if (cfg.mode == Mode::avg_degree) {
    const Fraction target(g.total_out_degree(), n);
    for (int v = 0; v < n; ++v) {
      const auto& [y, z] = result.final_states[v];
      if (Fraction(y, z) != target) {
        report.violations.push_back(
            {-1, v, "final state " + Fraction(y, z).str() + " != average degree " + target.str()});
        values_ok = false;
      }
    }
  } else {
    for (int v = 0; v < n; ++v) {
      if (result.final_states[v].second != n) {
        report.violations.push_back(
            {-1, v,
             "final z_s = " + std::to_string(result.final_states[v].second) +
                 " != network size " + std::to_string(n)});
        values_ok = false;
      }
    }
  }
  if (result.correct != values_ok)
    report.violations.push_back({-1, -1, "result.correct flag disagrees with the final states"});

  if (result.steps_halted >= 0) {
    if (result.steps_halted % cfg.d_prime != 0)
      report.violations.push_back(
          {result.steps_halted, -1, "halting round is not a multiple of d_prime"});
    if (result.steps_converged >= 0 && result.steps_halted < result.steps_converged)
      report.violations.push_back({result.steps_halted, -1, "halted before value convergence"});
  }

  if (trace) {
    std::vector<Violation> integrity;
    TrialResult replayed = Replayer(g, cfg, *trace, &integrity).run();
    for (auto& v : integrity) report.violations.push_back(std::move(v));

    // Simultaneous halting and vote/halt agreement from the raw events.
    std::int64_t halt_at = -1;
    int halted_nodes = 0;
    for (const auto& e : trace->events) {
      if (e.kind == TraceEventKind::Halt) {
        ++halted_nodes;
        if (halt_at < 0) halt_at = e.round;
        if (e.round != halt_at)
          report.violations.push_back({e.round, e.node, "node halted at a different boundary"});
      } else if (e.kind == TraceEventKind::Vote) {
        if (e.b < 1 || e.d < 1) {
          report.violations.push_back({e.round, e.node, "vote with non-positive denominator"});
          continue;
        }
        if (e.round % cfg.d_prime != 0)
          report.violations.push_back({e.round, e.node, "vote check off the d_prime boundary"});
      }
    }
    if (halted_nodes > 0 && halted_nodes != n)
      report.violations.push_back({halt_at, -1,
                                   "only " + std::to_string(halted_nodes) + " of " +
                                       std::to_string(n) + " nodes halted"});

    if (replayed.final_states != result.final_states)
      report.violations.push_back({-1, -1, "trace replay disagrees with result final states"});
    if (replayed.steps_halted != result.steps_halted ||
        replayed.steps_converged != result.steps_converged)
      report.violations.push_back({-1, -1, "trace replay disagrees with result step counts"});
  } else if (result.deadlocked) {
    report.violations.push_back({-1, -1, "no transmissions; not converged (deadlock)"});
  }
  return report;
}

std::string VerifyReport::to_string() const {
  std::ostringstream out;
  if (violations.empty()) {
    out << "verification ok\n";
    return out.str();
  }
  for (const auto& v : violations) {
    out << "violation";
    if (v.round >= 0) out << " [round " << v.round << "]";
    if (v.node >= 0) out << " [node " << v.node + 1 << "]";
    out << ": " << v.what << '\n';
  }
  return out.str();
}

}  // namespace qnet
