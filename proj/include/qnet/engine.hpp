#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qnet/digraph.hpp"
#include "qnet/protocol.hpp"
#include "qnet/rng.hpp"
#include "qnet/trace.hpp"

namespace qnet {

/// Run modes:
///   avg_degree           average-degree computation with distributed stopping
///   size_seq             leader election first, then the size iteration
///   size_par_oracle      election and size iteration on the same rounds; the
///                        size iteration starts from the eventual winner and
///                        reported steps are max(u_v*d_prime, size steps)
///   size_par_correction  all nodes start as provisional leaders with mass
///                        (1,1); demoted nodes inject a (-1,0) correction
///   size_anonymous       z-only variant, no stopping; the oracle records the
///                        first round with z_s = n everywhere
enum class Mode { avg_degree, size_seq, size_par_oracle, size_par_correction, size_anonymous };

std::string to_string(Mode m);
std::string to_string(Trigger t);
std::string to_string(VoteSource v);
std::optional<Mode> mode_from_string(std::string_view s);
std::optional<Trigger> trigger_from_string(std::string_view s);
std::optional<VoteSource> vote_from_string(std::string_view s);

struct SimConfig {
  Mode mode = Mode::avg_degree;
  int d_prime = 0;  // 0 = resolve to the graph diameter
  int u_v = 20;
  int eta_max = 255;
  std::vector<int> eta_max_per_node;  // optional per-node override
  int preset_leader = -1;             // >= 0 skips the election in size modes
  Trigger trigger = Trigger::geq1;
  VoteSource vote = VoteSource::ratio;
  std::uint64_t master_seed = 0;
  std::int64_t max_steps = 0;  // 0 = resolve to 100 * n * d_prime
  int trials = 1;
};

/// Fills the d_prime and max_steps defaults against a concrete graph and
/// validates hard invariants (throws std::invalid_argument on violations,
/// e.g. max_steps <= u_v * d_prime in an election mode).
SimConfig resolve_config(const Digraph& g, SimConfig cfg);

/// Reported (non-fatal) assumption violations, e.g. d_prime below the true
/// diameter. One message per finding.
std::vector<std::string> check_assumptions(const Digraph& g, const SimConfig& cfg);

struct TrialResult {
  std::int64_t steps_converged = -1;  // first round the target held at all nodes, stable to the end
  std::int64_t steps_halted = -1;     // round of the distributed stop; -1 if none
  std::vector<std::pair<std::int64_t, std::int64_t>> final_states;  // (y_s, z_s)
  bool correct = false;
  int leader_count = 0;
  bool deadlocked = false;
};

struct ElectionResult {
  std::vector<bool> leader_flags;
  int leader_count = 0;
  std::vector<int> leaders_per_round;  // flagged count after each election boundary
};

/// Runs u_v election rounds of d_prime max-consensus steps each.
/// At least one node always keeps its flag.
ElectionResult run_leader_election(const Digraph& g, const SimConfig& cfg, Rng& rng,
                                   RoundTrace* trace = nullptr);

TrialResult run_average_degree(const Digraph& g, const SimConfig& cfg, Rng& rng,
                               RoundTrace* trace = nullptr);
TrialResult run_network_size(const Digraph& g, const SimConfig& cfg, Rng& rng,
                             RoundTrace* trace = nullptr);

/// Dispatches on cfg.mode.
TrialResult run_trial(const Digraph& g, const SimConfig& cfg, Rng& rng,
                      RoundTrace* trace = nullptr);

/// Rebuilds the TrialResult from a recorded trace; must agree with the
/// engine's own result field for field.
TrialResult replay_trace(const Digraph& g, const SimConfig& cfg, const RoundTrace& trace);

struct Violation {
  std::int64_t round = -1;
  int node = -1;
  std::string what;
};

struct VerifyReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Ground-truth checks for a completed trial: final values against the graph
/// (exact), simultaneous halting, halting round divisible by d_prime, and --
/// when a trace is supplied -- mass conservation at every round, send
/// integrity, token-count monotonicity and trace/result agreement.
VerifyReport ground_truth_verify(const Digraph& g, const SimConfig& cfg, const TrialResult& result,
                                 const RoundTrace* trace = nullptr);

/// Synchronous-round scheduler for one trial. Public so tests can drive
/// rounds one at a time; run_trial is the usual entry point.
///
/// Phase order inside a round k (fixed; votes before mass):
///   1. vote reset when (k-1) mod d_prime == 0
///   2-4. synchronous vote broadcast and min/max merge
///   5. delivery of the mass messages sent in round k-1, then merge
///   6. state adoption and forwarding (nodes in ascending id order)
///   7. stop check when k mod d_prime == 0
/// In the parallel-correction mode the election shares the rounds: draws
/// happen before phase 1, the max-consensus hop alongside phases 2-4, and
/// demotions (with their correction injections) after phase 6.
class SimWorld {
 public:
  SimWorld(const Digraph& g, const SimConfig& cfg, Rng& rng, RoundTrace* trace = nullptr);

  void init_avg_degree();
  void init_size(const std::vector<bool>& leader_flags);
  void init_size_anonymous();
  void init_size_correction();

  /// Advances one round. Returns false once the run is over: every node
  /// halted, mass flow froze (deadlock), the anonymous-mode oracle fired, or
  /// max_steps was reached.
  bool step_round();

  /// Runs step_round to completion.
  void run_to_completion();

  std::int64_t round() const { return round_; }
  bool all_halted() const;
  bool deadlocked() const { return deadlocked_; }
  const std::vector<NodeState>& nodes() const { return nodes_; }
  std::int64_t stable_since() const { return stable_since_; }
  int flagged_leaders() const;

  /// Result of the rounds simulated so far (steps are local to this world;
  /// run_trial applies any sequential-election offset).
  TrialResult result() const;

 private:
  void election_phase_pre(std::int64_t k);
  void election_phase_post(std::int64_t k);
  bool target_condition() const;
  bool mass_flow_frozen() const;

  const Digraph& g_;
  SimConfig cfg_;
  Rng& rng_;
  RoundTrace* trace_;
  std::vector<NodeState> nodes_;
  std::vector<TargetDistribution> dists_;
  std::vector<std::vector<MassMessage>> inbox_;       // delivered this round
  std::vector<std::vector<MassMessage>> inbox_next_;  // sent this round
  Fraction target_{0, 1};     // avg-degree target ratio
  bool votes_enabled_ = true;
  std::int64_t stop_checks_from_ = 0;  // first eligible stop boundary
  bool election_inline_ = false;       // correction mode: election shares rounds
  std::int64_t round_ = 0;
  std::int64_t stable_since_ = -1;
  std::int64_t halt_round_ = -1;
  bool deadlocked_ = false;
  bool anonymous_done_ = false;
  std::int64_t max_rounds_ = 0;
};

}  // namespace qnet
