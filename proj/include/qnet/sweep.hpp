#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnet/digraph.hpp"
#include "qnet/engine.hpp"

namespace qnet {

/// Where each trial's graph comes from: a fixed instance, or a fresh random
/// graph per trial (optionally filtered to an exact diameter, as the paper's
/// sweeps fix one).
struct GraphSource {
  std::optional<Digraph> fixed;
  int n = 20;
  double p = 0.5;
  int target_diameter = -1;  // -1 = accept any
  int max_resamples = 10000;
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  int n = 0;
  std::int64_t m_edges = 0;
  int diam = 0;
  int d_prime = 0;  // resolved value used by this trial
  TrialResult result;
};

struct SweepResult {
  std::vector<TrialRecord> trials;  // by trial index
  std::int64_t diameter_rejections = 0;  // fresh graphs discarded by the filter
};

/// Runs cfg.trials independent trials. Trial i is seeded with
/// trial_seed(cfg.master_seed, i); graph generation and the protocol run
/// share that trial's stream, so results are identical no matter how many
/// threads execute them. threads = 0 picks the hardware concurrency.
SweepResult run_sweep(const GraphSource& source, const SimConfig& cfg, int threads = 0);

}  // namespace qnet
