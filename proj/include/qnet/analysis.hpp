#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "qnet/engine.hpp"

namespace qnet::analysis {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

/// Thrown when a bound's stated precondition does not hold for the inputs.
struct BoundInapplicable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundInputs {
  int n = 2;           // nodes
  int d_max_out = 1;   // maximum out-degree
  int diam = 1;        // diameter D
  int d_prime = 1;     // known upper bound D'
  double p0 = 0.81;    // target probability, in (0,1)
  int u_v = 10;        // election rounds
  int m_levels = 16;   // number of drawable values M = eta_max + 1
};

/// Exact probability bound. `vacuous` marks values outside [0,1]: a lower
/// bound <= 0 or a stated bound > 1 carries no information but is returned
/// as computed, never silently clamped.
struct Bound {
  BigRat value;
  bool vacuous = false;

  double to_double() const { return value.convert_to<double>(); }
  std::string str() const;
};

/// Single-token hit bound: (1 + d_max_out)^(-diam).
Bound lemma1_bound(const BoundInputs& in);

/// Two-token meet bound: n * (1 + d_max_out)^(-2*diam)
/// (the stated sum of n identical terms). Vacuous when > 1.
Bound lemma2_bound(const BoundInputs& in);

struct ConvergenceBound {
  double epsilon_prime = 0;   // merge-phase epsilon (tight choice)
  double epsilon_dprime = 0;  // visit-phase epsilon (same tight choice)
  std::int64_t tau_prime = 0;
  std::int64_t tau_dprime = 0;
  std::int64_t k0 = 0;  // (n-1)*tau'*D + (n-1)*tau''*D + D'
};

/// Probabilistic step bound for reaching and detecting convergence with
/// probability >= p0. Throws BoundInapplicable when the two-token bound is
/// vacuous (its log argument would vanish) or inputs are out of range.
ConvergenceBound theorem2_k0(const BoundInputs& in);

/// Probability of a unique leader after u_v election rounds:
/// 1 - (n-1) * C(u_v, n-1) * p^(n-1) * (1-p)^(u_v-(n-1)), p = 1 - 1/M.
/// Requires u_v > 2(n-1) and m_levels >= 2; throws BoundInapplicable
/// otherwise.
Bound leader_success_lower_bound(int u_v, int n, int m_levels);

struct TrialStats {
  std::int64_t count = 0;  // trials included in the step statistics
  double mean = 0;
  std::int64_t min = 0;
  std::int64_t max = 0;
  int bin_width = 10;
  std::map<std::int64_t, std::int64_t> histogram;  // bin start -> count
  std::int64_t multi_leader = 0;
  std::int64_t unconverged = 0;  // deadlocked or step budget exhausted
};

/// Aggregates per-trial step counts (steps_halted, falling back to
/// steps_converged for modes without distributed stopping).
/// Throws std::invalid_argument on empty input.
TrialStats aggregate_trials(std::span<const TrialResult> results, int bin_width = 10);

}  // namespace qnet::analysis
