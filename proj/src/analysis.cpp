#include "qnet/analysis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qnet::analysis {

namespace {

void validate_walk_inputs(const BoundInputs& in) {
  if (in.n < 2) throw BoundInapplicable("bound inapplicable: n must be >= 2");
  if (in.d_max_out < 1) throw BoundInapplicable("bound inapplicable: d_max_out must be >= 1");
  if (in.diam < 1) throw BoundInapplicable("bound inapplicable: diam must be >= 1");
}

BigRat inverse_power(int base, int exponent) {
  BigInt denom = 1;
  for (int i = 0; i < exponent; ++i) denom *= base;
  return BigRat(BigInt(1), denom);
}

std::int64_t ceil_log_ratio(long double eps, long double one_minus_x) {
  // tau >= ceil(log eps / log(1 - x)); the base cancels in the ratio.
  const long double ratio = std::log(eps) / std::log(one_minus_x);
  if (!(ratio >= 0) || ratio > 9.0e17)
    throw BoundInapplicable("bound inapplicable: tau overflows");
  return static_cast<std::int64_t>(std::ceil(ratio));
}

}  // namespace

std::string Bound::str() const {
  std::ostringstream out;
  out << value;
  if (vacuous) out << " (vacuous)";
  return out.str();
}

Bound lemma1_bound(const BoundInputs& in) {
  validate_walk_inputs(in);
  return Bound{inverse_power(1 + in.d_max_out, in.diam), false};
}

Bound lemma2_bound(const BoundInputs& in) {
  validate_walk_inputs(in);
  BigRat value = BigRat(in.n) * inverse_power(1 + in.d_max_out, 2 * in.diam);
  return Bound{value, value > 1};
}

ConvergenceBound theorem2_k0(const BoundInputs& in) {
  validate_walk_inputs(in);
  if (!(in.p0 > 0.0 && in.p0 < 1.0))
    throw BoundInapplicable("bound inapplicable: p0 must be in (0, 1)");
  if (in.d_prime < 1) throw BoundInapplicable("bound inapplicable: d_prime must be >= 1");

  // Tight epsilon choice: 1 - 2^(log2(sqrt(p0))/(n-1)) = 1 - p0^(1/(2(n-1))).
  const long double eps =
      1.0L - std::pow(static_cast<long double>(in.p0), 1.0L / (2.0L * (in.n - 1)));

  // Exact per-phase failure arguments first; the logs only see values that
  // were verified to lie inside (0, 1).
  const BigRat meet = lemma2_bound(in).value;
  if (meet >= 1)
    throw BoundInapplicable(
        "bound inapplicable: two-token bound is vacuous for these inputs");
  const BigRat hit = lemma1_bound(in).value;

  const long double one_minus_meet = BigRat(1 - meet).convert_to<long double>();
  const long double one_minus_hit = BigRat(1 - hit).convert_to<long double>();

  ConvergenceBound out;
  out.epsilon_prime = static_cast<double>(eps);
  out.epsilon_dprime = static_cast<double>(eps);
  out.tau_prime = ceil_log_ratio(eps, one_minus_meet);
  out.tau_dprime = ceil_log_ratio(eps, one_minus_hit);
  const long double k0 = static_cast<long double>(in.n - 1) * out.tau_prime * in.diam +
                         static_cast<long double>(in.n - 1) * out.tau_dprime * in.diam +
                         in.d_prime;
  if (k0 > 9.0e18) throw BoundInapplicable("bound inapplicable: k0 overflows");
  out.k0 = static_cast<std::int64_t>(in.n - 1) * out.tau_prime * in.diam +
           static_cast<std::int64_t>(in.n - 1) * out.tau_dprime * in.diam + in.d_prime;
  return out;
}

Bound leader_success_lower_bound(int u_v, int n, int m_levels) {
  if (n < 2) throw BoundInapplicable("bound inapplicable: n must be >= 2");
  if (m_levels < 2) throw BoundInapplicable("bound inapplicable: m_levels must be >= 2");
  if (u_v <= 2 * (n - 1))
    throw BoundInapplicable("bound inapplicable: requires u_v > 2(n-1)");

  const BigRat p = BigRat(m_levels - 1, m_levels);
  const BigRat q = BigRat(1, m_levels);
  BigInt binom = 1;  // C(u_v, n-1)
  for (int i = 1; i <= n - 1; ++i) {
    binom *= u_v - (i - 1);
    binom /= i;
  }
  BigRat term = BigRat(n - 1) * BigRat(binom);
  for (int i = 0; i < n - 1; ++i) term *= p;
  for (int i = 0; i < u_v - (n - 1); ++i) term *= q;
  const BigRat value = BigRat(1) - term;
  return Bound{value, value < 0};
}

TrialStats aggregate_trials(std::span<const TrialResult> results, int bin_width) {
  if (results.empty()) throw std::invalid_argument("aggregate_trials: no results");
  if (bin_width < 1) throw std::invalid_argument("aggregate_trials: bin_width must be >= 1");
  TrialStats stats;
  stats.bin_width = bin_width;
  stats.min = std::numeric_limits<std::int64_t>::max();
  stats.max = std::numeric_limits<std::int64_t>::min();
  long double sum = 0;
  for (const auto& r : results) {
    if (r.leader_count > 1) ++stats.multi_leader;
    const std::int64_t steps = r.steps_halted >= 0 ? r.steps_halted : r.steps_converged;
    if (steps < 0) {
      ++stats.unconverged;
      continue;
    }
    ++stats.count;
    sum += static_cast<long double>(steps);
    stats.min = std::min(stats.min, steps);
    stats.max = std::max(stats.max, steps);
    ++stats.histogram[steps / bin_width * bin_width];
  }
  if (stats.count == 0) {
    stats.min = stats.max = 0;
  } else {
    stats.mean = static_cast<double>(sum / static_cast<long double>(stats.count));
  }
  return stats;
}

}  // namespace qnet::analysis
