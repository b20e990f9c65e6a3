#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qnet/rng.hpp"

namespace qnet {

/// Immutable directed graph with out- and in-neighbor access. Node ids are
/// 0-based in the API; the edge-list text format is 1-based. Self-edges and
/// duplicate edges are rejected at construction, and n >= 2 is required.
class Digraph {
 public:
  /// Edges are (src, dst) pairs: src can transmit to dst.
  Digraph(int node_count, std::span<const std::pair<int, int>> edges);

  int node_count() const { return static_cast<int>(out_.size()); }
  std::int64_t edge_count() const { return edge_count_; }

  const std::vector<int>& out_neighbors(int v) const { return out_[v]; }
  const std::vector<int>& in_neighbors(int v) const { return in_[v]; }
  int out_degree(int v) const { return static_cast<int>(out_[v].size()); }
  int in_degree(int v) const { return static_cast<int>(in_[v].size()); }

  /// Sum of all out-degrees; equals edge_count().
  std::int64_t total_out_degree() const { return edge_count_; }

  bool has_edge(int src, int dst) const;

 private:
  std::vector<std::vector<int>> out_;  // sorted ascending
  std::vector<std::vector<int>> in_;   // sorted ascending
  std::int64_t edge_count_ = 0;
};

/// True iff every ordered node pair is connected by a directed path.
bool is_strongly_connected(const Digraph& g);

/// Exact diameter (longest shortest directed path, hop count).
/// Throws std::invalid_argument if g is not strongly connected.
int diameter(const Digraph& g);

struct GeneratedDigraph {
  Digraph graph;
  int resamples = 0;  // attempts rejected for failing strong connectivity
};

/// Erdos-Renyi style generator: each ordered pair (i,j), i != j, is included
/// independently with probability p. The whole graph is resampled until it is
/// strongly connected, preserving the conditional distribution. Throws
/// std::runtime_error after max_resamples failures (p too small for n).
GeneratedDigraph generate_random_digraph(int n, double p, Rng& rng, int max_resamples = 10000);

/// Edge-list text format: header line "n m", then m lines "dst src" with
/// 1-based ids, each meaning src -> dst. UTF-8, LF, whitespace-separated.
/// Rejects malformed lines, out-of-range ids, self-edges and duplicates.
Digraph read_edge_list(std::string_view text);

/// Canonical form: edges sorted by (dst, src). read(write(g)) == g.
std::string write_edge_list(const Digraph& g);

// Small builders used throughout the tests and docs.
Digraph directed_cycle(int n);
Digraph complete_digraph(int n);

}  // namespace qnet
