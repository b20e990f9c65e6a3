#include "qnet/digraph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace qnet {

namespace {

std::string edge_str(int src, int dst) {
  return "(" + std::to_string(src + 1) + " -> " + std::to_string(dst + 1) + ")";
}

// Hop counts from `start` along the given adjacency lists. -1 = unreachable.
std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue;
  dist[start] = 0;
  queue.push_back(start);
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : adj[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

}  // namespace

Digraph::Digraph(int node_count, std::span<const std::pair<int, int>> edges) {
  if (node_count < 2) throw std::invalid_argument("Digraph: need at least 2 nodes");
  out_.resize(node_count);
  in_.resize(node_count);
  for (const auto& [src, dst] : edges) {
    if (src < 0 || src >= node_count || dst < 0 || dst >= node_count)
      throw std::invalid_argument("Digraph: node id out of range in edge " + edge_str(src, dst));
    if (src == dst)
      throw std::invalid_argument("Digraph: self-edge " + edge_str(src, dst));
    out_[src].push_back(dst);
    in_[dst].push_back(src);
  }
  for (auto& lst : out_) {
    std::sort(lst.begin(), lst.end());
    if (std::adjacent_find(lst.begin(), lst.end()) != lst.end())
      throw std::invalid_argument("Digraph: duplicate edge");
    edge_count_ += static_cast<std::int64_t>(lst.size());
  }
  for (auto& lst : in_) std::sort(lst.begin(), lst.end());
}

bool Digraph::has_edge(int src, int dst) const {
  const auto& lst = out_[src];
  return std::binary_search(lst.begin(), lst.end(), dst);
}

bool is_strongly_connected(const Digraph& g) {
  const int n = g.node_count();
  std::vector<std::vector<int>> out(n), in(n);
  for (int v = 0; v < n; ++v) {
    out[v] = g.out_neighbors(v);
    in[v] = g.in_neighbors(v);
  }
  // Reachability to and from node 0 covers all ordered pairs.
  auto fwd = bfs_distances(out, 0);
  auto bwd = bfs_distances(in, 0);
  for (int v = 0; v < n; ++v)
    if (fwd[v] < 0 || bwd[v] < 0) return false;
  return true;
}

int diameter(const Digraph& g) {
  const int n = g.node_count();
  std::vector<std::vector<int>> out(n);
  for (int v = 0; v < n; ++v) out[v] = g.out_neighbors(v);
  int diam = 0;
  for (int v = 0; v < n; ++v) {
    auto dist = bfs_distances(out, v);
    for (int w = 0; w < n; ++w) {
      if (dist[w] < 0)
        throw std::invalid_argument("diameter: graph is not strongly connected");
      diam = std::max(diam, dist[w]);
    }
  }
  return diam;
}

GeneratedDigraph generate_random_digraph(int n, double p, Rng& rng, int max_resamples) {
  if (n < 2) throw std::invalid_argument("generate_random_digraph: n must be >= 2");
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument("generate_random_digraph: p must be in (0, 1]");
  std::vector<std::pair<int, int>> edges;
  for (int attempt = 0; attempt <= max_resamples; ++attempt) {
    edges.clear();
    for (int src = 0; src < n; ++src)
      for (int dst = 0; dst < n; ++dst)
        if (src != dst && rng.uniform_unit() < p) edges.emplace_back(src, dst);
    Digraph g(n, edges);
    if (is_strongly_connected(g)) return GeneratedDigraph{std::move(g), attempt};
  }
  throw std::runtime_error(
      "generate_random_digraph: no strongly connected graph within " +
      std::to_string(max_resamples) + " resamples (p too small for n)");
}

Digraph read_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) -> void {
    throw std::invalid_argument("edge list, line " + std::to_string(line_no) + ": " + what);
  };

  if (!next_line()) fail("missing header");
  long long n = 0, m = 0;
  {
    std::istringstream ls(line);
    std::string extra;
    if (!(ls >> n >> m) || (ls >> extra)) fail("header must be exactly \"n m\"");
  }
  if (n < 2) fail("need at least 2 nodes");
  if (m < 0) fail("negative edge count");

  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    if (!next_line()) fail("expected " + std::to_string(m) + " edges, got " + std::to_string(i));
    std::istringstream ls(line);
    long long dst = 0, src = 0;
    std::string extra;
    if (!(ls >> dst >> src) || (ls >> extra)) fail("edge line must be exactly \"dst src\"");
    if (dst < 1 || dst > n || src < 1 || src > n) fail("node id out of range");
    if (dst == src) fail("self-edge");
    edges.emplace_back(static_cast<int>(src - 1), static_cast<int>(dst - 1));
  }
  if (next_line()) fail("trailing content after " + std::to_string(m) + " edges");

  // Digraph construction rejects duplicates; re-tag the error with context.
  try {
    return Digraph(static_cast<int>(n), edges);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("edge list: ") + e.what());
  }
}

std::string write_edge_list(const Digraph& g) {
  std::vector<std::pair<int, int>> lines;  // (dst, src), canonical order
  lines.reserve(static_cast<std::size_t>(g.edge_count()));
  for (int src = 0; src < g.node_count(); ++src)
    for (int dst : g.out_neighbors(src)) lines.emplace_back(dst, src);
  std::sort(lines.begin(), lines.end());
  std::ostringstream out;
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  for (const auto& [dst, src] : lines) out << dst + 1 << ' ' << src + 1 << '\n';
  return out.str();
}

Digraph directed_cycle(int n) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n);
  return Digraph(n, edges);
}

Digraph complete_digraph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int src = 0; src < n; ++src)
    for (int dst = 0; dst < n; ++dst)
      if (src != dst) edges.emplace_back(src, dst);
  return Digraph(n, edges);
}

}  // namespace qnet
