#include "qnet/sweep.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace qnet {

namespace {

TrialRecord run_one(const GraphSource& source, const SimConfig& cfg, int index,
                    std::int64_t& rejections) {
  TrialRecord rec;
  rec.trial = index;
  rec.seed = trial_seed(cfg.master_seed, static_cast<std::uint64_t>(index));
  SplitMixRng rng(rec.seed);

  std::optional<Digraph> generated;
  if (!source.fixed) {
    for (;;) {
      GeneratedDigraph gen = generate_random_digraph(source.n, source.p, rng,
                                                     source.max_resamples);
      if (source.target_diameter > 0 && diameter(gen.graph) != source.target_diameter) {
        ++rejections;
        continue;
      }
      generated = std::move(gen.graph);
      break;
    }
  }
  const Digraph& g = source.fixed ? *source.fixed : *generated;
  rec.n = g.node_count();
  rec.m_edges = g.edge_count();
  rec.diam = diameter(g);
  const SimConfig resolved = resolve_config(g, cfg);
  rec.d_prime = resolved.d_prime;
  rec.result = run_trial(g, resolved, rng);
  return rec;
}

}  // namespace

SweepResult run_sweep(const GraphSource& source, const SimConfig& cfg, int threads) {
  if (cfg.trials < 1) throw std::invalid_argument("run_sweep: trials must be >= 1");
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min(threads, cfg.trials);

  SweepResult out;
  out.trials.resize(static_cast<std::size_t>(cfg.trials));

  if (threads == 1) {
    for (int i = 0; i < cfg.trials; ++i)
      out.trials[static_cast<std::size_t>(i)] = run_one(source, cfg, i, out.diameter_rejections);
    return out;
  }

  std::atomic<int> next{0};
  std::atomic<std::int64_t> rejections{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        std::int64_t local_rejections = 0;
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= cfg.trials) break;
          out.trials[static_cast<std::size_t>(i)] =
              run_one(source, cfg, i, local_rejections);
        }
        rejections.fetch_add(local_rejections);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  out.diameter_rejections = rejections.load();
  return out;
}

}  // namespace qnet
