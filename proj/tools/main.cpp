// Command-line front end: graph generation, single runs with traces,
// multi-trial sweeps with statistics, bound evaluation and trace
// verification. Exit codes: 0 ok, 2 invalid config, 3 graph not strongly
// connected, 4 step budget exceeded or deadlock, 5 verification failure.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qnet/analysis.hpp"
#include "qnet/digraph.hpp"
#include "qnet/engine.hpp"
#include "qnet/sweep.hpp"
#include "qnet/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotConnected = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitVerification = 5;

constexpr const char* kCsvHeader =
    "trial,seed,n,m_edges,D,d_prime,mode,steps_converged,steps_halted,correct,leader_count,"
    "deadlocked";

struct RunOptions {
  std::string mode = "avg-degree";
  std::string graph_path;
  int n = 20;
  double edge_prob = 0.5;
  int target_diam = -1;
  int d_prime = 0;
  int u_v = 20;
  int eta_max = 255;
  int preset_leader = -1;
  std::string trigger = "geq1";
  std::string vote = "ratio";
  std::string rng_kind = "default";
  std::uint64_t seed = 0;
  std::int64_t max_steps = 0;
  int max_resamples = 10000;
  int trials = 1;
  int threads = 0;
  bool allow_failures = false;
  std::string out_path;
  std::string trace_path;
  std::string state_dump_path;
  std::string stats_path;
};

void add_sim_flags(CLI::App* cmd, RunOptions& opt, bool sweep) {
  cmd->add_option("--mode", opt.mode, "avg-degree | size-seq | size-par-oracle | "
                                      "size-par-correction | size-anonymous")
      ->capture_default_str();
  cmd->add_option("--graph", opt.graph_path, "edge-list file (otherwise a graph is generated)");
  cmd->add_option("--n", opt.n, "nodes for generated graphs")->capture_default_str();
  cmd->add_option("--edge-prob", opt.edge_prob, "edge probability for generated graphs")
      ->capture_default_str();
  cmd->add_option("--target-diam", opt.target_diam,
                  "regenerate until the graph has exactly this diameter");
  cmd->add_option("--d-prime", opt.d_prime, "diameter upper bound D' (0 = use exact diameter)");
  cmd->add_option("--uv", opt.u_v, "election rounds U_v")->capture_default_str();
  cmd->add_option("--eta-max", opt.eta_max, "largest drawable election value")
      ->capture_default_str();
  cmd->add_option("--leader", opt.preset_leader, "preset leader id (1-based), skips election");
  cmd->add_option("--trigger", opt.trigger, "state/transmit trigger: geq1 | gt1")
      ->capture_default_str();
  cmd->add_option("--vote", opt.vote, "vote source: ratio | numerator")->capture_default_str();
  if (!sweep)
    cmd->add_option("--rng", opt.rng_kind, "default | stub-selfloop (test hook)")
        ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "master seed")->capture_default_str();
  cmd->add_option("--max-steps", opt.max_steps, "step budget (0 = 100*n*d_prime)");
  cmd->add_option("--max-resamples", opt.max_resamples,
                  "connectivity resample cap for the generator")
      ->capture_default_str();
  cmd->add_option("--out", opt.out_path, "per-trial CSV output path");
  if (sweep) {
    cmd->add_option("--trials", opt.trials, "number of trials")->capture_default_str();
    cmd->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
    cmd->add_option("--stats", opt.stats_path, "statistics JSON output path");
    cmd->add_flag("--allow-failures", opt.allow_failures,
                  "exit 0 even when some trials are incorrect");
  } else {
    cmd->add_option("--trace", opt.trace_path, "round trace output path");
    cmd->add_option("--state-dump", opt.state_dump_path,
                    "per-round per-node (y_s, z_s) CSV for plotting");
  }
}

// Exits with kExitConfig on invalid enum flags.
qnet::SimConfig config_from(const RunOptions& opt) {
  qnet::SimConfig cfg;
  auto mode = qnet::mode_from_string(opt.mode);
  auto trigger = qnet::trigger_from_string(opt.trigger);
  auto vote = qnet::vote_from_string(opt.vote);
  if (!mode) throw CLI::ValidationError("--mode", "unknown mode \"" + opt.mode + "\"");
  if (!trigger) throw CLI::ValidationError("--trigger", "unknown trigger \"" + opt.trigger + "\"");
  if (!vote) throw CLI::ValidationError("--vote", "unknown vote source \"" + opt.vote + "\"");
  if (opt.rng_kind != "default" && opt.rng_kind != "stub-selfloop")
    throw CLI::ValidationError("--rng", "unknown rng \"" + opt.rng_kind + "\"");
  cfg.mode = *mode;
  cfg.trigger = *trigger;
  cfg.vote = *vote;
  cfg.d_prime = opt.d_prime;
  cfg.u_v = opt.u_v;
  cfg.eta_max = opt.eta_max;
  cfg.preset_leader = opt.preset_leader > 0 ? opt.preset_leader - 1 : -1;
  cfg.master_seed = opt.seed;
  cfg.max_steps = opt.max_steps;
  cfg.trials = opt.trials;
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

std::string csv_row(const qnet::TrialRecord& rec, const std::string& mode) {
  std::ostringstream row;
  row << rec.trial << ',' << rec.seed << ',' << rec.n << ',' << rec.m_edges << ',' << rec.diam
      << ',' << rec.d_prime << ',' << mode << ',' << rec.result.steps_converged << ','
      << rec.result.steps_halted << ',' << (rec.result.correct ? 1 : 0) << ','
      << rec.result.leader_count << ',' << (rec.result.deadlocked ? 1 : 0);
  return row.str();
}

void print_effective_config(const qnet::Digraph& g, const qnet::SimConfig& cfg,
                            std::uint64_t trial0_seed, const RunOptions& opt) {
  std::cout << "config: mode=" << qnet::to_string(cfg.mode) << " n=" << g.node_count()
            << " m=" << g.edge_count() << " D=" << qnet::diameter(g)
            << " d_prime=" << cfg.d_prime << " u_v=" << cfg.u_v << " eta_max=" << cfg.eta_max
            << " trigger=" << qnet::to_string(cfg.trigger)
            << " vote=" << qnet::to_string(cfg.vote) << " seed=" << cfg.master_seed
            << " trial_seed=" << trial0_seed << " max_steps=" << cfg.max_steps
            << " rng=" << opt.rng_kind << '\n';
}

// Fresh graph for single runs and gen-graph, drawn from the trial-0 stream so
// `run` and `sweep --trials 1` see the same instance.
qnet::Digraph make_graph(const RunOptions& opt, qnet::Rng& rng, std::int64_t* rejections) {
  for (;;) {
    auto gen = qnet::generate_random_digraph(opt.n, opt.edge_prob, rng, opt.max_resamples);
    if (opt.target_diam > 0 && qnet::diameter(gen.graph) != opt.target_diam) {
      if (rejections) ++*rejections;
      continue;
    }
    return std::move(gen.graph);
  }
}

int cmd_gen_graph(const RunOptions& opt) {
  qnet::SplitMixRng rng(qnet::trial_seed(opt.seed, 0));
  std::int64_t rejections = 0;
  qnet::Digraph g = make_graph(opt, rng, &rejections);
  std::string text = qnet::write_edge_list(g);
  std::cerr << "gen-graph: n=" << g.node_count() << " m=" << g.edge_count()
            << " D=" << qnet::diameter(g) << " seed=" << opt.seed
            << " diameter_rejections=" << rejections << '\n';
  if (opt.out_path.empty())
    std::cout << text;
  else
    write_file(opt.out_path, text);
  return kExitOk;
}

int cmd_run(const RunOptions& opt) {
  qnet::SimConfig cfg = config_from(opt);
  const std::uint64_t seed0 = qnet::trial_seed(cfg.master_seed, 0);
  qnet::SplitMixRng default_rng(seed0);
  qnet::StubSelfLoopRng stub_rng;
  qnet::Rng& rng = opt.rng_kind == "stub-selfloop" ? static_cast<qnet::Rng&>(stub_rng)
                                                   : static_cast<qnet::Rng&>(default_rng);

  std::optional<qnet::Digraph> graph;
  if (!opt.graph_path.empty()) {
    graph = qnet::read_edge_list(read_file(opt.graph_path));
    if (!qnet::is_strongly_connected(*graph)) {
      std::cerr << "error: graph in " << opt.graph_path << " is not strongly connected\n";
      return kExitNotConnected;
    }
  } else {
    // Generated graphs always come from the seeded stream; the stub rng only
    // drives the protocol's random choices.
    graph = make_graph(opt, default_rng, nullptr);
  }
  cfg = qnet::resolve_config(*graph, cfg);
  print_effective_config(*graph, cfg, seed0, opt);
  for (const auto& finding : qnet::check_assumptions(*graph, cfg))
    std::cerr << "warning: " << finding << '\n';

  qnet::RoundTrace trace;
  trace.header["seed"] = std::to_string(cfg.master_seed);
  qnet::TrialResult result = qnet::run_trial(*graph, cfg, rng, &trace);

  qnet::TrialRecord rec;
  rec.trial = 0;
  rec.seed = seed0;
  rec.n = graph->node_count();
  rec.m_edges = graph->edge_count();
  rec.diam = qnet::diameter(*graph);
  rec.d_prime = cfg.d_prime;
  rec.result = result;
  const std::string row = csv_row(rec, qnet::to_string(cfg.mode));
  std::cout << kCsvHeader << '\n' << row << '\n';
  if (!opt.out_path.empty())
    write_file(opt.out_path, std::string(kCsvHeader) + "\n" + row + "\n");
  if (!opt.trace_path.empty()) write_file(opt.trace_path, qnet::serialize_trace(trace));
  if (!opt.state_dump_path.empty()) {
    // Full per-round curves rebuilt from the trace's state events.
    std::ostringstream dump;
    dump << "round,node,y_s,z_s\n";
    std::vector<std::pair<std::int64_t, std::int64_t>> states(graph->node_count(), {0, 1});
    std::vector<qnet::TraceEvent> events = trace.events;
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.round < b.round; });
    std::int64_t rounds = std::stoll(trace.header.at("rounds"));
    std::size_t i = 0;
    for (std::int64_t r = 0; r <= rounds; ++r) {
      for (; i < events.size() && events[i].round == r; ++i) {
        const auto& e = events[i];
        if (e.kind == qnet::TraceEventKind::Init)
          states[e.node] = {e.a, e.b == 0 ? 1 : e.b};
        else if (e.kind == qnet::TraceEventKind::State)
          states[e.node] = {e.a, e.b};
      }
      for (int v = 0; v < graph->node_count(); ++v)
        dump << r << ',' << v + 1 << ',' << states[v].first << ',' << states[v].second << '\n';
    }
    write_file(opt.state_dump_path, dump.str());
  }

  qnet::VerifyReport report = qnet::ground_truth_verify(*graph, cfg, result, &trace);
  const bool unfinished =
      result.deadlocked ||
      (result.steps_halted < 0 && !(cfg.mode == qnet::Mode::size_anonymous && result.correct));
  if (unfinished) {
    std::cerr << report.to_string();
    std::cerr << (result.deadlocked ? "error: deadlock; step budget abandoned\n"
                                    : "error: max steps exceeded without convergence\n");
    return kExitNoConvergence;
  }
  if (!report.ok()) {
    std::cerr << report.to_string();
    return kExitVerification;
  }
  std::cout << "verification ok\n";
  return kExitOk;
}

int cmd_sweep(const RunOptions& opt) {
  qnet::SimConfig cfg = config_from(opt);
  qnet::GraphSource source;
  source.n = opt.n;
  source.p = opt.edge_prob;
  source.target_diameter = opt.target_diam;
  source.max_resamples = opt.max_resamples;
  if (!opt.graph_path.empty()) {
    source.fixed = qnet::read_edge_list(read_file(opt.graph_path));
    if (!qnet::is_strongly_connected(*source.fixed)) {
      std::cerr << "error: graph in " << opt.graph_path << " is not strongly connected\n";
      return kExitNotConnected;
    }
  }
  std::cout << "config: mode=" << qnet::to_string(cfg.mode) << " trials=" << cfg.trials
            << " seed=" << cfg.master_seed << " d_prime=" << cfg.d_prime << " u_v=" << cfg.u_v
            << " eta_max=" << cfg.eta_max << " trigger=" << qnet::to_string(cfg.trigger)
            << " vote=" << qnet::to_string(cfg.vote);
  if (source.fixed)
    std::cout << " graph=" << opt.graph_path;
  else
    std::cout << " n=" << source.n << " edge_prob=" << source.p
              << " target_diam=" << source.target_diameter;
  std::cout << '\n';

  qnet::SweepResult sweep = qnet::run_sweep(source, cfg, opt.threads);

  std::ostringstream csv;
  csv << kCsvHeader << '\n';
  const std::string mode_name = qnet::to_string(cfg.mode);
  std::vector<qnet::TrialResult> results;
  results.reserve(sweep.trials.size());
  std::int64_t incorrect = 0, unfinished = 0;
  for (const auto& rec : sweep.trials) {
    csv << csv_row(rec, mode_name) << '\n';
    results.push_back(rec.result);
    if (!rec.result.correct) ++incorrect;
    const bool done = rec.result.steps_halted >= 0 ||
                      (cfg.mode == qnet::Mode::size_anonymous && rec.result.correct);
    if (!done) ++unfinished;
  }
  if (!opt.out_path.empty())
    write_file(opt.out_path, csv.str());
  else
    std::cout << csv.str();

  qnet::analysis::TrialStats stats = qnet::analysis::aggregate_trials(results);
  nlohmann::json j;
  j["trials"] = sweep.trials.size();
  j["counted"] = stats.count;
  j["mean_steps"] = stats.mean;
  j["min_steps"] = stats.min;
  j["max_steps"] = stats.max;
  j["bin_width"] = stats.bin_width;
  j["multi_leader"] = stats.multi_leader;
  j["unconverged"] = stats.unconverged;
  j["incorrect"] = incorrect;
  j["diameter_rejections"] = sweep.diameter_rejections;
  j["mode"] = mode_name;
  j["seed"] = cfg.master_seed;
  auto& hist = j["histogram"] = nlohmann::json::array();
  for (const auto& [bin, count] : stats.histogram)
    hist.push_back({{"bin_start", bin}, {"count", count}});
  if (!opt.stats_path.empty())
    write_file(opt.stats_path, j.dump(2) + "\n");
  else
    std::cout << j.dump(2) << '\n';

  if (!opt.allow_failures) {
    if (unfinished > 0) return kExitNoConvergence;
    if (incorrect > 0) return kExitVerification;
  }
  return kExitOk;
}

int cmd_bounds(CLI::App* cmd, const qnet::analysis::BoundInputs& in) {
  using namespace qnet::analysis;
  const bool have_walk = cmd->count("--dmax") && cmd->count("--diam");
  const bool have_n = cmd->count("--n") > 0;
  const bool have_theorem2 = have_walk && have_n && cmd->count("--p0") && cmd->count("--d-prime");
  const bool have_leader = have_n && cmd->count("--uv") && cmd->count("--levels");
  if (!have_walk && !have_leader) {
    std::cerr << "error: nothing to evaluate; pass --dmax/--diam and/or --uv/--levels\n";
    return kExitConfig;
  }
  try {
    if (have_walk) {
      Bound l1 = lemma1_bound(in);
      std::cout << "single-token-hit dmax=" << in.d_max_out << " diam=" << in.diam
                << " exact=" << l1.str() << " decimal=" << l1.to_double() << '\n';
      if (have_n) {
        Bound l2 = lemma2_bound(in);
        std::cout << "two-token-meet n=" << in.n << " dmax=" << in.d_max_out
                  << " diam=" << in.diam << " exact=" << l2.str() << " decimal=" << l2.to_double()
                  << '\n';
      }
    }
    if (have_theorem2) {
      ConvergenceBound cb = theorem2_k0(in);
      std::cout << "convergence-steps n=" << in.n << " dmax=" << in.d_max_out
                << " diam=" << in.diam << " d_prime=" << in.d_prime << " p0=" << in.p0
                << " epsilon=" << cb.epsilon_prime << " tau_merge=" << cb.tau_prime
                << " tau_visit=" << cb.tau_dprime << " k0=" << cb.k0 << '\n';
    }
    if (have_leader) {
      Bound lb = leader_success_lower_bound(in.u_v, in.n, in.m_levels);
      std::cout << "leader-success uv=" << in.u_v << " n=" << in.n << " levels=" << in.m_levels
                << " exact=" << lb.str() << " decimal=" << lb.to_double() << '\n';
    }
  } catch (const BoundInapplicable& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_verify(const std::string& graph_path, const std::string& trace_path,
               const std::string& mode_override, int d_prime_override) {
  qnet::Digraph g = qnet::read_edge_list(read_file(graph_path));
  if (!qnet::is_strongly_connected(g)) {
    std::cerr << "error: graph in " << graph_path << " is not strongly connected\n";
    return kExitNotConnected;
  }
  qnet::RoundTrace trace = qnet::parse_trace(read_file(trace_path));
  qnet::SimConfig cfg;
  auto header_int = [&](const char* key, auto setter) {
    if (auto it = trace.header.find(key); it != trace.header.end()) setter(std::stoll(it->second));
  };
  if (auto it = trace.header.find("mode"); it != trace.header.end())
    if (auto m = qnet::mode_from_string(it->second)) cfg.mode = *m;
  if (auto it = trace.header.find("trigger"); it != trace.header.end())
    if (auto t = qnet::trigger_from_string(it->second)) cfg.trigger = *t;
  if (auto it = trace.header.find("vote"); it != trace.header.end())
    if (auto v = qnet::vote_from_string(it->second)) cfg.vote = *v;
  header_int("d_prime", [&](std::int64_t v) { cfg.d_prime = static_cast<int>(v); });
  header_int("u_v", [&](std::int64_t v) { cfg.u_v = static_cast<int>(v); });
  header_int("eta_max", [&](std::int64_t v) { cfg.eta_max = static_cast<int>(v); });
  header_int("preset_leader", [&](std::int64_t v) { cfg.preset_leader = static_cast<int>(v); });
  header_int("max_steps", [&](std::int64_t v) { cfg.max_steps = v; });
  if (!mode_override.empty()) {
    auto m = qnet::mode_from_string(mode_override);
    if (!m) {
      std::cerr << "error: unknown mode \"" << mode_override << "\"\n";
      return kExitConfig;
    }
    cfg.mode = *m;
  }
  if (d_prime_override > 0) cfg.d_prime = d_prime_override;

  qnet::TrialResult result = qnet::replay_trace(g, cfg, trace);
  qnet::VerifyReport report = qnet::ground_truth_verify(g, cfg, result, &trace);
  std::cout << "replayed: steps_converged=" << result.steps_converged
            << " steps_halted=" << result.steps_halted << " correct=" << result.correct
            << " leader_count=" << result.leader_count << " deadlocked=" << result.deadlocked
            << '\n';
  std::cout << report.to_string();
  return report.ok() ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized distributed protocols: exact average degree, network size and "
               "leader election on directed graphs"};
  app.require_subcommand(1);

  RunOptions gen_opt;
  auto* gen = app.add_subcommand("gen-graph", "generate a strongly connected random digraph");
  gen->add_option("--n", gen_opt.n, "nodes")->capture_default_str();
  gen->add_option("--edge-prob", gen_opt.edge_prob, "edge probability")->capture_default_str();
  gen->add_option("--seed", gen_opt.seed, "seed")->capture_default_str();
  gen->add_option("--target-diam", gen_opt.target_diam, "regenerate until this exact diameter");
  gen->add_option("--max-resamples", gen_opt.max_resamples, "connectivity resample cap")
      ->capture_default_str();
  gen->add_option("--out", gen_opt.out_path, "output file (default: stdout)");

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "run one trial, with trace and verification");
  add_sim_flags(run, run_opt, false);

  RunOptions sweep_opt;
  auto* sweep = app.add_subcommand("sweep", "run many independent trials and aggregate");
  add_sim_flags(sweep, sweep_opt, true);

  qnet::analysis::BoundInputs bound_in;
  auto* bounds = app.add_subcommand("bounds", "evaluate the convergence and election bounds");
  bounds->add_option("--n", bound_in.n, "nodes");
  bounds->add_option("--dmax", bound_in.d_max_out, "maximum out-degree");
  bounds->add_option("--diam", bound_in.diam, "diameter D");
  bounds->add_option("--d-prime", bound_in.d_prime, "diameter upper bound D'");
  bounds->add_option("--p0", bound_in.p0, "target probability in (0,1)");
  bounds->add_option("--uv", bound_in.u_v, "election rounds");
  bounds->add_option("--levels", bound_in.m_levels, "drawable values M = eta_max + 1");

  std::string verify_graph, verify_trace, verify_mode;
  int verify_d_prime = 0;
  auto* verify = app.add_subcommand("verify", "replay a trace and check it against the graph");
  verify->add_option("--graph", verify_graph, "edge-list file")->required();
  verify->add_option("--trace", verify_trace, "trace file")->required();
  verify->add_option("--mode", verify_mode, "override the trace's mode header");
  verify->add_option("--d-prime", verify_d_prime, "override the trace's d_prime header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_graph(gen_opt);
    if (run->parsed()) return cmd_run(run_opt);
    if (sweep->parsed()) return cmd_sweep(sweep_opt);
    if (bounds->parsed()) return cmd_bounds(bounds, bound_in);
    if (verify->parsed())
      return cmd_verify(verify_graph, verify_trace, verify_mode, verify_d_prime);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
