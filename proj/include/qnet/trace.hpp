#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qnet {

/// Kinds of recorded events. Payload fields a..d by kind:
///   init    node, a=y, b=z        initial held mass
///   send    node, peer, a=y, b=z  mass transmitted node -> peer
///   state   node, a=y, b=z        state adoption (y_s, z_s)
///   vote    node, a/b=min, c/d=max   merged votes at a check boundary
///   draw    node, a=eta           election draw
///   clear   node                  leader flag cleared
///   inject  node, a=y, b=z        correction mass added to held mass
///   leaders a=count               flagged nodes after an election boundary
///   halt    node                  node stopped at this round
enum class TraceEventKind { Init, Send, State, Vote, Draw, Clear, Inject, Leaders, Halt };

struct TraceEvent {
  std::int64_t round = 0;
  TraceEventKind kind{};
  int node = -1;
  int peer = -1;
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;
};

/// Chronological event log of one trial plus an echo of the effective
/// configuration. Replaying a trace reproduces the TrialResult.
struct RoundTrace {
  std::map<std::string, std::string> header;
  std::vector<TraceEvent> events;

  void add(TraceEvent e) { events.push_back(e); }
};

/// One event per line: "round kind fields...", node ids 1-based as in the
/// edge-list format. Header entries are "# key value" comment lines.
std::string serialize_trace(const RoundTrace& trace);

/// Inverse of serialize_trace. Throws std::invalid_argument on bad input.
RoundTrace parse_trace(std::string_view text);

}  // namespace qnet
