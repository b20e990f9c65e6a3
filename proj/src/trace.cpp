#include "qnet/trace.hpp"

#include <sstream>
#include <stdexcept>

namespace qnet {

namespace {

const char* kind_name(TraceEventKind k) {
  switch (k) {
    case TraceEventKind::Init: return "init";
    case TraceEventKind::Send: return "send";
    case TraceEventKind::State: return "state";
    case TraceEventKind::Vote: return "vote";
    case TraceEventKind::Draw: return "draw";
    case TraceEventKind::Clear: return "clear";
    case TraceEventKind::Inject: return "inject";
    case TraceEventKind::Leaders: return "leaders";
    case TraceEventKind::Halt: return "halt";
  }
  return "?";
}

bool kind_from_name(const std::string& s, TraceEventKind& out) {
  if (s == "init") out = TraceEventKind::Init;
  else if (s == "send") out = TraceEventKind::Send;
  else if (s == "state") out = TraceEventKind::State;
  else if (s == "vote") out = TraceEventKind::Vote;
  else if (s == "draw") out = TraceEventKind::Draw;
  else if (s == "clear") out = TraceEventKind::Clear;
  else if (s == "inject") out = TraceEventKind::Inject;
  else if (s == "leaders") out = TraceEventKind::Leaders;
  else if (s == "halt") out = TraceEventKind::Halt;
  else return false;
  return true;
}

}  // namespace

std::string serialize_trace(const RoundTrace& trace) {
  std::ostringstream out;
  for (const auto& [key, value] : trace.header) out << "# " << key << ' ' << value << '\n';
  for (const auto& e : trace.events) {
    out << e.round << ' ' << kind_name(e.kind);
    switch (e.kind) {
      case TraceEventKind::Init:
      case TraceEventKind::State:
      case TraceEventKind::Inject:
        out << ' ' << e.node + 1 << ' ' << e.a << ' ' << e.b;
        break;
      case TraceEventKind::Send:
        out << ' ' << e.node + 1 << ' ' << e.peer + 1 << ' ' << e.a << ' ' << e.b;
        break;
      case TraceEventKind::Vote:
        out << ' ' << e.node + 1 << ' ' << e.a << ' ' << e.b << ' ' << e.c << ' ' << e.d;
        break;
      case TraceEventKind::Draw:
        out << ' ' << e.node + 1 << ' ' << e.a;
        break;
      case TraceEventKind::Clear:
      case TraceEventKind::Halt:
        out << ' ' << e.node + 1;
        break;
      case TraceEventKind::Leaders:
        out << ' ' << e.a;
        break;
    }
    out << '\n';
  }
  return out.str();
}

RoundTrace parse_trace(std::string_view text) {
  RoundTrace trace;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw std::invalid_argument("trace, line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    if (line[line.find_first_not_of(" \t")] == '#') {
      char hash;
      std::string key;
      ls >> hash >> key;
      std::string value;
      std::getline(ls, value);
      auto pos = value.find_first_not_of(" \t");
      trace.header[key] = pos == std::string::npos ? "" : value.substr(pos);
      continue;
    }
    TraceEvent e;
    std::string kind;
    if (!(ls >> e.round >> kind)) fail("expected \"round kind ...\"");
    if (!kind_from_name(kind, e.kind)) fail("unknown event kind \"" + kind + "\"");
    auto read_node = [&](int& node) -> void {
      long long v = 0;
      if (!(ls >> v) || v < 1) fail("bad node id");
      node = static_cast<int>(v - 1);
    };
    switch (e.kind) {
      case TraceEventKind::Init:
      case TraceEventKind::State:
      case TraceEventKind::Inject:
        read_node(e.node);
        if (!(ls >> e.a >> e.b)) fail("expected two payload fields");
        break;
      case TraceEventKind::Send:
        read_node(e.node);
        read_node(e.peer);
        if (!(ls >> e.a >> e.b)) fail("expected mass payload");
        break;
      case TraceEventKind::Vote:
        read_node(e.node);
        if (!(ls >> e.a >> e.b >> e.c >> e.d)) fail("expected four vote fields");
        break;
      case TraceEventKind::Draw:
        read_node(e.node);
        if (!(ls >> e.a)) fail("expected draw value");
        break;
      case TraceEventKind::Clear:
      case TraceEventKind::Halt:
        read_node(e.node);
        break;
      case TraceEventKind::Leaders:
        if (!(ls >> e.a)) fail("expected leader count");
        break;
    }
    std::string extra;
    if (ls >> extra) fail("trailing content");
    trace.events.push_back(e);
  }
  return trace;
}

}  // namespace qnet
