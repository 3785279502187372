#include "futv/sim.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "futv/algebra.hpp"

namespace futv {

MpiCall MpiCall::send(int dst, Value m) { return {Kind::Send, dst, std::move(m), -1}; }
MpiCall MpiCall::recv(int src) { return {Kind::Recv, src, {}, -1}; }
MpiCall MpiCall::isend(int dst, Value m) { return {Kind::ISend, dst, std::move(m), -1}; }
MpiCall MpiCall::wait(int handle) { return {Kind::Wait, -1, {}, handle}; }
MpiCall MpiCall::bcast(Value m) { return {Kind::Bcast, -1, std::move(m), -1}; }
MpiCall MpiCall::barrier() { return {Kind::Barrier, -1, {}, -1}; }
MpiCall MpiCall::finish() { return {Kind::Finish, -1, {}, -1}; }

std::string MpiCall::str() const {
  switch (kind) {
    case Kind::Send: return "Send(" + std::to_string(peer) + "," + msg.str() + ")";
    case Kind::Recv: return peer < 0 ? "Recv(*)" : "Recv(" + std::to_string(peer) + ")";
    case Kind::ISend: return "ISend(" + std::to_string(peer) + "," + msg.str() + ")";
    case Kind::Wait: return "Wait(" + std::to_string(handle) + ")";
    case Kind::Bcast: return "Bcast(" + msg.str() + ")";
    case Kind::Barrier: return "Barrier()";
    case Kind::Finish: return "Finish()";
  }
  return "?";
}

Schedule Schedule::seeded(std::uint64_t seed) {
  Schedule s;
  s.kind = Kind::Seeded;
  s.seed = seed;
  return s;
}

Schedule Schedule::scripted(std::vector<std::size_t> script) {
  Schedule s;
  s.kind = Kind::Scripted;
  s.script = std::move(script);
  return s;
}

namespace {

struct QEntry {
  Value msg;
  int src_handle = -1;  // isend request that buffered this entry, if any
};

struct SimState {
  std::vector<std::vector<StepRecord>> history;
  std::vector<std::deque<MpiCall>> pending;  // internal bcast expansion
  std::vector<char> finished;
  std::vector<int> next_handle;
  std::vector<std::vector<char>> delivered;  // per rank, indexed by handle id
  std::map<std::pair<int, int>, std::vector<QEntry>> queues;
  std::vector<char> arrived;
  int arrived_count = 0;

  static SimState fresh(int n) {
    SimState s;
    s.history.resize(static_cast<std::size_t>(n));
    s.pending.resize(static_cast<std::size_t>(n));
    s.finished.assign(static_cast<std::size_t>(n), 0);
    s.next_handle.assign(static_cast<std::size_t>(n), 0);
    s.delivered.resize(static_cast<std::size_t>(n));
    s.arrived.assign(static_cast<std::size_t>(n), 0);
    return s;
  }

  bool all_finished() const {
    for (char f : finished)
      if (!f) return false;
    return true;
  }

  std::string key() const {
    std::ostringstream os;
    auto put_call = [&](const MpiCall& c) {
      os << static_cast<int>(c.kind) << "," << c.peer << "," << c.msg.str() << "," << c.handle
         << ";";
    };
    for (std::size_t r = 0; r < history.size(); ++r) {
      os << "r" << r << ":";
      for (const auto& rec : history[r]) {
        put_call(rec.call);
        os << (rec.result.msg ? rec.result.msg->str() : "-") << "," << rec.result.peer << ","
           << rec.result.handle << "|";
      }
      os << "p:";
      for (const auto& c : pending[r]) put_call(c);
      os << "f" << static_cast<int>(finished[r]) << "h" << next_handle[r] << "d";
      for (char d : delivered[r]) os << static_cast<int>(d);
      os << "b" << static_cast<int>(arrived[r]) << "#";
    }
    os << "q:";
    for (const auto& [k, q] : queues) {
      os << k.first << ">" << k.second << "[";
      for (const auto& e : q) os << e.msg.str() << "/" << e.src_handle << ",";
      os << "]";
    }
    return os.str();
  }
};

struct Event {
  enum class Kind {
    BufferSend,
    Rendezvous,   // peer = matched receiver
    Deliver,      // peer = source rank
    IssueISend,
    CompleteWait,
    IssueBcast,
    Arrive,
    CompleteFinish,
  };
  Kind kind;
  int rank;
  int peer = -1;
};

struct CurCall {
  MpiCall call;
  bool internal = false;  // from the bcast expansion queue
  bool valid = false;
};

class Runtime {
public:
  Runtime(const Program& program, int n, const SimOptions& opts)
      : program_(program), n_(n), opts_(opts), state_(SimState::fresh(n)) {}

  SimState& state() { return state_; }
  const SimState& state() const { return state_; }
  void set_state(SimState s) { state_ = std::move(s); }

  CurCall current(int r) const {
    CurCall out;
    if (state_.finished[static_cast<std::size_t>(r)]) return out;
    const auto& pend = state_.pending[static_cast<std::size_t>(r)];
    if (!pend.empty()) {
      out.call = pend.front();
      out.internal = true;
      out.valid = true;
      return out;
    }
    out.call = program_(RankView{r, n_, state_.history[static_cast<std::size_t>(r)]});
    out.valid = true;
    return out;
  }

  std::vector<Event> enabled_events() const {
    std::vector<Event> out;
    for (int r = 0; r < n_; ++r) {
      auto ur = static_cast<std::size_t>(r);
      if (state_.finished[ur] || state_.arrived[ur]) continue;
      CurCall cur = current(r);
      if (!cur.valid) continue;
      switch (cur.call.kind) {
        case MpiCall::Kind::Send: {
          check_peer(cur.call.peer, "Send");
          out.push_back({Event::Kind::BufferSend, r});
          int dst = cur.call.peer;
          if (dst != r && !state_.finished[static_cast<std::size_t>(dst)] &&
              !state_.arrived[static_cast<std::size_t>(dst)]) {
            CurCall theirs = current(dst);
            if (theirs.valid && theirs.call.kind == MpiCall::Kind::Recv &&
                (theirs.call.peer == r || theirs.call.peer < 0))
              out.push_back({Event::Kind::Rendezvous, r, dst});
          }
          break;
        }
        case MpiCall::Kind::Recv: {
          if (cur.call.peer >= 0) {
            check_peer(cur.call.peer, "Recv");
            if (queue_nonempty(cur.call.peer, r))
              out.push_back({Event::Kind::Deliver, r, cur.call.peer});
          } else {
            for (int s = 0; s < n_; ++s)
              if (queue_nonempty(s, r)) out.push_back({Event::Kind::Deliver, r, s});
          }
          break;
        }
        case MpiCall::Kind::ISend:
          check_peer(cur.call.peer, "ISend");
          out.push_back({Event::Kind::IssueISend, r});
          break;
        case MpiCall::Kind::Wait: {
          int h = cur.call.handle;
          const auto& deliv = state_.delivered[ur];
          if (h < 0 || h >= static_cast<int>(state_.next_handle[ur]))
            fail(Errc::ProgramFault, "Wait on unknown handle " + std::to_string(h));
          if (!opts_.wait_on_delivery || deliv[static_cast<std::size_t>(h)])
            out.push_back({Event::Kind::CompleteWait, r});
          break;
        }
        case MpiCall::Kind::Bcast:
          out.push_back({Event::Kind::IssueBcast, r});
          break;
        case MpiCall::Kind::Barrier:
          out.push_back({Event::Kind::Arrive, r});
          break;
        case MpiCall::Kind::Finish:
          out.push_back({Event::Kind::CompleteFinish, r});
          break;
      }
    }
    return out;
  }

  // Applies the event; logged trace events are appended to sink when given.
  void apply(const Event& ev, std::vector<TraceEvent>* sink) {
    auto ur = static_cast<std::size_t>(ev.rank);
    CurCall cur = current(ev.rank);
    switch (ev.kind) {
      case Event::Kind::BufferSend: {
        state_.queues[{ev.rank, cur.call.peer}].push_back({cur.call.msg, -1});
        complete_send(ev.rank, cur, sink);
        break;
      }
      case Event::Kind::Rendezvous: {
        int dst = ev.peer;
        complete_send(ev.rank, cur, sink);
        CurCall theirs = current(dst);
        CallResult res;
        res.msg = cur.call.msg;
        res.peer = ev.rank;
        state_.history[static_cast<std::size_t>(dst)].push_back({theirs.call, res});
        log(sink, dst, "recv", ev.rank, cur.call.msg, -1);
        break;
      }
      case Event::Kind::Deliver: {
        auto key = std::make_pair(ev.peer, ev.rank);
        auto it = state_.queues.find(key);
        QEntry entry = it->second.front();
        it->second.erase(it->second.begin());
        if (it->second.empty()) state_.queues.erase(it);
        if (entry.src_handle >= 0)
          state_.delivered[static_cast<std::size_t>(ev.peer)]
                          [static_cast<std::size_t>(entry.src_handle)] = 1;
        CallResult res;
        res.msg = entry.msg;
        res.peer = ev.peer;
        state_.history[ur].push_back({cur.call, res});
        log(sink, ev.rank, "recv", ev.peer, entry.msg, -1);
        break;
      }
      case Event::Kind::IssueISend: {
        int h = state_.next_handle[ur]++;
        state_.delivered[ur].push_back(0);
        state_.queues[{ev.rank, cur.call.peer}].push_back({cur.call.msg, h});
        CallResult res;
        res.handle = h;
        state_.history[ur].push_back({cur.call, res});
        log(sink, ev.rank, "isend", cur.call.peer, cur.call.msg, h);
        break;
      }
      case Event::Kind::CompleteWait: {
        state_.history[ur].push_back({cur.call, {}});
        log(sink, ev.rank, "wait", -1, std::nullopt, cur.call.handle);
        break;
      }
      case Event::Kind::IssueBcast: {
        state_.history[ur].push_back({cur.call, {}});
        log(sink, ev.rank, "bcast", -1, cur.call.msg, -1);
        for (int j = 0; j < n_; ++j)
          if (j != ev.rank) state_.pending[ur].push_back(MpiCall::send(j, cur.call.msg));
        break;
      }
      case Event::Kind::Arrive: {
        state_.history[ur].push_back({cur.call, {}});
        log(sink, ev.rank, "barrier", -1, std::nullopt, -1);
        state_.arrived[ur] = 1;
        if (++state_.arrived_count == n_) {
          std::fill(state_.arrived.begin(), state_.arrived.end(), 0);
          state_.arrived_count = 0;
        }
        break;
      }
      case Event::Kind::CompleteFinish:
        state_.finished[ur] = 1;
        break;
    }
  }

  int ts = 0;

private:
  const Program& program_;
  int n_;
  SimOptions opts_;
  SimState state_;

  void check_peer(int p, const char* what) const {
    if (p < 0 || p >= n_)
      fail(Errc::ProgramFault, std::string(what) + " addresses invalid rank " +
                                   std::to_string(p));
  }

  bool queue_nonempty(int src, int dst) const {
    auto it = state_.queues.find({src, dst});
    return it != state_.queues.end() && !it->second.empty();
  }

  void complete_send(int r, const CurCall& cur, std::vector<TraceEvent>* sink) {
    auto ur = static_cast<std::size_t>(r);
    if (cur.internal) {
      state_.pending[ur].pop_front();
      return;  // bcast expansion sends are runtime-internal
    }
    state_.history[ur].push_back({cur.call, {}});
    log(sink, r, "send", cur.call.peer, cur.call.msg, -1);
  }

  void log(std::vector<TraceEvent>* sink, int rank, const char* op, int peer,
           std::optional<Value> msg, int handle) {
    if (sink == nullptr) return;
    TraceEvent ev;
    ev.rank = rank;
    ev.op = op;
    ev.peer = peer;
    ev.msg = std::move(msg);
    ev.handle = handle;
    ev.ts = ts++;
    sink->push_back(std::move(ev));
  }
};

std::vector<Trace> split_by_rank(const std::vector<TraceEvent>& all, int n) {
  std::vector<Trace> out(static_cast<std::size_t>(n));
  for (const auto& ev : all) {
    TraceEvent copy = ev;
    copy.seq = static_cast<int>(out[static_cast<std::size_t>(ev.rank)].size());
    out[static_cast<std::size_t>(ev.rank)].push_back(std::move(copy));
  }
  return out;
}

}  // namespace

RunResult run(const Program& program, int n, const Schedule& schedule, const SimOptions& opts) {
  if (n < 1) fail(Errc::ProgramFault, "need at least one rank");
  Runtime rt(program, n, opts);
  std::vector<TraceEvent> log;
  std::mt19937_64 rng(schedule.seed);
  std::size_t steps = 0;

  while (true) {
    if (rt.state().all_finished())
      return {RunOutcome::Completed, split_by_rank(log, n)};
    auto events = rt.enabled_events();
    if (events.empty()) return {RunOutcome::Deadlocked, split_by_rank(log, n)};
    if (steps >= schedule.depth_bound)
      return {RunOutcome::BoundExceeded, split_by_rank(log, n)};
    std::size_t pick;
    if (schedule.kind == Schedule::Kind::Seeded) {
      pick = static_cast<std::size_t>(rng() % events.size());
    } else {
      if (steps >= schedule.script.size())
        fail(Errc::ProgramFault, "schedule script exhausted");
      pick = schedule.script[steps];
      if (pick >= events.size()) fail(Errc::ProgramFault, "schedule script index out of range");
    }
    rt.apply(events[pick], &log);
    ++steps;
  }
}

ExhaustiveResult run_all(const Program& program, int n, std::size_t depth_bound,
                         std::size_t max_states, const SimOptions& opts) {
  if (n < 1) fail(Errc::ProgramFault, "need at least one rank");
  Runtime rt(program, n, opts);

  SimGraph g;
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<SimState> states;

  SimState init = rt.state();
  states.push_back(init);
  index.emplace(init.key(), 0);
  g.adj.emplace_back();
  g.terminal.push_back(0);
  g.deadlocked.push_back(0);

  std::vector<std::uint32_t> frontier{0};
  std::size_t depth = 0;
  while (!frontier.empty()) {
    if (depth++ > depth_bound) fail(Errc::BoundExceeded, "exhaustive depth bound exceeded");
    std::vector<std::uint32_t> next;
    for (std::uint32_t s : frontier) {
      rt.set_state(states[s]);
      if (rt.state().all_finished()) {
        g.terminal[s] = 1;
        continue;
      }
      auto events = rt.enabled_events();
      if (events.empty()) {
        g.deadlocked[s] = 1;
        continue;
      }
      for (const auto& ev : events) {
        rt.set_state(states[s]);
        rt.ts = 0;
        std::vector<TraceEvent> logged;
        rt.apply(ev, &logged);
        SimState succ = rt.state();
        std::string key = succ.key();
        auto it = index.find(key);
        std::uint32_t to;
        if (it != index.end()) {
          to = it->second;
        } else {
          if (states.size() >= max_states)
            fail(Errc::BoundExceeded, "exhaustive state bound exceeded");
          to = static_cast<std::uint32_t>(states.size());
          states.push_back(succ);
          index.emplace(std::move(key), to);
          g.adj.emplace_back();
          g.terminal.push_back(0);
          g.deadlocked.push_back(0);
          next.push_back(to);
        }
        SimGraph::Edge edge;
        edge.to = to;
        for (const auto& t : logged) {
          if (t.op == "wait") continue;
          ObsEvent oe{t.op, t.op == "bcast" || t.op == "barrier" ? -1 : t.peer, t.msg};
          edge.obs.emplace_back(t.rank, std::move(oe));
        }
        g.adj[s].push_back(std::move(edge));
      }
    }
    frontier = std::move(next);
  }
  return {std::move(g), states.size()};
}

std::vector<RunResult> enumerate_runs(const Program& program, int n, std::size_t depth_bound,
                                      std::size_t max_runs, const SimOptions& opts) {
  if (n < 1) fail(Errc::ProgramFault, "need at least one rank");
  Runtime rt(program, n, opts);
  std::vector<RunResult> out;
  std::set<std::string> seen;

  std::vector<TraceEvent> log;
  auto serialize = [&](RunOutcome oc) {
    std::ostringstream os;
    os << static_cast<int>(oc) << "!";
    for (const auto& t : log)
      os << t.rank << t.op << t.peer << (t.msg ? t.msg->str() : "-") << t.handle << ";";
    return os.str();
  };

  auto rec = [&](auto&& self, std::size_t depth) -> void {
    if (rt.state().all_finished()) {
      if (seen.insert(serialize(RunOutcome::Completed)).second) {
        if (out.size() >= max_runs) fail(Errc::BoundExceeded, "too many distinct runs");
        out.push_back({RunOutcome::Completed, split_by_rank(log, n)});
      }
      return;
    }
    auto events = rt.enabled_events();
    if (events.empty()) {
      if (seen.insert(serialize(RunOutcome::Deadlocked)).second) {
        if (out.size() >= max_runs) fail(Errc::BoundExceeded, "too many distinct runs");
        out.push_back({RunOutcome::Deadlocked, split_by_rank(log, n)});
      }
      return;
    }
    if (depth >= depth_bound) fail(Errc::BoundExceeded, "enumeration depth bound exceeded");
    SimState snapshot = rt.state();
    int ts_snapshot = rt.ts;
    std::size_t log_size = log.size();
    for (const auto& ev : events) {
      rt.set_state(snapshot);
      rt.ts = ts_snapshot;
      log.resize(log_size);
      rt.apply(ev, &log);
      self(self, depth + 1);
    }
    rt.set_state(snapshot);
    rt.ts = ts_snapshot;
    log.resize(log_size);
  };
  rec(rec, 0);
  return out;
}

std::vector<std::set<ObsSequence>> sim_projections(const SimGraph& g, int n) {
  constexpr std::size_t kSetCap = 1 << 14;
  std::vector<std::set<ObsSequence>> result;
  for (int r = 0; r < n; ++r) {
    std::vector<std::optional<std::set<ObsSequence>>> memo(g.size());
    auto rec = [&](std::uint32_t s, auto&& self) -> const std::set<ObsSequence>& {
      if (memo[s]) return *memo[s];
      std::set<ObsSequence> acc;
      if (g.adj[s].empty()) {
        acc.insert(ObsSequence{});
      } else {
        for (const auto& e : g.adj[s]) {
          std::optional<ObsEvent> mine;
          for (const auto& [rank, oe] : e.obs)
            if (rank == r) mine = oe;
          const auto& sub = self(e.to, self);
          for (const auto& seq : sub) {
            if (!mine) {
              acc.insert(seq);
            } else {
              ObsSequence s2;
              s2.reserve(seq.size() + 1);
              s2.push_back(*mine);
              s2.insert(s2.end(), seq.begin(), seq.end());
              acc.insert(std::move(s2));
            }
          }
          if (acc.size() > kSetCap) fail(Errc::BoundExceeded, "projection set exceeded its bound");
        }
      }
      memo[s] = std::move(acc);
      return *memo[s];
    };
    result.push_back(rec(g.initial, rec));
  }
  return result;
}

ObsSequence trace_observables(const Trace& t) {
  ObsSequence out;
  for (const auto& ev : t) {
    if (ev.op == "wait") continue;
    out.push_back({ev.op, ev.op == "bcast" || ev.op == "barrier" ? -1 : ev.peer, ev.msg});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builtin programs

Program election_program(std::vector<std::int64_t> values) {
  return [values = std::move(values)](const RankView& v) -> MpiCall {
    if (static_cast<int>(values.size()) != v.size)
      fail(Errc::ProgramFault, "election program needs one value per rank");
    const int i = v.rank;
    const int n = v.size;
    const std::int64_t mine = values[static_cast<std::size_t>(i)];
    std::int64_t h = mine;
    for (const auto& rec : v.history) {
      if (rec.call.kind != MpiCall::Kind::Recv || !rec.result.msg) continue;
      const Value& m = *rec.result.msg;
      if (m.is_msg() && m.tag() == "elect" && !m.payload().empty())
        h = std::max(h, m.payload()[0].num());
    }
    const std::size_t k = v.history.size();
    const std::size_t rounds = 2 * static_cast<std::size_t>(n);
    if (k < rounds) {
      if (k % 2 == 0)
        return MpiCall::send((i + 1) % n, Value::msg("elect", {Value::integer(h)}));
      return MpiCall::recv((i - 1 + n) % n);
    }
    const std::size_t j = k - rounds;
    const bool leader = h == mine;
    if (j == 0)
      return leader ? MpiCall::bcast(Value::msg("lead", {Value::rank(i)})) : MpiCall::recv(-1);
    if (j == 1) return MpiCall::barrier();
    return MpiCall::finish();
  };
}

Program scripted_program(std::vector<std::vector<MpiCall>> per_rank) {
  return [calls = std::move(per_rank)](const RankView& v) -> MpiCall {
    if (v.rank >= static_cast<int>(calls.size())) return MpiCall::finish();
    const auto& mine = calls[static_cast<std::size_t>(v.rank)];
    if (v.history.size() < mine.size()) return mine[v.history.size()];
    return MpiCall::finish();
  };
}

Program isend_same_destination_program() {
  return scripted_program({
      {MpiCall::isend(1, Value::integer(1)), MpiCall::isend(1, Value::integer(2)),
       MpiCall::wait(0), MpiCall::wait(1)},
      {MpiCall::recv(0), MpiCall::recv(0)},
  });
}

Program isend_two_destination_program() {
  return scripted_program({
      {MpiCall::isend(1, Value::integer(1)), MpiCall::isend(2, Value::integer(2)),
       MpiCall::wait(0), MpiCall::wait(1)},
      {MpiCall::recv(0)},
      {MpiCall::recv(0)},
  });
}

}  // namespace futv
