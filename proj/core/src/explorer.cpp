#include "futv/explorer.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace futv {

namespace {

struct LabelHash {
  std::size_t operator()(const MultiActionLabel& l) const { return l.hash(); }
};
struct LabelEq {
  bool operator()(const MultiActionLabel& a, const MultiActionLabel& b) const { return a == b; }
};

int worker_count(const ExploreOptions& opts) {
  if (opts.workers > 0) return opts.workers;
  if (const char* env = std::getenv("FUTURE_VERIFY_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

Configuration canonical(const Configuration& cfg, const Environment& env) {
  Configuration out = cfg;
  for (auto& t : out.locals) t = reduce(t, env);
  return out;
}

}  // namespace

Instance instantiate(const ModelFile& m, int n, const std::vector<std::int64_t>* values) {
  Instance inst{elaborate(m, n), {}};
  inst.init.locals = initial_futures(m, inst.env, values);
  inst.init.bcast = BcastState::idle();
  return inst;
}

Configuration initial_config(const ModelFile& m, int n, const std::vector<std::int64_t>* values) {
  return instantiate(m, n, values).init;
}

StateSpace explore(const Configuration& init, const Environment& env, std::size_t max_states,
                   const ExploreOptions& opts) {
  if (max_states < 1) fail(Errc::BoundExceeded, "explore needs max_states >= 1");
  StateSpace ss;
  ss.max_states = max_states;

  std::unordered_map<Configuration, std::uint32_t, ConfigurationHash> index;
  std::unordered_map<MultiActionLabel, std::uint32_t, LabelHash, LabelEq> label_index;

  auto intern_label = [&](const MultiActionLabel& l) {
    auto it = label_index.find(l);
    if (it != label_index.end()) return it->second;
    auto id = static_cast<std::uint32_t>(ss.labels.size());
    ss.labels.push_back(l);
    label_index.emplace(l, id);
    return id;
  };

  Configuration start = canonical(init, env);
  ss.states.push_back(start);
  ss.parent_state.push_back(-1);
  ss.parent_trans.push_back(-1);
  index.emplace(start, 0);

  const int workers = worker_count(opts);
  ComposedOptions copts;
  copts.queue_cap = opts.queue_cap;

  std::vector<std::uint32_t> frontier{0};
  std::vector<StepsCache> caches(static_cast<std::size_t>(std::max(workers, 1)));

  while (!frontier.empty()) {
    std::vector<ComposedResult> results(frontier.size());
    if (workers <= 1 || frontier.size() < 8) {
      for (std::size_t i = 0; i < frontier.size(); ++i)
        results[i] = composed_steps(ss.states[frontier[i]], env, copts, &caches[0]);
    } else {
      std::vector<std::thread> pool;
      std::size_t chunk = (frontier.size() + static_cast<std::size_t>(workers) - 1) /
                          static_cast<std::size_t>(workers);
      for (int w = 0; w < workers; ++w) {
        std::size_t lo = static_cast<std::size_t>(w) * chunk;
        std::size_t hi = std::min(frontier.size(), lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi, w] {
          for (std::size_t i = lo; i < hi; ++i)
            results[i] = composed_steps(ss.states[frontier[i]], env, copts,
                                        &caches[static_cast<std::size_t>(w)]);
        });
      }
      for (auto& t : pool) t.join();
    }

    std::vector<std::uint32_t> next;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      std::uint32_t from = frontier[i];
      if (results[i].queue_capped) ss.queue_capped = true;
      for (const auto& step : results[i].steps) {
        auto it = index.find(step.next);
        std::uint32_t to;
        if (it != index.end()) {
          to = it->second;
        } else {
          if (ss.states.size() >= max_states) {
            ss.truncated = true;
            continue;
          }
          to = static_cast<std::uint32_t>(ss.states.size());
          ss.states.push_back(step.next);
          index.emplace(step.next, to);
          ss.parent_state.push_back(from);
          ss.parent_trans.push_back(static_cast<std::int64_t>(ss.transitions.size()));
          next.push_back(to);
        }
        ss.transitions.push_back({from, intern_label(step.label), to});
      }
    }
    frontier = std::move(next);
  }
  return ss;
}

std::vector<std::vector<std::uint32_t>> StateSpace::out_edges() const {
  std::vector<std::vector<std::uint32_t>> out(states.size());
  for (std::uint32_t i = 0; i < transitions.size(); ++i)
    out[transitions[i].from].push_back(i);
  return out;
}

std::vector<std::string> StateSpace::path_to(std::uint32_t state) const {
  std::vector<std::string> out;
  std::uint32_t cur = state;
  while (parent_state[cur] >= 0) {
    out.push_back(labels[transitions[static_cast<std::size_t>(parent_trans[cur])].label].display);
    cur = static_cast<std::uint32_t>(parent_state[cur]);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Property checks

namespace {

PropertyReport inconclusive(const std::string& name) {
  PropertyReport r;
  r.property = name;
  r.verdict = Verdict::Inconclusive;
  r.detail = "state space truncated; verdict not established";
  return r;
}

PropertyReport holds(const std::string& name) {
  PropertyReport r;
  r.property = name;
  r.verdict = Verdict::Holds;
  return r;
}

PropertyReport fails_with(const std::string& name, std::vector<std::string> witness,
                          std::string detail) {
  PropertyReport r;
  r.property = name;
  r.verdict = Verdict::Fails;
  r.witness = std::move(witness);
  r.detail = std::move(detail);
  return r;
}

// DFS cycle search; returns the path of transition indices around the first
// reachable cycle, plus its entry state.
struct CycleInfo {
  std::uint32_t entry;
  std::vector<std::uint32_t> cycle_edges;
};

std::optional<CycleInfo> find_cycle(const StateSpace& ss,
                                    const std::vector<std::vector<std::uint32_t>>& out,
                                    const std::vector<char>* allowed_edge = nullptr,
                                    const std::vector<char>* allowed_state = nullptr) {
  enum : char { White, Gray, Black };
  std::vector<char> color(ss.states.size(), White);
  // Iterative DFS keeping the edge taken into each gray state.
  struct Frame {
    std::uint32_t state;
    std::size_t next_edge = 0;
  };
  std::vector<Frame> stack;
  std::vector<std::uint32_t> edge_into;  // parallel to stack[1..]

  auto state_ok = [&](std::uint32_t s) {
    return allowed_state == nullptr || (*allowed_state)[s];
  };
  if (!state_ok(ss.initial)) return std::nullopt;
  stack.push_back({ss.initial});
  color[ss.initial] = Gray;

  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_edge >= out[f.state].size()) {
      color[f.state] = Black;
      stack.pop_back();
      if (!edge_into.empty()) edge_into.pop_back();
      continue;
    }
    std::uint32_t eidx = out[f.state][f.next_edge++];
    if (allowed_edge && !(*allowed_edge)[eidx]) continue;
    std::uint32_t to = ss.transitions[eidx].to;
    if (!state_ok(to)) continue;
    if (color[to] == Gray) {
      // Collect the loop: from `to` up the stack to the current state.
      CycleInfo info;
      info.entry = to;
      std::vector<std::uint32_t> edges;
      std::size_t pos = 0;
      for (std::size_t i = 0; i < stack.size(); ++i)
        if (stack[i].state == to) pos = i;
      for (std::size_t i = pos + 1; i < stack.size(); ++i) edges.push_back(edge_into[i - 1]);
      edges.push_back(eidx);
      info.cycle_edges = std::move(edges);
      return info;
    }
    if (color[to] == White) {
      color[to] = Gray;
      stack.push_back({to});
      edge_into.push_back(eidx);
    }
  }
  return std::nullopt;
}

// BFS path (transition indices) between two states, restricted to allowed
// edges when given.
std::optional<std::vector<std::uint32_t>> bfs_path(
    const StateSpace& ss, const std::vector<std::vector<std::uint32_t>>& out,
    std::uint32_t from, std::uint32_t to, const std::vector<char>* allowed_edge = nullptr) {
  std::vector<std::int64_t> via(ss.states.size(), -2);
  via[from] = -1;
  std::deque<std::uint32_t> q{from};
  while (!q.empty()) {
    std::uint32_t s = q.front();
    q.pop_front();
    if (s == to) break;
    for (std::uint32_t eidx : out[s]) {
      if (allowed_edge && !(*allowed_edge)[eidx]) continue;
      std::uint32_t t = ss.transitions[eidx].to;
      if (via[t] != -2) continue;
      via[t] = eidx;
      q.push_back(t);
    }
  }
  if (via[to] == -2) return std::nullopt;
  std::vector<std::uint32_t> path;
  std::uint32_t cur = to;
  while (via[cur] >= 0) {
    auto eidx = static_cast<std::uint32_t>(via[cur]);
    path.push_back(eidx);
    cur = ss.transitions[eidx].from;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<std::string> edge_labels(const StateSpace& ss, const std::vector<std::uint32_t>& edges) {
  std::vector<std::string> out;
  for (auto e : edges) out.push_back(ss.labels[ss.transitions[e].label].display);
  return out;
}

}  // namespace

PropertyReport check_deadlock(const StateSpace& ss, const Environment& env) {
  const char* name = "deadlock-free";
  if (ss.truncated) return inconclusive(name);
  auto out = ss.out_edges();
  for (std::uint32_t s = 0; s < ss.states.size(); ++s) {
    if (!out[s].empty()) continue;
    if (is_terminal(ss.states[s], env)) continue;
    return fails_with(name, ss.path_to(s), "state " + std::to_string(s) +
                                               " has no transitions and is not terminal");
  }
  return holds(name);
}

PropertyReport check_leak(const StateSpace& ss, const Environment& env) {
  const char* name = "leak-free";
  if (ss.truncated) return inconclusive(name);
  for (std::uint32_t s = 0; s < ss.states.size(); ++s) {
    const Configuration& cfg = ss.states[s];
    bool all_done = true;
    for (const auto& t : cfg.locals)
      if (!terminated(t, env)) all_done = false;
    if (!all_done) continue;
    if (!cfg.channels.empty())
      return fails_with(name, ss.path_to(s),
                        "all ranks finished but messages are pending: " + cfg.channels.str());
    if (!cfg.bcast.idle_state())
      return fails_with(name, ss.path_to(s),
                        "all ranks finished but a broadcast is unfinished: " + cfg.bcast.str());
    if (!cfg.barrier.empty())
      return fails_with(name, ss.path_to(s),
                        "all ranks finished inside a barrier round: " + cfg.barrier.str());
  }
  return holds(name);
}

PropertyReport check_termination(const StateSpace& ss, const Environment& env) {
  const char* name = "terminating";
  if (ss.truncated) return inconclusive(name);
  auto out = ss.out_edges();
  if (auto cyc = find_cycle(ss, out)) {
    auto witness = ss.path_to(cyc->entry);
    auto loop = edge_labels(ss, cyc->cycle_edges);
    witness.insert(witness.end(), loop.begin(), loop.end());
    return fails_with(name, std::move(witness), "reachable cycle; runs need not terminate");
  }
  for (std::uint32_t s = 0; s < ss.states.size(); ++s)
    if (out[s].empty() && !is_terminal(ss.states[s], env))
      return fails_with(name, ss.path_to(s),
                        "maximal path ends in a non-terminal state " + std::to_string(s));
  return holds(name);
}

PropertyReport check_eventually(const StateSpace& ss, const Environment& env,
                                const LabelPred& pred, const std::string& name) {
  (void)env;
  if (ss.truncated) return inconclusive(name);
  auto out = ss.out_edges();
  std::vector<char> allowed(ss.transitions.size(), 1);
  for (std::size_t e = 0; e < ss.transitions.size(); ++e)
    if (pred(ss.labels[ss.transitions[e].label])) allowed[e] = 0;

  // Reachable without crossing a pred edge.
  std::vector<char> reach(ss.states.size(), 0);
  std::deque<std::uint32_t> q{ss.initial};
  reach[ss.initial] = 1;
  while (!q.empty()) {
    std::uint32_t s = q.front();
    q.pop_front();
    for (std::uint32_t e : out[s]) {
      if (!allowed[e]) continue;
      std::uint32_t t = ss.transitions[e].to;
      if (!reach[t]) {
        reach[t] = 1;
        q.push_back(t);
      }
    }
  }
  for (std::uint32_t s = 0; s < ss.states.size(); ++s) {
    if (!reach[s] || !out[s].empty()) continue;
    auto path = bfs_path(ss, out, ss.initial, s, &allowed);
    return fails_with(name, edge_labels(ss, *path),
                      "a maximal path reaches its end without the required label");
  }
  if (auto cyc = find_cycle(ss, out, &allowed, &reach)) {
    auto path = bfs_path(ss, out, ss.initial, cyc->entry, &allowed);
    auto witness = edge_labels(ss, *path);
    auto loop = edge_labels(ss, cyc->cycle_edges);
    witness.insert(witness.end(), loop.begin(), loop.end());
    return fails_with(name, std::move(witness),
                      "a cycle avoids the required label; it can be postponed forever");
  }
  return holds(name);
}

// ---------------------------------------------------------------------------
// Election verification

namespace {

// pred must hold exactly once on every maximal path.
PropertyReport check_exactly_once(const StateSpace& ss, const Environment& env,
                                  const LabelPred& pred, const std::string& name) {
  PropertyReport ev = check_eventually(ss, env, pred, name);
  if (!ev.holds()) {
    if (ev.verdict == Verdict::Fails) ev.detail = "occurrence missing: " + ev.detail;
    return ev;
  }
  auto out = ss.out_edges();
  // Duplicate check: from any pred-edge target, another pred edge reachable?
  std::vector<char> from_target(ss.states.size(), 0);
  std::deque<std::uint32_t> q;
  for (const auto& tr : ss.transitions) {
    if (pred(ss.labels[tr.label]) && !from_target[tr.to]) {
      from_target[tr.to] = 1;
      q.push_back(tr.to);
    }
  }
  while (!q.empty()) {
    std::uint32_t s = q.front();
    q.pop_front();
    for (std::uint32_t e : out[s]) {
      std::uint32_t t = ss.transitions[e].to;
      if (!from_target[t]) {
        from_target[t] = 1;
        q.push_back(t);
      }
    }
  }
  for (std::size_t e = 0; e < ss.transitions.size(); ++e) {
    if (!pred(ss.labels[ss.transitions[e].label])) continue;
    if (from_target[ss.transitions[e].from]) {
      auto witness = ss.path_to(ss.transitions[e].from);
      witness.push_back(ss.labels[ss.transitions[e].label].display);
      return fails_with(name, std::move(witness), "label can occur twice on one run");
    }
  }
  return holds(name);
}

bool part_is(const Action& a, const char* name, int rank) {
  return a.name == name && !a.args.empty() && a.args[0].is_numeric() &&
         a.args[0].num() == rank;
}

}  // namespace

std::vector<PropertyReport> verify_election(const ModelFile& m, int n,
                                            const std::vector<std::int64_t>& values,
                                            std::size_t max_states, const ExploreOptions& opts) {
  if (static_cast<int>(values.size()) != n)
    fail(Errc::SortError, "need exactly " + std::to_string(n) + " values");
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (values[i] == values[j])
        fail(Errc::DuplicateValues, "election values must be pairwise distinct");

  int leader = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(leader)]) leader = static_cast<int>(i);
  Value lead_msg = Value::msg("lead", {Value::rank(leader)});

  Instance inst = instantiate(m, n, &values);
  StateSpace ss = explore(inst.init, inst.env, max_states, opts);

  std::vector<PropertyReport> reports;
  reports.push_back(check_deadlock(ss, inst.env));
  reports.push_back(check_leak(ss, inst.env));
  reports.push_back(check_termination(ss, inst.env));

  auto is_breq = [](const MultiActionLabel& l) {
    return l.parts.size() == 2 && l.parts[0].name == "bcast";
  };
  reports.push_back(check_exactly_once(ss, inst.env, is_breq, "leader-broadcast-once"));

  // Every broadcast that occurs carries lead<argmax>.
  {
    PropertyReport r = holds("leader-broadcast-payload");
    for (const auto& tr : ss.transitions) {
      const auto& l = ss.labels[tr.label];
      if (!is_breq(l)) continue;
      const Action& b = l.parts[0];
      if (b.args[0].num() != leader || b.args[1] != lead_msg) {
        auto witness = ss.path_to(tr.from);
        witness.push_back(l.display);
        r = fails_with("leader-broadcast-payload", std::move(witness),
                       "broadcast carries " + b.args[1].str() + ", expected " + lead_msg.str());
        break;
      }
    }
    reports.push_back(std::move(r));
  }

  // Every rank but the leader receives lead<argmax> exactly once.
  {
    PropertyReport combined = holds("all-receive-leader");
    for (int r = 0; r < n && combined.holds(); ++r) {
      if (r == leader) continue;
      auto pred = [r, &lead_msg](const MultiActionLabel& l) {
        for (const auto& p : l.parts)
          if (part_is(p, "recv", r) && p.args.size() == 3 && p.args[2] == lead_msg) return true;
        return false;
      };
      PropertyReport one =
          check_exactly_once(ss, inst.env, pred, "rank-" + std::to_string(r) + "-receives-leader");
      if (!one.holds()) {
        one.property = "all-receive-leader";
        combined = std::move(one);
      }
    }
    reports.push_back(std::move(combined));
  }

  // N barrier arrivals on every run: each rank arrives exactly once.
  {
    PropertyReport combined = holds("barrier-arrivals");
    for (int r = 0; r < n && combined.holds(); ++r) {
      auto pred = [r](const MultiActionLabel& l) {
        return l.parts.size() == 2 && part_is(l.parts[0], "barrier", r);
      };
      PropertyReport one =
          check_exactly_once(ss, inst.env, pred, "rank-" + std::to_string(r) + "-barrier");
      if (!one.holds()) {
        one.property = "barrier-arrivals";
        combined = std::move(one);
      }
    }
    reports.push_back(std::move(combined));
  }

  return reports;
}

// ---------------------------------------------------------------------------
// Export and projections

std::string export_aut(const StateSpace& ss) {
  std::ostringstream os;
  os << "des (" << ss.initial << "," << ss.transitions.size() << "," << ss.states.size()
     << ")\n";
  for (const auto& t : ss.transitions)
    os << "(" << t.from << ",\"" << ss.labels[t.label].display << "\"," << t.to << ")\n";
  return os.str();
}

std::optional<ObsEvent> label_observable(const MultiActionLabel& label, int rank) {
  for (const auto& p : label.parts) {
    if (p.name == "send" || p.name == "isend") {
      if (p.args[0].num() == rank)
        return ObsEvent{p.name, static_cast<int>(p.args[1].num()), p.args[2]};
    } else if (p.name == "recv") {
      if (p.args[0].num() == rank)
        return ObsEvent{"recv", static_cast<int>(p.args[1].num()), p.args[2]};
    } else if (p.name == "bcast") {
      if (p.args[0].num() == rank) return ObsEvent{"bcast", -1, p.args[1]};
    } else if (p.name == "barrier") {
      if (p.args[0].num() == rank) return ObsEvent{"barrier", -1, std::nullopt};
    }
  }
  return std::nullopt;
}

std::vector<std::set<ObsSequence>> rank_projections(const StateSpace& ss, int n) {
  if (ss.truncated) fail(Errc::BoundExceeded, "projections need a complete state space");
  auto out = ss.out_edges();
  if (find_cycle(ss, out)) fail(Errc::BoundExceeded, "projections need an acyclic state space");

  constexpr std::size_t kSetCap = 1 << 14;
  std::vector<std::set<ObsSequence>> result;
  for (int r = 0; r < n; ++r) {
    std::vector<std::optional<std::set<ObsSequence>>> memo(ss.states.size());
    auto rec = [&](std::uint32_t s, auto&& self) -> const std::set<ObsSequence>& {
      if (memo[s]) return *memo[s];
      std::set<ObsSequence> acc;
      if (out[s].empty()) {
        acc.insert(ObsSequence{});
      } else {
        for (std::uint32_t e : out[s]) {
          const auto& tr = ss.transitions[e];
          auto ev = label_observable(ss.labels[tr.label], r);
          const auto& sub = self(tr.to, self);
          for (const auto& seq : sub) {
            if (!ev) {
              acc.insert(seq);
            } else {
              ObsSequence s2;
              s2.reserve(seq.size() + 1);
              s2.push_back(*ev);
              s2.insert(s2.end(), seq.begin(), seq.end());
              acc.insert(std::move(s2));
            }
          }
          if (acc.size() > kSetCap)
            fail(Errc::BoundExceeded, "projection set exceeded its bound");
        }
      }
      memo[s] = std::move(acc);
      return *memo[s];
    };
    result.push_back(rec(ss.initial, rec));
  }
  return result;
}

}  // namespace futv
