#ifndef FUTV_SIM_HPP
#define FUTV_SIM_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "futv/observable.hpp"
#include "futv/value.hpp"

namespace futv {

// One MPI call issued by a simulated rank.
struct MpiCall {
  enum class Kind { Send, Recv, ISend, Wait, Bcast, Barrier, Finish };
  Kind kind = Kind::Finish;
  int peer = -1;  // Send/ISend destination; Recv source (-1 = wildcard)
  Value msg;      // Send/ISend/Bcast payload
  int handle = -1;  // Wait

  static MpiCall send(int dst, Value m);
  static MpiCall recv(int src);  // src = -1 receives from any rank
  static MpiCall isend(int dst, Value m);
  static MpiCall wait(int handle);
  static MpiCall bcast(Value m);
  static MpiCall barrier();
  static MpiCall finish();

  std::string str() const;
};

// What the runtime reports back for a completed call.
struct CallResult {
  std::optional<Value> msg;  // Recv payload
  int peer = -1;             // Recv matched source
  int handle = -1;           // ISend request id
};

struct StepRecord {
  MpiCall call;
  CallResult result;
};

// Programs are pure functions of the rank, size, and completed-call history;
// the runtime replays them deterministically.
struct RankView {
  int rank;
  int size;
  const std::vector<StepRecord>& history;
};
using Program = std::function<MpiCall(const RankView&)>;

struct TraceEvent {
  int rank = 0;
  int seq = 0;  // per-rank, strictly increasing
  std::string op;  // send | recv | isend | wait | bcast | barrier
  int peer = -1;
  std::optional<Value> msg;
  int handle = -1;
  int ts = 0;  // global logical timestamp
};

using Trace = std::vector<TraceEvent>;

enum class RunOutcome { Completed, Deadlocked, BoundExceeded };

struct Schedule {
  enum class Kind { Seeded, Scripted };
  Kind kind = Kind::Seeded;
  std::uint64_t seed = 0;
  std::vector<std::size_t> script;  // indices into the canonical event list
  std::size_t depth_bound = 100000;

  static Schedule seeded(std::uint64_t seed);
  static Schedule scripted(std::vector<std::size_t> script);
};

struct SimOptions {
  // Wait(r) completes when the message was delivered (default) or already
  // when it was buffered.
  bool wait_on_delivery = true;
};

struct RunResult {
  RunOutcome outcome = RunOutcome::Completed;
  std::vector<Trace> traces;  // one per rank
};

RunResult run(const Program& program, int n, const Schedule& schedule,
              const SimOptions& opts = {});

// Deduplicated exhaustive state graph of the runtime under all schedules.
struct SimGraph {
  struct Edge {
    std::uint32_t to;
    std::vector<std::pair<int, ObsEvent>> obs;  // rank-observable events (0..2)
  };
  std::vector<std::vector<Edge>> adj;
  std::vector<char> terminal;    // all ranks finished
  std::vector<char> deadlocked;  // no event enabled, someone unfinished
  std::uint32_t initial = 0;

  std::size_t size() const { return adj.size(); }
};

struct ExhaustiveResult {
  SimGraph graph;
  std::size_t distinct_states = 0;
};

// Explores every scheduler decision; throws BoundExceeded past depth_bound
// events on a path or max_states distinct states.
ExhaustiveResult run_all(const Program& program, int n, std::size_t depth_bound,
                         std::size_t max_states = 1 << 20, const SimOptions& opts = {});

// All distinct complete runs (full traces, global order preserved). Only for
// small programs; throws BoundExceeded past max_runs.
std::vector<RunResult> enumerate_runs(const Program& program, int n, std::size_t depth_bound,
                                      std::size_t max_runs, const SimOptions& opts = {});

// Per-rank observable sequence sets over all maximal paths of the graph.
std::vector<std::set<ObsSequence>> sim_projections(const SimGraph& g, int n);

// Per-rank observable sequence from one concrete run.
ObsSequence trace_observables(const Trace& t);

// ---------------------------------------------------------------------------
// Builtin programs

// Ring leader election: N rounds of send/recv passing the running maximum,
// then the rank holding the global maximum broadcasts lead<rank>, everyone
// else receives it, and all ranks synchronize on a barrier.
Program election_program(std::vector<std::int64_t> values);

// Each rank issues the given calls in order, then finishes. ISend handles
// are assigned 0,1,... per rank in issue order.
Program scripted_program(std::vector<std::vector<MpiCall>> per_rank);

// rank 0: isend m1 and m2 to rank 1, wait on both; rank 1 receives twice.
Program isend_same_destination_program();
// rank 0: isend to ranks 1 and 2, wait on both; each receives once.
Program isend_two_destination_program();

}  // namespace futv

#endif
