#ifndef FUTV_EXPLORER_HPP
#define FUTV_EXPLORER_HPP

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "futv/dsl.hpp"
#include "futv/observable.hpp"
#include "futv/system.hpp"

namespace futv {

// The explored LTS. State 0 is the initial configuration. `truncated` means
// the max_states bound stopped the exploration (the LTS is a prefix);
// `queue_capped` means some enqueue beyond the channel cap was suppressed.
struct StateSpace {
  struct Trans {
    std::uint32_t from;
    std::uint32_t label;
    std::uint32_t to;
  };

  std::vector<Configuration> states;
  std::vector<MultiActionLabel> labels;
  std::vector<Trans> transitions;
  std::uint32_t initial = 0;
  bool truncated = false;
  bool queue_capped = false;
  std::size_t max_states = 0;

  // BFS parents for witness reconstruction (-1 for the initial state).
  std::vector<std::int64_t> parent_state;
  std::vector<std::int64_t> parent_trans;

  std::vector<std::vector<std::uint32_t>> out_edges() const;  // indices into transitions
  std::vector<std::string> path_to(std::uint32_t state) const;
};

struct ExploreOptions {
  int queue_cap = 4;  // <= 0: unlimited
  int workers = 0;    // 0: FUTURE_VERIFY_THREADS or hardware default
};

// A model instantiated at a concrete size.
struct Instance {
  Environment env;
  Configuration init;
};

Instance instantiate(const ModelFile& m, int n, const std::vector<std::int64_t>* values);

// Spec operation form: the initial global configuration.
Configuration initial_config(const ModelFile& m, int n, const std::vector<std::int64_t>* values);

StateSpace explore(const Configuration& init, const Environment& env, std::size_t max_states,
                   const ExploreOptions& opts = {});

enum class Verdict { Holds, Fails, Inconclusive };

struct PropertyReport {
  std::string property;
  Verdict verdict = Verdict::Holds;
  std::vector<std::string> witness;  // label sequence from the initial state
  std::string detail;

  bool holds() const { return verdict == Verdict::Holds; }
};

using LabelPred = std::function<bool(const MultiActionLabel&)>;

PropertyReport check_deadlock(const StateSpace& ss, const Environment& env);
PropertyReport check_leak(const StateSpace& ss, const Environment& env);
PropertyReport check_termination(const StateSpace& ss, const Environment& env);
// Every maximal path contains a label satisfying pred; any reachable cycle
// with no pred label on it is a counterexample.
PropertyReport check_eventually(const StateSpace& ss, const Environment& env,
                                const LabelPred& pred, const std::string& name);

// Leader-election bundle: deadlock/leak/termination plus the protocol claims
// (one broadcast of lead<argmax>, every other rank receives it, N barrier
// arrivals on every run).
std::vector<PropertyReport> verify_election(const ModelFile& m, int n,
                                            const std::vector<std::int64_t>& values,
                                            std::size_t max_states,
                                            const ExploreOptions& opts = {});

// Aldebaran-style export: `des (initial, #transitions, #states)` then one
// `(from,"label",to)` line per transition.
std::string export_aut(const StateSpace& ss);

// For each rank, the set of observable event sequences over all maximal
// paths. Requires an acyclic, non-truncated LTS.
std::vector<std::set<ObsSequence>> rank_projections(const StateSpace& ss, int n);

// The rank-side observable carried by a label for the given rank, if any.
std::optional<ObsEvent> label_observable(const MultiActionLabel& label, int rank);

}  // namespace futv

#endif
