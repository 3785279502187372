#ifndef FUTV_SYSTEM_HPP
#define FUTV_SYSTEM_HPP

#include <memory>
#include <unordered_map>
#include <vector>

#include "futv/network.hpp"
#include "futv/steps.hpp"

namespace futv {

// One node of the explored LTS: the global configuration
// F_0 || ... || F_{N-1} || Network(T) || Bcast() || Barrier().
struct Configuration {
  std::vector<TermPtr> locals;
  ChannelTable channels;
  BcastState bcast;
  BarrierState barrier;
  std::vector<int> held;  // barrier-held ranks, sorted; always == barrier.arrived()

  int size_n() const { return static_cast<int>(locals.size()); }
  bool is_held(int r) const;
  Configuration with_local(int r, TermPtr t) const;

  int compare(const Configuration& o) const;
  bool operator==(const Configuration& o) const { return compare(o) == 0; }
  std::size_t hash() const;
  std::string str() const;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const { return c.hash(); }
};

struct ComposedStep {
  MultiActionLabel label;
  Configuration next;
};

struct ComposedOptions {
  // Maximum pending messages per channel; enqueues beyond it are suppressed
  // and reported via queue_capped. <= 0 means unlimited.
  int queue_cap = 4;
};

struct ComposedResult {
  std::vector<ComposedStep> steps;
  bool queue_capped = false;
};

// Memoizes local_steps per structurally distinct term; a rank's term recurs
// across many configurations, so this is the main exploration cost saver.
class StepsCache {
public:
  const std::vector<LocalStep>& get(const TermPtr& t, const Environment& env);

private:
  std::unordered_map<TermPtr, std::unique_ptr<std::vector<LocalStep>>, TermPtrHash, TermPtrEq>
      map_;
};

// All enabled transition labels of a configuration with their successors,
// deterministically ordered. Network-facing actions only fire through their
// communication pairs; tau and user-declared actions may fire alone.
ComposedResult composed_steps(const Configuration& cfg, const Environment& env,
                              const ComposedOptions& opts = {}, StepsCache* cache = nullptr);

// True when every local has terminated, no message is pending, and the
// builtin processes are idle.
bool is_terminal(const Configuration& cfg, const Environment& env);

}  // namespace futv

#endif
