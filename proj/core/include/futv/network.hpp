#ifndef FUTV_NETWORK_HPP
#define FUTV_NETWORK_HPP

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "futv/algebra.hpp"
#include "futv/value.hpp"

namespace futv {

// The network state T: one FIFO queue of pending messages per ordered rank
// pair. All operations are persistent; absent keys mean empty queues.
class ChannelTable {
public:
  using Key = std::pair<int, int>;  // (src, dst)

  bool empty() const { return queues_.empty(); }
  std::size_t total_messages() const;
  std::size_t depth(int src, int dst) const;
  const std::map<Key, std::vector<Value>>& queues() const { return queues_; }

  ChannelTable with_enqueued(int src, int dst, Value m) const;
  ChannelTable with_dequeued(int src, int dst) const;  // pre: nonempty
  std::optional<Value> head(int src, int dst) const;

  int compare(const ChannelTable& o) const;
  bool operator==(const ChannelTable& o) const { return compare(o) == 0; }
  std::size_t hash() const;
  std::string str() const;

private:
  std::map<Key, std::vector<Value>> queues_;
};

// Spec-facing channel operations; ranks are validated against n.
ChannelTable enqueue(const ChannelTable& t, int n, int src, int dst, Value m);
std::optional<Value> peek(const ChannelTable& t, int n, int src, int dst);
std::pair<Value, ChannelTable> dequeue(const ChannelTable& t, int n, int src, int dst);

// Bcast builtin: Idle, or handling one broadcast with the receivers still
// owed a delivery. Collapses back to Idle when no receiver remains.
class BcastState {
public:
  static BcastState idle() { return BcastState{}; }
  // Accepts breq(src, m); remaining = all ranks but src.
  static BcastState start(int n, int src, Value m);

  bool idle_state() const { return !handling_; }
  int src() const { return src_; }
  const Value& msg() const { return msg_; }
  const std::vector<int>& remaining() const { return remaining_; }

  BcastState with_delivered(int j) const;

  int compare(const BcastState& o) const;
  bool operator==(const BcastState& o) const { return compare(o) == 0; }
  std::size_t hash() const;
  std::string str() const;

private:
  bool handling_ = false;
  int src_ = -1;
  Value msg_;
  std::vector<int> remaining_;  // sorted
};

// Barrier builtin: the set of ranks that have arrived this round.
class BarrierState {
public:
  const std::vector<int>& arrived() const { return arrived_; }
  bool has(int r) const;
  bool empty() const { return arrived_.empty(); }
  bool full(int n) const { return static_cast<int>(arrived_.size()) == n; }

  BarrierState with_arrived(int r) const;
  static BarrierState reset() { return BarrierState{}; }

  int compare(const BarrierState& o) const;
  bool operator==(const BarrierState& o) const { return compare(o) == 0; }
  std::size_t hash() const;
  std::string str() const;

private:
  std::vector<int> arrived_;  // sorted
};

struct NetworkOffer {
  Action action;  // nsend(dst, src, head)
  ChannelTable next;
};

struct BcastOffer {
  Action action;  // nsend(j, src, m)
  BcastState next;
};

struct BarrierOffer {
  Action action;  // barrier_ack(i) for i not yet arrived
  BarrierState next;
};

// Concrete actions the Network offers: one nsend per nonempty queue head.
// (nrecv acceptance is accept-any and handled by the composed relation.)
std::vector<NetworkOffer> network_steps(const ChannelTable& t);

// Handling(src, m, R) offers nsend(j, src, m) for each j in R; Idle offers
// nothing concrete (breq is accept-any).
std::vector<BcastOffer> bcast_steps(const BcastState& s);

// One ack offer per rank that has not arrived yet; release is a composed-
// level tau once everyone has.
std::vector<BarrierOffer> barrier_steps(const BarrierState& s, int n);

}  // namespace futv

#endif
