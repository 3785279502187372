#include "futv/network.hpp"

#include <algorithm>
#include <sstream>

namespace futv {

namespace {

void check_rank(int r, int n, const char* what) {
  if (r < 0 || r >= n)
    fail(Errc::RankOutOfRange, std::string(what) + ": rank " + std::to_string(r) +
                                   " not in [0," + std::to_string(n) + ")");
}

}  // namespace

std::size_t ChannelTable::total_messages() const {
  std::size_t n = 0;
  for (const auto& [k, q] : queues_) n += q.size();
  return n;
}

std::size_t ChannelTable::depth(int src, int dst) const {
  auto it = queues_.find({src, dst});
  return it == queues_.end() ? 0 : it->second.size();
}

ChannelTable ChannelTable::with_enqueued(int src, int dst, Value m) const {
  ChannelTable out = *this;
  out.queues_[{src, dst}].push_back(std::move(m));
  return out;
}

ChannelTable ChannelTable::with_dequeued(int src, int dst) const {
  ChannelTable out = *this;
  auto it = out.queues_.find({src, dst});
  if (it == out.queues_.end() || it->second.empty())
    fail(Errc::EmptyQueue, "dequeue on empty queue (" + std::to_string(src) + "," +
                               std::to_string(dst) + ")");
  it->second.erase(it->second.begin());
  if (it->second.empty()) out.queues_.erase(it);
  return out;
}

std::optional<Value> ChannelTable::head(int src, int dst) const {
  auto it = queues_.find({src, dst});
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  return it->second.front();
}

int ChannelTable::compare(const ChannelTable& o) const {
  auto a = queues_.begin(), b = o.queues_.begin();
  for (; a != queues_.end() && b != o.queues_.end(); ++a, ++b) {
    if (a->first != b->first) return a->first < b->first ? -1 : 1;
    const auto& qa = a->second;
    const auto& qb = b->second;
    for (std::size_t i = 0; i < qa.size() && i < qb.size(); ++i) {
      int c = qa[i].compare(qb[i]);
      if (c != 0) return c;
    }
    if (qa.size() != qb.size()) return qa.size() < qb.size() ? -1 : 1;
  }
  if (a != queues_.end()) return 1;
  if (b != o.queues_.end()) return -1;
  return 0;
}

std::size_t ChannelTable::hash() const {
  std::size_t h = 0x51ed270b;
  for (const auto& [k, q] : queues_) {
    h = hash_combine(h, static_cast<std::size_t>(k.first) * 31 + k.second);
    for (const auto& v : q) h = hash_combine(h, v.hash());
  }
  return h;
}

std::string ChannelTable::str() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [k, q] : queues_) {
    if (!first) os << " ";
    first = false;
    os << k.first << "->" << k.second << ":[";
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (i) os << ",";
      os << q[i].str();
    }
    os << "]";
  }
  os << "}";
  return os.str();
}

ChannelTable enqueue(const ChannelTable& t, int n, int src, int dst, Value m) {
  check_rank(src, n, "enqueue");
  check_rank(dst, n, "enqueue");
  return t.with_enqueued(src, dst, std::move(m));
}

std::optional<Value> peek(const ChannelTable& t, int n, int src, int dst) {
  check_rank(src, n, "peek");
  check_rank(dst, n, "peek");
  return t.head(src, dst);
}

std::pair<Value, ChannelTable> dequeue(const ChannelTable& t, int n, int src, int dst) {
  check_rank(src, n, "dequeue");
  check_rank(dst, n, "dequeue");
  auto head = t.head(src, dst);
  if (!head) fail(Errc::EmptyQueue, "dequeue on empty queue (" + std::to_string(src) + "," +
                                        std::to_string(dst) + ")");
  return {*head, t.with_dequeued(src, dst)};
}

BcastState BcastState::start(int n, int src, Value m) {
  check_rank(src, n, "bcast");
  BcastState s;
  s.src_ = src;
  s.msg_ = std::move(m);
  for (int j = 0; j < n; ++j)
    if (j != src) s.remaining_.push_back(j);
  s.handling_ = !s.remaining_.empty();  // a lone rank's broadcast is a no-op
  return s;
}

BcastState BcastState::with_delivered(int j) const {
  BcastState out = *this;
  out.remaining_.erase(std::remove(out.remaining_.begin(), out.remaining_.end(), j),
                       out.remaining_.end());
  if (out.remaining_.empty()) out = BcastState::idle();
  return out;
}

int BcastState::compare(const BcastState& o) const {
  if (handling_ != o.handling_) return handling_ ? 1 : -1;
  if (!handling_) return 0;
  if (src_ != o.src_) return src_ < o.src_ ? -1 : 1;
  if (int c = msg_.compare(o.msg_); c != 0) return c;
  if (remaining_ != o.remaining_) return remaining_ < o.remaining_ ? -1 : 1;
  return 0;
}

std::size_t BcastState::hash() const {
  if (!handling_) return 0x6261635d;
  std::size_t h = hash_combine(0x62636173, static_cast<std::size_t>(src_));
  h = hash_combine(h, msg_.hash());
  for (int j : remaining_) h = hash_combine(h, static_cast<std::size_t>(j) + 17);
  return h;
}

std::string BcastState::str() const {
  if (!handling_) return "Bcast()";
  std::ostringstream os;
  os << "Handle(" << src_ << "," << msg_.str() << ",{";
  for (std::size_t i = 0; i < remaining_.size(); ++i) {
    if (i) os << ",";
    os << remaining_[i];
  }
  os << "})";
  return os.str();
}

bool BarrierState::has(int r) const {
  return std::binary_search(arrived_.begin(), arrived_.end(), r);
}

BarrierState BarrierState::with_arrived(int r) const {
  BarrierState out = *this;
  out.arrived_.insert(std::lower_bound(out.arrived_.begin(), out.arrived_.end(), r), r);
  return out;
}

int BarrierState::compare(const BarrierState& o) const {
  if (arrived_ != o.arrived_) return arrived_ < o.arrived_ ? -1 : 1;
  return 0;
}

std::size_t BarrierState::hash() const {
  std::size_t h = 0x62617272;
  for (int r : arrived_) h = hash_combine(h, static_cast<std::size_t>(r) + 31);
  return h;
}

std::string BarrierState::str() const {
  std::ostringstream os;
  os << "Barrier({";
  for (std::size_t i = 0; i < arrived_.size(); ++i) {
    if (i) os << ",";
    os << arrived_[i];
  }
  os << "})";
  return os.str();
}

std::vector<NetworkOffer> network_steps(const ChannelTable& t) {
  std::vector<NetworkOffer> out;
  for (const auto& [key, q] : t.queues()) {
    if (q.empty()) continue;
    auto [src, dst] = key;
    Action a;
    a.name = "nsend";
    a.args = {Value::rank(dst), Value::rank(src), q.front()};
    out.push_back({std::move(a), t.with_dequeued(src, dst)});
  }
  return out;
}

std::vector<BcastOffer> bcast_steps(const BcastState& s) {
  std::vector<BcastOffer> out;
  if (s.idle_state()) return out;
  for (int j : s.remaining()) {
    Action a;
    a.name = "nsend";
    a.args = {Value::rank(j), Value::rank(s.src()), s.msg()};
    out.push_back({std::move(a), s.with_delivered(j)});
  }
  return out;
}

std::vector<BarrierOffer> barrier_steps(const BarrierState& s, int n) {
  std::vector<BarrierOffer> out;
  for (int i = 0; i < n; ++i) {
    if (s.has(i)) continue;
    Action a;
    a.name = kBarrierAck;
    a.args = {Value::rank(i)};
    out.push_back({std::move(a), s.with_arrived(i)});
  }
  return out;
}

}  // namespace futv
