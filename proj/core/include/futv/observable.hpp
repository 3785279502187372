#ifndef FUTV_OBSERVABLE_HPP
#define FUTV_OBSERVABLE_HPP

#include <optional>
#include <string>
#include <vector>

#include "futv/value.hpp"

namespace futv {

// A rank-local communication event in normal form, used to compare what the
// explorer's LTS predicts with what the simulator actually did.
struct ObsEvent {
  std::string op;  // send | recv | isend | bcast | barrier
  int peer = -1;   // counterpart rank; -1 for bcast/barrier
  std::optional<Value> msg;

  int compare(const ObsEvent& o) const {
    if (int c = op.compare(o.op); c != 0) return c < 0 ? -1 : 1;
    if (peer != o.peer) return peer < o.peer ? -1 : 1;
    if (msg.has_value() != o.msg.has_value()) return msg.has_value() ? 1 : -1;
    if (msg) return msg->compare(*o.msg);
    return 0;
  }
  bool operator==(const ObsEvent& o) const { return compare(o) == 0; }
  bool operator<(const ObsEvent& o) const { return compare(o) < 0; }

  std::string str() const {
    std::string s = op;
    if (peer >= 0) s += "@" + std::to_string(peer);
    if (msg) s += ":" + msg->str();
    return s;
  }
};

using ObsSequence = std::vector<ObsEvent>;

}  // namespace futv

#endif
