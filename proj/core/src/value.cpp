#include "futv/value.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace futv {

std::size_t hash_combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

Value Value::integer(std::int64_t v) {
  Value out;
  out.kind_ = Kind::Int;
  out.num_ = v;
  return out;
}

Value Value::rank(std::int64_t v) {
  Value out;
  out.kind_ = Kind::Rank;
  out.num_ = v;
  return out;
}

Value Value::boolean(bool v) {
  Value out;
  out.kind_ = Kind::Bool;
  out.num_ = v ? 1 : 0;
  return out;
}

Value Value::msg(std::string tag, std::vector<Value> payload) {
  Value out;
  out.kind_ = Kind::Msg;
  auto comp = std::make_shared<Composite>();
  comp->tag = std::move(tag);
  comp->items = std::move(payload);
  out.comp_ = std::move(comp);
  return out;
}

Value Value::set(std::vector<Value> elems) {
  Value out;
  out.kind_ = Kind::Set;
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end(),
                          [](const Value& a, const Value& b) { return a == b; }),
              elems.end());
  auto comp = std::make_shared<Composite>();
  comp->items = std::move(elems);
  out.comp_ = std::move(comp);
  return out;
}

static const std::string kEmpty;
static const std::vector<Value> kNoItems;

const std::string& Value::tag() const {
  return comp_ ? comp_->tag : kEmpty;
}

const std::vector<Value>& Value::payload() const {
  return comp_ ? comp_->items : kNoItems;
}

const std::vector<Value>& Value::elems() const {
  return comp_ ? comp_->items : kNoItems;
}

bool Value::contains(const Value& v) const {
  if (kind_ != Kind::Set) return false;
  const auto& xs = elems();
  return std::binary_search(xs.begin(), xs.end(), v);
}

static int kind_order(Value::Kind k) {
  switch (k) {
    case Value::Kind::Int:
    case Value::Kind::Rank: return 0;
    case Value::Kind::Bool: return 1;
    case Value::Kind::Msg: return 2;
    case Value::Kind::Set: return 3;
  }
  return 4;
}

int Value::compare(const Value& other) const {
  int ka = kind_order(kind_), kb = kind_order(other.kind_);
  if (ka != kb) return ka < kb ? -1 : 1;
  switch (ka) {
    case 0:
    case 1:
      return num_ < other.num_ ? -1 : (num_ > other.num_ ? 1 : 0);
    case 2: {
      int t = tag().compare(other.tag());
      if (t != 0) return t < 0 ? -1 : 1;
      break;
    }
    default:
      break;
  }
  const auto& a = comp_ ? comp_->items : kNoItems;
  const auto& b = other.comp_ ? other.comp_->items : kNoItems;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    int c = a[i].compare(b[i]);
    if (c != 0) return c;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

std::size_t Value::hash() const {
  std::size_t h = static_cast<std::size_t>(kind_order(kind_)) * 1099511628211ULL;
  switch (kind_) {
    case Kind::Int:
    case Kind::Rank:
    case Kind::Bool:
      return hash_combine(h, static_cast<std::size_t>(num_) * 0x9e3779b97f4a7c15ULL + 1);
    case Kind::Msg:
      h = hash_combine(h, std::hash<std::string>{}(tag()));
      break;
    case Kind::Set:
      break;
  }
  for (const auto& v : (comp_ ? comp_->items : kNoItems)) h = hash_combine(h, v.hash());
  return h;
}

std::string Value::str() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Int:
    case Kind::Rank:
      os << num_;
      break;
    case Kind::Bool:
      os << (num_ ? "true" : "false");
      break;
    case Kind::Msg: {
      os << tag() << "<";
      bool first = true;
      for (const auto& v : payload()) {
        if (!first) os << ",";
        os << v.str();
        first = false;
      }
      os << ">";
      break;
    }
    case Kind::Set: {
      os << "{";
      bool first = true;
      for (const auto& v : elems()) {
        if (!first) os << ",";
        os << v.str();
        first = false;
      }
      os << "}";
      break;
    }
  }
  return os.str();
}

}  // namespace futv
