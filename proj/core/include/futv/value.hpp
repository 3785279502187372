#ifndef FUTV_VALUE_HPP
#define FUTV_VALUE_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace futv {

// A ground data value: an integer, a rank, a boolean, a tagged message
// (e.g. elect<5>), or a finite set of values. Messages may also be plain
// integers, so action arguments in message position accept Int as well.
//
// Int and Rank compare equal when they carry the same number; the Rank kind
// exists for range checking and display, not for distinguishing data.
class Value {
public:
  enum class Kind { Int, Rank, Bool, Msg, Set };

  Value() : kind_(Kind::Int), num_(0) {}

  static Value integer(std::int64_t v);
  static Value rank(std::int64_t v);
  static Value boolean(bool v);
  static Value msg(std::string tag, std::vector<Value> payload);
  // Builds a canonical set: sorted, duplicates removed.
  static Value set(std::vector<Value> elems);

  Kind kind() const { return kind_; }
  bool is_numeric() const { return kind_ == Kind::Int || kind_ == Kind::Rank; }
  bool is_bool() const { return kind_ == Kind::Bool; }
  bool is_msg() const { return kind_ == Kind::Msg; }
  bool is_set() const { return kind_ == Kind::Set; }

  std::int64_t num() const { return num_; }
  bool truth() const { return num_ != 0; }
  const std::string& tag() const;
  const std::vector<Value>& payload() const;
  const std::vector<Value>& elems() const;

  bool contains(const Value& v) const;

  // Total order; numeric kinds are unified so Int(1) == Rank(1).
  int compare(const Value& other) const;
  bool operator==(const Value& other) const { return compare(other) == 0; }
  bool operator!=(const Value& other) const { return compare(other) != 0; }
  bool operator<(const Value& other) const { return compare(other) < 0; }

  std::size_t hash() const;
  std::string str() const;

private:
  struct Composite {
    std::string tag;            // msg tag; empty for sets
    std::vector<Value> items;   // msg payload or set elements
  };

  Kind kind_;
  std::int64_t num_ = 0;        // Int/Rank value, Bool as 0/1
  std::shared_ptr<const Composite> comp_;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

std::size_t hash_combine(std::size_t seed, std::size_t v);

}  // namespace futv

#endif
