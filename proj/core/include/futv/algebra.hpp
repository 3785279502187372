#ifndef FUTV_ALGEBRA_HPP
#define FUTV_ALGEBRA_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "futv/value.hpp"

namespace futv {

enum class Errc {
  UnboundVariable,
  SortError,
  UnknownProcess,
  UnknownAction,
  NonFiniteSort,
  RankOutOfRange,
  RankCountOutOfRange,
  EmptyQueue,
  DuplicateValues,
  NotParallel,
  PermissionOverflow,
  ProgramFault,
  BoundExceeded,
  UndefinedReference,
  UnguardedRecursion,
};

class ModelError : public std::runtime_error {
public:
  ModelError(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& msg);

// ---------------------------------------------------------------------------
// Expressions

struct Expr {
  enum class Kind {
    Lit,     // ground value
    Var,     // bound variable (sum binder or process parameter)
    SizeN,   // the model size N
    Add, Sub, Mod, Max,
    Eq, Ne, Lt, Le, Gt, Ge,
    And, Not,
    In,      // set membership
    Diff,    // set difference
    MsgLit,  // tag<e1,...,en>
    SetLit,  // {e1,...,en}
  };

  Kind kind = Kind::Lit;
  Value lit;
  std::string name;        // Var name or MsgLit tag
  std::vector<Expr> kids;

  static Expr lit_of(Value v);
  static Expr var(std::string n);
  static Expr size_n();
  static Expr binary(Kind k, Expr a, Expr b);
  static Expr unary(Kind k, Expr a);
  static Expr msg(std::string tag, std::vector<Expr> payload);
  static Expr set_of(std::vector<Expr> elems);

  bool operator==(const Expr& o) const;
  std::size_t hash() const;
  std::string str() const;
};

using Bindings = std::map<std::string, Value>;

// ---------------------------------------------------------------------------
// Actions and labels

// Ground action: evaluated name + data.
struct Action {
  std::string name;
  std::vector<Value> args;

  static Action tau();
  bool is_tau() const { return name == "tau"; }
  int compare(const Action& o) const;
  bool operator==(const Action& o) const { return compare(o) == 0; }
  bool operator<(const Action& o) const { return compare(o) < 0; }
  std::size_t hash() const;
  std::string str() const;
};

// Syntactic action occurrence inside a term. Arguments are expressions,
// evaluated when the action fires.
struct ActionExpr {
  std::string name;
  std::vector<Expr> args;

  bool operator==(const ActionExpr& o) const;
  std::size_t hash() const;
  std::string str() const;
};

// A transition label: a lone action or a synchronized communication pair.
struct MultiActionLabel {
  std::vector<Action> parts;  // size 1 or 2, in the pair's display order
  std::string display;

  static MultiActionLabel lone(Action a);
  static MultiActionLabel pair(const std::string& display_names, Action a, Action b);

  bool is_tau() const { return parts.size() == 1 && parts[0].is_tau(); }
  // Name part of the label, e.g. "send|nrecv" or "tau".
  std::string names() const;
  int compare(const MultiActionLabel& o) const;
  bool operator==(const MultiActionLabel& o) const { return compare(o) == 0; }
  bool operator<(const MultiActionLabel& o) const { return compare(o) < 0; }
  std::size_t hash() const;
};

// ---------------------------------------------------------------------------
// Process terms

class Term;
using TermPtr = std::shared_ptr<const Term>;

class Term {
public:
  enum class Kind { Act, Seq, Choice, Par, Cond, Sum, Call, Epsilon, Tau };

  Kind kind;
  ActionExpr act;       // Act
  TermPtr left, right;  // Seq/Choice/Par children; Cond then/else (right may be null)
  Expr guard;           // Cond
  std::string binder;   // Sum
  std::string sort;     // Sum domain name
  TermPtr body;         // Sum
  std::string callee;   // Call
  std::vector<Expr> args;

  std::size_t hash() const { return hash_; }

private:
  std::size_t hash_ = 0;
  friend TermPtr mk_act(ActionExpr a);
  friend TermPtr mk_seq(TermPtr a, TermPtr b);
  friend TermPtr mk_choice(TermPtr a, TermPtr b);
  friend TermPtr mk_par(TermPtr a, TermPtr b);
  friend TermPtr mk_cond(Expr guard, TermPtr then_branch, TermPtr else_branch);
  friend TermPtr mk_sum(std::string binder, std::string sort, TermPtr body);
  friend TermPtr mk_call(std::string name, std::vector<Expr> args);
  friend TermPtr mk_epsilon();
  friend TermPtr mk_tau();
};

TermPtr mk_act(ActionExpr a);
TermPtr mk_seq(TermPtr a, TermPtr b);      // normalizes eps.Q -> Q, P.eps -> P
TermPtr mk_choice(TermPtr a, TermPtr b);
TermPtr mk_par(TermPtr a, TermPtr b);      // normalizes eps || Q -> Q
TermPtr mk_cond(Expr guard, TermPtr then_branch, TermPtr else_branch = nullptr);
TermPtr mk_sum(std::string binder, std::string sort, TermPtr body);
TermPtr mk_call(std::string name, std::vector<Expr> args);
TermPtr mk_epsilon();
TermPtr mk_tau();

bool term_equal(const TermPtr& a, const TermPtr& b);
int term_compare(const TermPtr& a, const TermPtr& b);
std::string term_str(const TermPtr& t);
std::set<std::string> free_vars(const TermPtr& t);

// Replaces free occurrences of the bound names; sum binders shadow.
// Throws UnboundVariable when a free variable has no binding.
TermPtr substitute(const TermPtr& t, const Bindings& bindings);
Expr substitute_expr(const Expr& e, const Bindings& bindings);

// Like substitute, but leaves unknown free variables in place (used while
// sum binders are still being solved by matching).
TermPtr substitute_partial(const TermPtr& t, const Bindings& bindings);

// ---------------------------------------------------------------------------
// Sorts, declarations, environment

enum class ArgKind { Rank, Int, Msg, Bool, Set };

struct SortDef {
  enum class Kind { IntRange, Ranks };
  Kind kind = Kind::IntRange;
  std::int64_t lo = 0, hi = -1;  // IntRange bounds, inclusive
};

struct ActionDecl {
  std::string name;
  std::vector<ArgKind> sig;
  bool network_facing = false;  // blocked as a lone label
};

struct TagDecl {
  std::string name;
  std::vector<ArgKind> payload;
};

struct CommPair {
  std::string a, b;  // display order
  // Positions that must carry equal data: (index into a's args, index into b's).
  std::vector<std::pair<int, int>> corr;
  bool a_drives = true;   // a's occurrences are enumerated concretely
  bool b_drives = false;  // b's occurrences are enumerated concretely
  std::string display;    // "send|nrecv"
};

struct ProcessDef {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;  // (name, sort)
  TermPtr body;
};

// A fully instantiated model: declarations plus a concrete size N.
class Environment {
public:
  int size_n = 0;
  std::int64_t int_lo = 0, int_hi = 7;  // bound for sums over Int
  std::map<std::string, SortDef> sorts;
  std::map<std::string, ActionDecl> actions;
  std::map<std::string, TagDecl> tags;
  std::map<std::string, ProcessDef> defs;
  std::vector<CommPair> pairs;

  // Installs Int/Rank sorts, the builtin action alphabet and, unless
  // restrict_pairs is given, the default communication pairs.
  void init_builtins(const std::vector<std::string>* restrict_pairs = nullptr);

  const ActionDecl& action_decl(const std::string& name) const;
  const ProcessDef& def(const std::string& name) const;
  std::vector<Value> domain(const std::string& sort_name) const;
  bool sort_contains(const std::string& sort_name, const Value& v) const;
  bool is_network_facing(const std::string& action_name) const;
  bool allowed_alone(const std::string& action_name) const;
  std::vector<const CommPair*> pairs_with(const std::string& action_name) const;
};

// Names the builtin ack action the Barrier process synchronizes on.
inline constexpr const char* kBarrierAck = "barrier_ack";

Value eval_expr(const Expr& e, const Bindings& bindings, const Environment& env);

// Evaluates the action's arguments and coerces them against its declaration
// (rank ranges checked, messages validated against tag declarations).
Action ground_action(const ActionExpr& a, const Bindings& bindings, const Environment& env);
Value coerce_value(Value v, ArgKind kind, const Environment& env, const std::string& context);

// Given one side's ground action, the data the other side must carry.
Action partner_action(const CommPair& pair, bool from_a, const Action& ground);

struct TermPtrHash {
  std::size_t operator()(const TermPtr& t) const { return t ? t->hash() : 0; }
};
struct TermPtrEq {
  bool operator()(const TermPtr& a, const TermPtr& b) const { return term_equal(a, b); }
};

}  // namespace futv

#endif
