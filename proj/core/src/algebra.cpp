#include "futv/algebra.hpp"

#include <algorithm>
#include <sstream>

namespace futv {

void fail(Errc code, const std::string& msg) { throw ModelError(code, msg); }

// ---------------------------------------------------------------------------
// Expressions

Expr Expr::lit_of(Value v) {
  Expr e;
  e.kind = Kind::Lit;
  e.lit = std::move(v);
  return e;
}

Expr Expr::var(std::string n) {
  Expr e;
  e.kind = Kind::Var;
  e.name = std::move(n);
  return e;
}

Expr Expr::size_n() {
  Expr e;
  e.kind = Kind::SizeN;
  return e;
}

Expr Expr::binary(Kind k, Expr a, Expr b) {
  Expr e;
  e.kind = k;
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

Expr Expr::unary(Kind k, Expr a) {
  Expr e;
  e.kind = k;
  e.kids.push_back(std::move(a));
  return e;
}

Expr Expr::msg(std::string tag, std::vector<Expr> payload) {
  Expr e;
  e.kind = Kind::MsgLit;
  e.name = std::move(tag);
  e.kids = std::move(payload);
  return e;
}

Expr Expr::set_of(std::vector<Expr> elems) {
  Expr e;
  e.kind = Kind::SetLit;
  e.kids = std::move(elems);
  return e;
}

bool Expr::operator==(const Expr& o) const {
  if (kind != o.kind || name != o.name || kids.size() != o.kids.size()) return false;
  if (kind == Kind::Lit && lit != o.lit) return false;
  for (std::size_t i = 0; i < kids.size(); ++i)
    if (!(kids[i] == o.kids[i])) return false;
  return true;
}

std::size_t Expr::hash() const {
  std::size_t h = static_cast<std::size_t>(kind) * 0x100000001b3ULL;
  h = hash_combine(h, std::hash<std::string>{}(name));
  if (kind == Kind::Lit) h = hash_combine(h, lit.hash());
  for (const auto& k : kids) h = hash_combine(h, k.hash());
  return h;
}

namespace {

// Precedence levels for printing: 0 &&, 1 comparisons/in, 2 additive, 3 unary+primary.
int expr_level(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::And: return 0;
    case Expr::Kind::Eq:
    case Expr::Kind::Ne:
    case Expr::Kind::Lt:
    case Expr::Kind::Le:
    case Expr::Kind::Gt:
    case Expr::Kind::Ge:
    case Expr::Kind::In: return 1;
    case Expr::Kind::Add:
    case Expr::Kind::Sub:
    case Expr::Kind::Mod:
    case Expr::Kind::Diff: return 2;
    default: return 3;
  }
}

const char* expr_op(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add: return "+";
    case Expr::Kind::Sub: return "-";
    case Expr::Kind::Mod: return "mod";
    case Expr::Kind::Diff: return "\\";
    case Expr::Kind::Eq: return "=";
    case Expr::Kind::Ne: return "!=";
    case Expr::Kind::Lt: return "<";
    case Expr::Kind::Le: return "<=";
    case Expr::Kind::Gt: return ">";
    case Expr::Kind::Ge: return ">=";
    case Expr::Kind::In: return "in";
    case Expr::Kind::And: return "&&";
    default: return "?";
  }
}

void print_expr(std::ostream& os, const Expr& e, int min_level) {
  int lvl = expr_level(e.kind);
  bool parens = lvl < min_level;
  if (parens) os << "(";
  switch (e.kind) {
    case Expr::Kind::Lit: os << e.lit.str(); break;
    case Expr::Kind::Var: os << e.name; break;
    case Expr::Kind::SizeN: os << "N"; break;
    case Expr::Kind::Max:
      os << "max(";
      print_expr(os, e.kids[0], 0);
      os << ", ";
      print_expr(os, e.kids[1], 0);
      os << ")";
      break;
    case Expr::Kind::Not:
      os << "!";
      print_expr(os, e.kids[0], 3);
      break;
    case Expr::Kind::MsgLit: {
      os << e.name << "<";
      for (std::size_t i = 0; i < e.kids.size(); ++i) {
        if (i) os << ",";
        print_expr(os, e.kids[i], 0);
      }
      os << ">";
      break;
    }
    case Expr::Kind::SetLit: {
      os << "{";
      for (std::size_t i = 0; i < e.kids.size(); ++i) {
        if (i) os << ",";
        print_expr(os, e.kids[i], 0);
      }
      os << "}";
      break;
    }
    case Expr::Kind::And:
      print_expr(os, e.kids[0], 0);
      os << " && ";
      print_expr(os, e.kids[1], 1);
      break;
    default:
      print_expr(os, e.kids[0], lvl);
      os << " " << expr_op(e.kind) << " ";
      print_expr(os, e.kids[1], lvl + 1);
      break;
  }
  if (parens) os << ")";
}

}  // namespace

std::string Expr::str() const {
  std::ostringstream os;
  print_expr(os, *this, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Actions

Action Action::tau() { return Action{"tau", {}}; }

int Action::compare(const Action& o) const {
  if (int c = name.compare(o.name); c != 0) return c < 0 ? -1 : 1;
  for (std::size_t i = 0; i < args.size() && i < o.args.size(); ++i) {
    int c = args[i].compare(o.args[i]);
    if (c != 0) return c;
  }
  if (args.size() != o.args.size()) return args.size() < o.args.size() ? -1 : 1;
  return 0;
}

std::size_t Action::hash() const {
  std::size_t h = std::hash<std::string>{}(name);
  for (const auto& v : args) h = hash_combine(h, v.hash());
  return h;
}

std::string Action::str() const {
  if (args.empty()) return name;
  std::ostringstream os;
  os << name << "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) os << ",";
    os << args[i].str();
  }
  os << ")";
  return os.str();
}

bool ActionExpr::operator==(const ActionExpr& o) const {
  if (name != o.name || args.size() != o.args.size()) return false;
  for (std::size_t i = 0; i < args.size(); ++i)
    if (!(args[i] == o.args[i])) return false;
  return true;
}

std::size_t ActionExpr::hash() const {
  std::size_t h = std::hash<std::string>{}(name);
  for (const auto& e : args) h = hash_combine(h, e.hash());
  return h;
}

std::string ActionExpr::str() const {
  if (args.empty()) return name;
  std::ostringstream os;
  os << name << "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) os << ", ";
    os << args[i].str();
  }
  os << ")";
  return os.str();
}

MultiActionLabel MultiActionLabel::lone(Action a) {
  MultiActionLabel l;
  l.display = a.str();
  l.parts.push_back(std::move(a));
  return l;
}

MultiActionLabel MultiActionLabel::pair(const std::string& display_names, Action a, Action b) {
  MultiActionLabel l;
  std::ostringstream os;
  if (a.args == b.args) {
    os << display_names;
    if (!a.args.empty()) {
      os << "(";
      for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (i) os << ",";
        os << a.args[i].str();
      }
      os << ")";
    }
  } else {
    os << a.str() << "|" << b.str();
  }
  l.display = os.str();
  l.parts.push_back(std::move(a));
  l.parts.push_back(std::move(b));
  return l;
}

std::string MultiActionLabel::names() const {
  if (parts.size() == 1) return parts[0].name;
  return parts[0].name + "|" + parts[1].name;
}

int MultiActionLabel::compare(const MultiActionLabel& o) const {
  if (parts.size() != o.parts.size()) return parts.size() < o.parts.size() ? -1 : 1;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    int c = parts[i].compare(o.parts[i]);
    if (c != 0) return c;
  }
  return 0;
}

std::size_t MultiActionLabel::hash() const {
  std::size_t h = parts.size();
  for (const auto& p : parts) h = hash_combine(h, p.hash());
  return h;
}

// ---------------------------------------------------------------------------
// Term construction

namespace {

std::size_t term_hash_of(const Term& t) {
  std::size_t h = static_cast<std::size_t>(t.kind) * 0xff51afd7ed558ccdULL;
  switch (t.kind) {
    case Term::Kind::Act: return hash_combine(h, t.act.hash());
    case Term::Kind::Seq:
    case Term::Kind::Choice:
    case Term::Kind::Par:
      h = hash_combine(h, t.left->hash());
      return hash_combine(h, t.right->hash());
    case Term::Kind::Cond:
      h = hash_combine(h, t.guard.hash());
      h = hash_combine(h, t.left->hash());
      if (t.right) h = hash_combine(h, t.right->hash());
      return h;
    case Term::Kind::Sum:
      h = hash_combine(h, std::hash<std::string>{}(t.binder));
      h = hash_combine(h, std::hash<std::string>{}(t.sort));
      return hash_combine(h, t.body->hash());
    case Term::Kind::Call:
      h = hash_combine(h, std::hash<std::string>{}(t.callee));
      for (const auto& e : t.args) h = hash_combine(h, e.hash());
      return h;
    default:
      return h;
  }
}

}  // namespace

// Friend constructors set the cached hash directly.
#define FUTV_FINISH(tvar)                     \
  do {                                        \
    (tvar).hash_ = term_hash_of(tvar);        \
    return std::make_shared<Term>(std::move(tvar)); \
  } while (0)

TermPtr mk_act(ActionExpr a) {
  Term t;
  t.kind = Term::Kind::Act;
  t.act = std::move(a);
  FUTV_FINISH(t);
}

TermPtr mk_epsilon() {
  static const TermPtr eps = [] {
    Term t;
    t.kind = Term::Kind::Epsilon;
    t.hash_ = term_hash_of(t);
    return std::make_shared<Term>(std::move(t));
  }();
  return eps;
}

TermPtr mk_tau() {
  static const TermPtr tau = [] {
    Term t;
    t.kind = Term::Kind::Tau;
    t.hash_ = term_hash_of(t);
    return std::make_shared<Term>(std::move(t));
  }();
  return tau;
}

TermPtr mk_seq(TermPtr a, TermPtr b) {
  if (a->kind == Term::Kind::Epsilon) return b;
  if (b->kind == Term::Kind::Epsilon) return a;
  Term t;
  t.kind = Term::Kind::Seq;
  t.left = std::move(a);
  t.right = std::move(b);
  FUTV_FINISH(t);
}

TermPtr mk_choice(TermPtr a, TermPtr b) {
  Term t;
  t.kind = Term::Kind::Choice;
  t.left = std::move(a);
  t.right = std::move(b);
  FUTV_FINISH(t);
}

TermPtr mk_par(TermPtr a, TermPtr b) {
  if (a->kind == Term::Kind::Epsilon) return b;
  if (b->kind == Term::Kind::Epsilon) return a;
  Term t;
  t.kind = Term::Kind::Par;
  t.left = std::move(a);
  t.right = std::move(b);
  FUTV_FINISH(t);
}

TermPtr mk_cond(Expr guard, TermPtr then_branch, TermPtr else_branch) {
  Term t;
  t.kind = Term::Kind::Cond;
  t.guard = std::move(guard);
  t.left = std::move(then_branch);
  t.right = std::move(else_branch);
  FUTV_FINISH(t);
}

TermPtr mk_sum(std::string binder, std::string sort, TermPtr body) {
  Term t;
  t.kind = Term::Kind::Sum;
  t.binder = std::move(binder);
  t.sort = std::move(sort);
  t.body = std::move(body);
  FUTV_FINISH(t);
}

TermPtr mk_call(std::string name, std::vector<Expr> args) {
  Term t;
  t.kind = Term::Kind::Call;
  t.callee = std::move(name);
  t.args = std::move(args);
  FUTV_FINISH(t);
}

#undef FUTV_FINISH

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash() != b->hash() || a->kind != b->kind) return false;
  switch (a->kind) {
    case Term::Kind::Act: return a->act == b->act;
    case Term::Kind::Seq:
    case Term::Kind::Choice:
    case Term::Kind::Par:
      return term_equal(a->left, b->left) && term_equal(a->right, b->right);
    case Term::Kind::Cond:
      if (!(a->guard == b->guard)) return false;
      if (!term_equal(a->left, b->left)) return false;
      if (static_cast<bool>(a->right) != static_cast<bool>(b->right)) return false;
      return !a->right || term_equal(a->right, b->right);
    case Term::Kind::Sum:
      return a->binder == b->binder && a->sort == b->sort && term_equal(a->body, b->body);
    case Term::Kind::Call: {
      if (a->callee != b->callee || a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!(a->args[i] == b->args[i])) return false;
      return true;
    }
    default:
      return true;  // Epsilon/Tau
  }
}

int term_compare(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return 0;
  if (!a) return b ? -1 : 0;
  if (!b) return 1;
  if (a->kind != b->kind)
    return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
  // Cheap but deterministic: compare canonical strings for same-kind terms.
  std::string sa = term_str(a), sb = term_str(b);
  int c = sa.compare(sb);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

// ---------------------------------------------------------------------------
// Term printing (matches the .fut grammar levels: choice < par < seq < factor)

namespace {

void print_term(std::ostream& os, const TermPtr& t, int min_level);

void print_factor(std::ostream& os, const TermPtr& t) { print_term(os, t, 3); }

void print_term(std::ostream& os, const TermPtr& t, int min_level) {
  int lvl;
  switch (t->kind) {
    case Term::Kind::Choice: lvl = 0; break;
    case Term::Kind::Par: lvl = 1; break;
    case Term::Kind::Seq: lvl = 2; break;
    default: lvl = 3; break;
  }
  bool parens = lvl < min_level;
  if (parens) os << "(";
  switch (t->kind) {
    case Term::Kind::Choice:
      print_term(os, t->left, 0);
      os << " + ";
      print_term(os, t->right, 1);
      break;
    case Term::Kind::Par:
      print_term(os, t->left, 1);
      os << " || ";
      print_term(os, t->right, 2);
      break;
    case Term::Kind::Seq:
      print_term(os, t->left, 2);
      os << " . ";
      print_term(os, t->right, 3);
      break;
    case Term::Kind::Act:
      os << t->act.str();
      break;
    case Term::Kind::Cond: {
      os << "(" << t->guard.str() << ") -> ";
      // A then-branch that is itself a conditional would capture the <>.
      bool guard_then = t->right && t->left->kind == Term::Kind::Cond;
      if (guard_then) os << "(";
      print_factor(os, t->left);
      if (guard_then) os << ")";
      if (t->right) {
        os << " <> ";
        print_factor(os, t->right);
      }
      break;
    }
    case Term::Kind::Sum:
      os << "sum " << t->binder << ": " << t->sort << " . ";
      print_factor(os, t->body);
      break;
    case Term::Kind::Call: {
      os << t->callee << "(";
      for (std::size_t i = 0; i < t->args.size(); ++i) {
        if (i) os << ", ";
        os << t->args[i].str();
      }
      os << ")";
      break;
    }
    case Term::Kind::Epsilon:
      os << "eps";
      break;
    case Term::Kind::Tau:
      os << "tau";
      break;
  }
  if (parens) os << ")";
}

}  // namespace

std::string term_str(const TermPtr& t) {
  std::ostringstream os;
  print_term(os, t, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// Free variables and substitution

namespace {

void expr_vars(const Expr& e, std::set<std::string>& shadow, std::set<std::string>& out) {
  if (e.kind == Expr::Kind::Var) {
    if (!shadow.count(e.name)) out.insert(e.name);
    return;
  }
  for (const auto& k : e.kids) expr_vars(k, shadow, out);
}

void term_vars(const TermPtr& t, std::set<std::string>& shadow, std::set<std::string>& out) {
  switch (t->kind) {
    case Term::Kind::Act:
      for (const auto& e : t->act.args) expr_vars(e, shadow, out);
      break;
    case Term::Kind::Seq:
    case Term::Kind::Choice:
    case Term::Kind::Par:
      term_vars(t->left, shadow, out);
      term_vars(t->right, shadow, out);
      break;
    case Term::Kind::Cond:
      expr_vars(t->guard, shadow, out);
      term_vars(t->left, shadow, out);
      if (t->right) term_vars(t->right, shadow, out);
      break;
    case Term::Kind::Sum: {
      bool added = shadow.insert(t->binder).second;
      term_vars(t->body, shadow, out);
      if (added) shadow.erase(t->binder);
      break;
    }
    case Term::Kind::Call:
      for (const auto& e : t->args) expr_vars(e, shadow, out);
      break;
    default:
      break;
  }
}

Expr subst_expr(const Expr& e, const Bindings& b, const std::set<std::string>& shadow,
                bool strict) {
  switch (e.kind) {
    case Expr::Kind::Var: {
      if (shadow.count(e.name)) return e;
      auto it = b.find(e.name);
      if (it != b.end()) return Expr::lit_of(it->second);
      if (strict) fail(Errc::UnboundVariable, "unbound variable '" + e.name + "'");
      return e;
    }
    case Expr::Kind::Lit:
    case Expr::Kind::SizeN:
      return e;
    default: {
      Expr out = e;
      for (auto& k : out.kids) k = subst_expr(k, b, shadow, strict);
      return out;
    }
  }
}

TermPtr subst_term(const TermPtr& t, const Bindings& b, std::set<std::string>& shadow,
                   bool strict) {
  switch (t->kind) {
    case Term::Kind::Act: {
      ActionExpr a = t->act;
      for (auto& e : a.args) e = subst_expr(e, b, shadow, strict);
      return mk_act(std::move(a));
    }
    case Term::Kind::Seq:
      return mk_seq(subst_term(t->left, b, shadow, strict),
                    subst_term(t->right, b, shadow, strict));
    case Term::Kind::Choice:
      return mk_choice(subst_term(t->left, b, shadow, strict),
                       subst_term(t->right, b, shadow, strict));
    case Term::Kind::Par:
      return mk_par(subst_term(t->left, b, shadow, strict),
                    subst_term(t->right, b, shadow, strict));
    case Term::Kind::Cond: {
      Expr g = subst_expr(t->guard, b, shadow, strict);
      TermPtr then_branch = subst_term(t->left, b, shadow, strict);
      TermPtr else_branch = t->right ? subst_term(t->right, b, shadow, strict) : nullptr;
      return mk_cond(std::move(g), std::move(then_branch), std::move(else_branch));
    }
    case Term::Kind::Sum: {
      bool added = shadow.insert(t->binder).second;
      TermPtr body = subst_term(t->body, b, shadow, strict);
      if (added) shadow.erase(t->binder);
      return mk_sum(t->binder, t->sort, std::move(body));
    }
    case Term::Kind::Call: {
      std::vector<Expr> args = t->args;
      for (auto& e : args) e = subst_expr(e, b, shadow, strict);
      return mk_call(t->callee, std::move(args));
    }
    default:
      return t;
  }
}

}  // namespace

std::set<std::string> free_vars(const TermPtr& t) {
  std::set<std::string> shadow, out;
  term_vars(t, shadow, out);
  return out;
}

TermPtr substitute(const TermPtr& t, const Bindings& bindings) {
  std::set<std::string> shadow;
  return subst_term(t, bindings, shadow, /*strict=*/true);
}

Expr substitute_expr(const Expr& e, const Bindings& bindings) {
  std::set<std::string> shadow;
  return subst_expr(e, bindings, shadow, /*strict=*/true);
}

TermPtr substitute_partial(const TermPtr& t, const Bindings& bindings) {
  std::set<std::string> shadow;
  return subst_term(t, bindings, shadow, /*strict=*/false);
}

// ---------------------------------------------------------------------------
// Environment

void Environment::init_builtins(const std::vector<std::string>* restrict_pairs) {
  sorts["Int"] = SortDef{SortDef::Kind::IntRange, int_lo, int_hi};
  sorts["Rank"] = SortDef{SortDef::Kind::Ranks, 0, 0};

  auto decl = [&](const char* name, std::vector<ArgKind> sig, bool nf) {
    actions[name] = ActionDecl{name, std::move(sig), nf};
  };
  decl("send", {ArgKind::Rank, ArgKind::Rank, ArgKind::Msg}, true);
  decl("recv", {ArgKind::Rank, ArgKind::Rank, ArgKind::Msg}, true);
  decl("isend", {ArgKind::Rank, ArgKind::Rank, ArgKind::Msg}, true);
  decl("nsend", {ArgKind::Rank, ArgKind::Rank, ArgKind::Msg}, true);
  decl("nrecv", {ArgKind::Rank, ArgKind::Rank, ArgKind::Msg}, true);
  decl("bcast", {ArgKind::Rank, ArgKind::Msg}, true);
  decl("breq", {ArgKind::Rank, ArgKind::Msg}, true);
  decl("barrier", {ArgKind::Rank}, true);
  decl(kBarrierAck, {ArgKind::Rank}, true);
  decl("tau", {}, false);

  std::vector<CommPair> defaults;
  auto id_corr = [](int n) {
    std::vector<std::pair<int, int>> c;
    for (int i = 0; i < n; ++i) c.emplace_back(i, i);
    return c;
  };
  defaults.push_back({"send", "nrecv", id_corr(3), true, false, "send|nrecv"});
  defaults.push_back({"recv", "nsend", id_corr(3), false, true, "recv|nsend"});
  defaults.push_back({"send", "recv", {{0, 1}, {1, 0}, {2, 2}}, true, false, "send|recv"});
  defaults.push_back({"isend", "nrecv", id_corr(3), true, false, "isend|nrecv"});
  defaults.push_back({"bcast", "breq", id_corr(2), true, false, "bcast|breq"});
  defaults.push_back({"barrier", kBarrierAck, id_corr(1), true, false,
                      std::string("barrier|") + kBarrierAck});

  if (restrict_pairs == nullptr) {
    pairs = std::move(defaults);
    return;
  }
  pairs.clear();
  for (const auto& want : *restrict_pairs) {
    for (const auto& d : defaults) {
      if (d.display == want) {
        pairs.push_back(d);
        break;
      }
    }
  }
}

const ActionDecl& Environment::action_decl(const std::string& name) const {
  auto it = actions.find(name);
  if (it == actions.end()) fail(Errc::UnknownAction, "unknown action '" + name + "'");
  return it->second;
}

const ProcessDef& Environment::def(const std::string& name) const {
  auto it = defs.find(name);
  if (it == defs.end()) fail(Errc::UnknownProcess, "unknown process '" + name + "'");
  return it->second;
}

std::vector<Value> Environment::domain(const std::string& sort_name) const {
  auto it = sorts.find(sort_name);
  if (it == sorts.end()) fail(Errc::NonFiniteSort, "unknown sort '" + sort_name + "'");
  std::vector<Value> out;
  if (it->second.kind == SortDef::Kind::Ranks) {
    for (int r = 0; r < size_n; ++r) out.push_back(Value::rank(r));
    return out;
  }
  if (it->second.lo > it->second.hi)
    fail(Errc::NonFiniteSort, "sort '" + sort_name + "' has an empty/unbounded domain");
  for (std::int64_t v = it->second.lo; v <= it->second.hi; ++v)
    out.push_back(Value::integer(v));
  return out;
}

bool Environment::sort_contains(const std::string& sort_name, const Value& v) const {
  auto it = sorts.find(sort_name);
  if (it == sorts.end()) fail(Errc::NonFiniteSort, "unknown sort '" + sort_name + "'");
  if (!v.is_numeric()) return false;
  if (it->second.kind == SortDef::Kind::Ranks)
    return v.num() >= 0 && v.num() < size_n;
  return v.num() >= it->second.lo && v.num() <= it->second.hi;
}

bool Environment::is_network_facing(const std::string& action_name) const {
  auto it = actions.find(action_name);
  return it != actions.end() && it->second.network_facing;
}

bool Environment::allowed_alone(const std::string& action_name) const {
  return !is_network_facing(action_name);
}

std::vector<const CommPair*> Environment::pairs_with(const std::string& action_name) const {
  std::vector<const CommPair*> out;
  for (const auto& p : pairs)
    if (p.a == action_name || p.b == action_name) out.push_back(&p);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::int64_t need_num(const Value& v, const char* what) {
  if (!v.is_numeric()) fail(Errc::SortError, std::string(what) + ": expected an integer, got " + v.str());
  return v.num();
}

bool need_bool(const Value& v, const char* what) {
  if (!v.is_bool()) fail(Errc::SortError, std::string(what) + ": expected a boolean, got " + v.str());
  return v.truth();
}

}  // namespace

Value coerce_value(Value v, ArgKind kind, const Environment& env, const std::string& context) {
  switch (kind) {
    case ArgKind::Rank: {
      std::int64_t r = need_num(v, context.c_str());
      if (r < 0 || r >= env.size_n)
        fail(Errc::RankOutOfRange,
             context + ": rank " + std::to_string(r) + " not in [0," +
                 std::to_string(env.size_n) + ")");
      return Value::rank(r);
    }
    case ArgKind::Int:
      return Value::integer(need_num(v, context.c_str()));
    case ArgKind::Msg:
      if (v.is_numeric()) return Value::integer(v.num());
      if (v.is_msg()) return v;
      fail(Errc::SortError, context + ": expected a message, got " + v.str());
    case ArgKind::Bool:
      if (v.is_bool()) return v;
      fail(Errc::SortError, context + ": expected a boolean, got " + v.str());
    case ArgKind::Set:
      if (v.is_set()) return v;
      fail(Errc::SortError, context + ": expected a set, got " + v.str());
  }
  return v;
}

Value eval_expr(const Expr& e, const Bindings& bindings, const Environment& env) {
  switch (e.kind) {
    case Expr::Kind::Lit:
      return e.lit;
    case Expr::Kind::Var: {
      auto it = bindings.find(e.name);
      if (it == bindings.end()) fail(Errc::UnboundVariable, "unbound variable '" + e.name + "'");
      return it->second;
    }
    case Expr::Kind::SizeN:
      return Value::integer(env.size_n);
    case Expr::Kind::Add:
      return Value::integer(need_num(eval_expr(e.kids[0], bindings, env), "+") +
                            need_num(eval_expr(e.kids[1], bindings, env), "+"));
    case Expr::Kind::Sub:
      return Value::integer(need_num(eval_expr(e.kids[0], bindings, env), "-") -
                            need_num(eval_expr(e.kids[1], bindings, env), "-"));
    case Expr::Kind::Mod: {
      std::int64_t a = need_num(eval_expr(e.kids[0], bindings, env), "mod");
      std::int64_t m = need_num(eval_expr(e.kids[1], bindings, env), "mod");
      if (m <= 0) fail(Errc::SortError, "mod: modulus must be positive");
      std::int64_t r = a % m;
      return Value::integer(r < 0 ? r + m : r);
    }
    case Expr::Kind::Max: {
      std::int64_t a = need_num(eval_expr(e.kids[0], bindings, env), "max");
      std::int64_t b = need_num(eval_expr(e.kids[1], bindings, env), "max");
      return Value::integer(std::max(a, b));
    }
    case Expr::Kind::Eq:
      return Value::boolean(eval_expr(e.kids[0], bindings, env) ==
                            eval_expr(e.kids[1], bindings, env));
    case Expr::Kind::Ne:
      return Value::boolean(eval_expr(e.kids[0], bindings, env) !=
                            eval_expr(e.kids[1], bindings, env));
    case Expr::Kind::Lt:
    case Expr::Kind::Le:
    case Expr::Kind::Gt:
    case Expr::Kind::Ge: {
      std::int64_t a = need_num(eval_expr(e.kids[0], bindings, env), "comparison");
      std::int64_t b = need_num(eval_expr(e.kids[1], bindings, env), "comparison");
      switch (e.kind) {
        case Expr::Kind::Lt: return Value::boolean(a < b);
        case Expr::Kind::Le: return Value::boolean(a <= b);
        case Expr::Kind::Gt: return Value::boolean(a > b);
        default: return Value::boolean(a >= b);
      }
    }
    case Expr::Kind::And:
      return Value::boolean(need_bool(eval_expr(e.kids[0], bindings, env), "&&") &&
                            need_bool(eval_expr(e.kids[1], bindings, env), "&&"));
    case Expr::Kind::Not:
      return Value::boolean(!need_bool(eval_expr(e.kids[0], bindings, env), "!"));
    case Expr::Kind::In: {
      Value x = eval_expr(e.kids[0], bindings, env);
      Value s = eval_expr(e.kids[1], bindings, env);
      if (!s.is_set()) fail(Errc::SortError, "in: right operand must be a set");
      return Value::boolean(s.contains(x));
    }
    case Expr::Kind::Diff: {
      Value a = eval_expr(e.kids[0], bindings, env);
      Value b = eval_expr(e.kids[1], bindings, env);
      if (!a.is_set() || !b.is_set()) fail(Errc::SortError, "\\: operands must be sets");
      std::vector<Value> out;
      for (const auto& v : a.elems())
        if (!b.contains(v)) out.push_back(v);
      return Value::set(std::move(out));
    }
    case Expr::Kind::MsgLit: {
      auto it = env.tags.find(e.name);
      if (it == env.tags.end())
        fail(Errc::SortError, "unknown message tag '" + e.name + "'");
      const TagDecl& tag = it->second;
      if (tag.payload.size() != e.kids.size())
        fail(Errc::SortError, "tag '" + e.name + "' expects " +
                                  std::to_string(tag.payload.size()) + " payload value(s)");
      std::vector<Value> payload;
      for (std::size_t i = 0; i < e.kids.size(); ++i)
        payload.push_back(coerce_value(eval_expr(e.kids[i], bindings, env), tag.payload[i], env,
                                       "payload of " + e.name));
      return Value::msg(e.name, std::move(payload));
    }
    case Expr::Kind::SetLit: {
      std::vector<Value> elems;
      for (const auto& k : e.kids) elems.push_back(eval_expr(k, bindings, env));
      return Value::set(std::move(elems));
    }
  }
  fail(Errc::SortError, "unreachable expression kind");
}

Action ground_action(const ActionExpr& a, const Bindings& bindings, const Environment& env) {
  const ActionDecl& decl = env.action_decl(a.name);
  if (decl.sig.size() != a.args.size())
    fail(Errc::SortError, "action '" + a.name + "' expects " +
                              std::to_string(decl.sig.size()) + " argument(s), got " +
                              std::to_string(a.args.size()));
  Action out;
  out.name = a.name;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    out.args.push_back(coerce_value(eval_expr(a.args[i], bindings, env), decl.sig[i], env,
                                    "argument " + std::to_string(i) + " of " + a.name));
  return out;
}

Action partner_action(const CommPair& pair, bool from_a, const Action& ground) {
  const std::string& other = from_a ? pair.b : pair.a;
  int max_pos = -1;
  for (const auto& [pa, pb] : pair.corr) max_pos = std::max(max_pos, from_a ? pb : pa);
  Action out;
  out.name = other;
  out.args.resize(static_cast<std::size_t>(max_pos + 1));
  for (const auto& [pa, pb] : pair.corr) {
    int src = from_a ? pa : pb;
    int dst = from_a ? pb : pa;
    out.args[static_cast<std::size_t>(dst)] = ground.args[static_cast<std::size_t>(src)];
  }
  return out;
}

}  // namespace futv
