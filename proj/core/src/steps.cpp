#include "futv/steps.hpp"

#include <algorithm>
#include <optional>

namespace futv {

namespace {

constexpr int kUnfoldLimit = 512;

void bump(int& depth, const std::string& who) {
  if (++depth > kUnfoldLimit)
    fail(Errc::UnguardedRecursion, "unguarded recursion while unfolding '" + who + "'");
}

Bindings call_bindings(const ProcessDef& def, const std::vector<Expr>& args,
                       const Environment& env, const Bindings& outer = {}) {
  if (def.params.size() != args.size())
    fail(Errc::SortError, "process '" + def.name + "' expects " +
                              std::to_string(def.params.size()) + " argument(s), got " +
                              std::to_string(args.size()));
  Bindings b;
  for (std::size_t i = 0; i < args.size(); ++i) {
    Value v = eval_expr(args[i], outer, env);
    const std::string& sort = def.params[i].second;
    if (sort == "Rank") v = coerce_value(v, ArgKind::Rank, env, "parameter " + def.params[i].first);
    else if (!v.is_numeric())
      fail(Errc::SortError, "parameter " + def.params[i].first + " of '" + def.name +
                                "' expects an integer, got " + v.str());
    b.emplace(def.params[i].first, std::move(v));
  }
  return b;
}

TermPtr unfold_call(const TermPtr& t, const Environment& env) {
  const ProcessDef& def = env.def(t->callee);
  return substitute(def.body, call_bindings(def, t->args, env));
}

TermPtr reduce_rec(const TermPtr& t, const Environment& env, int depth) {
  switch (t->kind) {
    case Term::Kind::Call:
      bump(depth, t->callee);
      return reduce_rec(unfold_call(t, env), env, depth);
    case Term::Kind::Cond: {
      Value g = eval_expr(t->guard, {}, env);
      if (!g.is_bool()) fail(Errc::SortError, "guard is not boolean: " + t->guard.str());
      if (g.truth()) return reduce_rec(t->left, env, depth);
      if (t->right) return reduce_rec(t->right, env, depth);
      return t;  // false guard without else: blocked, kept as written
    }
    case Term::Kind::Seq: {
      TermPtr head = reduce_rec(t->left, env, depth);
      if (head->kind == Term::Kind::Epsilon) return reduce_rec(t->right, env, depth);
      if (head.get() == t->left.get()) return t;
      return mk_seq(head, t->right);
    }
    case Term::Kind::Par: {
      TermPtr l = reduce_rec(t->left, env, depth);
      TermPtr r = reduce_rec(t->right, env, depth);
      if (l.get() == t->left.get() && r.get() == t->right.get()) return t;
      return mk_par(l, r);
    }
    default:
      return t;
  }
}

bool terminated_rec(const TermPtr& t, const Environment& env, int depth) {
  switch (t->kind) {
    case Term::Kind::Epsilon:
      return true;
    case Term::Kind::Act:
    case Term::Kind::Tau:
      return false;
    case Term::Kind::Seq:
    case Term::Kind::Par:
      return terminated_rec(t->left, env, depth) && terminated_rec(t->right, env, depth);
    case Term::Kind::Choice:
      return terminated_rec(t->left, env, depth) || terminated_rec(t->right, env, depth);
    case Term::Kind::Cond: {
      Value g = eval_expr(t->guard, {}, env);
      if (!g.is_bool()) fail(Errc::SortError, "guard is not boolean: " + t->guard.str());
      if (g.truth()) return terminated_rec(t->left, env, depth);
      return t->right && terminated_rec(t->right, env, depth);
    }
    case Term::Kind::Sum: {
      // Sums whose body leads with an action can never have terminated.
      if (t->body->kind == Term::Kind::Act || t->body->kind == Term::Kind::Tau) return false;
      for (const Value& v : env.domain(t->sort))
        if (terminated_rec(substitute(t->body, {{t->binder, v}}), env, depth)) return true;
      return false;
    }
    case Term::Kind::Call:
      bump(depth, t->callee);
      return terminated_rec(unfold_call(t, env), env, depth);
  }
  return false;
}

struct StepSink {
  std::vector<LocalStep> out;
  void add(Action a, TermPtr next) { out.push_back({std::move(a), std::move(next)}); }
};

void steps_rec(const TermPtr& t, const Environment& env, StepSink& sink, int depth) {
  switch (t->kind) {
    case Term::Kind::Epsilon:
      return;
    case Term::Kind::Tau:
      sink.add(Action::tau(), mk_epsilon());
      return;
    case Term::Kind::Act:
      sink.add(ground_action(t->act, {}, env), mk_epsilon());
      return;
    case Term::Kind::Seq: {
      StepSink head;
      steps_rec(t->left, env, head, depth);
      for (auto& s : head.out) sink.add(std::move(s.action), mk_seq(s.next, t->right));
      if (terminated_rec(t->left, env, 0)) steps_rec(t->right, env, sink, depth);
      return;
    }
    case Term::Kind::Choice:
      steps_rec(t->left, env, sink, depth);
      steps_rec(t->right, env, sink, depth);
      return;
    case Term::Kind::Par: {
      StepSink l, r;
      steps_rec(t->left, env, l, depth);
      steps_rec(t->right, env, r, depth);
      for (auto& s : l.out) sink.add(std::move(s.action), mk_par(s.next, t->right));
      for (auto& s : r.out) sink.add(std::move(s.action), mk_par(t->left, s.next));
      return;
    }
    case Term::Kind::Cond: {
      Value g = eval_expr(t->guard, {}, env);
      if (!g.is_bool()) fail(Errc::SortError, "guard is not boolean: " + t->guard.str());
      if (g.truth()) steps_rec(t->left, env, sink, depth);
      else if (t->right) steps_rec(t->right, env, sink, depth);
      return;
    }
    case Term::Kind::Sum: {
      for (const Value& v : env.domain(t->sort))
        steps_rec(substitute(t->body, {{t->binder, v}}), env, sink, depth);
      return;
    }
    case Term::Kind::Call:
      bump(depth, t->callee);
      steps_rec(unfold_call(t, env), env, sink, depth);
      return;
  }
}

void dedupe_steps(std::vector<LocalStep>& steps) {
  std::sort(steps.begin(), steps.end(), [](const LocalStep& a, const LocalStep& b) {
    int c = a.action.compare(b.action);
    if (c != 0) return c < 0;
    return term_compare(a.next, b.next) < 0;
  });
  steps.erase(std::unique(steps.begin(), steps.end(),
                          [](const LocalStep& a, const LocalStep& b) {
                            return a.action == b.action && term_equal(a.next, b.next);
                          }),
              steps.end());
}

}  // namespace

TermPtr reduce(const TermPtr& t, const Environment& env) { return reduce_rec(t, env, 0); }

bool terminated(const TermPtr& t, const Environment& env) { return terminated_rec(t, env, 0); }

std::vector<LocalStep> local_steps(const TermPtr& t, const Environment& env) {
  StepSink sink;
  steps_rec(t, env, sink, 0);
  for (auto& s : sink.out) s.next = reduce(s.next, env);
  dedupe_steps(sink.out);
  return sink.out;
}

// ---------------------------------------------------------------------------
// Lazy matching

namespace {

// One open sum binder: its sort, and the value the match fixed (if any).
struct OpenBinder {
  std::string sort;
  std::optional<Value> solved;
};

using OpenMap = std::map<std::string, OpenBinder>;

enum class UnifyResult { Match, Fail, NeedEnum };

bool expr_evaluable(const Expr& e, const OpenMap& open) {
  if (e.kind == Expr::Kind::Var) {
    auto it = open.find(e.name);
    return it == open.end() || it->second.solved.has_value();
  }
  for (const auto& k : e.kids)
    if (!expr_evaluable(k, open)) return false;
  return true;
}

Bindings solved_bindings(const OpenMap& open) {
  Bindings b;
  for (const auto& [name, ob] : open)
    if (ob.solved) b.emplace(name, *ob.solved);
  return b;
}

Value normalize_for_sort(const Value& v, const std::string& sort, const Environment& env) {
  if (sort == "Rank") return Value::rank(v.num());
  (void)env;
  return Value::integer(v.num());
}

UnifyResult unify_arg(const Expr& e, const Value& ground, ArgKind kind, OpenMap& open,
                      const Environment& env) {
  if (e.kind == Expr::Kind::Var) {
    auto it = open.find(e.name);
    if (it != open.end() && !it->second.solved) {
      if (!ground.is_numeric()) return UnifyResult::Fail;  // numeric sorts only
      if (!env.sort_contains(it->second.sort, ground)) return UnifyResult::Fail;
      it->second.solved = normalize_for_sort(ground, it->second.sort, env);
      return UnifyResult::Match;
    }
  }
  if (e.kind == Expr::Kind::MsgLit && ground.is_msg()) {
    if (e.name != ground.tag() || e.kids.size() != ground.payload().size())
      return UnifyResult::Fail;
    auto it = env.tags.find(e.name);
    if (it == env.tags.end()) fail(Errc::SortError, "unknown message tag '" + e.name + "'");
    for (std::size_t i = 0; i < e.kids.size(); ++i) {
      UnifyResult r = unify_arg(e.kids[i], ground.payload()[i], it->second.payload[i], open, env);
      if (r != UnifyResult::Match) return r;
    }
    return UnifyResult::Match;
  }
  if (!expr_evaluable(e, open)) return UnifyResult::NeedEnum;
  Value v = coerce_value(eval_expr(e, solved_bindings(open), env), kind, env, "matching");
  return v == ground ? UnifyResult::Match : UnifyResult::Fail;
}

struct MatchOut {
  TermPtr next;     // may still contain free open binders
  OpenMap solved;   // open-map snapshot after unification
};

struct MatchCtx {
  const Action& ground;
  const Environment& env;
  int depth = 0;
};

UnifyResult match_rec(const TermPtr& t, MatchCtx& ctx, OpenMap open, std::vector<MatchOut>& out);

// Enumerate one binder eagerly and re-match each instantiation.
UnifyResult enumerate_sum(const TermPtr& t, MatchCtx& ctx, const OpenMap& open,
                          std::vector<MatchOut>& out) {
  for (const Value& v : ctx.env.domain(t->sort)) {
    std::vector<MatchOut> sub;
    UnifyResult r = match_rec(substitute_partial(t->body, {{t->binder, v}}), ctx, open, sub);
    if (r == UnifyResult::NeedEnum) return UnifyResult::NeedEnum;  // other binder; outer frame
    for (auto& m : sub) out.push_back(std::move(m));
  }
  return UnifyResult::Match;
}

UnifyResult match_rec(const TermPtr& t, MatchCtx& ctx, OpenMap open, std::vector<MatchOut>& out) {
  switch (t->kind) {
    case Term::Kind::Epsilon:
    case Term::Kind::Tau:
      return UnifyResult::Match;  // no occurrence of a visible action
    case Term::Kind::Act: {
      if (t->act.name != ctx.ground.name) return UnifyResult::Match;
      const ActionDecl& decl = ctx.env.action_decl(t->act.name);
      if (t->act.args.size() != ctx.ground.args.size() ||
          decl.sig.size() != ctx.ground.args.size())
        return UnifyResult::Match;
      OpenMap local = open;
      for (std::size_t i = 0; i < t->act.args.size(); ++i) {
        UnifyResult r = unify_arg(t->act.args[i], ctx.ground.args[i], decl.sig[i], local, ctx.env);
        if (r == UnifyResult::Fail) return UnifyResult::Match;  // this occurrence: no match
        if (r == UnifyResult::NeedEnum) return UnifyResult::NeedEnum;
      }
      out.push_back({mk_epsilon(), std::move(local)});
      return UnifyResult::Match;
    }
    case Term::Kind::Seq: {
      std::vector<MatchOut> head;
      UnifyResult r = match_rec(t->left, ctx, open, head);
      if (r == UnifyResult::NeedEnum) return r;
      for (auto& m : head) out.push_back({mk_seq(m.next, t->right), std::move(m.solved)});
      // Stepping in the tail requires the head to have terminated; when the
      // head still depends on an unsolved binder, fall back to enumeration.
      for (const auto& v : free_vars(t->left)) {
        auto it = open.find(v);
        if (it != open.end() && !it->second.solved) return UnifyResult::NeedEnum;
      }
      if (terminated(substitute_partial(t->left, solved_bindings(open)), ctx.env))
        return match_rec(t->right, ctx, open, out);
      return UnifyResult::Match;
    }
    case Term::Kind::Choice: {
      UnifyResult r = match_rec(t->left, ctx, open, out);
      if (r == UnifyResult::NeedEnum) return r;
      return match_rec(t->right, ctx, open, out);
    }
    case Term::Kind::Par: {
      std::vector<MatchOut> l, r;
      UnifyResult rl = match_rec(t->left, ctx, open, l);
      if (rl == UnifyResult::NeedEnum) return rl;
      UnifyResult rr = match_rec(t->right, ctx, open, r);
      if (rr == UnifyResult::NeedEnum) return rr;
      for (auto& m : l) out.push_back({mk_par(m.next, t->right), std::move(m.solved)});
      for (auto& m : r) out.push_back({mk_par(t->left, m.next), std::move(m.solved)});
      return UnifyResult::Match;
    }
    case Term::Kind::Cond: {
      if (!expr_evaluable(t->guard, open)) return UnifyResult::NeedEnum;
      Value g = eval_expr(t->guard, solved_bindings(open), ctx.env);
      if (!g.is_bool()) fail(Errc::SortError, "guard is not boolean: " + t->guard.str());
      if (g.truth()) return match_rec(t->left, ctx, open, out);
      if (t->right) return match_rec(t->right, ctx, open, out);
      return UnifyResult::Match;
    }
    case Term::Kind::Sum: {
      OpenMap inner = open;
      inner[t->binder] = OpenBinder{t->sort, std::nullopt};
      std::vector<MatchOut> sub;
      UnifyResult r = match_rec(t->body, ctx, inner, sub);
      if (r == UnifyResult::NeedEnum) {
        // Some expression needed a binder's value up front. If it was ours,
        // enumerating here resolves it; if an outer one, keep propagating.
        std::vector<MatchOut> ours;
        UnifyResult e = enumerate_sum(t, ctx, open, ours);
        if (e == UnifyResult::NeedEnum) return UnifyResult::NeedEnum;
        for (auto& m : ours) out.push_back(std::move(m));
        return UnifyResult::Match;
      }
      for (auto& m : sub) {
        auto it = m.solved.find(t->binder);
        if (it != m.solved.end() && it->second.solved) {
          Value v = *it->second.solved;
          OpenMap rest = std::move(m.solved);
          rest.erase(t->binder);
          out.push_back({substitute_partial(m.next, {{t->binder, v}}), std::move(rest)});
        } else {
          // The matched action did not mention the binder: the eager
          // semantics commits to a value anyway, so enumerate it.
          for (const Value& v : ctx.env.domain(t->sort)) {
            OpenMap rest = m.solved;
            rest.erase(t->binder);
            out.push_back({substitute_partial(m.next, {{t->binder, v}}), std::move(rest)});
          }
        }
      }
      return UnifyResult::Match;
    }
    case Term::Kind::Call: {
      for (const auto& e : t->args)
        if (!expr_evaluable(e, open)) return UnifyResult::NeedEnum;
      bump(ctx.depth, t->callee);
      const ProcessDef& def = ctx.env.def(t->callee);
      Bindings params = call_bindings(def, t->args, ctx.env, solved_bindings(open));
      return match_rec(substitute(def.body, params), ctx, open, out);
    }
  }
  return UnifyResult::Match;
}

}  // namespace

std::vector<TermPtr> match_steps(const TermPtr& t, const Action& ground, const Environment& env) {
  MatchCtx ctx{ground, env, 0};
  std::vector<MatchOut> raw;
  UnifyResult r = match_rec(t, ctx, {}, raw);
  if (r == UnifyResult::NeedEnum)
    fail(Errc::SortError, "internal: unresolved binder while matching " + ground.str());
  std::vector<TermPtr> out;
  out.reserve(raw.size());
  for (auto& m : raw) out.push_back(reduce(m.next, env));
  std::sort(out.begin(), out.end(),
            [](const TermPtr& a, const TermPtr& b) { return term_compare(a, b) < 0; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const TermPtr& a, const TermPtr& b) { return term_equal(a, b); }),
            out.end());
  return out;
}

std::vector<TermPtr> tau_closure(const TermPtr& t, const Environment& env) {
  std::vector<TermPtr> order;
  auto visit = [&](const TermPtr& x, auto&& self) -> void {
    TermPtr r = reduce(x, env);
    for (const auto& s : order)
      if (term_equal(s, r)) return;
    order.push_back(r);
    for (const auto& st : local_steps(r, env))
      if (st.action.is_tau()) self(st.next, self);
  };
  visit(t, visit);
  return order;
}

bool can_reach_epsilon(const TermPtr& t, const Environment& env) {
  for (const auto& r : tau_closure(t, env))
    if (terminated(r, env)) return true;
  return false;
}

}  // namespace futv
