#ifndef FUTV_STEPS_HPP
#define FUTV_STEPS_HPP

#include <vector>

#include "futv/algebra.hpp"

namespace futv {

struct LocalStep {
  Action action;  // tau for silent steps
  TermPtr next;
};

// Resolves closed guards and unfolds top-level process calls; neither is a
// transition. The result is what gets stored in explored states.
TermPtr reduce(const TermPtr& t, const Environment& env);

// Successful-termination predicate: eps terminates; P.Q and P||Q need both,
// P+Q either; a guard terminates when it evaluates true and its branch does.
bool terminated(const TermPtr& t, const Environment& env);

// All single-component transitions, with sums expanded eagerly over their
// (finite) domains. Successor terms are reduced.
std::vector<LocalStep> local_steps(const TermPtr& t, const Environment& env);

// Successor terms after performing exactly `ground`. Sum binders are bound
// lazily by pattern-matching against the ground data; a binder the data does
// not determine falls back to domain enumeration, so the result set always
// equals the eager expansion's.
std::vector<TermPtr> match_steps(const TermPtr& t, const Action& ground, const Environment& env);

// Terms reachable through tau-labeled steps only (reflexive).
std::vector<TermPtr> tau_closure(const TermPtr& t, const Environment& env);

// True when some tau-reachable residual has terminated.
bool can_reach_epsilon(const TermPtr& t, const Environment& env);

}  // namespace futv

#endif
