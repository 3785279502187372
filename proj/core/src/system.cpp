#include "futv/system.hpp"

#include <algorithm>
#include <sstream>

namespace futv {

bool Configuration::is_held(int r) const {
  return std::binary_search(held.begin(), held.end(), r);
}

Configuration Configuration::with_local(int r, TermPtr t) const {
  Configuration out = *this;
  out.locals[static_cast<std::size_t>(r)] = std::move(t);
  return out;
}

int Configuration::compare(const Configuration& o) const {
  if (locals.size() != o.locals.size()) return locals.size() < o.locals.size() ? -1 : 1;
  for (std::size_t i = 0; i < locals.size(); ++i) {
    int c = term_compare(locals[i], o.locals[i]);
    if (c != 0) return c;
  }
  if (int c = channels.compare(o.channels); c != 0) return c;
  if (int c = bcast.compare(o.bcast); c != 0) return c;
  if (int c = barrier.compare(o.barrier); c != 0) return c;
  if (held != o.held) return held < o.held ? -1 : 1;
  return 0;
}

std::size_t Configuration::hash() const {
  std::size_t h = locals.size();
  for (const auto& t : locals) h = hash_combine(h, t ? t->hash() : 0);
  h = hash_combine(h, channels.hash());
  h = hash_combine(h, bcast.hash());
  h = hash_combine(h, barrier.hash());
  for (int r : held) h = hash_combine(h, static_cast<std::size_t>(r) + 131);
  return h;
}

std::string Configuration::str() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < locals.size(); ++i)
    os << "p" << i << ": " << term_str(locals[i]) << "\n";
  os << "T: " << channels.str() << "  " << bcast.str() << "  " << barrier.str();
  if (!held.empty()) {
    os << "  held={";
    for (std::size_t i = 0; i < held.size(); ++i) {
      if (i) os << ",";
      os << held[i];
    }
    os << "}";
  }
  return os.str();
}

const std::vector<LocalStep>& StepsCache::get(const TermPtr& t, const Environment& env) {
  auto it = map_.find(t);
  if (it != map_.end()) return *it->second;
  auto steps = std::make_unique<std::vector<LocalStep>>(local_steps(t, env));
  return *map_.emplace(t, std::move(steps)).first->second;
}

namespace {

int rank_of(const Value& v) { return static_cast<int>(v.num()); }

MultiActionLabel make_pair_label(const CommPair& pair, bool driver_is_a, const Action& driver,
                                 const Action& partner) {
  if (driver_is_a) return MultiActionLabel::pair(pair.display, driver, partner);
  return MultiActionLabel::pair(pair.display, partner, driver);
}

struct Emitter {
  std::vector<ComposedStep> steps;

  void add(MultiActionLabel label, Configuration next) {
    steps.push_back({std::move(label), std::move(next)});
  }
};

}  // namespace

ComposedResult composed_steps(const Configuration& cfg, const Environment& env,
                              const ComposedOptions& opts, StepsCache* cache) {
  const int n = cfg.size_n();
  Emitter em;
  bool capped = false;

  StepsCache local_cache;
  StepsCache& sc = cache ? *cache : local_cache;

  // Delivery of a concrete nsend offer against rank j's pending recv.
  auto deliver = [&](const Action& nsend_action, const auto& apply_builtin) {
    const CommPair* pair = nullptr;
    for (const auto* p : env.pairs_with("nsend"))
      if (p->a == "recv") pair = p;
    if (pair == nullptr) return;
    int receiver = rank_of(nsend_action.args[0]);
    if (receiver < 0 || receiver >= n || cfg.is_held(receiver)) return;
    Action want = partner_action(*pair, /*from_a=*/false, nsend_action);
    for (const auto& succ_term :
         match_steps(cfg.locals[static_cast<std::size_t>(receiver)], want, env)) {
      Configuration next = cfg.with_local(receiver, succ_term);
      apply_builtin(next);
      em.add(make_pair_label(*pair, /*driver_is_a=*/false, nsend_action, want), std::move(next));
    }
  };

  // Rank-side drivers.
  for (int r = 0; r < n; ++r) {
    if (cfg.is_held(r)) continue;
    const auto& steps = sc.get(cfg.locals[static_cast<std::size_t>(r)], env);
    for (const auto& st : steps) {
      const Action& a = st.action;
      if (a.is_tau()) {
        em.add(MultiActionLabel::lone(a), cfg.with_local(r, st.next));
        continue;
      }
      if (env.allowed_alone(a.name))
        em.add(MultiActionLabel::lone(a), cfg.with_local(r, st.next));

      for (const auto* pair : env.pairs_with(a.name)) {
        bool from_a = pair->a == a.name;
        if (from_a && !pair->a_drives) continue;
        if (!from_a && !pair->b_drives) continue;
        Action partner = partner_action(*pair, from_a, a);

        if (partner.name == "nrecv") {
          int src = rank_of(partner.args[0]);
          int dst = rank_of(partner.args[1]);
          if (opts.queue_cap > 0 &&
              cfg.channels.depth(src, dst) >= static_cast<std::size_t>(opts.queue_cap)) {
            capped = true;
            continue;
          }
          Configuration next = cfg.with_local(r, st.next);
          next.channels = cfg.channels.with_enqueued(src, dst, partner.args[2]);
          em.add(make_pair_label(*pair, from_a, a, partner), std::move(next));
        } else if (partner.name == "breq") {
          if (!cfg.bcast.idle_state()) continue;
          Configuration next = cfg.with_local(r, st.next);
          next.bcast = BcastState::start(n, rank_of(partner.args[0]), partner.args[1]);
          em.add(make_pair_label(*pair, from_a, a, partner), std::move(next));
        } else if (partner.name == kBarrierAck) {
          int i = rank_of(partner.args[0]);
          if (cfg.barrier.has(i)) continue;
          Configuration next = cfg.with_local(r, st.next);
          next.barrier = cfg.barrier.with_arrived(i);
          next.held.insert(std::lower_bound(next.held.begin(), next.held.end(), i), i);
          em.add(make_pair_label(*pair, from_a, a, partner), std::move(next));
        } else if (partner.name == "nsend") {
          // recv side never drives; deliveries come from the network/bcast.
          continue;
        } else {
          // Term-to-term synchronization (send|recv and user pairs).
          for (int q = 0; q < n; ++q) {
            if (q == r || cfg.is_held(q)) continue;
            for (const auto& succ_q :
                 match_steps(cfg.locals[static_cast<std::size_t>(q)], partner, env)) {
              Configuration next = cfg.with_local(r, st.next);
              next.locals[static_cast<std::size_t>(q)] = succ_q;
              em.add(make_pair_label(*pair, from_a, a, partner), std::move(next));
            }
          }
        }
      }
    }
  }

  // Network deliveries.
  for (const auto& offer : network_steps(cfg.channels))
    deliver(offer.action, [&](Configuration& next) { next.channels = offer.next; });

  // Bcast deliveries (bypass the channel table, as Handle does).
  for (const auto& offer : bcast_steps(cfg.bcast))
    deliver(offer.action, [&](Configuration& next) { next.bcast = offer.next; });

  // Barrier release: once everyone arrived, one tau frees all held ranks.
  if (n > 0 && cfg.barrier.full(n)) {
    Configuration next = cfg;
    next.barrier = BarrierState::reset();
    next.held.clear();
    em.add(MultiActionLabel::lone(Action::tau()), std::move(next));
  }

  std::sort(em.steps.begin(), em.steps.end(), [](const ComposedStep& x, const ComposedStep& y) {
    int c = x.label.compare(y.label);
    if (c != 0) return c < 0;
    return x.next.compare(y.next) < 0;
  });
  em.steps.erase(std::unique(em.steps.begin(), em.steps.end(),
                             [](const ComposedStep& x, const ComposedStep& y) {
                               return x.label == y.label && x.next == y.next;
                             }),
                 em.steps.end());
  return {std::move(em.steps), capped};
}

bool is_terminal(const Configuration& cfg, const Environment& env) {
  for (const auto& t : cfg.locals)
    if (!terminated(t, env)) return false;
  return cfg.channels.empty() && cfg.bcast.idle_state() && cfg.barrier.empty() &&
         cfg.held.empty();
}

}  // namespace futv
