#include "compadapt/equivalence.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "compadapt/textio.hpp"

namespace compadapt {

const char* verdict_text(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Inert-residue collection.
// ---------------------------------------------------------------------------

namespace {

bool is_gc_location_kind(const Name& n) {
  if (!n.is_reserved()) return false;
  ReservedKind k = n.reserved_kind();
  return k == ReservedKind::Gamma || k == ReservedKind::Z;
}

bool contains_loc_named(const AdaptPtr& p, const Name& n) {
  if (!free_in(n, p)) return false;
  if (p->kind == Adapt::Kind::Loc && p->name == n) return true;
  if (p->a && contains_loc_named(p->a, n)) return true;
  if (p->b && contains_loc_named(p->b, n)) return true;
  return false;
}

bool contains_upd_named(const AdaptPtr& p, const Name& n) {
  if (!free_in(n, p)) return false;
  if (p->kind == Adapt::Kind::Upd && p->name == n) return true;
  if (p->a && contains_upd_named(p->a, n)) return true;
  if (p->b && contains_upd_named(p->b, n)) return true;
  return false;
}

void flatten_par(const AdaptPtr& p, std::vector<AdaptPtr>& out) {
  if (p->kind == Adapt::Kind::Par) {
    flatten_par(p->a, out);
    flatten_par(p->b, out);
  } else {
    out.push_back(p);
  }
}

}  // namespace

AdaptPtr gc_inert(const AdaptPtr& p) {
  AdaptPtr cur = normalize(p);
  std::vector<Name> binders;
  AdaptPtr body = cur;
  while (body->kind == Adapt::Kind::Restrict) {
    binders.push_back(body->name);
    body = body->a;
  }
  std::vector<AdaptPtr> comps;
  flatten_par(body, comps);

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const AdaptPtr& c = comps[i];
      bool erase = false;
      if (c->kind == Adapt::Kind::Upd && is_gc_location_kind(c->name)) {
        // A re-arm or cleanup chain whose target location does not exist
        // anywhere else can never fire.
        bool target_exists = false;
        for (std::size_t j = 0; j < comps.size(); ++j)
          if (j != i && contains_loc_named(comps[j], c->name)) target_exists = true;
        erase = !target_exists;
      } else if (c->kind == Adapt::Kind::Loc && is_gc_location_kind(c->name) &&
                 c->a->kind == Adapt::Kind::Nil) {
        bool updater_exists = false;
        for (std::size_t j = 0; j < comps.size(); ++j)
          if (j != i && contains_upd_named(comps[j], c->name)) updater_exists = true;
        erase = !updater_exists;
      }
      if (erase) {
        comps.erase(comps.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
    }
  }

  AdaptPtr rebuilt = adapt_nil();
  if (!comps.empty()) {
    rebuilt = comps.back();
    for (std::size_t i = comps.size(); i-- > 1;) rebuilt = adapt_par(comps[i - 1], rebuilt);
  }
  for (std::size_t i = binders.size(); i-- > 0;) rebuilt = adapt_restrict(binders[i], rebuilt);
  return normalize(rebuilt);
}

// ---------------------------------------------------------------------------
// Weak barbed bisimilarity.
// ---------------------------------------------------------------------------

namespace {

struct UnionGraph {
  std::vector<const AdaptPtr*> states;
  std::vector<std::vector<int>> succ;
  int root1 = 0;
  int root2 = 0;
};

UnionGraph make_union(const ReductionGraph& g1, const ReductionGraph& g2) {
  UnionGraph u;
  u.root1 = 0;
  int off = static_cast<int>(g1.states.size());
  u.root2 = off;
  u.states.reserve(g1.states.size() + g2.states.size());
  u.succ.reserve(g1.states.size() + g2.states.size());
  for (std::size_t i = 0; i < g1.states.size(); ++i) {
    u.states.push_back(&g1.states[i]);
    u.succ.push_back(g1.edges[i]);
  }
  for (std::size_t i = 0; i < g2.states.size(); ++i) {
    u.states.push_back(&g2.states[i]);
    std::vector<int> shifted = g2.edges[i];
    for (int& x : shifted) x += off;
    u.succ.push_back(std::move(shifted));
  }
  return u;
}

struct Bitset {
  std::vector<std::uint64_t> w;
  explicit Bitset(std::size_t n = 0) : w((n + 63) / 64, 0) {}
  void set(std::size_t i) { w[i >> 6] |= 1ull << (i & 63); }
  bool get(std::size_t i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  void or_with(const Bitset& o) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] |= o.w[i];
  }
};

// Strongly connected components (iterative Tarjan), then reflexive-
// transitive reachability per component.
std::vector<Bitset> closure(const std::vector<std::vector<int>>& succ) {
  const int n = static_cast<int>(succ.size());
  std::vector<int> comp(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n)),
      num(static_cast<std::size_t>(n), -1);
  std::vector<int> stack_;
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  int idx = 0, ncomp = 0;

  struct Frame {
    int v;
    std::size_t ei;
  };
  for (int start = 0; start < n; ++start) {
    if (num[static_cast<std::size_t>(start)] >= 0) continue;
    std::vector<Frame> frames{{start, 0}};
    num[static_cast<std::size_t>(start)] = low[static_cast<std::size_t>(start)] = idx++;
    stack_.push_back(start);
    on_stack[static_cast<std::size_t>(start)] = true;
    while (!frames.empty()) {
      Frame& f = frames.back();
      std::size_t v = static_cast<std::size_t>(f.v);
      if (f.ei < succ[v].size()) {
        int wgt = succ[v][f.ei++];
        std::size_t w = static_cast<std::size_t>(wgt);
        if (num[w] < 0) {
          num[w] = low[w] = idx++;
          stack_.push_back(wgt);
          on_stack[w] = true;
          frames.push_back({wgt, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], num[w]);
        }
      } else {
        if (low[v] == num[v]) {
          while (true) {
            int x = stack_.back();
            stack_.pop_back();
            on_stack[static_cast<std::size_t>(x)] = false;
            comp[static_cast<std::size_t>(x)] = ncomp;
            if (x == f.v) break;
          }
          ++ncomp;
        }
        int self = f.v;
        frames.pop_back();
        if (!frames.empty()) {
          std::size_t parent = static_cast<std::size_t>(frames.back().v);
          low[parent] = std::min(low[parent], low[static_cast<std::size_t>(self)]);
        }
      }
    }
  }

  // Tarjan numbers components in reverse topological order: successors of a
  // component always have smaller component ids.
  std::vector<Bitset> creach(static_cast<std::size_t>(ncomp), Bitset(static_cast<std::size_t>(n)));
  std::vector<std::vector<int>> members(static_cast<std::size_t>(ncomp));
  for (int v = 0; v < n; ++v)
    members[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])].push_back(v);
  for (int c = 0; c < ncomp; ++c) {
    Bitset& r = creach[static_cast<std::size_t>(c)];
    for (int v : members[static_cast<std::size_t>(c)]) {
      r.set(static_cast<std::size_t>(v));
      for (int w : succ[static_cast<std::size_t>(v)]) {
        int cw = comp[static_cast<std::size_t>(w)];
        if (cw != c) r.or_with(creach[static_cast<std::size_t>(cw)]);
      }
    }
  }
  std::vector<Bitset> reach;
  reach.reserve(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    reach.push_back(creach[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])]);
  return reach;
}

// Weak barbed bisimilarity classes: initial partition by weak barb sets,
// then coarsest partition refinement over the saturated transition
// relation.
std::vector<int> bisim_classes(const UnionGraph& u) {
  const std::size_t n = u.states.size();
  std::vector<Bitset> reach = closure(u.succ);

  // Intern barbs.
  std::map<Barb, int> barb_ids;
  std::vector<std::vector<int>> state_barbs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Barb& b : barbs(*u.states[i])) {
      auto it = barb_ids.emplace(b, static_cast<int>(barb_ids.size())).first;
      state_barbs[i].push_back(it->second);
    }
  }
  // Weak barbs: union over reachable states.
  std::vector<std::vector<int>> weak_barbs(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<bool> seen(barb_ids.size(), false);
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i].get(j))
        for (int b : state_barbs[j]) seen[static_cast<std::size_t>(b)] = true;
    for (std::size_t b = 0; b < seen.size(); ++b)
      if (seen[b]) weak_barbs[i].push_back(static_cast<int>(b));
  }

  std::vector<int> cls(n);
  {
    std::map<std::vector<int>, int> ids;
    for (std::size_t i = 0; i < n; ++i)
      cls[i] = ids.emplace(weak_barbs[i], static_cast<int>(ids.size())).first->second;
  }

  while (true) {
    std::map<std::vector<int>, int> ids;
    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> sig;
      sig.push_back(cls[i]);
      std::vector<bool> seen;
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i].get(j)) {
          std::size_t c = static_cast<std::size_t>(cls[j]);
          if (seen.size() <= c) seen.resize(c + 1, false);
          seen[c] = true;
        }
      for (std::size_t c = 0; c < seen.size(); ++c)
        if (seen[c]) sig.push_back(static_cast<int>(c) + 1000000);
      next[i] = ids.emplace(std::move(sig), static_cast<int>(ids.size())).first->second;
    }
    bool stable = true;
    for (std::size_t i = 0; i < n; ++i)
      if (next[i] != cls[i]) stable = false;
    cls = std::move(next);
    if (stable) break;
  }
  return cls;
}

}  // namespace

WeakResult weak_equiv(const AdaptPtr& p, const AdaptPtr& q, int depth_bound, int repl_bound,
                      std::size_t max_states) {
  AdaptPtr gp = gc_inert(p);
  AdaptPtr gq = gc_inert(q);
  if (adapt_equal(gp, gq)) return WeakResult::Equivalent;
  ReductionGraph g1 = reachable(gp, depth_bound, repl_bound, max_states);
  ReductionGraph g2 = reachable(gq, depth_bound, repl_bound, max_states);
  if (g1.truncated || g2.truncated) return WeakResult::Inconclusive;
  if (g1.states.size() + g2.states.size() > 9000) return WeakResult::Inconclusive;
  UnionGraph u = make_union(g1, g2);
  std::vector<int> cls = bisim_classes(u);
  return cls[static_cast<std::size_t>(u.root1)] == cls[static_cast<std::size_t>(u.root2)]
             ? WeakResult::Equivalent
             : WeakResult::Inequivalent;
}

// ---------------------------------------------------------------------------
// Operational-correspondence checks.
// ---------------------------------------------------------------------------

int CorrespondenceReport::passed() const {
  int n = 0;
  for (auto& s : steps)
    if (s.verdict == Verdict::Pass) ++n;
  return n;
}
int CorrespondenceReport::failed() const {
  int n = 0;
  for (auto& s : steps)
    if (s.verdict == Verdict::Fail) ++n;
  return n;
}
int CorrespondenceReport::inconclusive() const {
  int n = 0;
  for (auto& s : steps)
    if (s.verdict == Verdict::Inconclusive) ++n;
  return n;
}

int default_depth(const CompPtr& p) { return 8 + 5 * static_cast<int>(p->size); }

namespace {

// Parent pointers of a breadth-first walk over the graph's edges from
// `from`; -2 marks unreachable, -1 the start.
std::vector<int> bfs_parents(const ReductionGraph& g, int from) {
  std::vector<int> parent(g.states.size(), -2);
  parent[static_cast<std::size_t>(from)] = -1;
  std::vector<int> queue{from};
  for (std::size_t h = 0; h < queue.size(); ++h) {
    int v = queue[h];
    for (int w : g.edges[static_cast<std::size_t>(v)]) {
      if (parent[static_cast<std::size_t>(w)] == -2) {
        parent[static_cast<std::size_t>(w)] = v;
        queue.push_back(w);
      }
    }
  }
  return parent;
}

std::vector<AdaptPtr> trace_to(const ReductionGraph& g, const std::vector<int>& parent, int id) {
  std::vector<AdaptPtr> rev;
  for (int v = id; v != -1; v = parent[static_cast<std::size_t>(v)])
    rev.push_back(g.states[static_cast<std::size_t>(v)]);
  std::reverse(rev.begin(), rev.end());
  return rev;
}

bool uses_congruence_match(const EncodingConfig& cfg) {
  return !cfg.dynamic && cfg.semantics != Semantics::Aborting;
}

// Beyond this many union states the bisimulation is not attempted and the
// answer is inconclusive.
constexpr std::size_t kBisimStateCap = 9000;

struct GoalMatcher {
  const EncodingConfig* cfg;
  int depth;
  std::size_t max_states;
  const ReductionGraph* g1;
  std::vector<AdaptPtr> gc_states;  // gc_inert per g1 state, filled lazily

  const AdaptPtr& gc_state(std::size_t i) {
    if (gc_states.size() != g1->states.size()) gc_states.resize(g1->states.size());
    if (!gc_states[i]) gc_states[i] = gc_inert(g1->states[i]);
    return gc_states[i];
  }

  // Cached per-goal bisimulation classes over g1 + goal graph.
  struct GoalData {
    AdaptPtr goal_norm;
    AdaptPtr goal_gc;
    bool have_classes = false;
    bool truncated = false;
    std::vector<int> cls;  // classes for g1 states then goal-graph states
    int root2_class = -1;
  };
  std::vector<GoalData> goals;

  int add_goal(const AdaptPtr& goal_norm) {
    GoalData d;
    d.goal_norm = goal_norm;
    d.goal_gc = gc_inert(goal_norm);
    goals.push_back(std::move(d));
    return static_cast<int>(goals.size()) - 1;
  }

  // Finds a state of g1 (restricted to `allowed`, or all states when
  // empty) matching the goal. Returns the state id or -1; sets
  // `inconclusive` when bounded search prevented an answer.
  int match(int goal_id, const std::vector<char>* allowed, bool& inconclusive) {
    GoalData& d = goals[static_cast<std::size_t>(goal_id)];
    inconclusive = false;
    if (uses_congruence_match(*cfg)) {
      int id = g1->find(d.goal_norm);
      if (id >= 0 && (!allowed || (*allowed)[static_cast<std::size_t>(id)])) return id;
      inconclusive = g1->truncated;
      return -1;
    }
    // Weak matching: congruence after residue collection first.
    for (std::size_t i = 0; i < g1->states.size(); ++i) {
      if (allowed && !(*allowed)[i]) continue;
      if (adapt_equal(gc_state(i), d.goal_gc)) return static_cast<int>(i);
    }
    if (!d.have_classes) {
      d.have_classes = true;
      ReductionGraph g2 = reachable(d.goal_gc, depth, 1, max_states);
      d.truncated = g2.truncated ||
                    g1->states.size() + g2.states.size() > kBisimStateCap;
      if (!d.truncated && !g1->truncated) {
        UnionGraph u = make_union(*g1, g2);
        d.cls = bisim_classes(u);
        d.root2_class = d.cls[static_cast<std::size_t>(u.root2)];
      }
    }
    if (d.truncated || g1->truncated) {
      inconclusive = true;
      return -1;
    }
    for (std::size_t i = 0; i < g1->states.size(); ++i) {
      if (allowed && !(*allowed)[i]) continue;
      if (d.cls[i] == d.root2_class) return static_cast<int>(i);
    }
    inconclusive = false;
    return -1;
  }
};

Verdict aggregate(const CorrespondenceReport& r) {
  bool any_fail = false, any_inc = false;
  for (auto& s : r.steps) {
    if (s.verdict == Verdict::Fail) any_fail = true;
    if (s.verdict == Verdict::Inconclusive) any_inc = true;
  }
  if (any_fail) return Verdict::Fail;
  if (any_inc) return Verdict::Inconclusive;
  return Verdict::Pass;
}

}  // namespace

CorrespondenceReport check_forward(const CompPtr& p, const EncodingConfig& cfg, int depth) {
  CorrespondenceReport report;
  report.forward = true;
  report.depth = depth;

  std::vector<CompStep> steps = transitions(p, cfg.semantics);
  AdaptPtr e = encode(p, cfg);
  ReductionGraph g1 = reachable(e, depth, 1, 100000);
  report.truncated = g1.truncated;
  std::vector<int> parents = bfs_parents(g1, 0);

  GoalMatcher matcher{&cfg, depth, 20000, &g1, {}, {}};

  for (const CompStep& s : steps) {
    if (s.label.kind != CompLabel::Kind::Tau) continue;
    StepReport sr;
    sr.shape = classify_tau(p, cfg.semantics, s);
    sr.description = "tau [" + std::string(tau_shape_text(sr.shape)) + "] -> " +
                     print_comp(s.target);
    AdaptPtr goal = normalize(encode(s.target, cfg));
    sr.goal = goal;
    int gid = matcher.add_goal(goal);
    bool inconclusive = false;
    int id = matcher.match(gid, nullptr, inconclusive);
    if (id >= 0) {
      sr.verdict = Verdict::Pass;
      sr.matched = g1.states[static_cast<std::size_t>(id)];
      sr.witness = trace_to(g1, parents, id);
    } else {
      sr.verdict = inconclusive ? Verdict::Inconclusive : Verdict::Fail;
      if (inconclusive) sr.note = "search truncated at depth/state bound";
    }
    report.steps.push_back(std::move(sr));
  }
  report.overall = aggregate(report);
  return report;
}

CorrespondenceReport check_backward(const CompPtr& p, const EncodingConfig& cfg, int depth) {
  CorrespondenceReport report;
  report.forward = false;
  report.depth = depth;

  std::vector<CompStep> steps = transitions(p, cfg.semantics);
  AdaptPtr e = encode(p, cfg);
  ReductionGraph g1 = reachable(e, depth, 1, 100000);
  report.truncated = g1.truncated;

  GoalMatcher matcher{&cfg, depth, 20000, &g1, {}, {}};
  std::vector<int> goal_ids;
  for (const CompStep& s : steps) {
    if (s.label.kind != CompLabel::Kind::Tau) continue;
    goal_ids.push_back(matcher.add_goal(normalize(encode(s.target, cfg))));
  }

  std::vector<AdaptPtr> reducts = reductions(normalize(e));
  for (const AdaptPtr& q : reducts) {
    StepReport sr;
    sr.description = "reduct " + print_adapt(q);
    int qid = g1.find(q);
    if (qid < 0) {
      sr.verdict = Verdict::Inconclusive;
      sr.note = "reduct outside the bounded graph";
      report.steps.push_back(std::move(sr));
      continue;
    }
    // States reachable from this reduct.
    std::vector<int> parents = bfs_parents(g1, qid);
    std::vector<char> allowed(g1.states.size(), 0);
    for (std::size_t i = 0; i < g1.states.size(); ++i)
      if (parents[i] != -2) allowed[i] = 1;

    bool any_inconclusive = false;
    bool matched = false;
    for (int gid : goal_ids) {
      bool inconclusive = false;
      int id = matcher.match(gid, &allowed, inconclusive);
      if (id >= 0) {
        sr.verdict = Verdict::Pass;
        sr.matched = g1.states[static_cast<std::size_t>(id)];
        sr.goal = matcher.goals[static_cast<std::size_t>(gid)].goal_norm;
        sr.witness = trace_to(g1, parents, id);
        matched = true;
        break;
      }
      if (inconclusive) any_inconclusive = true;
    }
    if (!matched) {
      sr.verdict = any_inconclusive || g1.truncated ? Verdict::Inconclusive : Verdict::Fail;
      if (sr.verdict == Verdict::Inconclusive) sr.note = "search truncated at depth/state bound";
    }
    report.steps.push_back(std::move(sr));
  }
  report.overall = aggregate(report);
  return report;
}

}  // namespace compadapt
