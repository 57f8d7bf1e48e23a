#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

using namespace compadapt;

namespace oracles {

namespace {

bool pending_update(const CompPtr& p) {
  switch (p->kind) {
    case Comp::Kind::Inst:
      return true;
    case Comp::Kind::Par:
      return pending_update(p->a) || pending_update(p->b);
    case Comp::Kind::Restrict:
    case Comp::Kind::Protected:
    case Comp::Kind::Repl:
      return pending_update(p->a);
    default:
      return false;
  }
}

struct Occ {
  std::vector<int> path;
  const Comp* node = nullptr;
  std::vector<const Comp*> transes;               // crossed transactions
  std::vector<std::pair<Name, const Comp*>> binders;  // crossed restrictions
};

void collect(const CompPtr& p, Occ cur, std::vector<Occ>& ins, std::vector<Occ>& outs,
             std::vector<Occ>& insts, std::vector<Occ>& transes) {
  cur.node = p.get();
  switch (p->kind) {
    case Comp::Kind::In:
      ins.push_back(cur);
      break;
    case Comp::Kind::Out:
      outs.push_back(cur);
      break;
    case Comp::Kind::Inst:
      insts.push_back(cur);
      break;
    case Comp::Kind::Trans: {
      transes.push_back(cur);
      Occ inner = cur;
      inner.path.push_back(0);
      inner.transes.push_back(p.get());
      collect(p->a, std::move(inner), ins, outs, insts, transes);
      break;
    }
    case Comp::Kind::Par: {
      Occ left = cur;
      left.path.push_back(0);
      collect(p->a, std::move(left), ins, outs, insts, transes);
      Occ right = cur;
      right.path.push_back(1);
      collect(p->b, std::move(right), ins, outs, insts, transes);
      break;
    }
    case Comp::Kind::Restrict: {
      Occ inner = cur;
      inner.path.push_back(0);
      inner.binders.emplace_back(p->name, p.get());
      collect(p->a, std::move(inner), ins, outs, insts, transes);
      break;
    }
    case Comp::Kind::Protected:
    case Comp::Kind::Repl: {
      Occ inner = cur;
      inner.path.push_back(0);
      collect(p->a, std::move(inner), ins, outs, insts, transes);
      break;
    }
    default:
      break;
  }
}

const Comp* resolve(const Name& n, const std::vector<std::pair<Name, const Comp*>>& binders) {
  for (auto it = binders.rbegin(); it != binders.rend(); ++it)
    if (it->first == n) return it->second;
  return nullptr;
}

// All transactions crossed on the way to an occurrence must not have a
// pending compensation update in their default.
bool path_open(const Occ& o) {
  for (const Comp* t : o.transes)
    if (pending_update(t->a)) return false;
  return true;
}

bool path_is_prefix(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() > b.size()) return false;
  return std::equal(a.begin(), a.end(), b.begin());
}

// Rebuild with replacements at the given positions; each replication node
// on the way to a replacement unfolds once (the copy takes the
// replacements, the original stays).
struct Repl {
  const std::vector<int>* path;
  CompPtr term;
};

CompPtr rebuild(const CompPtr& p, const std::vector<Repl>& repls, std::size_t depth) {
  for (const auto& r : repls)
    if (r.path->size() == depth) return r.term;
  if (p->kind == Comp::Kind::Repl)
    return comp_par(rebuild(p->a, repls, depth + 1), p);
  std::vector<Repl> left, right;
  for (const auto& r : repls)
    ((*r.path)[depth] == 0 ? left : right).push_back(r);
  CompPtr a = p->a, b = p->b;
  if (!left.empty()) a = rebuild(p->a, left, depth + 1);
  if (!right.empty()) b = rebuild(p->b, right, depth + 1);
  switch (p->kind) {
    case Comp::Kind::In: return comp_in(p->name, a);
    case Comp::Kind::Out: return comp_out(p->name, a);
    case Comp::Kind::Restrict: return comp_restrict(p->name, a);
    case Comp::Kind::Par: return comp_par(a, b);
    case Comp::Kind::Trans: return comp_trans(p->name, a, b);
    case Comp::Kind::Protected: return comp_protected(a);
    case Comp::Kind::Inst: return comp_inst(p->var, a, b);
    default: return p;
  }
}

std::vector<int> relative_path(const std::vector<int>& inner, const std::vector<int>& outer) {
  // inner = outer ++ [0] ++ rest; returns rest.
  return std::vector<int>(inner.begin() + static_cast<long>(outer.size()) + 1, inner.end());
}

void push_unique(std::vector<CompStep>& out, CompStep s) {
  for (const auto& t : out)
    if (t.label == s.label && t.shape == s.shape && comp_equal(t.target, s.target)) return;
  out.push_back(std::move(s));
}

}  // namespace

std::vector<CompStep> comp_steps(const CompPtr& p, Semantics k) {
  std::vector<Occ> ins, outs, insts, transes;
  collect(p, Occ{}, ins, outs, insts, transes);
  std::vector<CompStep> steps;

  // Visible input/output labels from prefixes.
  for (const Occ& o : ins)
    if (path_open(o) && !resolve(o.node->name, o.binders))
      push_unique(steps, {CompLabel::in(o.node->name),
                          rebuild(p, {{&o.path, o.node->a}}, 0), TauShape::None});
  for (const Occ& o : outs)
    if (path_open(o) && !resolve(o.node->name, o.binders))
      push_unique(steps, {CompLabel::out(o.node->name),
                          rebuild(p, {{&o.path, o.node->a}}, 0), TauShape::None});

  // Visible abort offers of transactions.
  for (const Occ& t : transes) {
    if (!path_open(t) || pending_update(t.node->a)) continue;
    if (resolve(t.node->name, t.binders)) continue;
    CompPtr after = comp_par(extract(t.node->a, k), comp_protected(t.node->b));
    push_unique(steps, {CompLabel::in(t.node->name), rebuild(p, {{&t.path, after}}, 0),
                        TauShape::None});
  }

  // Visible compensation-update labels (blocked by transaction boundaries).
  for (const Occ& o : insts)
    if (o.transes.empty())
      push_unique(steps, {CompLabel::lambda(o.node->var, o.node->a),
                          rebuild(p, {{&o.path, o.node->b}}, 0), TauShape::None});

  // (a) communication.
  for (const Occ& o : outs) {
    if (!path_open(o)) continue;
    for (const Occ& i : ins) {
      if (!path_open(i)) continue;
      if (o.node->name != i.node->name) continue;
      if (resolve(o.node->name, o.binders) != resolve(i.node->name, i.binders)) continue;
      if (path_is_prefix(o.path, i.path) || path_is_prefix(i.path, o.path)) continue;
      push_unique(steps, {CompLabel::tau(),
                          rebuild(p, {{&o.path, o.node->a}, {&i.path, i.node->a}}, 0),
                          TauShape::Comm});
    }
  }

  // (b) external abort: a transaction and a disjoint output on its name.
  for (const Occ& t : transes) {
    if (!path_open(t) || pending_update(t.node->a)) continue;
    const Comp* tbind = resolve(t.node->name, t.binders);
    for (const Occ& o : outs) {
      if (!path_open(o)) continue;
      if (o.node->name != t.node->name) continue;
      if (resolve(o.node->name, o.binders) != tbind) continue;
      if (path_is_prefix(t.path, o.path) || path_is_prefix(o.path, t.path)) continue;
      CompPtr after = comp_par(extract(t.node->a, k), comp_protected(t.node->b));
      push_unique(steps, {CompLabel::tau(),
                          rebuild(p, {{&t.path, after}, {&o.path, o.node->a}}, 0),
                          TauShape::AbortExternal});
    }
  }

  // (c) internal abort: an output on the transaction's name inside its
  // default activity.
  for (const Occ& t : transes) {
    if (!path_open(t) || pending_update(t.node->a)) continue;
    const Comp* tbind = resolve(t.node->name, t.binders);
    for (const Occ& o : outs) {
      if (o.node->name != t.node->name) continue;
      if (!path_is_prefix(t.path, o.path) || o.path.size() <= t.path.size()) continue;
      if (resolve(o.node->name, o.binders) != tbind) continue;
      // Transactions strictly between t and the output must be open too.
      bool open = true;
      for (const Comp* mid : o.transes) {
        if (mid == t.node) continue;
        bool above_t = false;
        for (const Comp* outer : t.transes)
          if (outer == mid) above_t = true;
        if (!above_t && pending_update(mid->a)) open = false;
      }
      if (!open) continue;
      std::vector<int> rel = relative_path(o.path, t.path);
      CompPtr body_after = rebuild(t.node->a, {{&rel, o.node->a}}, 0);
      CompPtr after = comp_par(extract(body_after, k), comp_protected(t.node->b));
      push_unique(steps, {CompLabel::tau(), rebuild(p, {{&t.path, after}}, 0),
                          TauShape::AbortInternal});
    }
  }

  // (d) compensation update: a pending update whose innermost transaction
  // is t fires, replacing t's compensation.
  for (const Occ& t : transes) {
    if (!path_open(t)) continue;
    for (const Occ& o : insts) {
      if (o.transes.empty() || o.transes.back() != t.node) continue;
      std::vector<int> rel = relative_path(o.path, t.path);
      CompPtr body_after = rebuild(t.node->a, {{&rel, o.node->b}}, 0);
      CompPtr comp_after = substitute(o.node->a, o.node->var, t.node->b);
      CompPtr after = comp_trans(t.node->name, body_after, comp_after);
      push_unique(steps, {CompLabel::tau(), rebuild(p, {{&t.path, after}}, 0),
                          TauShape::CompUpdate});
    }
  }

  return steps;
}

// ---------------------------------------------------------------------------
// Adaptable reductions by context enumeration.
// ---------------------------------------------------------------------------

namespace {

AdaptPtr unfold_once(const AdaptPtr& p) {
  switch (p->kind) {
    case Adapt::Kind::Par:
      return adapt_par(unfold_once(p->a), unfold_once(p->b));
    case Adapt::Kind::Loc:
      return adapt_loc(p->name, unfold_once(p->a));
    case Adapt::Kind::Restrict:
      return adapt_restrict(p->name, unfold_once(p->a));
    case Adapt::Kind::Repl:
      return adapt_par(unfold_once(p->a), p);
    default:
      return p;
  }
}

struct AOcc {
  std::vector<int> path;
  const Adapt* node = nullptr;
  std::vector<std::pair<Name, const Adapt*>> binders;
};

void acollect(const AdaptPtr& p, AOcc cur, std::vector<AOcc>& outs, std::vector<AOcc>& ins,
              std::vector<AOcc>& upds, std::vector<AOcc>& locs) {
  cur.node = p.get();
  switch (p->kind) {
    case Adapt::Kind::Out:
      outs.push_back(cur);
      break;
    case Adapt::Kind::In:
      ins.push_back(cur);
      break;
    case Adapt::Kind::Upd:
      upds.push_back(cur);
      break;
    case Adapt::Kind::Loc: {
      locs.push_back(cur);
      AOcc inner = cur;
      inner.path.push_back(0);
      acollect(p->a, std::move(inner), outs, ins, upds, locs);
      break;
    }
    case Adapt::Kind::Par: {
      AOcc left = cur;
      left.path.push_back(0);
      acollect(p->a, std::move(left), outs, ins, upds, locs);
      AOcc right = cur;
      right.path.push_back(1);
      acollect(p->b, std::move(right), outs, ins, upds, locs);
      break;
    }
    case Adapt::Kind::Restrict: {
      AOcc inner = cur;
      inner.path.push_back(0);
      inner.binders.emplace_back(p->name, p.get());
      acollect(p->a, std::move(inner), outs, ins, upds, locs);
      break;
    }
    default:
      break;
  }
}

const Adapt* aresolve(const Name& n, const std::vector<std::pair<Name, const Adapt*>>& bs) {
  for (auto it = bs.rbegin(); it != bs.rend(); ++it)
    if (it->first == n) return it->second;
  return nullptr;
}

AdaptPtr areplace(const AdaptPtr& p, const std::vector<int>& path, std::size_t i,
                  const AdaptPtr& repl, const std::vector<Name>* protect,
                  std::size_t fresh_from) {
  if (i == path.size()) return repl;
  AdaptPtr node = p;
  if (node->kind == Adapt::Kind::Restrict && protect && i >= fresh_from &&
      std::binary_search(protect->begin(), protect->end(), node->name)) {
    std::set<Name> avoid(protect->begin(), protect->end());
    for (const Name& n : node->a->free_names) avoid.insert(n);
    avoid.insert(node->name);
    Name fresh = fresh_name(node->name.key, avoid);
    struct R {
      static AdaptPtr run(const AdaptPtr& q, const Name& from, const Name& to) {
        if (!free_in(from, q)) return q;
        switch (q->kind) {
          case Adapt::Kind::In:
            return adapt_in(q->name == from ? to : q->name, run(q->a, from, to));
          case Adapt::Kind::Out:
            return adapt_out(q->name == from ? to : q->name, run(q->a, from, to));
          case Adapt::Kind::Upd:
            return adapt_upd(q->name == from ? to : q->name, q->var, run(q->a, from, to),
                             run(q->b, from, to));
          case Adapt::Kind::Loc:
            return adapt_loc(q->name == from ? to : q->name, run(q->a, from, to));
          case Adapt::Kind::Repl:
            return adapt_repl(run(q->a, from, to));
          case Adapt::Kind::Restrict:
            return adapt_restrict(q->name, run(q->a, from, to));
          case Adapt::Kind::Par:
            return adapt_par(run(q->a, from, to), run(q->b, from, to));
          default:
            return q;
        }
      }
    };
    node = adapt_restrict(fresh, R::run(node->a, node->name, fresh));
  }
  int c = path[i];
  AdaptPtr a = node->a, b = node->b;
  if (c == 0)
    a = areplace(node->a, path, i + 1, repl, protect, fresh_from);
  else
    b = areplace(node->b, path, i + 1, repl, protect, fresh_from);
  switch (node->kind) {
    case Adapt::Kind::In: return adapt_in(node->name, a);
    case Adapt::Kind::Out: return adapt_out(node->name, a);
    case Adapt::Kind::Upd: return adapt_upd(node->name, node->var, a, b);
    case Adapt::Kind::Loc: return adapt_loc(node->name, a);
    case Adapt::Kind::Repl: return adapt_repl(a);
    case Adapt::Kind::Restrict: return adapt_restrict(node->name, a);
    case Adapt::Kind::Par: return adapt_par(a, b);
    default: return node;
  }
}

}  // namespace

std::vector<AdaptPtr> adapt_reductions(const AdaptPtr& p) {
  AdaptPtr u = unfold_once(normalize(p));
  std::vector<AOcc> outs, ins, upds, locs;
  acollect(u, AOcc{}, outs, ins, upds, locs);

  std::vector<AdaptPtr> results;
  auto add = [&](const AdaptPtr& t) {
    AdaptPtr n = normalize(t);
    for (const auto& r : results)
      if (adapt_equal(r, n)) return;
    results.push_back(n);
  };

  for (const AOcc& o : outs)
    for (const AOcc& i : ins) {
      if (o.node->name != i.node->name) continue;
      if (aresolve(o.node->name, o.binders) != aresolve(i.node->name, i.binders)) continue;
      AdaptPtr r = areplace(u, o.path, 0, o.node->a, nullptr, 0);
      r = areplace(r, i.path, 0, i.node->a, nullptr, 0);
      add(r);
    }

  for (const AOcc& up : upds)
    for (const AOcc& lo : locs) {
      if (up.node->name != lo.node->name) continue;
      if (aresolve(up.node->name, up.binders) != aresolve(lo.node->name, lo.binders)) continue;
      bool contained = path_is_prefix(up.path, lo.path) || path_is_prefix(lo.path, up.path);
      if (contained) continue;
      AdaptPtr installed = substitute(up.node->a, up.node->var, lo.node->a);
      std::size_t fork = 0;
      while (fork < up.path.size() && fork < lo.path.size() && up.path[fork] == lo.path[fork])
        ++fork;
      AdaptPtr r = areplace(u, lo.path, 0, installed, &up.node->a->free_names, fork);
      r = areplace(r, up.path, 0, up.node->b, nullptr, 0);
      add(r);
    }

  std::sort(results.begin(), results.end(),
            [](const AdaptPtr& a, const AdaptPtr& b) { return adapt_compare(a, b) < 0; });
  return results;
}

// ---------------------------------------------------------------------------
// Exhaustive term enumeration.
// ---------------------------------------------------------------------------

namespace {

using CompKey = std::tuple<int, bool, bool, bool>;
std::map<CompKey, std::vector<CompPtr>> comp_memo;

const std::vector<CompPtr>& build_comp(int size, bool under_prefix, bool var_avail,
                                       bool with_inst, const std::vector<Name>& names) {
  CompKey key{size, under_prefix, var_avail, with_inst};
  auto it = comp_memo.find(key);
  if (it != comp_memo.end()) return it->second;
  std::vector<CompPtr> out;
  if (size >= 1) {
    if (size == 1) {
      out.push_back(comp_nil());
      if (var_avail && with_inst) out.push_back(comp_var(ProcVar("X")));
    }
    if (size >= 2) {
      for (const Name& n : names) {
        for (const CompPtr& t : build_comp(size - 1, true, var_avail, with_inst, names)) {
          out.push_back(comp_in(n, t));
          out.push_back(comp_out(n, t));
        }
        for (const CompPtr& t : build_comp(size - 1, under_prefix, var_avail, with_inst, names))
          out.push_back(comp_restrict(n, t));
      }
      if (!under_prefix)
        for (const CompPtr& t : build_comp(size - 1, false, var_avail, with_inst, names))
          out.push_back(comp_protected(t));
      if (with_inst) {
        for (int i = 1; i <= size - 2; ++i)
          for (const CompPtr& r : build_comp(i, under_prefix, true, with_inst, names))
            for (const CompPtr& c :
                 build_comp(size - 1 - i, under_prefix, var_avail, with_inst, names))
              out.push_back(comp_inst(ProcVar("X"), r, c));
      }
    }
    if (size >= 3) {
      for (int i = 1; i <= size - 2; ++i)
        for (const CompPtr& a : build_comp(i, under_prefix, var_avail, with_inst, names))
          for (const CompPtr& b :
               build_comp(size - 1 - i, under_prefix, var_avail, with_inst, names))
            out.push_back(comp_par(a, b));
      if (!under_prefix)
        for (const Name& n : names)
          for (int i = 1; i <= size - 2; ++i)
            for (const CompPtr& d : build_comp(i, false, var_avail, with_inst, names))
              for (const CompPtr& q :
                   build_comp(size - 1 - i, false, var_avail, with_inst, names))
                out.push_back(comp_trans(n, d, q));
    }
  }
  return comp_memo.emplace(std::move(key), std::move(out)).first->second;
}

using AdaptKey = std::tuple<int, bool>;
std::map<AdaptKey, std::vector<AdaptPtr>> adapt_memo;

const std::vector<AdaptPtr>& build_adapt(int size, bool var_avail,
                                         const std::vector<Name>& names) {
  AdaptKey key{size, var_avail};
  auto it = adapt_memo.find(key);
  if (it != adapt_memo.end()) return it->second;
  std::vector<AdaptPtr> out;
  if (size == 1) {
    out.push_back(adapt_nil());
    if (var_avail) out.push_back(adapt_var(ProcVar("X")));
  }
  if (size >= 2) {
    for (const Name& n : names) {
      for (const AdaptPtr& t : build_adapt(size - 1, var_avail, names)) {
        out.push_back(adapt_in(n, t));
        out.push_back(adapt_out(n, t));
        out.push_back(adapt_loc(n, t));
        out.push_back(adapt_restrict(n, t));
      }
    }
  }
  if (size >= 3) {
    for (int i = 1; i <= size - 2; ++i)
      for (const AdaptPtr& a : build_adapt(i, var_avail, names))
        for (const AdaptPtr& b : build_adapt(size - 1 - i, var_avail, names))
          out.push_back(adapt_par(a, b));
    for (const Name& n : names)
      for (int i = 1; i <= size - 2; ++i)
        for (const AdaptPtr& body : build_adapt(i, true, names))
          for (const AdaptPtr& c : build_adapt(size - 1 - i, var_avail, names))
            out.push_back(adapt_upd(n, ProcVar("X"), body, c));
  }
  return adapt_memo.emplace(std::move(key), std::move(out)).first->second;
}

}  // namespace

const std::vector<CompPtr>& comp_terms_of_size(int size, const std::vector<Name>& names,
                                               bool with_inst) {
  return build_comp(size, false, false, with_inst, names);
}

const std::vector<AdaptPtr>& adapt_terms_of_size(int size, const std::vector<Name>& names) {
  return build_adapt(size, false, names);
}

// ---------------------------------------------------------------------------
// Comparisons.
// ---------------------------------------------------------------------------

namespace {

int label_compare(const CompLabel& a, const CompLabel& b) {
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  if (int c = a.name.key.compare(b.name.key)) return c;
  if (int c = a.var.text.compare(b.var.text)) return c;
  if (a.body && b.body) return comp_compare(a.body, b.body);
  return 0;
}

int step_compare(const CompStep& a, const CompStep& b) {
  if (int c = label_compare(a.label, b.label)) return c;
  if (a.shape != b.shape) return a.shape < b.shape ? -1 : 1;
  return comp_compare(a.target, b.target);
}

void dedupe(std::vector<CompStep>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const CompStep& a, const CompStep& b) { return step_compare(a, b) < 0; });
  v.erase(std::unique(v.begin(), v.end(),
                      [](const CompStep& a, const CompStep& b) { return step_compare(a, b) == 0; }),
          v.end());
}

}  // namespace

bool same_comp_steps(std::vector<CompStep> a, std::vector<CompStep> b) {
  dedupe(a);
  dedupe(b);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (step_compare(a[i], b[i]) != 0) return false;
  return true;
}

bool same_adapt_sets(const std::vector<AdaptPtr>& a, const std::vector<AdaptPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!adapt_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace oracles
