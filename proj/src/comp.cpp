#include "compadapt/comp.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace compadapt {

namespace {

std::vector<Name> merge_names(const std::vector<Name>& a, const std::vector<Name>& b) {
  std::vector<Name> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<Name> add_name(const std::vector<Name>& a, const Name& n) {
  std::vector<Name> out = a;
  auto it = std::lower_bound(out.begin(), out.end(), n);
  if (it == out.end() || *it != n) out.insert(it, n);
  return out;
}

std::vector<Name> remove_name(const std::vector<Name>& a, const Name& n) {
  std::vector<Name> out;
  out.reserve(a.size());
  for (const Name& x : a)
    if (x != n) out.push_back(x);
  return out;
}

std::vector<ProcVar> merge_vars(const std::vector<ProcVar>& a, const std::vector<ProcVar>& b) {
  std::vector<ProcVar> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<ProcVar> remove_var(const std::vector<ProcVar>& a, const ProcVar& v) {
  std::vector<ProcVar> out;
  out.reserve(a.size());
  for (const ProcVar& x : a)
    if (x != v) out.push_back(x);
  return out;
}

std::uint64_t node_hash(Comp::Kind k, const Name& n, const ProcVar& v, const CompPtr& a,
                        const CompPtr& b) {
  std::uint64_t h = fnv1a("comp");
  h = hash_mix(h, static_cast<std::uint64_t>(k));
  h = hash_mix(h, fnv1a(n.key));
  h = hash_mix(h, fnv1a(v.text));
  if (a) h = hash_mix(h, a->hash);
  if (b) h = hash_mix(h, b->hash);
  return h;
}

CompPtr make(Comp::Kind k, Name n, ProcVar v, CompPtr a, CompPtr b) {
  auto node = std::make_shared<Comp>();
  node->kind = k;
  node->name = std::move(n);
  node->var = std::move(v);
  node->a = std::move(a);
  node->b = std::move(b);
  node->hash = node_hash(node->kind, node->name, node->var, node->a, node->b);
  node->size = 1 + (node->a ? node->a->size : 0) + (node->b ? node->b->size : 0);

  const Comp* pa = node->a.get();
  const Comp* pb = node->b.get();
  switch (k) {
    case Comp::Kind::Nil:
      break;
    case Comp::Kind::In:
    case Comp::Kind::Out:
      node->free_names = add_name(pa->free_names, node->name);
      node->free_vars = pa->free_vars;
      break;
    case Comp::Kind::Repl:
    case Comp::Kind::Protected:
      node->free_names = pa->free_names;
      node->free_vars = pa->free_vars;
      break;
    case Comp::Kind::Restrict:
      node->free_names = remove_name(pa->free_names, node->name);
      node->free_vars = pa->free_vars;
      break;
    case Comp::Kind::Par:
      node->free_names = merge_names(pa->free_names, pb->free_names);
      node->free_vars = merge_vars(pa->free_vars, pb->free_vars);
      break;
    case Comp::Kind::Trans:
      node->free_names = add_name(merge_names(pa->free_names, pb->free_names), node->name);
      node->free_vars = merge_vars(pa->free_vars, pb->free_vars);
      break;
    case Comp::Kind::Var:
      node->free_vars = {node->var};
      break;
    case Comp::Kind::Inst:
      node->free_names = merge_names(pa->free_names, pb->free_names);
      node->free_vars = merge_vars(remove_var(pa->free_vars, node->var), pb->free_vars);
      break;
  }
  return node;
}

}  // namespace

const char* semantics_text(Semantics k) {
  switch (k) {
    case Semantics::Discarding: return "D";
    case Semantics::Preserving: return "P";
    case Semantics::Aborting: return "A";
  }
  return "?";
}

CompPtr comp_nil() {
  static const CompPtr nil = make(Comp::Kind::Nil, Name(), ProcVar(), nullptr, nullptr);
  return nil;
}
CompPtr comp_in(const Name& n, CompPtr cont) {
  return make(Comp::Kind::In, n, ProcVar(), std::move(cont), nullptr);
}
CompPtr comp_out(const Name& n, CompPtr cont) {
  return make(Comp::Kind::Out, n, ProcVar(), std::move(cont), nullptr);
}
CompPtr comp_repl(CompPtr p) {
  return make(Comp::Kind::Repl, Name(), ProcVar(), std::move(p), nullptr);
}
CompPtr comp_restrict(const Name& n, CompPtr p) {
  return make(Comp::Kind::Restrict, n, ProcVar(), std::move(p), nullptr);
}
CompPtr comp_par(CompPtr l, CompPtr r) {
  return make(Comp::Kind::Par, Name(), ProcVar(), std::move(l), std::move(r));
}
CompPtr comp_trans(const Name& t, CompPtr dflt, CompPtr comp) {
  return make(Comp::Kind::Trans, t, ProcVar(), std::move(dflt), std::move(comp));
}
CompPtr comp_protected(CompPtr p) {
  return make(Comp::Kind::Protected, Name(), ProcVar(), std::move(p), nullptr);
}
CompPtr comp_var(const ProcVar& v) {
  return make(Comp::Kind::Var, Name(), v, nullptr, nullptr);
}
CompPtr comp_inst(const ProcVar& v, CompPtr body, CompPtr cont) {
  return make(Comp::Kind::Inst, Name(), v, std::move(body), std::move(cont));
}

int comp_compare(const CompPtr& x, const CompPtr& y) {
  if (x.get() == y.get()) return 0;
  if (x->kind != y->kind) return x->kind < y->kind ? -1 : 1;
  if (int c = x->name.key.compare(y->name.key)) return c < 0 ? -1 : 1;
  if (int c = x->var.text.compare(y->var.text)) return c < 0 ? -1 : 1;
  if (!!x->a != !!y->a) return x->a ? 1 : -1;
  if (x->a)
    if (int c = comp_compare(x->a, y->a)) return c;
  if (!!x->b != !!y->b) return x->b ? 1 : -1;
  if (x->b)
    if (int c = comp_compare(x->b, y->b)) return c;
  return 0;
}

bool comp_equal(const CompPtr& x, const CompPtr& y) {
  if (x.get() == y.get()) return true;
  if (x->hash != y->hash || x->size != y->size) return false;
  return comp_compare(x, y) == 0;
}

namespace {

bool wf_rec(const CompPtr& p, bool under_prefix) {
  switch (p->kind) {
    case Comp::Kind::Nil:
    case Comp::Kind::Var:
      return true;
    case Comp::Kind::In:
    case Comp::Kind::Out:
      return wf_rec(p->a, true);
    case Comp::Kind::Repl:
    case Comp::Kind::Restrict:
      return wf_rec(p->a, under_prefix);
    case Comp::Kind::Par:
      return wf_rec(p->a, under_prefix) && wf_rec(p->b, under_prefix);
    case Comp::Kind::Trans:
      if (under_prefix) return false;
      return wf_rec(p->a, under_prefix) && wf_rec(p->b, under_prefix);
    case Comp::Kind::Protected:
      if (under_prefix) return false;
      return wf_rec(p->a, under_prefix);
    case Comp::Kind::Inst:
      return wf_rec(p->a, under_prefix) && wf_rec(p->b, under_prefix);
  }
  return true;
}

std::set<Name> name_set(const std::vector<Name>& v) { return {v.begin(), v.end()}; }

CompPtr rename_free_name(const CompPtr& p, const Name& from, const Name& to) {
  if (!free_in(from, p)) return p;
  switch (p->kind) {
    case Comp::Kind::In:
      return comp_in(p->name == from ? to : p->name, rename_free_name(p->a, from, to));
    case Comp::Kind::Out:
      return comp_out(p->name == from ? to : p->name, rename_free_name(p->a, from, to));
    case Comp::Kind::Repl:
      return comp_repl(rename_free_name(p->a, from, to));
    case Comp::Kind::Restrict:
      return comp_restrict(p->name, rename_free_name(p->a, from, to));
    case Comp::Kind::Par:
      return comp_par(rename_free_name(p->a, from, to), rename_free_name(p->b, from, to));
    case Comp::Kind::Trans:
      return comp_trans(p->name == from ? to : p->name, rename_free_name(p->a, from, to),
                        rename_free_name(p->b, from, to));
    case Comp::Kind::Protected:
      return comp_protected(rename_free_name(p->a, from, to));
    case Comp::Kind::Inst:
      return comp_inst(p->var, rename_free_name(p->a, from, to),
                       rename_free_name(p->b, from, to));
    default:
      return p;
  }
}

CompPtr rename_free_var(const CompPtr& p, const ProcVar& from, const ProcVar& to) {
  if (!free_in(from, p)) return p;
  switch (p->kind) {
    case Comp::Kind::Var:
      return comp_var(to);
    case Comp::Kind::In:
      return comp_in(p->name, rename_free_var(p->a, from, to));
    case Comp::Kind::Out:
      return comp_out(p->name, rename_free_var(p->a, from, to));
    case Comp::Kind::Repl:
      return comp_repl(rename_free_var(p->a, from, to));
    case Comp::Kind::Restrict:
      return comp_restrict(p->name, rename_free_var(p->a, from, to));
    case Comp::Kind::Par:
      return comp_par(rename_free_var(p->a, from, to), rename_free_var(p->b, from, to));
    case Comp::Kind::Trans:
      return comp_trans(p->name, rename_free_var(p->a, from, to),
                        rename_free_var(p->b, from, to));
    case Comp::Kind::Protected:
      return comp_protected(rename_free_var(p->a, from, to));
    case Comp::Kind::Inst: {
      CompPtr body = p->var == from ? p->a : rename_free_var(p->a, from, to);
      return comp_inst(p->var, body, rename_free_var(p->b, from, to));
    }
    default:
      return p;
  }
}

}  // namespace

bool well_formed(const CompPtr& p) { return wf_rec(p, false); }

CompPtr substitute(const CompPtr& p, const ProcVar& x, const CompPtr& q) {
  if (!free_in(x, p)) return p;
  switch (p->kind) {
    case Comp::Kind::Var:
      return q;  // free_in established var == x
    case Comp::Kind::In:
      return comp_in(p->name, substitute(p->a, x, q));
    case Comp::Kind::Out:
      return comp_out(p->name, substitute(p->a, x, q));
    case Comp::Kind::Repl:
      return comp_repl(substitute(p->a, x, q));
    case Comp::Kind::Protected:
      return comp_protected(substitute(p->a, x, q));
    case Comp::Kind::Par:
      return comp_par(substitute(p->a, x, q), substitute(p->b, x, q));
    case Comp::Kind::Trans:
      return comp_trans(p->name, substitute(p->a, x, q), substitute(p->b, x, q));
    case Comp::Kind::Restrict: {
      Name a = p->name;
      CompPtr body = p->a;
      if (free_in(a, q)) {
        std::set<Name> avoid = name_set(q->free_names);
        for (const Name& n : body->free_names) avoid.insert(n);
        avoid.insert(a);
        Name a2 = fresh_name(a.key, avoid);
        body = rename_free_name(body, a, a2);
        a = a2;
      }
      return comp_restrict(a, substitute(body, x, q));
    }
    case Comp::Kind::Inst: {
      ProcVar y = p->var;
      CompPtr body = p->a;
      if (y != x && free_in(x, body)) {
        if (free_in(y, q)) {
          std::set<ProcVar> avoid(q->free_vars.begin(), q->free_vars.end());
          for (const ProcVar& v : body->free_vars) avoid.insert(v);
          avoid.insert(y);
          ProcVar y2 = fresh_var(y.text, avoid);
          body = rename_free_var(body, y, y2);
          y = y2;
        }
        body = substitute(body, x, q);
      }
      return comp_inst(y, body, substitute(p->b, x, q));
    }
    default:
      return p;
  }
}

// ---------------------------------------------------------------------------
// Normalization.
// ---------------------------------------------------------------------------

namespace {

struct Stacks {
  std::vector<Name> names;
  std::vector<ProcVar> vars;
};

int bound_index(const Name& n, const std::vector<Name>& stack) {
  for (int i = static_cast<int>(stack.size()) - 1; i >= 0; --i)
    if (stack[static_cast<std::size_t>(i)] == n)
      return static_cast<int>(stack.size()) - 1 - i;
  return -1;
}

int bound_index(const ProcVar& v, const std::vector<ProcVar>& stack) {
  for (int i = static_cast<int>(stack.size()) - 1; i >= 0; --i)
    if (stack[static_cast<std::size_t>(i)] == v)
      return static_cast<int>(stack.size()) - 1 - i;
  return -1;
}

int cmp_name_ainv(const Name& n, const Stacks& sn, const Name& m, const Stacks& sm) {
  int i = bound_index(n, sn.names);
  int j = bound_index(m, sm.names);
  if ((i >= 0) != (j >= 0)) return i >= 0 ? -1 : 1;
  if (i >= 0) return i < j ? -1 : (i > j ? 1 : 0);
  int c = n.key.compare(m.key);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

int cmp_var_ainv(const ProcVar& v, const Stacks& sv, const ProcVar& w, const Stacks& sw) {
  int i = bound_index(v, sv.vars);
  int j = bound_index(w, sw.vars);
  if ((i >= 0) != (j >= 0)) return i >= 0 ? -1 : 1;
  if (i >= 0) return i < j ? -1 : (i > j ? 1 : 0);
  int c = v.text.compare(w.text);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

// Alpha-invariant total order: bound names compare by binder distance,
// free names by text.
int ainv_compare(const CompPtr& x, Stacks& sx, const CompPtr& y, Stacks& sy) {
  if (x->kind != y->kind) return x->kind < y->kind ? -1 : 1;
  switch (x->kind) {
    case Comp::Kind::Nil:
      return 0;
    case Comp::Kind::In:
    case Comp::Kind::Out:
      if (int c = cmp_name_ainv(x->name, sx, y->name, sy)) return c;
      return ainv_compare(x->a, sx, y->a, sy);
    case Comp::Kind::Repl:
    case Comp::Kind::Protected:
      return ainv_compare(x->a, sx, y->a, sy);
    case Comp::Kind::Restrict: {
      sx.names.push_back(x->name);
      sy.names.push_back(y->name);
      int c = ainv_compare(x->a, sx, y->a, sy);
      sx.names.pop_back();
      sy.names.pop_back();
      return c;
    }
    case Comp::Kind::Par:
      if (int c = ainv_compare(x->a, sx, y->a, sy)) return c;
      return ainv_compare(x->b, sx, y->b, sy);
    case Comp::Kind::Trans:
      if (int c = cmp_name_ainv(x->name, sx, y->name, sy)) return c;
      if (int c = ainv_compare(x->a, sx, y->a, sy)) return c;
      return ainv_compare(x->b, sx, y->b, sy);
    case Comp::Kind::Var:
      return cmp_var_ainv(x->var, sx, y->var, sy);
    case Comp::Kind::Inst: {
      sx.vars.push_back(x->var);
      sy.vars.push_back(y->var);
      int c = ainv_compare(x->a, sx, y->a, sy);
      sx.vars.pop_back();
      sy.vars.pop_back();
      if (c) return c;
      return ainv_compare(x->b, sx, y->b, sy);
    }
  }
  return 0;
}

// Re-sorts every parallel composition under the given binder stacks.
// Used when a restriction block changes binder order.
CompPtr resort(const CompPtr& p, Stacks& st);

CompPtr rebuild_par(std::vector<CompPtr> kids) {
  if (kids.empty()) return comp_nil();
  CompPtr acc = kids.back();
  for (std::size_t i = kids.size() - 1; i-- > 0;) acc = comp_par(kids[i], acc);
  return acc;
}

void collect_par(const CompPtr& p, std::vector<CompPtr>& out) {
  if (p->kind == Comp::Kind::Par) {
    collect_par(p->a, out);
    collect_par(p->b, out);
  } else {
    out.push_back(p);
  }
}

CompPtr resort(const CompPtr& p, Stacks& st) {
  switch (p->kind) {
    case Comp::Kind::Nil:
    case Comp::Kind::Var:
      return p;
    case Comp::Kind::In:
      return comp_in(p->name, resort(p->a, st));
    case Comp::Kind::Out:
      return comp_out(p->name, resort(p->a, st));
    case Comp::Kind::Repl:
      return comp_repl(resort(p->a, st));
    case Comp::Kind::Protected:
      return comp_protected(resort(p->a, st));
    case Comp::Kind::Restrict: {
      st.names.push_back(p->name);
      CompPtr body = resort(p->a, st);
      st.names.pop_back();
      return comp_restrict(p->name, body);
    }
    case Comp::Kind::Trans:
      return comp_trans(p->name, resort(p->a, st), resort(p->b, st));
    case Comp::Kind::Inst: {
      st.vars.push_back(p->var);
      CompPtr body = resort(p->a, st);
      st.vars.pop_back();
      return comp_inst(p->var, body, resort(p->b, st));
    }
    case Comp::Kind::Par: {
      std::vector<CompPtr> kids;
      collect_par(p, kids);
      for (auto& k : kids) k = resort(k, st);
      std::stable_sort(kids.begin(), kids.end(), [&](const CompPtr& a, const CompPtr& b) {
        return ainv_compare(a, st, b, st) < 0;
      });
      return rebuild_par(std::move(kids));
    }
  }
  return p;
}

// Document-order position of the first free occurrence of `n`, or -1.
int first_use(const CompPtr& p, const Name& n, int& counter) {
  if (!free_in(n, p)) {
    counter += static_cast<int>(p->size);
    return -1;
  }
  int here = counter++;
  switch (p->kind) {
    case Comp::Kind::In:
    case Comp::Kind::Out:
      if (p->name == n) return here;
      return first_use(p->a, n, counter);
    case Comp::Kind::Trans: {
      if (p->name == n) return here;
      int r = first_use(p->a, n, counter);
      if (r >= 0) return r;
      return first_use(p->b, n, counter);
    }
    case Comp::Kind::Par: {
      int r = first_use(p->a, n, counter);
      if (r >= 0) return r;
      return first_use(p->b, n, counter);
    }
    case Comp::Kind::Inst: {
      int r = first_use(p->a, n, counter);
      if (r >= 0) return r;
      return first_use(p->b, n, counter);
    }
    case Comp::Kind::Repl:
    case Comp::Kind::Protected:
    case Comp::Kind::Restrict:
      return first_use(p->a, n, counter);
    default:
      return -1;
  }
}

bool is_erasable(const Name& binder, const CompPtr& body) {
  if (body->kind == Comp::Kind::Nil) return true;
  // (new a) ~a, exact shape.
  return body->kind == Comp::Kind::Out && body->name == binder &&
         body->a->kind == Comp::Kind::Nil;
}

// Builds a canonical restriction block over `body`. Binders are given
// outermost first; the body must already be normalized under them in that
// order. Erases (new a)0 / (new a)~a, orders binders by first use, and
// re-sorts the body when the order changes.
CompPtr attach_restricts(std::vector<Name> binders, CompPtr body, Stacks& st) {
  while (body->kind == Comp::Kind::Restrict) {
    binders.push_back(body->name);
    body = body->a;
  }
  // Innermost-first erasures.
  while (!binders.empty() && is_erasable(binders.back(), body)) {
    body = comp_nil();
    binders.pop_back();
  }
  // Unused binders vanish: (new a)P == P when a is not free in P, by scope
  // extrusion with (new a)0.
  {
    std::set<Name> live(body->free_names.begin(), body->free_names.end());
    std::vector<Name> kept;
    for (std::size_t i = binders.size(); i-- > 0;) {
      if (live.count(binders[i])) {
        kept.push_back(binders[i]);
        live.erase(binders[i]);
      }
    }
    std::reverse(kept.begin(), kept.end());
    binders = std::move(kept);
  }
  if (binders.empty()) return body;
  if (body->kind == Comp::Kind::Nil) return body;

  // Fixpoint on (binder order, sorted body); cycles broken by the
  // alpha-invariant least candidate.
  std::vector<std::pair<std::vector<Name>, CompPtr>> seen;
  std::vector<Name> order = binders;
  CompPtr cur = body;
  for (int iter = 0; iter < 8; ++iter) {
    for (const Name& n : order) st.names.push_back(n);
    cur = resort(cur, st);
    for (std::size_t i = 0; i < order.size(); ++i) st.names.pop_back();

    std::vector<std::pair<long, Name>> keyed;
    for (const Name& n : order) {
      int counter = 0;
      int pos = first_use(cur, n, counter);
      keyed.emplace_back(pos < 0 ? static_cast<long>(cur->size) + 1 : pos, n);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Name> order2;
    for (auto& kn : keyed) order2.push_back(kn.second);

    bool repeat = false;
    for (auto& s : seen)
      if (s.first == order2) repeat = true;
    seen.emplace_back(order, cur);
    if (order2 == order || repeat) {
      if (order2 == order) break;
      // Cycle: pick the alpha-invariant least candidate.
      std::size_t best = 0;
      for (std::size_t i = 1; i < seen.size(); ++i) {
        CompPtr ci = seen[i].second;
        CompPtr cb = seen[best].second;
        Stacks si = st, sb = st;
        for (const Name& n : seen[i].first) si.names.push_back(n);
        for (const Name& n : seen[best].first) sb.names.push_back(n);
        if (ainv_compare(ci, si, cb, sb) < 0) best = i;
      }
      order = seen[best].first;
      cur = seen[best].second;
      break;
    }
    order = order2;
  }

  CompPtr out = cur;
  for (std::size_t i = order.size(); i-- > 0;) out = comp_restrict(order[i], out);
  return out;
}

CompPtr norm_core(const CompPtr& p, Stacks& st);

// <P> after collapsing nested blocks, dropping <0> and hoisting
// restrictions out of the block.
CompPtr norm_protected(CompPtr x, Stacks& st) {
  while (x->kind == Comp::Kind::Protected) x = x->a;
  if (x->kind == Comp::Kind::Nil) return x;
  if (x->kind == Comp::Kind::Restrict) {
    st.names.push_back(x->name);
    CompPtr inner = norm_protected(x->a, st);
    st.names.pop_back();
    return attach_restricts({x->name}, inner, st);
  }
  return comp_protected(x);
}

CompPtr norm_core(const CompPtr& p, Stacks& st) {
  switch (p->kind) {
    case Comp::Kind::Nil:
    case Comp::Kind::Var:
      return p;
    case Comp::Kind::In:
      return comp_in(p->name, norm_core(p->a, st));
    case Comp::Kind::Out:
      return comp_out(p->name, norm_core(p->a, st));
    case Comp::Kind::Repl:
      return comp_repl(norm_core(p->a, st));
    case Comp::Kind::Inst: {
      st.vars.push_back(p->var);
      CompPtr body = norm_core(p->a, st);
      st.vars.pop_back();
      return comp_inst(p->var, body, norm_core(p->b, st));
    }
    case Comp::Kind::Protected: {
      CompPtr x = norm_core(p->a, st);
      return norm_protected(x, st);
    }
    case Comp::Kind::Restrict: {
      st.names.push_back(p->name);
      CompPtr body = norm_core(p->a, st);
      st.names.pop_back();
      return attach_restricts({p->name}, body, st);
    }
    case Comp::Kind::Trans: {
      CompPtr comp = norm_core(p->b, st);
      CompPtr dflt = norm_core(p->a, st);
      // Hoist restrictions out of the default activity, renaming binders
      // that clash with the transaction name or the compensation.
      std::vector<Name> hoisted;
      while (dflt->kind == Comp::Kind::Restrict) {
        Name a = dflt->name;
        CompPtr body = dflt->a;
        if (a == p->name || free_in(a, comp)) {
          std::set<Name> avoid = name_set(body->free_names);
          for (const Name& n : comp->free_names) avoid.insert(n);
          avoid.insert(p->name);
          avoid.insert(a);
          for (const Name& n : hoisted) avoid.insert(n);
          Name a2 = fresh_name(a.key, avoid);
          body = rename_free_name(body, a, a2);
          a = a2;
        }
        hoisted.push_back(a);
        dflt = body;
      }
      CompPtr node = comp_trans(p->name, dflt, comp);
      if (hoisted.empty()) return node;
      return attach_restricts(std::move(hoisted), node, st);
    }
    case Comp::Kind::Par: {
      std::vector<CompPtr> raw;
      collect_par(p, raw);
      std::vector<CompPtr> kids;
      for (auto& k : raw) kids.push_back(norm_core(k, st));
      // Extrude restrictions from the children, freshening binders against
      // every sibling.
      std::vector<Name> binders;
      std::set<Name> avoid;
      for (auto& k : kids)
        for (const Name& n : k->free_names) avoid.insert(n);
      for (const Name& n : st.names) avoid.insert(n);
      std::vector<CompPtr> flat;
      for (auto& k : kids) {
        CompPtr cur = k;
        while (cur->kind == Comp::Kind::Restrict) {
          Name a = cur->name;
          CompPtr body = cur->a;
          if (avoid.count(a)) {
            Name a2 = fresh_name(a.key, avoid);
            body = rename_free_name(body, a, a2);
            a = a2;
          }
          avoid.insert(a);
          binders.push_back(a);
          cur = body;
        }
        // Binder erasure below may have exposed a parallel composition.
        if (cur->kind == Comp::Kind::Par)
          collect_par(cur, flat);
        else if (cur->kind != Comp::Kind::Nil)
          flat.push_back(cur);
      }
      for (const Name& n : binders) st.names.push_back(n);
      std::stable_sort(flat.begin(), flat.end(), [&](const CompPtr& a, const CompPtr& b) {
        return ainv_compare(a, st, b, st) < 0;
      });
      for (std::size_t i = 0; i < binders.size(); ++i) st.names.pop_back();
      CompPtr par = rebuild_par(std::move(flat));
      if (binders.empty()) return par;
      return attach_restricts(std::move(binders), par, st);
    }
  }
  return p;
}

// Canonical binder names: name binders become b0, b1, ... by binding depth,
// variable binders V0, V1, ..., both skipping the term's free identifiers.
struct AlphaCtx {
  std::set<std::string> avoid_names;
  std::set<std::string> avoid_vars;
  std::vector<Name> nseq;
  std::vector<ProcVar> vseq;

  const Name& binder_name(std::size_t depth) {
    while (nseq.size() <= depth) {
      for (unsigned long i = 0;; ++i) {
        std::string cand = "b" + std::to_string(nseq.size() + i);
        if (!avoid_names.count(cand)) {
          bool used = false;
          for (const Name& n : nseq)
            if (n.key == cand) used = true;
          if (!used) {
            nseq.emplace_back(cand);
            break;
          }
        }
      }
    }
    return nseq[depth];
  }
  const ProcVar& binder_var(std::size_t depth) {
    while (vseq.size() <= depth) {
      for (unsigned long i = 0;; ++i) {
        std::string cand = "V" + std::to_string(vseq.size() + i);
        if (!avoid_vars.count(cand)) {
          bool used = false;
          for (const ProcVar& v : vseq)
            if (v.text == cand) used = true;
          if (!used) {
            vseq.emplace_back(cand);
            break;
          }
        }
      }
    }
    return vseq[depth];
  }
};

CompPtr alpha_rec(const CompPtr& p, AlphaCtx& ctx, std::map<Name, Name>& nmap,
                  std::map<ProcVar, ProcVar>& vmap, std::size_t ndepth, std::size_t vdepth) {
  auto look = [&](const Name& n) {
    auto it = nmap.find(n);
    return it == nmap.end() ? n : it->second;
  };
  switch (p->kind) {
    case Comp::Kind::Nil:
      return p;
    case Comp::Kind::Var: {
      auto it = vmap.find(p->var);
      return it == vmap.end() ? p : comp_var(it->second);
    }
    case Comp::Kind::In:
      return comp_in(look(p->name), alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Comp::Kind::Out:
      return comp_out(look(p->name), alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Comp::Kind::Repl:
      return comp_repl(alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Comp::Kind::Protected:
      return comp_protected(alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Comp::Kind::Par:
      return comp_par(alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth),
                      alpha_rec(p->b, ctx, nmap, vmap, ndepth, vdepth));
    case Comp::Kind::Trans:
      return comp_trans(look(p->name), alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth),
                        alpha_rec(p->b, ctx, nmap, vmap, ndepth, vdepth));
    case Comp::Kind::Restrict: {
      Name nn = ctx.binder_name(ndepth);
      auto saved = nmap.find(p->name);
      Name old;
      bool had = saved != nmap.end();
      if (had) old = saved->second;
      nmap[p->name] = nn;
      CompPtr body = alpha_rec(p->a, ctx, nmap, vmap, ndepth + 1, vdepth);
      if (had)
        nmap[p->name] = old;
      else
        nmap.erase(p->name);
      return comp_restrict(nn, body);
    }
    case Comp::Kind::Inst: {
      ProcVar nv = ctx.binder_var(vdepth);
      auto saved = vmap.find(p->var);
      ProcVar old;
      bool had = saved != vmap.end();
      if (had) old = saved->second;
      vmap[p->var] = nv;
      CompPtr body = alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth + 1);
      if (had)
        vmap[p->var] = old;
      else
        vmap.erase(p->var);
      return comp_inst(nv, body, alpha_rec(p->b, ctx, nmap, vmap, ndepth, vdepth));
    }
  }
  return p;
}

}  // namespace

CompPtr normalize(const CompPtr& p) {
  // Keyed by owning pointers: keeping keys alive stops address reuse from
  // aliasing distinct terms.
  thread_local std::unordered_map<CompPtr, CompPtr> cache;
  if (cache.size() > 200000) cache.clear();
  auto hit = cache.find(p);
  if (hit != cache.end()) return hit->second;

  Stacks st;
  CompPtr core = norm_core(p, st);
  AlphaCtx ctx;
  for (const Name& n : core->free_names) ctx.avoid_names.insert(n.key);
  for (const ProcVar& v : core->free_vars) ctx.avoid_vars.insert(v.text);
  std::map<Name, Name> nmap;
  std::map<ProcVar, ProcVar> vmap;
  CompPtr out = alpha_rec(core, ctx, nmap, vmap, 0, 0);
  cache.emplace(p, out);
  cache.emplace(out, out);
  return out;
}

bool congruent(const CompPtr& p, const CompPtr& q) {
  return comp_equal(normalize(p), normalize(q));
}

CompPtr extract(const CompPtr& p, Semantics k) {
  switch (p->kind) {
    case Comp::Kind::Trans:
      switch (k) {
        case Semantics::Discarding:
          return comp_nil();
        case Semantics::Preserving:
          return p;
        case Semantics::Aborting:
          return comp_par(extract(p->a, k), comp_protected(p->b));
      }
      return comp_nil();
    case Comp::Kind::Protected:
      return p;
    case Comp::Kind::Par:
      return comp_par(extract(p->a, k), extract(p->b, k));
    case Comp::Kind::Restrict:
      return comp_restrict(p->name, extract(p->a, k));
    case Comp::Kind::Nil:
      return p;
    default:
      // Prefixes, replication, compensation updates and variables are
      // dropped.
      return comp_nil();
  }
}

bool no_comp(const CompPtr& p) {
  switch (p->kind) {
    case Comp::Kind::Inst:
      return false;
    case Comp::Kind::Par:
      return no_comp(p->a) && no_comp(p->b);
    case Comp::Kind::Restrict:
    case Comp::Kind::Protected:
    case Comp::Kind::Repl:
      return no_comp(p->a);
    default:
      return true;
  }
}

// ---------------------------------------------------------------------------
// LTS.
// ---------------------------------------------------------------------------

CompLabel CompLabel::in(const Name& n) {
  CompLabel l;
  l.kind = Kind::In;
  l.name = n;
  return l;
}
CompLabel CompLabel::out(const Name& n) {
  CompLabel l;
  l.kind = Kind::Out;
  l.name = n;
  return l;
}
CompLabel CompLabel::tau() {
  CompLabel l;
  l.kind = Kind::Tau;
  return l;
}
CompLabel CompLabel::lambda(const ProcVar& v, CompPtr b) {
  CompLabel l;
  l.kind = Kind::Lambda;
  l.var = v;
  l.body = std::move(b);
  return l;
}

bool CompLabel::operator==(const CompLabel& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::In:
    case Kind::Out:
      return name == o.name;
    case Kind::Tau:
      return true;
    case Kind::Lambda:
      return var == o.var && comp_equal(body, o.body);
  }
  return false;
}

std::string label_text(const CompLabel& l) {
  switch (l.kind) {
    case CompLabel::Kind::In:
      return l.name.key;
    case CompLabel::Kind::Out:
      return "~" + l.name.key;
    case CompLabel::Kind::Tau:
      return "tau";
    case CompLabel::Kind::Lambda:
      return "lambda " + l.var.text;
  }
  return "?";
}

const char* tau_shape_text(TauShape s) {
  switch (s) {
    case TauShape::None: return "none";
    case TauShape::Comm: return "comm";
    case TauShape::AbortExternal: return "abort-external";
    case TauShape::AbortInternal: return "abort-internal";
    case TauShape::CompUpdate: return "comp-update";
  }
  return "?";
}

namespace {

struct DerivedStep {
  CompLabel label;
  CompPtr target;
  TauShape shape = TauShape::None;
  bool in_from_recover = false;  // input label produced by L-Recover-Out
};

void push_step(std::vector<DerivedStep>& out, DerivedStep s) {
  for (const auto& t : out) {
    if (t.label == s.label && t.shape == s.shape && t.in_from_recover == s.in_from_recover &&
        comp_equal(t.target, s.target))
      return;
  }
  out.push_back(std::move(s));
}

std::vector<DerivedStep> derive(const CompPtr& p, Semantics k) {
  std::vector<DerivedStep> out;
  switch (p->kind) {
    case Comp::Kind::Nil:
    case Comp::Kind::Var:
      break;
    case Comp::Kind::In:
      push_step(out, {CompLabel::in(p->name), p->a});
      break;
    case Comp::Kind::Out:
      push_step(out, {CompLabel::out(p->name), p->a});
      break;
    case Comp::Kind::Inst:
      push_step(out, {CompLabel::lambda(p->var, p->a), p->b});
      break;
    case Comp::Kind::Repl:
      for (auto& s : derive(p->a, k))
        push_step(out, {s.label, comp_par(s.target, p), s.shape, s.in_from_recover});
      break;
    case Comp::Kind::Protected:
      for (auto& s : derive(p->a, k))
        push_step(out, {s.label, comp_protected(s.target), s.shape, s.in_from_recover});
      break;
    case Comp::Kind::Restrict:
      for (auto& s : derive(p->a, k)) {
        if ((s.label.kind == CompLabel::Kind::In || s.label.kind == CompLabel::Kind::Out) &&
            s.label.name == p->name)
          continue;
        push_step(out, {s.label, comp_restrict(p->name, s.target), s.shape, s.in_from_recover});
      }
      break;
    case Comp::Kind::Par: {
      auto sl = derive(p->a, k);
      auto sr = derive(p->b, k);
      for (auto& s : sl)
        push_step(out, {s.label, comp_par(s.target, p->b), s.shape, s.in_from_recover});
      for (auto& s : sr)
        push_step(out, {s.label, comp_par(p->a, s.target), s.shape, s.in_from_recover});
      for (auto& l : sl)
        for (auto& r : sr) {
          if (l.label.kind == CompLabel::Kind::In && r.label.kind == CompLabel::Kind::Out &&
              l.label.name == r.label.name)
            push_step(out, {CompLabel::tau(), comp_par(l.target, r.target),
                            l.in_from_recover ? TauShape::AbortExternal : TauShape::Comm});
          if (l.label.kind == CompLabel::Kind::Out && r.label.kind == CompLabel::Kind::In &&
              l.label.name == r.label.name)
            push_step(out, {CompLabel::tau(), comp_par(l.target, r.target),
                            r.in_from_recover ? TauShape::AbortExternal : TauShape::Comm});
        }
      break;
    }
    case Comp::Kind::Trans: {
      auto sb = derive(p->a, k);
      // L-Scope-Close: pending compensation updates fire with priority.
      for (auto& s : sb)
        if (s.label.kind == CompLabel::Kind::Lambda)
          push_step(out, {CompLabel::tau(),
                          comp_trans(p->name, s.target, substitute(s.label.body, s.label.var, p->b)),
                          TauShape::CompUpdate});
      if (no_comp(p->a)) {
        for (auto& s : sb)
          if (s.label.kind != CompLabel::Kind::Lambda)
            push_step(out,
                      {s.label, comp_trans(p->name, s.target, p->b), s.shape, s.in_from_recover});
        // L-Recover-Out
        push_step(out, {CompLabel::in(p->name),
                        comp_par(extract(p->a, k), comp_protected(p->b)), TauShape::None, true});
        // L-Recover-In
        for (auto& s : sb)
          if (s.label.kind == CompLabel::Kind::Out && s.label.name == p->name)
            push_step(out, {CompLabel::tau(),
                            comp_par(extract(s.target, k), comp_protected(p->b)),
                            TauShape::AbortInternal});
      }
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<CompStep> transitions(const CompPtr& p, Semantics k) {
  if (!well_formed(p))
    throw UsageError("transitions: term is not well-formed (transaction or protected block "
                     "behind a prefix)");
  std::vector<CompStep> out;
  for (auto& s : derive(p, k)) out.push_back({s.label, s.target, s.shape});
  return out;
}

TauShape classify_tau(const CompPtr& p, Semantics k, const CompStep& step) {
  if (step.label.kind != CompLabel::Kind::Tau)
    throw UsageError("classify_tau: step is not a tau step");
  for (auto& s : derive(p, k)) {
    if (s.label.kind == CompLabel::Kind::Tau && comp_equal(s.target, step.target) &&
        (step.shape == TauShape::None || step.shape == s.shape))
      return s.shape;
  }
  throw UsageError("classify_tau: step is not a transition of the term");
}

}  // namespace compadapt
