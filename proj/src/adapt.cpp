#include "compadapt/adapt.hpp"

#include <algorithm>
#include <map>
#include <set>
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

AdaptPtr make(Adapt::Kind k, Name n, ProcVar v, AdaptPtr a, AdaptPtr b) {
  auto node = std::make_shared<Adapt>();
  node->kind = k;
  node->name = std::move(n);
  node->var = std::move(v);
  node->a = std::move(a);
  node->b = std::move(b);
  std::uint64_t h = fnv1a("adapt");
  h = hash_mix(h, static_cast<std::uint64_t>(k));
  h = hash_mix(h, fnv1a(node->name.key));
  h = hash_mix(h, fnv1a(node->var.text));
  if (node->a) h = hash_mix(h, node->a->hash);
  if (node->b) h = hash_mix(h, node->b->hash);
  node->hash = h;
  node->size = 1 + (node->a ? node->a->size : 0) + (node->b ? node->b->size : 0);

  const Adapt* pa = node->a.get();
  const Adapt* pb = node->b.get();
  switch (k) {
    case Adapt::Kind::Nil:
      break;
    case Adapt::Kind::In:
    case Adapt::Kind::Out:
    case Adapt::Kind::Loc:
      node->free_names = add_name(pa->free_names, node->name);
      node->free_vars = pa->free_vars;
      break;
    case Adapt::Kind::Upd:
      node->free_names = add_name(merge_names(pa->free_names, pb->free_names), node->name);
      node->free_vars = merge_vars(remove_var(pa->free_vars, node->var), pb->free_vars);
      break;
    case Adapt::Kind::Repl:
      node->free_names = pa->free_names;
      node->free_vars = pa->free_vars;
      break;
    case Adapt::Kind::Restrict:
      node->free_names = remove_name(pa->free_names, node->name);
      node->free_vars = pa->free_vars;
      break;
    case Adapt::Kind::Par:
      node->free_names = merge_names(pa->free_names, pb->free_names);
      node->free_vars = merge_vars(pa->free_vars, pb->free_vars);
      break;
    case Adapt::Kind::Var:
      node->free_vars = {node->var};
      break;
  }
  return node;
}

}  // namespace

AdaptPtr adapt_nil() {
  static const AdaptPtr nil = make(Adapt::Kind::Nil, Name(), ProcVar(), nullptr, nullptr);
  return nil;
}
AdaptPtr adapt_in(const Name& n, AdaptPtr cont) {
  return make(Adapt::Kind::In, n, ProcVar(), std::move(cont), nullptr);
}
AdaptPtr adapt_out(const Name& n, AdaptPtr cont) {
  return make(Adapt::Kind::Out, n, ProcVar(), std::move(cont), nullptr);
}
AdaptPtr adapt_upd(const Name& l, const ProcVar& x, AdaptPtr body, AdaptPtr cont) {
  return make(Adapt::Kind::Upd, l, x, std::move(body), std::move(cont));
}
AdaptPtr adapt_loc(const Name& l, AdaptPtr p) {
  return make(Adapt::Kind::Loc, l, ProcVar(), std::move(p), nullptr);
}
AdaptPtr adapt_repl(AdaptPtr p) {
  return make(Adapt::Kind::Repl, Name(), ProcVar(), std::move(p), nullptr);
}
AdaptPtr adapt_restrict(const Name& n, AdaptPtr p) {
  return make(Adapt::Kind::Restrict, n, ProcVar(), std::move(p), nullptr);
}
AdaptPtr adapt_par(AdaptPtr l, AdaptPtr r) {
  return make(Adapt::Kind::Par, Name(), ProcVar(), std::move(l), std::move(r));
}
AdaptPtr adapt_var(const ProcVar& v) {
  return make(Adapt::Kind::Var, Name(), v, nullptr, nullptr);
}

AdaptPtr adapt_kill(const Name& l, AdaptPtr cont) {
  return adapt_upd(l, ProcVar("Ydrop"), adapt_nil(), std::move(cont));
}
AdaptPtr adapt_write(const Name& l, AdaptPtr p, AdaptPtr cont) {
  ProcVar y("Ydrop");
  if (free_in(y, p)) {
    std::set<ProcVar> avoid(p->free_vars.begin(), p->free_vars.end());
    y = fresh_var("Ydrop", avoid);
  }
  return adapt_upd(l, y, std::move(p), std::move(cont));
}
AdaptPtr adapt_del(const Name& l, AdaptPtr cont) {
  ProcVar x("Xkeep");
  return adapt_upd(l, x, adapt_var(x), std::move(cont));
}

int adapt_compare(const AdaptPtr& x, const AdaptPtr& y) {
  if (x.get() == y.get()) return 0;
  if (x->kind != y->kind) return x->kind < y->kind ? -1 : 1;
  if (int c = x->name.key.compare(y->name.key)) return c < 0 ? -1 : 1;
  if (int c = x->var.text.compare(y->var.text)) return c < 0 ? -1 : 1;
  if (!!x->a != !!y->a) return x->a ? 1 : -1;
  if (x->a)
    if (int c = adapt_compare(x->a, y->a)) return c;
  if (!!x->b != !!y->b) return x->b ? 1 : -1;
  if (x->b)
    if (int c = adapt_compare(x->b, y->b)) return c;
  return 0;
}

bool adapt_equal(const AdaptPtr& x, const AdaptPtr& y) {
  if (x.get() == y.get()) return true;
  if (x->hash != y->hash || x->size != y->size) return false;
  return adapt_compare(x, y) == 0;
}

namespace {

std::set<Name> name_set(const std::vector<Name>& v) { return {v.begin(), v.end()}; }

AdaptPtr rename_free_name(const AdaptPtr& p, const Name& from, const Name& to) {
  if (!free_in(from, p)) return p;
  switch (p->kind) {
    case Adapt::Kind::In:
      return adapt_in(p->name == from ? to : p->name, rename_free_name(p->a, from, to));
    case Adapt::Kind::Out:
      return adapt_out(p->name == from ? to : p->name, rename_free_name(p->a, from, to));
    case Adapt::Kind::Upd:
      return adapt_upd(p->name == from ? to : p->name, p->var, rename_free_name(p->a, from, to),
                       rename_free_name(p->b, from, to));
    case Adapt::Kind::Loc:
      return adapt_loc(p->name == from ? to : p->name, rename_free_name(p->a, from, to));
    case Adapt::Kind::Repl:
      return adapt_repl(rename_free_name(p->a, from, to));
    case Adapt::Kind::Restrict:
      return adapt_restrict(p->name, rename_free_name(p->a, from, to));
    case Adapt::Kind::Par:
      return adapt_par(rename_free_name(p->a, from, to), rename_free_name(p->b, from, to));
    default:
      return p;
  }
}

AdaptPtr rename_free_var(const AdaptPtr& p, const ProcVar& from, const ProcVar& to) {
  if (!free_in(from, p)) return p;
  switch (p->kind) {
    case Adapt::Kind::Var:
      return adapt_var(to);
    case Adapt::Kind::In:
      return adapt_in(p->name, rename_free_var(p->a, from, to));
    case Adapt::Kind::Out:
      return adapt_out(p->name, rename_free_var(p->a, from, to));
    case Adapt::Kind::Upd: {
      AdaptPtr body = p->var == from ? p->a : rename_free_var(p->a, from, to);
      return adapt_upd(p->name, p->var, body, rename_free_var(p->b, from, to));
    }
    case Adapt::Kind::Loc:
      return adapt_loc(p->name, rename_free_var(p->a, from, to));
    case Adapt::Kind::Repl:
      return adapt_repl(rename_free_var(p->a, from, to));
    case Adapt::Kind::Restrict:
      return adapt_restrict(p->name, rename_free_var(p->a, from, to));
    case Adapt::Kind::Par:
      return adapt_par(rename_free_var(p->a, from, to), rename_free_var(p->b, from, to));
    default:
      return p;
  }
}

}  // namespace

AdaptPtr substitute(const AdaptPtr& p, const ProcVar& x, const AdaptPtr& q) {
  if (!free_in(x, p)) return p;
  switch (p->kind) {
    case Adapt::Kind::Var:
      return q;
    case Adapt::Kind::In:
      return adapt_in(p->name, substitute(p->a, x, q));
    case Adapt::Kind::Out:
      return adapt_out(p->name, substitute(p->a, x, q));
    case Adapt::Kind::Loc:
      return adapt_loc(p->name, substitute(p->a, x, q));
    case Adapt::Kind::Repl:
      return adapt_repl(substitute(p->a, x, q));
    case Adapt::Kind::Par:
      return adapt_par(substitute(p->a, x, q), substitute(p->b, x, q));
    case Adapt::Kind::Restrict: {
      Name a = p->name;
      AdaptPtr body = p->a;
      if (free_in(a, q)) {
        std::set<Name> avoid = name_set(q->free_names);
        for (const Name& n : body->free_names) avoid.insert(n);
        avoid.insert(a);
        Name a2 = fresh_name(a.key, avoid);
        body = rename_free_name(body, a, a2);
        a = a2;
      }
      return adapt_restrict(a, substitute(body, x, q));
    }
    case Adapt::Kind::Upd: {
      ProcVar y = p->var;
      AdaptPtr body = p->a;
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
      return adapt_upd(p->name, y, body, substitute(p->b, x, q));
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

int ainv_compare(const AdaptPtr& x, Stacks& sx, const AdaptPtr& y, Stacks& sy) {
  if (x->kind != y->kind) return x->kind < y->kind ? -1 : 1;
  switch (x->kind) {
    case Adapt::Kind::Nil:
      return 0;
    case Adapt::Kind::In:
    case Adapt::Kind::Out:
    case Adapt::Kind::Loc:
      if (int c = cmp_name_ainv(x->name, sx, y->name, sy)) return c;
      return ainv_compare(x->a, sx, y->a, sy);
    case Adapt::Kind::Upd: {
      if (int c = cmp_name_ainv(x->name, sx, y->name, sy)) return c;
      sx.vars.push_back(x->var);
      sy.vars.push_back(y->var);
      int c = ainv_compare(x->a, sx, y->a, sy);
      sx.vars.pop_back();
      sy.vars.pop_back();
      if (c) return c;
      return ainv_compare(x->b, sx, y->b, sy);
    }
    case Adapt::Kind::Repl:
      return ainv_compare(x->a, sx, y->a, sy);
    case Adapt::Kind::Restrict: {
      sx.names.push_back(x->name);
      sy.names.push_back(y->name);
      int c = ainv_compare(x->a, sx, y->a, sy);
      sx.names.pop_back();
      sy.names.pop_back();
      return c;
    }
    case Adapt::Kind::Par:
      if (int c = ainv_compare(x->a, sx, y->a, sy)) return c;
      return ainv_compare(x->b, sx, y->b, sy);
    case Adapt::Kind::Var:
      return cmp_var_ainv(x->var, sx, y->var, sy);
  }
  return 0;
}

AdaptPtr rebuild_par(std::vector<AdaptPtr> kids) {
  if (kids.empty()) return adapt_nil();
  AdaptPtr acc = kids.back();
  for (std::size_t i = kids.size() - 1; i-- > 0;) acc = adapt_par(kids[i], acc);
  return acc;
}

void collect_par(const AdaptPtr& p, std::vector<AdaptPtr>& out) {
  if (p->kind == Adapt::Kind::Par) {
    collect_par(p->a, out);
    collect_par(p->b, out);
  } else {
    out.push_back(p);
  }
}

AdaptPtr resort(const AdaptPtr& p, Stacks& st) {
  switch (p->kind) {
    case Adapt::Kind::Nil:
    case Adapt::Kind::Var:
      return p;
    case Adapt::Kind::In:
      return adapt_in(p->name, resort(p->a, st));
    case Adapt::Kind::Out:
      return adapt_out(p->name, resort(p->a, st));
    case Adapt::Kind::Loc:
      return adapt_loc(p->name, resort(p->a, st));
    case Adapt::Kind::Repl:
      return adapt_repl(resort(p->a, st));
    case Adapt::Kind::Upd: {
      st.vars.push_back(p->var);
      AdaptPtr body = resort(p->a, st);
      st.vars.pop_back();
      return adapt_upd(p->name, p->var, body, resort(p->b, st));
    }
    case Adapt::Kind::Restrict: {
      st.names.push_back(p->name);
      AdaptPtr body = resort(p->a, st);
      st.names.pop_back();
      return adapt_restrict(p->name, body);
    }
    case Adapt::Kind::Par: {
      std::vector<AdaptPtr> kids;
      collect_par(p, kids);
      for (auto& k : kids) k = resort(k, st);
      std::stable_sort(kids.begin(), kids.end(), [&](const AdaptPtr& a, const AdaptPtr& b) {
        return ainv_compare(a, st, b, st) < 0;
      });
      return rebuild_par(std::move(kids));
    }
  }
  return p;
}

int first_use(const AdaptPtr& p, const Name& n, int& counter) {
  if (!free_in(n, p)) {
    counter += static_cast<int>(p->size);
    return -1;
  }
  int here = counter++;
  switch (p->kind) {
    case Adapt::Kind::In:
    case Adapt::Kind::Out:
    case Adapt::Kind::Loc:
      if (p->name == n) return here;
      return first_use(p->a, n, counter);
    case Adapt::Kind::Upd: {
      if (p->name == n) return here;
      int r = first_use(p->a, n, counter);
      if (r >= 0) return r;
      return first_use(p->b, n, counter);
    }
    case Adapt::Kind::Par: {
      int r = first_use(p->a, n, counter);
      if (r >= 0) return r;
      return first_use(p->b, n, counter);
    }
    case Adapt::Kind::Repl:
    case Adapt::Kind::Restrict:
      return first_use(p->a, n, counter);
    default:
      return -1;
  }
}

AdaptPtr attach_restricts(std::vector<Name> binders, AdaptPtr body, Stacks& st) {
  while (body->kind == Adapt::Kind::Restrict) {
    binders.push_back(body->name);
    body = body->a;
  }
  while (!binders.empty() && body->kind == Adapt::Kind::Nil) binders.pop_back();
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
  if (body->kind == Adapt::Kind::Nil) return body;

  std::vector<std::pair<std::vector<Name>, AdaptPtr>> seen;
  std::vector<Name> order = binders;
  AdaptPtr cur = body;
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
      std::size_t best = 0;
      for (std::size_t i = 1; i < seen.size(); ++i) {
        Stacks si = st, sb = st;
        for (const Name& n : seen[i].first) si.names.push_back(n);
        for (const Name& n : seen[best].first) sb.names.push_back(n);
        if (ainv_compare(seen[i].second, si, seen[best].second, sb) < 0) best = i;
      }
      order = seen[best].first;
      cur = seen[best].second;
      break;
    }
    order = order2;
  }

  AdaptPtr out = cur;
  for (std::size_t i = order.size(); i-- > 0;) out = adapt_restrict(order[i], out);
  return out;
}

AdaptPtr norm_core(const AdaptPtr& p, Stacks& st) {
  switch (p->kind) {
    case Adapt::Kind::Nil:
    case Adapt::Kind::Var:
      return p;
    case Adapt::Kind::In:
      return adapt_in(p->name, norm_core(p->a, st));
    case Adapt::Kind::Out:
      return adapt_out(p->name, norm_core(p->a, st));
    case Adapt::Kind::Repl:
      return adapt_repl(norm_core(p->a, st));
    case Adapt::Kind::Upd: {
      st.vars.push_back(p->var);
      AdaptPtr body = norm_core(p->a, st);
      st.vars.pop_back();
      return adapt_upd(p->name, p->var, body, norm_core(p->b, st));
    }
    case Adapt::Kind::Loc: {
      AdaptPtr body = norm_core(p->a, st);
      // (new a) l[P] == l[(new a) P]: hoist out, renaming a if it is l.
      std::vector<Name> hoisted;
      while (body->kind == Adapt::Kind::Restrict) {
        Name a = body->name;
        AdaptPtr inner = body->a;
        if (a == p->name) {
          std::set<Name> avoid = name_set(inner->free_names);
          avoid.insert(p->name);
          for (const Name& n : hoisted) avoid.insert(n);
          Name a2 = fresh_name(a.key, avoid);
          inner = rename_free_name(inner, a, a2);
          a = a2;
        }
        hoisted.push_back(a);
        body = inner;
      }
      AdaptPtr node = adapt_loc(p->name, body);
      if (hoisted.empty()) return node;
      return attach_restricts(std::move(hoisted), node, st);
    }
    case Adapt::Kind::Restrict: {
      st.names.push_back(p->name);
      AdaptPtr body = norm_core(p->a, st);
      st.names.pop_back();
      return attach_restricts({p->name}, body, st);
    }
    case Adapt::Kind::Par: {
      std::vector<AdaptPtr> raw;
      collect_par(p, raw);
      std::vector<AdaptPtr> kids;
      for (auto& k : raw) kids.push_back(norm_core(k, st));
      std::vector<Name> binders;
      std::set<Name> avoid;
      for (auto& k : kids)
        for (const Name& n : k->free_names) avoid.insert(n);
      for (const Name& n : st.names) avoid.insert(n);
      std::vector<AdaptPtr> flat;
      for (auto& k : kids) {
        AdaptPtr cur = k;
        while (cur->kind == Adapt::Kind::Restrict) {
          Name a = cur->name;
          AdaptPtr body = cur->a;
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
        if (cur->kind == Adapt::Kind::Par)
          collect_par(cur, flat);
        else if (cur->kind != Adapt::Kind::Nil)
          flat.push_back(cur);
      }
      for (const Name& n : binders) st.names.push_back(n);
      std::stable_sort(flat.begin(), flat.end(), [&](const AdaptPtr& a, const AdaptPtr& b) {
        return ainv_compare(a, st, b, st) < 0;
      });
      for (std::size_t i = 0; i < binders.size(); ++i) st.names.pop_back();
      AdaptPtr par = rebuild_par(std::move(flat));
      if (binders.empty()) return par;
      return attach_restricts(std::move(binders), par, st);
    }
  }
  return p;
}

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

AdaptPtr alpha_rec(const AdaptPtr& p, AlphaCtx& ctx, std::map<Name, Name>& nmap,
                   std::map<ProcVar, ProcVar>& vmap, std::size_t ndepth, std::size_t vdepth) {
  auto look = [&](const Name& n) {
    auto it = nmap.find(n);
    return it == nmap.end() ? n : it->second;
  };
  switch (p->kind) {
    case Adapt::Kind::Nil:
      return p;
    case Adapt::Kind::Var: {
      auto it = vmap.find(p->var);
      return it == vmap.end() ? p : adapt_var(it->second);
    }
    case Adapt::Kind::In:
      return adapt_in(look(p->name), alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Adapt::Kind::Out:
      return adapt_out(look(p->name), alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Adapt::Kind::Loc:
      return adapt_loc(look(p->name), alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Adapt::Kind::Repl:
      return adapt_repl(alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth));
    case Adapt::Kind::Par:
      return adapt_par(alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth),
                       alpha_rec(p->b, ctx, nmap, vmap, ndepth, vdepth));
    case Adapt::Kind::Restrict: {
      Name nn = ctx.binder_name(ndepth);
      auto saved = nmap.find(p->name);
      Name old;
      bool had = saved != nmap.end();
      if (had) old = saved->second;
      nmap[p->name] = nn;
      AdaptPtr body = alpha_rec(p->a, ctx, nmap, vmap, ndepth + 1, vdepth);
      if (had)
        nmap[p->name] = old;
      else
        nmap.erase(p->name);
      return adapt_restrict(nn, body);
    }
    case Adapt::Kind::Upd: {
      ProcVar nv = ctx.binder_var(vdepth);
      auto saved = vmap.find(p->var);
      ProcVar old;
      bool had = saved != vmap.end();
      if (had) old = saved->second;
      vmap[p->var] = nv;
      AdaptPtr body = alpha_rec(p->a, ctx, nmap, vmap, ndepth, vdepth + 1);
      if (had)
        vmap[p->var] = old;
      else
        vmap.erase(p->var);
      return adapt_upd(look(p->name), nv, body, alpha_rec(p->b, ctx, nmap, vmap, ndepth, vdepth));
    }
  }
  return p;
}

}  // namespace

AdaptPtr normalize(const AdaptPtr& p) {
  // Keyed by owning pointers: keeping keys alive stops address reuse from
  // aliasing distinct terms.
  thread_local std::unordered_map<AdaptPtr, AdaptPtr> cache;
  if (cache.size() > 400000) cache.clear();
  auto hit = cache.find(p);
  if (hit != cache.end()) return hit->second;

  Stacks st;
  AdaptPtr core = norm_core(p, st);
  AlphaCtx ctx;
  for (const Name& n : core->free_names) ctx.avoid_names.insert(n.key);
  for (const ProcVar& v : core->free_vars) ctx.avoid_vars.insert(v.text);
  std::map<Name, Name> nmap;
  std::map<ProcVar, ProcVar> vmap;
  AdaptPtr out = alpha_rec(core, ctx, nmap, vmap, 0, 0);
  cache.emplace(p, out);
  cache.emplace(out, out);
  return out;
}

bool congruent(const AdaptPtr& p, const AdaptPtr& q) {
  return adapt_equal(normalize(p), normalize(q));
}

// ---------------------------------------------------------------------------
// Reduction semantics.
// ---------------------------------------------------------------------------

namespace {

// One bounded unfolding of every reachable replication: !P becomes P | !P.
AdaptPtr unfold_repls(const AdaptPtr& p) {
  switch (p->kind) {
    case Adapt::Kind::Par:
      return adapt_par(unfold_repls(p->a), unfold_repls(p->b));
    case Adapt::Kind::Loc:
      return adapt_loc(p->name, unfold_repls(p->a));
    case Adapt::Kind::Restrict:
      return adapt_restrict(p->name, unfold_repls(p->a));
    case Adapt::Kind::Repl:
      return adapt_par(unfold_repls(p->a), p);
    default:
      return p;
  }
}

// An unguarded occurrence: reachable through Par, Loc and Restrict only.
struct Occurrence {
  const Adapt* node;
  std::vector<int> path;      // child indices from the root (a=0, b=1)
  const Adapt* binder;        // restriction binding the relevant name, or null
};

void collect_occurrences(const AdaptPtr& p, std::vector<int>& path,
                         std::vector<std::pair<Name, const Adapt*>>& binders,
                         std::vector<Occurrence>& outs, std::vector<Occurrence>& ins,
                         std::vector<Occurrence>& upds, std::vector<Occurrence>& locs) {
  auto resolve = [&](const Name& n) -> const Adapt* {
    for (auto it = binders.rbegin(); it != binders.rend(); ++it)
      if (it->first == n) return it->second;
    return nullptr;
  };
  switch (p->kind) {
    case Adapt::Kind::Out:
      outs.push_back({p.get(), path, resolve(p->name)});
      break;
    case Adapt::Kind::In:
      ins.push_back({p.get(), path, resolve(p->name)});
      break;
    case Adapt::Kind::Upd:
      upds.push_back({p.get(), path, resolve(p->name)});
      break;
    case Adapt::Kind::Loc:
      locs.push_back({p.get(), path, resolve(p->name)});
      path.push_back(0);
      collect_occurrences(p->a, path, binders, outs, ins, upds, locs);
      path.pop_back();
      break;
    case Adapt::Kind::Par:
      path.push_back(0);
      collect_occurrences(p->a, path, binders, outs, ins, upds, locs);
      path.pop_back();
      path.push_back(1);
      collect_occurrences(p->b, path, binders, outs, ins, upds, locs);
      path.pop_back();
      break;
    case Adapt::Kind::Restrict:
      binders.emplace_back(p->name, p.get());
      path.push_back(0);
      collect_occurrences(p->a, path, binders, outs, ins, upds, locs);
      path.pop_back();
      binders.pop_back();
      break;
    default:
      break;
  }
}

bool path_prefix(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() > b.size()) return false;
  return std::equal(a.begin(), a.end(), b.begin());
}

// Replaces the subterm at `path`, renaming restriction binders from depth
// `fresh_from` on that clash with `protect` (names that move into scope with
// the replacement).
AdaptPtr replace_at(const AdaptPtr& p, const std::vector<int>& path, std::size_t i,
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
    node = adapt_restrict(fresh, rename_free_name(node->a, node->name, fresh));
  }
  int c = path[i];
  AdaptPtr a = node->a, b = node->b;
  if (c == 0)
    a = replace_at(node->a, path, i + 1, repl, protect, fresh_from);
  else
    b = replace_at(node->b, path, i + 1, repl, protect, fresh_from);
  switch (node->kind) {
    case Adapt::Kind::In: return adapt_in(node->name, a);
    case Adapt::Kind::Out: return adapt_out(node->name, a);
    case Adapt::Kind::Upd: return adapt_upd(node->name, node->var, a, b);
    case Adapt::Kind::Loc: return adapt_loc(node->name, a);
    case Adapt::Kind::Repl: return adapt_repl(a);
    case Adapt::Kind::Restrict: return adapt_restrict(node->name, a);
    case Adapt::Kind::Par: return adapt_par(a, b);
    default:
      return node;
  }
}

const Adapt* node_at(const AdaptPtr& p, const std::vector<int>& path) {
  const Adapt* cur = p.get();
  for (int c : path) cur = c == 0 ? cur->a.get() : cur->b.get();
  return cur;
}

}  // namespace

std::vector<AdaptPtr> reductions(const AdaptPtr& p, int repl_bound) {
  AdaptPtr u = normalize(p);
  for (int i = 0; i < repl_bound; ++i) u = unfold_repls(u);

  std::vector<Occurrence> outs, ins, upds, locs;
  std::vector<int> path;
  std::vector<std::pair<Name, const Adapt*>> binders;
  collect_occurrences(u, path, binders, outs, ins, upds, locs);

  std::vector<AdaptPtr> results;
  auto add_result = [&](const AdaptPtr& t) {
    AdaptPtr n = normalize(t);
    for (const auto& r : results)
      if (adapt_equal(r, n)) return;
    results.push_back(n);
  };

  // R-I/O.
  for (const auto& o : outs)
    for (const auto& i : ins) {
      if (o.node->name != i.node->name || o.binder != i.binder) continue;
      AdaptPtr r = replace_at(u, o.path, 0, o.node->a, nullptr, 0);
      r = replace_at(r, i.path, 0, i.node->a, nullptr, 0);
      add_result(r);
    }

  // R-Upd.
  for (const auto& up : upds)
    for (const auto& lo : locs) {
      if (up.node->name != lo.node->name || up.binder != lo.binder) continue;
      if (path_prefix(up.path, lo.path) || path_prefix(lo.path, up.path)) continue;
      AdaptPtr content = lo.node->a;
      const Adapt* upn = up.node;
      AdaptPtr body = upn->a;
      AdaptPtr installed = substitute(body, upn->var, content);
      // The update body crosses into the location's scope: freshen binders
      // below the fork point that would capture its free names.
      std::size_t fork = 0;
      while (fork < up.path.size() && fork < lo.path.size() && up.path[fork] == lo.path[fork])
        ++fork;
      AdaptPtr r = replace_at(u, lo.path, 0, installed, &body->free_names, fork);
      r = replace_at(r, up.path, 0, upn->b, nullptr, 0);
      add_result(r);
    }

  std::sort(results.begin(), results.end(),
            [](const AdaptPtr& a, const AdaptPtr& b) { return adapt_compare(a, b) < 0; });
  return results;
}

std::vector<Barb> barbs(const AdaptPtr& p) {
  std::vector<Barb> out;
  switch (p->kind) {
    case Adapt::Kind::In:
      out.push_back({p->name, false});
      return out;
    case Adapt::Kind::Out:
      out.push_back({p->name, true});
      return out;
    case Adapt::Kind::Loc:
    case Adapt::Kind::Repl:
      return barbs(p->a);
    case Adapt::Kind::Restrict: {
      std::vector<Barb> inner = barbs(p->a);
      for (auto& b : inner)
        if (b.name != p->name) out.push_back(b);
      return out;
    }
    case Adapt::Kind::Par: {
      std::vector<Barb> l = barbs(p->a), r = barbs(p->b);
      std::vector<Barb> m;
      m.reserve(l.size() + r.size());
      std::merge(l.begin(), l.end(), r.begin(), r.end(), std::back_inserter(m));
      m.erase(std::unique(m.begin(), m.end()), m.end());
      return m;
    }
    default:
      return out;
  }
}

int ReductionGraph::find(const AdaptPtr& normalized) const {
  auto it = index_.find(normalized->hash);
  if (it == index_.end()) return -1;
  for (int i : it->second)
    if (adapt_equal(states[static_cast<std::size_t>(i)], normalized)) return i;
  return -1;
}

ReductionGraph reachable(const AdaptPtr& p, int depth_bound, int repl_bound,
                         std::size_t max_states) {
  ReductionGraph g;
  AdaptPtr root = normalize(p);
  g.states.push_back(root);
  g.edges.emplace_back();
  g.depth.push_back(0);
  g.index_[root->hash].push_back(0);

  std::size_t head = 0;
  while (head < g.states.size()) {
    int d = g.depth[head];
    if (d >= depth_bound) {
      // Unexpanded frontier: the graph is truncated if anything reduces.
      if (!reductions(g.states[head], repl_bound).empty()) g.truncated = true;
      ++head;
      continue;
    }
    for (const AdaptPtr& next : reductions(g.states[head], repl_bound)) {
      int id = g.find(next);
      if (id < 0) {
        if (g.states.size() >= max_states) {
          g.truncated = true;
          continue;
        }
        id = static_cast<int>(g.states.size());
        g.states.push_back(next);
        g.edges.emplace_back();
        g.depth.push_back(d + 1);
        g.index_[next->hash].push_back(id);
      }
      g.edges[head].push_back(id);
    }
    ++head;
  }
  return g;
}

}  // namespace compadapt
