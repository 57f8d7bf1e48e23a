#include "compadapt/encode.hpp"

#include "compadapt/textio.hpp"

namespace compadapt {

int npb(const CompPtr& p, Semantics k) {
  switch (p->kind) {
    case Comp::Kind::Protected:
      return 1;
    case Comp::Kind::Par:
      return npb(p->a, k) + npb(p->b, k);
    case Comp::Kind::Restrict:
      return npb(p->a, k);
    case Comp::Kind::Inst:
      return npb(p->b, k);
    case Comp::Kind::Trans:
      return k == Semantics::Aborting ? npb(p->a, k) + 1 : 0;
    default:
      return 0;
  }
}

int nt(const CompPtr& p) {
  switch (p->kind) {
    case Comp::Kind::Trans:
      return nt(p->a) + 1;
    case Comp::Kind::Par:
      return nt(p->a) + nt(p->b);
    case Comp::Kind::Restrict:
      return nt(p->a);
    case Comp::Kind::Inst:
      return nt(p->b);
    default:
      return 0;
  }
}

namespace {

void scan_transactions(const CompPtr& p, std::vector<ContainmentTree>& out) {
  switch (p->kind) {
    case Comp::Kind::Trans: {
      ContainmentTree node;
      node.root = p->name;
      scan_transactions(p->a, node.children);
      out.push_back(std::move(node));
      break;
    }
    case Comp::Kind::Par:
      scan_transactions(p->a, out);
      scan_transactions(p->b, out);
      break;
    case Comp::Kind::Restrict:
      scan_transactions(p->a, out);
      break;
    case Comp::Kind::Inst:
      scan_transactions(p->b, out);
      break;
    default:
      break;
  }
}

void postorder(const ContainmentTree& t, std::vector<Name>& out) {
  for (const auto& c : t.children) postorder(c, out);
  out.push_back(t.root);
}

}  // namespace

int ContainmentTree::node_count() const {
  int n = 1;
  for (const auto& c : children) n += c.node_count();
  return n;
}

ContainmentTree containment_tree(const Name& t, const CompPtr& p) {
  ContainmentTree root;
  root.root = t;
  scan_transactions(p, root.children);
  return root;
}

std::vector<Name> top_transaction_names(const CompPtr& p) {
  std::vector<ContainmentTree> kids;
  scan_transactions(p, kids);
  std::vector<Name> out;
  out.reserve(kids.size());
  for (const auto& k : kids) out.push_back(k.root);
  return out;
}

AdaptPtr activation_process(const Name& t, const CompPtr& p) {
  std::vector<Name> order;
  postorder(containment_tree(t, p), order);
  AdaptPtr acc = adapt_nil();
  for (std::size_t i = order.size(); i-- > 0;) {
    const Name& c = order[i];
    acc = adapt_out(reserved(ReservedKind::L, c), adapt_in(reserved(ReservedKind::K, c), acc));
  }
  return acc;
}

AuxCounts aux_counts(const CompPtr& dflt, const EncodingConfig& cfg) {
  AuxCounts c;
  c.blocks = npb(dflt, cfg.semantics);
  if (cfg.semantics == Semantics::Preserving) c.transactions = nt(dflt);
  if (cfg.semantics == Semantics::Aborting) c.nested = top_transaction_names(dflt);
  return c;
}

namespace {

AdaptPtr enc(const CompPtr& p, const Path& rho, const EncodingConfig& cfg);

ProcVar numbered_var(const char* base, int i) {
  return ProcVar(std::string(base) + std::to_string(i));
}

// upd target(X1, ..., Xn => innermost).cont — the collection macro, each
// inner update nested in the body of the previous one.
AdaptPtr upd_chain(const Name& target, const std::vector<ProcVar>& vars, AdaptPtr innermost,
                   AdaptPtr cont) {
  AdaptPtr body = std::move(innermost);
  for (std::size_t i = vars.size(); i-- > 1;)
    body = adapt_upd(target, vars[i], body, adapt_nil());
  return adapt_upd(target, vars[0], body, std::move(cont));
}

AdaptPtr par_of(std::vector<AdaptPtr> parts) {
  if (parts.empty()) return adapt_nil();
  AdaptPtr acc = parts.back();
  for (std::size_t i = parts.size(); i-- > 1;) acc = adapt_par(parts[i - 1], acc);
  return acc;
}

// The dynamic compensation-swap machinery names, all indexed by the same
// path.
struct DynNames {
  Name u, v, v1, f, g;
};

DynNames dyn_names(const Path& rho0) {
  DynNames d;
  d.u = reserved(ReservedKind::U, rho0);
  d.v = reserved(ReservedKind::V, rho0);
  d.v1 = reserved(ReservedKind::V1, rho0);
  d.f = reserved(ReservedKind::F, rho0);
  d.g = reserved(ReservedKind::G, rho0);
  return d;
}

// f.(del v1).(del v).g — unpacks a compensation holder into the delivered
// compensation.
AdaptPtr unpack_chain(const DynNames& d) {
  return adapt_in(d.f, adapt_del(d.v1, adapt_del(d.v, adapt_in(d.g, adapt_nil()))));
}

// v[ upd u(Z => Z | v1[payload] | f...) ] — holds the current compensation.
AdaptPtr holder(const DynNames& d, AdaptPtr payload) {
  ProcVar z("Zc");
  AdaptPtr body =
      adapt_par(adapt_var(z), adapt_par(adapt_loc(d.v1, std::move(payload)), unpack_chain(d)));
  return adapt_loc(d.v, adapt_upd(d.u, z, body, adapt_nil()));
}

// u[~f.~g] — the anchor a delivered compensation block starts from in
// dynamic mode.
AdaptPtr anchor(const DynNames& d) {
  return adapt_loc(d.u, adapt_out(d.f, adapt_out(d.g, adapt_nil())));
}

}  // namespace

AdaptPtr gamma_chain(const Path& rho0, const std::vector<Name>& nested) {
  if (rho0.empty()) throw UsageError("gamma_chain: empty path");
  const Name& t = rho0.front();
  Name lt = reserved(ReservedKind::L, t);
  Name kt = reserved(ReservedKind::K, t);
  Name gt = reserved(ReservedKind::Gamma, t);
  AdaptPtr chain = adapt_kill(gt, adapt_nil());
  for (std::size_t i = nested.size(); i-- > 0;) {
    Name gi = reserved(ReservedKind::Gamma, nested[i]);
    ProcVar zi = numbered_var("Zr", static_cast<int>(i) + 1);
    AdaptPtr rearmed = adapt_loc(
        gi,
        adapt_restrict(
            lt, adapt_restrict(kt, adapt_par(adapt_var(zi),
                                             adapt_in(lt, adapt_out(kt, adapt_nil()))))));
    chain = adapt_upd(gi, zi, rearmed, chain);
  }
  return chain;
}

AdaptPtr aux_encode(const CompPtr& q, const Path& rho0, const AuxCounts& counts,
                    const EncodingConfig& cfg) {
  if (rho0.empty()) throw UsageError("aux_encode: the path must name the enclosing transaction");
  const Name& t = rho0.front();
  Path rho(rho0.begin() + 1, rho0.end());
  Name lt = reserved(ReservedKind::L, t);
  Name kt = reserved(ReservedKind::K, t);
  Name mt = reserved(ReservedKind::M, t);
  Name p_in = reserved(ReservedKind::P, rho0);
  Name p_out = reserved(ReservedKind::P, rho);
  Name beta_in = reserved(ReservedKind::Beta, rho0);
  Name beta_out = reserved(ReservedKind::Beta, rho);
  Name z = reserved(ReservedKind::Z, rho0);
  Name a_gate = reserved(ReservedKind::A, rho0);
  DynNames dyn = dyn_names(rho0);

  const int n = counts.blocks;
  const int m = cfg.semantics == Semantics::Preserving ? counts.transactions : 0;

  // What is delivered at p_rho as the compensation: the encoding itself, or
  // in dynamic mode an anchor filled in by the holder.
  AdaptPtr comp_block =
      adapt_loc(p_out, cfg.dynamic ? anchor(dyn) : enc(q, Path(), cfg));

  AdaptPtr kill_cont = cfg.semantics == Semantics::Aborting
                           ? gamma_chain(rho0, counts.nested)
                           : adapt_nil();
  AdaptPtr kill_part = adapt_in(mt, adapt_out(kt, adapt_kill(t, kill_cont)));

  AdaptPtr result;
  if (n == 0 && m == 0) {
    AdaptPtr release = adapt_out(
        mt, cfg.semantics == Semantics::Preserving ? adapt_in(a_gate, comp_block) : comp_block);
    result = adapt_par(adapt_in(lt, release), kill_part);
  } else {
    std::vector<AdaptPtr> bundle;
    std::vector<AdaptPtr> blocks;
    for (int i = 1; i <= n; ++i)
      blocks.push_back(adapt_loc(p_out, adapt_var(numbered_var("Xb", i))));
    std::vector<AdaptPtr> shells;
    for (int i = 1; i <= m; ++i)
      shells.push_back(adapt_loc(beta_out, adapt_var(numbered_var("Yt", i))));

    if (cfg.semantics == Semantics::Preserving) {
      // The a input gates the last collected group until the enclosing
      // beta shell has been deleted.
      if (m > 0) {
        for (auto& b : blocks) bundle.push_back(std::move(b));
        bundle.push_back(adapt_in(a_gate, par_of(std::move(shells))));
      } else {
        bundle.push_back(adapt_in(a_gate, par_of(std::move(blocks))));
      }
    } else {
      for (auto& b : blocks) bundle.push_back(std::move(b));
    }
    bundle.push_back(adapt_out(mt, comp_block));
    AdaptPtr bundled = par_of(std::move(bundle));

    AdaptPtr innermost;
    AdaptPtr cont;
    if (cfg.skip_escape_step) {
      innermost = bundled;
      cont = kill_part;
    } else {
      innermost = adapt_write(z, bundled, adapt_nil());
      cont = adapt_par(adapt_loc(z, adapt_nil()), kill_part);
    }

    std::vector<ProcVar> xs, ys;
    for (int i = 1; i <= n; ++i) xs.push_back(numbered_var("Xb", i));
    for (int i = 1; i <= m; ++i) ys.push_back(numbered_var("Yt", i));
    AdaptPtr chain;
    if (n > 0 && m > 0) {
      AdaptPtr beta_part = upd_chain(beta_in, ys, innermost, adapt_nil());
      chain = upd_chain(p_in, xs, beta_part, cont);
    } else if (n > 0) {
      chain = upd_chain(p_in, xs, innermost, cont);
    } else {
      chain = upd_chain(beta_in, ys, innermost, cont);
    }
    result = adapt_in(lt, chain);
  }

  if (cfg.dynamic) result = adapt_par(result, holder(dyn, enc(q, Path(), cfg)));
  return result;
}

namespace {

AdaptPtr enc_trans(const CompPtr& p, const Path& rho, const EncodingConfig& cfg) {
  const Name& t = p->name;
  Path rho0 = path_cons(t, rho);
  Name lt = reserved(ReservedKind::L, t);
  Name kt = reserved(ReservedKind::K, t);
  AdaptPtr body = adapt_loc(t, enc(p->a, rho0, cfg));
  AdaptPtr collector = aux_encode(p->b, rho0, aux_counts(p->a, cfg), cfg);

  switch (cfg.semantics) {
    case Semantics::Discarding: {
      AdaptPtr trigger = adapt_in(t, adapt_out(lt, adapt_in(kt, adapt_nil())));
      return adapt_par(body, adapt_par(collector, trigger));
    }
    case Semantics::Preserving: {
      Name j = reserved(ReservedKind::J, rho0);
      Name a_gate = reserved(ReservedKind::A, rho0);
      Name beta_out = reserved(ReservedKind::Beta, rho);
      AdaptPtr trigger = adapt_in(t, adapt_out(lt, adapt_in(kt, adapt_out(j, adapt_nil()))));
      AdaptPtr shell = adapt_loc(beta_out, adapt_par(body, adapt_par(collector, trigger)));
      AdaptPtr listener = adapt_in(j, adapt_del(beta_out, adapt_out(a_gate, adapt_nil())));
      return adapt_par(shell, listener);
    }
    case Semantics::Aborting: {
      Name gt = reserved(ReservedKind::Gamma, t);
      AdaptPtr trigger = adapt_loc(gt, adapt_in(t, activation_process(t, p->a)));
      return adapt_par(body, adapt_par(collector, trigger));
    }
  }
  return adapt_nil();
}

AdaptPtr enc_inst(const CompPtr& p, const Path& rho, const EncodingConfig& cfg) {
  ProcVar y = p->var;
  CompPtr r = p->a;
  // The target-side update binds y over the encoded continuation too;
  // rename when the continuation uses the same variable free.
  if (free_in(y, p->b)) {
    std::set<ProcVar> avoid(r->free_vars.begin(), r->free_vars.end());
    for (const ProcVar& v : p->b->free_vars) avoid.insert(v);
    avoid.insert(y);
    ProcVar y2 = fresh_var(y.text, avoid);
    r = substitute(r, y, comp_var(y2));
    y = y2;
  }
  DynNames dyn = dyn_names(rho);
  ProcVar x("Xo");
  AdaptPtr new_holder = holder(dyn, enc(r, Path(), cfg));
  AdaptPtr swap =
      adapt_out(dyn.g, adapt_upd(dyn.v, x, adapt_par(adapt_var(x), new_holder), adapt_nil()));
  AdaptPtr update_body = adapt_par(swap, enc(p->b, rho, cfg));
  AdaptPtr cont =
      adapt_out(dyn.f, adapt_par(adapt_loc(dyn.v, adapt_nil()), adapt_loc(dyn.v1, adapt_nil())));
  return adapt_par(adapt_loc(dyn.u, adapt_nil()), adapt_upd(dyn.v1, y, update_body, cont));
}

AdaptPtr enc(const CompPtr& p, const Path& rho, const EncodingConfig& cfg) {
  switch (p->kind) {
    case Comp::Kind::Nil:
      return adapt_nil();
    case Comp::Kind::In:
      return adapt_in(p->name, enc(p->a, rho, cfg));
    case Comp::Kind::Out:
      return adapt_out(p->name, enc(p->a, rho, cfg));
    case Comp::Kind::Repl:
      return adapt_repl(enc(p->a, rho, cfg));
    case Comp::Kind::Restrict:
      return adapt_restrict(p->name, enc(p->a, rho, cfg));
    case Comp::Kind::Par:
      return adapt_par(enc(p->a, rho, cfg), enc(p->b, rho, cfg));
    case Comp::Kind::Protected:
      return adapt_loc(reserved(ReservedKind::P, rho), enc(p->a, Path(), cfg));
    case Comp::Kind::Trans:
      return enc_trans(p, rho, cfg);
    case Comp::Kind::Var:
      if (!cfg.dynamic)
        throw UsageError("static encoding cannot translate process variable " + p->var.text);
      return adapt_var(p->var);
    case Comp::Kind::Inst:
      if (!cfg.dynamic)
        throw UsageError("static encoding cannot translate compensation update: " +
                         print_comp(p));
      return enc_inst(p, rho, cfg);
  }
  return adapt_nil();
}

}  // namespace

AdaptPtr encode(const CompPtr& p, const EncodingConfig& cfg) {
  if (!well_formed(p)) throw UsageError("encode: term is not well-formed");
  return enc(p, cfg.path, cfg);
}

}  // namespace compadapt
