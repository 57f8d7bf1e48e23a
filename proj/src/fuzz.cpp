#include <functional>

#include "compadapt/fuzz.hpp"

#include <algorithm>

namespace compadapt {

namespace {

struct Rng {
  std::uint64_t s;
  std::uint64_t next() {
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  int below(int n) { return n <= 1 ? 0 : static_cast<int>(next() % static_cast<unsigned>(n)); }
  bool chance(int pct) { return below(100) < pct; }
};

struct Flags {
  int depth = 0;              // transaction nesting
  bool under_prefix = false;  // no transactions / protected blocks here
  bool inst_ok = false;       // a compensation update wires to the enclosing transaction
  bool naked_in_abortable = false;
  bool in_block = false;
};

struct Gen {
  const GenConfig& cfg;
  Rng rng;
  int top_counter = 0;
  int nested_counter = 0;
  int restrict_counter = 0;
  int var_counter = 0;
  std::vector<Name> top_names;
  std::vector<Name> restricted;

  Name channel() {
    int pool = std::max(1, cfg.alphabet) + static_cast<int>(restricted.size());
    int i = rng.below(pool);
    if (i < std::max(1, cfg.alphabet)) {
      if (i < 26) return Name(std::string(1, static_cast<char>('a' + i)));
      return Name("a" + std::to_string(i));
    }
    return restricted[static_cast<std::size_t>(i - std::max(1, cfg.alphabet))];
  }

  Name fresh_top() {
    Name n("t" + std::to_string(top_counter++));
    top_names.push_back(n);
    return n;
  }
  Name fresh_nested() { return Name("s" + std::to_string(nested_counter++)); }

  // Abort signals target only abortable (outermost, unprotected)
  // transactions.
  bool have_abort_target() const { return !top_names.empty(); }
  Name abort_target() { return top_names[static_cast<std::size_t>(rng.below(
      static_cast<int>(top_names.size())))]; }

  CompPtr gen(int budget, Flags f) {
    if (budget <= 1) return comp_nil();
    int w_nil = 4;
    int w_in = 18;
    int w_out = 18;
    int w_par = budget >= 4 ? 22 : 0;
    int w_prot = (!f.under_prefix && budget >= 2) ? (f.depth > 0 ? 18 : 9) : 0;
    bool trans_ok = !f.under_prefix && budget >= 4 && f.depth < cfg.max_nesting &&
                    !(cfg.semantics == Semantics::Preserving && f.naked_in_abortable);
    int w_trans = trans_ok ? 16 : 0;
    int w_restr = budget >= 3 ? 5 : 0;
    int w_inst = (cfg.allow_dynamic && f.inst_ok && budget >= 3) ? 16 : 0;
    int w_repl = (cfg.allow_replication && budget >= 2) ? 3 : 0;

    int total = w_nil + w_in + w_out + w_par + w_prot + w_trans + w_restr + w_inst + w_repl;
    int pick = rng.below(total);

    if ((pick -= w_nil) < 0) return comp_nil();
    if ((pick -= w_in) < 0) {
      Flags g = f;
      g.under_prefix = true;
      return comp_in(channel(), gen(budget - 1, g));
    }
    if ((pick -= w_out) < 0) {
      Flags g = f;
      g.under_prefix = true;
      Name n = (have_abort_target() && rng.chance(30)) ? abort_target() : channel();
      return comp_out(n, gen(budget - 1, g));
    }
    if ((pick -= w_par) < 0) {
      int left = 1 + rng.below(budget - 2);
      return comp_par(gen(left, f), gen(budget - 1 - left, f));
    }
    if ((pick -= w_prot) < 0) {
      Flags g = f;
      g.inst_ok = false;
      g.naked_in_abortable = false;
      g.in_block = true;
      return comp_protected(gen(budget - 1, g));
    }
    if ((pick -= w_trans) < 0) return gen_trans(budget, f);
    if ((pick -= w_restr) < 0) {
      Name r("r" + std::to_string(restrict_counter++));
      restricted.push_back(r);
      Flags g = f;
      g.inst_ok = false;
      CompPtr body = gen(budget - 1, g);
      restricted.pop_back();
      return comp_restrict(r, body);
    }
    if ((pick -= w_inst) < 0) return gen_inst(budget, f);
    // Replication.
    Flags g = f;
    g.under_prefix = true;  // keep bodies prefix-only so graphs stay finite
    return comp_repl(gen(std::min(budget - 1, 3), g));
  }

  CompPtr gen_trans(int budget, Flags f) {
    bool abortable = f.depth == 0 && !f.in_block;
    Name name = abortable ? fresh_top() : fresh_nested();
    int comp_budget = 1 + rng.below(std::max(1, budget / 3));
    int dflt_budget = budget - 1 - comp_budget;
    Flags g = f;
    g.depth = f.depth + 1;
    g.inst_ok = cfg.allow_dynamic;
    if (abortable) g.naked_in_abortable = true;
    CompPtr dflt = gen(std::max(1, dflt_budget), g);
    CompPtr comp = gen_compensation(comp_budget);
    return comp_trans(name, dflt, comp);
  }

  // Compensations stay static and signal-free.
  CompPtr gen_compensation(int budget) {
    if (budget <= 1) return comp_nil();
    int pick = rng.below(10);
    if (pick < 4) return comp_in(channel(), gen_compensation(budget - 1));
    if (pick < 6) return comp_out(channel(), gen_compensation(budget - 1));
    if (pick < 8 && budget >= 3) {
      int left = 1 + rng.below(budget - 2);
      return comp_par(gen_compensation(left), gen_compensation(budget - 1 - left));
    }
    if (pick < 9) return comp_protected(gen_compensation(budget - 1));
    return comp_nil();
  }

  // Update bodies are plain CCS over the bound variable. The variable only
  // occurs unguarded: installing a compensation with protected blocks into
  // a guarded position would leave the transaction ill-formed.
  CompPtr gen_inst_body(int budget, const ProcVar& var, bool guarded = false) {
    if (budget <= 1) return (!guarded && rng.chance(40)) ? comp_var(var) : comp_nil();
    int pick = rng.below(10);
    if (pick < 3) return comp_in(channel(), gen_inst_body(budget - 1, var, true));
    if (pick < 6) return comp_out(channel(), gen_inst_body(budget - 1, var, true));
    if (pick < 8 && budget >= 3) {
      int left = 1 + rng.below(budget - 2);
      return comp_par(gen_inst_body(left, var, guarded),
                      gen_inst_body(budget - 1 - left, var, guarded));
    }
    if (pick < 9 && !guarded) return comp_var(var);
    return comp_nil();
  }

  CompPtr gen_inst(int budget, Flags f) {
    ProcVar x("X" + std::to_string(var_counter++));
    int body_budget = 1 + rng.below(std::max(1, budget / 2));
    CompPtr body = gen_inst_body(body_budget, x);
    CompPtr cont = gen(std::max(1, budget - 1 - body_budget), f);
    return comp_inst(x, body, cont);
  }

  CompPtr top(int budget) {
    Flags f;
    CompPtr body;
    if (rng.chance(15)) {
      body = gen(std::max(1, budget - 2), f);
    } else {
      // Transaction-forward shape: one or two top-level transactions plus
      // surrounding context.
      int ntr = 1 + (rng.chance(30) ? 1 : 0);
      int share = std::max(4, (budget - 2) / (ntr + 1));
      body = gen_trans(share, f);
      for (int i = 1; i < ntr; ++i) body = comp_par(body, gen_trans(share, f));
      body = comp_par(body, gen(std::max(1, budget - 2 - ntr * share), f));
    }
    // Release abort signals for a random subset of the abortable
    // transactions.
    for (const Name& t : top_names)
      if (rng.chance(70)) body = comp_par(body, comp_out(t, comp_nil()));
    return body;
  }
};

bool contains_inst(const CompPtr& p) {
  if (p->kind == Comp::Kind::Inst) return true;
  if (p->a && contains_inst(p->a)) return true;
  if (p->b && contains_inst(p->b)) return true;
  return false;
}

}  // namespace

CompPtr gen_term(const GenConfig& cfg, std::uint64_t index) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Gen g{cfg, Rng{hash_mix(fnv1a("gen"), hash_mix(cfg.seed, index + (attempt << 32)))}};
    CompPtr term = g.top(cfg.max_size);
    if (!well_formed(term) || !comp_closed(term)) continue;  // defensive; should not happen
    if (cfg.allow_dynamic && !contains_inst(term) && attempt < 50) continue;
    return term;
  }
}

AdaptPtr gen_adapt_term(const GenConfig& cfg, std::uint64_t index) {
  Rng rng{hash_mix(fnv1a("gen-adapt"), hash_mix(cfg.seed, index))};
  int loc_counter = 0;
  std::vector<ProcVar> bound;

  auto channel = [&]() -> Name {
    int i = rng.below(std::max(1, cfg.alphabet));
    if (rng.chance(12)) {
      Path rho;
      if (rng.chance(50)) rho.push_back(Name("t" + std::to_string(rng.below(2))));
      static const ReservedKind kinds[] = {ReservedKind::P, ReservedKind::Beta, ReservedKind::Z,
                                           ReservedKind::U, ReservedKind::V, ReservedKind::F};
      return reserved(kinds[rng.below(6)], rho);
    }
    return Name(std::string(1, static_cast<char>('a' + i % 26)));
  };

  std::function<AdaptPtr(int)> gen = [&](int budget) -> AdaptPtr {
    if (budget <= 1) {
      if (!bound.empty() && rng.chance(25))
        return adapt_var(bound[static_cast<std::size_t>(rng.below(
            static_cast<int>(bound.size())))]);
      return adapt_nil();
    }
    int pick = rng.below(100);
    if (pick < 18) return adapt_in(channel(), gen(budget - 1));
    if (pick < 36) return adapt_out(channel(), gen(budget - 1));
    if (pick < 56 && budget >= 4) {
      int left = 1 + rng.below(budget - 2);
      return adapt_par(gen(left), gen(budget - 1 - left));
    }
    if (pick < 70) return adapt_loc(Name("m" + std::to_string(loc_counter++ % 3)), gen(budget - 1));
    if (pick < 84 && budget >= 3) {
      ProcVar x("X" + std::to_string(bound.size()));
      bound.push_back(x);
      AdaptPtr body = gen((budget - 1) / 2);
      bound.pop_back();
      return adapt_upd(channel(), x, body, gen(budget - 1 - (budget - 1) / 2));
    }
    if (pick < 92) return adapt_restrict(Name("r" + std::to_string(rng.below(2))), gen(budget - 1));
    if (cfg.allow_replication) return adapt_repl(gen(std::min(3, budget - 1)));
    return adapt_in(channel(), gen(budget - 1));
  };
  return gen(cfg.max_size);
}

namespace {

void shrink_positions(const CompPtr& p, std::vector<std::vector<int>>& out,
                      std::vector<int>& cur) {
  out.push_back(cur);
  if (p->a) {
    cur.push_back(0);
    shrink_positions(p->a, out, cur);
    cur.pop_back();
  }
  if (p->b) {
    cur.push_back(1);
    shrink_positions(p->b, out, cur);
    cur.pop_back();
  }
}

CompPtr comp_replace(const CompPtr& p, const std::vector<int>& path, std::size_t i,
                     const CompPtr& repl) {
  if (i == path.size()) return repl;
  CompPtr a = p->a, b = p->b;
  if (path[i] == 0)
    a = comp_replace(p->a, path, i + 1, repl);
  else
    b = comp_replace(p->b, path, i + 1, repl);
  switch (p->kind) {
    case Comp::Kind::In: return comp_in(p->name, a);
    case Comp::Kind::Out: return comp_out(p->name, a);
    case Comp::Kind::Repl: return comp_repl(a);
    case Comp::Kind::Restrict: return comp_restrict(p->name, a);
    case Comp::Kind::Par: return comp_par(a, b);
    case Comp::Kind::Trans: return comp_trans(p->name, a, b);
    case Comp::Kind::Protected: return comp_protected(a);
    case Comp::Kind::Inst: return comp_inst(p->var, a, b);
    default: return p;
  }
}

const Comp* comp_at(const CompPtr& p, const std::vector<int>& path) {
  const Comp* cur = p.get();
  for (int c : path) cur = c == 0 ? cur->a.get() : cur->b.get();
  return cur;
}

}  // namespace

FuzzSummary fuzz_correspondence(const GenConfig& gen_cfg, int count,
                                const EncodingConfig& enc_cfg, int depth, bool forward,
                                bool backward) {
  FuzzSummary summary;
  summary.seed = gen_cfg.seed;
  summary.count = count;

  auto run_checks = [&](const CompPtr& term) -> std::pair<Verdict, std::string> {
    int d = depth > 0 ? depth : default_depth(term);
    bool any_inc = false;
    try {
      if (forward) {
        CorrespondenceReport r = check_forward(term, enc_cfg, d);
        if (r.overall == Verdict::Fail) return {Verdict::Fail, "forward"};
        if (r.overall == Verdict::Inconclusive) any_inc = true;
      }
      if (backward) {
        CorrespondenceReport r = check_backward(term, enc_cfg, d);
        if (r.overall == Verdict::Fail) return {Verdict::Fail, "backward"};
        if (r.overall == Verdict::Inconclusive) any_inc = true;
      }
    } catch (const UsageError& e) {
      return {Verdict::Fail, std::string("error: ") + e.what()};
    }
    return {any_inc ? Verdict::Inconclusive : Verdict::Pass, ""};
  };

  for (int i = 0; i < count; ++i) {
    CompPtr term = gen_term(gen_cfg, static_cast<std::uint64_t>(i));
    auto [verdict, which] = run_checks(term);
    if (verdict == Verdict::Pass) {
      ++summary.passed;
      continue;
    }
    if (verdict == Verdict::Inconclusive) {
      ++summary.inconclusive;
      continue;
    }
    ++summary.failed;
    // Greedy shrink: try smaller variants that still fail the same way.
    CompPtr cur = term;
    int evals = 0;
    bool improved = true;
    while (improved && evals < 200) {
      improved = false;
      std::vector<std::vector<int>> positions;
      std::vector<int> scratch;
      shrink_positions(cur, positions, scratch);
      for (const auto& pos : positions) {
        if (evals >= 200) break;
        const Comp* node = comp_at(cur, pos);
        std::vector<CompPtr> cands;
        if (node->kind != Comp::Kind::Nil)
          cands.push_back(comp_replace(cur, pos, 0, comp_nil()));
        if (node->a) cands.push_back(comp_replace(cur, pos, 0, node->a));
        if (node->b) cands.push_back(comp_replace(cur, pos, 0, node->b));
        for (const CompPtr& cand : cands) {
          if (cand->size >= cur->size) continue;
          if (!well_formed(cand) || !comp_closed(cand)) continue;
          ++evals;
          if (run_checks(cand).first == Verdict::Fail) {
            cur = cand;
            improved = true;
            break;
          }
        }
        if (improved) break;
      }
    }
    FuzzFailure f;
    f.index = static_cast<std::uint64_t>(i);
    f.term = term;
    f.shrunk = cur;
    f.detail = which + " check failed";
    summary.failures.push_back(std::move(f));
  }
  return summary;
}

}  // namespace compadapt
