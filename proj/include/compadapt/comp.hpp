#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <vector>

#include "compadapt/names.hpp"

namespace compadapt {

// The three compensation semantics.
enum class Semantics { Discarding, Preserving, Aborting };

const char* semantics_text(Semantics k);

struct Comp;
using CompPtr = std::shared_ptr<const Comp>;

// Compensable-process AST. Immutable; nodes are shared freely.
//
//   Nil                      0
//   In(name, a)              name.a
//   Out(name, a)             ~name.a
//   Repl(a)                  !a
//   Restrict(name, a)        new name. a
//   Par(a, b)                a | b
//   Trans(name, a, b)        name[a, b]        (default a, compensation b)
//   Protected(a)             <a>
//   Var(var)                 X
//   Inst(var, a, b)          inst(var => a).b  (var binds in a)
struct Comp {
  enum class Kind { Nil, In, Out, Repl, Restrict, Par, Trans, Protected, Var, Inst };

  Kind kind;
  Name name;
  ProcVar var;
  CompPtr a, b;

  std::uint64_t hash = 0;
  std::uint32_t size = 0;
  std::vector<Name> free_names;    // sorted, unique
  std::vector<ProcVar> free_vars;  // sorted, unique
};

CompPtr comp_nil();
CompPtr comp_in(const Name& n, CompPtr cont);
CompPtr comp_out(const Name& n, CompPtr cont);
CompPtr comp_repl(CompPtr p);
CompPtr comp_restrict(const Name& n, CompPtr p);
CompPtr comp_par(CompPtr l, CompPtr r);
CompPtr comp_trans(const Name& t, CompPtr dflt, CompPtr comp);
CompPtr comp_protected(CompPtr p);
CompPtr comp_var(const ProcVar& v);
CompPtr comp_inst(const ProcVar& v, CompPtr body, CompPtr cont);

bool comp_equal(const CompPtr& x, const CompPtr& y);
// Plain structural total order (names by text). Deterministic across runs.
int comp_compare(const CompPtr& x, const CompPtr& y);

inline bool free_in(const Name& n, const CompPtr& p) {
  return std::binary_search(p->free_names.begin(), p->free_names.end(), n);
}
inline bool free_in(const ProcVar& v, const CompPtr& p) {
  return std::binary_search(p->free_vars.begin(), p->free_vars.end(), v);
}
inline bool comp_closed(const CompPtr& p) { return p->free_vars.empty(); }

// Transactions and protected blocks must not occur behind input/output
// prefixes.
bool well_formed(const CompPtr& p);

// Capture-avoiding substitution of q for free occurrences of x in p.
CompPtr substitute(const CompPtr& p, const ProcVar& x, const CompPtr& q);

// Canonical representative of a decidable sub-relation of structural
// congruence: parallel compositions are flattened, nil-free and sorted;
// <<P>> collapses to <P>; <0> and (new a)0 and (new a)~a vanish;
// restrictions are hoisted out of parallel, protected blocks and
// transaction defaults; binders get canonical names. Replication is
// normalized recursively but never unfolded.
CompPtr normalize(const CompPtr& p);

// normalize(p) == normalize(q). Sound for ==, complete for the congruence
// axioms except !P == P | !P.
bool congruent(const CompPtr& p, const CompPtr& q);

// Extraction functions (what survives an abort).
CompPtr extract(const CompPtr& p, Semantics k);

// True iff p has no compensation update waiting for execution: no Inst
// reachable through Par, Restrict, Protected or Repl without crossing a
// prefix or a transaction boundary. Equivalently: p has no lambda-labeled
// transition.
bool no_comp(const CompPtr& p);

// LTS labels: a, ~a, tau, lambda X.Q.
struct CompLabel {
  enum class Kind { In, Out, Tau, Lambda };
  Kind kind = Kind::Tau;
  Name name;      // In/Out
  ProcVar var;    // Lambda
  CompPtr body;   // Lambda

  static CompLabel in(const Name& n);
  static CompLabel out(const Name& n);
  static CompLabel tau();
  static CompLabel lambda(const ProcVar& v, CompPtr b);

  bool operator==(const CompLabel& o) const;
};

std::string label_text(const CompLabel& l);

// Which case of the tau-step classification produced a step.
enum class TauShape { None, Comm, AbortExternal, AbortInternal, CompUpdate };

const char* tau_shape_text(TauShape s);

struct CompStep {
  CompLabel label;
  CompPtr target;
  TauShape shape = TauShape::None;
};

// All one-step transitions of a well-formed term, in a fixed document
// order (left operands first, rule order fixed per node). Ill-formed
// input is a usage error.
std::vector<CompStep> transitions(const CompPtr& p, Semantics k);

// The classification of a tau step previously obtained from transitions().
// Non-tau or unknown steps are usage errors.
TauShape classify_tau(const CompPtr& p, Semantics k, const CompStep& step);

}  // namespace compadapt
