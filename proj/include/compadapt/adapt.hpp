#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "compadapt/names.hpp"

namespace compadapt {

struct Adapt;
using AdaptPtr = std::shared_ptr<const Adapt>;

// Adaptable-process AST.
//
//   Nil                     0
//   In(name, a)             name.a
//   Out(name, a)            ~name.a
//   Upd(name, var, a, b)    upd name(var => a).b   (var binds in a)
//   Loc(name, a)            name[a]
//   Repl(a)                 !a
//   Restrict(name, a)       new name. a
//   Par(a, b)               a | b
//   Var(var)                X
struct Adapt {
  enum class Kind { Nil, In, Out, Upd, Loc, Repl, Restrict, Par, Var };

  Kind kind;
  Name name;
  ProcVar var;
  AdaptPtr a, b;

  std::uint64_t hash = 0;
  std::uint32_t size = 0;
  std::vector<Name> free_names;
  std::vector<ProcVar> free_vars;
};

AdaptPtr adapt_nil();
AdaptPtr adapt_in(const Name& n, AdaptPtr cont);
AdaptPtr adapt_out(const Name& n, AdaptPtr cont);
AdaptPtr adapt_upd(const Name& l, const ProcVar& x, AdaptPtr body, AdaptPtr cont);
AdaptPtr adapt_loc(const Name& l, AdaptPtr p);
AdaptPtr adapt_repl(AdaptPtr p);
AdaptPtr adapt_restrict(const Name& n, AdaptPtr p);
AdaptPtr adapt_par(AdaptPtr l, AdaptPtr r);
AdaptPtr adapt_var(const ProcVar& v);

// Derived forms.
AdaptPtr adapt_kill(const Name& l, AdaptPtr cont);               // upd l(Y => 0)
AdaptPtr adapt_write(const Name& l, AdaptPtr p, AdaptPtr cont);  // upd l(Y => p), Y not free in p
AdaptPtr adapt_del(const Name& l, AdaptPtr cont);                // upd l(X => X)

bool adapt_equal(const AdaptPtr& x, const AdaptPtr& y);
int adapt_compare(const AdaptPtr& x, const AdaptPtr& y);

inline bool free_in(const Name& n, const AdaptPtr& p) {
  return std::binary_search(p->free_names.begin(), p->free_names.end(), n);
}
inline bool free_in(const ProcVar& v, const AdaptPtr& p) {
  return std::binary_search(p->free_vars.begin(), p->free_vars.end(), v);
}
inline bool adapt_closed(const AdaptPtr& p) { return p->free_vars.empty(); }

AdaptPtr substitute(const AdaptPtr& p, const ProcVar& x, const AdaptPtr& q);

// Canonical form: flattened sorted nil-free parallel compositions,
// restrictions hoisted out of parallel and located processes, (new a)0
// erased, canonical binder names. Replication is never unfolded.
AdaptPtr normalize(const AdaptPtr& p);

bool congruent(const AdaptPtr& p, const AdaptPtr& q);

// All one-step reducts up to normalize, duplicates merged, deterministic
// order. Each replication is unfolded `repl_bound` times per redex search.
std::vector<AdaptPtr> reductions(const AdaptPtr& p, int repl_bound = 1);

// An observable prefix: name plus polarity (output = true).
struct Barb {
  Name name;
  bool output = false;

  bool operator==(const Barb& o) const { return output == o.output && name == o.name; }
  bool operator<(const Barb& o) const {
    if (name != o.name) return name < o.name;
    return output < o.output;
  }
};

// Unguarded, unrestricted input/output prefixes. Locations are transparent;
// update prefixes contribute nothing.
std::vector<Barb> barbs(const AdaptPtr& p);

// Bounded breadth-first reduction graph over normalized states.
struct ReductionGraph {
  std::vector<AdaptPtr> states;
  std::vector<std::vector<int>> edges;
  std::vector<int> depth;
  int root = 0;
  bool truncated = false;

  int find(const AdaptPtr& normalized) const;

 private:
  std::unordered_map<std::uint64_t, std::vector<int>> index_;
  friend ReductionGraph reachable(const AdaptPtr&, int, int, std::size_t);
};

ReductionGraph reachable(const AdaptPtr& p, int depth_bound, int repl_bound = 1,
                         std::size_t max_states = 100000);

}  // namespace compadapt
