#pragma once

#include <vector>

#include "compadapt/adapt.hpp"
#include "compadapt/comp.hpp"
#include "compadapt/names.hpp"

namespace compadapt {

// How to translate a compensable term into adaptable processes.
struct EncodingConfig {
  Semantics semantics = Semantics::Discarding;
  bool dynamic = false;  // compensation updates and process variables allowed
  Path path;             // the path rho the term is encoded at

  // Testing knob: omit the escape update that moves collected protected
  // blocks out of the dying transaction location. Breaks the translation;
  // used to demonstrate that the correspondence checker can fail.
  bool skip_escape_step = false;
};

// Number of protected blocks. Discarding/preserving count only top-level
// blocks; aborting also counts one per transaction, recursively through
// default activities. Compensation updates count through their
// continuation.
int npb(const CompPtr& p, Semantics k);

// Number of transactions, recursively through default activities and
// compensation-update continuations.
int nt(const CompPtr& p);

// Transaction containment structure: one node per transaction occurrence,
// children in document order, recursively over default activities.
struct ContainmentTree {
  Name root;
  std::vector<ContainmentTree> children;

  int node_count() const;
};

ContainmentTree containment_tree(const Name& t, const CompPtr& p);

// Names of the top-level transactions of p (the root's children).
std::vector<Name> top_transaction_names(const CompPtr& p);

// Sequential process from a post-order walk of the containment tree:
// each node c contributes ~$l.c . $k.c, the root last.
AdaptPtr activation_process(const Name& t, const CompPtr& p);

// Arities of the auxiliary encoding.
struct AuxCounts {
  int blocks = 0;            // n
  int transactions = 0;      // m, preserving only
  std::vector<Name> nested;  // top-level nested transaction names, aborting only
};

AuxCounts aux_counts(const CompPtr& default_activity, const EncodingConfig& cfg);

// The compensation collector C[Q] for a transaction whose body lives at
// rho0 = t,rho. rho0 must be nonempty.
AdaptPtr aux_encode(const CompPtr& q, const Path& rho0, const AuxCounts& counts,
                    const EncodingConfig& cfg);

// The re-arm / cleanup chain installed after an aborting transaction's
// location is killed.
AdaptPtr gamma_chain(const Path& rho0, const std::vector<Name>& nested);

// The full translation. Static mode rejects terms with compensation
// updates or process variables.
AdaptPtr encode(const CompPtr& p, const EncodingConfig& cfg);

}  // namespace compadapt
