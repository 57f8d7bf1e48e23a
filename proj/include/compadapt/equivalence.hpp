#pragma once

#include <string>
#include <vector>

#include "compadapt/adapt.hpp"
#include "compadapt/comp.hpp"
#include "compadapt/encode.hpp"

namespace compadapt {

enum class Verdict { Pass, Fail, Inconclusive };

const char* verdict_text(Verdict v);

enum class WeakResult { Equivalent, Inequivalent, Inconclusive };

// Removes inert residues left behind by completed abort protocols: gamma
// and escape locations with dead content, and re-arm chains whose target
// locations can never exist. Sound up to weak equivalence; the full
// bisimulation remains the authority.
AdaptPtr gc_inert(const AdaptPtr& p);

// Weak barbed bisimilarity on closed terms, computed by partition
// refinement over the saturated bounded reduction graphs. Truncation gives
// Inconclusive, distinguished from Inequivalent.
WeakResult weak_equiv(const AdaptPtr& p, const AdaptPtr& q, int depth_bound,
                      int repl_bound = 1, std::size_t max_states = 20000);

struct StepReport {
  std::string description;       // the source step or target reduct
  TauShape shape = TauShape::None;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<AdaptPtr> witness; // normalized trace replayable by reductions()
  AdaptPtr matched;              // matched target state, when passing
  AdaptPtr goal;                 // encoding of the source successor
  std::string note;
};

struct CorrespondenceReport {
  bool forward = true;
  Verdict overall = Verdict::Pass;
  std::vector<StepReport> steps;
  int depth = 0;
  bool truncated = false;

  int passed() const;
  int failed() const;
  int inconclusive() const;
};

int default_depth(const CompPtr& p);

// For every source tau step P -> P', searches the bounded reduction graph
// of encode(P) for a state congruent to encode(P') (static discarding /
// preserving) or weakly equivalent to it (aborting and all dynamic modes).
CorrespondenceReport check_forward(const CompPtr& p, const EncodingConfig& cfg, int depth);

// For every one-step reduct Q of encode(P): finds a source step P -> P'
// and a bounded trace from Q to a state matching encode(P').
CorrespondenceReport check_backward(const CompPtr& p, const EncodingConfig& cfg, int depth);

}  // namespace compadapt
