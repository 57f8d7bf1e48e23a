#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "compadapt/comp.hpp"
#include "compadapt/encode.hpp"
#include "compadapt/equivalence.hpp"

namespace compadapt {

// Seeded random-term generation. Identical configs give identical term
// sequences.
struct GenConfig {
  std::uint64_t seed = 1;
  int max_size = 12;
  int max_nesting = 3;
  bool allow_dynamic = false;
  int alphabet = 4;
  bool allow_replication = false;

  // Placement policy: under preserving semantics, transactions nested in an
  // abortable transaction are generated inside protected blocks only (the
  // translation does not relocate naked nested transactions faithfully).
  Semantics semantics = Semantics::Discarding;
};

// The i-th term of the configured sequence: well formed, closed, within the
// size bound, compensation updates only when allowed.
CompPtr gen_term(const GenConfig& cfg, std::uint64_t index);

// Small random adaptable terms (for parser round-trips); sprinkles reserved
// names in, since parse_adapt accepts them.
AdaptPtr gen_adapt_term(const GenConfig& cfg, std::uint64_t index);

struct FuzzFailure {
  std::uint64_t index = 0;
  CompPtr term;
  CompPtr shrunk;
  std::string detail;
};

struct FuzzSummary {
  std::uint64_t seed = 0;
  int count = 0;
  int passed = 0;
  int failed = 0;
  int inconclusive = 0;
  std::vector<FuzzFailure> failures;
};

// Runs the correspondence checks on `count` generated terms. A non-positive
// depth selects the per-term default depth.
FuzzSummary fuzz_correspondence(const GenConfig& gen_cfg, int count,
                                const EncodingConfig& enc_cfg, int depth, bool forward,
                                bool backward);

}  // namespace compadapt
