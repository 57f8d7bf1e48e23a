#include <doctest.h>

#include "compadapt/textio.hpp"
#include "oracles.hpp"

using namespace compadapt;

namespace {

const std::vector<Name>& two_names() {
  static std::vector<Name> ns{Name("a"), Name("b")};
  return ns;
}

}  // namespace

TEST_CASE("enumeration sizes are sane") {
  // Spot sizes; the acceptance suite runs the full comparison.
  CHECK(oracles::comp_terms_of_size(1, two_names(), false).size() == 1);
  CHECK(oracles::adapt_terms_of_size(1, two_names()).size() == 1);
  size_t total = 0;
  for (int s = 1; s <= 5; ++s) total += oracles::comp_terms_of_size(s, two_names(), true).size();
  MESSAGE("comp terms with inst, sizes 1-5: ", total);
  CHECK(total > 100);
}

TEST_CASE("transitions agree with the decomposition oracle up to size 5") {
  for (int size = 1; size <= 5; ++size) {
    for (const CompPtr& t : oracles::comp_terms_of_size(size, two_names(), true)) {
      for (Semantics k :
           {Semantics::Discarding, Semantics::Preserving, Semantics::Aborting}) {
        auto got = transitions(t, k);
        auto want = oracles::comp_steps(t, k);
        bool same = oracles::same_comp_steps(got, want);
        if (!same) {
          MESSAGE("term: ", print_comp(t), " semantics ", semantics_text(k));
        }
        REQUIRE(same);
      }
    }
  }
}

TEST_CASE("reductions agree with the context oracle up to size 5") {
  for (int size = 1; size <= 5; ++size) {
    for (const AdaptPtr& t : oracles::adapt_terms_of_size(size, two_names())) {
      auto got = reductions(t);
      auto want = oracles::adapt_reductions(t);
      bool same = oracles::same_adapt_sets(got, want);
      if (!same) {
        MESSAGE("term: ", print_adapt(t));
        for (auto& x : got) MESSAGE("  got:  ", print_adapt(x));
        for (auto& x : want) MESSAGE("  want: ", print_adapt(x));
      }
      REQUIRE(same);
    }
  }
}
