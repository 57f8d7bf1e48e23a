// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "compadapt/encode.hpp"
#include "compadapt/equivalence.hpp"
#include "compadapt/fuzz.hpp"
#include "compadapt/textio.hpp"
#include "oracles.hpp"

using namespace compadapt;

namespace {

struct Criterion {
  int number;
  std::string title;
  std::function<bool(std::string&)> run;
};

CompPtr cp(const char* s) { return parse_comp(s); }

EncodingConfig config(Semantics k, bool dyn = false) {
  EncodingConfig c;
  c.semantics = k;
  c.dynamic = dyn;
  return c;
}

// ---------------------------------------------------------------------- 1
bool three_semantics_example(std::string& note) {
  CompPtr p = cp(
      "~t | t[t1[x1.0, x2.0] | t2[<x3.0>, x4.0] | x5.0 | <x6.0>, x7.0]");
  struct Case {
    Semantics k;
    const char* expected;
  } cases[] = {
      {Semantics::Discarding, "<x6.0> | <x7.0>"},
      {Semantics::Preserving, "<x6.0> | <x7.0> | t1[x1.0, x2.0] | t2[<x3.0>, x4.0]"},
      {Semantics::Aborting, "<x6.0> | <x7.0> | <x3.0> | <x2.0> | <x4.0>"},
  };
  for (const Case& c : cases) {
    std::vector<CompPtr> taus;
    for (const CompStep& s : transitions(p, c.k))
      if (s.label.kind == CompLabel::Kind::Tau) taus.push_back(s.target);
    if (taus.size() != 1) {
      note = std::string("expected exactly one tau under ") + semantics_text(c.k);
      return false;
    }
    if (!congruent(taus[0], cp(c.expected))) {
      note = std::string("wrong abort result under ") + semantics_text(c.k) + ": " +
             print_comp(normalize(taus[0]));
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------- 2
bool discarding_worked_example(std::string& note) {
  // Frozen regression value: the breadth-first distance to the encoded
  // successor, computed by the graph search when this suite was built.
  constexpr int kFrozenWitnessLength = 7;

  CompPtr p = cp("t[r.0 | <x.0>, y.0] | ~t");
  AdaptPtr goal = normalize(encode(cp("<x.0> | <y.0>"), config(Semantics::Discarding)));
  ReductionGraph g = reachable(encode(p, config(Semantics::Discarding)), 12);
  int id = g.find(goal);
  if (id < 0) {
    note = "encoded successor not reachable within depth 12";
    return false;
  }
  if (g.depth[static_cast<std::size_t>(id)] != kFrozenWitnessLength) {
    note = "witness length drifted: " + std::to_string(g.depth[static_cast<std::size_t>(id)]);
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------- 3
bool preserving_worked_example(std::string& note) {
  CompPtr p0 = cp("t[t1[x1.0, y1.0] | <x.0>, y.0] | ~t");
  EncodingConfig pc = config(Semantics::Preserving);
  AdaptPtr e = encode(p0, pc);

  // M as displayed: the content of the inner beta shell of the encoding of
  // t1[P1,Q1] at path t.
  EncodingConfig inner = pc;
  inner.path = parse_path("t");
  AdaptPtr enc_t1 = encode(cp("t1[x1.0, y1.0]"), inner);
  AdaptPtr m = enc_t1->a->a;  // beta_t[M] | listener
  AdaptPtr expected = adapt_par(
      adapt_loc(reserved(ReservedKind::Beta, Path{}), m),
      adapt_par(adapt_loc(reserved(ReservedKind::P, Path{}), parse_adapt("x")),
                adapt_loc(reserved(ReservedKind::P, Path{}), parse_adapt("y"))));

  ReductionGraph g = reachable(e, 40);
  if (g.find(normalize(expected)) < 0) {
    note = "displayed final state not reached";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------- 4
bool activation_example(std::string& note) {
  CompPtr p = cp(
      "a[c[x1.0, y2.0] | x2.0, y1.0] | b[x3.0 | d[x4.0, y4.0] | e[x5.0, y5.0], y3.0]");
  std::string got = print_adapt(activation_process(Name("t"), p));
  std::string want = "~$l.c.$k.c.~$l.a.$k.a.~$l.d.$k.d.~$l.e.$k.e.~$l.b.$k.b.~$l.t.$k.t";
  if (got != want) {
    note = "activation process was " + got;
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------- 5
bool static_fuzz(std::string& note) {
  for (Semantics k : {Semantics::Discarding, Semantics::Preserving, Semantics::Aborting}) {
    GenConfig gen;
    gen.seed = 50001 + static_cast<std::uint64_t>(k);
    gen.max_size = 12;
    gen.max_nesting = 3;
    gen.allow_replication = false;
    gen.semantics = k;
    FuzzSummary s = fuzz_correspondence(gen, 500, config(k), 0, true, true);
    if (s.failed != 0 || s.inconclusive != 0) {
      note = std::string(semantics_text(k)) + ": " + std::to_string(s.failed) + " failed, " +
             std::to_string(s.inconclusive) + " inconclusive";
      if (!s.failures.empty()) note += "; first: " + print_comp(s.failures[0].shrunk);
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------- 6
bool dynamic_fuzz(std::string& note) {
  for (Semantics k : {Semantics::Discarding, Semantics::Preserving, Semantics::Aborting}) {
    GenConfig gen;
    gen.seed = 60001 + static_cast<std::uint64_t>(k);
    gen.max_size = 10;
    gen.max_nesting = 3;
    gen.allow_dynamic = true;
    gen.semantics = k;
    FuzzSummary s = fuzz_correspondence(gen, 200, config(k, true), 0, true, false);
    if (s.failed != 0) {
      note = std::string(semantics_text(k)) + ": " + std::to_string(s.failed) + " failed";
      if (!s.failures.empty()) note += "; first: " + print_comp(s.failures[0].shrunk);
      return false;
    }
    if (s.inconclusive != 0) {
      note = std::string(semantics_text(k)) + ": " + std::to_string(s.inconclusive) +
             " inconclusive";
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------- 7
bool substitution_lemma(std::string& note) {
  GenConfig rcfg;
  rcfg.seed = 70001;
  rcfg.allow_dynamic = true;
  rcfg.max_size = 10;
  GenConfig qcfg;
  qcfg.seed = 70002;
  qcfg.max_size = 6;
  ProcVar x("Xs");
  int done = 0;
  for (std::uint64_t i = 0; done < 200; ++i) {
    if (i > 2000) {
      note = "generator starved";
      return false;
    }
    CompPtr q = gen_term(qcfg, i);
    if (nt(q) > 0 || npb(q, Semantics::Aborting) > 0) continue;  // path-insensitive only
    CompPtr r = comp_par(gen_term(rcfg, i), comp_var(x));
    for (Semantics k : {Semantics::Discarding, Semantics::Preserving, Semantics::Aborting}) {
      EncodingConfig c = config(k, true);
      AdaptPtr lhs = normalize(encode(substitute(r, x, q), c));
      AdaptPtr rhs = normalize(substitute(encode(r, c), x, encode(q, c)));
      if (!adapt_equal(lhs, rhs)) {
        note = std::string("mismatch under ") + semantics_text(k) + " at sample " +
               std::to_string(i);
        return false;
      }
    }
    ++done;
  }
  return true;
}

// ---------------------------------------------------------------------- 8
bool count_extraction(std::string& note) {
  GenConfig cfg;
  cfg.seed = 80001;
  for (int i = 0; i < 500; ++i) {
    CompPtr p = gen_term(cfg, static_cast<std::uint64_t>(i));
    for (Semantics k : {Semantics::Discarding, Semantics::Aborting}) {
      CompPtr ex = extract(p, k);
      int blocks = 0;
      std::function<void(const CompPtr&)> count = [&](const CompPtr& t) {
        if (t->kind == Comp::Kind::Protected)
          ++blocks;
        else if (t->kind == Comp::Kind::Par) {
          count(t->a);
          count(t->b);
        } else if (t->kind == Comp::Kind::Restrict)
          count(t->a);
      };
      count(ex);
      if (blocks != npb(p, k)) {
        note = "count mismatch at sample " + std::to_string(i) + " under " + semantics_text(k);
        return false;
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------- 9
bool oracle_equivalence(std::string& note) {
  std::vector<Name> names{Name("a"), Name("b")};
  for (int size = 1; size <= 7; ++size) {
    for (const CompPtr& t : oracles::comp_terms_of_size(size, names, true)) {
      for (Semantics k :
           {Semantics::Discarding, Semantics::Preserving, Semantics::Aborting}) {
        if (!oracles::same_comp_steps(transitions(t, k), oracles::comp_steps(t, k))) {
          note = "LTS mismatch on " + print_comp(t) + " under " + semantics_text(k);
          return false;
        }
      }
    }
    for (const AdaptPtr& t : oracles::adapt_terms_of_size(size, names)) {
      if (!oracles::same_adapt_sets(reductions(t), oracles::adapt_reductions(t))) {
        note = "reduction mismatch on " + print_adapt(t);
        return false;
      }
    }
  }
  return true;
}

// --------------------------------------------------------------------- 10
bool parser_round_trip(std::string& note) {
  GenConfig ccfg;
  ccfg.seed = 100001;
  ccfg.allow_dynamic = true;
  for (int i = 0; i < 1000; ++i) {
    CompPtr p = normalize(gen_term(ccfg, static_cast<std::uint64_t>(i)));
    if (!comp_equal(parse_comp(print_comp(p)), p)) {
      note = "compensable round-trip broke at sample " + std::to_string(i);
      return false;
    }
  }
  GenConfig acfg;
  acfg.seed = 100002;
  acfg.max_size = 11;
  for (int i = 0; i < 1000; ++i) {
    AdaptPtr p = normalize(gen_adapt_term(acfg, static_cast<std::uint64_t>(i)));
    if (!adapt_equal(parse_adapt(print_adapt(p)), p)) {
      note = "adaptable round-trip broke at sample " + std::to_string(i);
      return false;
    }
  }
  return true;
}

// --------------------------------------------------------------------- 11
bool mutation_sanity(std::string& note) {
  GenConfig gen;
  gen.seed = 50001;  // same family as the discarding static run
  gen.max_size = 12;
  gen.max_nesting = 3;
  gen.semantics = Semantics::Discarding;
  EncodingConfig broken = config(Semantics::Discarding);
  broken.skip_escape_step = true;
  FuzzSummary s = fuzz_correspondence(gen, 100, broken, 0, true, false);
  if (s.failed == 0) {
    note = "the broken encoder was not detected";
    return false;
  }
  return true;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria{
      {1, "three-semantics abort example", three_semantics_example},
      {2, "discarding worked example, frozen witness length", discarding_worked_example},
      {3, "preserving worked example reaches the displayed state", preserving_worked_example},
      {4, "activation process of the five-transaction example", activation_example},
      {5, "static correspondence fuzz, 500 terms per semantics", static_fuzz},
      {6, "dynamic correspondence fuzz, 200 terms per semantics", dynamic_fuzz},
      {7, "substitution lemma, 200 triples", substitution_lemma},
      {8, "count/extraction consistency, 500 terms", count_extraction},
      {9, "oracle equivalence on all terms up to size 7", oracle_equivalence},
      {10, "parser round-trip, 1000 normalized terms per calculus", parser_round_trip},
      {11, "mutation sanity: the broken encoder is detected", mutation_sanity},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string note;
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run(note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
    std::printf("%s  criterion %2d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", c.number,
                c.title.c_str(), static_cast<double>(ms) / 1000.0, note.empty() ? "" : " — ",
                note.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
