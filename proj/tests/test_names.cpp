#include <doctest.h>

#include <set>

#include "compadapt/names.hpp"

using namespace compadapt;

TEST_CASE("reserved names are injective and deterministic") {
  Name t("t"), t2("t'");
  CHECK(reserved(ReservedKind::L, t) != reserved(ReservedKind::L, t2));
  CHECK(reserved(ReservedKind::L, t) == reserved(ReservedKind::L, Name("t")));
  CHECK(reserved(ReservedKind::P, Path{}) == reserved(ReservedKind::P, Path{}));
  CHECK(reserved(ReservedKind::P, Path{t}) != reserved(ReservedKind::P, Path{}));
  CHECK(reserved(ReservedKind::P, Path{t}) != reserved(ReservedKind::Beta, Path{t}));
  CHECK(reserved(ReservedKind::L, t) != reserved(ReservedKind::K, t));
}

TEST_CASE("distinct kind/index pairs give distinct names") {
  std::vector<Name> bases{Name("t"), Name("u"), Name("t1")};
  std::vector<Path> paths{Path{}, Path{Name("t")}, Path{Name("t"), Name("u")}, Path{Name("u")}};
  std::set<std::string> seen;
  std::size_t count = 0;
  for (int k = 0; k < 14; ++k) {
    ReservedKind kind = static_cast<ReservedKind>(k);
    if (reserved_kind_takes_name(kind)) {
      for (const Name& b : bases) {
        seen.insert(reserved(kind, b).key);
        ++count;
      }
    } else {
      for (const Path& p : paths) {
        seen.insert(reserved(kind, p).key);
        ++count;
      }
    }
  }
  CHECK(seen.size() == count);
}

TEST_CASE("wrong index sort is a usage error") {
  CHECK_THROWS_AS(reserved(ReservedKind::L, Path{}), UsageError);
  CHECK_THROWS_AS(reserved(ReservedKind::P, Name("t")), UsageError);
}

TEST_CASE("user-name validation") {
  CHECK(validate_user_name("t1").key == "t1");
  CHECK(validate_user_name("a_b'c").key == "a_b'c");
  CHECK_THROWS_AS(validate_user_name(""), UsageError);
  CHECK_THROWS_AS(validate_user_name("$l.t"), UsageError);
  CHECK_THROWS_AS(validate_user_name("Xyz"), UsageError);
  CHECK_THROWS_AS(validate_user_name("1a"), UsageError);
  CHECK_THROWS_AS(validate_user_name("a b"), UsageError);
  CHECK_THROWS_AS(validate_user_name("new"), UsageError);
}

TEST_CASE("user names never collide with reserved names") {
  for (const char* text : {"t", "lt", "l_t", "p", "beta"}) {
    Name n = validate_user_name(text);
    CHECK(!n.is_reserved());
    CHECK(n != reserved(ReservedKind::L, Name("t")));
    CHECK(n != reserved(ReservedKind::P, Path{}));
  }
}

TEST_CASE("path text") {
  CHECK(path_text(Path{}) == kEpsilon);
  CHECK(path_text(Path{Name("t")}) == std::string("t,") + kEpsilon);
  Path p = path_cons(Name("t1"), Path{Name("t2")});
  CHECK(path_text(p) == std::string("t1,t2,") + kEpsilon);
}

TEST_CASE("reserved index parts") {
  Name l = reserved(ReservedKind::L, Name("t"));
  CHECK(l.reserved_kind() == ReservedKind::L);
  CHECK(reserved_index_parts(l) == std::vector<std::string>{"t"});
  Name p = reserved(ReservedKind::P, Path{Name("t"), Name("u")});
  CHECK(reserved_index_parts(p) == std::vector<std::string>{"t", "u"});
  CHECK(reserved_index_parts(reserved(ReservedKind::P, Path{})).empty());
}
