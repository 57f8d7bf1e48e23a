#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace compadapt {

// Error for violated API preconditions (wrong argument sorts, ill-formed
// inputs, mode violations). Parse errors carry positions and live in textio.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// The reserved-name alphabet used by the encodings. Kinds l, k, m and gamma
// are indexed by a transaction name; all others by a path.
enum class ReservedKind { L, K, M, Gamma, P, Beta, Z, U, V, V1, F, G, A, J };

const char* reserved_kind_text(ReservedKind k);
bool reserved_kind_takes_name(ReservedKind k);

// Marker that starts every reserved name and is rejected in user input.
inline constexpr char kReservedMarker = '$';

// UTF-8 lowercase epsilon, the written form of the empty path.
inline constexpr const char* kEpsilon = "\xce\xb5";

// A channel / transaction / location identifier. User names are plain
// identifiers; reserved names are written "$kind.index" where the index is a
// name or a path. The printed form is the identity: comparisons, hashing and
// ordering all go through `key`.
struct Name {
  std::string key;

  Name() = default;
  explicit Name(std::string k) : key(std::move(k)) {}

  bool is_reserved() const { return !key.empty() && key[0] == kReservedMarker; }
  ReservedKind reserved_kind() const;

  bool operator==(const Name& o) const { return key == o.key; }
  bool operator!=(const Name& o) const { return key != o.key; }
  bool operator<(const Name& o) const { return key < o.key; }
};

// A finite sequence of transaction names; front() is the innermost
// enclosing transaction.
using Path = std::vector<Name>;

// "ε" for the empty path, "t1,t2,ε" otherwise.
std::string path_text(const Path& p);

// Prepend a transaction name: t, rho.
Path path_cons(const Name& t, const Path& rho);

// Injective construction of reserved names. The index sort must match the
// kind; a mismatch is a usage error.
Name reserved(ReservedKind k, const Name& index);
Name reserved(ReservedKind k, const Path& index);

// For reserved names: the index components (a single name for name-indexed
// kinds, the path elements otherwise).
std::vector<std::string> reserved_index_parts(const Name& n);

// Checks a user-supplied identifier: nonempty, lowercase start, identifier
// characters only, no reserved marker, not a keyword. Throws UsageError with
// the offending position.
Name validate_user_name(std::string_view text);

bool is_keyword(std::string_view text);

// A process variable (X, Y, ...). Distinct text means distinct variable.
struct ProcVar {
  std::string text;

  ProcVar() = default;
  explicit ProcVar(std::string t) : text(std::move(t)) {}

  bool operator==(const ProcVar& o) const { return text == o.text; }
  bool operator!=(const ProcVar& o) const { return text != o.text; }
  bool operator<(const ProcVar& o) const { return text < o.text; }
};

// Deterministic 64-bit FNV-1a, used for structural term hashes.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

// First name of the form base0, base1, ... not in `avoid`.
Name fresh_name(const std::string& base, const std::set<Name>& avoid);
ProcVar fresh_var(const std::string& base, const std::set<ProcVar>& avoid);

}  // namespace compadapt
