#include "compadapt/names.hpp"

#include <array>
#include <cctype>

namespace compadapt {

namespace {

constexpr std::array<const char*, 14> kKindText = {
    "l", "k", "m", "gamma", "p", "beta", "z", "u", "v", "v1", "f", "g", "a", "j"};

bool ident_start(char c) { return c >= 'a' && c <= 'z'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

}  // namespace

const char* reserved_kind_text(ReservedKind k) {
  return kKindText[static_cast<int>(k)];
}

bool reserved_kind_takes_name(ReservedKind k) {
  switch (k) {
    case ReservedKind::L:
    case ReservedKind::K:
    case ReservedKind::M:
    case ReservedKind::Gamma:
      return true;
    default:
      return false;
  }
}

ReservedKind Name::reserved_kind() const {
  if (!is_reserved()) throw UsageError("name '" + key + "' is not reserved");
  auto dot = key.find('.');
  std::string kind = key.substr(1, dot == std::string::npos ? std::string::npos : dot - 1);
  for (std::size_t i = 0; i < kKindText.size(); ++i)
    if (kind == kKindText[i]) return static_cast<ReservedKind>(i);
  throw UsageError("unknown reserved kind in '" + key + "'");
}

std::string path_text(const Path& p) {
  std::string out;
  for (const Name& n : p) {
    out += n.key;
    out += ',';
  }
  out += kEpsilon;
  return out;
}

Path path_cons(const Name& t, const Path& rho) {
  Path out;
  out.reserve(rho.size() + 1);
  out.push_back(t);
  out.insert(out.end(), rho.begin(), rho.end());
  return out;
}

Name reserved(ReservedKind k, const Name& index) {
  if (!reserved_kind_takes_name(k))
    throw UsageError(std::string("reserved kind '") + reserved_kind_text(k) +
                     "' is indexed by a path, not a name");
  std::string key;
  key += kReservedMarker;
  key += reserved_kind_text(k);
  key += '.';
  key += index.key;
  return Name(std::move(key));
}

Name reserved(ReservedKind k, const Path& index) {
  if (reserved_kind_takes_name(k))
    throw UsageError(std::string("reserved kind '") + reserved_kind_text(k) +
                     "' is indexed by a name, not a path");
  std::string key;
  key += kReservedMarker;
  key += reserved_kind_text(k);
  key += '.';
  key += path_text(index);
  return Name(std::move(key));
}

std::vector<std::string> reserved_index_parts(const Name& n) {
  ReservedKind k = n.reserved_kind();
  auto dot = n.key.find('.');
  std::string idx = n.key.substr(dot + 1);
  std::vector<std::string> parts;
  if (reserved_kind_takes_name(k)) {
    parts.push_back(idx);
    return parts;
  }
  std::size_t pos = 0;
  while (pos < idx.size()) {
    auto comma = idx.find(',', pos);
    std::string part = idx.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos);
    if (part != kEpsilon) parts.push_back(part);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return parts;
}

bool is_keyword(std::string_view text) {
  return text == "new" || text == "inst" || text == "upd";
}

Name validate_user_name(std::string_view text) {
  if (text.empty()) throw UsageError("empty name");
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == kReservedMarker)
      throw UsageError("reserved-namespace marker '$' at position " + std::to_string(i) +
                       " in name '" + std::string(text) + "'");
  }
  if (!ident_start(text[0]))
    throw UsageError("name '" + std::string(text) +
                     "' must start with a lowercase letter (position 0)");
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (!ident_char(text[i]))
      throw UsageError("illegal character at position " + std::to_string(i) + " in name '" +
                       std::string(text) + "'");
  }
  if (is_keyword(text))
    throw UsageError("'" + std::string(text) + "' is a keyword, not a name");
  return Name(std::string(text));
}

Name fresh_name(const std::string& base, const std::set<Name>& avoid) {
  for (unsigned long i = 0;; ++i) {
    Name cand(base + std::to_string(i));
    if (!avoid.count(cand)) return cand;
  }
}

ProcVar fresh_var(const std::string& base, const std::set<ProcVar>& avoid) {
  for (unsigned long i = 0;; ++i) {
    ProcVar cand(base + std::to_string(i));
    if (!avoid.count(cand)) return cand;
  }
}

}  // namespace compadapt
