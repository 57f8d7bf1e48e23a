#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "compadapt/adapt.hpp"
#include "compadapt/comp.hpp"
#include "compadapt/names.hpp"

namespace compadapt {

// Lexical or syntactic error, with a position inside the input.
struct ParseError : std::runtime_error {
  int line;
  int column;
  std::size_t offset;

  ParseError(const std::string& msg, int line_, int col_, std::size_t off_)
      : std::runtime_error(msg + " at line " + std::to_string(line_) + ", column " +
                           std::to_string(col_)),
        line(line_),
        column(col_),
        offset(off_) {}
};

// Shared grammar: `0`, `a.P`, `~a.P`, `!P`, `new a. P`, `P | Q`, parentheses,
// `#` line comments. Compensable adds `t[P, Q]`, `<P>`, variables and
// `inst(X => R).P`; adaptable adds `l[P]` and `upd l(X => Q).P`.
//
// parse_comp rejects reserved-namespace lexemes; parse_adapt accepts them,
// so printed encodings re-parse. Both enforce well-formedness post-parse.
CompPtr parse_comp(std::string_view text);
AdaptPtr parse_adapt(std::string_view text);

std::string print_comp(const CompPtr& p);
std::string print_adapt(const AdaptPtr& p);

// Path syntax for the command line: "" or "ε"/"eps" for the empty path,
// otherwise comma-separated names with an optional epsilon terminator.
Path parse_path(std::string_view text);

}  // namespace compadapt
