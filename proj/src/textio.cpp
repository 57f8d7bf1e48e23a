#include "compadapt/textio.hpp"

#include <cctype>
#include <vector>

namespace compadapt {

namespace {

enum class Tok {
  End, Zero, Name, Var, ReservedName, Bang, Tilde, Dot, Bar, LParen, RParen,
  LBrack, RBrack, Comma, Less, Greater, Arrow, KwNew, KwInst, KwUpd
};

struct Token {
  Tok kind;
  std::string text;  // identifier / full reserved key
  int line, col;
  std::size_t off;
};

struct Lexer {
  std::string_view src;
  std::size_t pos = 0;
  int line = 1, col = 1;

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line, col, pos); }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos < src.size(); ++i) {
      if (src[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++pos;
    }
  }

  void skip_ws() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  bool at_epsilon() const {
    return pos + 1 < src.size() && static_cast<unsigned char>(src[pos]) == 0xCE &&
           static_cast<unsigned char>(src[pos + 1]) == 0xB5;
  }

  std::string ident() {
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_' ||
            src[pos] == '\''))
      advance();
    return std::string(src.substr(start, pos - start));
  }

  Token next() {
    skip_ws();
    Token t{Tok::End, "", line, col, pos};
    if (pos >= src.size()) return t;
    char c = src[pos];
    switch (c) {
      case '!': advance(); t.kind = Tok::Bang; return t;
      case '~': advance(); t.kind = Tok::Tilde; return t;
      case '.': advance(); t.kind = Tok::Dot; return t;
      case '|': advance(); t.kind = Tok::Bar; return t;
      case '(': advance(); t.kind = Tok::LParen; return t;
      case ')': advance(); t.kind = Tok::RParen; return t;
      case '[': advance(); t.kind = Tok::LBrack; return t;
      case ']': advance(); t.kind = Tok::RBrack; return t;
      case ',': advance(); t.kind = Tok::Comma; return t;
      case '<': advance(); t.kind = Tok::Less; return t;
      case '>': advance(); t.kind = Tok::Greater; return t;
      case '0': advance(); t.kind = Tok::Zero; return t;
      default: break;
    }
    if (c == '=') {
      if (pos + 1 < src.size() && src[pos + 1] == '>') {
        advance(2);
        t.kind = Tok::Arrow;
        return t;
      }
      fail("unexpected '='");
    }
    if (c == kReservedMarker) {
      t.kind = Tok::ReservedName;
      t.text = lex_reserved();
      return t;
    }
    if (c >= 'a' && c <= 'z') {
      std::string id = ident();
      if (id == "new") t.kind = Tok::KwNew;
      else if (id == "inst") t.kind = Tok::KwInst;
      else if (id == "upd") t.kind = Tok::KwUpd;
      else {
        t.kind = Tok::Name;
        t.text = id;
      }
      return t;
    }
    if (c >= 'A' && c <= 'Z') {
      t.kind = Tok::Var;
      t.text = ident();
      return t;
    }
    if (at_epsilon()) fail("epsilon is only valid inside a reserved-name path");
    fail(std::string("unexpected character '") + c + "'");
  }

  // "$kind.index" where the index is one name for l/k/m/gamma and a path
  // ending in epsilon otherwise.
  std::string lex_reserved() {
    std::string key;
    key += src[pos];
    advance();  // '$'
    std::string kind = ident();
    if (kind.empty()) fail("expected reserved-name kind after '$'");
    ReservedKind rk;
    bool found = false;
    for (int i = 0; i < 14; ++i) {
      if (kind == reserved_kind_text(static_cast<ReservedKind>(i))) {
        rk = static_cast<ReservedKind>(i);
        found = true;
        break;
      }
    }
    if (!found) fail("unknown reserved-name kind '" + kind + "'");
    key += kind;
    if (pos >= src.size() || src[pos] != '.') fail("expected '.' after reserved-name kind");
    advance();
    key += '.';
    if (reserved_kind_takes_name(rk)) {
      std::string n = ident();
      if (n.empty()) fail("expected a name index in reserved name");
      key += n;
      return key;
    }
    // Path: segments separated by commas, terminated by epsilon.
    while (true) {
      if (at_epsilon()) {
        advance(2);
        key += kEpsilon;
        return key;
      }
      std::string seg = ident();
      if (seg.empty()) fail("expected a path segment or epsilon in reserved name");
      key += seg;
      if (pos >= src.size() || src[pos] != ',') fail("expected ',' in reserved-name path");
      advance();
      key += ',';
    }
  }
};

struct Parser {
  Lexer lex;
  Token tok;
  bool comp;  // which calculus

  explicit Parser(std::string_view src, bool comp_mode) : lex{src}, comp(comp_mode) {
    tok = lex.next();
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, tok.line, tok.col, tok.off);
  }

  void eat(Tok k, const char* what) {
    if (tok.kind != k) fail(std::string("expected ") + what);
    tok = lex.next();
  }

  Name name_token() {
    if (tok.kind == Tok::Name) {
      Name n(tok.text);
      tok = lex.next();
      return n;
    }
    if (tok.kind == Tok::ReservedName) {
      if (comp) fail("reserved names are not allowed in compensable terms");
      Name n(tok.text);
      tok = lex.next();
      return n;
    }
    fail("expected a name");
  }

  // --- compensable ---

  CompPtr c_par() {
    CompPtr left = c_item();
    if (tok.kind == Tok::Bar) {
      tok = lex.next();
      return comp_par(left, c_par());
    }
    return left;
  }

  CompPtr c_item() {
    if (tok.kind == Tok::KwNew) {
      tok = lex.next();
      Name n = name_token();
      eat(Tok::Dot, "'.' after restriction binder");
      return comp_restrict(n, c_par());
    }
    return c_prefix();
  }

  CompPtr c_continuation() {
    if (tok.kind == Tok::Dot) {
      tok = lex.next();
      return c_prefix();
    }
    return comp_nil();
  }

  CompPtr c_prefix() {
    switch (tok.kind) {
      case Tok::Zero:
        tok = lex.next();
        return comp_nil();
      case Tok::Bang: {
        tok = lex.next();
        return comp_repl(c_prefix());
      }
      case Tok::Tilde: {
        tok = lex.next();
        Name n = name_token();
        return comp_out(n, c_continuation());
      }
      case Tok::Less: {
        tok = lex.next();
        CompPtr body = c_par();
        eat(Tok::Greater, "'>' closing protected block");
        return comp_protected(body);
      }
      case Tok::LParen: {
        tok = lex.next();
        CompPtr body = c_par();
        eat(Tok::RParen, "')'");
        return body;
      }
      case Tok::Var: {
        ProcVar v(tok.text);
        tok = lex.next();
        return comp_var(v);
      }
      case Tok::KwInst: {
        tok = lex.next();
        eat(Tok::LParen, "'(' after inst");
        if (tok.kind != Tok::Var) fail("expected a process variable in inst");
        ProcVar v(tok.text);
        tok = lex.next();
        eat(Tok::Arrow, "'=>' in inst");
        CompPtr body = c_par();
        eat(Tok::RParen, "')' closing inst");
        return comp_inst(v, body, c_continuation());
      }
      case Tok::KwUpd:
        fail("'upd' belongs to the adaptable calculus");
      case Tok::ReservedName:
        fail("reserved names are not allowed in compensable terms");
      case Tok::Name: {
        Name n(tok.text);
        tok = lex.next();
        if (tok.kind == Tok::LBrack) {
          tok = lex.next();
          CompPtr dflt = c_par();
          eat(Tok::Comma, "',' between transaction default and compensation");
          CompPtr compn = c_par();
          eat(Tok::RBrack, "']' closing transaction");
          return comp_trans(n, dflt, compn);
        }
        return comp_in(n, c_continuation());
      }
      default:
        fail("expected a process");
    }
  }

  // --- adaptable ---

  AdaptPtr a_par() {
    AdaptPtr left = a_item();
    if (tok.kind == Tok::Bar) {
      tok = lex.next();
      return adapt_par(left, a_par());
    }
    return left;
  }

  AdaptPtr a_item() {
    if (tok.kind == Tok::KwNew) {
      tok = lex.next();
      Name n = name_token();
      eat(Tok::Dot, "'.' after restriction binder");
      return adapt_restrict(n, a_par());
    }
    return a_prefix();
  }

  AdaptPtr a_continuation() {
    if (tok.kind == Tok::Dot) {
      tok = lex.next();
      return a_prefix();
    }
    return adapt_nil();
  }

  AdaptPtr a_prefix() {
    switch (tok.kind) {
      case Tok::Zero:
        tok = lex.next();
        return adapt_nil();
      case Tok::Bang: {
        tok = lex.next();
        return adapt_repl(a_prefix());
      }
      case Tok::Tilde: {
        tok = lex.next();
        Name n = name_token();
        return adapt_out(n, a_continuation());
      }
      case Tok::LParen: {
        tok = lex.next();
        AdaptPtr body = a_par();
        eat(Tok::RParen, "')'");
        return body;
      }
      case Tok::Var: {
        ProcVar v(tok.text);
        tok = lex.next();
        return adapt_var(v);
      }
      case Tok::KwUpd: {
        tok = lex.next();
        Name l = name_token();
        eat(Tok::LParen, "'(' after update target");
        if (tok.kind != Tok::Var) fail("expected a process variable in upd");
        ProcVar v(tok.text);
        tok = lex.next();
        eat(Tok::Arrow, "'=>' in upd");
        AdaptPtr body = a_par();
        eat(Tok::RParen, "')' closing upd");
        return adapt_upd(l, v, body, a_continuation());
      }
      case Tok::KwInst:
        fail("'inst' belongs to the compensable calculus");
      case Tok::Less:
        fail("protected blocks belong to the compensable calculus");
      case Tok::Name:
      case Tok::ReservedName: {
        Name n = name_token();
        if (tok.kind == Tok::LBrack) {
          tok = lex.next();
          AdaptPtr body = a_par();
          eat(Tok::RBrack, "']' closing location");
          return adapt_loc(n, body);
        }
        return adapt_in(n, a_continuation());
      }
      default:
        fail("expected a process");
    }
  }
};

CompPtr find_prefixed_block(const CompPtr& p, bool under_prefix) {
  switch (p->kind) {
    case Comp::Kind::Nil:
    case Comp::Kind::Var:
      return nullptr;
    case Comp::Kind::In:
    case Comp::Kind::Out:
      return find_prefixed_block(p->a, true);
    case Comp::Kind::Repl:
    case Comp::Kind::Restrict:
      return find_prefixed_block(p->a, under_prefix);
    case Comp::Kind::Par:
    case Comp::Kind::Inst: {
      if (CompPtr r = find_prefixed_block(p->a, under_prefix)) return r;
      return find_prefixed_block(p->b, under_prefix);
    }
    case Comp::Kind::Trans:
    case Comp::Kind::Protected: {
      if (under_prefix) return p;
      if (CompPtr r = find_prefixed_block(p->a, under_prefix)) return r;
      if (p->b) return find_prefixed_block(p->b, under_prefix);
      return nullptr;
    }
  }
  return nullptr;
}

// --- printers ---

bool comp_needs_parens_inline(const CompPtr& p) {
  return p->kind == Comp::Kind::Par || p->kind == Comp::Kind::Restrict;
}

void print_comp_rec(const CompPtr& p, std::string& out, bool inline_pos);

void print_comp_continuation(const CompPtr& p, std::string& out) {
  if (p->kind == Comp::Kind::Nil) return;
  out += '.';
  print_comp_rec(p, out, true);
}

void print_comp_rec(const CompPtr& p, std::string& out, bool inline_pos) {
  if (inline_pos && comp_needs_parens_inline(p)) {
    out += '(';
    print_comp_rec(p, out, false);
    out += ')';
    return;
  }
  switch (p->kind) {
    case Comp::Kind::Nil:
      out += '0';
      return;
    case Comp::Kind::In:
      out += p->name.key;
      print_comp_continuation(p->a, out);
      return;
    case Comp::Kind::Out:
      out += '~';
      out += p->name.key;
      print_comp_continuation(p->a, out);
      return;
    case Comp::Kind::Repl:
      out += '!';
      print_comp_rec(p->a, out, true);
      return;
    case Comp::Kind::Restrict:
      out += "new ";
      out += p->name.key;
      out += ". ";
      print_comp_rec(p->a, out, false);
      return;
    case Comp::Kind::Par: {
      // Left operand parenthesized when structured, so raw shapes re-parse.
      if (p->a->kind == Comp::Kind::Par || p->a->kind == Comp::Kind::Restrict) {
        out += '(';
        print_comp_rec(p->a, out, false);
        out += ')';
      } else {
        print_comp_rec(p->a, out, false);
      }
      out += " | ";
      print_comp_rec(p->b, out, false);
      return;
    }
    case Comp::Kind::Trans:
      out += p->name.key;
      out += '[';
      print_comp_rec(p->a, out, false);
      out += ", ";
      print_comp_rec(p->b, out, false);
      out += ']';
      return;
    case Comp::Kind::Protected:
      out += '<';
      print_comp_rec(p->a, out, false);
      out += '>';
      return;
    case Comp::Kind::Var:
      out += p->var.text;
      return;
    case Comp::Kind::Inst:
      out += "inst(";
      out += p->var.text;
      out += " => ";
      print_comp_rec(p->a, out, false);
      out += ')';
      print_comp_continuation(p->b, out);
      return;
  }
}

bool adapt_needs_parens_inline(const AdaptPtr& p) {
  return p->kind == Adapt::Kind::Par || p->kind == Adapt::Kind::Restrict;
}

void print_adapt_rec(const AdaptPtr& p, std::string& out, bool inline_pos);

void print_adapt_continuation(const AdaptPtr& p, std::string& out) {
  if (p->kind == Adapt::Kind::Nil) return;
  out += '.';
  print_adapt_rec(p, out, true);
}

void print_adapt_rec(const AdaptPtr& p, std::string& out, bool inline_pos) {
  if (inline_pos && adapt_needs_parens_inline(p)) {
    out += '(';
    print_adapt_rec(p, out, false);
    out += ')';
    return;
  }
  switch (p->kind) {
    case Adapt::Kind::Nil:
      out += '0';
      return;
    case Adapt::Kind::In:
      out += p->name.key;
      print_adapt_continuation(p->a, out);
      return;
    case Adapt::Kind::Out:
      out += '~';
      out += p->name.key;
      print_adapt_continuation(p->a, out);
      return;
    case Adapt::Kind::Upd:
      out += "upd ";
      out += p->name.key;
      out += '(';
      out += p->var.text;
      out += " => ";
      print_adapt_rec(p->a, out, false);
      out += ')';
      print_adapt_continuation(p->b, out);
      return;
    case Adapt::Kind::Loc:
      out += p->name.key;
      out += '[';
      print_adapt_rec(p->a, out, false);
      out += ']';
      return;
    case Adapt::Kind::Repl:
      out += '!';
      print_adapt_rec(p->a, out, true);
      return;
    case Adapt::Kind::Restrict:
      out += "new ";
      out += p->name.key;
      out += ". ";
      print_adapt_rec(p->a, out, false);
      return;
    case Adapt::Kind::Par: {
      if (p->a->kind == Adapt::Kind::Par || p->a->kind == Adapt::Kind::Restrict) {
        out += '(';
        print_adapt_rec(p->a, out, false);
        out += ')';
      } else {
        print_adapt_rec(p->a, out, false);
      }
      out += " | ";
      print_adapt_rec(p->b, out, false);
      return;
    }
    case Adapt::Kind::Var:
      out += p->var.text;
      return;
  }
}

}  // namespace

CompPtr parse_comp(std::string_view text) {
  Parser p(text, true);
  CompPtr term = p.c_par();
  if (p.tok.kind != Tok::End) p.fail("trailing input after process");
  if (CompPtr bad = find_prefixed_block(term, false)) {
    std::string s;
    print_comp_rec(bad, s, false);
    throw ParseError("transaction or protected block behind a prefix: " + s, 1, 1, 0);
  }
  return term;
}

AdaptPtr parse_adapt(std::string_view text) {
  Parser p(text, false);
  AdaptPtr term = p.a_par();
  if (p.tok.kind != Tok::End) p.fail("trailing input after process");
  return term;
}

std::string print_comp(const CompPtr& p) {
  std::string out;
  print_comp_rec(p, out, false);
  return out;
}

std::string print_adapt(const AdaptPtr& p) {
  std::string out;
  print_adapt_rec(p, out, false);
  return out;
}

Path parse_path(std::string_view text) {
  Path out;
  if (text.empty() || text == kEpsilon || text == "eps") return out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    std::string_view seg =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (seg != kEpsilon && seg != "eps" && !seg.empty()) out.push_back(validate_user_name(seg));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace compadapt
