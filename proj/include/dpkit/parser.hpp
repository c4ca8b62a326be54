#pragma once

// Text syntax for DP formulas.
//
//   formula  := or ('->' formula)?
//   or       := and ('||' and)*
//   and      := unary ('&&' unary)*
//   unary    := '!' unary | ('exists'|'forall') x:S (',' y:S)* '.' formula
//             | 'true' | 'false' | 'congr' '(' t ',' t ',' d ')'
//             | t 'mod' d '==' t 'mod' d | t rel t | '(' formula ')'
//   rel      := '==' | '!=' | '>=' | '<=' | '>' | '<'
//   t        := sums and products of variables, integer literals, named
//               constants, ord(t) and ac(t); '(t):S' pins the sort of a
//               literal-only term.
//
// Sorts of free variables are inferred from use.

#include <cctype>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/formula.hpp"

namespace dpkit {

struct ParseOptions {
  std::set<std::string> constants{"eps", "pi"};
  Signature declared;  // sorts fixed in advance for free variables
};

namespace parse_detail {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok type;
  std::string text;
  std::int64_t value = 0;
  int line = 1, col = 1;
};

inline std::vector<Token> lex(const std::string& src) {
  static const char* puncts[] = {"->", ":=", "==", "!=", ">=", "<=", "&&", "||", "(", ")", ",", ".", ":",
                                 "+",  "-",  "*",  ">",  "<",  "!",  ";"};
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) { advance(1); continue; }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t{Tok::Punct, "", 0, line, col};
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      t.type = Tok::Int;
      t.text = src.substr(i, j - i);
      try {
        t.value = std::stoll(t.text);
      } catch (const std::exception&) {
        throw SyntaxError("integer literal out of range", line, col);
      }
      advance(j - i);
      out.push_back(t);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '\'')) ++j;
      t.type = Tok::Ident;
      t.text = src.substr(i, j - i);
      advance(j - i);
      out.push_back(t);
      continue;
    }
    bool matched = false;
    for (const char* p : puncts) {
      std::string ps(p);
      if (src.compare(i, ps.size(), ps) == 0) {
        t.text = ps;
        advance(ps.size());
        out.push_back(t);
        matched = true;
        break;
      }
    }
    if (!matched) throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
  }
  out.push_back({Tok::End, "<end>", 0, line, col});
  return out;
}

// Untyped trees produced by the parser before sort elaboration.
struct RTerm {
  TermKind kind;
  std::string name;
  std::int64_t value = 0;
  std::vector<RTerm> args;
  std::optional<Sort> annot;
  bool bound = false;
  std::optional<Sort> bound_sort;
  int line = 1, col = 1;
};

struct RForm {
  FormulaKind kind;
  std::string var;
  Sort qsort = Sort::VG;
  std::int64_t modulus = 0;
  std::vector<RTerm> terms;  // lhs, rhs for atoms
  std::vector<RForm> kids;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, const ParseOptions& opts) : toks_(std::move(toks)), opts_(opts) {
    for (auto& [n, s] : opts.declared) declared_.insert(n);
  }

  RForm formula() {
    RForm lhs = disjunction();
    if (accept("->")) {
      RForm rhs = formula();
      RForm neg{FormulaKind::Not, {}, Sort::VG, 0, {}, {std::move(lhs)}};
      return RForm{FormulaKind::Or, {}, Sort::VG, 0, {}, {std::move(neg), std::move(rhs)}};
    }
    return lhs;
  }

  RTerm term() {
    RTerm lhs = product();
    while (peek().text == "+" || peek().text == "-") {
      Token op = next();
      RTerm rhs = product();
      lhs = RTerm{op.text == "+" ? TermKind::Add : TermKind::Sub, {}, 0, {std::move(lhs), std::move(rhs)}, {}, false, {},
                  op.line, op.col};
    }
    return lhs;
  }

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(const std::string& p) {
    if (peek().type != Tok::Ident && peek().type != Tok::Int && peek().text == p) { ++pos_; return true; }
    if (peek().type == Tok::Ident && peek().text == p) { ++pos_; return true; }
    return false;
  }
  void expect(const std::string& p) {
    if (!accept(p)) error("expected '" + p + "' but found '" + peek().text + "'");
  }
  [[noreturn]] void error(const std::string& msg) const { throw SyntaxError(msg, peek().line, peek().col); }
  bool at_end() const { return peek().type == Tok::End; }
  std::size_t pos() const { return pos_; }

  std::string ident() {
    if (peek().type != Tok::Ident) error("expected identifier but found '" + peek().text + "'");
    return next().text;
  }

  Sort sort_name() {
    Token t = peek();
    std::string s = ident();
    auto so = parse_sort(s);
    if (!so) throw SyntaxError("unknown sort '" + s + "'", t.line, t.col);
    return *so;
  }

  std::int64_t integer() {
    bool negative = accept("-");
    if (peek().type != Tok::Int) error("expected integer but found '" + peek().text + "'");
    std::int64_t v = next().value;
    return negative ? -v : v;
  }

 private:
  RForm disjunction() {
    RForm f = conjunction();
    if (peek().text != "||") return f;
    RForm out{FormulaKind::Or, {}, Sort::VG, 0, {}, {std::move(f)}};
    while (accept("||")) out.kids.push_back(conjunction());
    return out;
  }

  RForm conjunction() {
    RForm f = unary();
    if (peek().text != "&&") return f;
    RForm out{FormulaKind::And, {}, Sort::VG, 0, {}, {std::move(f)}};
    while (accept("&&")) out.kids.push_back(unary());
    return out;
  }

  RForm unary() {
    if (accept("!")) return RForm{FormulaKind::Not, {}, Sort::VG, 0, {}, {unary()}};
    if (peek().type == Tok::Ident && (peek().text == "exists" || peek().text == "forall")) {
      FormulaKind k = next().text == "exists" ? FormulaKind::Exists : FormulaKind::Forall;
      std::vector<std::pair<std::string, Sort>> binders;
      do {
        std::string v = ident();
        if (v == "exists" || v == "forall" || v == "true" || v == "false") error("reserved word used as variable");
        expect(":");
        binders.emplace_back(v, sort_name());
      } while (accept(","));
      expect(".");
      for (auto& b : binders) scope_.push_back(b);
      RForm body = formula();
      for (std::size_t i = 0; i < binders.size(); ++i) scope_.pop_back();
      for (auto it = binders.rbegin(); it != binders.rend(); ++it)
        body = RForm{k, it->first, it->second, 0, {}, {std::move(body)}};
      return body;
    }
    if (peek().type == Tok::Ident && (peek().text == "true" || peek().text == "false")) {
      bool t = next().text == "true";
      return RForm{t ? FormulaKind::True : FormulaKind::False, {}, Sort::VG, 0, {}, {}};
    }
    if (peek().type == Tok::Ident && peek().text == "congr" && peek(1).text == "(") {
      next();
      expect("(");
      RTerm a = term();
      expect(",");
      RTerm b = term();
      expect(",");
      Token dt = peek();
      std::int64_t d = integer();
      if (d < 2) throw SyntaxError("congruence modulus must be >= 2", dt.line, dt.col);
      expect(")");
      return RForm{FormulaKind::Congr, {}, Sort::VG, d, {std::move(a), std::move(b)}, {}};
    }
    if (peek().text == "(") {
      // Either a parenthesized formula or an atom whose left term starts
      // with '('. Try the atom first and fall back.
      std::size_t save = pos_;
      try {
        return atom();
      } catch (const SyntaxError& atom_err) {
        std::size_t atom_reach = furthest_;
        pos_ = save;
        try {
          next();
          RForm f = formula();
          expect(")");
          return f;
        } catch (const SyntaxError& paren_err) {
          if (atom_reach > furthest_) throw atom_err;
          throw;
        }
      }
    }
    return atom();
  }

  RForm atom() {
    RTerm lhs = term();
    note_reach();
    if (peek().type == Tok::Ident && peek().text == "mod") {
      next();
      std::int64_t d1 = integer();
      expect("==");
      RTerm rhs = term();
      if (!(peek().type == Tok::Ident && peek().text == "mod")) error("expected 'mod'");
      next();
      Token dt = peek();
      std::int64_t d2 = integer();
      if (d1 != d2) throw SyntaxError("both sides of a congruence need the same modulus", dt.line, dt.col);
      if (d1 < 2) throw SyntaxError("congruence modulus must be >= 2", dt.line, dt.col);
      return RForm{FormulaKind::Congr, {}, Sort::VG, d1, {std::move(lhs), std::move(rhs)}, {}};
    }
    Token op = peek();
    static const std::set<std::string> rels{"==", "!=", ">=", "<=", ">", "<"};
    if (op.type != Tok::Punct || !rels.count(op.text)) error("expected comparison but found '" + op.text + "'");
    next();
    RTerm rhs = term();
    note_reach();
    auto one = [&] { return RTerm{TermKind::Int, {}, 1, {}, {}, false, {}, op.line, op.col}; };
    auto plus1 = [&](RTerm t) {
      return RTerm{TermKind::Add, {}, 0, {std::move(t), one()}, {}, false, {}, op.line, op.col};
    };
    auto mk = [](FormulaKind k, RTerm a, RTerm b) {
      return RForm{k, {}, Sort::VG, 0, {std::move(a), std::move(b)}, {}};
    };
    if (op.text == "==") return mk(FormulaKind::Eq, std::move(lhs), std::move(rhs));
    if (op.text == "!=")
      return RForm{FormulaKind::Not, {}, Sort::VG, 0, {}, {mk(FormulaKind::Eq, std::move(lhs), std::move(rhs))}};
    if (op.text == ">=") return mk(FormulaKind::Geq, std::move(lhs), std::move(rhs));
    if (op.text == "<=") return mk(FormulaKind::Geq, std::move(rhs), std::move(lhs));
    if (op.text == ">") return mk(FormulaKind::Geq, std::move(lhs), plus1(std::move(rhs)));
    return mk(FormulaKind::Geq, std::move(rhs), plus1(std::move(lhs)));
  }

  RTerm product() {
    RTerm lhs = negation();
    while (peek().text == "*") {
      Token op = next();
      RTerm rhs = negation();
      lhs = RTerm{TermKind::Mul, {}, 0, {std::move(lhs), std::move(rhs)}, {}, false, {}, op.line, op.col};
    }
    return lhs;
  }

  RTerm negation() {
    if (peek().text == "-" && peek().type == Tok::Punct) {
      Token op = next();
      if (peek().type == Tok::Int) {
        Token lit = next();
        RTerm t{TermKind::Int, {}, -lit.value, {}, {}, false, {}, op.line, op.col};
        return annotated(std::move(t));
      }
      return RTerm{TermKind::Neg, {}, 0, {negation()}, {}, false, {}, op.line, op.col};
    }
    return primary();
  }

  RTerm annotated(RTerm t) {
    if (peek().text == ":" && peek(1).type == Tok::Ident && parse_sort(peek(1).text)) {
      next();
      t.annot = sort_name();
    }
    return t;
  }

  RTerm primary() {
    Token t = peek();
    if (t.type == Tok::Int) {
      next();
      return annotated(RTerm{TermKind::Int, {}, t.value, {}, {}, false, {}, t.line, t.col});
    }
    if (t.text == "(" && t.type == Tok::Punct) {
      next();
      RTerm inner = term();
      expect(")");
      return annotated(std::move(inner));
    }
    if (t.type == Tok::Ident) {
      next();
      if ((t.text == "ord" || t.text == "ac") && peek().text == "(") {
        next();
        RTerm arg = term();
        expect(")");
        return RTerm{t.text == "ord" ? TermKind::Ord : TermKind::Ac, {}, 0, {std::move(arg)}, {}, false, {}, t.line, t.col};
      }
      static const std::set<std::string> reserved{"exists", "forall", "true", "false", "congr", "mod", "ord", "ac"};
      if (reserved.count(t.text)) throw SyntaxError("unexpected keyword '" + t.text + "'", t.line, t.col);
      for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
        if (it->first == t.text) return RTerm{TermKind::Var, t.text, 0, {}, {}, true, it->second, t.line, t.col};
      if (!declared_.count(t.text) && opts_.constants.count(t.text))
        return RTerm{TermKind::Const, t.text, 0, {}, {}, false, {}, t.line, t.col};
      return RTerm{TermKind::Var, t.text, 0, {}, {}, false, {}, t.line, t.col};
    }
    throw SyntaxError("unexpected '" + t.text + "'", t.line, t.col);
  }

  void note_reach() { furthest_ = std::max(furthest_, pos_); }

  std::vector<Token> toks_;
  const ParseOptions& opts_;
  std::set<std::string> declared_;
  std::vector<std::pair<std::string, Sort>> scope_;
  std::size_t pos_ = 0;
  std::size_t furthest_ = 0;
};

// ---- sort elaboration ----------------------------------------------------

class Elaborator {
 public:
  explicit Elaborator(const Signature& declared) {
    for (auto& [n, s] : declared) free_[n] = s;
  }

  std::optional<Sort> infer(const RTerm& t) const {
    if (t.annot) return t.annot;
    switch (t.kind) {
      case TermKind::Var: {
        if (t.bound) return t.bound_sort;
        auto it = free_.find(t.name);
        return it == free_.end() ? std::nullopt : std::optional<Sort>(it->second);
      }
      case TermKind::Int: return std::nullopt;
      case TermKind::Const: return Sort::VF;
      case TermKind::Ord: return Sort::VG;
      case TermKind::Ac: return Sort::RF;
      default:
        for (auto& a : t.args)
          if (auto s = infer(a)) return s;
        return std::nullopt;
    }
  }

  // Pushes an expected sort down to free variables whose sort is unknown.
  void propagate(const RTerm& t, std::optional<Sort> s) {
    switch (t.kind) {
      case TermKind::Var:
        if (!t.bound && s && !free_.count(t.name)) {
          free_[t.name] = *s;
          progress_ = true;
        }
        return;
      case TermKind::Ord:
      case TermKind::Ac: propagate(t.args[0], Sort::VF); return;
      case TermKind::Int:
      case TermKind::Const: return;
      default: {
        std::optional<Sort> inner = t.annot ? t.annot : s;
        if (!inner) inner = infer(t);
        for (auto& a : t.args) propagate(a, inner);
      }
    }
  }

  void walk(const RForm& f) {
    if (f.kind == FormulaKind::Eq) {
      auto s = infer(f.terms[0]);
      if (!s) s = infer(f.terms[1]);
      propagate(f.terms[0], s);
      propagate(f.terms[1], s);
    } else if (f.kind == FormulaKind::Geq || f.kind == FormulaKind::Congr) {
      propagate(f.terms[0], Sort::VG);
      propagate(f.terms[1], Sort::VG);
    }
    for (auto& k : f.kids) walk(k);
  }

  void solve(const RForm& f) {
    do {
      progress_ = false;
      walk(f);
    } while (progress_);
  }

  Term build(const RTerm& t, Sort s) const {
    Sort here = t.annot ? *t.annot : s;
    switch (t.kind) {
      case TermKind::Var: {
        auto vs = infer(t);
        if (!vs)
          throw Error(ErrorKind::UnboundSortAnnotation, "cannot infer the sort of '" + t.name + "' at line " +
                                                            std::to_string(t.line) + ", column " + std::to_string(t.col));
        return term::var(t.name, *vs);
      }
      case TermKind::Int: return term::lit(t.value, here);
      case TermKind::Const: return term::constant(t.name);
      case TermKind::Ord: return term::ord(build(t.args[0], Sort::VF));
      case TermKind::Ac: return term::ac(build(t.args[0], Sort::VF));
      default: {
        std::vector<Term> args;
        for (auto& a : t.args) args.push_back(build(a, here));
        return term::make(t.kind, here, std::move(args));
      }
    }
  }

  Formula build(const RForm& f) const {
    switch (f.kind) {
      case FormulaKind::True: return fml::truth();
      case FormulaKind::False: return fml::falsity();
      case FormulaKind::Eq: {
        auto s = infer(f.terms[0]);
        if (!s) s = infer(f.terms[1]);
        Sort so = s.value_or(Sort::VG);
        FormulaNode n{FormulaKind::Eq, so, {}, 0, build(f.terms[0], so), build(f.terms[1], so), {}};
        return fml::make(std::move(n));
      }
      case FormulaKind::Geq: return fml::geq(build(f.terms[0], Sort::VG), build(f.terms[1], Sort::VG));
      case FormulaKind::Congr:
        return fml::congr(build(f.terms[0], Sort::VG), build(f.terms[1], Sort::VG), f.modulus);
      case FormulaKind::Not: return fml::lnot(build(f.kids[0]));
      case FormulaKind::And:
      case FormulaKind::Or: {
        std::vector<Formula> ks;
        for (auto& k : f.kids) ks.push_back(build(k));
        return f.kind == FormulaKind::And ? fml::land(std::move(ks)) : fml::lor(std::move(ks));
      }
      case FormulaKind::Exists: return fml::exists(f.var, f.qsort, build(f.kids[0]));
      case FormulaKind::Forall: return fml::forall(f.var, f.qsort, build(f.kids[0]));
    }
    fail(ErrorKind::InvalidArgument, "unreachable formula kind");
  }

 private:
  std::map<std::string, Sort> free_;
  bool progress_ = false;
};

inline void check_declared(const Formula& f, const Signature& declared) {
  for (auto& [n, s] : free_signature(f))
    for (auto& [dn, ds] : declared)
      if (dn == n && ds != s) fail(ErrorKind::SortError, "variable '" + n + "' declared " + to_string(ds) + " but used as " + to_string(s));
}

}  // namespace parse_detail

/// Parses and sort-checks a formula.
inline Formula parse_formula(const std::string& text, const ParseOptions& opts = {}) {
  parse_detail::Parser p(parse_detail::lex(text), opts);
  auto raw = p.formula();
  if (!p.at_end()) p.error("unexpected trailing '" + p.peek().text + "'");
  parse_detail::Elaborator el(opts.declared);
  el.solve(raw);
  Formula f = el.build(raw);
  sort_check(f);
  parse_detail::check_declared(f, opts.declared);
  return f;
}

/// Parses a term; literal-only terms take the expected sort.
inline Term parse_term(const std::string& text, Sort expected, const ParseOptions& opts = {}) {
  parse_detail::Parser p(parse_detail::lex(text), opts);
  auto raw = p.term();
  if (!p.at_end()) p.error("unexpected trailing '" + p.peek().text + "'");
  parse_detail::Elaborator el(opts.declared);
  el.propagate(raw, expected);
  Term t = el.build(raw, expected);
  std::map<std::string, Sort> used;
  detail::check_term(t, used);
  if (t->sort != expected)
    fail(ErrorKind::SortError, "term '" + print(t) + "' has sort " + to_string(t->sort) + ", expected " + to_string(expected));
  return t;
}

struct NamedSet {
  std::string name;
  DefinableSet set;
};

/// Parses `name(x:VF, k:VG) := formula;` declarations.
inline std::vector<NamedSet> parse_definitions(const std::string& text, const ParseOptions& base = {}) {
  auto toks = parse_detail::lex(text);
  std::vector<NamedSet> out;
  std::size_t start = 0;
  while (toks[start].type != parse_detail::Tok::End) {
    // Split on top-level ';' so each definition is parsed on its own.
    std::size_t end = start;
    while (toks[end].type != parse_detail::Tok::End && toks[end].text != ";") ++end;
    if (toks[end].type == parse_detail::Tok::End)
      throw SyntaxError("missing ';' after definition", toks[end].line, toks[end].col);
    std::vector<parse_detail::Token> part(toks.begin() + static_cast<long>(start), toks.begin() + static_cast<long>(end));
    part.push_back({parse_detail::Tok::End, "<end>", 0, toks[end].line, toks[end].col});

    ParseOptions opts = base;
    opts.declared.clear();
    parse_detail::Parser head(part, opts);
    std::string name = head.ident();
    head.expect("(");
    Signature sig;
    if (!head.accept(")")) {
      do {
        std::string v = head.ident();
        head.expect(":");
        sig.emplace_back(v, head.sort_name());
      } while (head.accept(","));
      head.expect(")");
    }
    head.expect(":=");
    std::vector<parse_detail::Token> body(part.begin() + static_cast<long>(head.pos()), part.end());
    opts.declared = sig;
    parse_detail::Parser bp(body, opts);
    auto raw = bp.formula();
    if (!bp.at_end()) bp.error("unexpected trailing '" + bp.peek().text + "'");
    parse_detail::Elaborator el(sig);
    el.solve(raw);
    Formula f = el.build(raw);
    sort_check(f);
    parse_detail::check_declared(f, sig);
    out.push_back({name, DefinableSet::make(sig, f)});
    start = end + 1;
  }
  return out;
}

/// Renders definitions in the format read by parse_definitions.
inline std::string print_definition(const std::string& name, const DefinableSet& s) {
  std::string out = name + "(";
  for (std::size_t i = 0; i < s.signature.size(); ++i) {
    if (i) out += ", ";
    out += s.signature[i].first + ":" + to_string(s.signature[i].second);
  }
  return out + ") := " + print(s.formula) + ";";
}

}  // namespace dpkit
