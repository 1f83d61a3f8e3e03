#include "unfo/syntax.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>

namespace unfo {

FPtr mkTrue() {
  auto f = std::make_shared<Formula>();
  f->kind = FKind::True;
  return f;
}
FPtr mkFalse() {
  auto f = std::make_shared<Formula>();
  f->kind = FKind::False;
  return f;
}
FPtr mkAtom(SymRef s, std::vector<Var> args, int line, int col) {
  auto f = std::make_shared<Formula>();
  f->kind = FKind::Atom;
  f->sym = s;
  f->args = std::move(args);
  f->line = line;
  f->col = col;
  return f;
}
FPtr mkEq(Var a, Var b, int line, int col) {
  auto f = std::make_shared<Formula>();
  f->kind = FKind::Eq;
  f->lhs = a;
  f->rhs = b;
  f->line = line;
  f->col = col;
  return f;
}
FPtr mkAnd(std::vector<FPtr> kids) {
  if (kids.empty()) return mkTrue();
  if (kids.size() == 1) return kids[0];
  auto f = std::make_shared<Formula>();
  f->kind = FKind::And;
  f->kids = std::move(kids);
  return f;
}
FPtr mkOr(std::vector<FPtr> kids) {
  if (kids.empty()) return mkFalse();
  if (kids.size() == 1) return kids[0];
  auto f = std::make_shared<Formula>();
  f->kind = FKind::Or;
  f->kids = std::move(kids);
  return f;
}
FPtr mkExists(std::vector<Var> bound, FPtr body, int line, int col) {
  auto f = std::make_shared<Formula>();
  f->kind = FKind::Exists;
  f->bound = std::move(bound);
  f->body = std::move(body);
  f->line = line;
  f->col = col;
  return f;
}
FPtr mkNeg(FPtr body, int line, int col) {
  auto f = std::make_shared<Formula>();
  f->kind = FKind::Neg;
  f->body = std::move(body);
  f->line = line;
  f->col = col;
  return f;
}
FPtr mkAnd2(FPtr a, FPtr b) { return mkAnd({std::move(a), std::move(b)}); }
FPtr mkOr2(FPtr a, FPtr b) { return mkOr({std::move(a), std::move(b)}); }

static void collectFree(const FPtr& f, std::set<Var>& bound, std::set<Var>& out) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
      return;
    case FKind::Atom:
      for (Var v : f->args)
        if (!bound.count(v)) out.insert(v);
      return;
    case FKind::Eq:
      if (!bound.count(f->lhs)) out.insert(f->lhs);
      if (!bound.count(f->rhs)) out.insert(f->rhs);
      return;
    case FKind::And:
    case FKind::Or:
      for (auto& k : f->kids) collectFree(k, bound, out);
      return;
    case FKind::Exists: {
      std::vector<Var> added;
      for (Var v : f->bound)
        if (bound.insert(v).second) added.push_back(v);
      collectFree(f->body, bound, out);
      for (Var v : added) bound.erase(v);
      return;
    }
    case FKind::Neg:
      collectFree(f->body, bound, out);
      return;
  }
}

std::set<Var> freeVars(const FPtr& f) {
  std::set<Var> bound, out;
  collectFree(f, bound, out);
  return out;
}

bool structEqual(const FPtr& a, const FPtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case FKind::True:
    case FKind::False:
      return true;
    case FKind::Atom:
      return a->sym == b->sym && a->args == b->args;
    case FKind::Eq:
      return a->lhs == b->lhs && a->rhs == b->rhs;
    case FKind::And:
    case FKind::Or: {
      if (a->kids.size() != b->kids.size()) return false;
      for (size_t i = 0; i < a->kids.size(); ++i)
        if (!structEqual(a->kids[i], b->kids[i])) return false;
      return true;
    }
    case FKind::Exists:
      return a->bound == b->bound && structEqual(a->body, b->body);
    case FKind::Neg:
      return structEqual(a->body, b->body);
  }
  return false;
}

bool isQuantifierFree(const FPtr& f) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
    case FKind::Atom:
    case FKind::Eq:
      return true;
    case FKind::And:
    case FKind::Or:
      for (auto& k : f->kids)
        if (!isQuantifierFree(k)) return false;
      return true;
    case FKind::Exists:
      return false;
    case FKind::Neg:
      return isQuantifierFree(f->body);
  }
  return false;
}

static Var applyMap(Var v, const std::vector<Var>& map) {
  if (v >= 0 && v < (int)map.size() && map[v] >= 0) return map[v];
  return v;
}

FPtr substitute(const FPtr& f, const std::vector<Var>& map) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
      return f;
    case FKind::Atom: {
      std::vector<Var> args;
      for (Var v : f->args) args.push_back(applyMap(v, map));
      return mkAtom(f->sym, std::move(args), f->line, f->col);
    }
    case FKind::Eq:
      return mkEq(applyMap(f->lhs, map), applyMap(f->rhs, map), f->line, f->col);
    case FKind::And:
    case FKind::Or: {
      std::vector<FPtr> kids;
      for (auto& k : f->kids) kids.push_back(substitute(k, map));
      return f->kind == FKind::And ? mkAnd(std::move(kids)) : mkOr(std::move(kids));
    }
    case FKind::Exists: {
      std::vector<Var> bound;
      for (Var v : f->bound) bound.push_back(applyMap(v, map));
      return mkExists(std::move(bound), substitute(f->body, map), f->line, f->col);
    }
    case FKind::Neg:
      return mkNeg(substitute(f->body, map), f->line, f->col);
  }
  return f;
}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok { Name, Int, LBrace, RBrace, LParen, RParen, Semi, Comma, Dot,
                 Eq, Amp, Bar, Bang, Slash, End };

struct Lexer {
  const std::string& s;
  size_t pos = 0;
  int line = 1, col = 1;
  Tok tok = Tok::End;
  std::string text;
  int tokLine = 1, tokCol = 1;

  explicit Lexer(const std::string& src) : s(src) { advance(); }

  void step() {
    if (pos < s.size()) {
      if (s[pos] == '\n') { ++line; col = 1; } else ++col;
      ++pos;
    }
  }

  void advance() {
    while (pos < s.size()) {
      char c = s[pos];
      if (c == '#') {
        while (pos < s.size() && s[pos] != '\n') step();
      } else if (isspace((unsigned char)c)) {
        step();
      } else {
        break;
      }
    }
    tokLine = line;
    tokCol = col;
    if (pos >= s.size()) { tok = Tok::End; text.clear(); return; }
    char c = s[pos];
    auto single = [&](Tok t) { tok = t; text = std::string(1, c); step(); };
    switch (c) {
      case '{': single(Tok::LBrace); return;
      case '}': single(Tok::RBrace); return;
      case '(': single(Tok::LParen); return;
      case ')': single(Tok::RParen); return;
      case ';': single(Tok::Semi); return;
      case ',': single(Tok::Comma); return;
      case '.': single(Tok::Dot); return;
      case '=': single(Tok::Eq); return;
      case '&': single(Tok::Amp); return;
      case '|': single(Tok::Bar); return;
      case '!': single(Tok::Bang); return;
      case '/': single(Tok::Slash); return;
      default: break;
    }
    if (isdigit((unsigned char)c)) {
      text.clear();
      while (pos < s.size() && isdigit((unsigned char)s[pos])) { text += s[pos]; step(); }
      tok = Tok::Int;
      return;
    }
    if (isalpha((unsigned char)c) || c == '_') {
      text.clear();
      while (pos < s.size() &&
             (isalnum((unsigned char)s[pos]) || s[pos] == '_' || s[pos] == '~' || s[pos] == '\'')) {
        text += s[pos];
        step();
      }
      tok = Tok::Name;
      return;
    }
    if (c == '@')
      throw ParseError("'@' is reserved for generated symbols", line, col);
    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
  }
};

struct Parser {
  Lexer lx;
  Signature sig;
  std::vector<std::string>& varNames;
  // scope stack: name -> var id
  std::vector<std::pair<std::string, Var>> scope;

  Parser(const std::string& src, std::vector<std::string>& vn) : lx(src), varNames(vn) {}

  [[noreturn]] void err(const std::string& what) { throw ParseError(what, lx.tokLine, lx.tokCol); }

  void expect(Tok t, const char* what) {
    if (lx.tok != t) err(std::string("expected ") + what);
    lx.advance();
  }
  bool accept(Tok t) {
    if (lx.tok == t) { lx.advance(); return true; }
    return false;
  }
  std::string name() {
    if (lx.tok != Tok::Name) err("expected name");
    std::string n = lx.text;
    lx.advance();
    return n;
  }

  void declare(const std::string& n) {
    if (sig.known(n)) err("duplicate symbol " + n);
  }

  void parseSig() {
    if (lx.tok != Tok::Name || lx.text != "sig") err("expected 'sig'");
    lx.advance();
    expect(Tok::LBrace, "'{'");
    while (lx.tok != Tok::RBrace) {
      std::string kw = name();
      if (kw == "unary") {
        while (lx.tok == Tok::Name) {
          std::string n = name();
          declare(n);
          sig.unaries.push_back(n);
        }
        expect(Tok::Semi, "';'");
      } else if (kw == "rel") {
        std::string n = name();
        declare(n);
        expect(Tok::Slash, "'/'");
        if (lx.tok != Tok::Int) err("expected arity");
        int a = std::stoi(lx.text);
        lx.advance();
        if (a < 1) err("arity must be >= 1");
        sig.bases.push_back({n, a});
        expect(Tok::Semi, "';'");
      } else if (kw == "trans" || kw == "equiv" || kw == "order") {
        std::string n = name();
        declare(n);
        std::string inv = n + "~";
        if (sig.known(inv)) err("duplicate symbol " + inv);
        PairFlag fl = kw == "trans" ? PairFlag::Plain
                     : kw == "equiv" ? PairFlag::Equivalence : PairFlag::Order;
        sig.pairs.push_back({n, inv, fl});
        expect(Tok::Semi, "';'");
      } else {
        err("unknown item '" + kw + "'");
      }
    }
    expect(Tok::RBrace, "'}'");
  }

  Var lookupVar(const std::string& n) {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it)
      if (it->first == n) return it->second;
    // free variable: intern it once
    for (size_t i = 0; i < varNames.size(); ++i)
      if (varNames[i] == n) {
        for (auto& sc : scope)
          (void)sc;
        return (int)i;
      }
    varNames.push_back(n);
    return (int)varNames.size() - 1;
  }

  Var bindVar(const std::string& n) {
    varNames.push_back(n);
    Var v = (int)varNames.size() - 1;
    scope.push_back({n, v});
    return v;
  }

  FPtr parseFormula() { return parseOr(); }

  FPtr parseOr() {
    FPtr f = parseAnd();
    while (lx.tok == Tok::Bar) {
      lx.advance();
      FPtr g = parseAnd();
      f = mkOr2(f, g);
    }
    return f;
  }

  FPtr parseAnd() {
    FPtr f = parseUnary();
    while (lx.tok == Tok::Amp) {
      lx.advance();
      FPtr g = parseUnary();
      f = mkAnd2(f, g);
    }
    return f;
  }

  FPtr parseUnary() {
    int ln = lx.tokLine, cl = lx.tokCol;
    if (accept(Tok::Bang)) return mkNeg(parseUnary(), ln, cl);
    if (accept(Tok::LParen)) {
      FPtr f = parseOr();
      expect(Tok::RParen, "')'");
      return f;
    }
    if (lx.tok == Tok::Name && (lx.text == "E" || lx.text == "A")) {
      bool univ = lx.text == "A";
      lx.advance();
      std::vector<Var> vars;
      size_t mark = scope.size();
      while (lx.tok == Tok::Name) vars.push_back(bindVar(name()));
      if (vars.empty()) err("quantifier needs at least one variable");
      expect(Tok::Dot, "'.'");
      FPtr body = parseOr();
      scope.resize(mark);
      if (!univ) return mkExists(std::move(vars), body, ln, cl);
      // A xbar. phi is sugar for !E xbar. !phi; a leading ! is absorbed.
      if (body->kind == FKind::Neg)
        return mkNeg(mkExists(std::move(vars), body->body, ln, cl), ln, cl);
      return mkNeg(mkExists(std::move(vars), mkNeg(body, ln, cl), ln, cl), ln, cl);
    }
    if (lx.tok != Tok::Name) err("expected formula");
    std::string n = name();
    if (lx.tok == Tok::LParen) {
      auto sr = sig.find(n);
      if (!sr) err("unknown symbol '" + n + "'");
      lx.advance();
      std::vector<Var> args;
      args.push_back(lookupVar(name()));
      while (accept(Tok::Comma)) args.push_back(lookupVar(name()));
      expect(Tok::RParen, "')'");
      if ((int)args.size() != sig.arity(*sr))
        throw ParseError("arity mismatch for '" + n + "'", ln, cl);
      return mkAtom(*sr, std::move(args), ln, cl);
    }
    // variable: must be an equality
    Var a = lookupVar(n);
    expect(Tok::Eq, "'='");
    Var b = lookupVar(name());
    return mkEq(a, b, ln, cl);
  }
};

} // namespace

ParseResult parse_formula(const std::string& text) {
  ParseResult pr;
  Parser p(text, pr.varNames);
  p.parseSig();
  pr.formula = p.parseFormula();
  if (p.lx.tok != Tok::End) p.err("trailing input");
  pr.sig = std::move(p.sig);
  return pr;
}

FPtr parse_formula_body(const std::string& text, const Signature& sig,
                        std::vector<std::string>& varNames) {
  Parser p(text, varNames);
  p.sig = sig;
  FPtr f = p.parseFormula();
  if (p.lx.tok != Tok::End) p.err("trailing input");
  return f;
}

// ---------------------------------------------------------------- validate

static void validateRec(const FPtr& f, const Signature& sig, CheckReport& rep,
                        std::string (*show)(const FPtr&)) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
      return;
    case FKind::Atom:
      if ((int)f->args.size() != sig.arity(f->sym))
        rep.fail("arity mismatch for " + sig.name(f->sym));
      return;
    case FKind::Eq:
      return;
    case FKind::And:
    case FKind::Or:
      for (auto& k : f->kids) validateRec(k, sig, rep, show);
      return;
    case FKind::Exists:
      validateRec(f->body, sig, rep, show);
      return;
    case FKind::Neg: {
      auto fv = freeVars(f->body);
      if (fv.size() > 1) {
        std::ostringstream os;
        os << "negation over " << fv.size() << " free variables at "
           << f->line << ":" << f->col;
        rep.fail(os.str());
      }
      validateRec(f->body, sig, rep, show);
      return;
    }
  }
}

CheckReport validate_unfo(const FPtr& f, const Signature& sig) {
  CheckReport rep;
  validateRec(f, sig, rep, nullptr);
  return rep;
}

// ---------------------------------------------------------------- NNF

static FPtr nnf(const FPtr& f, bool neg);

static FPtr nnfNeg(const FPtr& f) { return nnf(f, true); }

static FPtr nnf(const FPtr& f, bool neg) {
  switch (f->kind) {
    case FKind::True:
      return neg ? mkFalse() : mkTrue();
    case FKind::False:
      return neg ? mkTrue() : mkFalse();
    case FKind::Atom:
    case FKind::Eq:
      return neg ? mkNeg(f) : f;
    case FKind::And:
    case FKind::Or: {
      std::vector<FPtr> kids;
      for (auto& k : f->kids) kids.push_back(nnf(k, neg));
      bool isAnd = (f->kind == FKind::And) != neg;
      return isAnd ? mkAnd(std::move(kids)) : mkOr(std::move(kids));
    }
    case FKind::Neg:
      return nnf(f->body, !neg);
    case FKind::Exists:
      // only used on quantifier-free inputs
      throw Error("nnf: unexpected quantifier");
  }
  return f;
}

// ---------------------------------------------------------------- normal form

namespace {

struct NfBuilder {
  Signature sig;
  int freshVar;
  int freshUnary = 0;
  std::vector<std::pair<int, FPtr>> univ;   // (arity, matrix over canonical vars 0..arity-1)
  std::vector<NormalForm::Conjunct> conjAE; // matrix over 0 (=x) and 1..w
  std::vector<std::string> introduced;

  explicit NfBuilder(const Signature& s, int firstFresh) : sig(s), freshVar(firstFresh) {}

  Var fresh() { return freshVar++; }

  SymRef freshP() {
    std::string n = "@nf" + std::to_string(freshUnary++);
    sig.unaries.push_back(n);
    introduced.push_back(n);
    return SymRef{SymKind::Unary, (int)sig.unaries.size() - 1};
  }

  // canonical renumbering: vars in `order` become 0..n-1
  static FPtr canon(const FPtr& f, const std::vector<Var>& order) {
    int mx = 0;
    for (Var v : order) mx = std::max(mx, v + 1);
    auto fv = freeVars(f);
    for (Var v : fv) mx = std::max(mx, v + 1);
    std::vector<Var> map(mx, -1);
    for (size_t i = 0; i < order.size(); ++i)
      if (order[i] >= 0) map[order[i]] = (int)i;
    return substitute(f, map);
  }

  void addUniv(const FPtr& matrix, const std::vector<Var>& order) {
    univ.push_back({(int)order.size(), canon(nnf(matrix, false), order)});
  }

  void addAE(Var x, const std::vector<Var>& ys, const FPtr& matrix) {
    // canonical: x -> 0, ys -> 1..w ; a closed matrix just ignores 0
    std::vector<Var> order;
    order.push_back(x);
    for (Var y : ys) order.push_back(y);
    // when x is -1 (dummy), canon skips slot 0 and the ys still land on 1..w
    FPtr m = canon(matrix, order);
    conjAE.push_back({(int)ys.size(), m});
  }

  // Replace a maximal quantified block E bound. mu (mu quantifier-free, at
  // most one free variable) by a fresh unary, emitting the two defining
  // conjuncts. Returns the literal standing for the block, over `freeVar`
  // (or over -1 when the block is closed and no variable is in scope).
  FPtr replaceBlock(const std::vector<Var>& bound, const FPtr& mu, Var ctxVar) {
    auto fv = freeVars(mkExists(bound, mu));
    Var x = fv.empty() ? -1 : *fv.begin();
    SymRef P = freshP();
    // forall x exists ybar (!P(x) | mu)
    {
      Var ax = x >= 0 ? x : fresh();
      addAE(ax, bound, mkOr2(mkNeg(mkAtom(P, {ax})), mu));
    }
    // forall x ybar !(mu & !P(x))
    {
      Var ax = x >= 0 ? x : fresh();
      std::vector<Var> order;
      order.push_back(ax);
      for (Var y : bound) order.push_back(y);
      addUniv(mkAnd2(mu, mkNeg(mkAtom(P, {ax}))), order);
    }
    Var at = x >= 0 ? x : ctxVar;
    return mkAtom(P, {at}); // at may be -1; patched by the top-level step
  }

  // Pull positive existential blocks upward so that every Exists is maximal.
  FPtr hoist(const FPtr& f) {
    switch (f->kind) {
      case FKind::True:
      case FKind::False:
      case FKind::Atom:
      case FKind::Eq:
        return f;
      case FKind::Neg:
        return mkNeg(hoist(f->body), f->line, f->col);
      case FKind::Exists: {
        FPtr b = hoist(f->body);
        std::vector<Var> bound = f->bound;
        while (b->kind == FKind::Exists) {
          for (Var v : b->bound) bound.push_back(v);
          b = b->body;
        }
        return mkExists(std::move(bound), b, f->line, f->col);
      }
      case FKind::And:
      case FKind::Or: {
        std::vector<FPtr> kids;
        std::vector<Var> bound;
        for (auto& k : f->kids) {
          FPtr h = hoist(k);
          while (h->kind == FKind::Exists) {
            for (Var v : h->bound) bound.push_back(v);
            h = h->body;
          }
          kids.push_back(h);
        }
        FPtr inner = f->kind == FKind::And ? mkAnd(std::move(kids)) : mkOr(std::move(kids));
        if (bound.empty()) return inner;
        return mkExists(std::move(bound), inner);
      }
    }
    return f;
  }

  // Alpha-rename all bound variables apart.
  FPtr renameApart(const FPtr& f, std::vector<Var>& map) {
    switch (f->kind) {
      case FKind::True:
      case FKind::False:
        return f;
      case FKind::Atom:
      case FKind::Eq:
        return substitute(f, map);
      case FKind::And:
      case FKind::Or: {
        std::vector<FPtr> kids;
        for (auto& k : f->kids) kids.push_back(renameApart(k, map));
        return f->kind == FKind::And ? mkAnd(std::move(kids)) : mkOr(std::move(kids));
      }
      case FKind::Neg:
        return mkNeg(renameApart(f->body, map), f->line, f->col);
      case FKind::Exists: {
        std::vector<Var> saved;
        std::vector<Var> bound;
        for (Var v : f->bound) {
          if (v >= (int)map.size()) map.resize(v + 1, -1);
          saved.push_back(map[v]);
          map[v] = fresh();
          bound.push_back(map[v]);
        }
        FPtr b = renameApart(f->body, map);
        for (size_t i = 0; i < f->bound.size(); ++i) map[f->bound[i]] = saved[i];
        return mkExists(std::move(bound), b, f->line, f->col);
      }
    }
    return f;
  }

  // Bottom-up elimination of quantified blocks. Input must be hoisted.
  // Returns a quantifier-free formula (fresh unaries stand for blocks).
  FPtr flattenReplace(const FPtr& f, Var ctxVar) {
    switch (f->kind) {
      case FKind::True:
      case FKind::False:
      case FKind::Atom:
      case FKind::Eq:
        return f;
      case FKind::And:
      case FKind::Or: {
        std::vector<FPtr> kids;
        for (auto& k : f->kids) kids.push_back(flattenReplace(k, ctxVar));
        return f->kind == FKind::And ? mkAnd(std::move(kids)) : mkOr(std::move(kids));
      }
      case FKind::Neg: {
        FPtr b = f->body;
        if (b->kind == FKind::Exists) {
          FPtr mu = flattenReplace(b->body, b->bound[0]);
          return mkNeg(replaceBlock(b->bound, mu, ctxVar));
        }
        return mkNeg(flattenReplace(b, ctxVar), f->line, f->col);
      }
      case FKind::Exists: {
        FPtr mu = flattenReplace(f->body, f->bound[0]);
        return replaceBlock(f->bound, mu, ctxVar);
      }
    }
    return f;
  }
};

// Direct recognition of formulas that already have the target shape.
// Returns false if any top-level conjunct does not fit.
bool tryDirect(const FPtr& f, NfBuilder& b) {
  std::vector<FPtr> conjs;
  std::vector<FPtr> stack{f};
  while (!stack.empty()) {
    FPtr g = stack.back();
    stack.pop_back();
    if (g->kind == FKind::And) {
      for (auto it = g->kids.rbegin(); it != g->kids.rend(); ++it) stack.push_back(*it);
    } else {
      conjs.push_back(g);
    }
  }
  // Validate shapes first so we emit nothing on failure.
  struct Plan {
    int shape; // 0: univ, 1: AE from !E x.(rest & !E ys.qf), 2: top-level E ys. qf
    FPtr a, c;
    std::vector<FPtr> rest;
  };
  std::vector<Plan> plans;
  for (auto& g : conjs) {
    if (g->kind == FKind::Neg && g->body->kind == FKind::Exists) {
      const FPtr& ex = g->body;
      if (isQuantifierFree(ex->body)) {
        plans.push_back({0, g, nullptr, {}});
        continue;
      }
      if (ex->bound.size() == 1) {
        // !E x. (rest & !E ys. qf)
        std::vector<FPtr> parts;
        if (ex->body->kind == FKind::And)
          parts = ex->body->kids;
        else
          parts = {ex->body};
        FPtr inner;
        std::vector<FPtr> rest;
        bool ok = true;
        for (auto& p : parts) {
          if (p->kind == FKind::Neg && p->body->kind == FKind::Exists &&
              isQuantifierFree(p->body->body) && !inner) {
            inner = p;
          } else if (isQuantifierFree(p)) {
            rest.push_back(p);
          } else {
            ok = false;
            break;
          }
        }
        if (ok && inner) {
          plans.push_back({1, g, inner, rest});
          continue;
        }
      }
      return false;
    }
    if (g->kind == FKind::Exists && isQuantifierFree(g->body) && freeVars(g).empty()) {
      plans.push_back({2, g, nullptr, {}});
      continue;
    }
    return false;
  }
  for (auto& pl : plans) {
    if (pl.shape == 0) {
      const FPtr& ex = pl.a->body;
      b.addUniv(ex->body, ex->bound);
    } else if (pl.shape == 1) {
      const FPtr& ex = pl.a->body;
      Var x = ex->bound[0];
      const FPtr& innerEx = pl.c->body;
      FPtr matrix = pl.rest.empty() ? innerEx->body
                                    : mkOr2(nnfNeg(mkAnd(pl.rest)), innerEx->body);
      b.addAE(x, innerEx->bound, matrix);
    } else {
      b.addAE(-1, pl.a->bound, pl.a->body);
    }
  }
  return true;
}

} // namespace

NormalForm to_normal_form(const FPtr& f, const Signature& sig) {
  int mx = 0;
  {
    std::vector<FPtr> stack{f};
    while (!stack.empty()) {
      FPtr g = stack.back();
      stack.pop_back();
      for (Var v : g->args) mx = std::max(mx, v + 1);
      mx = std::max({mx, g->lhs + 1, g->rhs + 1});
      for (Var v : g->bound) mx = std::max(mx, v + 1);
      for (auto& k : g->kids) stack.push_back(k);
      if (g->body) stack.push_back(g->body);
    }
  }
  NfBuilder b(sig, mx);
  if (!tryDirect(f, b)) {
    std::vector<Var> map;
    FPtr g = b.renameApart(f, map);
    g = b.hoist(g);
    FPtr top = b.flattenReplace(g, -1);
    // top is a quantifier-free combination; any remaining -1 placeholder
    // stands for "some element" of a constant unary: bind it to the
    // universal variable of the final conjunct
    Var z = b.fresh();
    std::function<FPtr(const FPtr&)> fixup = [&](const FPtr& h) -> FPtr {
      switch (h->kind) {
        case FKind::Atom: {
          std::vector<Var> args = h->args;
          for (Var& v : args)
            if (v == -1) v = z;
          return mkAtom(h->sym, std::move(args), h->line, h->col);
        }
        case FKind::And:
        case FKind::Or: {
          std::vector<FPtr> kids;
          for (auto& k : h->kids) kids.push_back(fixup(k));
          return h->kind == FKind::And ? mkAnd(std::move(kids)) : mkOr(std::move(kids));
        }
        case FKind::Neg:
          return mkNeg(fixup(h->body), h->line, h->col);
        default:
          return h;
      }
    };
    b.addUniv(mkNeg(fixup(top)), {z});
  }
  NormalForm nf;
  nf.sig = std::move(b.sig);
  nf.introduced = std::move(b.introduced);
  nf.conjuncts = std::move(b.conjAE);
  nf.t = 1;
  for (auto& [ar, m] : b.univ) nf.t = std::max(nf.t, ar);
  std::vector<FPtr> disj;
  for (auto& [ar, m] : b.univ) disj.push_back(m);
  nf.phi0 = disj.empty() ? mkFalse() : mkOr(std::move(disj));
  return nf;
}

// ---------------------------------------------------------------- DNF

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { for (int i = 0; i < n; ++i) p[i] = i; }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) {
    a = find(a); b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    p[b] = a; // keep smallest index as representative
  }
};

void dnfRec(const FPtr& f, std::vector<std::vector<FPtr>>& out) {
  switch (f->kind) {
    case FKind::True:
      out.push_back({});
      return;
    case FKind::False:
      return;
    case FKind::Atom:
    case FKind::Eq:
    case FKind::Neg:
      out.push_back({f});
      return;
    case FKind::Or:
      for (auto& k : f->kids) {
        dnfRec(k, out);
        if ((int)out.size() > kDnfCap) throw CapError("DNF disjunct cap exceeded");
      }
      return;
    case FKind::And: {
      std::vector<std::vector<FPtr>> acc{{}};
      for (auto& k : f->kids) {
        std::vector<std::vector<FPtr>> kd;
        dnfRec(k, kd);
        std::vector<std::vector<FPtr>> next;
        for (auto& a : acc)
          for (auto& d : kd) {
            next.push_back(a);
            for (auto& l : d) next.back().push_back(l);
            if ((int)next.size() > kDnfCap) throw CapError("DNF disjunct cap exceeded");
          }
        acc = std::move(next);
      }
      for (auto& a : acc) out.push_back(std::move(a));
      if ((int)out.size() > kDnfCap) throw CapError("DNF disjunct cap exceeded");
      return;
    }
    case FKind::Exists:
      throw Error("dnf_matrix: phi0 not quantifier-free");
  }
}

} // namespace

DnfMatrix dnf_matrix(const NormalForm& nf) {
  DnfMatrix out;
  out.t = nf.t;
  if (nf.phi0->kind == FKind::False) return out;
  std::vector<std::vector<FPtr>> raw;
  dnfRec(nf.phi0, raw);
  for (auto& lits : raw) {
    UnionFind uf(nf.t);
    bool dead = false;
    for (auto& l : lits)
      if (l->kind == FKind::Eq) uf.unite(l->lhs, l->rhs);
    Disjunct d;
    std::set<std::pair<int, int>> neq;
    for (auto& l : lits) {
      const FPtr* a = &l;
      bool pos = true;
      if (l->kind == FKind::Neg) { a = &l->body; pos = false; }
      if ((*a)->kind == FKind::Eq) {
        int x = uf.find((*a)->lhs), y = uf.find((*a)->rhs);
        if (!pos) {
          if (x == y) { dead = true; break; }
          neq.insert({std::min(x, y), std::max(x, y)});
        }
        continue;
      }
      std::vector<int> vs;
      for (Var v : (*a)->args) vs.push_back(uf.find(v));
      if (pos && (*a)->sym.kind == SymKind::Trans) {
        d.tr.push_back({(*a)->sym.idx, vs[0], vs[1]});
      } else {
        d.r.push_back({pos, (*a)->sym, vs});
      }
    }
    if (dead) continue;
    // drop contradictory neq that became reflexive after later merges: handled
    // above since merges are done before literal processing
    std::sort(d.r.begin(), d.r.end());
    d.r.erase(std::unique(d.r.begin(), d.r.end()), d.r.end());
    std::sort(d.tr.begin(), d.tr.end());
    d.tr.erase(std::unique(d.tr.begin(), d.tr.end()), d.tr.end());
    for (auto& [x, y] : neq) d.neq.push_back({x, y});
    out.disjuncts.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------- render

namespace {

std::string varName(Var v, const std::vector<std::string>& names) {
  if (v >= 0 && v < (int)names.size() && !names[v].empty()) return names[v];
  return "v" + std::to_string(v);
}

void renderRec(const FPtr& f, const Signature& sig, const std::vector<std::string>& names,
               std::ostringstream& os, int parentPrec) {
  // precedence: Or=1, And=2, unary=3
  switch (f->kind) {
    case FKind::True: os << "(P0true)"; break; // not expressible; debugging only
    case FKind::False: os << "(P0false)"; break;
    case FKind::Atom: {
      os << sig.name(f->sym) << "(";
      for (size_t i = 0; i < f->args.size(); ++i) {
        if (i) os << ",";
        os << varName(f->args[i], names);
      }
      os << ")";
      break;
    }
    case FKind::Eq:
      os << varName(f->lhs, names) << " = " << varName(f->rhs, names);
      break;
    case FKind::And: {
      if (parentPrec > 2) os << "(";
      for (size_t i = 0; i < f->kids.size(); ++i) {
        if (i) os << " & ";
        renderRec(f->kids[i], sig, names, os, 2);
      }
      if (parentPrec > 2) os << ")";
      break;
    }
    case FKind::Or: {
      if (parentPrec > 1) os << "(";
      for (size_t i = 0; i < f->kids.size(); ++i) {
        if (i) os << " | ";
        renderRec(f->kids[i], sig, names, os, 1);
      }
      if (parentPrec > 1) os << ")";
      break;
    }
    case FKind::Exists: {
      if (parentPrec > 1) os << "(";
      os << "E";
      for (Var v : f->bound) os << " " << varName(v, names);
      os << ". ";
      renderRec(f->body, sig, names, os, 1);
      if (parentPrec > 1) os << ")";
      break;
    }
    case FKind::Neg:
      os << "!";
      renderRec(f->body, sig, names, os, 3);
      break;
  }
}

} // namespace

std::string render(const FPtr& f, const Signature& sig, const std::vector<std::string>& names) {
  std::ostringstream os;
  renderRec(f, sig, names, os, 0);
  return os.str();
}

std::string render_full(const ParseResult& pr) {
  std::ostringstream os;
  os << "sig { ";
  if (!pr.sig.unaries.empty()) {
    os << "unary";
    for (auto& u : pr.sig.unaries)
      if (u.empty() || u[0] != '@') os << " " << u;
    os << "; ";
  }
  for (auto& b : pr.sig.bases) os << "rel " << b.name << "/" << b.arity << "; ";
  for (auto& p : pr.sig.pairs) {
    const char* kw = p.flag == PairFlag::Plain ? "trans"
                   : p.flag == PairFlag::Equivalence ? "equiv" : "order";
    os << kw << " " << p.fwd << "; ";
  }
  os << "} ";
  os << render(pr.formula, pr.sig, pr.varNames);
  return os.str();
}

std::string render_normal_form(const NormalForm& nf) {
  std::ostringstream os;
  std::vector<std::string> names;
  for (int i = 0; i < nf.t + 16; ++i) names.push_back("x" + std::to_string(i + 1));
  os << "t=" << nf.t << " phi0: " << render(nf.phi0, nf.sig, names) << "\n";
  for (size_t i = 0; i < nf.conjuncts.size(); ++i) {
    std::vector<std::string> ns{"x"};
    for (int j = 0; j < nf.conjuncts[i].w; ++j) ns.push_back("y" + std::to_string(j + 1));
    os << "conj" << i << " (w=" << nf.conjuncts[i].w
       << "): " << render(nf.conjuncts[i].matrix, nf.sig, ns) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- sugar

namespace {

FPtr sugarRewrite(const FPtr& f, const Signature& sig, const std::vector<bool>& equivPair) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
    case FKind::Eq:
      return f;
    case FKind::Atom: {
      if (f->sym.kind == SymKind::Trans && equivPair[f->sym.idx / 2]) {
        SymRef fwd{SymKind::Trans, f->sym.idx & ~1};
        SymRef inv{SymKind::Trans, f->sym.idx | 1};
        Var x = f->args[0], y = f->args[1];
        if (f->sym.idx & 1) std::swap(fwd, inv);
        return mkOr2(mkAnd2(mkAtom(fwd, {x, y}), mkAtom(inv, {x, y})), mkEq(x, y));
      }
      return f;
    }
    case FKind::And:
    case FKind::Or: {
      std::vector<FPtr> kids;
      for (auto& k : f->kids) kids.push_back(sugarRewrite(k, sig, equivPair));
      return f->kind == FKind::And ? mkAnd(std::move(kids)) : mkOr(std::move(kids));
    }
    case FKind::Exists:
      return mkExists(f->bound, sugarRewrite(f->body, sig, equivPair), f->line, f->col);
    case FKind::Neg:
      return mkNeg(sugarRewrite(f->body, sig, equivPair), f->line, f->col);
  }
  return f;
}

} // namespace

std::pair<Signature, FPtr> apply_sugar(const Signature& sig, const FPtr& f) {
  std::vector<bool> equivPair(sig.k(), false);
  std::vector<int> orderPairs;
  bool any = false;
  for (int p = 0; p < sig.k(); ++p) {
    if (sig.pairs[p].flag == PairFlag::Equivalence) { equivPair[p] = true; any = true; }
    if (sig.pairs[p].flag == PairFlag::Order) { orderPairs.push_back(p); any = true; }
  }
  if (!any) return {sig, f};
  FPtr g = sugarRewrite(f, sig, equivPair);
  int mx = 0;
  {
    std::vector<FPtr> stack{g};
    while (!stack.empty()) {
      FPtr h = stack.back();
      stack.pop_back();
      for (Var v : h->args) mx = std::max(mx, v + 1);
      mx = std::max({mx, h->lhs + 1, h->rhs + 1});
      for (Var v : h->bound) mx = std::max(mx, v + 1);
      for (auto& k : h->kids) stack.push_back(k);
      if (h->body) stack.push_back(h->body);
    }
  }
  for (int p : orderPairs) {
    Var x = mx++, y = mx++;
    SymRef T{SymKind::Trans, 2 * p};
    g = mkAnd2(g, mkNeg(mkExists({x, y}, mkAnd2(mkAtom(T, {x, y}), mkAtom(T, {y, x})))));
  }
  Signature s2 = sig;
  for (auto& p : s2.pairs) p.flag = PairFlag::Plain;
  return {s2, g};
}

} // namespace unfo
