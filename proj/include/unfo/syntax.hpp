#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unfo/basics.hpp"

namespace unfo {

using Var = int;

enum class SymKind { Unary, Base, Trans };

// Reference into a Signature. For Trans, idx is u in [0, 2k): even u is a
// declared forward symbol, odd u its inverse.
struct SymRef {
  SymKind kind = SymKind::Unary;
  int idx = 0;
  bool operator==(const SymRef& o) const { return kind == o.kind && idx == o.idx; }
  bool operator<(const SymRef& o) const {
    if (kind != o.kind) return kind < o.kind;
    return idx < o.idx;
  }
};

enum class PairFlag { Plain, Equivalence, Order };

struct Signature {
  std::vector<std::string> unaries;
  struct BaseRel { std::string name; int arity; };
  std::vector<BaseRel> bases;
  struct TransPair { std::string fwd, inv; PairFlag flag; };
  std::vector<TransPair> pairs;

  int k() const { return (int)pairs.size(); }
  int numTrans() const { return 2 * k(); }
  static int inverse(int u) { return u ^ 1; }

  int arity(SymRef s) const {
    switch (s.kind) {
      case SymKind::Unary: return 1;
      case SymKind::Base: return bases[s.idx].arity;
      case SymKind::Trans: return 2;
    }
    return 0;
  }
  std::string name(SymRef s) const {
    switch (s.kind) {
      case SymKind::Unary: return unaries[s.idx];
      case SymKind::Base: return bases[s.idx].name;
      case SymKind::Trans: return (s.idx & 1) ? pairs[s.idx / 2].inv : pairs[s.idx / 2].fwd;
    }
    return "?";
  }
  std::optional<SymRef> find(const std::string& nm) const {
    for (int i = 0; i < (int)unaries.size(); ++i)
      if (unaries[i] == nm) return SymRef{SymKind::Unary, i};
    for (int i = 0; i < (int)bases.size(); ++i)
      if (bases[i].name == nm) return SymRef{SymKind::Base, i};
    for (int i = 0; i < (int)pairs.size(); ++i) {
      if (pairs[i].fwd == nm) return SymRef{SymKind::Trans, 2 * i};
      if (pairs[i].inv == nm) return SymRef{SymKind::Trans, 2 * i + 1};
    }
    return std::nullopt;
  }
  bool known(const std::string& nm) const { return find(nm).has_value(); }
  int addUnary(const std::string& nm) {
    if (known(nm)) throw Error("duplicate symbol " + nm);
    unaries.push_back(nm);
    return (int)unaries.size() - 1;
  }
};

enum class FKind { True, False, Atom, Eq, And, Or, Exists, Neg };

struct Formula;
using FPtr = std::shared_ptr<const Formula>;

struct Formula {
  FKind kind;
  // Atom
  SymRef sym{};
  std::vector<Var> args;
  // Eq
  Var lhs = -1, rhs = -1;
  // And/Or
  std::vector<FPtr> kids;
  // Exists
  std::vector<Var> bound;
  // Exists/Neg
  FPtr body;
  // diagnostics
  int line = 0, col = 0;
};

FPtr mkTrue();
FPtr mkFalse();
FPtr mkAtom(SymRef s, std::vector<Var> args, int line = 0, int col = 0);
FPtr mkEq(Var a, Var b, int line = 0, int col = 0);
FPtr mkAnd(std::vector<FPtr> kids);
FPtr mkOr(std::vector<FPtr> kids);
FPtr mkExists(std::vector<Var> bound, FPtr body, int line = 0, int col = 0);
FPtr mkNeg(FPtr body, int line = 0, int col = 0);
FPtr mkAnd2(FPtr a, FPtr b);
FPtr mkOr2(FPtr a, FPtr b);

std::set<Var> freeVars(const FPtr& f);
bool structEqual(const FPtr& a, const FPtr& b);
bool isQuantifierFree(const FPtr& f);
FPtr substitute(const FPtr& f, const std::vector<Var>& map); // map old var id -> new var id

struct ParseResult {
  Signature sig;
  FPtr formula;
  std::vector<std::string> varNames; // indexed by Var
};

// Grammar: sig "{" item* "}" formula, see README. Throws ParseError.
ParseResult parse_formula(const std::string& text);
// Parses a formula against an existing signature; vars interned into varNames.
FPtr parse_formula_body(const std::string& text, const Signature& sig,
                        std::vector<std::string>& varNames);

CheckReport validate_unfo(const FPtr& f, const Signature& sig);

struct NormalForm {
  Signature sig; // original signature extended with fresh unaries
  int t = 1;
  FPtr phi0; // NNF, quantifier-free, over vars 0..t-1; FKind::False when empty
  struct Conjunct {
    int w = 0;   // number of witness variables
    FPtr matrix; // quantifier-free, over var 0 (= x) and vars 1..w
  };
  std::vector<Conjunct> conjuncts;
  std::vector<std::string> introduced; // fresh unary names
};

// Scott-style normal form: forall x1..xt !phi0  AND  forall x exists ybar phi_i.
NormalForm to_normal_form(const FPtr& f, const Signature& sig);

// One disjunct of the DNF of phi0. Positive transitive atoms are split out;
// everything else (base-relation literals, unary literals, negated diagonal
// transitive literals) lands in r.
struct RLiteral {
  bool pos;
  SymRef sym;
  std::vector<int> vars; // indices in [0, t)
  bool operator<(const RLiteral& o) const {
    if (pos != o.pos) return pos < o.pos;
    if (!(sym == o.sym)) return sym < o.sym;
    return vars < o.vars;
  }
  bool operator==(const RLiteral& o) const {
    return pos == o.pos && sym == o.sym && vars == o.vars;
  }
};
struct TAtom {
  int u, j1, j2; // T_u x_{j1} x_{j2}, indices in [0, t)
  bool operator<(const TAtom& o) const {
    if (u != o.u) return u < o.u;
    if (j1 != o.j1) return j1 < o.j1;
    return j2 < o.j2;
  }
  bool operator==(const TAtom& o) const { return u == o.u && j1 == o.j1 && j2 == o.j2; }
};
struct Disjunct {
  std::vector<RLiteral> r;
  std::vector<TAtom> tr;
  std::vector<std::pair<int, int>> neq; // residual x_i != x_j constraints
};
struct DnfMatrix {
  int t = 1;
  std::vector<Disjunct> disjuncts;
};

inline constexpr int kDnfCap = 4096;

DnfMatrix dnf_matrix(const NormalForm& nf);

std::string render(const FPtr& f, const Signature& sig, const std::vector<std::string>& varNames);
std::string render_full(const ParseResult& pr); // includes the sig header
std::string render_normal_form(const NormalForm& nf);

// Expands equivalence/order sugar flags into plain UNFO+S.
std::pair<Signature, FPtr> apply_sugar(const Signature& sig, const FPtr& f);

} // namespace unfo
