#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "unfo/basics.hpp"
#include "unfo/syntax.hpp"

namespace unfo {

// All atoms over a single variable: unary symbols, diagonals of base
// relations, and one shared diagonal per transitive pair (T(x,x) and
// T~(x,x) are equivalent).
struct OneAtomTable {
  struct Atom { SymRef sym; };
  std::vector<Atom> atoms;
  static OneAtomTable make(const Signature& sig);
  int count() const { return (int)atoms.size(); }
  std::string describe(const Signature& sig, uint64_t type) const;
};

using OneType = uint64_t; // bitmask over OneAtomTable atoms; count <= 64 enforced

struct TwoType {
  OneType t1 = 0, t2 = 0;
  // per binary slot: sym(x1,x2) and sym(x2,x1)
  std::vector<std::pair<bool, bool>> mixedBin;
  // arity >= 3: set of (base idx, pattern over {0,1}, non-constant)
  std::set<std::pair<int, std::vector<int>>> mixedWide;
  bool operator==(const TwoType& o) const {
    return t1 == o.t1 && t2 == o.t2 && mixedBin == o.mixedBin && mixedWide == o.mixedWide;
  }
};

class FiniteStructure {
public:
  FiniteStructure() = default;
  FiniteStructure(Signature sig, int n);

  const Signature& sig() const { return sig_; }
  int n() const { return n_; }

  // binary slots: [0, 2k) transitive symbols, then binary base relations
  int numBinSlots() const { return (int)bin_.size(); }
  int binSlot(SymRef s) const; // -1 if not a binary slot
  SymRef binSlotSym(int slot) const;

  bool unary(int u, int a) const { return unary_[u].get(a); }
  void setUnary(int u, int a, bool v = true) { unary_[u].set(a, v); }
  bool binGet(int slot, int a, int b) const { return bin_[slot][a].get(b); }
  void binSet(int slot, int a, int b, bool v = true) { bin_[slot][a].set(b, v); }
  bool trans(int u, int a, int b) const { return bin_[u][a].get(b); }
  void setTrans(int u, int a, int b, bool v = true) {
    bin_[u][a].set(b, v);
    bin_[Signature::inverse(u)][b].set(a, v);
  }
  const Bits& binRow(int slot, int a) const { return bin_[slot][a]; }

  bool hasTuple(SymRef s, const std::vector<int>& args) const;
  void setTuple(SymRef s, const std::vector<int>& args, bool v = true);
  const std::set<std::vector<int>>& wideTuples(int baseIdx) const { return wide_[baseIdx]; }

  bool closedFlag() const { return closed_; }
  void setClosedFlag(bool v) { closed_ = v; }

  bool operator==(const FiniteStructure& o) const {
    return n_ == o.n_ && unary_ == o.unary_ && binW_() == o.binW_() && wide_ == o.wide_;
  }

private:
  std::vector<std::vector<std::vector<uint64_t>>> binW_() const {
    std::vector<std::vector<std::vector<uint64_t>>> w;
    for (auto& rel : bin_) {
      w.emplace_back();
      for (auto& row : rel) w.back().push_back(row.words());
    }
    return w;
  }
  Signature sig_;
  int n_ = 0;
  std::vector<Bits> unary_;              // per unary symbol
  std::vector<std::vector<Bits>> bin_;   // per binary slot, row-indexed
  std::vector<std::set<std::vector<int>>> wide_; // per base relation with arity != 2
  bool closed_ = false;
};

FiniteStructure transitive_close(const FiniteStructure& s);

bool eval(const FiniteStructure& s, const FPtr& f, std::map<Var, int> asg);

CheckReport check_normal_form(const FiniteStructure& s, const NormalForm& nf);

OneType atomic_one_type(const FiniteStructure& s, const OneAtomTable& tab, int a);
TwoType atomic_two_type(const FiniteStructure& s, const OneAtomTable& tab, int a, int b);

// [a]_E: a together with all b mutually E-connected to a for every symbol in E.
std::vector<int> class_of(const FiniteStructure& s, int a, const std::vector<int>& transSyms);

CheckReport check_hom_conditions(const FiniteStructure& s2, const FiniteStructure& s1,
                                 const NormalForm& nf);

CheckReport check_constraints(const FiniteStructure& s, const Signature& sig);

// helper: checks whether elements of tuple satisfy one disjunct of phi0
bool disjunct_holds(const FiniteStructure& s, const Disjunct& d, const std::vector<int>& tuple);
// true if some assignment of [0,t) -> domain satisfies some disjunct
bool phi0_violated(const FiniteStructure& s, const DnfMatrix& dm, std::vector<int>* witness);

// impose a 1-type on element a (unary bits + diagonal atoms)
void apply_one_type(FiniteStructure& s, const OneAtomTable& tab, int a, OneType t);

// model file format: "domain N" then "NAME : (i,j,...) ..." lines
std::string write_model(const FiniteStructure& s);
FiniteStructure read_model(const std::string& text, const Signature& sig);

} // namespace unfo
