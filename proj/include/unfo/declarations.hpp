#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unfo/treelike.hpp"

namespace unfo {

// All atomic 1-types over a signature, identified with bitmasks over the
// one-variable atoms.
struct TypeUniverse {
  OneAtomTable tab;
  int count = 0; // 2^(number of atoms)
  static TypeUniverse make(const Signature& sig);
};

// For each subset of the transitive symbols, the set of 1-types promised to
// have no realization connected to the owner by all symbols of the subset.
// Monotone: growing the subset never shrinks the set.
struct LightDeclaration {
  int numTrans = 0;
  std::vector<Bits> fd; // indexed by symbol-subset mask; Bits over 1-types
  LightDeclaration() = default;
  LightDeclaration(int numTrans_, int typeCount)
      : numTrans(numTrans_), fd(1u << numTrans_, Bits(typeCount)) {}
  void normalize(); // close upward under subset inclusion
  bool monotone() const;
  bool operator==(const LightDeclaration& o) const { return numTrans == o.numTrans && fd == o.fd; }
};

// Maximal light declaration respected by node a: for each symbol subset,
// exactly the types with no connected realization anywhere in the tree.
LightDeclaration ldec(const TreeLike& tl, const TypeUniverse& tu, int a);
// Same on a periodic representation, by unfolding until the values stop
// changing; a depth cap guards against pathological growth.
LightDeclaration ldec(const PeriodicTree& pt, const TypeUniverse& tu, int v, int nodeCap = 20000);

// (ld1): along every connection inside the family, promises propagate.
// (ld2): no member's own type is promised away by a member connected to it.
CheckReport check_lcc_light(const FiniteStructure& family,
                            const std::vector<LightDeclaration>& decls, const TypeUniverse& tu);

// Pattern of connections on t elements of a subtree plus its root y:
// the r-literals and transitive atoms hold, and x_i = y exactly for i in q.
struct Triple {
  std::vector<RLiteral> r;
  std::vector<TAtom> tr;
  uint32_t q = 0;
  bool operator<(const Triple& o) const {
    if (r != o.r) return r < o.r;
    if (tr != o.tr) return tr < o.tr;
    return q < o.q;
  }
  bool operator==(const Triple& o) const { return r == o.r && tr == o.tr && q == o.q; }
};

std::string render_triple(const Triple& d, const Signature& sig, int t);

struct PhiDeclaration {
  std::set<Triple> triples;
  bool operator==(const PhiDeclaration& o) const { return triples == o.triples; }
};

// Admissible (r, tr) skeletons: the matrix disjuncts closed under the
// child-propagation images below. q components range over all subsets.
struct TripleSpace {
  int t = 1;
  std::vector<std::pair<std::vector<RLiteral>, std::vector<TAtom>>> pairs;
};

TripleSpace triple_space(const NormalForm& nf, int cap = 4096);

// Fittings distribute the t pattern variables over a family with s children:
// fit[i] = 0 places x_i on the parent, 2j+1 on child j itself, 2j+2 strictly
// below child j. flat(fit[i]) collapses the last two cases to the child.
inline int fitFlat(int v) { return v == 0 ? 0 : (v + 1) / 2; }

// Image of a triple under delegation to child `c` (1-based position in the
// family). The whole-pattern form keeps r and tr and re-reads q off the
// fitting; the split form restricts r, rewires tr through a collapsed spare
// variable, and equates everything outside the subtree with the child.
std::optional<Triple> l8_image(const Triple& d, const std::vector<int>& fit, int c);
std::optional<Triple> l9_image(const Triple& d, const std::vector<int>& fit, int c);

// Maximal declaration respected by a: triples of the space (crossed with all
// q) that have no witness tuple in the subtree of a. budget caps the tuple
// enumeration.
PhiDeclaration dec(const TreeLike& tl, const NormalForm& nf, const TripleSpace& space, int a,
                   long long budget = 50000000);

// Family-only core of the consistency conditions: true when the triple is
// locally impossible under the fitting, with no delegation needed.
bool lcc_local_discharge(const FiniteStructure& family, const Triple& d,
                         const std::vector<int>& fit, int t);

// The nine local consistency conditions, checked for every member triple and
// every fitting. decls[0] belongs to the family's parent, decls[1 + j] to its
// j-th child.
CheckReport check_lcc(const FiniteStructure& family, const std::vector<PhiDeclaration>& decls,
                      const NormalForm& nf, long long fittingCap = 2000000);

// Checks local consistency at every node and global consistency (every
// promise holds, by enumeration), and flags the instance if locality held
// while a promise broke. Statuses are reported in the notes.
CheckReport verify_local_global(const TreeLike& tl, const std::vector<LightDeclaration>& system,
                                const TypeUniverse& tu);
CheckReport verify_local_global(const TreeLike& tl, const std::vector<PhiDeclaration>& system,
                                const NormalForm& nf, const TripleSpace& space);

} // namespace unfo
