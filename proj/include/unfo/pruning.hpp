#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "unfo/declarations.hpp"

namespace unfo {

using BigInt = boost::multiprecision::cpp_int;

struct Bounds {
  BigInt M_phi, Mbar_phi, Mhat_phi;
  int typeCount = 0;
  BigInt declCount;
  int k = 0, t = 1;
};

// M = typeCount * declCount + 2; then B(v0) = M*Sum + Sum + M with
// Sum = sum of B(v) for v < v0, iterated for v0 = 1..2k; the final bound is
// 2k * B(2k).
Bounds compute_bounds(const Signature& sig, const NormalForm& nf, const BigInt& declCount);

// Per-node permutation of the transitive symbols plus the per-edge index
// sets steering the shortening order.
struct PruneResult {
  TreeLike tree;
  std::vector<int> orig;                   // new node -> node of the input tree
  std::vector<std::vector<int>> perm;      // per new node, permutation of [0, 2k)
  struct EdgeSets { std::vector<int> K, S, D; }; // positions in the parent permutation
  std::vector<EdgeSets> edge;              // per new node; empty sets at the root
};

// Top-down subtree replacement: an edge where some preferred symbol is
// diminished is redirected to the descendant of equal generalized type with
// the lowest such rank (ties: shallowest, then leftmost), never raising the
// ranks of more-preferred sustained symbols. Declarations, generalized types
// and ranks are those of the input tree.
PruneResult prune(const TreeLike& tl, const std::vector<LightDeclaration>& decls,
                  const TypeUniverse& tu, const Bounds& bounds);

// Per-symbol path-length check against Mhat; failures cite a path.
CheckReport verify_rank_bound(const TreeLike& tl, const Bounds& bounds);
CheckReport verify_rank_bound(const PeriodicTree& pt, const Bounds& bounds);

} // namespace unfo
