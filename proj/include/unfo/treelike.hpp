#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unfo/model.hpp"

namespace unfo {

// A rooted tree together with a structure on its nodes. Node 0 is the root.
// Tuples of non-transitive relations live inside a single family (a node plus
// its children); transitive relations are the closure of family-internal
// edges. Truncated trees mark their last level as frontier: witness
// obligations are not enforced there.
struct TreeLike {
  struct Node {
    int parent = -1;
    std::vector<int> kids;
    int depth = 0;
    bool frontier = false;
  };
  std::vector<Node> nodes;
  FiniteStructure str; // global structure; transitive slots kept closed

  TreeLike() = default;
  TreeLike(const Signature& sig, int n) : str(sig, n) { nodes.resize(n); }

  int size() const { return (int)nodes.size(); }
  // family of a = {a} followed by its children, in child order
  std::vector<int> family(int a) const;
  // induced substructure on family(a); element 0 is a
  FiniteStructure familyFragment(int a) const;
};

// Finite rooted graph representation of a regular tree. Each vertex carries a
// family template: element 0 is the vertex itself, element 1+j its j-th child
// slot; children[j] names the vertex unfolded at that slot (cycles allowed).
struct PeriodicTree {
  Signature sig;
  struct Vertex {
    OneType type = 0;
    FiniteStructure family;
    std::vector<int> children;
  };
  std::vector<Vertex> verts;
  int root = 0;
};

CheckReport verify_periodic(const PeriodicTree& pt, const OneAtomTable& tab);

// Unravels a model of nf into a tree of the given depth, starting from
// element `start`. Every non-frontier node gets all its witnesses inside its
// downward family; self-witnesses stay in place. Returns the tree and the
// node -> element map. Throws Error when s fails check_normal_form.
std::pair<TreeLike, std::vector<int>> unravel(const FiniteStructure& s, const NormalForm& nf,
                                              int depth, int start = 0);

// Max number of one-directional edges on a downward T_u-path from a.
int rank(const TreeLike& tl, int u, int a);

// Per-vertex upper bound on ranks of downward T_u-paths in unfoldings,
// clamped to cap + 1 (a value of cap + 1 means the ranks are unbounded or
// exceed cap).
std::vector<int> rank_bound(const PeriodicTree& pt, int u, int cap);

// Value at a node = max rank of downward T_u-paths ending at it. The labeling
// exists iff every value is <= M.
std::optional<std::vector<int>> stopwatch_labeling(const TreeLike& tl, int u, int M);
std::optional<std::vector<int>> stopwatch_labeling(const PeriodicTree& pt, int u, int M);

// Checks the two defining clauses: non-transitive tuples stay within one
// family; transitive tuples are exactly closures of family-internal edges.
CheckReport verify_tree_like(const TreeLike& tl);

// Unfolds pt to the given depth. Returns the tree and the node -> vertex map.
std::pair<TreeLike, std::vector<int>> unfold(const PeriodicTree& pt, int depth);

std::string to_dot(const TreeLike& tl, const OneAtomTable& tab);
std::string to_dot(const PeriodicTree& pt, const OneAtomTable& tab);

} // namespace unfo
