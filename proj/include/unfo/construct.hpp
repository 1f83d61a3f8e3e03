#pragma once

#include "unfo/pruning.hpp"

namespace unfo {

// Shared state of one model construction from a periodic source: generalized
// types (1-type plus light declaration) per vertex and per-symbol rank bounds.
struct BuildContext {
  const PeriodicTree* pt = nullptr;
  const NormalForm* nf = nullptr;
  TypeUniverse tu;
  int sublayerCap = 0;                 // bound + 1 sublayers per layer
  long long elementBudget = 200000;
  std::vector<int> gtype;              // vertex -> generalized-type id
  std::vector<int> rep;                // generalized-type id -> representative vertex
  std::vector<std::vector<int>> rankOf; // [symbol][vertex]
  int gcount = 0;
};

BuildContext make_context(const PeriodicTree& pt, const NormalForm& nf, const Bounds& bounds);

// One application of the main induction: which elements it produced, its
// origin, and the symbols it treats as total.
struct BuildRecord {
  std::vector<int> elems;
  int origin = 0;
  std::vector<int> etot;
};

// A building block: root at element 0, layered body, interface elements that
// carry no structure of their own and are later identified with roots of
// other components. Relations at the component level are kept un-closed;
// subcomponent interiors arrive closed from the induction.
struct PatternComponent {
  std::vector<int> fp;                     // element -> source vertex
  std::vector<OneType> type;
  std::vector<std::tuple<int, int, int>> bin; // slot, from, to
  std::vector<std::pair<int, std::vector<int>>> wide;
  int root = 0;
  std::vector<int> interface;
  std::vector<std::pair<int, int>> layer;  // (layer, sublayer); interface = (2l+1, 1)
  std::vector<BuildRecord> records;
};

PatternComponent build_component(int vertex, const std::vector<int>& e0, BuildContext& ctx);

struct BuildResult {
  FiniteStructure model; // transitively closed
  int origin = 0;
  std::vector<int> fp;
  std::vector<int> color; // copy color per element at the outermost join
  std::vector<BuildRecord> records;
  struct Edge {
    int u, a, b, color;
  };
  std::vector<Edge> rawEdges; // pre-closure transitive edges with component colors
};

// Copies of the patterns indexed by color and interface number, interface
// elements identified with roots, restricted to the part reachable from the
// distinguished copy, then closed.
BuildResult join_components(const std::vector<PatternComponent>& comps,
                            const std::vector<int>& gammaOf, int rootComp,
                            const std::vector<int>& e0, BuildContext& ctx);

// Whole pipeline at the full distinguished signature.
BuildResult build_finite_model(const PeriodicTree& pt, const NormalForm& nf,
                               const Bounds& bounds);

// S_0 = 1, S_{2l} = 2 g^2 (S_{2l-2} n)^(8n(mhat+1)+2), evaluated up to
// S_{2k+2}; saturates at 2^(2^20) once exact evaluation stops being useful.
BigInt estimate_size(const BigInt& gammaCount, const BigInt& n, const BigInt& mhat, int k);

// Re-validates: per-record totality-or-singleton, origin mapping, witness
// reproduction with 1-type preservation under fp, and the full normal-form
// check.
CheckReport verify_build(const BuildResult& br, const PeriodicTree& pt, const NormalForm& nf);

} // namespace unfo
