#include "unfo/pruning.hpp"

#include <algorithm>

namespace unfo {

Bounds compute_bounds(const Signature& sig, const NormalForm& nf, const BigInt& declCount) {
  Bounds b;
  b.k = sig.k();
  b.t = nf.t;
  b.typeCount = TypeUniverse::make(sig).count;
  b.declCount = declCount;
  b.M_phi = BigInt(b.typeCount) * declCount + 2;
  BigInt sum = 0, bv = 0;
  for (int v0 = 1; v0 <= 2 * b.k; ++v0) {
    bv = b.M_phi * sum + sum + b.M_phi;
    sum += bv;
  }
  b.Mbar_phi = bv;
  b.Mhat_phi = BigInt(2 * b.k) * b.Mbar_phi;
  return b;
}

namespace {

struct Pre {
  std::vector<OneType> type;
  std::vector<std::vector<int>> rank; // [u][node]
  std::vector<int> depth, preidx;
};

Pre precompute(const TreeLike& tl, const TypeUniverse& tu) {
  Pre p;
  int n = tl.size(), tn = tl.str.sig().numTrans();
  p.type.resize(n);
  p.depth.resize(n);
  p.preidx.assign(n, 0);
  for (int a = 0; a < n; ++a) {
    p.type[a] = atomic_one_type(tl.str, tu.tab, a);
    p.depth[a] = tl.nodes[a].depth;
  }
  int counter = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int a = stack.back();
    stack.pop_back();
    p.preidx[a] = counter++;
    for (auto it = tl.nodes[a].kids.rbegin(); it != tl.nodes[a].kids.rend(); ++it)
      stack.push_back(*it);
  }
  p.rank.assign(tn, std::vector<int>(n, 0));
  for (int u = 0; u < tn; ++u)
    for (int a = n - 1; a >= 0; --a) // children have larger ids in our trees
      for (int c : tl.nodes[a].kids)
        if (tl.str.trans(u, a, c)) {
          int r = p.rank[u][c] + (tl.str.trans(u, c, a) ? 0 : 1);
          p.rank[u][a] = std::max(p.rank[u][a], r);
        }
  return p;
}

} // namespace

PruneResult prune(const TreeLike& tl, const std::vector<LightDeclaration>& decls,
                  const TypeUniverse& tu, const Bounds& bounds) {
  (void)bounds;
  for (int a = 0; a < tl.size(); ++a)
    for (int c : tl.nodes[a].kids)
      if (c < a) throw Error("prune expects parents to precede children");
  Pre pre = precompute(tl, tu);
  int tn = tl.str.sig().numTrans();

  auto sameGType = [&](int a, int b) { return pre.type[a] == pre.type[b] && decls[a] == decls[b]; };
  auto subtree = [&](int a) {
    std::vector<int> out;
    std::vector<int> stack{a};
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      out.push_back(x);
      for (auto it = tl.nodes[x].kids.rbegin(); it != tl.nodes[x].kids.rend(); ++it)
        stack.push_back(*it);
    }
    return out;
  };

  PruneResult res;
  std::vector<int> ident(tn);
  for (int u = 0; u < tn; ++u) ident[u] = u;
  res.orig.push_back(0);
  res.perm.push_back(ident);
  res.edge.emplace_back();
  std::vector<std::vector<int>> newKids(1);

  for (size_t cur = 0; cur < res.orig.size(); ++cur) {
    int p = res.orig[cur];
    const std::vector<int> tau = res.perm[cur]; // copy: res.perm grows below
    for (int a : tl.nodes[p].kids) {
      PruneResult::EdgeSets es;
      for (int v = 0; v < tn; ++v) {
        bool fwd = tl.str.trans(tau[v], p, a), bwd = tl.str.trans(tau[v], a, p);
        if (!fwd) es.K.push_back(v);
        else if (bwd) es.S.push_back(v);
        else es.D.push_back(v);
      }
      int b = a;
      if (!es.D.empty()) {
        int vD = es.D.front();
        int bestRank = -1;
        for (int c : subtree(a)) {
          if (!sameGType(a, c)) continue;
          bool ok = true;
          for (int v : es.S) {
            if (v >= vD) break;
            if (pre.rank[tau[v]][c] > pre.rank[tau[v]][a]) { ok = false; break; }
          }
          if (!ok) continue;
          if (bestRank == -1 ||
              std::make_pair(pre.rank[tau[vD]][c], std::make_pair(pre.depth[c], pre.preidx[c])) <
                  std::make_pair(bestRank,
                                 std::make_pair(pre.depth[b], pre.preidx[b]))) {
            b = c;
            bestRank = pre.rank[tau[vD]][c];
          }
        }
      }
      std::vector<int> nxt = tau;
      if (!es.K.empty()) {
        int vK = es.K.front();
        for (int v = vK; v + 1 < tn; ++v) nxt[v] = tau[v + 1];
        nxt[tn - 1] = tau[vK];
      }
      newKids[cur].push_back((int)res.orig.size());
      res.orig.push_back(b);
      res.perm.push_back(std::move(nxt));
      res.edge.push_back(std::move(es));
      newKids.emplace_back();
    }
  }

  int m = (int)res.orig.size();
  TreeLike out(tl.str.sig(), m);
  std::vector<int> parent(m, -1);
  for (int i = 0; i < m; ++i)
    for (int c : newKids[i]) parent[c] = i;
  for (int i = 0; i < m; ++i) {
    out.nodes[i].parent = parent[i];
    out.nodes[i].kids = newKids[i];
    out.nodes[i].depth = parent[i] == -1 ? 0 : out.nodes[parent[i]].depth + 1;
    out.nodes[i].frontier = tl.nodes[res.orig[i]].frontier;
    int o = res.orig[i];
    for (int u = 0; u < (int)tl.str.sig().unaries.size(); ++u)
      if (tl.str.unary(u, o)) out.str.setUnary(u, i);
    for (int slot = 0; slot < tl.str.numBinSlots(); ++slot)
      if (tl.str.binGet(slot, o, o)) out.str.binSet(slot, i, i);
  }
  // family edges copied from the original family the parent's rep heads;
  // each replacement child stands in for the original child it supplanted
  for (int i = 0; i < m; ++i) {
    int p = res.orig[i];
    const auto& origKids = tl.nodes[p].kids;
    std::vector<int> mem{i};
    std::vector<int> omem{p};
    for (size_t j = 0; j < newKids[i].size(); ++j) {
      mem.push_back(newKids[i][j]);
      omem.push_back(origKids[j]);
    }
    for (size_t x = 0; x < mem.size(); ++x)
      for (size_t y = x + 1; y < mem.size(); ++y)
        for (int slot = 0; slot < tl.str.numBinSlots(); ++slot) {
          if (tl.str.binGet(slot, omem[x], omem[y])) out.str.binSet(slot, mem[x], mem[y]);
          if (tl.str.binGet(slot, omem[y], omem[x])) out.str.binSet(slot, mem[y], mem[x]);
        }
    for (int br = 0; br < (int)tl.str.sig().bases.size(); ++br) {
      if (tl.str.sig().bases[br].arity == 2) continue;
      std::map<int, int> pos;
      for (size_t x = 0; x < omem.size(); ++x) pos[omem[x]] = mem[x];
      for (auto& tup : tl.str.wideTuples(br)) {
        bool in = true;
        for (int e : tup)
          if (!pos.count(e)) { in = false; break; }
        if (!in) continue;
        std::vector<int> mapped;
        for (int e : tup) mapped.push_back(pos[e]);
        out.str.setTuple(SymRef{SymKind::Base, br}, mapped);
      }
    }
  }
  out.str = transitive_close(out.str);
  out.str.setClosedFlag(true);
  res.tree = std::move(out);
  return res;
}

namespace {

int clampBound(const BigInt& mhat, int limit) {
  if (mhat > limit) return limit;
  return (int)mhat;
}

} // namespace

CheckReport verify_rank_bound(const TreeLike& tl, const Bounds& bounds) {
  CheckReport rep;
  int M = clampBound(bounds.Mhat_phi, tl.size() + 1);
  for (int u = 0; u < tl.str.sig().numTrans(); ++u) {
    if (stopwatch_labeling(tl, u, M)) continue;
    // exhibit an offending path: walk up from a node whose value overflows
    auto lab = stopwatch_labeling(tl, u, tl.size() + 1);
    int worst = 0;
    for (int a = 0; a < tl.size(); ++a)
      if ((*lab)[a] > (*lab)[worst]) worst = a;
    std::string path = std::to_string(worst);
    for (int x = worst; tl.nodes[x].parent != -1 && (*lab)[x] > 0; x = tl.nodes[x].parent)
      path = std::to_string(tl.nodes[x].parent) + "-" + path;
    rep.violations.push_back(tl.str.sig().name(SymRef{SymKind::Trans, u}) +
                             " path exceeds the bound: " + path);
  }
  return rep;
}

CheckReport verify_rank_bound(const PeriodicTree& pt, const Bounds& bounds) {
  CheckReport rep;
  int M = clampBound(bounds.Mhat_phi, 1 << 20);
  for (int u = 0; u < pt.sig.numTrans(); ++u)
    if (!stopwatch_labeling(pt, u, M)) {
      auto rb = rank_bound(pt, u, M);
      int worst = 0;
      for (size_t v = 0; v < rb.size(); ++v)
        if (rb[v] > rb[worst]) worst = (int)v;
      rep.violations.push_back(pt.sig.name(SymRef{SymKind::Trans, u}) +
                               " ranks exceed the bound from vertex " + std::to_string(worst));
    }
  return rep;
}

} // namespace unfo
