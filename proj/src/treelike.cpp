#include "unfo/treelike.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace unfo {

std::vector<int> TreeLike::family(int a) const {
  std::vector<int> out{a};
  for (int c : nodes[a].kids) out.push_back(c);
  return out;
}

FiniteStructure TreeLike::familyFragment(int a) const {
  std::vector<int> mem = family(a);
  FiniteStructure f(str.sig(), (int)mem.size());
  for (int u = 0; u < (int)str.sig().unaries.size(); ++u)
    for (int i = 0; i < (int)mem.size(); ++i)
      if (str.unary(u, mem[i])) f.setUnary(u, i);
  for (int slot = 0; slot < str.numBinSlots(); ++slot)
    for (int i = 0; i < (int)mem.size(); ++i)
      for (int j = 0; j < (int)mem.size(); ++j)
        if (str.binGet(slot, mem[i], mem[j])) f.binSet(slot, i, j);
  for (int b = 0; b < (int)str.sig().bases.size(); ++b) {
    if (str.sig().bases[b].arity == 2) continue;
    std::map<int, int> pos;
    for (int i = 0; i < (int)mem.size(); ++i) pos[mem[i]] = i;
    for (auto& tup : str.wideTuples(b)) {
      bool in = true;
      for (int e : tup)
        if (!pos.count(e)) { in = false; break; }
      if (!in) continue;
      std::vector<int> mapped;
      for (int e : tup) mapped.push_back(pos[e]);
      f.setTuple(SymRef{SymKind::Base, b}, mapped);
    }
  }
  f.setClosedFlag(true);
  return f;
}

namespace {

// a and b share a family iff equal, parent/child, or siblings
bool inFamily(const TreeLike& tl, int a, int b) {
  if (a == b) return true;
  if (tl.nodes[a].parent == b || tl.nodes[b].parent == a) return true;
  return tl.nodes[a].parent != -1 && tl.nodes[a].parent == tl.nodes[b].parent;
}

void copyPair(FiniteStructure& dst, const FiniteStructure& src, int da, int db, int sa, int sb) {
  for (int slot = 0; slot < src.numBinSlots(); ++slot) {
    if (src.binGet(slot, sa, sb)) dst.binSet(slot, da, db);
    if (src.binGet(slot, sb, sa)) dst.binSet(slot, db, da);
  }
}

void copySelf(FiniteStructure& dst, const FiniteStructure& src, int d, int s) {
  for (int u = 0; u < (int)src.sig().unaries.size(); ++u)
    if (src.unary(u, s)) dst.setUnary(u, d);
  for (int slot = 0; slot < src.numBinSlots(); ++slot)
    if (src.binGet(slot, s, s)) dst.binSet(slot, d, d);
}

} // namespace

std::pair<TreeLike, std::vector<int>> unravel(const FiniteStructure& s, const NormalForm& nf,
                                              int depth, int start) {
  auto rep = check_normal_form(s, nf);
  if (!rep.pass()) throw Error("unravel: " + rep.violations.front());
  if (start < 0 || start >= s.n()) throw Error("unravel: start element out of range");

  // first witness tuple for conjunct ci at element e, lexicographic order
  auto pickWitness = [&](int ci, int e) -> std::vector<int> {
    const auto& cj = nf.conjuncts[ci];
    std::vector<int> tup(cj.w, 0);
    while (true) {
      std::map<Var, int> asg{{0, e}};
      for (int i = 0; i < cj.w; ++i) asg[1 + i] = tup[i];
      if (eval(s, cj.matrix, asg)) return tup;
      int p = cj.w - 1;
      while (p >= 0 && tup[p] == s.n() - 1) tup[p--] = 0;
      if (p < 0) throw Error("unravel: witness vanished"); // unreachable: rep passed
      ++tup[p];
    }
  };

  struct Item { int elem, parent, depth; };
  std::vector<Item> items{{start, -1, 0}};
  std::vector<std::vector<int>> kids(1);
  for (size_t a = 0; a < items.size(); ++a) {
    if (items[a].depth >= depth) continue;
    std::vector<int> fresh; // distinct witness elements other than the node itself
    for (int ci = 0; ci < (int)nf.conjuncts.size(); ++ci) {
      if (nf.conjuncts[ci].w == 0) continue;
      for (int e : pickWitness(ci, items[a].elem))
        if (e != items[a].elem && std::find(fresh.begin(), fresh.end(), e) == fresh.end())
          fresh.push_back(e);
    }
    for (int e : fresh) {
      kids[a].push_back((int)items.size());
      items.push_back({e, (int)a, items[a].depth + 1});
      kids.emplace_back();
    }
  }

  TreeLike tl(s.sig(), (int)items.size());
  std::vector<int> h(items.size());
  for (size_t a = 0; a < items.size(); ++a) {
    h[a] = items[a].elem;
    tl.nodes[a].parent = items[a].parent;
    tl.nodes[a].depth = items[a].depth;
    tl.nodes[a].frontier = items[a].depth == depth;
    tl.nodes[a].kids = kids[a];
    copySelf(tl.str, s, (int)a, items[a].elem);
  }
  for (size_t a = 0; a < items.size(); ++a) {
    std::vector<int> mem = tl.family((int)a);
    for (size_t i = 0; i < mem.size(); ++i)
      for (size_t j = i + 1; j < mem.size(); ++j)
        copyPair(tl.str, s, mem[i], mem[j], h[mem[i]], h[mem[j]]);
    for (int b = 0; b < (int)s.sig().bases.size(); ++b) {
      if (s.sig().bases[b].arity == 2) continue;
      std::map<int, int> node; // element image -> family node (injective per family)
      for (int m : mem) node[h[m]] = m;
      for (auto& tup : s.wideTuples(b)) {
        bool in = true;
        for (int e : tup)
          if (!node.count(e)) { in = false; break; }
        if (!in) continue;
        std::vector<int> mapped;
        for (int e : tup) mapped.push_back(node[e]);
        tl.str.setTuple(SymRef{SymKind::Base, b}, mapped);
      }
    }
  }
  tl.str = transitive_close(tl.str);
  tl.str.setClosedFlag(true);
  return {std::move(tl), std::move(h)};
}

int rank(const TreeLike& tl, int u, int a) {
  int best = 0;
  for (int c : tl.nodes[a].kids)
    if (tl.str.trans(u, a, c)) {
      int r = rank(tl, u, c) + (tl.str.trans(u, c, a) ? 0 : 1);
      best = std::max(best, r);
    }
  return best;
}

std::vector<int> rank_bound(const PeriodicTree& pt, int u, int cap) {
  std::vector<int> val(pt.verts.size(), 0);
  int sweeps = (int)pt.verts.size() * (cap + 2) + 1;
  for (int it = 0; it < sweeps; ++it) {
    bool changed = false;
    for (size_t v = 0; v < pt.verts.size(); ++v) {
      const auto& f = pt.verts[v].family;
      int best = 0;
      for (size_t j = 0; j < pt.verts[v].children.size(); ++j)
        if (f.trans(u, 0, 1 + (int)j)) {
          int r = val[pt.verts[v].children[j]] + (f.trans(u, 1 + (int)j, 0) ? 0 : 1);
          best = std::max(best, std::min(r, cap + 1));
        }
      if (best > val[v]) { val[v] = best; changed = true; }
    }
    if (!changed) break;
  }
  return val;
}

std::optional<std::vector<int>> stopwatch_labeling(const TreeLike& tl, int u, int M) {
  std::vector<int> val(tl.size(), 0);
  for (int a = 0; a < tl.size(); ++a) {
    int p = tl.nodes[a].parent;
    if (p != -1 && tl.str.trans(u, p, a))
      val[a] = val[p] + (tl.str.trans(u, a, p) ? 0 : 1);
    if (val[a] > M) return std::nullopt;
  }
  return val;
}

std::optional<std::vector<int>> stopwatch_labeling(const PeriodicTree& pt, int u, int M) {
  std::vector<int> val(pt.verts.size(), 0);
  int sweeps = (int)pt.verts.size() * (M + 2) + 1;
  for (int it = 0; it < sweeps; ++it) {
    bool changed = false;
    for (size_t p = 0; p < pt.verts.size(); ++p) {
      const auto& f = pt.verts[p].family;
      for (size_t j = 0; j < pt.verts[p].children.size(); ++j) {
        if (!f.trans(u, 0, 1 + (int)j)) continue;
        int r = std::min(val[p] + (f.trans(u, 1 + (int)j, 0) ? 0 : 1), M + 1);
        int c = pt.verts[p].children[j];
        if (r > val[c]) { val[c] = r; changed = true; }
      }
    }
    if (!changed) break;
  }
  for (int v : val)
    if (v > M) return std::nullopt;
  return val;
}

CheckReport verify_tree_like(const TreeLike& tl) {
  CheckReport rep = check_constraints(tl.str, tl.str.sig());
  const Signature& sig = tl.str.sig();
  int n = tl.size();

  for (int slot = sig.numTrans(); slot < tl.str.numBinSlots(); ++slot)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (tl.str.binGet(slot, a, b) && !inFamily(tl, a, b))
          rep.violations.push_back(sig.name(tl.str.binSlotSym(slot)) + "(" + std::to_string(a) +
                                   "," + std::to_string(b) + ") crosses families");
  for (int b = 0; b < (int)sig.bases.size(); ++b) {
    if (sig.bases[b].arity == 2) continue;
    for (auto& tup : tl.str.wideTuples(b)) {
      bool ok = false;
      for (int f : tup) {
        std::vector<int> mem = tl.family(f);
        bool all = true;
        for (int e : tup)
          if (std::find(mem.begin(), mem.end(), e) == mem.end()) { all = false; break; }
        if (all) { ok = true; break; }
        if (tl.nodes[f].parent != -1) {
          mem = tl.family(tl.nodes[f].parent);
          all = true;
          for (int e : tup)
            if (std::find(mem.begin(), mem.end(), e) == mem.end()) { all = false; break; }
          if (all) { ok = true; break; }
        }
      }
      if (!ok) rep.violations.push_back(sig.bases[b].name + " tuple crosses families");
    }
  }

  for (int u = 0; u < sig.numTrans(); ++u) {
    // reachability over family-internal T_u edges
    std::vector<Bits> reach(n, Bits(n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (tl.str.trans(u, a, b) && inFamily(tl, a, b)) reach[a].set(b);
    for (int m = 0; m < n; ++m)
      for (int a = 0; a < n; ++a)
        if (reach[a].get(m)) reach[a].orWith(reach[m]);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        std::string edge = sig.name(SymRef{SymKind::Trans, u}) + "(" + std::to_string(a) + "," +
                           std::to_string(b) + ")";
        if (reach[a].get(b) && !tl.str.trans(u, a, b))
          rep.violations.push_back(edge + " missing from family-edge closure");
        if (a != b && tl.str.trans(u, a, b) && !reach[a].get(b))
          rep.violations.push_back(edge + " has no family-edge chain");
      }
  }
  return rep;
}

CheckReport verify_periodic(const PeriodicTree& pt, const OneAtomTable& tab) {
  CheckReport rep;
  for (size_t v = 0; v < pt.verts.size(); ++v) {
    const auto& vx = pt.verts[v];
    std::string at = "vertex " + std::to_string(v);
    if (vx.family.n() != (int)vx.children.size() + 1) {
      rep.violations.push_back(at + ": family size mismatch");
      continue;
    }
    if (atomic_one_type(vx.family, tab, 0) != vx.type)
      rep.violations.push_back(at + ": family element 0 disagrees with the vertex type");
    for (size_t j = 0; j < vx.children.size(); ++j) {
      int c = vx.children[j];
      if (c < 0 || c >= (int)pt.verts.size()) {
        rep.violations.push_back(at + ": child slot out of range");
        continue;
      }
      if (atomic_one_type(vx.family, tab, 1 + (int)j) != pt.verts[c].type)
        rep.violations.push_back(at + ": child slot " + std::to_string(j) +
                                 " disagrees with vertex " + std::to_string(c));
    }
    rep.merge(check_constraints(vx.family, pt.sig));
  }
  std::vector<bool> seen(pt.verts.size(), false);
  std::deque<int> q{pt.root};
  seen[pt.root] = true;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int c : pt.verts[v].children)
      if (c >= 0 && c < (int)pt.verts.size() && !seen[c]) {
        seen[c] = true;
        q.push_back(c);
      }
  }
  for (size_t v = 0; v < pt.verts.size(); ++v)
    if (!seen[v]) rep.violations.push_back("vertex " + std::to_string(v) + " unreachable");
  return rep;
}

std::pair<TreeLike, std::vector<int>> unfold(const PeriodicTree& pt, int depth) {
  struct Item { int vert, parent, depth; };
  std::vector<Item> items{{pt.root, -1, 0}};
  std::vector<std::vector<int>> kids(1);
  for (size_t a = 0; a < items.size(); ++a) {
    if (items[a].depth >= depth) continue;
    for (int c : pt.verts[items[a].vert].children) {
      kids[a].push_back((int)items.size());
      items.push_back({c, (int)a, items[a].depth + 1});
      kids.emplace_back();
    }
  }

  TreeLike tl(pt.sig, (int)items.size());
  std::vector<int> origin(items.size());
  for (size_t a = 0; a < items.size(); ++a) {
    origin[a] = items[a].vert;
    tl.nodes[a].parent = items[a].parent;
    tl.nodes[a].depth = items[a].depth;
    tl.nodes[a].frontier = items[a].depth == depth;
    tl.nodes[a].kids = kids[a];
    copySelf(tl.str, pt.verts[items[a].vert].family, (int)a, 0);
  }
  for (size_t a = 0; a < items.size(); ++a) {
    const auto& f = pt.verts[items[a].vert].family;
    std::vector<int> mem = tl.family((int)a); // node positions 0..s match template slots
    for (size_t i = 0; i < mem.size(); ++i)
      for (size_t j = i + 1; j < mem.size(); ++j)
        copyPair(tl.str, f, mem[i], mem[j], (int)i, (int)j);
    for (int b = 0; b < (int)pt.sig.bases.size(); ++b) {
      if (pt.sig.bases[b].arity == 2) continue;
      for (auto& tup : f.wideTuples(b)) {
        std::vector<int> mapped;
        bool in = true;
        for (int e : tup) {
          if (e >= (int)mem.size()) { in = false; break; }
          mapped.push_back(mem[e]);
        }
        if (in) tl.str.setTuple(SymRef{SymKind::Base, b}, mapped);
      }
    }
  }
  tl.str = transitive_close(tl.str);
  tl.str.setClosedFlag(true);
  return {std::move(tl), std::move(origin)};
}

std::string to_dot(const TreeLike& tl, const OneAtomTable& tab) {
  std::ostringstream os;
  os << "digraph tree {\n";
  for (int a = 0; a < tl.size(); ++a) {
    os << "  n" << a << " [label=\"" << a << ": "
       << tab.describe(tl.str.sig(), atomic_one_type(tl.str, tab, a))
       << (tl.nodes[a].frontier ? " *" : "") << "\"];\n";
    for (int c : tl.nodes[a].kids) os << "  n" << a << " -> n" << c << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_dot(const PeriodicTree& pt, const OneAtomTable& tab) {
  std::ostringstream os;
  os << "digraph periodic {\n";
  for (size_t v = 0; v < pt.verts.size(); ++v) {
    os << "  v" << v << " [label=\"" << v << ": " << tab.describe(pt.sig, pt.verts[v].type)
       << ((int)v == pt.root ? " (root)" : "") << "\"];\n";
    for (size_t j = 0; j < pt.verts[v].children.size(); ++j)
      os << "  v" << v << " -> v" << pt.verts[v].children[j] << " [label=\"" << j << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

} // namespace unfo
