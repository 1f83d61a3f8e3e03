#include "unfo/construct.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace unfo {

namespace {

std::vector<int> complementOf(const std::vector<int>& e0, int tn) {
  std::vector<int> out;
  for (int u = 0; u < tn; ++u)
    if (std::find(e0.begin(), e0.end(), u) == e0.end()) out.push_back(u);
  return out;
}

// child slot c of the vertex's family stays in the class when every symbol
// of etot connects both ways along the edge
bool slotInClass(const FiniteStructure& fam, int c, const std::vector<int>& etot) {
  for (int u : etot)
    if (!fam.trans(u, 0, 1 + c) || !fam.trans(u, 1 + c, 0)) return false;
  return true;
}

std::vector<int> classVertices(const BuildContext& ctx, int v0, const std::vector<int>& etot) {
  std::vector<int> out{v0};
  std::set<int> seen{v0};
  for (size_t i = 0; i < out.size(); ++i) {
    const auto& vx = ctx.pt->verts[out[i]];
    for (size_t c = 0; c < vx.children.size(); ++c)
      if (slotInClass(vx.family, (int)c, etot) && seen.insert(vx.children[c]).second)
        out.push_back(vx.children[c]);
  }
  return out;
}

// first child slot witnessing conjunct ci inside the class, or -1; -2 when a
// self witness suffices and nothing needs reproducing
int witnessSlot(const BuildContext& ctx, int v, int ci, const std::vector<int>& etot) {
  const auto& cj = ctx.nf->conjuncts[ci];
  if (cj.w == 0) return -2;
  const auto& fam = ctx.pt->verts[v].family;
  if (eval(fam, cj.matrix, {{0, 0}, {1, 0}})) return -2;
  for (size_t c = 0; c < ctx.pt->verts[v].children.size(); ++c)
    if (slotInClass(fam, (int)c, etot) && eval(fam, cj.matrix, {{0, 0}, {1, 1 + (int)c}}))
      return (int)c;
  return -1;
}

BuildResult build_restricted(int v0, const std::vector<int>& e0, BuildContext& ctx);

// copy the full 2-type between family positions 0 and 1+c onto (b, cNew)
void copyEdge(PatternComponent& pc, const FiniteStructure& fam, int c, int b, int cNew) {
  for (int slot = 0; slot < fam.numBinSlots(); ++slot) {
    if (fam.binGet(slot, 0, 1 + c)) pc.bin.push_back({slot, b, cNew});
    if (fam.binGet(slot, 1 + c, 0)) pc.bin.push_back({slot, cNew, b});
  }
  for (int br = 0; br < (int)fam.sig().bases.size(); ++br) {
    if (fam.sig().bases[br].arity == 2) continue;
    for (auto& tup : fam.wideTuples(br)) {
      bool in = true;
      for (int e : tup)
        if (e != 0 && e != 1 + c) { in = false; break; }
      if (!in) continue;
      std::vector<int> mapped;
      for (int e : tup) mapped.push_back(e == 0 ? b : cNew);
      pc.wide.push_back({br, std::move(mapped)});
    }
  }
}

} // namespace

BuildContext make_context(const PeriodicTree& pt, const NormalForm& nf, const Bounds& bounds) {
  BuildContext ctx;
  ctx.pt = &pt;
  ctx.nf = &nf;
  ctx.tu = TypeUniverse::make(pt.sig);
  BigInt cap = bounds.Mhat_phi + 1;
  ctx.sublayerCap = cap > 1000000 ? 1000000 : (int)cap;
  int tn = pt.sig.numTrans();
  std::map<std::pair<OneType, std::vector<std::vector<uint64_t>>>, int> keys;
  for (size_t v = 0; v < pt.verts.size(); ++v) {
    auto ld = ldec(pt, ctx.tu, (int)v);
    std::vector<std::vector<uint64_t>> w;
    for (auto& b : ld.fd) w.push_back(b.words());
    auto key = std::make_pair(pt.verts[v].type, std::move(w));
    auto it = keys.find(key);
    if (it == keys.end()) {
      it = keys.emplace(std::move(key), ctx.gcount++).first;
      ctx.rep.push_back((int)v);
    }
    ctx.gtype.push_back(it->second);
  }
  for (int u = 0; u < tn; ++u) ctx.rankOf.push_back(rank_bound(pt, u, ctx.sublayerCap));
  return ctx;
}

PatternComponent build_component(int vertex, const std::vector<int>& e0, BuildContext& ctx) {
  int tn = ctx.pt->sig.numTrans();
  auto etot = complementOf(e0, tn);
  int twoL = (int)e0.size();
  PatternComponent pc;
  auto alloc = [&](int fpv, OneType ty, int layer, int sub) {
    if (--ctx.elementBudget < 0) throw CapError("construction element budget exhausted");
    pc.fp.push_back(fpv);
    pc.type.push_back(ty);
    pc.layer.push_back({layer, sub});
    return (int)pc.fp.size() - 1;
  };
  alloc(vertex, ctx.pt->verts[vertex].type, 1, 1);

  std::vector<int> nextLayerInit{0}; // becomes L_1^{1,init}
  for (int u = 1; u <= twoL; ++u) {
    int sym = e0[u - 1];
    std::vector<int> init = std::move(nextLayerInit);
    nextLayerInit.clear();
    std::vector<int> subE0;
    for (int s : e0)
      if (s != sym && s != Signature::inverse(sym)) subE0.push_back(s);
    for (int j = 1; !init.empty(); ++j) {
      if (j > ctx.sublayerCap)
        throw Error("sublayer bound exceeded while killing " +
                    ctx.pt->sig.name(SymRef{SymKind::Trans, sym}));
      // subcomponents: hand each initial element to the induction
      std::vector<int> sublayer;
      for (int b : init) {
        auto sub = build_restricted(pc.fp[b], subE0, ctx);
        std::vector<int> map(sub.model.n());
        for (int e = 0; e < sub.model.n(); ++e) {
          if (e == sub.origin) {
            map[e] = b;
            if (atomic_one_type(sub.model, ctx.tu.tab, e) != pc.type[b])
              throw Error("subcomponent origin changed its 1-type");
            continue;
          }
          map[e] = alloc(sub.fp[e], atomic_one_type(sub.model, ctx.tu.tab, e), u, j);
        }
        for (int a = 0; a < sub.model.n(); ++a)
          for (int bb = 0; bb < sub.model.n(); ++bb) {
            if (a == bb) continue;
            for (int slot = 0; slot < sub.model.numBinSlots(); ++slot)
              if (sub.model.binGet(slot, a, bb)) pc.bin.push_back({slot, map[a], map[bb]});
          }
        for (int br = 0; br < (int)ctx.pt->sig.bases.size(); ++br) {
          if (ctx.pt->sig.bases[br].arity == 2) continue;
          for (auto& tup : sub.model.wideTuples(br)) {
            std::vector<int> mapped;
            for (int e : tup) mapped.push_back(map[e]);
            pc.wide.push_back({br, std::move(mapped)});
          }
        }
        for (auto rec : sub.records) {
          for (int& e : rec.elems) e = map[e];
          rec.origin = map[rec.origin];
          pc.records.push_back(std::move(rec));
        }
        for (int e : map) sublayer.push_back(e);
      }
      std::sort(sublayer.begin(), sublayer.end());
      sublayer.erase(std::unique(sublayer.begin(), sublayer.end()), sublayer.end());
      // witnesses: route by the 2-type with the symbol being killed
      std::vector<int> nextInit;
      for (int b : sublayer) {
        const auto& vx = ctx.pt->verts[pc.fp[b]];
        for (int ci = 0; ci < (int)ctx.nf->conjuncts.size(); ++ci) {
          int c = witnessSlot(ctx, pc.fp[b], ci, etot);
          if (c < 0) continue;
          bool fwd = vx.family.trans(sym, 0, 1 + c), bwd = vx.family.trans(sym, 1 + c, 0);
          if (fwd && bwd) continue; // the subcomponent already holds this witness
          int cv = vx.children[c];
          OneType cty = atomic_one_type(vx.family, ctx.tu.tab, 1 + c);
          int cNew;
          if (fwd) {
            if (ctx.rankOf[sym][cv] >= ctx.rankOf[sym][pc.fp[b]])
              throw Error("rank failed to decrease across sublayers");
            cNew = alloc(cv, cty, u, j + 1);
            nextInit.push_back(cNew);
          } else {
            cNew = alloc(cv, cty, u + 1, 1);
            nextLayerInit.push_back(cNew);
          }
          copyEdge(pc, vx.family, c, b, cNew);
        }
      }
      init = std::move(nextInit);
    }
  }
  pc.interface = nextLayerInit; // elements placed past the last layer
  return pc;
}

BuildResult join_components(const std::vector<PatternComponent>& comps,
                            const std::vector<int>& gammaOf, int rootComp,
                            const std::vector<int>& e0, BuildContext& ctx) {
  int nComp = (int)comps.size();
  std::map<int, int> local; // global gamma id -> comps index
  for (int i = 0; i < nComp; ++i) local[gammaOf[i]] = i;
  struct Copy {
    int comp, g;
    std::vector<int> ids; // element ids; interface entries filled lazily
  };
  std::vector<Copy> copies;
  std::map<std::tuple<int, int, int, int>, int> keyed; // (comp,g,i,from) -> copy
  int nElems = 0;
  std::vector<int> fp;
  std::vector<OneType> type;
  std::vector<int> color;
  std::deque<int> queue;
  auto instantiate = [&](int comp, int g) {
    Copy cp{comp, g, std::vector<int>(comps[comp].fp.size(), -1)};
    for (size_t e = 0; e < comps[comp].fp.size(); ++e) {
      auto& pc = comps[comp];
      if (std::find(pc.interface.begin(), pc.interface.end(), (int)e) != pc.interface.end())
        continue;
      if (--ctx.elementBudget < 0) throw CapError("construction element budget exhausted");
      cp.ids[e] = nElems++;
      fp.push_back(pc.fp[e]);
      type.push_back(pc.type[e]);
      color.push_back(g);
    }
    copies.push_back(std::move(cp));
    queue.push_back((int)copies.size() - 1);
    return (int)copies.size() - 1;
  };
  int start = instantiate(rootComp, 0);
  auto ensure = [&](int comp, int g, int i, int from) {
    auto key = std::make_tuple(comp, g, i, from);
    auto it = keyed.find(key);
    if (it != keyed.end()) return it->second;
    return keyed.emplace(key, instantiate(comp, g)).first->second;
  };
  while (!queue.empty()) {
    int c = queue.front();
    queue.pop_front();
    const auto& pc = comps[copies[c].comp];
    for (size_t i = 0; i < pc.interface.size(); ++i) {
      int b = pc.interface[i];
      int gammaTo = ctx.gtype[pc.fp[b]];
      if (!local.count(gammaTo))
        throw Error("interface targets a generalized type outside the class");
      int target = ensure(local.at(gammaTo), 1 - copies[c].g, (int)i, copies[c].comp);
      int rootId = copies[target].ids[comps[copies[target].comp].root];
      if (type[rootId] != pc.type[b]) throw Error("identified elements disagree on 1-type");
      copies[c].ids[b] = rootId;
    }
  }

  BuildResult out;
  FiniteStructure model(ctx.pt->sig, nElems);
  for (int e = 0; e < nElems; ++e) apply_one_type(model, ctx.tu.tab, e, type[e]);
  int tn = ctx.pt->sig.numTrans();
  for (auto& cp : copies) {
    const auto& pc = comps[cp.comp];
    for (auto& [slot, a, b] : pc.bin) {
      if (slot < tn) {
        model.setTrans(slot, cp.ids[a], cp.ids[b]);
        out.rawEdges.push_back({slot, cp.ids[a], cp.ids[b], cp.g});
      } else {
        model.binSet(slot, cp.ids[a], cp.ids[b]);
      }
    }
    for (auto& [br, tup] : pc.wide) {
      std::vector<int> mapped;
      for (int e : tup) mapped.push_back(cp.ids[e]);
      model.setTuple(SymRef{SymKind::Base, br}, mapped);
    }
    for (auto rec : pc.records) {
      for (int& e : rec.elems) e = cp.ids[e];
      rec.origin = cp.ids[rec.origin];
      out.records.push_back(std::move(rec));
    }
  }
  out.model = transitive_close(model);
  out.model.setClosedFlag(true);
  out.origin = copies[start].ids[comps[rootComp].root];
  out.fp = std::move(fp);
  out.color = std::move(color);
  BuildRecord top;
  for (int e = 0; e < nElems; ++e) top.elems.push_back(e);
  top.origin = out.origin;
  top.etot = complementOf(e0, tn);
  out.records.push_back(std::move(top));
  return out;
}

namespace {

// class representatives, one per generalized type, with v0 heading its own
void pickReps(const BuildContext& ctx, int v0, const std::vector<int>& cls,
              std::vector<int>& gammas, std::vector<int>& reps) {
  for (int v : cls) {
    int g = ctx.gtype[v];
    if (std::find(gammas.begin(), gammas.end(), g) == gammas.end()) {
      gammas.push_back(g);
      reps.push_back(g == ctx.gtype[v0] ? v0 : v);
    }
  }
}

// the e0-empty stage: witnesses inside the fully-connected class are routed
// straight to interfaces, as if killing a pair of identity relations
BuildResult build_base_class(int v0, BuildContext& ctx) {
  int tn = ctx.pt->sig.numTrans();
  std::vector<int> etot;
  for (int u = 0; u < tn; ++u) etot.push_back(u);
  auto cls = classVertices(ctx, v0, etot);
  bool demand = false;
  for (int v : cls)
    for (int ci = 0; ci < (int)ctx.nf->conjuncts.size() && !demand; ++ci)
      if (witnessSlot(ctx, v, ci, etot) >= 0) demand = true;
  if (cls.size() == 1 && !demand) {
    BuildResult out;
    out.model = FiniteStructure(ctx.pt->sig, 1);
    apply_one_type(out.model, ctx.tu.tab, 0, ctx.pt->verts[v0].type);
    out.model.setClosedFlag(true);
    out.fp = {v0};
    out.color = {0};
    out.records.push_back({{0}, 0, etot});
    return out;
  }
  std::vector<int> gammas, reps;
  pickReps(ctx, v0, cls, gammas, reps);
  std::vector<PatternComponent> comps;
  int rootComp = -1;
  for (size_t i = 0; i < gammas.size(); ++i) {
    int v = reps[i];
    PatternComponent pc;
    auto alloc = [&](int fpv, OneType ty) {
      if (--ctx.elementBudget < 0) throw CapError("construction element budget exhausted");
      pc.fp.push_back(fpv);
      pc.type.push_back(ty);
      pc.layer.push_back({1, 1});
      return (int)pc.fp.size() - 1;
    };
    alloc(v, ctx.pt->verts[v].type);
    std::vector<int> slots;
    for (int ci = 0; ci < (int)ctx.nf->conjuncts.size(); ++ci) {
      int c = witnessSlot(ctx, v, ci, etot);
      if (c >= 0 && std::find(slots.begin(), slots.end(), c) == slots.end()) slots.push_back(c);
    }
    const auto& vx = ctx.pt->verts[v];
    for (int c : slots) {
      int cNew = alloc(vx.children[c], atomic_one_type(vx.family, ctx.tu.tab, 1 + c));
      pc.interface.push_back(cNew);
      copyEdge(pc, vx.family, c, 0, cNew);
    }
    comps.push_back(std::move(pc));
    if (gammas[i] == ctx.gtype[v0]) rootComp = (int)i;
  }
  return join_components(comps, gammas, rootComp, {}, ctx);
}

BuildResult build_restricted(int v0, const std::vector<int>& e0, BuildContext& ctx) {
  int tn = ctx.pt->sig.numTrans();
  if (e0.empty()) return build_base_class(v0, ctx);
  auto etot = complementOf(e0, tn);
  auto cls = classVertices(ctx, v0, etot);
  std::vector<int> gammas, reps;
  pickReps(ctx, v0, cls, gammas, reps);
  std::vector<PatternComponent> comps;
  int rootComp = -1;
  for (size_t i = 0; i < gammas.size(); ++i) {
    comps.push_back(build_component(reps[i], e0, ctx));
    if (gammas[i] == ctx.gtype[v0]) rootComp = (int)i;
  }
  return join_components(comps, gammas, rootComp, e0, ctx);
}

} // namespace

BuildResult build_finite_model(const PeriodicTree& pt, const NormalForm& nf,
                               const Bounds& bounds) {
  if (nf.t > 2) throw Error("finite-model construction handles at most two pattern variables");
  for (auto& cj : nf.conjuncts)
    if (cj.w > 1) throw Error("finite-model construction handles at most one witness variable");
  BuildContext ctx = make_context(pt, nf, bounds);
  std::vector<int> e0;
  for (int u = 0; u < pt.sig.numTrans(); ++u) e0.push_back(u);
  return build_restricted(pt.root, e0, ctx);
}

BigInt estimate_size(const BigInt& gammaCount, const BigInt& n, const BigInt& mhat, int k) {
  const BigInt sat = BigInt(1) << (1 << 20);
  BigInt s = 1;
  for (int l = 0; l <= k; ++l) {
    BigInt base = s * n;
    BigInt expo = 8 * n * (mhat + 1) + 2;
    if (base <= 0 || expo > 100000) return sat;
    unsigned long long bits = base == 1 ? 1 : boost::multiprecision::msb(base) + 1;
    if (bits * expo.convert_to<unsigned long long>() > (1ull << 20)) return sat;
    BigInt p = boost::multiprecision::pow(base, expo.convert_to<unsigned>());
    s = 2 * gammaCount * gammaCount * p;
    if (s > sat) return sat;
  }
  return s;
}

CheckReport verify_build(const BuildResult& br, const PeriodicTree& pt, const NormalForm& nf) {
  CheckReport rep;
  auto tab = OneAtomTable::make(pt.sig);
  const auto& m = br.model;
  for (size_t r = 0; r < br.records.size(); ++r) {
    const auto& rec = br.records[r];
    if (rec.elems.size() <= 1) continue;
    for (int u : rec.etot)
      for (int a : rec.elems)
        for (int b : rec.elems)
          if (a != b && !m.trans(u, a, b)) {
            rep.fail("record " + std::to_string(r) + ": " +
                     pt.sig.name(SymRef{SymKind::Trans, u}) + " is not total on it");
            goto nextRecord;
          }
  nextRecord:;
  }
  if (br.fp[br.origin] != pt.root) rep.fail("origin does not map to the source root");
  for (int a = 0; a < m.n(); ++a) {
    int v = br.fp[a];
    if (atomic_one_type(m, tab, a) != pt.verts[v].type)
      rep.fail("element " + std::to_string(a) + " lost the 1-type of its pattern");
    const auto& fam = pt.verts[v].family;
    for (int ci = 0; ci < (int)nf.conjuncts.size(); ++ci) {
      const auto& cj = nf.conjuncts[ci];
      if (cj.w == 0) continue;
      bool patternHas = false;
      for (int c = 0; c < (int)pt.verts[v].children.size(); ++c)
        if (eval(fam, cj.matrix, {{0, 0}, {1, 1 + c}})) patternHas = true;
      if (!patternHas) continue;
      bool has = false;
      for (int b = 0; b < m.n() && !has; ++b)
        if (eval(m, cj.matrix, {{0, a}, {1, b}})) has = true;
      if (!has)
        rep.fail("element " + std::to_string(a) + " misses a witness its pattern has");
    }
  }
  rep.merge(check_normal_form(m, nf), "model: ");
  return rep;
}

} // namespace unfo
