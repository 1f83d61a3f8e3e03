#include "unfo/decide.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace unfo {

namespace {

Triple canonTriple(std::vector<RLiteral> r, std::vector<TAtom> tr, uint32_t q) {
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  std::sort(tr.begin(), tr.end());
  tr.erase(std::unique(tr.begin(), tr.end()), tr.end());
  return Triple{std::move(r), std::move(tr), q};
}

std::set<Triple> seed_triples(const NormalForm& nf) {
  DnfMatrix dm = dnf_matrix(nf);
  std::set<Triple> out;
  for (auto& d : dm.disjuncts) {
    if (!d.neq.empty()) throw Error("matrix with residual inequalities is not supported here");
    for (uint32_t q = 0; q < (1u << dm.t); ++q) out.insert(canonTriple(d.r, d.tr, q));
  }
  return out;
}

void collectAtoms(const FPtr& f, std::vector<std::pair<SymRef, std::vector<Var>>>& out) {
  switch (f->kind) {
    case FKind::Atom: out.push_back({f->sym, f->args}); break;
    case FKind::And:
    case FKind::Or:
      for (auto& k : f->kids) collectAtoms(k, out);
      break;
    case FKind::Neg: collectAtoms(f->body, out); break;
    case FKind::Exists: collectAtoms(f->body, out); break;
    default: break;
  }
}

bool familyWitnessed(const FiniteStructure& fam, const NormalForm::Conjunct& cj) {
  std::vector<int> tup(cj.w, 0);
  while (true) {
    std::map<Var, int> asg{{0, 0}};
    for (int i = 0; i < cj.w; ++i) asg[1 + i] = tup[i];
    if (eval(fam, cj.matrix, asg)) return true;
    int p = cj.w - 1;
    while (p >= 0 && tup[p] == fam.n() - 1) tup[p--] = 0;
    if (p < 0) return false;
    ++tup[p];
  }
}

struct Option {
  FiniteStructure frag; // closed; element 0 is the node, 1..d its fresh children
};

// Witness fragments for one conjunct at a node of the given 1-type: small
// closed structures realizing the matrix. Edges not mentioned by the matrix
// stay empty, except that mentioned transitive edges may also be symmetrized
// (a one-directional edge can often be replaced by a two-way one to keep
// stopwatches steady, at the price of forced diagonal atoms).
class FamilyEnumerator {
public:
  FamilyEnumerator(const NormalForm& nf, const TypeUniverse& tu, const DecideConfig& cfg)
      : nf_(nf), tu_(tu), cfg_(cfg) {
    if (tu.count > 256) throw CapError("type space too large for family enumeration");
  }

  const std::vector<Option>& pool(OneType alpha, int ci, ExpandStats& stats) {
    auto key = std::make_pair(alpha, ci);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(key, build(alpha, ci, stats)).first->second;
  }

  std::vector<FiniteStructure> families(OneType alpha, ExpandStats& stats) {
    auto it = famCache_.find(alpha);
    if (it != famCache_.end()) return it->second;
    std::vector<FiniteStructure> out;
    std::set<std::string> seen;
    long long budget = cfg_.familyBudget;
    std::vector<size_t> pick(nf_.conjuncts.size(), 0);
    bool any = true;
    for (int ci = 0; ci < (int)nf_.conjuncts.size(); ++ci)
      if (pool(alpha, ci, stats).empty()) any = false;
    while (any) {
      if (--budget < 0) { stats.budgetHit = true; break; }
      std::vector<const Option*> opts;
      for (int ci = 0; ci < (int)nf_.conjuncts.size(); ++ci)
        opts.push_back(&pool(alpha, ci, stats)[pick[ci]]);
      for (auto& fam : assemble(alpha, opts))
        if (seen.insert(write_model(fam)).second) out.push_back(fam);
      int i = (int)pick.size() - 1;
      while (i >= 0 && pick[i] + 1 == pool(alpha, i, stats).size()) pick[i--] = 0;
      if (i < 0) break;
      ++pick[i];
    }
    if (nf_.conjuncts.empty()) {
      FiniteStructure fam(nf_.sig, 1);
      apply_one_type(fam, tu_.tab, 0, alpha);
      fam.setClosedFlag(true);
      out.push_back(fam);
    }
    famCache_[alpha] = out;
    return out;
  }

private:
  // disjoint union of the fragments, plus the variant collapsing children
  // with identical connection patterns
  std::vector<FiniteStructure> assemble(OneType alpha, const std::vector<const Option*>& opts) {
    int s = 0;
    for (auto* o : opts) s += o->frag.n() - 1;
    FiniteStructure fam(nf_.sig, 1 + s);
    apply_one_type(fam, tu_.tab, 0, alpha);
    int base = 1;
    for (auto* o : opts) {
      std::vector<int> map{0};
      for (int j = 1; j < o->frag.n(); ++j) map.push_back(base++);
      copyInto(fam, o->frag, map);
    }
    std::vector<FiniteStructure> out;
    if (auto v = finish(fam)) out.push_back(std::move(*v));
    if (s >= 2) {
      // collapse children whose row and column agree everywhere
      std::vector<int> rep(1 + s);
      rep[0] = 0;
      std::vector<int> reps;
      for (int c = 1; c <= s; ++c) {
        rep[c] = c;
        for (int r : reps)
          if (sameColumn(fam, r, c)) { rep[c] = r; break; }
        if (rep[c] == c) reps.push_back(c);
      }
      if ((int)reps.size() < s) {
        FiniteStructure small(nf_.sig, 1 + (int)reps.size());
        std::vector<int> map(1 + s, 0);
        for (int i = 0; i < (int)reps.size(); ++i) map[reps[i]] = 1 + i;
        for (int c = 1; c <= s; ++c) map[c] = map[rep[c]];
        copyInto(small, fam, map);
        if (auto v = finish(small)) out.push_back(std::move(*v));
      }
    }
    return out;
  }

  static bool sameColumn(const FiniteStructure& fam, int a, int b) {
    for (int slot = 0; slot < fam.numBinSlots(); ++slot) {
      if (fam.binGet(slot, a, a) != fam.binGet(slot, b, b)) return false;
      if (fam.binGet(slot, a, b) != fam.binGet(slot, a, a)) return false;
      if (fam.binGet(slot, b, a) != fam.binGet(slot, a, a)) return false;
      for (int e = 0; e < fam.n(); ++e) {
        if (e == a || e == b) continue;
        if (fam.binGet(slot, a, e) != fam.binGet(slot, b, e)) return false;
        if (fam.binGet(slot, e, a) != fam.binGet(slot, e, b)) return false;
      }
    }
    for (int u = 0; u < (int)fam.sig().unaries.size(); ++u)
      if (fam.unary(u, a) != fam.unary(u, b)) return false;
    for (int br = 0; br < (int)fam.sig().bases.size(); ++br) {
      if (fam.sig().bases[br].arity == 2) continue;
      for (auto& tup : fam.wideTuples(br)) {
        std::vector<int> sw = tup;
        for (int& e : sw) e = e == a ? b : (e == b ? a : e);
        if (!fam.wideTuples(br).count(sw)) return false;
      }
    }
    return true;
  }

  static void copyInto(FiniteStructure& dst, const FiniteStructure& src,
                       const std::vector<int>& map) {
    for (int a = 0; a < src.n(); ++a)
      for (int u = 0; u < (int)src.sig().unaries.size(); ++u)
        if (src.unary(u, a)) dst.setUnary(u, map[a]);
    for (int slot = 0; slot < src.numBinSlots(); ++slot)
      for (int a = 0; a < src.n(); ++a)
        for (int b = 0; b < src.n(); ++b)
          if (src.binGet(slot, a, b)) dst.binSet(slot, map[a], map[b]);
    for (int br = 0; br < (int)src.sig().bases.size(); ++br) {
      if (src.sig().bases[br].arity == 2) continue;
      for (auto& tup : src.wideTuples(br)) {
        std::vector<int> mapped;
        for (int e : tup) mapped.push_back(map[e]);
        dst.setTuple(SymRef{SymKind::Base, br}, mapped);
      }
    }
  }

  // close, then insist the closure did not disturb any 1-type and every
  // conjunct is still witnessed
  std::optional<FiniteStructure> finish(FiniteStructure fam) {
    std::vector<OneType> before;
    for (int a = 0; a < fam.n(); ++a) before.push_back(atomic_one_type(fam, tu_.tab, a));
    fam = transitive_close(fam);
    fam.setClosedFlag(true);
    for (int a = 0; a < fam.n(); ++a)
      if (atomic_one_type(fam, tu_.tab, a) != before[a]) return std::nullopt;
    for (auto& cj : nf_.conjuncts)
      if (!familyWitnessed(fam, cj)) return std::nullopt;
    return fam;
  }

  std::vector<Option> build(OneType alpha, int ci, ExpandStats& stats) {
    const auto& cj = nf_.conjuncts[ci];
    std::vector<std::pair<SymRef, std::vector<Var>>> atoms;
    collectAtoms(cj.matrix, atoms);
    std::vector<Option> out;
    std::set<std::string> seen;
    long long budget = cfg_.familyBudget;
    for (int d = 0; d <= cj.w; ++d) {
      std::vector<int> asg(cj.w, 0);
      while (true) {
        bool onto = true;
        for (int c = 1; c <= d; ++c)
          if (std::find(asg.begin(), asg.end(), c) == asg.end()) onto = false;
        if (onto && !emit(alpha, ci, d, asg, atoms, out, seen, budget)) {
          stats.budgetHit = true;
          return out;
        }
        int p = cj.w - 1;
        while (p >= 0 && asg[p] == d) asg[p--] = 0;
        if (p < 0) break;
        ++asg[p];
      }
      if (cj.w == 0) break;
    }
    return out;
  }

  bool emit(OneType alpha, int ci, int d, const std::vector<int>& asg,
            const std::vector<std::pair<SymRef, std::vector<Var>>>& atoms,
            std::vector<Option>& out, std::set<std::string>& seen, long long& budget) {
    const auto& cj = nf_.conjuncts[ci];
    // ground non-diagonal instances mentioned by the matrix, with reversals
    // of transitive edges as extra toggles
    std::vector<std::pair<SymRef, std::vector<int>>> inst;
    auto add = [&](SymRef sym, std::vector<int> args) {
      auto p = std::make_pair(sym, std::move(args));
      if (std::find(inst.begin(), inst.end(), p) == inst.end()) inst.push_back(std::move(p));
    };
    for (auto& [sym, vars] : atoms) {
      if (sym.kind == SymKind::Unary) continue;
      std::vector<int> args;
      for (Var v : vars) args.push_back(v == 0 ? 0 : asg[v - 1]);
      bool diag = std::all_of(args.begin(), args.end(), [&](int x) { return x == args[0]; });
      if (nf_.sig.arity(sym) == 2 && diag) continue;
      add(sym, args);
      if (sym.kind == SymKind::Trans && !diag) add(sym, {args[1], args[0]});
    }
    if ((int)inst.size() > 20) throw CapError("too many ground atoms in one conjunct");
    std::vector<int> ct(d, 0);
    while (true) {
      for (uint64_t mask = 0; mask < (1ull << inst.size()); ++mask) {
        if (--budget < 0) return false;
        FiniteStructure frag(nf_.sig, 1 + d);
        apply_one_type(frag, tu_.tab, 0, alpha);
        for (int c = 0; c < d; ++c) apply_one_type(frag, tu_.tab, 1 + c, (OneType)ct[c]);
        for (size_t i = 0; i < inst.size(); ++i)
          if ((mask >> i) & 1) {
            if (inst[i].first.kind == SymKind::Trans)
              frag.setTrans(inst[i].first.idx, inst[i].second[0], inst[i].second[1]);
            else
              frag.setTuple(inst[i].first, inst[i].second);
          }
        std::vector<OneType> want{alpha};
        for (int c = 0; c < d; ++c) want.push_back((OneType)ct[c]);
        frag = transitive_close(frag);
        frag.setClosedFlag(true);
        bool okTypes = true;
        for (int a = 0; a <= d; ++a)
          if (atomic_one_type(frag, tu_.tab, a) != want[a]) { okTypes = false; break; }
        if (!okTypes) continue;
        std::map<Var, int> m{{0, 0}};
        for (int i = 0; i < cj.w; ++i) m[1 + i] = asg[i];
        if (!eval(frag, cj.matrix, m)) continue;
        if (seen.insert(write_model(frag)).second) out.push_back(Option{std::move(frag)});
      }
      int p = d - 1;
      while (p >= 0 && ct[p] == tu_.count - 1) ct[p--] = 0;
      if (p < 0) break;
      ++ct[p];
    }
    return true;
  }

  const NormalForm& nf_;
  const TypeUniverse& tu_;
  const DecideConfig& cfg_;
  std::map<std::pair<OneType, int>, std::vector<Option>> cache_;
  std::map<OneType, std::vector<FiniteStructure>> famCache_;
};

// Minimal downward propagation of the node's obligations through a family:
// each (triple, fitting) not discharged locally must be delegated to some
// child; choices branch.
bool propagate(const FiniteStructure& fam, const PhiDeclaration& obl, int t,
               std::vector<std::vector<std::pair<int, Triple>>>& reqs, long long& budget) {
  int s = fam.n() - 1;
  std::vector<int> fit(t, 0);
  for (auto& d : obl.triples) {
    std::fill(fit.begin(), fit.end(), 0);
    while (true) {
      if (--budget < 0) throw CapError("delegation budget exhausted");
      if (!lcc_local_discharge(fam, d, fit, t)) {
        std::vector<std::pair<int, Triple>> cands;
        for (int c = 1; c <= s; ++c) {
          if (auto img = l8_image(d, fit, c)) cands.push_back({c, *img});
          if (auto img = l9_image(d, fit, c)) cands.push_back({c, *img});
        }
        std::sort(cands.begin(), cands.end());
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
        if (cands.empty()) return false;
        if (std::find(reqs.begin(), reqs.end(), cands) == reqs.end())
          reqs.push_back(std::move(cands));
      }
      int i = t - 1;
      while (i >= 0 && fit[i] == 2 * s) fit[i--] = 0;
      if (i < 0) break;
      ++fit[i];
    }
  }
  return true;
}

} // namespace

std::vector<SearchState> root_states(const NormalForm& nf, const TypeUniverse& tu,
                                     const TripleSpace& space) {
  (void)space;
  auto seeds = seed_triples(nf);
  std::vector<SearchState> out;
  for (int ty = 0; ty < tu.count; ++ty) {
    SearchState st;
    st.type = (OneType)ty;
    st.obligations.triples = seeds;
    st.ranks.assign(nf.sig.numTrans(), 0);
    out.push_back(std::move(st));
  }
  return out;
}

namespace {

std::vector<FamilyOption> expandWith(FamilyEnumerator& en, const SearchState& st,
                                     const NormalForm& nf, const TypeUniverse& tu, int maxRank,
                                     const DecideConfig& cfg, ExpandStats& stats) {
  std::vector<FamilyOption> out;
  std::set<std::string> seen;
  int tn = nf.sig.numTrans();
  for (auto& fam : en.families(st.type, stats)) {
    int s = fam.n() - 1;
    // stopwatch updates along each parent-child edge
    std::vector<std::vector<int>> ranks(s, std::vector<int>(tn, 0));
    bool rankOk = true;
    for (int j = 0; j < s && rankOk; ++j)
      for (int u = 0; u < tn; ++u) {
        bool fwd = fam.trans(u, 0, 1 + j), bwd = fam.trans(u, 1 + j, 0);
        int r = fwd ? st.ranks[u] + (bwd ? 0 : 1) : 0;
        if (r > maxRank) { rankOk = false; stats.rankCapped = true; break; }
        ranks[j][u] = r;
      }
    if (!rankOk) continue;
    std::vector<std::vector<std::pair<int, Triple>>> reqs;
    long long budget = cfg.familyBudget;
    if (!propagate(fam, st.obligations, nf.t, reqs, budget)) continue;
    // branch over delegation choices
    std::set<std::vector<std::set<Triple>>> assigns;
    std::vector<std::set<Triple>> acc(s);
    std::function<void(size_t)> dfs = [&](size_t i) {
      if ((long long)assigns.size() >= cfg.familyBudget) { stats.budgetHit = true; return; }
      if (i == reqs.size()) { assigns.insert(acc); return; }
      for (auto& [c, img] : reqs[i]) {
        auto ins = acc[c - 1].insert(img);
        dfs(i + 1);
        if (ins.second) acc[c - 1].erase(ins.first);
      }
    };
    dfs(0);
    for (auto& a : assigns) {
      FamilyOption fo;
      fo.family = fam;
      for (int j = 0; j < s; ++j) {
        SearchState ch;
        ch.type = atomic_one_type(fam, tu.tab, 1 + j);
        ch.obligations.triples = a[j];
        ch.ranks = ranks[j];
        fo.children.push_back(std::move(ch));
      }
      std::ostringstream key;
      key << write_model(fo.family);
      for (auto& ch : fo.children) {
        key << "|" << ch.type;
        for (int r : ch.ranks) key << "," << r;
        for (auto& tr : ch.obligations.triples) key << ";" << render_triple(tr, nf.sig, nf.t);
      }
      if (seen.insert(key.str()).second) out.push_back(std::move(fo));
    }
  }
  return out;
}

} // namespace

std::vector<FamilyOption> expand_state(const SearchState& st, const NormalForm& nf,
                                       const TypeUniverse& tu, const TripleSpace& space,
                                       int maxRank, const DecideConfig& cfg,
                                       ExpandStats& stats) {
  (void)space;
  FamilyEnumerator en(nf, tu, cfg);
  return expandWith(en, st, nf, tu, maxRank, cfg, stats);
}

SolveOutcome solve_andor(const std::vector<SearchState>& roots,
                         const std::function<std::vector<FamilyOption>(const SearchState&,
                                                                       ExpandStats&)>& expander,
                         const DecideConfig& cfg) {
  SolveOutcome res;
  std::map<SearchState, int> id;
  std::vector<SearchState> states;
  std::vector<std::vector<std::pair<FiniteStructure, std::vector<int>>>> exp;
  std::vector<bool> expanded;
  std::deque<int> queue;
  auto intern = [&](const SearchState& st) {
    auto it = id.find(st);
    if (it != id.end()) return it->second;
    int i = (int)states.size();
    id.emplace(st, i);
    states.push_back(st);
    exp.emplace_back();
    expanded.push_back(false);
    queue.push_back(i);
    return i;
  };
  std::vector<int> rootIds;
  for (auto& r : roots) rootIds.push_back(intern(r));

  // frontier states count as bad; removal propagates over reverse edges
  auto goodSet = [&]() {
    std::vector<bool> good(states.size());
    std::vector<std::vector<int>> badKids(states.size());
    std::vector<int> viable(states.size(), 0);
    std::vector<std::vector<std::pair<int, int>>> rev(states.size());
    std::deque<int> dead;
    for (size_t i = 0; i < states.size(); ++i) good[i] = expanded[i];
    for (size_t i = 0; i < states.size(); ++i) {
      badKids[i].assign(exp[i].size(), 0);
      for (size_t f = 0; f < exp[i].size(); ++f) {
        for (int c : exp[i][f].second) {
          if (!good[c]) ++badKids[i][f];
          rev[c].push_back({(int)i, (int)f});
        }
        if (badKids[i][f] == 0) ++viable[i];
      }
      if (good[i] && viable[i] == 0) {
        good[i] = false;
        dead.push_back((int)i);
      }
    }
    while (!dead.empty()) {
      int c = dead.front();
      dead.pop_front();
      for (auto& [p, f] : rev[c])
        if (badKids[p][f]++ == 0 && --viable[p] == 0 && good[p]) {
          good[p] = false;
          dead.push_back(p);
        }
    }
    return good;
  };

  size_t nextCheck = 64;
  long long stored = 0; // family options kept across all states; memory guard
  while (!queue.empty()) {
    if ((long long)states.size() > cfg.stateBudget || stored > cfg.stateBudget) {
      res.stats.budgetHit = true;
      break;
    }
    int cur = queue.front();
    queue.pop_front();
    if (expanded[cur]) continue;
    auto fams = expander(states[cur], res.stats);
    for (auto& fo : fams) {
      std::vector<int> kids;
      for (auto& ch : fo.children) kids.push_back(intern(ch));
      exp[cur].push_back({std::move(fo.family), std::move(kids)});
      ++stored;
    }
    expanded[cur] = true;
    if (states.size() >= nextCheck || queue.empty()) {
      nextCheck = states.size() * 2;
      auto good = goodSet();
      for (int r : rootIds)
        if (good[r]) { res.rootGood = true; break; }
      if (res.rootGood) break;
    }
  }
  res.exhausted = queue.empty() && !res.stats.budgetHit;

  auto good = goodSet();
  for (int r : rootIds)
    if (good[r]) { res.rootGood = true; break; }
  if (!res.rootGood) return res;

  std::vector<int> toGood(states.size(), -1);
  for (size_t i = 0; i < states.size(); ++i) {
    if (!good[i]) continue;
    toGood[i] = (int)res.goodStates.size();
    res.goodStates.push_back(states[i]);
    for (auto& [fam, kids] : exp[i]) {
      bool all = true;
      for (int c : kids)
        if (!good[c]) { all = false; break; }
      if (!all) continue;
      FamilyOption fo;
      fo.family = fam;
      for (int c : kids) fo.children.push_back(states[c]);
      res.chosen.push_back(std::move(fo));
      break;
    }
  }
  for (int r : rootIds)
    if (good[r]) { res.goodRoot = toGood[r]; break; }
  return res;
}

Certificate extract_certificate(const SolveOutcome& out) {
  if (out.goodRoot < 0) throw Error("no good root to extract from");
  std::map<SearchState, int> idx;
  for (size_t i = 0; i < out.goodStates.size(); ++i) idx[out.goodStates[i]] = (int)i;
  Certificate cert;
  cert.pt.sig = out.chosen[out.goodRoot].family.sig();
  std::map<int, int> vert; // good index -> vertex id
  std::deque<int> queue{out.goodRoot};
  vert[out.goodRoot] = 0;
  cert.pt.verts.emplace_back();
  cert.states.push_back(out.goodStates[out.goodRoot]);
  while (!queue.empty()) {
    int g = queue.front();
    queue.pop_front();
    int v = vert[g];
    const auto& fo = out.chosen[g];
    cert.pt.verts[v].type = out.goodStates[g].type;
    cert.pt.verts[v].family = fo.family;
    for (auto& ch : fo.children) {
      int cg = idx.at(ch);
      auto it = vert.find(cg);
      if (it == vert.end()) {
        it = vert.emplace(cg, (int)cert.pt.verts.size()).first;
        cert.pt.verts.emplace_back();
        cert.states.push_back(out.goodStates[cg]);
        queue.push_back(cg);
      }
      cert.pt.verts[v].children.push_back(it->second);
    }
  }
  cert.pt.root = 0;
  return cert;
}

CheckReport verify_certificate(const Certificate& cert, const NormalForm& nf,
                               const TypeUniverse& tu, const TripleSpace& space, int maxRank,
                               int sanityDepth) {
  (void)space;
  CheckReport rep;
  if (cert.pt.verts.empty()) { rep.fail("empty certificate"); return rep; }
  if (cert.states.size() != cert.pt.verts.size()) {
    rep.fail("state/vertex count mismatch");
    return rep;
  }
  rep.merge(verify_periodic(cert.pt, tu.tab), "shape: ");
  int tn = nf.sig.numTrans();
  for (size_t v = 0; v < cert.pt.verts.size(); ++v) {
    const auto& vx = cert.pt.verts[v];
    const auto& st = cert.states[v];
    std::string at = "vertex " + std::to_string(v) + ": ";
    if (atomic_one_type(vx.family, tu.tab, 0) != st.type) rep.fail(at + "1-type disagrees");
    for (auto& cj : nf.conjuncts)
      if (!familyWitnessed(vx.family, cj)) rep.fail(at + "a conjunct lacks a witness");
    std::vector<PhiDeclaration> decls{st.obligations};
    for (int c : vx.children) decls.push_back(cert.states[c].obligations);
    rep.merge(check_lcc(vx.family, decls, nf), at);
    for (size_t j = 0; j < vx.children.size(); ++j) {
      const auto& ch = cert.states[vx.children[j]];
      for (int u = 0; u < tn; ++u) {
        bool fwd = vx.family.trans(u, 0, 1 + (int)j), bwd = vx.family.trans(u, 1 + (int)j, 0);
        int want = fwd ? st.ranks[u] + (bwd ? 0 : 1) : 0;
        if (want > maxRank) rep.fail(at + "stopwatch exceeds the bound");
        else if (ch.ranks[u] != want) rep.fail(at + "stopwatch rule broken");
      }
    }
  }
  for (int r : cert.states[cert.pt.root].ranks)
    if (r != 0) rep.fail("root stopwatches not zero");
  for (auto& seed : seed_triples(nf))
    if (!cert.states[cert.pt.root].obligations.triples.count(seed))
      rep.fail("root obligations miss " + render_triple(seed, nf.sig, nf.t));
  DnfMatrix dm = dnf_matrix(nf);
  for (int d = 1; d <= sanityDepth; ++d) {
    auto [tl, hm] = unfold(cert.pt, d);
    std::vector<int> witness;
    if (phi0_violated(tl.str, dm, &witness)) {
      std::ostringstream os;
      os << "unfolding at depth " << d << " realizes a forbidden pattern at (";
      for (size_t i = 0; i < witness.size(); ++i) os << (i ? "," : "") << witness[i];
      os << ")";
      rep.fail(os.str());
      break;
    }
  }
  return rep;
}

DecideResult decide_fin_sat(const FPtr& f, const Signature& sig, const DecideConfig& cfg) {
  DecideResult res;
  NormalForm nf;
  TypeUniverse tu;
  TripleSpace space;
  Bounds bounds;
  try {
    nf = to_normal_form(f, sig);
    tu = TypeUniverse::make(nf.sig);
    space = triple_space(nf);
    BigInt declCount = BigInt(1) << ((long long)space.pairs.size() * (1ll << nf.t));
    bounds = compute_bounds(nf.sig, nf, declCount);
  } catch (const CapError& e) {
    res.reason = e.what();
    return res;
  }
  bool capped = bounds.Mhat_phi > cfg.rankCap;
  if (capped && cfg.mode == DecideConfig::Mode::Exact) {
    res.reason = "rank bound too large for exact mode";
    return res;
  }
  int maxRank = capped ? cfg.rankCap : (int)bounds.Mhat_phi;
  if (tu.count > 256) {
    res.reason = "type space too large for family enumeration";
    return res;
  }

  FamilyEnumerator en(nf, tu, cfg);
  auto expander = [&](const SearchState& st, ExpandStats& stats) {
    return expandWith(en, st, nf, tu, maxRank, cfg, stats);
  };
  SolveOutcome out;
  try {
    out = solve_andor(root_states(nf, tu, space), expander, cfg);
  } catch (const CapError& e) {
    res.reason = e.what();
    return res;
  }
  if (out.rootGood) {
    Certificate cert = extract_certificate(out);
    auto check = verify_certificate(cert, nf, tu, space, maxRank, cfg.sanityDepth);
    if (!check.pass()) {
      res.reason = "certificate rejected: " + check.violations.front();
      return res;
    }
    res.status = DecideResult::Status::Sat;
    res.cert = std::move(cert);
    return res;
  }
  if (out.exhausted && !out.stats.budgetHit && !(capped && out.stats.rankCapped)) {
    res.status = DecideResult::Status::Unsat;
    return res;
  }
  res.reason = out.stats.budgetHit ? "enumeration budget exhausted"
                                   : "rank cap below the proven bound";
  return res;
}

} // namespace unfo
