#include "unfo/declarations.hpp"

#include <algorithm>
#include <sstream>

namespace unfo {

TypeUniverse TypeUniverse::make(const Signature& sig) {
  TypeUniverse tu;
  tu.tab = OneAtomTable::make(sig);
  if (tu.tab.count() > 16) throw CapError("too many one-variable atoms for a type universe");
  tu.count = 1 << tu.tab.count();
  return tu;
}

void LightDeclaration::normalize() {
  for (int mask = 0; mask < (int)fd.size(); ++mask)
    for (int u = 0; u < numTrans; ++u)
      if (mask & (1 << u)) fd[mask].orWith(fd[mask & ~(1 << u)]);
}

bool LightDeclaration::monotone() const {
  for (int mask = 0; mask < (int)fd.size(); ++mask)
    for (int u = 0; u < numTrans; ++u)
      if ((mask & (1 << u)) && !fd[mask & ~(1 << u)].subsetOf(fd[mask])) return false;
  return true;
}

LightDeclaration ldec(const TreeLike& tl, const TypeUniverse& tu, int a) {
  int tn = tl.str.sig().numTrans();
  LightDeclaration d(tn, tu.count);
  for (auto& b : d.fd)
    for (int al = 0; al < tu.count; ++al) b.set(al);
  for (int b = 0; b < tl.size(); ++b) {
    int mab = 0;
    for (int u = 0; u < tn; ++u)
      if (tl.str.trans(u, a, b)) mab |= 1 << u;
    OneType alpha = atomic_one_type(tl.str, tu.tab, b);
    for (int s = mab;; s = (s - 1) & mab) {
      d.fd[s].set((int)alpha, false);
      if (s == 0) break;
    }
  }
  return d;
}

LightDeclaration ldec(const PeriodicTree& pt, const TypeUniverse& tu, int v, int nodeCap) {
  PeriodicTree sub = pt;
  sub.root = v;
  std::optional<LightDeclaration> prev;
  for (int depth = 1;; ++depth) {
    auto [tl, origin] = unfold(sub, depth);
    if (tl.size() > nodeCap) throw CapError("periodic declaration did not stabilize under the cap");
    LightDeclaration cur = ldec(tl, tu, 0);
    if (prev && cur == *prev) return cur;
    prev = std::move(cur);
  }
}

CheckReport check_lcc_light(const FiniteStructure& family,
                            const std::vector<LightDeclaration>& decls, const TypeUniverse& tu) {
  CheckReport rep;
  int m = family.n();
  int tn = family.sig().numTrans();
  for (int a1 = 0; a1 < m; ++a1)
    for (int a2 = 0; a2 < m; ++a2) {
      int mab = 0;
      for (int u = 0; u < tn; ++u)
        if (family.trans(u, a1, a2)) mab |= 1 << u;
      OneType t2 = atomic_one_type(family, tu.tab, a2);
      for (int s = mab;; s = (s - 1) & mab) {
        std::string where = "members " + std::to_string(a1) + "," + std::to_string(a2) +
                            " subset " + std::to_string(s);
        if (!decls[a1].fd[s].subsetOf(decls[a2].fd[s]))
          rep.violations.push_back("(ld1) promise not propagated at " + where);
        if (decls[a1].fd[s].get((int)t2))
          rep.violations.push_back("(ld2) realized type promised away at " + where);
        if (s == 0) break;
      }
    }
  return rep;
}

std::string render_triple(const Triple& d, const Signature& sig, int t) {
  std::ostringstream os;
  os << "(";
  bool first = true;
  for (auto& r : d.r) {
    if (!first) os << " & ";
    first = false;
    if (!r.pos) os << "!";
    os << sig.name(r.sym) << "(";
    for (size_t i = 0; i < r.vars.size(); ++i) os << (i ? "," : "") << "x" << r.vars[i];
    os << ")";
  }
  for (auto& a : d.tr) {
    if (!first) os << " & ";
    first = false;
    os << sig.name(SymRef{SymKind::Trans, a.u}) << "(x" << a.j1 << ",x" << a.j2 << ")";
  }
  for (int i = 0; i < t; ++i) {
    if (!first) os << " & ";
    first = false;
    os << "x" << i << ((d.q >> i) & 1 ? "=y" : "!=y");
  }
  os << ")";
  return os.str();
}

namespace {

bool rlitHolds(const FiniteStructure& s, const RLiteral& lit, const std::vector<int>& val) {
  bool v = false;
  switch (lit.sym.kind) {
    case SymKind::Unary: v = s.unary(lit.sym.idx, val[lit.vars[0]]); break;
    case SymKind::Trans: v = s.trans(lit.sym.idx, val[lit.vars[0]], val[lit.vars[1]]); break;
    case SymKind::Base: {
      std::vector<int> args;
      for (int x : lit.vars) args.push_back(val[x]);
      v = s.hasTuple(lit.sym, args);
      break;
    }
  }
  return v == lit.pos;
}

using Skeleton = std::pair<std::vector<RLiteral>, std::vector<TAtom>>;

Skeleton l9_skeleton(const Skeleton& p, uint32_t S, int t) {
  int h = 0;
  while ((S >> h) & 1) ++h;
  Skeleton out;
  for (auto& r : p.first) {
    bool in = true;
    for (int x : r.vars)
      if (!((S >> x) & 1)) { in = false; break; }
    if (in) out.first.push_back(r);
  }
  for (auto& a : p.second) {
    bool in1 = (S >> a.j1) & 1, in2 = (S >> a.j2) & 1;
    if (in1 && in2) out.second.push_back(a);
    else if (in1) out.second.push_back(TAtom{a.u, a.j1, h});
    else if (in2) out.second.push_back(TAtom{a.u, h, a.j2});
  }
  std::sort(out.first.begin(), out.first.end());
  out.first.erase(std::unique(out.first.begin(), out.first.end()), out.first.end());
  std::sort(out.second.begin(), out.second.end());
  out.second.erase(std::unique(out.second.begin(), out.second.end()), out.second.end());
  (void)t;
  return out;
}

} // namespace

TripleSpace triple_space(const NormalForm& nf, int cap) {
  DnfMatrix dm = dnf_matrix(nf);
  TripleSpace sp;
  sp.t = dm.t;
  std::set<Skeleton> seen;
  std::vector<Skeleton> queue;
  for (auto& d : dm.disjuncts) {
    if (!d.neq.empty()) throw Error("matrix with residual inequalities is not supported here");
    Skeleton p{d.r, d.tr};
    std::sort(p.first.begin(), p.first.end());
    std::sort(p.second.begin(), p.second.end());
    if (seen.insert(p).second) queue.push_back(p);
  }
  for (size_t i = 0; i < queue.size(); ++i) {
    if ((int)queue.size() > cap) throw CapError("triple space exceeded its cap");
    for (uint32_t S = 1; S + 1 < (1u << dm.t); ++S) {
      Skeleton img = l9_skeleton(queue[i], S, dm.t);
      if (seen.insert(img).second) queue.push_back(img);
    }
  }
  sp.pairs = std::move(queue);
  return sp;
}

std::optional<Triple> l8_image(const Triple& d, const std::vector<int>& fit, int c) {
  uint32_t q = 0;
  for (size_t i = 0; i < fit.size(); ++i) {
    if (fitFlat(fit[i]) != c) return std::nullopt;
    if (fit[i] == 2 * (c - 1) + 1) q |= 1u << i;
  }
  return Triple{d.r, d.tr, q};
}

std::optional<Triple> l9_image(const Triple& d, const std::vector<int>& fit, int c) {
  int t = (int)fit.size();
  uint32_t S = 0, exact = 0;
  for (int i = 0; i < t; ++i)
    if (fitFlat(fit[i]) == c) {
      S |= 1u << i;
      if (fit[i] == 2 * (c - 1) + 1) exact |= 1u << i;
    }
  if (S == 0 || S == (1u << t) - 1) return std::nullopt;
  Skeleton img = l9_skeleton({d.r, d.tr}, S, t);
  int h = 0;
  while ((S >> h) & 1) ++h;
  uint32_t q = exact | (1u << h) | (((1u << t) - 1) & ~S);
  return Triple{std::move(img.first), std::move(img.second), q};
}

PhiDeclaration dec(const TreeLike& tl, const NormalForm& nf, const TripleSpace& space, int a,
                   long long budget) {
  int t = space.t;
  std::vector<int> sub;
  {
    std::vector<int> stack{a};
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      sub.push_back(x);
      for (int c : tl.nodes[x].kids) stack.push_back(c);
    }
    std::sort(sub.begin(), sub.end());
  }
  std::set<Triple> absent;
  std::vector<int> idx(t, 0), val(t, 0);
  long long used = 0;
  while (true) {
    uint32_t q = 0;
    for (int i = 0; i < t; ++i) {
      val[i] = sub[idx[i]];
      if (val[i] == a) q |= 1u << i;
    }
    for (auto& p : space.pairs) {
      if (++used > budget) throw CapError("declaration enumeration budget exhausted");
      bool ok = true;
      for (auto& r : p.first)
        if (!rlitHolds(tl.str, r, val)) { ok = false; break; }
      if (ok)
        for (auto& x : p.second)
          if (!tl.str.trans(x.u, val[x.j1], val[x.j2])) { ok = false; break; }
      if (ok) absent.insert(Triple{p.first, p.second, q});
    }
    int i = t - 1;
    while (i >= 0 && idx[i] == (int)sub.size() - 1) idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
  PhiDeclaration d;
  for (auto& p : space.pairs)
    for (uint32_t q = 0; q < (1u << t); ++q) {
      Triple tr{p.first, p.second, q};
      if (!absent.count(tr)) d.triples.insert(std::move(tr));
    }
  return d;
}

bool lcc_local_discharge(const FiniteStructure& family, const Triple& d,
                         const std::vector<int>& fit, int t) {
  // (l1)/(l6): a pattern conjunct straddles regions no relation can span
  for (auto& r : d.r) {
    bool fully = true;
    for (int x : r.vars)
      if (fit[x] != 0 && fit[x] % 2 == 0) fully = false;
    if (fully) continue;
    bool onParent = false;
    std::set<int> exactKids, flatKids;
    for (int x : r.vars) {
      if (fit[x] == 0) onParent = true;
      else if (fit[x] % 2 == 1) exactKids.insert((fit[x] + 1) / 2);
      if (fit[x] != 0) flatKids.insert(fitFlat(fit[x]));
    }
    if (onParent || exactKids.size() >= 2) return true; // (l1)
    if (flatKids.size() >= 2) return true;              // (l6)
  }
  // (l2): a fully fitted r-conjunct fails on the family
  for (auto& r : d.r) {
    bool fully = true;
    for (int x : r.vars)
      if (fit[x] != 0 && fit[x] % 2 == 0) fully = false;
    if (!fully) continue;
    std::vector<int> val(t, 0);
    for (int x : r.vars) val[x] = fitFlat(fit[x]);
    if (!rlitHolds(family, r, val)) return true;
  }
  // (l3): a fully fitted transitive conjunct fails on the family
  for (auto& x : d.tr) {
    bool fully =
        (fit[x.j1] == 0 || fit[x.j1] % 2 == 1) && (fit[x.j2] == 0 || fit[x.j2] % 2 == 1);
    if (fully && !family.trans(x.u, fitFlat(fit[x.j1]), fitFlat(fit[x.j2]))) return true;
  }
  // (l4)/(l5): the equality pattern disagrees with the fitting
  for (int i = 0; i < t; ++i) {
    if (((d.q >> i) & 1) && fit[i] != 0) return true;
    if (!((d.q >> i) & 1) && fit[i] == 0) return true;
  }
  // (l7): a transitive conjunct spans regions the family cannot join
  for (auto& x : d.tr) {
    int f1 = fitFlat(fit[x.j1]), f2 = fitFlat(fit[x.j2]);
    if (f1 != f2 && !family.trans(x.u, f1, f2)) return true;
  }
  return false;
}

CheckReport check_lcc(const FiniteStructure& family, const std::vector<PhiDeclaration>& decls,
                      const NormalForm& nf, long long fittingCap) {
  CheckReport rep;
  int s = family.n() - 1;
  int t = nf.t;
  long long total = 1;
  for (int i = 0; i < t; ++i) {
    total *= 2 * s + 1;
    if (total > fittingCap) throw CapError("fitting space exceeded its cap");
  }
  long long perTriple = total;
  if ((long long)decls[0].triples.size() * perTriple > fittingCap)
    throw CapError("fitting space exceeded its cap");

  std::vector<int> fit(t, 0);
  for (auto& d : decls[0].triples) {
    std::fill(fit.begin(), fit.end(), 0);
    while (true) {
      bool ok = lcc_local_discharge(family, d, fit, t);
      // (l8)/(l9): the obligation is delegated to a child
      if (!ok)
        for (int c = 1; c <= s && !ok; ++c) {
          if (auto img = l8_image(d, fit, c))
            if (decls[c].triples.count(*img)) ok = true;
          if (!ok)
            if (auto img = l9_image(d, fit, c))
              if (decls[c].triples.count(*img)) ok = true;
        }
      if (!ok) {
        std::ostringstream os;
        os << "no local condition holds for " << render_triple(d, family.sig(), t)
           << " under fitting [";
        for (int i = 0; i < t; ++i) os << (i ? "," : "") << fit[i];
        os << "]";
        rep.violations.push_back(os.str());
        break; // cite the first failing fitting per triple
      }
      int i = t - 1;
      while (i >= 0 && fit[i] == 2 * s) fit[i--] = 0;
      if (i < 0) break;
      ++fit[i];
    }
  }
  return rep;
}

namespace {

template <class LocalCheck, class GlobalCheck>
CheckReport localGlobal(const TreeLike& tl, LocalCheck&& local, GlobalCheck&& global) {
  CheckReport rep;
  std::vector<std::string> localViol, globalViol;
  for (int a = 0; a < tl.size(); ++a) local(a, localViol);
  for (int a = 0; a < tl.size(); ++a) global(a, globalViol);
  bool localPass = localViol.empty(), globalPass = globalViol.empty();
  rep.note(localPass ? "local: pass" : "local: fail");
  rep.note(globalPass ? "global: pass" : "global: fail");
  for (auto& v : localViol) rep.violations.push_back(v);
  if (localPass)
    for (auto& v : globalViol) rep.violations.push_back("locally consistent yet " + v);
  else
    for (auto& v : globalViol) rep.note("vacuous: " + v);
  return rep;
}

} // namespace

CheckReport verify_local_global(const TreeLike& tl, const std::vector<LightDeclaration>& system,
                                const TypeUniverse& tu) {
  return localGlobal(
      tl,
      [&](int a, std::vector<std::string>& out) {
        std::vector<LightDeclaration> decls{system[a]};
        for (int c : tl.nodes[a].kids) decls.push_back(system[c]);
        auto r = check_lcc_light(tl.familyFragment(a), decls, tu);
        for (auto& v : r.violations) out.push_back("node " + std::to_string(a) + ": " + v);
      },
      [&](int a, std::vector<std::string>& out) {
        LightDeclaration canon = ldec(tl, tu, a);
        for (int mask = 0; mask < (int)canon.fd.size(); ++mask)
          if (!system[a].fd[mask].subsetOf(canon.fd[mask]))
            out.push_back("promise broken at node " + std::to_string(a) + " subset " +
                          std::to_string(mask));
      });
}

CheckReport verify_local_global(const TreeLike& tl, const std::vector<PhiDeclaration>& system,
                                const NormalForm& nf, const TripleSpace& space) {
  return localGlobal(
      tl,
      [&](int a, std::vector<std::string>& out) {
        std::vector<PhiDeclaration> decls{system[a]};
        for (int c : tl.nodes[a].kids) decls.push_back(system[c]);
        auto r = check_lcc(tl.familyFragment(a), decls, nf);
        for (auto& v : r.violations) out.push_back("node " + std::to_string(a) + ": " + v);
      },
      [&](int a, std::vector<std::string>& out) {
        PhiDeclaration canon = dec(tl, nf, space, a);
        for (auto& tr : system[a].triples)
          if (!canon.triples.count(tr))
            out.push_back("promise broken at node " + std::to_string(a) + ": " +
                          render_triple(tr, tl.str.sig(), space.t));
      });
}

} // namespace unfo
