#include "unfo/oracle.hpp"

#include <algorithm>

namespace unfo {

namespace {

struct Search {
  const NormalForm& nf;
  const Signature& sig;
  const OracleConfig& cfg;
  OneAtomTable tab;
  DnfMatrix dm;
  long long steps = 0;

  int numTypes;
  std::vector<bool> typeDiagBad;       // phi0 violated already on a single element
  std::vector<std::vector<bool>> typeConjBad; // per w==0 conjunct, per type
  // per w==1 conjunct c, feasible1[c][alpha][beta]: some pair structure works
  std::vector<std::vector<std::vector<bool>>> feasible1;
  std::vector<bool> selfWitnessOK; // per conjunct (any w, all witnesses = x), per type: flattened
  std::vector<std::vector<bool>> selfOK; // [conjunct][type]
  int pairBits;
  std::vector<std::vector<std::vector<int>>> allowedPairValues; // [alpha][beta] -> values

  Search(const NormalForm& nf_, const Signature& sig_, const OracleConfig& cfg_)
      : nf(nf_), sig(sig_), cfg(cfg_), tab(OneAtomTable::make(sig_)), dm(dnf_matrix(nf_)) {
    for (auto& b : sig.bases)
      if (b.arity != 2)
        throw CapError("oracle supports unary and binary relations only");
    if (tab.count() > 10) throw CapError("oracle: too many one-variable atoms");
    numTypes = 1 << tab.count();
    pairBits = sig.numTrans() + 2 * numBinBase();
    if (pairBits > 20) throw CapError("oracle: too many binary symbols");
    precompute();
  }

  int numBinBase() const {
    int c = 0;
    for (auto& b : sig.bases)
      if (b.arity == 2) ++c;
    return c;
  }

  void tick(long long c = 1) {
    steps += c;
    if (steps > cfg.budget) throw CapError("oracle budget exceeded");
  }

  FiniteStructure oneElem(int alpha) const {
    FiniteStructure s(sig, 1);
    apply_one_type(s, tab, 0, (OneType)alpha);
    return s;
  }

  // apply pair value v on (i, j): per trans symbol one direction bit each,
  // then two bits per binary base slot
  void applyPair(FiniteStructure& s, int i, int j, int v) const {
    int bit = 0;
    for (int u = 0; u < sig.numTrans(); u += 2) {
      s.setTrans(u, i, j, (v >> bit) & 1);
      ++bit;
      s.setTrans(u, j, i, (v >> bit) & 1);
      ++bit;
    }
    for (int slot = sig.numTrans(); slot < s.numBinSlots(); ++slot) {
      s.binSet(slot, i, j, (v >> bit) & 1);
      ++bit;
      s.binSet(slot, j, i, (v >> bit) & 1);
      ++bit;
    }
  }

  // local consistency of a fresh 2-element structure: mutual trans edges need
  // diagonal loops
  bool pairLocallyConsistent(const FiniteStructure& s) const {
    for (int u = 0; u < sig.numTrans(); ++u) {
      if (s.trans(u, 0, 1) && s.trans(u, 1, 0) &&
          (!s.trans(u, 0, 0) || !s.trans(u, 1, 1)))
        return false;
    }
    return true;
  }

  void precompute() {
    typeDiagBad.assign(numTypes, false);
    for (int a = 0; a < numTypes; ++a) {
      FiniteStructure s = oneElem(a);
      typeDiagBad[a] = phi0_violated(s, dm, nullptr);
    }
    selfOK.assign(nf.conjuncts.size(), std::vector<bool>(numTypes, false));
    for (size_t c = 0; c < nf.conjuncts.size(); ++c)
      for (int a = 0; a < numTypes; ++a) {
        FiniteStructure s = oneElem(a);
        std::map<Var, int> asg;
        for (int v = 0; v <= nf.conjuncts[c].w; ++v) asg[v] = 0;
        selfOK[c][a] = eval(s, nf.conjuncts[c].matrix, asg);
      }
    feasible1.assign(nf.conjuncts.size(), {});
    for (size_t c = 0; c < nf.conjuncts.size(); ++c) {
      if (nf.conjuncts[c].w != 1) continue;
      feasible1[c].assign(numTypes, std::vector<bool>(numTypes, false));
      for (int a = 0; a < numTypes; ++a)
        for (int b = 0; b < numTypes; ++b) {
          for (int v = 0; v < (1 << pairBits); ++v) {
            FiniteStructure s(sig, 2);
            apply_one_type(s, tab, 0, (OneType)a);
            apply_one_type(s, tab, 1, (OneType)b);
            applyPair(s, 0, 1, v);
            if (!pairLocallyConsistent(s)) continue;
            std::map<Var, int> asg{{0, 0}, {1, 1}};
            if (eval(s, nf.conjuncts[c].matrix, asg)) {
              feasible1[c][a][b] = true;
              break;
            }
          }
        }
    }
    // allowed pair values per ordered type pair (phi0 must not fire on the pair)
    allowedPairValues.assign(numTypes, std::vector<std::vector<int>>(numTypes));
    for (int a = 0; a < numTypes; ++a)
      for (int b = 0; b < numTypes; ++b) {
        for (int v = 0; v < (1 << pairBits); ++v) {
          FiniteStructure s(sig, 2);
          apply_one_type(s, tab, 0, (OneType)a);
          apply_one_type(s, tab, 1, (OneType)b);
          applyPair(s, 0, 1, v);
          if (!pairLocallyConsistent(s)) continue;
          if (dm.t == 2) {
            bool bad = false;
            for (auto& d : dm.disjuncts) {
              if (disjunct_holds(s, d, {0, 1}) || disjunct_holds(s, d, {1, 0})) {
                bad = true;
                break;
              }
            }
            if (bad) continue;
          }
          allowedPairValues[a][b].push_back(v);
        }
        tick(1 << pairBits);
      }
  }

  std::optional<FiniteStructure> searchSize(int n) {
    // sorted 1-type vectors
    std::vector<int> types(n, 0);
    std::optional<FiniteStructure> out;
    enumTypes(types, 0, 0, n, out);
    return out;
  }

  void enumTypes(std::vector<int>& types, int pos, int lo, int n,
                 std::optional<FiniteStructure>& out) {
    if (out) return;
    if (pos == n) {
      tryTypeVector(types, n, out);
      return;
    }
    for (int t = lo; t < numTypes; ++t) {
      types[pos] = t;
      enumTypes(types, pos + 1, t, n, out);
      if (out) return;
    }
  }

  bool stagePrune(const FiniteStructure& s, const std::vector<int>& types, int n, int stage) {
    // elements 0..stage have all their mutual pairs decided; check that each
    // w<=1 conjunct remains witnessable for each such element
    for (int a = 0; a <= stage; ++a) {
      for (size_t c = 0; c < nf.conjuncts.size(); ++c) {
        int w = nf.conjuncts[c].w;
        if (w > 1) continue;
        if (w == 0) continue; // handled at the type stage
        if (selfOK[c][types[a]]) continue;
        bool possible = false;
        for (int b = 0; b < n && !possible; ++b) {
          if (b == a) continue;
          if (b <= stage) {
            std::map<Var, int> asg{{0, a}, {1, b}};
            tick();
            if (eval(s, nf.conjuncts[c].matrix, asg)) possible = true;
          } else {
            if (feasible1[c][types[a]][types[b]]) possible = true;
          }
        }
        if (!possible) return false;
      }
    }
    return true;
  }

  // transitivity among {c,i,j} (all pairs decided) plus mutual-edge diagonals
  bool triangleOK(const FiniteStructure& s, int x, int y, int z) const {
    int elems[3] = {x, y, z};
    for (int u = 0; u < sig.numTrans(); ++u) {
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          if (p == q) continue;
          for (int r = 0; r < 3; ++r) {
            if (r == p || r == q) continue;
            if (s.trans(u, elems[p], elems[q]) && s.trans(u, elems[q], elems[r]) &&
                !s.trans(u, elems[p], elems[r]))
              return false;
          }
        }
    }
    return true;
  }

  bool mutualDiagOK(const FiniteStructure& s, int i, int j) const {
    for (int u = 0; u < sig.numTrans(); ++u)
      if (s.trans(u, i, j) && s.trans(u, j, i) &&
          (!s.trans(u, i, i) || !s.trans(u, j, j)))
        return false;
    return true;
  }

  void tryTypeVector(const std::vector<int>& types, int n,
                     std::optional<FiniteStructure>& out) {
    tick(n);
    for (int t : types)
      if (typeDiagBad[t]) return;
    // w==0 conjuncts and initial witness feasibility
    FiniteStructure s(sig, n);
    for (int a = 0; a < n; ++a) apply_one_type(s, tab, a, (OneType)types[a]);
    for (size_t c = 0; c < nf.conjuncts.size(); ++c) {
      if (nf.conjuncts[c].w != 0) continue;
      for (int a = 0; a < n; ++a)
        if (!selfOK[c][types[a]]) return;
    }
    // feasibility before any pair is decided
    for (int a = 0; a < n; ++a)
      for (size_t c = 0; c < nf.conjuncts.size(); ++c) {
        if (nf.conjuncts[c].w != 1 || selfOK[c][types[a]]) continue;
        bool possible = false;
        for (int b = 0; b < n && !possible; ++b)
          if (b != a && feasible1[c][types[a]][types[b]]) possible = true;
        if (n == 1) possible = selfOK[c][types[a]];
        if (!possible) return;
      }
    dfsPairs(s, types, n, 1, 0, out);
  }

  void dfsPairs(FiniteStructure& s, const std::vector<int>& types, int n, int j, int i,
                std::optional<FiniteStructure>& out) {
    if (out) return;
    if (j >= n) {
      finishLeaf(s, out);
      return;
    }
    for (int v : allowedPairValues[types[i]][types[j]]) {
      tick();
      applyPair(s, i, j, v);
      bool ok = mutualDiagOK(s, i, j);
      for (int c = 0; c < i && ok; ++c) ok = triangleOK(s, c, i, j);
      if (ok) {
        int ni = i + 1, nj = j;
        if (ni == j) { ni = 0; nj = j + 1; }
        bool stageDone = ni == 0;
        if (!stageDone || stagePrune(s, types, n, j))
          dfsPairs(s, types, n, nj, ni, out);
      }
      if (out) return;
    }
    // restore: clear the pair
    applyPair(s, i, j, 0);
  }

  void finishLeaf(FiniteStructure& s, std::optional<FiniteStructure>& out) {
    tick(10);
    FiniteStructure closed = s; // already closed by triangle checks
    closed.setClosedFlag(true);
    if (!check_constraints(closed, sig).pass()) return;
    if (!check_normal_form(closed, nf).pass()) return;
    out = closed;
  }
};

} // namespace

OracleOutcome brute_force_sat(const NormalForm& nf, const Signature& sig, int max_n,
                              const OracleConfig& cfg) {
  if (max_n < 1) throw Error("brute_force_sat: max_n must be >= 1");
  Search se(nf, sig, cfg);
  for (int n = 1; n <= max_n; ++n) {
    auto m = se.searchSize(n);
    if (m) return {std::move(m), n};
  }
  return {std::nullopt, max_n};
}

std::optional<int> min_model_size(const NormalForm& nf, const Signature& sig, int max_n,
                                  const OracleConfig& cfg) {
  auto r = brute_force_sat(nf, sig, max_n, cfg);
  if (r.found()) return r.size;
  return std::nullopt;
}

CheckReport cross_check(const NormalForm& nf, const Signature& sig, DecideStatus status,
                        bool certificate_verified, int max_n, const OracleConfig& cfg) {
  CheckReport rep;
  OracleOutcome o = brute_force_sat(nf, sig, max_n, cfg);
  if (status == DecideStatus::Unsat && o.found())
    rep.fail("decision procedure says Unsat but a model of size " +
             std::to_string(o.size) + " exists");
  if (status == DecideStatus::Sat && !certificate_verified)
    rep.fail("decision procedure says Sat but its certificate failed verification");
  if (status == DecideStatus::Sat && !o.found())
    rep.note("Sat with no model up to " + std::to_string(max_n) +
             " (consistent: minimal models may be larger)");
  return rep;
}

} // namespace unfo
