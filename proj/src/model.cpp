#include "unfo/model.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

namespace unfo {

OneAtomTable OneAtomTable::make(const Signature& sig) {
  OneAtomTable t;
  for (int i = 0; i < (int)sig.unaries.size(); ++i)
    t.atoms.push_back({SymRef{SymKind::Unary, i}});
  for (int i = 0; i < (int)sig.bases.size(); ++i)
    t.atoms.push_back({SymRef{SymKind::Base, i}});
  for (int p = 0; p < sig.k(); ++p)
    t.atoms.push_back({SymRef{SymKind::Trans, 2 * p}}); // shared diagonal of the pair
  if ((int)t.atoms.size() > 64) throw CapError("too many one-variable atoms (cap 64)");
  return t;
}

std::string OneAtomTable::describe(const Signature& sig, uint64_t type) const {
  std::string s = "{";
  bool first = true;
  for (int i = 0; i < count(); ++i) {
    if (!((type >> i) & 1)) continue;
    if (!first) s += ",";
    first = false;
    s += sig.name(atoms[i].sym);
    if (atoms[i].sym.kind != SymKind::Unary) s += "(x,..)";
  }
  return s + "}";
}

FiniteStructure::FiniteStructure(Signature sig, int n) : sig_(std::move(sig)), n_(n) {
  unary_.assign(sig_.unaries.size(), Bits(n));
  int slots = sig_.numTrans();
  for (auto& b : sig_.bases)
    if (b.arity == 2) ++slots;
  bin_.assign(slots, std::vector<Bits>(n, Bits(n)));
  wide_.assign(sig_.bases.size(), {});
}

int FiniteStructure::binSlot(SymRef s) const {
  if (s.kind == SymKind::Trans) return s.idx;
  if (s.kind == SymKind::Base && sig_.bases[s.idx].arity == 2) {
    int slot = sig_.numTrans();
    for (int i = 0; i < s.idx; ++i)
      if (sig_.bases[i].arity == 2) ++slot;
    return slot;
  }
  return -1;
}

SymRef FiniteStructure::binSlotSym(int slot) const {
  if (slot < sig_.numTrans()) return SymRef{SymKind::Trans, slot};
  int rem = slot - sig_.numTrans();
  for (int i = 0; i < (int)sig_.bases.size(); ++i)
    if (sig_.bases[i].arity == 2 && rem-- == 0) return SymRef{SymKind::Base, i};
  throw Error("bad binary slot");
}

bool FiniteStructure::hasTuple(SymRef s, const std::vector<int>& args) const {
  if (s.kind == SymKind::Unary) return unary_[s.idx].get(args[0]);
  int slot = binSlot(s);
  if (slot >= 0) return bin_[slot][args[0]].get(args[1]);
  return wide_[s.idx].count(args) > 0;
}

void FiniteStructure::setTuple(SymRef s, const std::vector<int>& args, bool v) {
  if (s.kind == SymKind::Unary) { unary_[s.idx].set(args[0], v); return; }
  int slot = binSlot(s);
  if (slot >= 0) { bin_[slot][args[0]].set(args[1], v); return; }
  if (v) wide_[s.idx].insert(args);
  else wide_[s.idx].erase(args);
}

FiniteStructure transitive_close(const FiniteStructure& in) {
  FiniteStructure s = in;
  int n = s.n();
  for (int p = 0; p < s.sig().k(); ++p) {
    int u = 2 * p, ui = 2 * p + 1;
    // symmetrize the pair: union of T and inverse of T~
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (s.binGet(ui, b, a)) s.binSet(u, a, b);
    // Warshall with bitset rows
    for (int m = 0; m < n; ++m)
      for (int a = 0; a < n; ++a)
        if (s.binGet(u, a, m)) {
          Bits row = s.binRow(u, a);
          row.orWith(s.binRow(u, m));
          for (int b = 0; b < n; ++b) s.binSet(u, a, b, row.get(b));
        }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        s.binSet(ui, b, a, s.binGet(u, a, b));
  }
  s.setClosedFlag(true);
  return s;
}

bool eval(const FiniteStructure& s, const FPtr& f, std::map<Var, int> asg) {
  switch (f->kind) {
    case FKind::True: return true;
    case FKind::False: return false;
    case FKind::Atom: {
      std::vector<int> args;
      for (Var v : f->args) {
        auto it = asg.find(v);
        if (it == asg.end()) throw Error("eval: unbound variable");
        args.push_back(it->second);
      }
      return s.hasTuple(f->sym, args);
    }
    case FKind::Eq: {
      auto a = asg.find(f->lhs), b = asg.find(f->rhs);
      if (a == asg.end() || b == asg.end()) throw Error("eval: unbound variable");
      return a->second == b->second;
    }
    case FKind::And:
      for (auto& k : f->kids)
        if (!eval(s, k, asg)) return false;
      return true;
    case FKind::Or:
      for (auto& k : f->kids)
        if (eval(s, k, asg)) return true;
      return false;
    case FKind::Neg:
      return !eval(s, f->body, asg);
    case FKind::Exists: {
      size_t w = f->bound.size();
      std::vector<int> tuple(w, 0);
      if (s.n() == 0) return false;
      while (true) {
        for (size_t i = 0; i < w; ++i) asg[f->bound[i]] = tuple[i];
        if (eval(s, f->body, asg)) return true;
        size_t i = 0;
        while (i < w && ++tuple[i] == s.n()) tuple[i++] = 0;
        if (i == w) return false;
      }
    }
  }
  return false;
}

CheckReport check_normal_form(const FiniteStructure& s, const NormalForm& nf) {
  CheckReport rep;
  int n = s.n();
  // forall xbar !phi0
  if (nf.phi0->kind != FKind::False && n > 0) {
    std::vector<int> tuple(nf.t, 0);
    while (true) {
      std::map<Var, int> asg;
      for (int i = 0; i < nf.t; ++i) asg[i] = tuple[i];
      if (eval(s, nf.phi0, asg)) {
        std::ostringstream os;
        os << "phi0 holds at (";
        for (int i = 0; i < nf.t; ++i) os << (i ? "," : "") << tuple[i];
        os << ")";
        rep.fail(os.str());
      }
      int i = 0;
      while (i < nf.t && ++tuple[i] == n) tuple[i++] = 0;
      if (i == nf.t) break;
    }
  }
  // forall x exists ybar phi_i
  for (int a = 0; a < n; ++a) {
    for (size_t ci = 0; ci < nf.conjuncts.size(); ++ci) {
      const auto& c = nf.conjuncts[ci];
      bool found = false;
      std::vector<int> tuple(c.w, 0);
      while (!found) {
        std::map<Var, int> asg;
        asg[0] = a;
        for (int i = 0; i < c.w; ++i) asg[i + 1] = tuple[i];
        if (eval(s, c.matrix, asg)) { found = true; break; }
        int i = 0;
        while (i < c.w && ++tuple[i] == n) tuple[i++] = 0;
        if (i == c.w) break;
        if (c.w == 0) break;
      }
      if (c.w == 0 && !found) {
        std::map<Var, int> asg;
        asg[0] = a;
        found = eval(s, c.matrix, asg);
      }
      if (!found) {
        std::ostringstream os;
        os << "element " << a << " lacks a witness for conjunct " << ci;
        rep.fail(os.str());
      }
    }
  }
  return rep;
}

OneType atomic_one_type(const FiniteStructure& s, const OneAtomTable& tab, int a) {
  OneType t = 0;
  for (int i = 0; i < tab.count(); ++i) {
    const SymRef& sym = tab.atoms[i].sym;
    bool v = false;
    switch (sym.kind) {
      case SymKind::Unary:
        v = s.unary(sym.idx, a);
        break;
      case SymKind::Base:
        v = s.hasTuple(sym, std::vector<int>(s.sig().bases[sym.idx].arity, a));
        break;
      case SymKind::Trans:
        v = s.trans(sym.idx, a, a) || s.trans(Signature::inverse(sym.idx), a, a);
        break;
    }
    if (v) t |= 1ull << i;
  }
  return t;
}

void apply_one_type(FiniteStructure& s, const OneAtomTable& tab, int a, OneType t) {
  for (int i = 0; i < tab.count(); ++i) {
    bool v = (t >> i) & 1;
    const SymRef& sym = tab.atoms[i].sym;
    switch (sym.kind) {
      case SymKind::Unary:
        s.setUnary(sym.idx, a, v);
        break;
      case SymKind::Base:
        s.setTuple(sym, std::vector<int>(s.sig().bases[sym.idx].arity, a), v);
        break;
      case SymKind::Trans:
        s.setTrans(sym.idx, a, a, v);
        break;
    }
  }
}

TwoType atomic_two_type(const FiniteStructure& s, const OneAtomTable& tab, int a, int b) {
  TwoType t;
  t.t1 = atomic_one_type(s, tab, a);
  t.t2 = atomic_one_type(s, tab, b);
  for (int slot = 0; slot < s.numBinSlots(); ++slot)
    t.mixedBin.push_back({s.binGet(slot, a, b), s.binGet(slot, b, a)});
  for (int i = 0; i < (int)s.sig().bases.size(); ++i) {
    int ar = s.sig().bases[i].arity;
    if (ar < 3) continue;
    std::vector<int> pat(ar, 0);
    while (true) {
      bool constant = std::all_of(pat.begin(), pat.end(), [&](int x) { return x == pat[0]; });
      if (!constant) {
        std::vector<int> args;
        for (int x : pat) args.push_back(x ? b : a);
        if (s.hasTuple(SymRef{SymKind::Base, i}, args)) t.mixedWide.insert({i, pat});
      }
      int j = 0;
      while (j < ar && ++pat[j] == 2) pat[j++] = 0;
      if (j == ar) break;
    }
  }
  return t;
}

std::vector<int> class_of(const FiniteStructure& s, int a, const std::vector<int>& transSyms) {
  for (int u : transSyms)
    if (std::find(transSyms.begin(), transSyms.end(), Signature::inverse(u)) == transSyms.end())
      throw Error("class_of: symbol set not closed under inverses");
  std::vector<int> out;
  if (transSyms.empty()) {
    for (int b = 0; b < s.n(); ++b) out.push_back(b);
    return out;
  }
  for (int b = 0; b < s.n(); ++b) {
    if (b == a) { out.push_back(b); continue; }
    bool all = true;
    for (int u : transSyms)
      if (!s.trans(u, a, b)) { all = false; break; }
    if (all) out.push_back(b);
  }
  return out;
}

CheckReport check_hom_conditions(const FiniteStructure& s2, const FiniteStructure& s1,
                                 const NormalForm& nf) {
  CheckReport rep;
  OneAtomTable tab = OneAtomTable::make(s2.sig());
  // (a1) witness structures in s2
  CheckReport wit = check_normal_form(s2, nf);
  for (auto& v : wit.violations)
    if (v.find("lacks a witness") != std::string::npos) rep.fail("(a1) " + v);
  // (a2) per t-tuple, 1-type preserving homomorphism into s1
  std::vector<OneType> ty1(s1.n()), ty2(s2.n());
  for (int a = 0; a < s1.n(); ++a) ty1[a] = atomic_one_type(s1, tab, a);
  for (int a = 0; a < s2.n(); ++a) ty2[a] = atomic_one_type(s2, tab, a);
  int n2 = s2.n();
  std::vector<int> tuple(nf.t, 0);
  if (n2 == 0) return rep;
  while (true) {
    std::vector<int> elems; // distinct elements of the tuple
    for (int v : tuple)
      if (std::find(elems.begin(), elems.end(), v) == elems.end()) elems.push_back(v);
    // backtracking over images
    std::vector<int> img(elems.size(), -1);
    std::function<bool(size_t)> go = [&](size_t i) -> bool {
      if (i == elems.size()) return true;
      for (int c = 0; c < s1.n(); ++c) {
        if (ty1[c] != ty2[elems[i]]) continue;
        bool ok = true;
        for (size_t j = 0; j <= i && ok; ++j) {
          int e1 = elems[i], e2 = elems[j];
          int c1 = c, c2 = (j == i) ? c : img[j];
          for (int slot = 0; slot < s2.numBinSlots() && ok; ++slot) {
            if (s2.binGet(slot, e1, e2) && !s1.binGet(slot, c1, c2)) ok = false;
            if (s2.binGet(slot, e2, e1) && !s1.binGet(slot, c2, c1)) ok = false;
          }
        }
        // wide tuples fully inside elems[0..i]
        for (int bi = 0; bi < (int)s2.sig().bases.size() && ok; ++bi) {
          if (s2.sig().bases[bi].arity == 2) continue;
          for (auto& tp : s2.wideTuples(bi)) {
            bool inside = true;
            for (int x : tp) {
              bool found = false;
              for (size_t j = 0; j <= i; ++j)
                if (elems[j] == x) { found = true; break; }
              if (!found) { inside = false; break; }
            }
            if (!inside) continue;
            std::vector<int> mapped;
            for (int x : tp)
              for (size_t j = 0; j <= i; ++j)
                if (elems[j] == x) { mapped.push_back(j == i ? c : img[j]); break; }
            if (!s1.hasTuple(SymRef{SymKind::Base, bi}, mapped)) { ok = false; break; }
          }
        }
        if (!ok) continue;
        img[i] = c;
        if (go(i + 1)) return true;
        img[i] = -1;
      }
      return false;
    };
    if (!go(0)) {
      std::ostringstream os;
      os << "(a2) no 1-type preserving homomorphism for tuple (";
      for (int i = 0; i < nf.t; ++i) os << (i ? "," : "") << tuple[i];
      os << ")";
      rep.fail(os.str());
    }
    int i = 0;
    while (i < nf.t && ++tuple[i] == n2) tuple[i++] = 0;
    if (i == nf.t) break;
  }
  return rep;
}

CheckReport check_constraints(const FiniteStructure& s, const Signature& sig) {
  CheckReport rep;
  int n = s.n();
  for (int p = 0; p < sig.k(); ++p) {
    int u = 2 * p, ui = 2 * p + 1;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (s.binGet(u, a, b) != s.binGet(ui, b, a)) {
          std::ostringstream os;
          os << "inverse mismatch " << sig.pairs[p].fwd << "(" << a << "," << b << ")";
          rep.fail(os.str());
        }
      }
    for (int uu : {u, ui})
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          if (!s.binGet(uu, a, b)) continue;
          for (int c = 0; c < n; ++c)
            if (s.binGet(uu, b, c) && !s.binGet(uu, a, c)) {
              std::ostringstream os;
              os << "non-transitive triple (" << a << "," << b << "," << c << ") for "
                 << sig.name(SymRef{SymKind::Trans, uu});
              rep.fail(os.str());
            }
        }
  }
  return rep;
}

bool disjunct_holds(const FiniteStructure& s, const Disjunct& d, const std::vector<int>& tuple) {
  for (auto& [i, j] : d.neq)
    if (tuple[i] == tuple[j]) return false;
  for (auto& ta : d.tr)
    if (!s.trans(ta.u, tuple[ta.j1], tuple[ta.j2])) return false;
  for (auto& l : d.r) {
    std::vector<int> args;
    for (int v : l.vars) args.push_back(tuple[v]);
    if (s.hasTuple(l.sym, args) != l.pos) return false;
  }
  return true;
}

bool phi0_violated(const FiniteStructure& s, const DnfMatrix& dm, std::vector<int>* witness) {
  if (dm.disjuncts.empty() || s.n() == 0) return false;
  std::vector<int> tuple(dm.t, 0);
  while (true) {
    for (auto& d : dm.disjuncts)
      if (disjunct_holds(s, d, tuple)) {
        if (witness) *witness = tuple;
        return true;
      }
    int i = 0;
    while (i < dm.t && ++tuple[i] == s.n()) tuple[i++] = 0;
    if (i == dm.t) return false;
  }
}

std::string write_model(const FiniteStructure& s) {
  std::ostringstream os;
  os << "domain " << s.n() << "\n";
  const Signature& sig = s.sig();
  for (int i = 0; i < (int)sig.unaries.size(); ++i) {
    std::ostringstream line;
    bool any = false;
    for (int a = 0; a < s.n(); ++a)
      if (s.unary(i, a)) { line << " (" << a << ")"; any = true; }
    if (any) os << sig.unaries[i] << " :" << line.str() << "\n";
  }
  for (int slot = 0; slot < s.numBinSlots(); ++slot) {
    SymRef sym = s.binSlotSym(slot);
    std::ostringstream line;
    bool any = false;
    for (int a = 0; a < s.n(); ++a)
      for (int b = 0; b < s.n(); ++b)
        if (s.binGet(slot, a, b)) { line << " (" << a << "," << b << ")"; any = true; }
    if (any) os << sig.name(sym) << " :" << line.str() << "\n";
  }
  for (int i = 0; i < (int)sig.bases.size(); ++i) {
    if (sig.bases[i].arity == 2) continue;
    if (s.wideTuples(i).empty()) continue;
    os << sig.bases[i].name << " :";
    for (auto& tp : s.wideTuples(i)) {
      os << " (";
      for (size_t j = 0; j < tp.size(); ++j) os << (j ? "," : "") << tp[j];
      os << ")";
    }
    os << "\n";
  }
  return os.str();
}

FiniteStructure read_model(const std::string& text, const Signature& sig) {
  std::istringstream is(text);
  std::string line;
  int n = -1;
  FiniteStructure s;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "domain") {
      if (!(ls >> n) || n < 0) throw ParseError("bad domain line", lineno, 1);
      s = FiniteStructure(sig, n);
      continue;
    }
    if (n < 0) throw ParseError("missing 'domain N' line", lineno, 1);
    auto sym = sig.find(head);
    if (!sym) throw ParseError("unknown symbol '" + head + "'", lineno, 1);
    std::string rest;
    std::getline(ls, rest);
    auto colon = rest.find(':');
    if (colon == std::string::npos) throw ParseError("expected ':'", lineno, 1);
    rest = rest.substr(colon + 1);
    size_t pos = 0;
    while (true) {
      auto open = rest.find('(', pos);
      if (open == std::string::npos) break;
      auto close = rest.find(')', open);
      if (close == std::string::npos) throw ParseError("unbalanced tuple", lineno, 1);
      std::string inner = rest.substr(open + 1, close - open - 1);
      std::vector<int> args;
      std::istringstream ts(inner);
      std::string num;
      while (std::getline(ts, num, ',')) args.push_back(std::stoi(num));
      if ((int)args.size() != sig.arity(*sym))
        throw ParseError("arity mismatch for " + head, lineno, 1);
      for (int a : args)
        if (a < 0 || a >= n) throw ParseError("element out of range", lineno, 1);
      s.setTuple(*sym, args);
      pos = close + 1;
    }
  }
  if (n < 0) throw ParseError("missing 'domain N' line", lineno, 1);
  return s;
}

} // namespace unfo
