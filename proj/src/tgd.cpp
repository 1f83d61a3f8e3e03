#include "unfo/tgd.hpp"

#include <algorithm>
#include <cctype>

#include "unfo/oracle.hpp"

namespace unfo {

namespace {

size_t skipWs(const std::string& s, size_t i) {
  while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
  return i;
}

std::string readIdent(const std::string& s, size_t& i) {
  i = skipWs(s, i);
  size_t b = i;
  while (i < s.size() && (std::isalnum((unsigned char)s[i]) || s[i] == '_')) ++i;
  if (i == b) throw ParseError("expected a keyword in the knowledge base", 0, 0);
  return s.substr(b, i - b);
}

std::string readBlock(const std::string& s, size_t& i) {
  i = skipWs(s, i);
  if (i >= s.size() || s[i] != '{') throw ParseError("expected '{'", 0, 0);
  size_t close = s.find('}', i);
  if (close == std::string::npos) throw ParseError("unterminated block", 0, 0);
  std::string body = s.substr(i + 1, close - i - 1);
  i = close + 1;
  return body;
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace((unsigned char)s[b])) ++b;
  while (e > b && std::isspace((unsigned char)s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> splitSemis(const std::string& s) {
  std::vector<std::string> out;
  size_t b = 0;
  while (b <= s.size()) {
    size_t e = s.find(';', b);
    if (e == std::string::npos) e = s.size();
    std::string part = trim(s.substr(b, e - b));
    if (!part.empty()) out.push_back(part);
    b = e + 1;
  }
  return out;
}

int internIndividual(KnowledgeBase& kb, const std::string& nm) {
  for (size_t j = 0; j < kb.individuals.size(); ++j)
    if (kb.individuals[j] == nm) return (int)j;
  kb.individuals.push_back(nm);
  return (int)kb.individuals.size() - 1;
}

std::vector<std::string> splitCommaArgs(const std::string& s) {
  std::vector<std::string> out;
  size_t b = 0;
  while (b <= s.size()) {
    size_t e = s.find(',', b);
    if (e == std::string::npos) e = s.size();
    std::string part = trim(s.substr(b, e - b));
    if (part.empty()) throw ParseError("empty argument in fact", 0, 0);
    out.push_back(part);
    b = e + 1;
  }
  return out;
}

void parseFact(KnowledgeBase& kb, const std::string& text) {
  size_t open = text.find('(');
  size_t close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ParseError("fact must look like NAME(a,b,...): " + text, 0, 0);
  std::string nm = trim(text.substr(0, open));
  auto sym = kb.sig.find(nm);
  if (!sym) throw ParseError("unknown symbol '" + nm + "' in facts", 0, 0);
  KnowledgeBase::Fact f;
  f.sym = *sym;
  for (auto& arg : splitCommaArgs(text.substr(open + 1, close - open - 1)))
    f.args.push_back(internIndividual(kb, arg));
  if ((int)f.args.size() != kb.sig.arity(*sym))
    throw ParseError("arity mismatch in fact: " + text, 0, 0);
  kb.facts.push_back(std::move(f));
}

bool conjunctionOfAtoms(const FPtr& f) {
  if (f->kind == FKind::Atom) return true;
  if (f->kind == FKind::And) {
    for (auto& k : f->kids)
      if (!conjunctionOfAtoms(k)) return false;
    return true;
  }
  return false;
}

} // namespace

KnowledgeBase parse_kb(const std::string& text) {
  KnowledgeBase kb;
  size_t i = skipWs(text, 0);
  if (text.compare(i, 3, "sig") != 0) throw ParseError("knowledge base must open with 'sig'", 0, 0);
  size_t close = text.find('}', i);
  if (close == std::string::npos) throw ParseError("unterminated sig block", 0, 0);
  kb.sig = parse_formula(text.substr(i, close - i + 1) + " E kv_. kv_ = kv_").sig;
  i = close + 1;

  bool sawFacts = false, sawTgd = false, sawQuery = false;
  while (skipWs(text, i) < text.size()) {
    i = skipWs(text, i);
    std::string kw = readIdent(text, i);
    std::string body = readBlock(text, i);
    if (kw == "facts") {
      if (sawFacts) throw ParseError("duplicate facts block", 0, 0);
      sawFacts = true;
      for (auto& part : splitSemis(body)) parseFact(kb, part);
    } else if (kw == "tgd") {
      if (sawTgd) throw ParseError("duplicate tgd block", 0, 0);
      sawTgd = true;
      for (auto& part : splitSemis(body)) {
        size_t arrow = part.find("->");
        if (arrow == std::string::npos || part.find("->", arrow + 2) != std::string::npos)
          throw ParseError("dependency must have exactly one '->': " + part, 0, 0);
        KnowledgeBase::Dependency d;
        d.body = parse_formula_body(trim(part.substr(0, arrow)), kb.sig, kb.varNames);
        d.head = parse_formula_body(trim(part.substr(arrow + 2)), kb.sig, kb.varNames);
        kb.tgds.push_back(std::move(d));
      }
    } else if (kw == "query") {
      if (sawQuery) throw ParseError("duplicate query block", 0, 0);
      sawQuery = true;
      auto parts = splitSemis(body);
      if (parts.size() != 1) throw ParseError("query block holds exactly one formula", 0, 0);
      kb.query = parse_formula_body(parts[0], kb.sig, kb.varNames);
      if (!freeVars(kb.query).empty()) throw ParseError("query must be a sentence", 0, 0);
    } else {
      throw ParseError("unknown block '" + kw + "'", 0, 0);
    }
  }
  if (!sawQuery) throw ParseError("knowledge base needs a query block", 0, 0);
  return kb;
}

CheckReport validate_frontier_one(const KnowledgeBase::Dependency& d) {
  CheckReport rep;
  if (!conjunctionOfAtoms(d.body)) rep.fail("body must be a conjunction of atoms");
  FPtr inner = d.head->kind == FKind::Exists ? d.head->body : d.head;
  if (!conjunctionOfAtoms(inner)) rep.fail("head must be a conjunction of atoms");
  auto bv = freeVars(d.body);
  auto hv = freeVars(d.head);
  std::vector<Var> shared;
  for (Var v : hv)
    if (bv.count(v)) shared.push_back(v);
  if (shared.size() != 1)
    rep.fail("dependency shares " + std::to_string(shared.size()) +
             " variables between body and head; the frontier must be a single variable");
  if (hv.size() != shared.size())
    rep.fail("head uses a free variable that does not occur in the body");
  return rep;
}

Translation translate(const KnowledgeBase& kb) {
  for (size_t j = 0; j < kb.tgds.size(); ++j) {
    auto rep = validate_frontier_one(kb.tgds[j]);
    if (!rep.pass())
      throw Error("dependency " + std::to_string(j) + ": " + rep.violations[0]);
  }
  Translation tr;
  tr.sig = kb.sig;
  for (auto& nm : kb.individuals) {
    std::string mk = "ind_" + nm;
    while (tr.sig.known(mk)) mk += "_";
    tr.markers.push_back(mk);
    tr.sig.addUnary(mk);
  }
  std::vector<FPtr> all;
  if (!kb.individuals.empty()) {
    int base = (int)kb.varNames.size();
    std::vector<Var> vars;
    std::vector<FPtr> parts;
    for (size_t j = 0; j < kb.individuals.size(); ++j) {
      vars.push_back(base + (int)j);
      parts.push_back(mkAtom(*tr.sig.find(tr.markers[j]), {base + (int)j}));
    }
    for (auto& f : kb.facts) {
      std::vector<Var> args;
      for (int a : f.args) args.push_back(base + a);
      parts.push_back(mkAtom(f.sym, std::move(args)));
    }
    tr.diagram = mkExists(std::move(vars), mkAnd(std::move(parts)));
    all.push_back(tr.diagram);
  }
  for (auto& d : kb.tgds) {
    auto fv = freeVars(mkAnd2(d.body, d.head));
    std::vector<Var> close(fv.begin(), fv.end());
    tr.tgdParts.push_back(mkNeg(mkExists(std::move(close), mkAnd2(d.body, mkNeg(d.head)))));
    all.push_back(tr.tgdParts.back());
  }
  tr.negQuery = mkNeg(kb.query);
  all.push_back(tr.negQuery);
  tr.formula = all.size() == 1 ? all[0] : mkAnd(std::move(all));
  return tr;
}

CheckReport verify_counter_model(const KnowledgeBase& kb, const Translation& tr,
                                 const FiniteStructure& m) {
  CheckReport rep;
  if (tr.diagram && !eval(m, tr.diagram, {})) rep.fail("the facts are not realized");
  for (size_t j = 0; j < kb.tgds.size(); ++j) {
    auto& d = kb.tgds[j];
    auto fv = freeVars(d.body);
    std::vector<Var> vars(fv.begin(), fv.end());
    std::vector<int> asg(vars.size(), 0);
    bool ok = true;
    while (ok) {
      std::map<Var, int> env;
      for (size_t p = 0; p < vars.size(); ++p) env[vars[p]] = asg[p];
      if (eval(m, d.body, env) && !eval(m, d.head, env)) {
        rep.fail("dependency " + std::to_string(j) + " fails on an instantiation");
        break;
      }
      size_t p = 0;
      while (p < asg.size() && ++asg[p] == m.n()) asg[p++] = 0;
      if (p == asg.size()) ok = false;
      if (vars.empty()) ok = false;
    }
  }
  if (eval(m, kb.query, {})) rep.fail("the query already holds in the counter-model");
  return rep;
}

EntailResult finite_entails(const KnowledgeBase& kb, const DecideConfig& cfg) {
  EntailResult out;
  auto tr = translate(kb);
  auto valid = validate_unfo(tr.formula, tr.sig);
  if (!valid.pass()) throw Error("translation left the fragment: " + valid.violations[0]);
  auto res = decide_fin_sat(tr.formula, tr.sig, cfg);
  if (res.status == DecideResult::Status::Unsat) {
    out.status = EntailResult::Status::Entailed;
    return out;
  }
  if (res.status == DecideResult::Status::Unknown) {
    out.status = EntailResult::Status::Unknown;
    out.reason = res.reason;
    return out;
  }
  auto nf = to_normal_form(tr.formula, tr.sig);
  std::optional<FiniteStructure> m;
  try {
    auto oracle = brute_force_sat(nf, tr.sig, cfg.oracleMaxN);
    if (oracle.found()) m = std::move(*oracle.model);
  } catch (const CapError&) {
  }
  if (!m && res.cert) {
    try {
      BigInt declCount = BigInt(1)
                         << ((long long)triple_space(nf).pairs.size() * (1ll << nf.t));
      auto bounds = compute_bounds(nf.sig, nf, declCount);
      auto br = build_finite_model(res.cert->pt, nf, bounds);
      if (verify_build(br, res.cert->pt, nf).pass()) m = std::move(br.model);
    } catch (const Error&) {
    }
  }
  if (!m) {
    out.status = EntailResult::Status::Unknown;
    out.reason = "satisfiable, but no counter-model could be produced";
    return out;
  }
  auto check = verify_counter_model(kb, tr, *m);
  if (!check.pass()) {
    out.status = EntailResult::Status::Unknown;
    out.reason = "counter-model rejected: " + check.violations[0];
    return out;
  }
  out.status = EntailResult::Status::NotEntailed;
  out.counter = std::move(m);
  return out;
}

} // namespace unfo
