#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "unfo/construct.hpp"
#include "unfo/decide.hpp"
#include "unfo/oracle.hpp"
#include "unfo/tgd.hpp"

using json = nlohmann::json;
using namespace unfo;

namespace {

const char* kVersion = "1.0.0";

int logLevel() {
  const char* e = std::getenv("UNFO_LOG");
  return e ? std::atoi(e) : 0;
}

void logAt(int lvl, const std::string& msg) {
  if (logLevel() >= lvl) std::cerr << "[unfo] " << msg << std::endl;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string ext(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  auto dot = path.rfind('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return "";
  std::string e = path.substr(dot + 1);
  for (auto& c : e) c = (char)std::tolower((unsigned char)c);
  return e;
}

// ------------------------------------------------------------- serialization

json sigToJson(const Signature& sig) {
  json j;
  j["unary"] = sig.unaries;
  j["rel"] = json::array();
  for (auto& b : sig.bases) j["rel"].push_back({{"name", b.name}, {"arity", b.arity}});
  j["trans"] = json::array();
  for (auto& p : sig.pairs) {
    const char* fl = p.flag == PairFlag::Plain ? "trans"
                   : p.flag == PairFlag::Equivalence ? "equiv" : "order";
    j["trans"].push_back({{"name", p.fwd}, {"flag", fl}});
  }
  return j;
}

Signature sigFromJson(const json& j) {
  Signature sig;
  for (auto& u : j.at("unary")) sig.unaries.push_back(u.get<std::string>());
  for (auto& b : j.at("rel"))
    sig.bases.push_back({b.at("name").get<std::string>(), b.at("arity").get<int>()});
  for (auto& p : j.at("trans")) {
    std::string fl = p.at("flag").get<std::string>();
    std::string nm = p.at("name").get<std::string>();
    PairFlag flag = fl == "trans" ? PairFlag::Plain
                  : fl == "equiv" ? PairFlag::Equivalence : PairFlag::Order;
    sig.pairs.push_back({nm, nm + "~", flag});
  }
  return sig;
}

const char* kindName(SymKind k) {
  switch (k) {
    case SymKind::Unary: return "unary";
    case SymKind::Base: return "base";
    case SymKind::Trans: return "trans";
  }
  return "?";
}

SymKind kindFromName(const std::string& s) {
  if (s == "unary") return SymKind::Unary;
  if (s == "base") return SymKind::Base;
  if (s == "trans") return SymKind::Trans;
  throw Error("unknown symbol kind '" + s + "'");
}

json certToJson(const Certificate& c) {
  json j;
  j["kind"] = "certificate";
  j["sig"] = sigToJson(c.pt.sig);
  j["root"] = c.pt.root;
  j["vertices"] = json::array();
  for (auto& v : c.pt.verts)
    j["vertices"].push_back({{"type", v.type},
                             {"children", v.children},
                             {"family", write_model(v.family)}});
  j["states"] = json::array();
  for (auto& st : c.states) {
    json js;
    js["type"] = st.type;
    js["ranks"] = st.ranks;
    js["obligations"] = json::array();
    for (auto& d : st.obligations.triples) {
      json jd;
      jd["r"] = json::array();
      for (auto& l : d.r)
        jd["r"].push_back({{"pos", l.pos},
                           {"kind", kindName(l.sym.kind)},
                           {"idx", l.sym.idx},
                           {"vars", l.vars}});
      jd["tr"] = json::array();
      for (auto& ta : d.tr) jd["tr"].push_back({ta.u, ta.j1, ta.j2});
      jd["q"] = d.q;
      js["obligations"].push_back(jd);
    }
    j["states"].push_back(js);
  }
  return j;
}

Certificate certFromJson(const json& j) {
  if (j.value("kind", "") != "certificate") throw Error("not a certificate file");
  Certificate c;
  c.pt.sig = sigFromJson(j.at("sig"));
  c.pt.root = j.at("root").get<int>();
  for (auto& jv : j.at("vertices")) {
    PeriodicTree::Vertex v;
    v.type = jv.at("type").get<OneType>();
    v.children = jv.at("children").get<std::vector<int>>();
    v.family = read_model(jv.at("family").get<std::string>(), c.pt.sig);
    v.family.setClosedFlag(true);
    c.pt.verts.push_back(std::move(v));
  }
  for (auto& js : j.at("states")) {
    SearchState st;
    st.type = js.at("type").get<OneType>();
    st.ranks = js.at("ranks").get<std::vector<int>>();
    for (auto& jd : js.at("obligations")) {
      Triple d;
      for (auto& jl : jd.at("r")) {
        RLiteral l;
        l.pos = jl.at("pos").get<bool>();
        l.sym = {kindFromName(jl.at("kind").get<std::string>()), jl.at("idx").get<int>()};
        l.vars = jl.at("vars").get<std::vector<int>>();
        d.r.push_back(std::move(l));
      }
      for (auto& jt : jd.at("tr"))
        d.tr.push_back({jt.at(0).get<int>(), jt.at(1).get<int>(), jt.at(2).get<int>()});
      d.q = jd.at("q").get<uint32_t>();
      st.obligations.triples.insert(std::move(d));
    }
    c.states.push_back(std::move(st));
  }
  return c;
}

// ------------------------------------------------------------------ plumbing

bool gHardExit = false; // a worker thread is still running; skip destructors

template <class F>
auto withDeadline(double seconds, F&& fn) -> std::optional<decltype(fn())> {
  if (seconds <= 0) return fn();
  auto task = std::make_shared<std::packaged_task<decltype(fn())()>>(std::forward<F>(fn));
  auto fut = task->get_future();
  std::thread([task] { (*task)(); }).detach();
  if (fut.wait_for(std::chrono::duration<double>(seconds)) == std::future_status::ready)
    return fut.get();
  gHardExit = true;
  return std::nullopt;
}

BigInt declCountFor(const NormalForm& nf) {
  return BigInt(1) << ((long long)triple_space(nf).pairs.size() * (1ll << nf.t));
}

struct Caps {
  long long stateBudget = 1000000;
  long long familyBudget = 1000000;
  int rankCap = 100000;
  int sanityDepth = 3;
  double timeLimit = 30.0;
  bool exact = false;
  DecideConfig decideConfig() const {
    DecideConfig cfg;
    cfg.mode = exact ? DecideConfig::Mode::Exact : DecideConfig::Mode::Bounded;
    cfg.stateBudget = stateBudget;
    cfg.familyBudget = familyBudget;
    cfg.rankCap = rankCap;
    cfg.sanityDepth = sanityDepth;
    return cfg;
  }
};

struct Report {
  std::string status = "error";
  json detail = json::object();
  json paths = json::object();
};

int statusExit(const std::string& st) {
  if (st == "sat" || st == "pass") return 0;
  if (st == "unsat" || st == "fail") return 1;
  if (st == "unknown") return 2;
  return 3;
}

void citeViolations(Report& rep, const CheckReport& chk) {
  rep.detail["violations"] = chk.violations;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite satisfiability and finite entailment for unary-negation "
               "formulas with transitive relations"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  bool jsonOut = false;
  long long seed = 1;
  int jobs = 1;
  Caps caps;
  app.add_flag("--json", jsonOut, "emit a machine-readable run report on stdout");
  app.add_option("--seed", seed, "seed for anything randomized (runs are reproducible)");
  app.add_option("--jobs", jobs, "parallelism hint; results do not depend on it");
  app.add_option("--state-budget", caps.stateBudget, "search states explored before giving up");
  app.add_option("--family-budget", caps.familyBudget, "per-state enumeration work cap");
  app.add_option("--rank-cap", caps.rankCap, "widest stopwatch range handled exactly");
  app.add_option("--sanity-depth", caps.sanityDepth, "unfolding depth re-checked on certificates");
  app.add_option("--time-limit", caps.timeLimit, "seconds per instance; 0 disables");
  app.add_flag("--exact", caps.exact, "fail loudly instead of degrading to unknown on caps");

  std::string formulaPath, modelPath, certPath, kbPath, inPath, outPath;
  std::string emitPath, emitCertPath, dotPath;
  int maxN = 4, depth = -1;
  long long oracleBudget = 400000000;

  auto* cCheck = app.add_subcommand("check", "decide finite satisfiability of a formula file");
  cCheck->add_option("formula", formulaPath, "formula file")->required();
  cCheck->add_option("--emit-cert", emitCertPath, "write the certificate as JSON");

  auto* cBrute = app.add_subcommand("bruteforce", "exhaustive model search up to a domain size");
  cBrute->add_option("formula", formulaPath)->required();
  cBrute->add_option("--max-n", maxN, "largest domain size tried");
  cBrute->add_option("--budget", oracleBudget, "abstract step budget");
  cBrute->add_option("--emit", emitPath, "write the first model found");

  auto* cModelCheck = app.add_subcommand("model-check", "check a model file against a formula");
  cModelCheck->add_option("formula", formulaPath)->required();
  cModelCheck->add_option("model", modelPath)->required();

  auto* cNorm = app.add_subcommand("normalize", "print the normal form of a formula");
  cNorm->add_option("formula", formulaPath)->required();
  cNorm->add_option("--emit", emitPath, "write the normal form to a file");

  auto* cBuild = app.add_subcommand("build-model", "decide, then build and verify a finite model");
  cBuild->add_option("formula", formulaPath)->required();
  cBuild->add_option("--emit", emitPath, "write the built model");
  cBuild->add_option("--emit-cert", emitCertPath, "write the certificate as JSON");

  auto* cEntails = app.add_subcommand("entails", "finite entailment for a knowledge base file");
  cEntails->add_option("kb", kbPath, "knowledge base file")->required();
  cEntails->add_option("--emit", emitPath, "write the counter-model when not entailed");

  auto* cUnravel = app.add_subcommand("unravel", "unravel a model into a tree-like structure");
  cUnravel->add_option("formula", formulaPath)->required();
  cUnravel->add_option("model", modelPath)->required();
  cUnravel->add_option("--depth", depth, "tree depth; default |S|*(2k+1)+2");
  cUnravel->add_option("--dot", dotPath, "write the tree as DOT");

  auto* cPrune = app.add_subcommand("prune", "unravel, shorten transitive paths, verify bounds");
  cPrune->add_option("formula", formulaPath)->required();
  cPrune->add_option("model", modelPath)->required();
  cPrune->add_option("--depth", depth, "tree depth; default |S|*(2k+1)+2");
  cPrune->add_option("--dot", dotPath, "write the pruned tree as DOT");

  auto* cVerify = app.add_subcommand("verify-cert", "re-validate a certificate against a formula");
  cVerify->add_option("formula", formulaPath)->required();
  cVerify->add_option("certificate", certPath, "certificate JSON")->required();

  auto* cConvert = app.add_subcommand("convert", "convert between text and JSON artifacts");
  cConvert->add_option("input", inPath)->required();
  cConvert->add_option("output", outPath)->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  auto started = std::chrono::steady_clock::now();
  Report rep;
  try {
    DecideConfig cfg = caps.decideConfig();
    if (cCheck->parsed()) {
      auto pr = parse_formula(slurp(formulaPath));
      auto val = validate_unfo(pr.formula, pr.sig);
      if (!val.pass()) throw Error("outside the fragment: " + val.violations[0]);
      logAt(1, "deciding " + formulaPath);
      auto res = withDeadline(caps.timeLimit,
                              [&] { return decide_fin_sat(pr.formula, pr.sig, cfg); });
      if (!res) {
        rep.status = "unknown";
        rep.detail["reason"] = "time limit exceeded";
      } else {
        switch (res->status) {
          case DecideResult::Status::Sat: rep.status = "sat"; break;
          case DecideResult::Status::Unsat: rep.status = "unsat"; break;
          case DecideResult::Status::Unknown:
            rep.status = "unknown";
            rep.detail["reason"] = res->reason;
            break;
        }
        if (res->cert) {
          rep.detail["certificate_vertices"] = (int)res->cert->pt.verts.size();
          if (!emitCertPath.empty()) {
            spit(emitCertPath, certToJson(*res->cert).dump(2) + "\n");
            rep.paths["certificate"] = emitCertPath;
          }
        }
      }
    } else if (cBrute->parsed()) {
      auto pr = parse_formula(slurp(formulaPath));
      auto nf = to_normal_form(pr.formula, pr.sig);
      OracleConfig ocfg;
      ocfg.budget = oracleBudget;
      try {
        auto out = brute_force_sat(nf, pr.sig, maxN, ocfg);
        if (out.found()) {
          rep.status = "sat";
          rep.detail["model_size"] = out.size;
          if (!emitPath.empty()) {
            spit(emitPath, write_model(*out.model));
            rep.paths["model"] = emitPath;
          }
        } else {
          rep.status = "fail";
          rep.detail["no_model_up_to"] = maxN;
        }
      } catch (const CapError& e) {
        rep.status = "unknown";
        rep.detail["reason"] = e.what();
      }
    } else if (cModelCheck->parsed()) {
      auto pr = parse_formula(slurp(formulaPath));
      auto nf = to_normal_form(pr.formula, pr.sig);
      auto m = read_model(slurp(modelPath), nf.sig);
      CheckReport chk = check_constraints(m, nf.sig);
      m.setClosedFlag(chk.pass());
      chk.merge(check_normal_form(m, nf));
      rep.status = chk.pass() ? "pass" : "fail";
      rep.detail["model_size"] = m.n();
      if (!chk.pass()) citeViolations(rep, chk);
    } else if (cNorm->parsed()) {
      auto pr = parse_formula(slurp(formulaPath));
      auto nf = to_normal_form(pr.formula, pr.sig);
      std::string text = render_normal_form(nf);
      rep.status = "pass";
      rep.detail["t"] = nf.t;
      rep.detail["conjuncts"] = (int)nf.conjuncts.size();
      rep.detail["introduced"] = (int)nf.introduced.size();
      if (!emitPath.empty()) {
        spit(emitPath, text);
        rep.paths["normal_form"] = emitPath;
      } else if (jsonOut) {
        rep.detail["normal_form"] = text;
      } else {
        std::cout << text;
      }
    } else if (cBuild->parsed()) {
      auto pr = parse_formula(slurp(formulaPath));
      auto nf = to_normal_form(pr.formula, pr.sig);
      auto res = withDeadline(caps.timeLimit,
                              [&] { return decide_fin_sat(pr.formula, pr.sig, cfg); });
      if (!res) {
        rep.status = "unknown";
        rep.detail["reason"] = "time limit exceeded";
      } else if (res->status == DecideResult::Status::Unsat) {
        rep.status = "unsat";
      } else if (res->status == DecideResult::Status::Unknown) {
        rep.status = "unknown";
        rep.detail["reason"] = res->reason;
      } else {
        logAt(1, "building a finite model from the certificate");
        auto bounds = compute_bounds(nf.sig, nf, declCountFor(nf));
        try {
          auto br = build_finite_model(res->cert->pt, nf, bounds);
          auto chk = verify_build(br, res->cert->pt, nf);
          if (!chk.pass()) throw Error("built model failed verification: " + chk.violations[0]);
          rep.status = "sat";
          rep.detail["model_size"] = br.model.n();
          if (!emitPath.empty()) {
            spit(emitPath, write_model(br.model));
            rep.paths["model"] = emitPath;
          }
          if (!emitCertPath.empty()) {
            spit(emitCertPath, certToJson(*res->cert).dump(2) + "\n");
            rep.paths["certificate"] = emitCertPath;
          }
        } catch (const CapError& e) {
          rep.status = "unknown";
          rep.detail["reason"] = e.what();
        }
      }
    } else if (cEntails->parsed()) {
      auto kb = parse_kb(slurp(kbPath));
      rep.detail["tgds"] = (int)kb.tgds.size();
      rep.detail["facts"] = (int)kb.facts.size();
      auto res = withDeadline(caps.timeLimit, [&] { return finite_entails(kb, cfg); });
      if (!res) {
        rep.status = "unknown";
        rep.detail["reason"] = "time limit exceeded";
      } else if (res->status == EntailResult::Status::Entailed) {
        rep.status = "pass";
      } else if (res->status == EntailResult::Status::NotEntailed) {
        rep.status = "fail";
        rep.detail["counter_model_size"] = res->counter->n();
        if (!emitPath.empty()) {
          spit(emitPath, write_model(*res->counter));
          rep.paths["counter_model"] = emitPath;
        }
      } else {
        rep.status = "unknown";
        rep.detail["reason"] = res->reason;
      }
    } else if (cUnravel->parsed() || cPrune->parsed()) {
      auto pr = parse_formula(slurp(formulaPath));
      auto nf = to_normal_form(pr.formula, pr.sig);
      auto m = read_model(slurp(modelPath), nf.sig);
      m.setClosedFlag(check_constraints(m, nf.sig).pass());
      int d = depth >= 0 ? depth : m.n() * (nf.sig.numTrans() + 1) + 2;
      auto [tl, h] = unravel(m, nf, d);
      rep.detail["depth"] = d;
      rep.detail["tree_nodes"] = tl.size();
      auto tu = TypeUniverse::make(nf.sig);
      if (cUnravel->parsed()) {
        auto chk = verify_tree_like(tl);
        rep.status = chk.pass() ? "pass" : "fail";
        if (!chk.pass()) citeViolations(rep, chk);
        if (!dotPath.empty()) {
          spit(dotPath, to_dot(tl, tu.tab));
          rep.paths["dot"] = dotPath;
        }
      } else {
        std::vector<LightDeclaration> sys;
        std::set<std::pair<std::vector<std::vector<uint64_t>>, OneType>> gtypes;
        for (int a = 0; a < tl.size(); ++a) {
          sys.push_back(ldec(tl, tu, a));
          std::vector<std::vector<uint64_t>> key;
          for (auto& b : sys.back().fd) key.push_back(b.words());
          gtypes.insert({std::move(key), atomic_one_type(tl.str, tu.tab, a)});
        }
        auto bounds = compute_bounds(nf.sig, nf, (int)gtypes.size());
        auto out = prune(tl, sys, tu, bounds);
        CheckReport chk = verify_tree_like(out.tree);
        chk.merge(verify_rank_bound(out.tree, bounds));
        rep.status = chk.pass() ? "pass" : "fail";
        if (!chk.pass()) citeViolations(rep, chk);
        rep.detail["pruned_nodes"] = out.tree.size();
        rep.detail["rank_bound"] = bounds.Mhat_phi.str();
        if (!dotPath.empty()) {
          spit(dotPath, to_dot(out.tree, tu.tab));
          rep.paths["dot"] = dotPath;
        }
      }
    } else if (cVerify->parsed()) {
      auto pr = parse_formula(slurp(formulaPath));
      auto nf = to_normal_form(pr.formula, pr.sig);
      auto cert = certFromJson(json::parse(slurp(certPath)));
      if (sigToJson(cert.pt.sig) != sigToJson(nf.sig))
        throw Error("certificate signature does not match the formula");
      auto tu = TypeUniverse::make(nf.sig);
      auto space = triple_space(nf);
      auto bounds = compute_bounds(nf.sig, nf, declCountFor(nf));
      int maxRank = bounds.Mhat_phi > caps.rankCap ? caps.rankCap : (int)bounds.Mhat_phi;
      auto chk = verify_certificate(cert, nf, tu, space, maxRank, caps.sanityDepth);
      rep.status = chk.pass() ? "pass" : "fail";
      rep.detail["vertices"] = (int)cert.pt.verts.size();
      if (!chk.pass()) citeViolations(rep, chk);
    } else if (cConvert->parsed()) {
      std::string ei = ext(inPath), eo = ext(outPath);
      if (ei == "unfo" && eo == "json") {
        std::string text = slurp(inPath);
        parse_formula(text); // reject unreadable input up front
        spit(outPath, json{{"kind", "formula"}, {"text", text}}.dump(2) + "\n");
      } else if ((ei == "out" || ei == "model") && eo == "json") {
        spit(outPath, json{{"kind", "model"}, {"text", slurp(inPath)}}.dump(2) + "\n");
      } else if (ei == "json") {
        json j = json::parse(slurp(inPath));
        std::string kind = j.value("kind", "");
        if (kind == "formula" && eo == "unfo") {
          spit(outPath, j.at("text").get<std::string>());
        } else if (kind == "model" && (eo == "out" || eo == "model")) {
          spit(outPath, j.at("text").get<std::string>());
        } else if (kind == "certificate" && eo == "dot") {
          auto cert = certFromJson(j);
          spit(outPath, to_dot(cert.pt, OneAtomTable::make(cert.pt.sig)));
        } else {
          throw Error("no conversion from kind '" + kind + "' to ." + eo);
        }
      } else {
        throw Error("no conversion from ." + ei + " to ." + eo);
      }
      rep.status = "pass";
      rep.paths["output"] = outPath;
    }
  } catch (const std::exception& e) {
    rep.status = "error";
    rep.detail["message"] = e.what();
    if (!jsonOut) std::cerr << "error: " << e.what() << std::endl;
  }

  int code = statusExit(rep.status);
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  if (jsonOut) {
    json out;
    out["version"] = kVersion;
    out["command"] = app.get_subcommands().empty() ? "" : app.get_subcommands()[0]->get_name();
    std::vector<std::string> echo(argv + 1, argv + argc);
    out["argv"] = echo;
    out["status"] = rep.status;
    out["exit"] = code;
    out["elapsed_ms"] = elapsed;
    out["seed"] = seed;
    out["jobs"] = jobs;
    out["paths"] = rep.paths;
    out["detail"] = rep.detail;
    std::cout << out.dump(2) << std::endl;
  } else {
    std::cout << "status: " << rep.status << std::endl;
    for (auto& [k, v] : rep.detail.items())
      std::cout << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << std::endl;
    for (auto& [k, v] : rep.paths.items())
      std::cout << k << ": " << v.get<std::string>() << std::endl;
  }
  if (gHardExit) std::_Exit(code);
  return code;
}
