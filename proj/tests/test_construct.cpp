#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fixtures.hpp"
#include "unfo/construct.hpp"
#include "unfo/decide.hpp"

using namespace unfo;

namespace {

FiniteStructure closedCopy(FiniteStructure s) {
  s = transitive_close(s);
  s.setClosedFlag(true);
  return s;
}

// no directed path over one transitive symbol may use both a (color-0 copy
// into a color-1 element) edge and a (color-1 copy into a color-0 element)
// edge
bool colorBorderOk(const BuildResult& br, const Signature& sig) {
  int tn = sig.numTrans();
  for (int u = 0; u < tn; u += 2) {
    std::vector<std::pair<int, int>> edges; // directed, u-direction
    std::vector<int> label;                 // 0 plain, 1 crosses 0->1, 2 crosses 1->0
    for (auto& e : br.rawEdges) {
      if (e.u != u && e.u != Signature::inverse(u)) continue;
      int a = e.u == u ? e.a : e.b, b = e.u == u ? e.b : e.a;
      int lab = 0;
      if (e.color == 0 && (br.color[a] == 1 || br.color[b] == 1)) lab = 1;
      if (e.color == 1 && (br.color[a] == 0 || br.color[b] == 0)) lab = 2;
      edges.push_back({a, b});
      label.push_back(lab);
    }
    for (int first : {1, 2}) {
      std::vector<char> reach(br.model.n(), 0);
      std::vector<int> stack;
      for (size_t i = 0; i < edges.size(); ++i)
        if (label[i] == first && !reach[edges[i].second]) {
          reach[edges[i].second] = 1;
          stack.push_back(edges[i].second);
        }
      while (!stack.empty()) {
        int a = stack.back();
        stack.pop_back();
        for (size_t i = 0; i < edges.size(); ++i) {
          if (edges[i].first != a) continue;
          if (label[i] == 3 - first) return false;
          if (!reach[edges[i].second]) {
            reach[edges[i].second] = 1;
            stack.push_back(edges[i].second);
          }
        }
      }
    }
  }
  return true;
}

Bounds smallBounds(const NormalForm& nf) { return compute_bounds(nf.sig, nf, BigInt(1)); }

// two vertices alternating along a plain binary edge; types differ through P
PeriodicTree ringSource(const NormalForm& nf) {
  auto tab = OneAtomTable::make(nf.sig);
  PeriodicTree pt;
  pt.sig = nf.sig;
  SymRef r{SymKind::Base, 0};
  FiniteStructure f0(nf.sig, 2);
  f0.setUnary(0, 1);
  f0.setTuple(r, {0, 1});
  f0 = closedCopy(f0);
  FiniteStructure f1(nf.sig, 2);
  f1.setUnary(0, 0);
  f1.setTuple(r, {0, 1});
  f1 = closedCopy(f1);
  pt.verts.push_back({atomic_one_type(f0, tab, 0), f0, {1}});
  pt.verts.push_back({atomic_one_type(f1, tab, 0), f1, {0}});
  return pt;
}

} // namespace

TEST_CASE("size recurrence hits the hand-computed values") {
  CHECK(estimate_size(1, 1, 0, 0) == 2);
  // g=2, n=2, mhat=0: exponent 8*2*1+2 = 18, so 2*4*2^18
  CHECK(estimate_size(2, 2, 0, 0) == BigInt(1) << 21);
  // two rounds with g=n=1, mhat=0: S2 = 2, S4 = 2 * 2^10
  CHECK(estimate_size(1, 1, 0, 1) == BigInt(2) << 10);
}

TEST_CASE("size recurrence grows strictly in every argument") {
  for (int g = 1; g <= 3; ++g)
    for (int n = 1; n <= 3; ++n)
      for (int mh = 0; mh <= 2; ++mh)
        for (int k = 0; k <= 1; ++k) {
          BigInt base = estimate_size(g, n, mh, k);
          CHECK(estimate_size(g + 1, n, mh, k) > base);
          CHECK(estimate_size(g, n + 1, mh, k) > base);
          // with n = 1 the powered base is 1 and the exponent cannot matter
          if (n >= 2) CHECK(estimate_size(g, n, mh + 1, k) > base);
          CHECK(estimate_size(g, n, mh + 1, k) >= base);
          CHECK(estimate_size(g, n, mh, k + 1) > base);
        }
}

TEST_CASE("self-sufficient vertex collapses to a one-element model") {
  auto nf = fixtures::nfOf(std::string(fixtures::SIG1) + " A x. E y. (P(y) & T(x,y) & T(y,x))");
  REQUIRE(nf.conjuncts.size() == 1);
  auto tab = OneAtomTable::make(nf.sig);
  PeriodicTree pt;
  pt.sig = nf.sig;
  FiniteStructure fam(nf.sig, 1);
  fam.setUnary(0, 0);
  fam.setTrans(0, 0, 0);
  fam.setClosedFlag(true);
  pt.verts.push_back({atomic_one_type(fam, tab, 0), fam, {}});
  auto br = build_finite_model(pt, nf, smallBounds(nf));
  CHECK(br.model.n() == 1);
  CHECK(br.model.unary(0, 0));
  CHECK(br.model.trans(0, 0, 0));
  CHECK(br.fp == std::vector<int>{0});
  CHECK(verify_build(br, pt, nf).pass());
}

TEST_CASE("interface identification ties an alternating binary ring shut") {
  auto nf = fixtures::nfOf(fixtures::F_CYC);
  auto pt = ringSource(nf);
  auto br = build_finite_model(pt, nf, smallBounds(nf));
  CHECK(br.model.n() == 6);
  CHECK(br.fp == std::vector<int>{0, 1, 0, 1, 0, 1});
  int ones = 0;
  for (int c : br.color) ones += c;
  CHECK(ones == 2);
  int slot = br.model.binSlot(SymRef{SymKind::Base, 0});
  REQUIRE(slot >= 0);
  for (int a = 0; a < 6; ++a) {
    CHECK_FALSE(br.model.binGet(slot, a, a));
    bool succ = false;
    for (int b = 0; b < 6; ++b)
      if (br.model.binGet(slot, a, b)) succ = true;
    CHECK(succ);
  }
  CHECK(verify_build(br, pt, nf).pass());
  CHECK(colorBorderOk(br, nf.sig));
}

TEST_CASE("fully connected classes are materialized and kept total") {
  auto nf = fixtures::nfOf(std::string(fixtures::SIG2) +
                           " (A x. E y. (R(x,y) & T(x,y))) & (A x. !R(x,x))");
  auto tab = OneAtomTable::make(nf.sig);
  PeriodicTree pt;
  pt.sig = nf.sig;
  SymRef r{SymKind::Base, 0};
  FiniteStructure f0(nf.sig, 2);
  f0.setUnary(0, 1);
  f0.setTuple(r, {0, 1});
  f0.setTrans(0, 0, 1);
  f0.setTrans(0, 1, 0);
  f0 = closedCopy(f0);
  FiniteStructure f1(nf.sig, 2);
  f1.setUnary(0, 0);
  f1.setTuple(r, {0, 1});
  f1.setTrans(0, 0, 1);
  f1.setTrans(0, 1, 0);
  f1 = closedCopy(f1);
  pt.verts.push_back({atomic_one_type(f0, tab, 0), f0, {1}});
  pt.verts.push_back({atomic_one_type(f1, tab, 0), f1, {0}});
  auto br = build_finite_model(pt, nf, smallBounds(nf));
  CHECK(br.model.n() == 3);
  for (int a = 0; a < br.model.n(); ++a)
    for (int b = 0; b < br.model.n(); ++b)
      CHECK(br.model.trans(0, a, b)); // total, diagonals included
  CHECK(verify_build(br, pt, nf).pass());
  CHECK(colorBorderOk(br, nf.sig));
}

TEST_CASE("verification rejects a broken pattern map") {
  auto nf = fixtures::nfOf(fixtures::F_CYC);
  auto pt = ringSource(nf);
  auto br = build_finite_model(pt, nf, smallBounds(nf));
  REQUIRE(verify_build(br, pt, nf).pass());

  auto bad = br;
  bad.fp[bad.origin] = 1;
  auto rep = verify_build(bad, pt, nf);
  CHECK_FALSE(rep.pass());
  bool origin = false, lost = false;
  for (auto& v : rep.violations) {
    if (v.find("origin does not map") != std::string::npos) origin = true;
    if (v.find("lost the 1-type") != std::string::npos) lost = true;
  }
  CHECK(origin);
  CHECK(lost);

  auto bad2 = br;
  bad2.fp[1] = 0; // element realizing the P-vertex claims the other pattern
  rep = verify_build(bad2, pt, nf);
  CHECK_FALSE(rep.pass());
}

TEST_CASE("verification rejects a record without totality") {
  auto nf = fixtures::nfOf(fixtures::F_CYC);
  auto pt = ringSource(nf);
  auto br = build_finite_model(pt, nf, smallBounds(nf));
  REQUIRE_FALSE(br.model.trans(0, 0, 1));
  br.records.push_back({{0, 1}, 0, {0}});
  auto rep = verify_build(br, pt, nf);
  CHECK_FALSE(rep.pass());
  bool cited = false;
  for (auto& v : rep.violations)
    if (v.find("is not total") != std::string::npos) cited = true;
  CHECK(cited);
}

TEST_CASE("decided certificates build into verified models within the size bound") {
  std::vector<std::string> corpus = {
      fixtures::F_CYC,
      fixtures::F_TRIV,
      std::string(fixtures::SIG1) + " A x. E y. T(x,y)",
      std::string(fixtures::SIG1) + " A x. E y. (T(x,y) & P(y))",
  };
  for (auto& src : corpus) {
    CAPTURE(src);
    auto pr = fixtures::parseFix(src);
    auto nf = to_normal_form(pr.formula, pr.sig);
    auto res = decide_fin_sat(pr.formula, pr.sig);
    REQUIRE(res.status == DecideResult::Status::Sat);
    BigInt declCount = BigInt(1)
                       << ((long long)triple_space(nf).pairs.size() * (1ll << nf.t));
    auto bounds = compute_bounds(nf.sig, nf, declCount);
    auto br = build_finite_model(res.cert->pt, nf, bounds);
    CHECK(verify_build(br, res.cert->pt, nf).pass());
    CHECK(colorBorderOk(br, nf.sig));
    auto ctx = make_context(res.cert->pt, nf, bounds);
    BigInt cap = estimate_size(ctx.gcount, (int)res.cert->pt.verts.size() + 2,
                               bounds.Mhat_phi, nf.sig.numTrans() / 2);
    CHECK(BigInt(br.model.n()) <= cap);
  }
}
