#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "fixtures.hpp"
#include "unfo/model.hpp"

using namespace unfo;

TEST_CASE("transitive_close basics") {
  auto pr = parse_formula(fixtures::F_TRIV);
  FiniteStructure s(pr.sig, 3);
  s.setTrans(0, 0, 1);
  s.setTrans(0, 1, 2);
  auto c = transitive_close(s);
  CHECK(c.trans(0, 0, 2));
  CHECK(c.trans(1, 2, 0)); // inverse mirrored
  CHECK_FALSE(c.trans(0, 2, 0));
  // idempotent
  auto c2 = transitive_close(c);
  CHECK(c == c2);
}

TEST_CASE("transitive_close agrees with naive reference") {
  std::mt19937 rng(99);
  auto pr = parse_formula(fixtures::F_TRIV);
  for (int iter = 0; iter < 100; ++iter) {
    int n = 1 + (int)(rng() % 8);
    FiniteStructure s(pr.sig, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (rng() % 4 == 0) s.setTrans(0, a, b);
    auto fast = transitive_close(s);
    // naive: repeat single composition steps until fixpoint
    FiniteStructure ref = s;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            if (ref.trans(0, a, b) && ref.trans(0, b, c) && !ref.trans(0, a, c)) {
              ref.setTrans(0, a, c);
              changed = true;
            }
    }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        CHECK(fast.trans(0, a, b) == ref.trans(0, a, b));
        CHECK(fast.trans(1, b, a) == ref.trans(0, a, b));
      }
    // monotone: adding a tuple never removes closure tuples
    FiniteStructure s2 = s;
    s2.setTrans(0, rng() % n, rng() % n);
    auto fast2 = transitive_close(s2);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (fast.trans(0, a, b)) CHECK(fast2.trans(0, a, b));
  }
}

TEST_CASE("eval on M_PATH2") {
  auto m = fixtures::M_PATH2();
  auto pr = parse_formula(fixtures::F_TRIV);
  std::vector<std::string> vn;
  std::map<Var, int> asg;

  FPtr p1 = parse_formula_body("P(a)", pr.sig, vn);
  asg[0] = 1;
  CHECK(eval(m, p1, asg));
  asg[0] = 0;
  CHECK_FALSE(eval(m, p1, asg));

  vn.clear();
  FPtr t10 = parse_formula_body("T(a,b)", pr.sig, vn);
  std::map<Var, int> asg2{{0, 1}, {1, 0}};
  CHECK_FALSE(eval(m, t10, asg2));
  std::map<Var, int> asg3{{0, 0}, {1, 1}};
  CHECK(eval(m, t10, asg3));

  vn.clear();
  FPtr ex = parse_formula_body("E y. T(a,y)", pr.sig, vn);
  // the binder for y is seen first, so the free variable a gets id 1
  Var a = -1;
  for (size_t i = 0; i < vn.size(); ++i)
    if (vn[i] == "a") a = (Var)i;
  REQUIRE(a == 1);
  std::map<Var, int> asg4{{a, 0}};
  CHECK(eval(m, ex, asg4));
  std::map<Var, int> asg5{{a, 1}};
  CHECK_FALSE(eval(m, ex, asg5));
}

TEST_CASE("check_normal_form violations") {
  auto nf = fixtures::nfOf(fixtures::F_INF);
  // singleton with T-loop: phi0 = T(x,x) fires at (0)
  FiniteStructure s(nf.sig, 1);
  s.setTrans(0, 0, 0);
  s.setClosedFlag(true);
  auto rep = check_normal_form(s, nf);
  CHECK_FALSE(rep.pass());
  bool foundPhi0 = false;
  for (auto& v : rep.violations)
    if (v.find("phi0") != std::string::npos) foundPhi0 = true;
  CHECK(foundPhi0);

  // singleton without loop: witness missing
  FiniteStructure s2(nf.sig, 1);
  s2.setClosedFlag(true);
  auto rep2 = check_normal_form(s2, nf);
  CHECK_FALSE(rep2.pass());

  // two-cycle model of F_CYC passes
  auto nfc = fixtures::nfOf(fixtures::F_CYC);
  FiniteStructure c(nfc.sig, 2);
  int slot = c.binSlot(SymRef{SymKind::Base, 0});
  c.binSet(slot, 0, 1);
  c.binSet(slot, 1, 0);
  c.setClosedFlag(true);
  CHECK(check_normal_form(c, nfc).pass());
}

TEST_CASE("atomic types on M_PATH2") {
  auto m = fixtures::M_PATH2();
  OneAtomTable tab = OneAtomTable::make(m.sig());
  // atoms: P, T-diagonal
  REQUIRE(tab.count() == 2);
  CHECK(atomic_one_type(m, tab, 0) == 0); // neither P nor T(x,x)
  CHECK(atomic_one_type(m, tab, 1) == 1); // P only
  auto tt = atomic_two_type(m, tab, 0, 1);
  CHECK(tt.mixedBin[0] == std::make_pair(true, false));  // T(x1,x2), !T(x2,x1)
  CHECK(tt.mixedBin[1] == std::make_pair(false, true));  // T~ mirrored
  CHECK(tt.t1 == atomic_one_type(m, tab, 0));

  // reflexive singleton
  FiniteStructure r(m.sig(), 1);
  r.setTrans(0, 0, 0);
  CHECK((atomic_one_type(r, tab, 0) & 2) != 0);
}

TEST_CASE("class_of") {
  auto m = fixtures::M_PATH2();
  CHECK(class_of(m, 0, {0, 1}) == std::vector<int>{0});
  CHECK(class_of(m, 0, {}) == std::vector<int>{0, 1});
  CHECK_THROWS_AS(class_of(m, 0, {0}), Error);

  FiniteStructure tot(m.sig(), 2);
  tot.setTrans(0, 0, 1);
  tot.setTrans(0, 1, 0);
  tot.setTrans(0, 0, 0);
  tot.setTrans(0, 1, 1);
  CHECK(class_of(tot, 0, {0, 1}) == std::vector<int>{0, 1});
}

TEST_CASE("check_constraints") {
  auto pr = parse_formula(fixtures::F_TRIV);
  FiniteStructure s(pr.sig, 3);
  s.setTrans(0, 0, 1);
  s.setTrans(0, 1, 2);
  auto rep = check_constraints(s, pr.sig);
  CHECK_FALSE(rep.pass());

  CHECK(check_constraints(fixtures::M_PATH2(), pr.sig).pass());

  // inverse mismatch: set only the forward direction
  FiniteStructure s2(pr.sig, 2);
  s2.binSet(0, 0, 1, true); // raw write, no inverse sync
  CHECK_FALSE(check_constraints(s2, pr.sig).pass());
}

TEST_CASE("check_hom_conditions identity and doubling") {
  auto nfc = fixtures::nfOf(fixtures::F_CYC);
  FiniteStructure c(nfc.sig, 2);
  int slot = c.binSlot(SymRef{SymKind::Base, 0});
  c.binSet(slot, 0, 1);
  c.binSet(slot, 1, 0);
  c.setClosedFlag(true);
  CHECK(check_hom_conditions(c, c, nfc).pass());

  // disjoint doubling
  FiniteStructure d(nfc.sig, 4);
  for (int off : {0, 2}) {
    d.binSet(slot, off, off + 1);
    d.binSet(slot, off + 1, off);
  }
  d.setClosedFlag(true);
  CHECK(check_hom_conditions(d, c, nfc).pass());
  CHECK(check_normal_form(d, nfc).pass());

  // element lacking witnesses
  FiniteStructure bad(nfc.sig, 3);
  bad.binSet(slot, 0, 1);
  bad.binSet(slot, 1, 0);
  bad.setClosedFlag(true);
  auto rep = check_hom_conditions(bad, c, nfc);
  CHECK_FALSE(rep.pass());
  bool a1 = false;
  for (auto& v : rep.violations)
    if (v.find("(a1)") != std::string::npos) a1 = true;
  CHECK(a1);
}

TEST_CASE("atomic_type consistency invariant") {
  auto m = fixtures::M_PATH2();
  OneAtomTable tab = OneAtomTable::make(m.sig());
  auto tt = atomic_two_type(m, tab, 0, 1);
  CHECK(tt.t1 == atomic_one_type(m, tab, 0));
  CHECK(tt.t2 == atomic_one_type(m, tab, 1));
}

TEST_CASE("model file round trip") {
  auto m = fixtures::M_PATH2();
  std::string txt = write_model(m);
  auto back = read_model(txt, m.sig());
  CHECK(back.n() == 2);
  CHECK(back.unary(0, 1));
  CHECK(back.binGet(0, 0, 1));
  CHECK(back.binGet(1, 1, 0)); // T~ written out explicitly
  std::string txt2 = write_model(back);
  CHECK(txt == txt2);

  CHECK_THROWS_AS(read_model("domain 2\nZ : (0)\n", m.sig()), ParseError);
  CHECK_THROWS_AS(read_model("P : (0)\n", m.sig()), ParseError);
}

TEST_CASE("apply_one_type round trips through atomic_one_type") {
  auto pr = parse_formula(fixtures::F_CYC);
  OneAtomTable tab = OneAtomTable::make(pr.sig);
  for (OneType t = 0; t < (1u << tab.count()); ++t) {
    FiniteStructure s(pr.sig, 1);
    apply_one_type(s, tab, 0, t);
    CHECK(atomic_one_type(s, tab, 0) == t);
  }
}
