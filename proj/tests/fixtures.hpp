#pragma once

#include <string>

#include "unfo/model.hpp"
#include "unfo/oracle.hpp"
#include "unfo/syntax.hpp"

namespace fixtures {

// unary {P}; one transitive pair (T, T~)
inline const char* SIG1 = "sig { unary P; trans T; }";
// SIG1 plus base binary R
inline const char* SIG2 = "sig { unary P; rel R/2; trans T; }";

// (forall x exists y T(x,y)) & (forall x !T(x,x)) : finitely unsatisfiable
inline std::string F_INF = std::string(SIG1) + " (A x. E y. T(x,y)) & (A x. !T(x,x))";
// same over a plain binary relation: finitely satisfiable (2-cycle)
inline std::string F_CYC = std::string(SIG2) + " (A x. E y. R(x,y)) & (A x. !R(x,x))";
inline std::string F_TRIV = std::string(SIG1) + " E x. P(x)";

inline unfo::ParseResult parseFix(const std::string& src) { return unfo::parse_formula(src); }

// domain {0,1}, T = {(0,1)}, P = {1}, closed
inline unfo::FiniteStructure M_PATH2() {
  auto pr = parseFix(F_TRIV);
  unfo::FiniteStructure s(pr.sig, 2);
  s.setUnary(0, 1);
  s.setTrans(0, 0, 1);
  s.setClosedFlag(true);
  return s;
}

inline unfo::NormalForm nfOf(const std::string& src) {
  auto pr = unfo::parse_formula(src);
  return unfo::to_normal_form(pr.formula, pr.sig);
}

} // namespace fixtures
