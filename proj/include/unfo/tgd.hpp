#pragma once

#include "unfo/construct.hpp"
#include "unfo/decide.hpp"

namespace unfo {

// Facts over named individuals, frontier-one dependencies, and a closed
// union-of-conjunctive-queries question.
struct KnowledgeBase {
  Signature sig;
  std::vector<std::string> individuals;
  struct Fact {
    SymRef sym;
    std::vector<int> args; // indices into individuals
  };
  std::vector<Fact> facts;
  struct Dependency {
    FPtr body; // conjunction of atoms
    FPtr head; // conjunction of atoms, optionally under one E
  };
  std::vector<Dependency> tgds;
  FPtr query;
  std::vector<std::string> varNames;
};

// Format: sig { ... } facts { P(a); T(a,b); } tgd { body -> head; ... }
// query { formula } — facts and tgd blocks may be omitted.
KnowledgeBase parse_kb(const std::string& text);

// Accepts iff body and head are conjunctions of atoms sharing exactly one
// variable, and every free variable of the head is that shared one.
CheckReport validate_frontier_one(const KnowledgeBase::Dependency& d);

struct Translation {
  Signature sig;                    // kb signature plus one marker unary per individual
  std::vector<std::string> markers; // marker names, aligned with individuals
  FPtr diagram;                     // null when there are no individuals
  std::vector<FPtr> tgdParts;       // one negated existential per dependency
  FPtr negQuery;
  FPtr formula; // conjunction of all of the above
};

// Entailment holds iff the returned formula is finitely unsatisfiable.
// Throws Error on a dependency that is not frontier-one.
Translation translate(const KnowledgeBase& kb);

// Independent round trip: the facts are realized, every dependency holds
// under all instantiations over the domain, and the query is false.
CheckReport verify_counter_model(const KnowledgeBase& kb, const Translation& tr,
                                 const FiniteStructure& m);

struct EntailResult {
  enum class Status { Entailed, NotEntailed, Unknown };
  Status status = Status::Unknown;
  std::optional<FiniteStructure> counter; // NotEntailed: a verified counter-model
  std::string reason;
};

EntailResult finite_entails(const KnowledgeBase& kb, const DecideConfig& cfg = {});

} // namespace unfo
