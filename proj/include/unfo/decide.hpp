#pragma once

#include <functional>
#include <optional>

#include "unfo/pruning.hpp"

namespace unfo {

// One node of the search: a 1-type, a lower bound on the node's declaration
// (patterns the subtree must avoid), and the current stopwatch values.
struct SearchState {
  OneType type = 0;
  PhiDeclaration obligations;
  std::vector<int> ranks; // per transitive symbol
  bool operator<(const SearchState& o) const {
    if (type != o.type) return type < o.type;
    if (ranks != o.ranks) return ranks < o.ranks;
    return obligations.triples < o.obligations.triples;
  }
  bool operator==(const SearchState& o) const {
    return type == o.type && ranks == o.ranks && obligations == o.obligations;
  }
};

struct DecideConfig {
  enum class Mode { Exact, Bounded };
  Mode mode = Mode::Bounded;
  long long familyBudget = 2000000; // option/merge/delegation work per state
  long long stateBudget = 2000000;  // reachable states explored
  int rankCap = 100000;             // widest rank vector handled exactly
  int oracleMaxN = 4;               // used by callers for cross-checks
  int sanityDepth = 3;              // unfolding depth re-checked on certificates
};

// A regular tree of good states; vertex v realizes state[v] and its family
// template witnesses every conjunct.
struct Certificate {
  PeriodicTree pt;
  std::vector<SearchState> states;
};

struct DecideResult {
  enum class Status { Sat, Unsat, Unknown };
  Status status = Status::Unknown;
  std::optional<Certificate> cert;
  std::string reason;
};

// A family candidate: the closed structure on {node} + children (element 0 is
// the node) together with the children's states.
struct FamilyOption {
  FiniteStructure family;
  std::vector<SearchState> children;
};

struct ExpandStats {
  bool rankCapped = false;  // a child was rejected with a cap below the true bound
  bool budgetHit = false;   // enumeration truncated
};

std::vector<SearchState> root_states(const NormalForm& nf, const TypeUniverse& tu,
                                     const TripleSpace& space);

// All families the state can head: witness-directed enumeration, local
// consistency with minimally propagated child obligations, stopwatch updates
// against maxRank. Deterministic order.
std::vector<FamilyOption> expand_state(const SearchState& st, const NormalForm& nf,
                                       const TypeUniverse& tu, const TripleSpace& space,
                                       int maxRank, const DecideConfig& cfg, ExpandStats& stats);

// AND-OR solve on the forward-reachable state graph: a state is good iff some
// family has all children good (greatest fixpoint); bad is the dual least
// fixpoint over fully expanded states. Frontier states count as neither.
struct SolveOutcome {
  bool rootGood = false;
  bool exhausted = false; // the whole reachable graph was expanded
  ExpandStats stats;
  std::vector<SearchState> goodStates;
  // representative family per good state, aligned with goodStates
  std::vector<FamilyOption> chosen;
  int goodRoot = -1; // index into goodStates
};

SolveOutcome solve_andor(const std::vector<SearchState>& roots,
                         const std::function<std::vector<FamilyOption>(const SearchState&,
                                                                       ExpandStats&)>& expander,
                         const DecideConfig& cfg);

Certificate extract_certificate(const SolveOutcome& out);

// Independent re-validation: periodic-tree shape, witness completeness, the
// local consistency conditions with the stored obligations, stopwatch rules,
// root obligation seeding, and a model check of the forbidden patterns on
// bounded unfoldings.
CheckReport verify_certificate(const Certificate& cert, const NormalForm& nf,
                               const TypeUniverse& tu, const TripleSpace& space, int maxRank,
                               int sanityDepth);

DecideResult decide_fin_sat(const FPtr& f, const Signature& sig, const DecideConfig& cfg = {});

} // namespace unfo
