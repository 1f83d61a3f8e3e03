#pragma once

#include <optional>

#include "unfo/model.hpp"

namespace unfo {

struct OracleOutcome {
  std::optional<FiniteStructure> model; // present: FoundModel
  int size = 0;                         // model size, or the exhausted bound
  bool found() const { return model.has_value(); }
};

struct OracleConfig {
  long long budget = 400000000; // abstract step budget
};

// Exhaustive search over domain sizes 1..max_n. Deterministic; the first
// model in enumeration order is returned. Throws CapError on budget overrun.
OracleOutcome brute_force_sat(const NormalForm& nf, const Signature& sig, int max_n,
                              const OracleConfig& cfg = {});

std::optional<int> min_model_size(const NormalForm& nf, const Signature& sig, int max_n,
                                  const OracleConfig& cfg = {});

enum class DecideStatus { Sat, Unsat, Unknown };

// Flags UNSAT-vs-FoundModel contradictions always; SAT disagreements only
// when the caller reports its certificate failed verification.
CheckReport cross_check(const NormalForm& nf, const Signature& sig, DecideStatus status,
                        bool certificate_verified, int max_n, const OracleConfig& cfg = {});

} // namespace unfo
