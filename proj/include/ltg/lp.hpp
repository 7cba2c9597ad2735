#pragma once

#include <string>
#include <vector>

#include "ltg/rational.hpp"

namespace ltg {

enum class Sense { LessEq, Equal };

/// Rows a . y (<= or =) b over exact rationals.
struct LinearSystem {
  std::size_t vars = 0;
  std::vector<std::string> var_names;
  std::vector<std::vector<Rational>> rows;
  std::vector<Rational> rhs;
  std::vector<Sense> sense;
  std::vector<std::string> labels;

  std::size_t add_row(std::vector<Rational> coefficients, Sense s, Rational b, std::string label);
};

/// Inequality form of a system: each equality becomes the pair a.y <= b and -a.y <= -b,
/// labelled "<label> (<=)" and "<label> (>=)".
LinearSystem expand_equalities(const LinearSystem& system);

struct FeasibilityCertificate {
  bool feasible = false;
  std::vector<Rational> solution;     // feasible: satisfies every row exactly
  std::vector<Rational> multipliers;  // infeasible: one per row of expand_equalities(system), >= 0
};

/// Gaussian substitution of the equalities followed by Fourier-Motzkin elimination, tracking
/// every derived row as a combination of the original rows. A contradiction 0 <= b' < 0 is
/// scaled to the Farkas witness y >= 0, y^T A = 0, y^T b = -1. A feasible system is solved by
/// back-substitution, preferring 0 and otherwise the nearest bound for every variable.
FeasibilityCertificate solve_feasibility(const LinearSystem& system);

/// Exact re-check of either certificate kind.
bool verify_certificate(const LinearSystem& system, const FeasibilityCertificate& certificate);

}  // namespace ltg
