#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ltg/solve.hpp"

namespace ltg {

struct StructuralEdit {
  enum class Kind { DeleteEdge, AddEdge, RetypeEdge };
  Kind kind = Kind::DeleteEdge;
  std::size_t index = 0;                        // DeleteEdge, RetypeEdge
  EdgeSpec edge;                                // AddEdge
  EdgeKind new_kind = EdgeKind::ContinuousFlow; // RetypeEdge
  Rational latency = 0;                         // RetypeEdge

  static StructuralEdit remove(std::size_t index) { return {Kind::DeleteEdge, index, {}, {}, 0}; }
  static StructuralEdit add(EdgeSpec edge) { return {Kind::AddEdge, 0, std::move(edge), {}, 0}; }
  static StructuralEdit retype(std::size_t index, EdgeKind kind, Rational latency) {
    return {Kind::RetypeEdge, index, {}, kind, std::move(latency)};
  }
  bool operator==(const StructuralEdit&) const = default;
};

std::string_view to_string(StructuralEdit::Kind kind);

/// Public signal kernel; stored and validated, never consumed by the solvers.
struct SignalKernel {
  std::vector<std::string> labels;
  std::size_t stages = 1;      // 1 means time-invariant
  std::size_t states = 0;
  std::vector<double> probs;   // [(k * states + s) * labels.size() + z]

  bool operator==(const SignalKernel&) const = default;
};

/// Throws ValidationError unless every row is a probability vector (sum within 1e-12).
void validate_signal(const SignalKernel& kernel);

struct Intervention {
  std::optional<TransferTable> transfers;  // dimensioned to the game after the edits
  std::vector<StructuralEdit> edits;
  std::optional<SignalKernel> signal;
};

/// Adds the table to any transfers already present. Dynamics are untouched.
GameSpec apply_transfers(const GameSpec& spec, const TransferTable& transfers);

/// Applies the edits in order and returns the canonical form. Retyping an edge to
/// DiscreteTransport doubles its source's control grid with a trailing send coordinate:
/// point c becomes (c, 0) at index 2c and (c, 1) at index 2c + 1. Retyping to the current kind
/// is the identity and appends a note to `warnings` when given.
GameSpec apply_structural(const GameSpec& spec, const std::vector<StructuralEdit>& edits,
                          std::vector<std::string>* warnings = nullptr);

/// Drops trailing send coordinates that no transport edge references, provided the grid still
/// has the doubled shape with identical tables on each (c, 0), (c, 1) pair.
GameSpec canonicalize(const GameSpec& spec);

GameSpec induced_game(const GameSpec& spec, const Intervention& intervention,
                      std::vector<std::string>* warnings = nullptr);

template <class S>
bool breaks_inertia(const UniformizedGame<S>& induced, const PolicyProfile& sq, double tol,
                    GainScope scope = GainScope::all());

template <class S>
bool implements(const UniformizedGame<S>& induced, const PolicyProfile& target, const PolicyProfile& sq, double tol,
                GainScope scope = GainScope::all());

/// Maps a profile of `from` into `to`, where `to` differs by transport retyping: token counters
/// are ignored and every send coordinate is 1 exactly when its owner is Active.
template <class S>
PolicyProfile embed_profile(const UniformizedGame<S>& from, const UniformizedGame<S>& to, const PolicyProfile& profile);

struct DominanceFamily {
  GameSpec continuous;
  GameSpec discrete;
  StructuralEdit retype;
  Rational switch_rate;
  Rational kappa;
};

/// Two players with states {Active, Sleep} and controls {stay, switch}; switching moves the
/// player to its other state at rate gamma / 4. Joint activity pays 1 per unit time to each
/// player through a single edge 0 -> 1. Activation costs B + 1, deactivation is free.
DominanceFamily dominance_family(const Rational& B, const Rational& T, const Rational& gamma,
                                 const Rational& latency = 0);

/// Stay everywhere; in the transport variant the source also sends whenever it is Active.
template <class S>
PolicyProfile status_quo(const UniformizedGame<S>& ug);

struct OutcomeSignature {
  JointState terminal;  // modal base state at the horizon, lowest index on ties
  long long welfare_nano = 0;  // total time-0 value in units of 1e-9

  auto operator<=>(const OutcomeSignature&) const = default;
};

OutcomeSignature outcome_signature(const UniformizedGame<double>& ug, const PolicyProfile& profile);

/// Signatures of the stationary pure MPEs of the game.
std::set<OutcomeSignature> implementable_set(const UniformizedGame<double>& ug, double tol,
                                             std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace ltg
