#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ltg/intervene.hpp"

namespace ltg {

/// Deviation gain of player i at (k, x).
///
/// When some Markov deviation strictly improves on the profile (gain above tol) this is that
/// gain, best response value minus profile value. Otherwise it is the least loss per unit of
/// departure: for each control c other than the prescribed one, (Q_c - V) / m_c, where Q_c plays
/// c now and best-responds afterwards and m_c is the total-variation distance between the next-
/// state laws of c and the prescribed control. A control with m_c = 0 only changes the flow for
/// one stage and is scaled to the remaining horizon instead. Empty when i has a single control.
template <class S>
std::optional<S> deviation_gain(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t i,
                                std::size_t k, std::size_t x, double tol = 1e-9);

template <class S>
struct InertiaReport {
  std::vector<std::optional<S>> deviation;  // D_i
  S theta = S(0);                           // min_i -D_i
  std::size_t stage = 0;
  std::size_t state = 0;
  Rational remaining = 0;                   // T - t in effective time
  S survival_delta = S(0);                  // theta / (2 (T - t))
  S converse_delta = S(0);                  // theta / (T - t) + epsilon
  double epsilon = 0;
};

/// Throws std::invalid_argument when the profile is not an MPE from (k, x) or when no time remains.
/// A negative epsilon selects the default max(1e-3 * theta, 1e-6).
template <class S>
InertiaReport<S> inertia_depth(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t k,
                               std::size_t x, double tol = 1e-9, double epsilon = -1);

/// Time-invariant table paying -(theta / remaining + epsilon) to every player while the base
/// state is s_sq, whatever the controls.
TransferTable converse_transfer(const GameSpec& spec, double theta, double remaining, double epsilon,
                                const JointState& s_sq);

/// i.i.d. uniform entries on [-bound, bound] for every (stage, state, profile, player).
TransferTable random_transfers(const GameSpec& spec, std::size_t stages, double bound, std::uint64_t seed);

/// Constant `value` on s_sq (off_sq = false) or on every other state (off_sq = true), zero elsewhere.
TransferTable concentrated_transfers(const GameSpec& spec, double value, const JointState& s_sq, bool off_sq);

struct SurvivalResult {
  bool survives = false;         // MPE from the evaluation point in the induced game
  bool survives_everywhere = false;
  EquilibriumReport<double> report;
};

/// Induces the game with `transfers`, re-uniformizes at `gamma` and re-verifies the profile.
SurvivalResult test_survival(const GameSpec& spec, const Rational& gamma, const PolicyProfile& profile,
                             const TransferTable& transfers, double tol, GainScope scope);

}  // namespace ltg
