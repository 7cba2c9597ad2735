#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ltg/uniformize.hpp"

namespace ltg {

/// Control choice of one player at every (stage, augmented state).
struct PlayerPolicy {
  bool stationary = true;
  std::vector<std::uint32_t> controls;  // [x] when stationary, else [k * states + x]

  bool operator==(const PlayerPolicy&) const = default;
};

struct PolicyProfile {
  std::size_t stages = 0;
  std::size_t states = 0;
  std::vector<PlayerPolicy> players;

  bool stationary() const;
  std::size_t control(std::size_t player, std::size_t k, std::size_t x) const {
    const PlayerPolicy& p = players[player];
    return p.controls[p.stationary ? x : k * states + x];
  }
  std::size_t profile_index(const ProfileSpace& space, std::size_t k, std::size_t x) const;

  bool operator==(const PolicyProfile&) const = default;
};

PlayerPolicy constant_policy(std::size_t states, std::size_t control);

/// Every player plays a fixed control index everywhere.
template <class S>
PolicyProfile constant_profile(const UniformizedGame<S>& ug, const std::vector<std::size_t>& controls);

/// Throws std::invalid_argument on any dimension mismatch or out-of-grid control.
template <class S>
void check_profile(const UniformizedGame<S>& ug, const PolicyProfile& profile);

/// V_i(k, x) for k = 0..N; values[i][k * states + x].
template <class S>
struct ValueTable {
  std::size_t stages = 0;
  std::size_t states = 0;
  std::vector<std::vector<S>> values;

  const S& at(std::size_t i, std::size_t k, std::size_t x) const { return values[i][k * states + x]; }
};

/// Expected stage payoff plus continuation for player i playing profile a at (k, x).
/// `next` is player i's value row at stage k + 1. Every solver sums through this function.
template <class S>
S q_value(const UniformizedGame<S>& ug, std::size_t k, std::size_t x, std::size_t a, std::size_t i,
          const S* next);

template <class S>
ValueTable<S> joint_value(const UniformizedGame<S>& ug, const PolicyProfile& profile);

template <class S>
struct BestResponse {
  PlayerPolicy policy;    // nonstationary
  std::vector<S> value;   // [k * states + x], k = 0..N
};

/// Optimal Markov deviation of player i against the others' policies. The value is the exact
/// maximum; the policy picks the lowest maximizing control index.
template <class S>
BestResponse<S> best_response(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t i);

/// Deviation gains are measured at every state, or only on states reachable under the profile
/// from a fixed evaluation point.
struct GainScope {
  bool from_point = false;
  std::size_t stage = 0;
  std::size_t state = 0;

  static GainScope all() { return {}; }
  static GainScope at(std::size_t k, std::size_t x) { return {true, k, x}; }
};

template <class S>
struct EquilibriumReport {
  std::vector<S> gain;                 // per player, max over the scope
  std::vector<std::size_t> gain_stage; // where the maximum was first attained
  std::vector<std::size_t> gain_state;
  bool is_mpe = true;
  double tol = 0;
  std::optional<std::size_t> witness_player;
  std::optional<PlayerPolicy> witness;  // best response of witness_player
};

template <class S>
EquilibriumReport<S> verify_mpe(const UniformizedGame<S>& ug, const PolicyProfile& profile, double tol,
                                GainScope scope = GainScope::all());

/// (k, x) pairs with positive probability under the profile from (k0, x0); reach[k * states + x].
template <class S>
std::vector<bool> reachable(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t k0,
                            std::size_t x0);

struct PlannerOptions {
  std::vector<bool> counted;                        // empty: every player counts
  std::vector<std::optional<PlayerPolicy>> fixed;   // empty or per player
};

template <class S>
struct SocialOptimum {
  PolicyProfile policy;   // nonstationary
  std::vector<S> welfare; // [k * states + x]
};

template <class S>
SocialOptimum<S> social_optimum(const UniformizedGame<S>& ug, const PlannerOptions& options = {});

template <class S>
struct MpeCandidate {
  std::uint64_t code = 0;  // mixed-radix encoding: player 0 and state 0 most significant
  PolicyProfile profile;
  EquilibriumReport<S> report;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

/// Number of stationary pure profiles; throws std::length_error when above `cap`.
template <class S>
std::uint64_t stationary_count(const UniformizedGame<S>& ug, std::uint64_t cap = kDefaultEnumerationCap);

template <class S>
PolicyProfile decode_stationary(const UniformizedGame<S>& ug, std::uint64_t code);

/// Stationary pure MPEs (full Markov deviations), sorted by code.
template <class S>
std::vector<MpeCandidate<S>> enumerate_mpe(const UniformizedGame<S>& ug, double tol,
                                           std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace ltg
