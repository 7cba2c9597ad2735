#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltg/lp.hpp"
#include "ltg/solve.hpp"

namespace ltg {

/// One payoff parameter replaced by a type. Applies to the owning player.
struct ParamOverride {
  enum class Kind { SwitchCost, ControlCost, EdgeWeight };
  Kind kind = Kind::SwitchCost;
  PlayerState from = PlayerState::Sleep;  // SwitchCost
  PlayerState to = PlayerState::Active;   // SwitchCost
  std::size_t index = 0;                  // control (ControlCost) or edge (EdgeWeight)
  Rational value = 0;

  bool operator==(const ParamOverride&) const = default;
};

struct PlayerType {
  std::string label;
  std::vector<ParamOverride> overrides;

  bool operator==(const PlayerType&) const = default;
};

struct TypeSpace {
  std::vector<std::vector<PlayerType>> types;  // [player][type]
  std::vector<std::vector<Rational>> prior;    // [player][type], each row sums to exactly 1

  std::size_t players() const { return types.size(); }
  std::size_t profile_count() const;
  std::vector<std::size_t> decode(std::size_t profile) const;  // player 0 most significant
  std::size_t encode(const std::vector<std::size_t>& profile) const;
  Rational probability(const std::vector<std::size_t>& profile) const;
};

/// Throws ValidationError on ragged tables, negative or non-normalized priors.
void validate_types(const TypeSpace& ts);

/// Base game with each player's type overrides substituted; the result is validated.
GameSpec game_with_types(const GameSpec& base, const TypeSpace& ts, const std::vector<std::size_t>& profile);

/// Once: a lump transfer at the start, keyed (report, 0, initial state); EPIC is audited there.
/// Continual: the lump payable when the mechanism is entered at (k, x); EPIC is audited at every
/// (k, x) reachable under the truthful allocation.
enum class ReportTiming { Once, Continual };

struct MechanismSpec {
  std::vector<std::vector<std::string>> messages;  // per player; defaults to type labels
  std::vector<PolicyProfile> allocation;           // per report profile code
  // per report profile code: (stage, augmented state) -> per-player transfer
  std::vector<std::map<std::pair<std::size_t, std::size_t>, std::vector<Rational>>> transfers;
  ReportTiming timing = ReportTiming::Once;

  /// Structural: allocation and transfers are keyed only by (reports, stage, current state).
  bool history_private() const { return true; }
  std::vector<Rational> transfer(std::size_t report, std::size_t k, std::size_t x, std::size_t players) const;
};

/// The two-player Active/Sleep activation game whose types set the Sleep -> Active cost:
/// `benefit` per unit time to each player while both are Active, switch rate `rate`.
struct BilateralPreset {
  GameSpec base;
  TypeSpace types;
  Rational gamma;
};

BilateralPreset bilateral_preset(const Rational& kappa_low, const Rational& kappa_high, const Rational& horizon = 1,
                                 const Rational& benefit = 1, const Rational& rate = 100, const Rational& gamma = 200);

enum class PivotMode { NullControl, FollowOptimum };

struct PivotResult {
  std::vector<std::size_t> reports;
  PolicyProfile allocation;                 // social optimum of the reported game
  std::vector<Rational> transfer;           // lump at (0, initial state)
  std::vector<Rational> welfare_others;     // sum_{j != i} J_j at the start
  std::vector<Rational> welfare_without;    // planner value over the others at the start
  Rational welfare = 0;                     // planner welfare at the start
  // Continuation pivot lump for every (k, x): [k * states + x][player].
  std::vector<std::vector<Rational>> continual;
};

/// T_i = sum_{j != i} J_j^{sigma*} - max over the others' Markov policies of their total, with i
/// frozen at its null control (or at sigma*_i in FollowOptimum mode).
PivotResult pivot_mechanism(const GameSpec& base, const TypeSpace& ts, const std::vector<std::size_t>& reports,
                            const Rational& gamma, PivotMode mode = PivotMode::NullControl);

/// Pivot allocation and continual transfers for every report profile.
MechanismSpec pivot_mechanism_spec(const GameSpec& base, const TypeSpace& ts, const Rational& gamma,
                                   PivotMode mode = PivotMode::NullControl);

struct EpicEntry {
  std::size_t player = 0;
  std::size_t truth = 0;      // true type profile code
  std::size_t misreport = 0;  // report profile code with only `player` changed
  std::size_t stage = 0;
  std::size_t state = 0;
  Rational difference = 0;    // truthful minus misreport payoff; EPIC needs >= 0
};

struct EpicReport {
  std::vector<EpicEntry> entries;  // worst entry for each (player, truth, misreport)
  Rational min_difference = 0;
  bool holds = true;
};

EpicReport check_epic(const GameSpec& base, const TypeSpace& ts, const MechanismSpec& mech, const Rational& gamma);

struct BudgetEntry {
  std::size_t report = 0;
  std::size_t stage = 0;
  std::size_t state = 0;
  Rational sum = 0;
};

struct BudgetReport {
  std::vector<BudgetEntry> entries;
  bool balanced = true;
  Rational max_deficit = 0;  // largest positive sum
};

BudgetReport check_budget(const MechanismSpec& mech, std::size_t players);

struct DeficitReport {
  std::vector<Rational> deficit;  // per report profile, sum_i T_i at the start
  Rational max_deficit = 0;
  Rational min_deficit = 0;
  Rational w_max = 0, w_min = 0;
  Rational bound = 0;             // n (w_max - w_min)
  bool within = false;            // 0 <= every deficit <= bound
};

DeficitReport pivot_deficit_bound(const GameSpec& base, const TypeSpace& ts, const Rational& gamma,
                                  PivotMode mode = PivotMode::NullControl);

struct TradeInstance {
  std::size_t profiles = 0;
  std::vector<std::vector<std::size_t>> profile_types;
  std::vector<Rational> social_benefit;  // 2 T w, joint activation over the horizon
  std::vector<Rational> cost_sum;        // kappa_1 + kappa_2
  std::vector<bool> efficient;           // social_benefit > cost_sum
  std::vector<bool> planner_activates;   // some player switches at (0, initial state)
  // payoff[i][truth][report] = J_i under true types of the reported profile's optimal allocation
  std::vector<std::vector<std::vector<Rational>>> payoff;
  std::vector<std::vector<Rational>> outside;  // [i][truth]: J_i when everyone plays null
  std::vector<std::vector<Rational>> occupancy;  // [report][base state], expected time in state
  std::vector<PolicyProfile> allocation;                      // per report profile
  TypeSpace types;
  std::size_t base_states = 0;
};

/// Requires two players on {Active, Sleep}, a single edge and types that set the Sleep -> Active cost.
TradeInstance ms_embedding(const GameSpec& base, const TypeSpace& ts, const Rational& gamma);

struct ImpossibilityOptions {
  bool interim_ir = true;
  bool state_keyed = false;  // transfers as flows keyed by (report, base state)
};

struct ImpossibilityResult {
  LinearSystem system;
  FeasibilityCertificate certificate;
  bool verified = false;
  ImpossibilityOptions options;
};

ImpossibilityResult impossibility_lp(const TradeInstance& instance, const ImpossibilityOptions& options = {});

/// Time-0 lump mechanism realizing a feasible LP point (flows become their expected totals).
MechanismSpec mechanism_from_solution(const TradeInstance& instance, const ImpossibilityResult& result,
                                      const GameSpec& base);

}  // namespace ltg
