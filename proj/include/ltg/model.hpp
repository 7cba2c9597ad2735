#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ltg/rational.hpp"

namespace ltg {

enum class PlayerState : std::uint8_t { Active, Sleep, DeadIn, DeadOut, DeadBoth };
inline constexpr std::size_t kPlayerStateCount = 5;

std::string_view to_string(PlayerState q);
PlayerState parse_player_state(std::string_view name);

/// One PlayerState per player.
using JointState = std::vector<PlayerState>;

/// A control point is a vector of unitless coordinates; each player owns a finite list.
using ControlPoint = std::vector<double>;
using ControlGrid = std::vector<std::vector<ControlPoint>>;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mixed-radix indexing of joint states, player 0 most significant.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<std::vector<PlayerState>> allowed);

  std::size_t size() const { return size_; }
  std::size_t players() const { return allowed_.size(); }
  const std::vector<PlayerState>& allowed(std::size_t player) const { return allowed_[player]; }

  std::size_t encode(const JointState& s) const;
  JointState decode(std::size_t index) const;
  PlayerState player_state(std::size_t index, std::size_t player) const;
  std::optional<std::size_t> local_index(std::size_t player, PlayerState q) const;
  /// Index of the joint state with `player` moved to `q` (q must be allowed).
  std::size_t with_player(std::size_t index, std::size_t player, PlayerState q) const;

 private:
  std::vector<std::vector<PlayerState>> allowed_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

/// Mixed-radix indexing of control profiles (one control index per player).
class ProfileSpace {
 public:
  ProfileSpace() = default;
  explicit ProfileSpace(std::vector<std::size_t> counts);

  std::size_t size() const { return size_; }
  std::size_t players() const { return counts_.size(); }
  std::size_t count(std::size_t player) const { return counts_[player]; }
  std::size_t encode(std::span<const std::size_t> controls) const;
  std::vector<std::size_t> decode(std::size_t profile) const;
  std::size_t control(std::size_t profile, std::size_t player) const {
    return (profile / stride_[player]) % counts_[player];
  }
  std::size_t with_control(std::size_t profile, std::size_t player, std::size_t c) const {
    return profile - control(profile, player) * stride_[player] + c * stride_[player];
  }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

enum class EdgeKind : std::uint8_t { ContinuousFlow, DiscreteTransport };
std::string_view to_string(EdgeKind kind);
EdgeKind parse_edge_kind(std::string_view name);

struct EdgeSpec {
  std::size_t src = 0;
  std::size_t dst = 0;
  EdgeKind kind = EdgeKind::ContinuousFlow;
  Rational latency = 0;  // time units; read only for DiscreteTransport
  Rational weight = 1;   // benefit per unit time paid to both endpoints when admissible
  int send_coord = -1;   // coordinate of src's control points that means "send"

  bool operator==(const EdgeSpec&) const = default;
};

struct RateKey {
  std::size_t state = 0;
  std::size_t player = 0;
  PlayerState target = PlayerState::Active;
  std::size_t control = 0;
  auto operator<=>(const RateKey&) const = default;
};

struct RateTable {
  std::map<RateKey, Rational> entries;  // absent entries are 0
  Rational lambda_max = 0;

  Rational rate(std::size_t state, std::size_t player, PlayerState target, std::size_t control) const;
  bool operator==(const RateTable&) const = default;
};

struct BenefitKey {
  std::size_t state = 0;
  std::size_t profile = 0;
  std::size_t player = 0;
  auto operator<=>(const BenefitKey&) const = default;
};

using SwitchCostMatrix = std::array<std::array<Rational, kPlayerStateCount>, kPlayerStateCount>;

struct PayoffSpec {
  // Stored before edge admissibility; edge contributions are added by benefit_rate.
  std::map<BenefitKey, Rational> benefit;
  std::vector<std::vector<Rational>> control_cost;  // [player][control]
  std::vector<SwitchCostMatrix> switch_cost;        // [player][from][to]
  std::vector<Rational> terminal;                   // [state * n + player]

  bool operator==(const PayoffSpec&) const = default;
};

/// Stage-indexed transfers t_i(k, s, u). A table with one stage is time-invariant.
class TransferTable {
 public:
  TransferTable() = default;
  TransferTable(std::size_t stages, std::size_t states, std::size_t profiles, std::size_t players);

  std::size_t stages() const { return stages_; }
  std::size_t states() const { return states_; }
  std::size_t profiles() const { return profiles_; }
  std::size_t players() const { return players_; }

  double at(std::size_t stage, std::size_t state, std::size_t profile, std::size_t player) const {
    return values_[index(stage, state, profile, player)];
  }
  void set(std::size_t stage, std::size_t state, std::size_t profile, std::size_t player, double value);
  /// Cached max |t|.
  double norm() const { return norm_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const TransferTable&) const = default;

 private:
  std::size_t index(std::size_t stage, std::size_t state, std::size_t profile, std::size_t player) const {
    std::size_t k = stages_ == 1 ? 0 : stage;
    return ((k * states_ + state) * profiles_ + profile) * players_ + player;
  }

  std::size_t stages_ = 0;
  std::size_t states_ = 0;
  std::size_t profiles_ = 0;
  std::size_t players_ = 0;
  std::vector<double> values_;
  double norm_ = 0.0;
};

struct GameSpec {
  std::size_t n = 0;
  std::vector<std::vector<PlayerState>> allowed_states;
  ControlGrid controls;
  // Coordinates designated as "send" switches, per player (added by transport retyping).
  std::vector<std::vector<std::size_t>> send_coords;
  RateTable rates;
  PayoffSpec payoffs;
  std::vector<EdgeSpec> edges;
  Rational horizon = 0;
  JointState initial_state;
  std::optional<TransferTable> transfers;

  // Total exit rate per (state, profile); filled by validate_game.
  std::vector<Rational> exit_rates;

  StateSpace state_space() const { return StateSpace(allowed_states); }
  ProfileSpace profile_space() const;
  bool validated() const { return !exit_rates.empty(); }
  const Rational& exit_rate(std::size_t state, std::size_t profile) const;

  bool operator==(const GameSpec&) const = default;
};

/// Checks every table invariant and caches the total exit rate for each (state, profile).
/// Throws ValidationError naming the first violated invariant and its index.
GameSpec validate_game(GameSpec spec);

/// A blank game: every table sized and zero, no edges.
GameSpec make_empty_game(std::vector<std::vector<PlayerState>> allowed, ControlGrid controls,
                         Rational horizon);

/// True when the edge needs an in-flight token in the augmented state (transport with
/// positive latency). Zero-latency transport delivers within the stage it is sent.
bool edge_needs_token(const EdgeSpec& edge);

bool sends(const GameSpec& spec, const EdgeSpec& edge, std::size_t src_control);

/// Per-player benefit b_i(s, u): stored benefit plus every admissible edge's weight.
/// `token_counters` holds one counter per edge (1 means delivering this stage); it may be
/// empty only when no edge needs a token.
std::vector<Rational> benefit_rate(const GameSpec& spec, std::size_t state, std::size_t profile,
                                   std::span<const std::uint32_t> token_counters = {});
std::vector<Rational> benefit_rate(const GameSpec& spec, const JointState& s,
                                   std::span<const std::size_t> controls,
                                   std::span<const std::uint32_t> token_counters = {});

/// Lowest control index with zero exit rate in every state and zero control cost.
std::optional<std::size_t> null_control(const GameSpec& spec, std::size_t player);

}  // namespace ltg
