#include "ltg/model.hpp"

#include <algorithm>
#include <set>

namespace ltg {

namespace {

constexpr std::array<std::string_view, kPlayerStateCount> kStateNames = {
    "Active", "Sleep", "DeadIn", "DeadOut", "DeadBoth"};

std::size_t state_ordinal(PlayerState q) { return static_cast<std::size_t>(q); }

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

}  // namespace

std::string_view to_string(PlayerState q) { return kStateNames[state_ordinal(q)]; }

PlayerState parse_player_state(std::string_view name) {
  for (std::size_t i = 0; i < kStateNames.size(); ++i)
    if (kStateNames[i] == name) return static_cast<PlayerState>(i);
  if (name == "A") return PlayerState::Active;
  if (name == "S") return PlayerState::Sleep;
  throw std::invalid_argument("unknown player state '" + std::string(name) + "'");
}

std::string_view to_string(EdgeKind kind) {
  return kind == EdgeKind::ContinuousFlow ? "ContinuousFlow" : "DiscreteTransport";
}

EdgeKind parse_edge_kind(std::string_view name) {
  if (name == "ContinuousFlow") return EdgeKind::ContinuousFlow;
  if (name == "DiscreteTransport") return EdgeKind::DiscreteTransport;
  throw std::invalid_argument("unknown edge kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// StateSpace / ProfileSpace

StateSpace::StateSpace(std::vector<std::vector<PlayerState>> allowed) : allowed_(std::move(allowed)) {
  stride_.assign(allowed_.size(), 1);
  size_ = 1;
  for (std::size_t i = allowed_.size(); i-- > 0;) {
    stride_[i] = size_;
    size_ *= allowed_[i].size();
  }
}

std::size_t StateSpace::encode(const JointState& s) const {
  if (s.size() != allowed_.size())
    throw std::invalid_argument("joint state has " + std::to_string(s.size()) + " entries, expected " +
                                std::to_string(allowed_.size()));
  std::size_t index = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto local = local_index(i, s[i]);
    if (!local)
      throw std::invalid_argument("state " + std::string(to_string(s[i])) + " not allowed for player " +
                                  std::to_string(i));
    index += *local * stride_[i];
  }
  return index;
}

JointState StateSpace::decode(std::size_t index) const {
  JointState s(allowed_.size());
  for (std::size_t i = 0; i < allowed_.size(); ++i) s[i] = player_state(index, i);
  return s;
}

PlayerState StateSpace::player_state(std::size_t index, std::size_t player) const {
  return allowed_[player][(index / stride_[player]) % allowed_[player].size()];
}

std::optional<std::size_t> StateSpace::local_index(std::size_t player, PlayerState q) const {
  const auto& list = allowed_[player];
  auto it = std::find(list.begin(), list.end(), q);
  if (it == list.end()) return std::nullopt;
  return static_cast<std::size_t>(it - list.begin());
}

std::size_t StateSpace::with_player(std::size_t index, std::size_t player, PlayerState q) const {
  std::size_t current = (index / stride_[player]) % allowed_[player].size();
  return index - current * stride_[player] + *local_index(player, q) * stride_[player];
}

ProfileSpace::ProfileSpace(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
  stride_.assign(counts_.size(), 1);
  size_ = 1;
  for (std::size_t i = counts_.size(); i-- > 0;) {
    stride_[i] = size_;
    size_ *= counts_[i];
  }
}

std::size_t ProfileSpace::encode(std::span<const std::size_t> controls) const {
  if (controls.size() != counts_.size()) throw std::invalid_argument("control profile has wrong length");
  std::size_t index = 0;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    if (controls[i] >= counts_[i])
      throw std::invalid_argument("control index " + std::to_string(controls[i]) + " out of range for player " +
                                  std::to_string(i));
    index += controls[i] * stride_[i];
  }
  return index;
}

std::vector<std::size_t> ProfileSpace::decode(std::size_t profile) const {
  std::vector<std::size_t> out(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = control(profile, i);
  return out;
}

// ---------------------------------------------------------------------------
// Tables

Rational RateTable::rate(std::size_t state, std::size_t player, PlayerState target, std::size_t control) const {
  auto it = entries.find(RateKey{state, player, target, control});
  return it == entries.end() ? Rational(0) : it->second;
}

TransferTable::TransferTable(std::size_t stages, std::size_t states, std::size_t profiles, std::size_t players)
    : stages_(stages), states_(states), profiles_(profiles), players_(players),
      values_(stages * states * profiles * players, 0.0) {
  if (stages == 0) throw std::invalid_argument("transfer table needs at least one stage");
}

void TransferTable::set(std::size_t stage, std::size_t state, std::size_t profile, std::size_t player,
                        double value) {
  double& slot = values_[index(stage, state, profile, player)];
  bool was_max = std::abs(slot) == norm_;
  slot = value;
  if (std::abs(value) >= norm_) {
    norm_ = std::abs(value);
  } else if (was_max) {
    norm_ = 0.0;
    for (double v : values_) norm_ = std::max(norm_, std::abs(v));
  }
}

ProfileSpace GameSpec::profile_space() const {
  std::vector<std::size_t> counts;
  counts.reserve(controls.size());
  for (const auto& grid : controls) counts.push_back(grid.size());
  return ProfileSpace(std::move(counts));
}

const Rational& GameSpec::exit_rate(std::size_t state, std::size_t profile) const {
  if (!validated()) throw std::logic_error("game has not been validated");
  return exit_rates[state * profile_space().size() + profile];
}

bool edge_needs_token(const EdgeSpec& edge) {
  return edge.kind == EdgeKind::DiscreteTransport && edge.latency > 0;
}

bool sends(const GameSpec& spec, const EdgeSpec& edge, std::size_t src_control) {
  if (edge.send_coord < 0) return false;
  return spec.controls[edge.src][src_control][static_cast<std::size_t>(edge.send_coord)] > 0.5;
}

// ---------------------------------------------------------------------------
// Validation

GameSpec make_empty_game(std::vector<std::vector<PlayerState>> allowed, ControlGrid controls, Rational horizon) {
  GameSpec spec;
  spec.n = allowed.size();
  spec.allowed_states = std::move(allowed);
  spec.controls = std::move(controls);
  spec.send_coords.assign(spec.n, {});
  spec.horizon = std::move(horizon);
  StateSpace states = spec.state_space();
  spec.payoffs.control_cost.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) spec.payoffs.control_cost[i].assign(spec.controls[i].size(), 0);
  spec.payoffs.switch_cost.assign(spec.n, SwitchCostMatrix{});
  spec.payoffs.terminal.assign(states.size() * spec.n, 0);
  spec.initial_state.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i)
    spec.initial_state[i] = spec.allowed_states[i].empty() ? PlayerState::Sleep : spec.allowed_states[i].front();
  return spec;
}

GameSpec validate_game(GameSpec spec) {
  const std::size_t n = spec.n;
  if (n == 0) fail("game needs at least one player");
  if (spec.allowed_states.size() != n) fail("ragged table: allowed_states has wrong player count");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& list = spec.allowed_states[i];
    if (list.empty()) fail("empty allowed state set for player " + std::to_string(i));
    std::set<PlayerState> seen(list.begin(), list.end());
    if (seen.size() != list.size()) fail("duplicate allowed state for player " + std::to_string(i));
  }
  if (spec.controls.size() != n) fail("ragged table: control grid has wrong player count");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& grid = spec.controls[i];
    if (grid.empty()) fail("empty control grid for player " + std::to_string(i));
    for (std::size_t c = 0; c < grid.size(); ++c) {
      if (grid[c].size() != grid.front().size())
        fail("ragged table: control point " + std::to_string(c) + " of player " + std::to_string(i) +
             " has a different dimension");
      for (std::size_t d = 0; d < c; ++d)
        if (grid[d] == grid[c])
          fail("duplicate control point " + std::to_string(c) + " for player " + std::to_string(i));
    }
  }
  if (spec.send_coords.empty()) spec.send_coords.assign(n, {});
  if (spec.send_coords.size() != n) fail("ragged table: send_coords has wrong player count");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t coord : spec.send_coords[i])
      if (coord >= spec.controls[i].front().size())
        fail("send coordinate " + std::to_string(coord) + " out of range for player " + std::to_string(i));

  StateSpace states = spec.state_space();
  ProfileSpace profiles = spec.profile_space();

  // Rates.
  if (spec.rates.lambda_max < 0) fail("negative lambda_max");
  for (const auto& [key, value] : spec.rates.entries) {
    if (key.state >= states.size()) fail("rate entry state index " + std::to_string(key.state) + " out of range");
    if (key.player >= n) fail("rate entry player index " + std::to_string(key.player) + " out of range");
    if (key.control >= spec.controls[key.player].size())
      fail("rate entry control index " + std::to_string(key.control) + " out of range for player " +
           std::to_string(key.player));
    if (!states.local_index(key.player, key.target))
      fail("rate entry target " + std::string(to_string(key.target)) + " not allowed for player " +
           std::to_string(key.player));
    if (value < 0)
      fail("negative rate at state " + std::to_string(key.state) + ", player " + std::to_string(key.player) +
           ", control " + std::to_string(key.control));
    if (value != 0 && states.player_state(key.state, key.player) == key.target)
      fail("nonzero rate to the current state at state " + std::to_string(key.state) + ", player " +
           std::to_string(key.player));
  }

  // Payoffs.
  auto& pay = spec.payoffs;
  if (pay.control_cost.size() != n) fail("ragged table: control_cost has wrong player count");
  for (std::size_t i = 0; i < n; ++i) {
    if (pay.control_cost[i].size() != spec.controls[i].size())
      fail("ragged table: control_cost row " + std::to_string(i) + " does not match the control grid");
    for (std::size_t c = 0; c < pay.control_cost[i].size(); ++c)
      if (pay.control_cost[i][c] < 0)
        fail("negative control cost for player " + std::to_string(i) + ", control " + std::to_string(c));
  }
  if (pay.switch_cost.size() != n) fail("ragged table: switch_cost has wrong player count");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < kPlayerStateCount; ++a) {
      if (pay.switch_cost[i][a][a] != 0)
        fail("diagonal switching cost for player " + std::to_string(i) + " at " +
             std::string(to_string(static_cast<PlayerState>(a))));
      for (std::size_t b = 0; b < kPlayerStateCount; ++b)
        if (pay.switch_cost[i][a][b] < 0)
          fail("negative switching cost for player " + std::to_string(i) + " from " +
               std::string(to_string(static_cast<PlayerState>(a))) + " to " +
               std::string(to_string(static_cast<PlayerState>(b))));
    }
  if (pay.terminal.size() != states.size() * n) fail("ragged table: terminal payoff has wrong size");
  for (const auto& [key, value] : pay.benefit) {
    if (key.state >= states.size() || key.profile >= profiles.size() || key.player >= n)
      fail("benefit entry out of range (state " + std::to_string(key.state) + ", profile " +
           std::to_string(key.profile) + ", player " + std::to_string(key.player) + ")");
  }

  // Edges.
  for (std::size_t e = 0; e < spec.edges.size(); ++e) {
    const auto& edge = spec.edges[e];
    if (edge.src >= n || edge.dst >= n) fail("edge " + std::to_string(e) + " references an unknown player");
    if (edge.src == edge.dst) fail("edge " + std::to_string(e) + " is a self loop");
    if (edge.latency < 0) fail("edge " + std::to_string(e) + " has negative latency");
    if (edge.kind == EdgeKind::DiscreteTransport) {
      const auto& grid = spec.controls[edge.src];
      if (edge.send_coord < 0 || static_cast<std::size_t>(edge.send_coord) >= grid.front().size())
        fail("transport edge " + std::to_string(e) + " has no valid send coordinate");
    }
  }

  if (spec.horizon < 0) fail("negative horizon");
  if (spec.initial_state.size() != n) fail("ragged table: initial state has wrong player count");
  for (std::size_t i = 0; i < n; ++i)
    if (!states.local_index(i, spec.initial_state[i]))
      fail("initial state of player " + std::to_string(i) + " is not allowed");

  if (spec.transfers) {
    const auto& t = *spec.transfers;
    if (t.states() != states.size() || t.profiles() != profiles.size() || t.players() != n)
      fail("transfer table dimensions do not match the game");
  }

  // Exit-rate cache and bound.
  spec.exit_rates.assign(states.size() * profiles.size(), 0);
  std::vector<std::vector<Rational>> per_player(n);
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      per_player[i].assign(spec.controls[i].size(), 0);
      for (std::size_t c = 0; c < spec.controls[i].size(); ++c)
        for (PlayerState q : spec.allowed_states[i]) per_player[i][c] += spec.rates.rate(s, i, q, c);
    }
    for (std::size_t a = 0; a < profiles.size(); ++a) {
      Rational total = 0;
      for (std::size_t i = 0; i < n; ++i) total += per_player[i][profiles.control(a, i)];
      if (total > spec.rates.lambda_max)
        fail("rate bound exceeded at state " + std::to_string(s) + ", profile " + std::to_string(a) + ": " +
             to_string(total) + " > " + to_string(spec.rates.lambda_max));
      spec.exit_rates[s * profiles.size() + a] = total;
    }
  }
  // An empty cache means "not validated"; a game always has at least one (state, profile).
  return spec;
}

// ---------------------------------------------------------------------------
// Benefits

std::vector<Rational> benefit_rate(const GameSpec& spec, std::size_t state, std::size_t profile,
                                   std::span<const std::uint32_t> token_counters) {
  StateSpace states = spec.state_space();
  ProfileSpace profiles = spec.profile_space();
  if (state >= states.size() || profile >= profiles.size())
    throw std::invalid_argument("benefit_rate: state or profile out of range");
  if (!token_counters.empty() && token_counters.size() != spec.edges.size())
    throw std::invalid_argument("benefit_rate: token counters do not match the edge list");

  std::vector<Rational> out(spec.n, 0);
  auto lo = spec.payoffs.benefit.lower_bound(BenefitKey{state, profile, 0});
  for (auto it = lo; it != spec.payoffs.benefit.end() && it->first.state == state && it->first.profile == profile;
       ++it)
    out[it->first.player] += it->second;

  for (std::size_t e = 0; e < spec.edges.size(); ++e) {
    const auto& edge = spec.edges[e];
    if (edge.src >= spec.n || edge.dst >= spec.n)
      throw std::invalid_argument("benefit_rate: unknown edge endpoint on edge " + std::to_string(e));
    bool src_active = states.player_state(state, edge.src) == PlayerState::Active;
    bool dst_active = states.player_state(state, edge.dst) == PlayerState::Active;
    bool admissible = false;
    if (edge.kind == EdgeKind::ContinuousFlow) {
      admissible = src_active && dst_active;
    } else if (!edge_needs_token(edge)) {
      admissible = src_active && dst_active && sends(spec, edge, profiles.control(profile, edge.src));
    } else {
      if (token_counters.empty())
        throw std::invalid_argument("benefit_rate: edge " + std::to_string(e) +
                                    " needs an in-flight token flag but none was supplied");
      admissible = token_counters[e] == 1 && dst_active;
    }
    if (admissible) {
      out[edge.src] += edge.weight;
      out[edge.dst] += edge.weight;
    }
  }
  return out;
}

std::vector<Rational> benefit_rate(const GameSpec& spec, const JointState& s, std::span<const std::size_t> controls,
                                   std::span<const std::uint32_t> token_counters) {
  return benefit_rate(spec, spec.state_space().encode(s), spec.profile_space().encode(controls), token_counters);
}

std::optional<std::size_t> null_control(const GameSpec& spec, std::size_t player) {
  StateSpace states = spec.state_space();
  for (std::size_t c = 0; c < spec.controls[player].size(); ++c) {
    if (spec.payoffs.control_cost[player][c] != 0) continue;
    bool silent = true;
    for (std::size_t s = 0; s < states.size() && silent; ++s)
      for (PlayerState q : spec.allowed_states[player])
        if (spec.rates.rate(s, player, q, c) != 0) {
          silent = false;
          break;
        }
    if (silent) return c;
  }
  return std::nullopt;
}

}  // namespace ltg
