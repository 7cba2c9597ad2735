#include "ltg/intervene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ltg {

std::string_view to_string(StructuralEdit::Kind kind) {
  switch (kind) {
    case StructuralEdit::Kind::DeleteEdge:
      return "DeleteEdge";
    case StructuralEdit::Kind::AddEdge:
      return "AddEdge";
    case StructuralEdit::Kind::RetypeEdge:
      return "RetypeEdge";
  }
  return "?";
}

void validate_signal(const SignalKernel& kernel) {
  const std::size_t z = kernel.labels.size();
  if (z == 0) throw ValidationError("signal kernel has an empty signal space");
  if (kernel.stages == 0) throw ValidationError("signal kernel needs at least one stage");
  if (kernel.probs.size() != kernel.stages * kernel.states * z)
    throw ValidationError("ragged table: signal kernel has " + std::to_string(kernel.probs.size()) + " entries");
  for (std::size_t row = 0; row < kernel.stages * kernel.states; ++row) {
    double sum = 0;
    for (std::size_t j = 0; j < z; ++j) {
      double p = kernel.probs[row * z + j];
      if (p < 0) throw ValidationError("negative signal probability in row " + std::to_string(row));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("signal row " + std::to_string(row) + " does not sum to 1");
  }
}

GameSpec apply_transfers(const GameSpec& input, const TransferTable& transfers) {
  GameSpec spec = input.validated() ? input : validate_game(input);
  if (transfers.states() != spec.state_space().size() || transfers.profiles() != spec.profile_space().size() ||
      transfers.players() != spec.n)
    throw std::invalid_argument("transfer table dimensions do not match the game");
  if (!spec.transfers) {
    spec.transfers = transfers;
    return spec;
  }
  const TransferTable& old = *spec.transfers;
  if (old.stages() != transfers.stages() && old.stages() != 1 && transfers.stages() != 1)
    throw std::invalid_argument("transfer tables have incompatible stage counts");
  TransferTable sum(std::max(old.stages(), transfers.stages()), old.states(), old.profiles(), old.players());
  for (std::size_t k = 0; k < sum.stages(); ++k)
    for (std::size_t s = 0; s < sum.states(); ++s)
      for (std::size_t a = 0; a < sum.profiles(); ++a)
        for (std::size_t i = 0; i < sum.players(); ++i) sum.set(k, s, a, i, old.at(k, s, a, i) + transfers.at(k, s, a, i));
  spec.transfers = std::move(sum);
  return spec;
}

namespace {

// Rebuilds every control-indexed table of `player` for a new grid; new control d takes the
// tables of old control origin[d].
GameSpec remap_controls(const GameSpec& spec, std::size_t player, std::vector<ControlPoint> grid,
                        const std::vector<std::size_t>& origin) {
  GameSpec out = spec;
  out.exit_rates.clear();
  const ProfileSpace old_ps = spec.profile_space();
  out.controls[player] = std::move(grid);
  const ProfileSpace new_ps = out.profile_space();

  out.rates.entries.clear();
  for (const auto& [key, value] : spec.rates.entries) {
    if (key.player != player) {
      out.rates.entries[key] = value;
      continue;
    }
    for (std::size_t d = 0; d < origin.size(); ++d)
      if (origin[d] == key.control) out.rates.entries[RateKey{key.state, key.player, key.target, d}] = value;
  }

  std::vector<Rational> cost(origin.size());
  for (std::size_t d = 0; d < origin.size(); ++d) cost[d] = spec.payoffs.control_cost[player][origin[d]];
  out.payoffs.control_cost[player] = std::move(cost);

  // Old profile index of every new profile.
  std::vector<std::size_t> old_profile(new_ps.size());
  for (std::size_t a = 0; a < new_ps.size(); ++a) {
    std::size_t b = 0;
    for (std::size_t i = 0; i < new_ps.players(); ++i) {
      const std::size_t c = new_ps.control(a, i);
      b = old_ps.with_control(b, i, i == player ? origin[c] : c);
    }
    old_profile[a] = b;
  }

  out.payoffs.benefit.clear();
  std::map<std::size_t, std::vector<std::size_t>> images;  // old profile -> new profiles
  for (std::size_t a = 0; a < new_ps.size(); ++a) images[old_profile[a]].push_back(a);
  for (const auto& [key, value] : spec.payoffs.benefit) {
    auto it = images.find(key.profile);
    if (it == images.end()) continue;
    for (std::size_t a : it->second) out.payoffs.benefit[BenefitKey{key.state, a, key.player}] = value;
  }

  if (spec.transfers) {
    const TransferTable& t = *spec.transfers;
    TransferTable fresh(t.stages(), t.states(), new_ps.size(), t.players());
    for (std::size_t k = 0; k < t.stages(); ++k)
      for (std::size_t s = 0; s < t.states(); ++s)
        for (std::size_t a = 0; a < new_ps.size(); ++a)
          for (std::size_t i = 0; i < t.players(); ++i) fresh.set(k, s, a, i, t.at(k, s, old_profile[a], i));
    out.transfers = std::move(fresh);
  }
  return out;
}

// Appends a send coordinate to `player`'s grid and returns its index.
std::size_t add_send_coordinate(GameSpec& spec, std::size_t player) {
  const auto& grid = spec.controls[player];
  const std::size_t coord = grid.front().size();
  std::vector<ControlPoint> doubled;
  std::vector<std::size_t> origin;
  for (std::size_t c = 0; c < grid.size(); ++c)
    for (double v : {0.0, 1.0}) {
      ControlPoint p = grid[c];
      p.push_back(v);
      doubled.push_back(std::move(p));
      origin.push_back(c);
    }
  spec = remap_controls(spec, player, std::move(doubled), origin);
  spec.send_coords[player].push_back(coord);
  return coord;
}

bool coordinate_referenced(const GameSpec& spec, std::size_t player, std::size_t coord) {
  return std::any_of(spec.edges.begin(), spec.edges.end(), [&](const EdgeSpec& e) {
    return e.kind == EdgeKind::DiscreteTransport && e.src == player && e.send_coord == static_cast<int>(coord);
  });
}

// True when controls 2c and 2c + 1 differ only in the trailing coordinate (0 then 1) and every
// table treats them identically.
bool collapsible(const GameSpec& spec, std::size_t player) {
  const auto& grid = spec.controls[player];
  if (grid.size() % 2 != 0) return false;
  const std::size_t last = grid.front().size() - 1;
  for (std::size_t c = 0; c < grid.size(); c += 2) {
    ControlPoint lo = grid[c], hi = grid[c + 1];
    if (lo[last] != 0.0 || hi[last] != 1.0) return false;
    lo.pop_back();
    hi.pop_back();
    if (lo != hi) return false;
    if (spec.payoffs.control_cost[player][c] != spec.payoffs.control_cost[player][c + 1]) return false;
  }
  const StateSpace ss = spec.state_space();
  for (std::size_t s = 0; s < ss.size(); ++s)
    for (PlayerState q : spec.allowed_states[player])
      for (std::size_t c = 0; c < grid.size(); c += 2)
        if (spec.rates.rate(s, player, q, c) != spec.rates.rate(s, player, q, c + 1)) return false;
  const ProfileSpace ps = spec.profile_space();
  for (std::size_t a = 0; a < ps.size(); ++a) {
    const std::size_t c = ps.control(a, player);
    if (c % 2 != 0) continue;
    const std::size_t partner = ps.with_control(a, player, c + 1);
    for (std::size_t s = 0; s < ss.size(); ++s)
      for (std::size_t i = 0; i < spec.n; ++i) {
        auto get = [&](std::size_t prof) {
          auto it = spec.payoffs.benefit.find(BenefitKey{s, prof, i});
          return it == spec.payoffs.benefit.end() ? Rational(0) : it->second;
        };
        if (get(a) != get(partner)) return false;
        if (spec.transfers)
          for (std::size_t k = 0; k < spec.transfers->stages(); ++k)
            if (spec.transfers->at(k, s, a, i) != spec.transfers->at(k, s, partner, i)) return false;
      }
  }
  return true;
}

}  // namespace

GameSpec canonicalize(const GameSpec& input) {
  GameSpec spec = input;
  if (spec.send_coords.empty()) spec.send_coords.assign(spec.n, {});
  for (std::size_t i = 0; i < spec.n; ++i) {
    while (!spec.send_coords[i].empty()) {
      const std::size_t coord = spec.send_coords[i].back();
      if (coord + 1 != spec.controls[i].front().size() || coordinate_referenced(spec, i, coord) ||
          !collapsible(spec, i))
        break;
      std::vector<ControlPoint> grid;
      std::vector<std::size_t> origin;
      for (std::size_t c = 0; c < spec.controls[i].size(); c += 2) {
        ControlPoint p = spec.controls[i][c];
        p.pop_back();
        grid.push_back(std::move(p));
        origin.push_back(c);
      }
      spec = remap_controls(spec, i, std::move(grid), origin);
      spec.send_coords[i].pop_back();
    }
  }
  return validate_game(std::move(spec));
}

GameSpec apply_structural(const GameSpec& input, const std::vector<StructuralEdit>& edits,
                          std::vector<std::string>* warnings) {
  GameSpec spec = input.validated() ? input : validate_game(input);
  for (std::size_t j = 0; j < edits.size(); ++j) {
    const StructuralEdit& edit = edits[j];
    const std::string where = "edit " + std::to_string(j) + " (" + std::string(to_string(edit.kind)) + ")";
    switch (edit.kind) {
      case StructuralEdit::Kind::DeleteEdge:
        if (edit.index >= spec.edges.size()) throw std::invalid_argument(where + ": invalid edge index");
        spec.edges.erase(spec.edges.begin() + static_cast<std::ptrdiff_t>(edit.index));
        break;
      case StructuralEdit::Kind::AddEdge: {
        EdgeSpec edge = edit.edge;
        if (edge.src >= spec.n || edge.dst >= spec.n) throw std::invalid_argument(where + ": unknown endpoint");
        if (edge.kind == EdgeKind::DiscreteTransport && edge.send_coord < 0)
          edge.send_coord = static_cast<int>(add_send_coordinate(spec, edge.src));
        spec.edges.push_back(std::move(edge));
        break;
      }
      case StructuralEdit::Kind::RetypeEdge: {
        if (edit.index >= spec.edges.size()) throw std::invalid_argument(where + ": invalid edge index");
        if (spec.edges[edit.index].kind == edit.new_kind) {
          if (warnings) warnings->push_back(where + ": edge already has this kind; edit ignored");
          break;
        }
        if (edit.new_kind == EdgeKind::DiscreteTransport) {
          const std::size_t src = spec.edges[edit.index].src;
          int coord = static_cast<int>(add_send_coordinate(spec, src));
          spec.edges[edit.index].send_coord = coord;
        } else {
          spec.edges[edit.index].send_coord = -1;
        }
        spec.edges[edit.index].kind = edit.new_kind;
        spec.edges[edit.index].latency = edit.latency;
        break;
      }
    }
    spec.exit_rates.clear();
  }
  return canonicalize(spec);
}

GameSpec induced_game(const GameSpec& spec, const Intervention& intervention, std::vector<std::string>* warnings) {
  GameSpec out = apply_structural(spec, intervention.edits, warnings);
  if (intervention.signal) validate_signal(*intervention.signal);
  if (intervention.transfers) out = apply_transfers(out, *intervention.transfers);
  return out;
}

template <class S>
bool breaks_inertia(const UniformizedGame<S>& induced, const PolicyProfile& sq, double tol, GainScope scope) {
  return !verify_mpe(induced, sq, tol, scope).is_mpe;
}

template <class S>
bool implements(const UniformizedGame<S>& induced, const PolicyProfile& target, const PolicyProfile& sq, double tol,
                GainScope scope) {
  if (target == sq) return false;
  return verify_mpe(induced, target, tol, scope).is_mpe && !verify_mpe(induced, sq, tol, scope).is_mpe;
}

namespace {

// Control of `player` in `to` whose leading coordinates equal `point` and whose send
// coordinates equal `send`.
std::size_t embedded_control(const GameSpec& to, std::size_t player, const ControlPoint& point, bool send) {
  const auto& grid = to.controls[player];
  for (std::size_t d = 0; d < grid.size(); ++d) {
    const ControlPoint& p = grid[d];
    if (p.size() < point.size() || !std::equal(point.begin(), point.end(), p.begin())) continue;
    bool ok = true;
    for (std::size_t j = point.size(); j < p.size() && ok; ++j) {
      const auto& sc = to.send_coords[player];
      bool is_send = std::find(sc.begin(), sc.end(), j) != sc.end();
      ok = is_send && p[j] == (send ? 1.0 : 0.0);
    }
    if (ok) return d;
  }
  throw std::invalid_argument("embed_profile: no matching control for player " + std::to_string(player));
}

}  // namespace

template <class S>
PolicyProfile embed_profile(const UniformizedGame<S>& from, const UniformizedGame<S>& to,
                            const PolicyProfile& profile) {
  check_profile(from, profile);
  if (from.n != to.n || from.base_states != to.base_states || from.stages != to.stages)
    throw std::invalid_argument("embed_profile: games differ in players, base states or stages");
  const std::size_t X = to.states;
  PolicyProfile out{to.stages, X, {}};
  for (std::size_t i = 0; i < to.n; ++i) {
    const PlayerPolicy& src = profile.players[i];
    PlayerPolicy p{src.stationary, {}};
    const std::size_t K = src.stationary ? 1 : to.stages;
    p.controls.resize(K * X);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t x = 0; x < X; ++x) {
        const std::size_t base = to.base_of(x);
        const std::size_t c = profile.control(i, k, base * from.tokens.combinations);
        const bool active = to.state_space.player_state(base, i) == PlayerState::Active;
        p.controls[k * X + x] =
            static_cast<std::uint32_t>(embedded_control(*to.spec, i, from.spec->controls[i][c], active));
      }
    out.players.push_back(std::move(p));
  }
  return out;
}

DominanceFamily dominance_family(const Rational& B, const Rational& T, const Rational& gamma,
                                 const Rational& latency) {
  if (B <= 0 || T <= 0) throw std::invalid_argument("dominance_family: B and T must be positive");
  if (gamma <= 0) throw std::invalid_argument("dominance_family: gamma must be positive");
  const std::vector<PlayerState> binary = {PlayerState::Active, PlayerState::Sleep};
  GameSpec spec = make_empty_game({binary, binary}, {{{0.0}, {1.0}}, {{0.0}, {1.0}}}, T);
  DominanceFamily family;
  family.switch_rate = gamma / 4;
  family.kappa = B + 1;
  spec.rates.lambda_max = 2 * family.switch_rate;
  const StateSpace ss = spec.state_space();
  for (std::size_t s = 0; s < ss.size(); ++s)
    for (std::size_t i = 0; i < 2; ++i) {
      PlayerState other = ss.player_state(s, i) == PlayerState::Active ? PlayerState::Sleep : PlayerState::Active;
      spec.rates.entries[RateKey{s, i, other, 1}] = family.switch_rate;
    }
  for (std::size_t i = 0; i < 2; ++i)
    spec.payoffs.switch_cost[i][static_cast<std::size_t>(PlayerState::Sleep)]
                            [static_cast<std::size_t>(PlayerState::Active)] = family.kappa;
  spec.edges.push_back(EdgeSpec{0, 1, EdgeKind::ContinuousFlow, latency, 1, -1});
  spec.initial_state = {PlayerState::Sleep, PlayerState::Sleep};
  family.continuous = validate_game(std::move(spec));
  family.retype = StructuralEdit::retype(0, EdgeKind::DiscreteTransport, latency);
  family.discrete = apply_structural(family.continuous, {family.retype});
  return family;
}

template <class S>
PolicyProfile status_quo(const UniformizedGame<S>& ug) {
  const GameSpec& spec = *ug.spec;
  PolicyProfile out{ug.stages, ug.states, {}};
  for (std::size_t i = 0; i < ug.n; ++i) {
    PlayerPolicy p{true, std::vector<std::uint32_t>(ug.states, 0)};
    const ControlPoint stay(spec.controls[i].front().size() - spec.send_coords[i].size(), 0.0);
    for (std::size_t x = 0; x < ug.states; ++x) {
      bool active = ug.state_space.player_state(ug.base_of(x), i) == PlayerState::Active;
      p.controls[x] = static_cast<std::uint32_t>(embedded_control(spec, i, stay, active));
    }
    out.players.push_back(std::move(p));
  }
  return out;
}

OutcomeSignature outcome_signature(const UniformizedGame<double>& ug, const PolicyProfile& profile) {
  const std::size_t X = ug.states;
  const std::size_t x0 = initial_index(ug);
  std::vector<double> dist(X, 0.0), next(X);
  dist[x0] = 1.0;
  for (std::size_t k = 0; k < ug.stages; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < X; ++x) {
      if (dist[x] == 0.0) continue;
      const std::size_t r = ug.row(x, profile.profile_index(ug.profile_space, k, x));
      for (std::size_t j = ug.row_begin[r]; j < ug.row_begin[r + 1]; ++j)
        next[ug.arcs[j].target] += dist[x] * ug.arcs[j].prob;
    }
    dist.swap(next);
  }
  std::vector<double> base(ug.base_states, 0.0);
  for (std::size_t x = 0; x < X; ++x) base[ug.base_of(x)] += dist[x];
  std::size_t modal = 0;
  for (std::size_t s = 1; s < base.size(); ++s)
    if (base[s] > base[modal] + 1e-12) modal = s;
  const ValueTable<double> v = joint_value(ug, profile);
  double welfare = 0;
  for (std::size_t i = 0; i < ug.n; ++i) welfare += v.at(i, 0, x0);
  return OutcomeSignature{ug.state_space.decode(modal), std::llround(welfare * 1e9)};
}

std::set<OutcomeSignature> implementable_set(const UniformizedGame<double>& ug, double tol, std::uint64_t cap) {
  std::set<OutcomeSignature> out;
  for (const auto& candidate : enumerate_mpe(ug, tol, cap)) out.insert(outcome_signature(ug, candidate.profile));
  return out;
}

#define LTG_INSTANTIATE_INTERVENE(S)                                                                        \
  template bool breaks_inertia<S>(const UniformizedGame<S>&, const PolicyProfile&, double, GainScope);     \
  template bool implements<S>(const UniformizedGame<S>&, const PolicyProfile&, const PolicyProfile&, double, \
                              GainScope);                                                                   \
  template PolicyProfile embed_profile<S>(const UniformizedGame<S>&, const UniformizedGame<S>&,             \
                                          const PolicyProfile&);                                            \
  template PolicyProfile status_quo<S>(const UniformizedGame<S>&);

LTG_INSTANTIATE_INTERVENE(double)
LTG_INSTANTIATE_INTERVENE(Rational)

}  // namespace ltg
