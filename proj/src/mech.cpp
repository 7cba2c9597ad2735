#include "ltg/mech.hpp"

#include <algorithm>
#include <stdexcept>

namespace ltg {

namespace {

constexpr std::size_t idx(PlayerState q) { return static_cast<std::size_t>(q); }

UniformizedGame<Rational> exact_game(const GameSpec& spec, const Rational& gamma) {
  return uniformize<Rational>(spec, gamma);
}

}  // namespace

std::size_t TypeSpace::profile_count() const {
  std::size_t total = 1;
  for (const auto& t : types) total *= t.size();
  return total;
}

std::vector<std::size_t> TypeSpace::decode(std::size_t profile) const {
  std::vector<std::size_t> out(types.size());
  for (std::size_t i = types.size(); i-- > 0;) {
    out[i] = profile % types[i].size();
    profile /= types[i].size();
  }
  return out;
}

std::size_t TypeSpace::encode(const std::vector<std::size_t>& profile) const {
  if (profile.size() != types.size()) throw std::invalid_argument("type profile has the wrong length");
  std::size_t code = 0;
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (profile[i] >= types[i].size()) throw std::invalid_argument("type index out of range");
    code = code * types[i].size() + profile[i];
  }
  return code;
}

Rational TypeSpace::probability(const std::vector<std::size_t>& profile) const {
  Rational p = 1;
  for (std::size_t i = 0; i < types.size(); ++i) p *= prior[i][profile[i]];
  return p;
}

void validate_types(const TypeSpace& ts) {
  if (ts.types.empty()) throw ValidationError("type space has no players");
  if (ts.prior.size() != ts.types.size()) throw ValidationError("ragged table: prior has wrong player count");
  for (std::size_t i = 0; i < ts.types.size(); ++i) {
    if (ts.types[i].empty()) throw ValidationError("player " + std::to_string(i) + " has no types");
    if (ts.prior[i].size() != ts.types[i].size())
      throw ValidationError("ragged table: prior of player " + std::to_string(i) + " does not match its types");
    Rational sum = 0;
    for (const auto& p : ts.prior[i]) {
      if (p < 0) throw ValidationError("negative prior probability for player " + std::to_string(i));
      sum += p;
    }
    if (sum != 1) throw ValidationError("prior of player " + std::to_string(i) + " sums to " + to_string(sum));
  }
}

GameSpec game_with_types(const GameSpec& base, const TypeSpace& ts, const std::vector<std::size_t>& profile) {
  GameSpec spec = base;
  spec.exit_rates.clear();
  if (profile.size() != spec.n || ts.types.size() != spec.n)
    throw std::invalid_argument("type profile does not match the player count");
  for (std::size_t i = 0; i < spec.n; ++i) {
    if (profile[i] >= ts.types[i].size()) throw std::invalid_argument("type index out of range");
    for (const ParamOverride& o : ts.types[i][profile[i]].overrides) {
      const std::string who = "type override of player " + std::to_string(i);
      switch (o.kind) {
        case ParamOverride::Kind::SwitchCost: {
          const auto& allowed = spec.allowed_states[i];
          if (std::find(allowed.begin(), allowed.end(), o.from) == allowed.end() ||
              std::find(allowed.begin(), allowed.end(), o.to) == allowed.end())
            throw std::invalid_argument(who + ": switching cost between states the player cannot occupy");
          spec.payoffs.switch_cost[i][idx(o.from)][idx(o.to)] = o.value;
          break;
        }
        case ParamOverride::Kind::ControlCost:
          if (o.index >= spec.controls[i].size()) throw std::invalid_argument(who + ": control index out of range");
          spec.payoffs.control_cost[i][o.index] = o.value;
          break;
        case ParamOverride::Kind::EdgeWeight:
          if (o.index >= spec.edges.size() || (spec.edges[o.index].src != i && spec.edges[o.index].dst != i))
            throw std::invalid_argument(who + ": edge index out of range or not incident to the player");
          spec.edges[o.index].weight = o.value;
          break;
      }
    }
  }
  return validate_game(std::move(spec));
}

std::vector<Rational> MechanismSpec::transfer(std::size_t report, std::size_t k, std::size_t x,
                                              std::size_t players) const {
  if (report < transfers.size()) {
    auto it = transfers[report].find({k, x});
    if (it != transfers[report].end()) return it->second;
  }
  return std::vector<Rational>(players, 0);
}

BilateralPreset bilateral_preset(const Rational& kappa_low, const Rational& kappa_high, const Rational& horizon,
                                 const Rational& benefit, const Rational& rate, const Rational& gamma) {
  if (!(0 < kappa_low && kappa_low < kappa_high))
    throw ValidationError("bilateral preset needs 0 < kappa_L < kappa_H");
  const std::vector<PlayerState> binary = {PlayerState::Active, PlayerState::Sleep};
  GameSpec spec = make_empty_game({binary, binary}, {{{0.0}, {1.0}}, {{0.0}, {1.0}}}, horizon);
  spec.rates.lambda_max = 2 * rate;
  const StateSpace ss = spec.state_space();
  for (std::size_t s = 0; s < ss.size(); ++s)
    for (std::size_t i = 0; i < 2; ++i) {
      PlayerState other = ss.player_state(s, i) == PlayerState::Active ? PlayerState::Sleep : PlayerState::Active;
      spec.rates.entries[RateKey{s, i, other, 1}] = rate;
    }
  for (std::size_t i = 0; i < 2; ++i) spec.payoffs.switch_cost[i][idx(PlayerState::Sleep)][idx(PlayerState::Active)] = kappa_low;
  spec.edges.push_back(EdgeSpec{0, 1, EdgeKind::ContinuousFlow, 0, benefit, -1});
  spec.initial_state = {PlayerState::Sleep, PlayerState::Sleep};

  BilateralPreset preset;
  preset.base = validate_game(std::move(spec));
  preset.gamma = gamma;
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<PlayerType> row;
    for (const auto& [label, kappa] : {std::pair{"L", kappa_low}, std::pair{"H", kappa_high}})
      row.push_back(PlayerType{label, {ParamOverride{ParamOverride::Kind::SwitchCost, PlayerState::Sleep,
                                                     PlayerState::Active, 0, kappa}}});
    preset.types.types.push_back(std::move(row));
    preset.types.prior.push_back({Rational(1, 2), Rational(1, 2)});
  }
  validate_types(preset.types);
  return preset;
}

PivotResult pivot_mechanism(const GameSpec& base, const TypeSpace& ts, const std::vector<std::size_t>& reports,
                            const Rational& gamma, PivotMode mode) {
  const GameSpec game = game_with_types(base, ts, reports);
  const auto ug = exact_game(game, gamma);
  const std::size_t n = ug.n, X = ug.states, N = ug.stages, x0 = initial_index(ug);
  PivotResult out;
  out.reports = reports;
  SocialOptimum<Rational> so = social_optimum(ug);
  out.allocation = so.policy;
  out.welfare = so.welfare[x0];
  const ValueTable<Rational> v = joint_value(ug, so.policy);
  out.transfer.assign(n, 0);
  out.welfare_others.assign(n, 0);
  out.welfare_without.assign(n, 0);
  out.continual.assign(N * X, std::vector<Rational>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    PlannerOptions options;
    options.counted.assign(n, true);
    options.counted[i] = false;
    options.fixed.resize(n);
    if (mode == PivotMode::NullControl) {
      auto null = null_control(game, i);
      if (!null) throw std::invalid_argument("pivot_mechanism: player " + std::to_string(i) + " has no null control");
      options.fixed[i] = constant_policy(X, *null);
    } else {
      options.fixed[i] = so.policy.players[i];
    }
    const SocialOptimum<Rational> without = social_optimum(ug, options);
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t x = 0; x < X; ++x) {
        Rational others = 0;
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) others += v.at(j, k, x);
        out.continual[k * X + x][i] = others - without.welfare[k * X + x];
      }
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) out.welfare_others[i] += v.at(j, 0, x0);
    out.welfare_without[i] = without.welfare[x0];
    out.transfer[i] = out.welfare_others[i] - out.welfare_without[i];
  }
  return out;
}

MechanismSpec pivot_mechanism_spec(const GameSpec& base, const TypeSpace& ts, const Rational& gamma, PivotMode mode) {
  MechanismSpec mech;
  mech.timing = ReportTiming::Continual;
  for (const auto& row : ts.types) {
    std::vector<std::string> labels;
    for (const auto& t : row) labels.push_back(t.label);
    mech.messages.push_back(std::move(labels));
  }
  for (std::size_t code = 0; code < ts.profile_count(); ++code) {
    PivotResult p = pivot_mechanism(base, ts, ts.decode(code), gamma, mode);
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Rational>> table;
    const std::size_t X = p.allocation.states;
    for (std::size_t key = 0; key < p.continual.size(); ++key) table[{key / X, key % X}] = p.continual[key];
    mech.allocation.push_back(std::move(p.allocation));
    mech.transfers.push_back(std::move(table));
  }
  return mech;
}

EpicReport check_epic(const GameSpec& base, const TypeSpace& ts, const MechanismSpec& mech, const Rational& gamma) {
  const std::size_t P = ts.profile_count(), n = ts.players();
  if (mech.allocation.size() != P) throw std::invalid_argument("check_epic: allocation does not cover every report");
  for (std::size_t i = 0; i < n && !mech.messages.empty(); ++i)
    if (mech.messages[i].size() != ts.types[i].size())
      throw std::invalid_argument("check_epic: message space of player " + std::to_string(i) +
                                  " is not its type space");
  EpicReport report;
  bool first = true;
  for (std::size_t truth = 0; truth < P; ++truth) {
    const auto theta = ts.decode(truth);
    const auto ug = exact_game(game_with_types(base, ts, theta), gamma);
    const std::size_t X = ug.states, N = ug.stages, x0 = initial_index(ug);
    std::map<std::size_t, ValueTable<Rational>> values;
    auto value_of = [&](std::size_t code) -> const ValueTable<Rational>& {
      auto it = values.find(code);
      if (it == values.end()) it = values.emplace(code, joint_value(ug, mech.allocation[code])).first;
      return it->second;
    };
    std::vector<std::pair<std::size_t, std::size_t>> points;
    if (mech.timing == ReportTiming::Once || N == 0) {
      points.emplace_back(0, x0);
    } else {
      const auto reach = reachable(ug, mech.allocation[truth], 0, x0);
      for (std::size_t k = 0; k < N; ++k)
        for (std::size_t x = 0; x < X; ++x)
          if (reach[k * X + x]) points.emplace_back(k, x);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t lie = 0; lie < ts.types[i].size(); ++lie) {
        if (lie == theta[i]) continue;
        auto reported = theta;
        reported[i] = lie;
        const std::size_t mis = ts.encode(reported);
        EpicEntry worst;
        bool have = false;
        for (const auto& [k, x] : points) {
          const Rational honest = value_of(truth).at(i, k, x) + mech.transfer(truth, k, x, n)[i];
          const Rational deviate = value_of(mis).at(i, k, x) + mech.transfer(mis, k, x, n)[i];
          const Rational diff = honest - deviate;
          if (!have || diff < worst.difference) {
            worst = EpicEntry{i, truth, mis, k, x, diff};
            have = true;
          }
        }
        if (!have) continue;
        if (first || worst.difference < report.min_difference) report.min_difference = worst.difference;
        first = false;
        report.entries.push_back(worst);
      }
  }
  report.holds = report.min_difference >= 0;
  return report;
}

BudgetReport check_budget(const MechanismSpec& mech, std::size_t players) {
  BudgetReport report;
  for (std::size_t m = 0; m < mech.transfers.size(); ++m)
    for (const auto& [key, values] : mech.transfers[m]) {
      if (values.size() != players) throw std::invalid_argument("check_budget: transfer row has wrong player count");
      Rational sum = 0;
      for (const auto& v : values) sum += v;
      report.entries.push_back(BudgetEntry{m, key.first, key.second, sum});
      if (sum != 0) report.balanced = false;
      if (sum > report.max_deficit) report.max_deficit = sum;
    }
  return report;
}

DeficitReport pivot_deficit_bound(const GameSpec& base, const TypeSpace& ts, const Rational& gamma, PivotMode mode) {
  DeficitReport report;
  for (std::size_t code = 0; code < ts.profile_count(); ++code) {
    PivotResult p = pivot_mechanism(base, ts, ts.decode(code), gamma, mode);
    Rational d = 0;
    for (const auto& t : p.transfer) d += t;
    report.deficit.push_back(d);
    if (code == 0 || p.welfare > report.w_max) report.w_max = p.welfare;
    if (code == 0 || p.welfare < report.w_min) report.w_min = p.welfare;
  }
  report.max_deficit = *std::max_element(report.deficit.begin(), report.deficit.end());
  report.min_deficit = *std::min_element(report.deficit.begin(), report.deficit.end());
  report.bound = Rational(static_cast<long long>(ts.players())) * (report.w_max - report.w_min);
  report.within = report.min_deficit >= 0 && report.max_deficit <= report.bound;
  return report;
}

TradeInstance ms_embedding(const GameSpec& base, const TypeSpace& ts, const Rational& gamma) {
  const std::vector<PlayerState> binary = {PlayerState::Active, PlayerState::Sleep};
  if (base.n != 2 || base.edges.size() != 1) throw std::invalid_argument("ms_embedding: needs two players and one edge");
  for (std::size_t i = 0; i < 2; ++i) {
    auto allowed = base.allowed_states[i];
    std::sort(allowed.begin(), allowed.end());
    if (allowed != binary) throw std::invalid_argument("ms_embedding: players must have states {Active, Sleep}");
    for (const auto& type : ts.types[i])
      for (const auto& o : type.overrides)
        if (o.kind != ParamOverride::Kind::SwitchCost || o.from != PlayerState::Sleep || o.to != PlayerState::Active)
          throw std::invalid_argument("ms_embedding: types may only set the Sleep -> Active cost");
  }
  validate_types(ts);

  TradeInstance inst;
  inst.types = ts;
  inst.profiles = ts.profile_count();
  const std::size_t P = inst.profiles;
  std::vector<UniformizedGame<Rational>> games;
  for (std::size_t code = 0; code < P; ++code) {
    const auto theta = ts.decode(code);
    GameSpec g = game_with_types(base, ts, theta);
    inst.profile_types.push_back(theta);
    const Rational k1 = g.payoffs.switch_cost[0][idx(PlayerState::Sleep)][idx(PlayerState::Active)];
    const Rational k2 = g.payoffs.switch_cost[1][idx(PlayerState::Sleep)][idx(PlayerState::Active)];
    inst.social_benefit.push_back(2 * g.horizon * g.edges[0].weight);
    inst.cost_sum.push_back(k1 + k2);
    inst.efficient.push_back(inst.social_benefit.back() > inst.cost_sum.back());
    games.push_back(exact_game(g, gamma));
  }
  const auto& ug0 = games.front();
  const std::size_t X = ug0.states, N = ug0.stages, x0 = initial_index(ug0);
  inst.base_states = ug0.base_states;

  std::vector<std::size_t> nulls;
  for (std::size_t i = 0; i < 2; ++i) {
    auto null = null_control(*ug0.spec, i);
    if (!null) throw std::invalid_argument("ms_embedding: player " + std::to_string(i) + " has no null control");
    nulls.push_back(*null);
  }
  for (std::size_t code = 0; code < P; ++code) {
    SocialOptimum<Rational> so = social_optimum(games[code]);
    bool activates = false;
    for (std::size_t i = 0; i < 2; ++i) activates = activates || so.policy.control(i, 0, x0) != nulls[i];
    inst.planner_activates.push_back(activates);
    inst.allocation.push_back(std::move(so.policy));
  }

  inst.payoff.assign(2, std::vector<std::vector<Rational>>(P, std::vector<Rational>(P, 0)));
  inst.outside.assign(2, std::vector<Rational>(P, 0));
  for (std::size_t truth = 0; truth < P; ++truth) {
    for (std::size_t rep = 0; rep < P; ++rep) {
      const auto v = joint_value(games[truth], inst.allocation[rep]);
      for (std::size_t i = 0; i < 2; ++i) inst.payoff[i][truth][rep] = v.at(i, 0, x0);
    }
    const auto idle = joint_value(games[truth], constant_profile(games[truth], nulls));
    for (std::size_t i = 0; i < 2; ++i) inst.outside[i][truth] = idle.at(i, 0, x0);
  }

  // Expected time in each base state; the law of motion does not depend on types.
  inst.occupancy.assign(P, std::vector<Rational>(inst.base_states, 0));
  for (std::size_t rep = 0; rep < P; ++rep) {
    std::vector<Rational> dist(X, 0), next(X);
    dist[x0] = 1;
    for (std::size_t k = 0; k < N; ++k) {
      std::fill(next.begin(), next.end(), Rational(0));
      for (std::size_t x = 0; x < X; ++x) {
        if (dist[x] == 0) continue;
        inst.occupancy[rep][ug0.base_of(x)] += dist[x] * ug0.step;
        const std::size_t r = ug0.row(x, inst.allocation[rep].profile_index(ug0.profile_space, k, x));
        for (std::size_t j = ug0.row_begin[r]; j < ug0.row_begin[r + 1]; ++j)
          next[ug0.arcs[j].target] += dist[x] * ug0.arcs[j].prob;
      }
      dist.swap(next);
    }
  }
  return inst;
}

namespace {

// Coefficients of player i's effective transfer under report `rep`.
std::vector<Rational> effective(const TradeInstance& inst, const ImpossibilityOptions& options, std::size_t vars,
                                std::size_t i, std::size_t rep) {
  std::vector<Rational> row(vars, 0);
  if (!options.state_keyed) {
    row[i * inst.profiles + rep] = 1;
  } else {
    for (std::size_t s = 0; s < inst.base_states; ++s)
      row[(i * inst.profiles + rep) * inst.base_states + s] = inst.occupancy[rep][s];
  }
  return row;
}

std::string profile_label(const TradeInstance& inst, std::size_t code) {
  std::string out;
  for (std::size_t i = 0; i < inst.profile_types[code].size(); ++i)
    out += inst.types.types[i][inst.profile_types[code][i]].label;
  return out;
}

}  // namespace

ImpossibilityResult impossibility_lp(const TradeInstance& inst, const ImpossibilityOptions& options) {
  ImpossibilityResult result;
  result.options = options;
  LinearSystem& sys = result.system;
  const std::size_t P = inst.profiles, n = 2;
  const std::size_t keys = options.state_keyed ? inst.base_states : 1;
  sys.vars = n * P * keys;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t rep = 0; rep < P; ++rep)
      for (std::size_t s = 0; s < keys; ++s)
        sys.var_names.push_back("t" + std::to_string(i) + "[" + profile_label(inst, rep) + "]" +
                                (options.state_keyed ? "[s" + std::to_string(s) + "]" : ""));

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t truth = 0; truth < P; ++truth) {
      const auto& theta = inst.profile_types[truth];
      for (std::size_t lie = 0; lie < inst.types.types[i].size(); ++lie) {
        if (lie == theta[i]) continue;
        auto reported = theta;
        reported[i] = lie;
        const std::size_t mis = inst.types.encode(reported);
        auto row = effective(inst, options, sys.vars, i, mis);
        const auto honest = effective(inst, options, sys.vars, i, truth);
        for (std::size_t v = 0; v < sys.vars; ++v) row[v] -= honest[v];
        sys.add_row(std::move(row), Sense::LessEq, inst.payoff[i][truth][truth] - inst.payoff[i][truth][mis],
                    "EPIC player " + std::to_string(i) + " truth " + profile_label(inst, truth) + " report " +
                        profile_label(inst, mis));
      }
    }

  for (std::size_t rep = 0; rep < P; ++rep)
    for (std::size_t s = 0; s < keys; ++s) {
      std::vector<Rational> row(sys.vars, 0);
      for (std::size_t i = 0; i < n; ++i) row[(i * P + rep) * keys + s] = 1;
      sys.add_row(std::move(row), Sense::Equal, 0,
                  "BB report " + profile_label(inst, rep) + (options.state_keyed ? " s" + std::to_string(s) : ""));
    }

  if (options.interim_ir)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t own = 0; own < inst.types.types[i].size(); ++own) {
        std::vector<Rational> row(sys.vars, 0);
        Rational bound = 0;
        for (std::size_t truth = 0; truth < P; ++truth) {
          const auto& theta = inst.profile_types[truth];
          if (theta[i] != own) continue;
          Rational weight = 1;
          for (std::size_t j = 0; j < n; ++j)
            if (j != i) weight *= inst.types.prior[j][theta[j]];
          const auto eff = effective(inst, options, sys.vars, i, truth);
          for (std::size_t v = 0; v < sys.vars; ++v) row[v] -= weight * eff[v];
          bound += weight * (inst.payoff[i][truth][truth] - inst.outside[i][truth]);
        }
        sys.add_row(std::move(row), Sense::LessEq, bound,
                    "IR player " + std::to_string(i) + " type " + inst.types.types[i][own].label);
      }

  result.certificate = solve_feasibility(sys);
  result.verified = verify_certificate(sys, result.certificate);
  return result;
}

MechanismSpec mechanism_from_solution(const TradeInstance& inst, const ImpossibilityResult& result,
                                      const GameSpec& base) {
  if (!result.certificate.feasible) throw std::invalid_argument("mechanism_from_solution: LP is infeasible");
  MechanismSpec mech;
  mech.timing = ReportTiming::Once;
  for (const auto& row : inst.types.types) {
    std::vector<std::string> labels;
    for (const auto& t : row) labels.push_back(t.label);
    mech.messages.push_back(std::move(labels));
  }
  const std::size_t x0 = base.state_space().encode(base.initial_state);
  const std::size_t vars = result.system.vars;
  for (std::size_t rep = 0; rep < inst.profiles; ++rep) {
    std::vector<Rational> lump(2, 0);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto eff = effective(inst, result.options, vars, i, rep);
      for (std::size_t v = 0; v < vars; ++v) lump[i] += eff[v] * result.certificate.solution[v];
    }
    mech.allocation.push_back(inst.allocation[rep]);
    mech.transfers.push_back({{{0, x0}, lump}});
  }
  return mech;
}

}  // namespace ltg
