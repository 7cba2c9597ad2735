#include "ltg/uniformize.hpp"

#include <stdexcept>

namespace ltg {

std::vector<std::uint32_t> TokenLayout::decode(std::size_t code) const {
  std::vector<std::uint32_t> out(edges.size());
  for (std::size_t e = edges.size(); e-- > 0;) {
    std::size_t radix = lifetime[e] + 1;
    out[e] = static_cast<std::uint32_t>(code % radix);
    code /= radix;
  }
  return out;
}

std::size_t TokenLayout::encode(std::span<const std::uint32_t> counters) const {
  std::size_t code = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) code = code * (lifetime[e] + 1) + counters[e];
  return code;
}

std::size_t stage_count(const Rational& gamma, const Rational& horizon) {
  long long n = ceil_to_integer(gamma * horizon);
  return n < 0 ? 0 : static_cast<std::size_t>(n);
}

namespace {

template <class S>
S transfer_scalar(double t, const Rational& gamma) {
  if constexpr (std::is_same_v<S, double>) {
    return t / to_double(gamma);
  } else {
    return Rational(t) / gamma;
  }
}

}  // namespace

template <class S>
UniformizedGame<S> uniformize(const GameSpec& input, const Rational& gamma) {
  if (gamma <= 0) throw std::invalid_argument("uniformization rate must be positive");
  GameSpec validated = input.validated() ? input : validate_game(input);
  if (gamma < validated.rates.lambda_max)
    throw std::invalid_argument("uniformization rate " + to_string(gamma) + " is below lambda_max " +
                                to_string(validated.rates.lambda_max));

  UniformizedGame<S> ug;
  ug.spec = std::make_shared<const GameSpec>(std::move(validated));
  const GameSpec& spec = *ug.spec;
  ug.gamma = gamma;
  ug.stages = stage_count(gamma, spec.horizon);
  ug.step = Rational(1) / gamma;
  ug.horizon = Rational(static_cast<long long>(ug.stages)) / gamma;
  ug.n = spec.n;
  ug.state_space = spec.state_space();
  ug.profile_space = spec.profile_space();
  ug.base_states = ug.state_space.size();
  ug.profiles = ug.profile_space.size();

  for (std::size_t e = 0; e < spec.edges.size(); ++e) {
    if (!edge_needs_token(spec.edges[e])) continue;
    long long life = ceil_to_integer(spec.edges[e].latency * gamma);
    ug.tokens.edges.push_back(e);
    ug.tokens.lifetime.push_back(static_cast<std::uint32_t>(std::max(1LL, life)));
    ug.tokens.combinations *= ug.tokens.lifetime.back() + 1;
  }
  ug.states = ug.base_states * ug.tokens.combinations;

  const std::size_t n = ug.n;
  const std::size_t rows = ug.states * ug.profiles;
  ug.row_begin.reserve(rows + 1);
  ug.stage_reward.assign(rows * n, S(0));
  ug.switch_cost.assign(rows * n, S(0));

  std::vector<std::uint32_t> edge_counters(spec.edges.size(), 0);
  std::vector<std::uint32_t> next_counters(ug.tokens.edges.size(), 0);
  for (std::size_t x = 0; x < ug.states; ++x) {
    const std::size_t s = x / ug.tokens.combinations;
    const auto counters = ug.tokens.decode(x % ug.tokens.combinations);
    std::fill(edge_counters.begin(), edge_counters.end(), 0);
    for (std::size_t t = 0; t < counters.size(); ++t) edge_counters[ug.tokens.edges[t]] = counters[t];

    for (std::size_t a = 0; a < ug.profiles; ++a) {
      // Deterministic token update.
      for (std::size_t t = 0; t < counters.size(); ++t) {
        const EdgeSpec& edge = spec.edges[ug.tokens.edges[t]];
        bool fire = counters[t] <= 1 && ug.state_space.player_state(s, edge.src) == PlayerState::Active &&
                    sends(spec, edge, ug.profile_space.control(a, edge.src));
        next_counters[t] = fire ? ug.tokens.lifetime[t] : (counters[t] == 0 ? 0 : counters[t] - 1);
      }
      const std::size_t next_code = ug.tokens.encode(next_counters);

      ug.row_begin.push_back(ug.arcs.size());
      const Rational& exit = spec.exit_rate(s, a);
      if (exit < gamma)
        ug.arcs.push_back({s * ug.tokens.combinations + next_code, scalar_from<S>(1 - exit / gamma)});
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = ug.profile_space.control(a, i);
        const PlayerState from = ug.state_space.player_state(s, i);
        for (PlayerState q : spec.allowed_states[i]) {
          Rational rate = spec.rates.rate(s, i, q, c);
          if (rate == 0) continue;
          Rational p = rate / gamma;
          std::size_t target = ug.state_space.with_player(s, i, q);
          ug.arcs.push_back({target * ug.tokens.combinations + next_code, scalar_from<S>(p)});
          const Rational& kappa =
              spec.payoffs.switch_cost[i][static_cast<std::size_t>(from)][static_cast<std::size_t>(q)];
          ug.switch_cost[(x * ug.profiles + a) * n + i] += scalar_from<S>(p * kappa);
        }
      }

      auto benefit = benefit_rate(spec, s, a, counters.empty() ? std::span<const std::uint32_t>{}
                                                              : std::span<const std::uint32_t>(edge_counters));
      for (std::size_t i = 0; i < n; ++i) {
        Rational net = benefit[i] - spec.payoffs.control_cost[i][ug.profile_space.control(a, i)];
        ug.stage_reward[(x * ug.profiles + a) * n + i] = scalar_from<S>(net / gamma);
      }
    }
  }
  ug.row_begin.push_back(ug.arcs.size());

  ug.terminal.resize(ug.states * n);
  for (std::size_t x = 0; x < ug.states; ++x)
    for (std::size_t i = 0; i < n; ++i)
      ug.terminal[x * n + i] = scalar_from<S>(spec.payoffs.terminal[(x / ug.tokens.combinations) * n + i]);

  if (spec.transfers) {
    const TransferTable& table = *spec.transfers;
    if (table.stages() != 1 && table.stages() != ug.stages)
      throw std::invalid_argument("transfer table has " + std::to_string(table.stages()) +
                                  " stages but the uniformized game has " + std::to_string(ug.stages));
    ug.transfer_stages = table.stages();
    ug.transfer.resize(table.values().size());
    for (std::size_t j = 0; j < table.values().size(); ++j)
      ug.transfer[j] = transfer_scalar<S>(table.values()[j], gamma);
  }
  return ug;
}

template UniformizedGame<double> uniformize<double>(const GameSpec&, const Rational&);
template UniformizedGame<Rational> uniformize<Rational>(const GameSpec&, const Rational&);

}  // namespace ltg
