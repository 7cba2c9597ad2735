#pragma once

// Test-only oracles. Everything here is built from GameSpec tables directly and shares no code
// with uniformize or solve beyond the index spaces, so agreement is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ltg/intervene.hpp"
#include "ltg/model.hpp"

namespace oracle {

using ltg::GameSpec;
using ltg::PlayerState;
using ltg::Rational;

template <class S>
S cast(const Rational& r) {
  if constexpr (std::is_same_v<S, double>) {
    return r.convert_to<double>();
  } else {
    return r;
  }
}

/// Token-free dense model of a game at rate gamma.
template <class S>
struct Dense {
  std::size_t n = 0, states = 0, profiles = 0, stages = 0;
  std::vector<S> kernel;    // [(s * profiles + a) * states + s']
  std::vector<S> reward;    // [(s * profiles + a) * n + i], benefit, control cost and expected switch cost
  std::vector<S> terminal;  // [s * n + i]
  std::vector<S> transfer;  // [((k * states + s) * profiles + a) * n + i], empty when none
  ltg::ProfileSpace space;

  S p(std::size_t s, std::size_t a, std::size_t t) const { return kernel[(s * profiles + a) * states + t]; }
  S r(std::size_t k, std::size_t s, std::size_t a, std::size_t i) const {
    S out = reward[(s * profiles + a) * n + i];
    if (!transfer.empty()) out += transfer[((k * states + s) * profiles + a) * n + i];
    return out;
  }
};

inline bool sends_now(const GameSpec& g, const ltg::EdgeSpec& e, std::size_t control) {
  return g.controls[e.src][control][static_cast<std::size_t>(e.send_coord)] != 0.0;
}

/// Benefit rate from the stored table and the edge list, token-free games only.
inline std::vector<Rational> edge_benefit(const GameSpec& g, const ltg::JointState& s, const std::vector<std::size_t>& u,
                                          std::size_t state, std::size_t profile) {
  std::vector<Rational> b(g.n, 0);
  for (std::size_t i = 0; i < g.n; ++i) {
    auto it = g.payoffs.benefit.find(ltg::BenefitKey{state, profile, i});
    if (it != g.payoffs.benefit.end()) b[i] += it->second;
  }
  for (const auto& e : g.edges) {
    bool both = s[e.src] == PlayerState::Active && s[e.dst] == PlayerState::Active;
    if (e.kind == ltg::EdgeKind::DiscreteTransport) both = both && sends_now(g, e, u[e.src]);
    if (both) {
      b[e.src] += e.weight;
      b[e.dst] += e.weight;
    }
  }
  return b;
}

template <class S>
Dense<S> build(const GameSpec& g, const Rational& gamma) {
  Dense<S> d;
  const ltg::StateSpace ss(g.allowed_states);
  std::vector<std::size_t> counts;
  for (const auto& grid : g.controls) counts.push_back(grid.size());
  d.space = ltg::ProfileSpace(counts);
  d.n = g.n;
  d.states = ss.size();
  d.profiles = d.space.size();
  d.stages = static_cast<std::size_t>(ltg::ceil_to_integer(gamma * g.horizon));
  d.kernel.assign(d.states * d.profiles * d.states, S(0));
  d.reward.assign(d.states * d.profiles * d.n, S(0));
  for (std::size_t s = 0; s < d.states; ++s) {
    const ltg::JointState js = ss.decode(s);
    for (std::size_t a = 0; a < d.profiles; ++a) {
      const std::vector<std::size_t> u = d.space.decode(a);
      const std::vector<Rational> b = edge_benefit(g, js, u, s, a);
      Rational stay = 1;
      for (std::size_t i = 0; i < g.n; ++i) {
        Rational flow = b[i] - g.payoffs.control_cost[i][u[i]];
        Rational lump = 0;
        for (PlayerState q : g.allowed_states[i]) {
          auto it = g.rates.entries.find(ltg::RateKey{s, i, q, u[i]});
          if (it == g.rates.entries.end() || it->second == 0) continue;
          Rational p = it->second / gamma;
          stay -= p;
          lump += p * g.payoffs.switch_cost[i][static_cast<std::size_t>(js[i])][static_cast<std::size_t>(q)];
          ltg::JointState moved = js;
          moved[i] = q;
          d.kernel[(s * d.profiles + a) * d.states + ss.encode(moved)] += cast<S>(p);
        }
        d.reward[(s * d.profiles + a) * d.n + i] = cast<S>(flow / gamma - lump);
      }
      d.kernel[(s * d.profiles + a) * d.states + s] += cast<S>(stay);
    }
  }
  d.terminal.resize(d.states * d.n);
  for (std::size_t x = 0; x < d.terminal.size(); ++x) d.terminal[x] = cast<S>(g.payoffs.terminal[x]);
  if (g.transfers) {
    const auto& t = *g.transfers;
    d.transfer.assign(d.stages * d.states * d.profiles * d.n, S(0));
    for (std::size_t k = 0; k < d.stages; ++k)
      for (std::size_t s = 0; s < d.states; ++s)
        for (std::size_t a = 0; a < d.profiles; ++a)
          for (std::size_t i = 0; i < d.n; ++i)
            d.transfer[((k * d.states + s) * d.profiles + a) * d.n + i] =
                cast<S>(ltg::rational_from_double(t.at(k, s, a, i)) / gamma);
  }
  return d;
}

/// Control of player i at (k, s).
using Rule = std::function<std::size_t(std::size_t i, std::size_t k, std::size_t s)>;

/// values[i][k * states + s] for k = 0..N.
template <class S>
std::vector<std::vector<S>> evaluate(const Dense<S>& d, const Rule& rule) {
  const std::size_t X = d.states, N = d.stages;
  std::vector<std::vector<S>> v(d.n, std::vector<S>((N + 1) * X, S(0)));
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t s = 0; s < X; ++s) v[i][N * X + s] = d.terminal[s * d.n + i];
  std::vector<std::size_t> u(d.n);
  for (std::size_t k = N; k-- > 0;)
    for (std::size_t s = 0; s < X; ++s) {
      for (std::size_t i = 0; i < d.n; ++i) u[i] = rule(i, k, s);
      const std::size_t a = d.space.encode(u);
      for (std::size_t i = 0; i < d.n; ++i) {
        S q = d.r(k, s, a, i);
        for (std::size_t t = 0; t < X; ++t) q += d.p(s, a, t) * v[i][(k + 1) * X + t];
        v[i][k * X + s] = q;
      }
    }
  return v;
}

/// Stationary profile from enumerate_mpe's code: player 0 and state 0 most significant.
inline std::vector<std::vector<std::size_t>> decode_code(std::uint64_t code, const ltg::ProfileSpace& space,
                                                         std::size_t states) {
  std::vector<std::vector<std::size_t>> out(space.players(), std::vector<std::size_t>(states));
  for (std::size_t i = space.players(); i-- > 0;)
    for (std::size_t s = states; s-- > 0;) {
      out[i][s] = code % space.count(i);
      code /= space.count(i);
    }
  return out;
}

/// Largest gain of any nonstationary pure deviation of player i, over every (k, s) with k < N.
/// Exhaustive: every map (k, s) -> control is evaluated.
template <class S>
S brute_gain(const Dense<S>& d, const std::vector<std::vector<std::size_t>>& profile, std::size_t i) {
  const std::size_t X = d.states, N = d.stages, C = d.space.count(i), cells = N * X;
  Rule base = [&](std::size_t j, std::size_t, std::size_t s) { return profile[j][s]; };
  const auto v = evaluate(d, base);
  std::vector<std::size_t> dev(cells, 0);
  S best = S(0);
  bool first = true;
  while (true) {
    Rule rule = [&](std::size_t j, std::size_t k, std::size_t s) { return j == i ? dev[k * X + s] : profile[j][s]; };
    const auto w = evaluate(d, rule);
    for (std::size_t c = 0; c < cells; ++c) {
      S g = w[i][c] - v[i][c];
      if (first || g > best) best = g;
      first = false;
    }
    std::size_t pos = 0;
    while (pos < cells && ++dev[pos] == C) dev[pos++] = 0;
    if (pos == cells) break;
  }
  return best;
}

/// Same quantity as brute_gain by backward induction over player i's controls, for deviation
/// spaces too large to enumerate.
template <class S>
S dp_gain(const Dense<S>& d, const std::vector<std::vector<std::size_t>>& profile, std::size_t i) {
  const std::size_t X = d.states, N = d.stages;
  Rule base = [&](std::size_t j, std::size_t, std::size_t s) { return profile[j][s]; };
  const auto v = evaluate(d, base);
  std::vector<S> best(X);
  for (std::size_t s = 0; s < X; ++s) best[s] = d.terminal[s * d.n + i];
  S gain = S(0);
  bool first = true;
  std::vector<std::size_t> u(d.n);
  for (std::size_t k = N; k-- > 0;) {
    std::vector<S> next(X);
    for (std::size_t s = 0; s < X; ++s) {
      for (std::size_t j = 0; j < d.n; ++j) u[j] = profile[j][s];
      for (std::size_t c = 0; c < d.space.count(i); ++c) {
        u[i] = c;
        const std::size_t a = d.space.encode(u);
        S q = d.r(k, s, a, i);
        for (std::size_t t = 0; t < X; ++t) q += d.p(s, a, t) * best[t];
        if (c == 0 || q > next[s]) next[s] = q;
      }
      const S g = next[s] - v[i][k * X + s];
      if (first || g > gain) gain = g;
      first = false;
    }
    best = std::move(next);
  }
  return gain;
}

/// Codes of stationary profiles where no player gains more than tol by any deviation. Deviations
/// are enumerated exhaustively when there are at most 2^16 of them.
inline std::vector<std::uint64_t> brute_mpe(const Dense<double>& d, double tol) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t s = 0; s < d.states; ++s) total *= d.space.count(i);
  std::vector<std::uint64_t> out;
  for (std::uint64_t code = 0; code < total; ++code) {
    const auto profile = decode_code(code, d.space, d.states);
    bool ok = true;
    for (std::size_t i = 0; i < d.n && ok; ++i) {
      const double log_space = static_cast<double>(d.stages * d.states) * std::log2(double(d.space.count(i)));
      ok = (log_space <= 16 ? brute_gain(d, profile, i) : dp_gain(d, profile, i)) <= tol;
    }
    if (ok) out.push_back(code);
  }
  return out;
}

/// Maximum total welfare of the counted players over every nonstationary joint pure policy, at (0, s0).
/// Players in `frozen` play the given control everywhere. Only cells reachable from s0 under some
/// profile are enumerated; the others cannot affect the value at (0, s0).
template <class S>
S brute_planner(const Dense<S>& d, std::size_t s0, const std::vector<bool>& counted,
                const std::vector<std::optional<std::size_t>>& frozen) {
  const std::size_t X = d.states, N = d.stages;
  std::vector<bool> reach((N + 1) * X, false);
  reach[s0] = true;
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t s = 0; s < X; ++s)
      if (reach[k * X + s])
        for (std::size_t a = 0; a < d.profiles; ++a)
          for (std::size_t t = 0; t < X; ++t)
            if (d.p(s, a, t) != S(0)) reach[(k + 1) * X + t] = true;
  std::vector<std::size_t> cells;
  std::vector<std::size_t> slot_of(N * X, 0);
  for (std::size_t c = 0; c < N * X; ++c)
    if (reach[c]) {
      slot_of[c] = cells.size();
      cells.push_back(c);
    }
  std::vector<std::size_t> free_players;
  for (std::size_t i = 0; i < d.n; ++i)
    if (!frozen[i]) free_players.push_back(i);
  std::vector<std::size_t> digits(free_players.size() * cells.size(), 0);
  S best = S(0);
  bool first = true;
  while (true) {
    Rule rule = [&](std::size_t j, std::size_t k, std::size_t s) -> std::size_t {
      if (frozen[j]) return *frozen[j];
      if (!reach[k * X + s]) return 0;
      const std::size_t f = static_cast<std::size_t>(std::find(free_players.begin(), free_players.end(), j) -
                                                     free_players.begin());
      return digits[f * cells.size() + slot_of[k * X + s]];
    };
    const auto v = evaluate(d, rule);
    S total = S(0);
    for (std::size_t i = 0; i < d.n; ++i)
      if (counted[i]) total += v[i][s0];
    if (first || total > best) best = total;
    first = false;
    std::size_t pos = 0;
    while (pos < digits.size() && ++digits[pos] == d.space.count(free_players[pos / cells.size()])) digits[pos++] = 0;
    if (pos == digits.size()) break;
  }
  return best;
}

/// Phase-1 simplex with Bland's rule on a . y (<= or =) b with free y, in floating point.
/// Returns true when the system is feasible up to 1e-9.
inline bool simplex_feasible(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                             const std::vector<bool>& equality) {
  const std::size_t m = A.size();
  if (m == 0) return true;
  const std::size_t nv = A[0].size();
  // Columns: y+ (nv), y- (nv), slacks (m), artificials (m), rhs.
  const std::size_t cols = 2 * nv + 2 * m;
  std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double sign = b[r] < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < nv; ++j) {
      T[r][j] = sign * A[r][j];
      T[r][nv + j] = -sign * A[r][j];
    }
    if (!equality[r]) T[r][2 * nv + r] = sign;
    T[r][2 * nv + m + r] = 1.0;
    T[r][cols] = sign * b[r];
    basis[r] = 2 * nv + m + r;
  }
  // Objective row: minimize the sum of artificials, expressed in nonbasic terms.
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j <= cols; ++j)
      if (j < 2 * nv + m || j == cols) T[m][j] -= T[r][j];
  for (int iter = 0; iter < 100000; ++iter) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols; ++j)
      if (T[m][j] < -1e-12) {
        enter = j;
        break;
      }
    if (enter == cols) break;
    std::size_t leave = m;
    double ratio = 0;
    for (std::size_t r = 0; r < m; ++r)
      if (T[r][enter] > 1e-12) {
        double q = T[r][cols] / T[r][enter];
        if (leave == m || q < ratio - 1e-12 || (std::abs(q - ratio) <= 1e-12 && basis[r] < basis[leave])) {
          leave = r;
          ratio = q;
        }
      }
    if (leave == m) break;  // unbounded cannot happen in phase 1
    const double piv = T[leave][enter];
    for (double& v : T[leave]) v /= piv;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave || T[r][enter] == 0.0) continue;
      const double f = T[r][enter];
      for (std::size_t j = 0; j <= cols; ++j) T[r][j] -= f * T[leave][j];
    }
    basis[leave] = enter;
  }
  return -T[m][cols] <= 1e-9;
}

/// Random token-free game with at most `max_states` joint states and at most two controls per
/// player; rates, payoffs and costs are small dyadic rationals so every value is exact in doubles.
inline GameSpec random_small_game(std::mt19937_64& rng, std::size_t max_states, std::size_t stages) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto dyadic = [&](int lo, int hi) {
    return Rational(std::uniform_int_distribution<int>(lo, hi)(rng), 4);
  };
  const std::vector<PlayerState> pool = {PlayerState::Active, PlayerState::Sleep, PlayerState::DeadOut};
  std::vector<std::vector<std::size_t>> shapes;
  for (std::size_t a = 1; a <= 3 && a <= max_states; ++a) {
    shapes.push_back({a});
    for (std::size_t b = 1; b <= 3 && a * b <= max_states; ++b) shapes.push_back({a, b});
  }
  const std::vector<std::size_t> shape = shapes[pick(0, shapes.size() - 1)];
  const std::size_t n = shape.size();
  std::vector<std::vector<PlayerState>> allowed;
  for (std::size_t count : shape) allowed.emplace_back(pool.begin(), pool.begin() + static_cast<long>(count));
  ltg::ControlGrid controls;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = pick(1, 2);
    std::vector<ltg::ControlPoint> grid;
    for (std::size_t j = 0; j < c; ++j) grid.push_back({static_cast<double>(j)});
    controls.push_back(grid);
  }
  const Rational horizon = 1;
  GameSpec g = ltg::make_empty_game(allowed, controls, horizon);
  const ltg::StateSpace ss = g.state_space();
  const ltg::ProfileSpace ps = g.profile_space();
  Rational max_exit = 0;
  for (std::size_t s = 0; s < ss.size(); ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < controls[i].size(); ++c) {
        Rational total = 0;
        for (PlayerState q : allowed[i]) {
          if (q == ss.player_state(s, i) || pick(0, 2) == 0) continue;
          Rational r = dyadic(0, 4);
          if (r == 0) continue;
          g.rates.entries[ltg::RateKey{s, i, q, c}] = r;
          total += r;
        }
        max_exit = std::max(max_exit, total);
      }
  for (std::size_t s = 0; s < ss.size(); ++s)
    for (std::size_t a = 0; a < ps.size(); ++a)
      for (std::size_t i = 0; i < n; ++i)
        if (pick(0, 1) == 0) g.payoffs.benefit[ltg::BenefitKey{s, a, i}] = dyadic(-4, 4);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < controls[i].size(); ++c) g.payoffs.control_cost[i][c] = dyadic(0, 2);
    for (PlayerState from : allowed[i])
      for (PlayerState to : allowed[i])
        if (from != to) g.payoffs.switch_cost[i][static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] = dyadic(0, 4);
  }
  for (auto& phi : g.payoffs.terminal) phi = dyadic(-4, 4);
  if (n == 2 && allowed[0].front() == PlayerState::Active && allowed[1].front() == PlayerState::Active && pick(0, 1))
    g.edges.push_back(ltg::EdgeSpec{0, 1, ltg::EdgeKind::ContinuousFlow, 0, dyadic(1, 4), -1});
  // Enough rate headroom for the sum over players, and gamma = stages / horizon.
  Rational lambda = max_exit * static_cast<long long>(n);
  const Rational gamma = Rational(static_cast<long long>(stages)) / horizon;
  g.rates.lambda_max = std::min(lambda, gamma);
  if (lambda > gamma) {
    // Scale every rate down so the bound holds at this gamma.
    for (auto& [key, r] : g.rates.entries) r = r * gamma / lambda;
  }
  for (std::size_t i = 0; i < n; ++i) g.initial_state[i] = allowed[i][pick(0, allowed[i].size() - 1)];
  return ltg::validate_game(std::move(g));
}

}  // namespace oracle
