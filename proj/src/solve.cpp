#include "ltg/solve.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace ltg {

namespace {

// Lowest-index tie-breaking: a candidate displaces the incumbent only when strictly larger.
// Doubles use a relative epsilon so that reordered but equal sums do not flip the choice.
bool strictly_greater(double candidate, double incumbent) {
  return candidate > incumbent + 1e-12 * (1.0 + std::abs(incumbent));
}
bool strictly_greater(const Rational& candidate, const Rational& incumbent) { return candidate > incumbent; }

template <class S>
bool exceeds_tol(const S& gain, double tol) {
  if constexpr (std::is_same_v<S, double>) {
    return gain > tol;
  } else {
    return gain > Rational(tol);
  }
}

}  // namespace

bool PolicyProfile::stationary() const {
  return std::all_of(players.begin(), players.end(), [](const PlayerPolicy& p) { return p.stationary; });
}

std::size_t PolicyProfile::profile_index(const ProfileSpace& space, std::size_t k, std::size_t x) const {
  std::size_t a = 0;
  for (std::size_t i = 0; i < players.size(); ++i) a = space.with_control(a, i, control(i, k, x));
  return a;
}

PlayerPolicy constant_policy(std::size_t states, std::size_t control) {
  return PlayerPolicy{true, std::vector<std::uint32_t>(states, static_cast<std::uint32_t>(control))};
}

template <class S>
PolicyProfile constant_profile(const UniformizedGame<S>& ug, const std::vector<std::size_t>& controls) {
  if (controls.size() != ug.n) throw std::invalid_argument("constant_profile: wrong player count");
  PolicyProfile profile{ug.stages, ug.states, {}};
  for (std::size_t c : controls) profile.players.push_back(constant_policy(ug.states, c));
  check_profile(ug, profile);
  return profile;
}

template <class S>
void check_profile(const UniformizedGame<S>& ug, const PolicyProfile& profile) {
  if (profile.players.size() != ug.n) throw std::invalid_argument("policy profile has wrong player count");
  if (profile.states != ug.states) throw std::invalid_argument("policy profile has wrong state count");
  for (std::size_t i = 0; i < ug.n; ++i) {
    const PlayerPolicy& p = profile.players[i];
    std::size_t expected = p.stationary ? ug.states : ug.stages * ug.states;
    if (p.controls.size() != expected)
      throw std::invalid_argument("policy of player " + std::to_string(i) + " has " +
                                  std::to_string(p.controls.size()) + " entries, expected " +
                                  std::to_string(expected));
    for (auto c : p.controls)
      if (c >= ug.profile_space.count(i))
        throw std::invalid_argument("policy of player " + std::to_string(i) + " uses control " + std::to_string(c) +
                                    " outside its grid");
  }
}

template <class S>
S q_value(const UniformizedGame<S>& ug, std::size_t k, std::size_t x, std::size_t a, std::size_t i, const S* next) {
  const std::size_t r = ug.row(x, a);
  S q = ug.stage_reward[r * ug.n + i] - ug.switch_cost[r * ug.n + i] + ug.transfer_at(k, x, a, i);
  for (std::size_t j = ug.row_begin[r]; j < ug.row_begin[r + 1]; ++j) q += ug.arcs[j].prob * next[ug.arcs[j].target];
  return q;
}

template <class S>
ValueTable<S> joint_value(const UniformizedGame<S>& ug, const PolicyProfile& profile) {
  check_profile(ug, profile);
  const std::size_t X = ug.states, N = ug.stages;
  ValueTable<S> table{N, X, std::vector<std::vector<S>>(ug.n, std::vector<S>((N + 1) * X))};
  for (std::size_t i = 0; i < ug.n; ++i)
    for (std::size_t x = 0; x < X; ++x) table.values[i][N * X + x] = ug.terminal[x * ug.n + i];
  for (std::size_t k = N; k-- > 0;) {
    for (std::size_t x = 0; x < X; ++x) {
      const std::size_t a = profile.profile_index(ug.profile_space, k, x);
      for (std::size_t i = 0; i < ug.n; ++i)
        table.values[i][k * X + x] = q_value(ug, k, x, a, i, &table.values[i][(k + 1) * X]);
    }
  }
  return table;
}

template <class S>
BestResponse<S> best_response(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t i) {
  check_profile(ug, profile);
  if (i >= ug.n) throw std::invalid_argument("best_response: player index out of range");
  const std::size_t X = ug.states, N = ug.stages, C = ug.profile_space.count(i);
  BestResponse<S> out;
  out.policy.stationary = false;
  out.policy.controls.assign(N * X, 0);
  out.value.resize((N + 1) * X);
  for (std::size_t x = 0; x < X; ++x) out.value[N * X + x] = ug.terminal[x * ug.n + i];
  std::vector<S> q(C);
  for (std::size_t k = N; k-- > 0;) {
    const S* next = &out.value[(k + 1) * X];
    for (std::size_t x = 0; x < X; ++x) {
      const std::size_t base = profile.profile_index(ug.profile_space, k, x);
      std::size_t best = 0;
      for (std::size_t c = 0; c < C; ++c) {
        q[c] = q_value(ug, k, x, ug.profile_space.with_control(base, i, c), i, next);
        if (q[c] > q[best]) best = c;
      }
      std::size_t chosen = 0;
      while (strictly_greater(q[best], q[chosen])) ++chosen;
      out.value[k * X + x] = q[best];
      out.policy.controls[k * X + x] = static_cast<std::uint32_t>(chosen);
    }
  }
  return out;
}

template <class S>
std::vector<bool> reachable(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t k0,
                            std::size_t x0) {
  const std::size_t X = ug.states, N = ug.stages;
  if (k0 > N || x0 >= X) throw std::invalid_argument("reachable: evaluation point out of range");
  std::vector<bool> reach((N + 1) * X, false);
  reach[k0 * X + x0] = true;
  for (std::size_t k = k0; k < N; ++k)
    for (std::size_t x = 0; x < X; ++x) {
      if (!reach[k * X + x]) continue;
      const std::size_t r = ug.row(x, profile.profile_index(ug.profile_space, k, x));
      for (std::size_t j = ug.row_begin[r]; j < ug.row_begin[r + 1]; ++j)
        if (ug.arcs[j].prob > 0) reach[(k + 1) * X + ug.arcs[j].target] = true;
    }
  return reach;
}

template <class S>
EquilibriumReport<S> verify_mpe(const UniformizedGame<S>& ug, const PolicyProfile& profile, double tol,
                                GainScope scope) {
  if (tol < 0) throw std::invalid_argument("verify_mpe: negative tolerance");
  const ValueTable<S> v = joint_value(ug, profile);
  const std::size_t X = ug.states, N = ug.stages;
  std::vector<bool> in_scope;
  if (scope.from_point) in_scope = reachable(ug, profile, scope.stage, scope.state);

  EquilibriumReport<S> report;
  report.tol = tol;
  report.gain.assign(ug.n, S(0));
  report.gain_stage.assign(ug.n, 0);
  report.gain_state.assign(ug.n, scope.from_point ? scope.state : 0);
  std::optional<S> worst;
  for (std::size_t i = 0; i < ug.n; ++i) {
    BestResponse<S> br = best_response(ug, profile, i);
    bool first = true;
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t x = 0; x < X; ++x) {
        if (scope.from_point && !in_scope[k * X + x]) continue;
        S g = br.value[k * X + x] - v.values[i][k * X + x];
        if (first || g > report.gain[i]) {
          report.gain[i] = g;
          report.gain_stage[i] = k;
          report.gain_state[i] = x;
          first = false;
        }
      }
    if (exceeds_tol(report.gain[i], tol)) {
      report.is_mpe = false;
      if (!worst || report.gain[i] > *worst) {
        worst = report.gain[i];
        report.witness_player = i;
        report.witness = std::move(br.policy);
      }
    }
  }
  return report;
}

template <class S>
SocialOptimum<S> social_optimum(const UniformizedGame<S>& ug, const PlannerOptions& options) {
  const std::size_t X = ug.states, N = ug.stages, n = ug.n;
  std::vector<bool> counted = options.counted.empty() ? std::vector<bool>(n, true) : options.counted;
  if (counted.size() != n) throw std::invalid_argument("social_optimum: counted mask has wrong length");
  std::vector<std::optional<PlayerPolicy>> fixed = options.fixed;
  if (fixed.empty()) fixed.resize(n);
  if (fixed.size() != n) throw std::invalid_argument("social_optimum: fixed list has wrong length");
  for (std::size_t i = 0; i < n; ++i)
    if (fixed[i]) {
      std::size_t expected = fixed[i]->stationary ? X : N * X;
      if (fixed[i]->controls.size() != expected)
        throw std::invalid_argument("social_optimum: fixed policy of player " + std::to_string(i) +
                                    " has the wrong size");
    }

  SocialOptimum<S> out;
  out.policy.stages = N;
  out.policy.states = X;
  out.policy.players.assign(n, PlayerPolicy{false, std::vector<std::uint32_t>(N * X, 0)});
  out.welfare.assign((N + 1) * X, S(0));
  for (std::size_t x = 0; x < X; ++x)
    for (std::size_t i = 0; i < n; ++i)
      if (counted[i]) out.welfare[N * X + x] += ug.terminal[x * n + i];

  for (std::size_t k = N; k-- > 0;) {
    const S* next = &out.welfare[(k + 1) * X];
    for (std::size_t x = 0; x < X; ++x) {
      std::optional<S> best;
      std::size_t best_a = 0;
      for (std::size_t a = 0; a < ug.profiles; ++a) {
        bool allowed = true;
        for (std::size_t i = 0; i < n && allowed; ++i)
          if (fixed[i]) {
            const PlayerPolicy& p = *fixed[i];
            allowed = ug.profile_space.control(a, i) == p.controls[p.stationary ? x : k * X + x];
          }
        if (!allowed) continue;
        const std::size_t r = ug.row(x, a);
        S w = S(0);
        for (std::size_t i = 0; i < n; ++i)
          if (counted[i]) w += ug.stage_reward[r * n + i] - ug.switch_cost[r * n + i] + ug.transfer_at(k, x, a, i);
        for (std::size_t j = ug.row_begin[r]; j < ug.row_begin[r + 1]; ++j) w += ug.arcs[j].prob * next[ug.arcs[j].target];
        if (!best || strictly_greater(w, *best)) {
          best = w;
          best_a = a;
        }
      }
      if (!best) throw std::invalid_argument("social_optimum: fixed policies admit no profile");
      out.welfare[k * X + x] = *best;
      for (std::size_t i = 0; i < n; ++i)
        out.policy.players[i].controls[k * X + x] = static_cast<std::uint32_t>(ug.profile_space.control(best_a, i));
    }
  }
  return out;
}

template <class S>
std::uint64_t stationary_count(const UniformizedGame<S>& ug, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < ug.n; ++i)
    for (std::size_t x = 0; x < ug.states; ++x) {
      std::uint64_t c = ug.profile_space.count(i);
      if (c != 0 && total > cap / c) throw std::length_error("stationary profile count exceeds the enumeration cap");
      total *= c;
    }
  if (total > cap) throw std::length_error("stationary profile count exceeds the enumeration cap");
  return total;
}

template <class S>
PolicyProfile decode_stationary(const UniformizedGame<S>& ug, std::uint64_t code) {
  PolicyProfile profile{ug.stages, ug.states, {}};
  profile.players.assign(ug.n, PlayerPolicy{true, std::vector<std::uint32_t>(ug.states, 0)});
  for (std::size_t i = ug.n; i-- > 0;) {
    const std::uint64_t c = ug.profile_space.count(i);
    for (std::size_t x = ug.states; x-- > 0;) {
      profile.players[i].controls[x] = static_cast<std::uint32_t>(code % c);
      code /= c;
    }
  }
  return profile;
}

template <class S>
std::vector<MpeCandidate<S>> enumerate_mpe(const UniformizedGame<S>& ug, double tol, std::uint64_t cap) {
  const std::uint64_t total = stationary_count(ug, cap);
  const std::size_t workers =
      static_cast<std::size_t>(std::clamp<std::uint64_t>(std::thread::hardware_concurrency(), 1, total));
  std::vector<std::vector<MpeCandidate<S>>> found(workers);
  auto work = [&](std::size_t w) {
    for (std::uint64_t code = w; code < total; code += workers) {
      PolicyProfile profile = decode_stationary(ug, code);
      auto report = verify_mpe(ug, profile, tol);
      if (report.is_mpe) found[w].push_back({code, std::move(profile), std::move(report)});
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  std::vector<MpeCandidate<S>> out;
  for (auto& part : found)
    for (auto& c : part) out.push_back(std::move(c));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.code < b.code; });
  return out;
}

#define LTG_INSTANTIATE_SOLVE(S)                                                                                 \
  template PolicyProfile constant_profile<S>(const UniformizedGame<S>&, const std::vector<std::size_t>&);        \
  template void check_profile<S>(const UniformizedGame<S>&, const PolicyProfile&);                              \
  template S q_value<S>(const UniformizedGame<S>&, std::size_t, std::size_t, std::size_t, std::size_t, const S*); \
  template ValueTable<S> joint_value<S>(const UniformizedGame<S>&, const PolicyProfile&);                      \
  template BestResponse<S> best_response<S>(const UniformizedGame<S>&, const PolicyProfile&, std::size_t);    \
  template std::vector<bool> reachable<S>(const UniformizedGame<S>&, const PolicyProfile&, std::size_t,        \
                                          std::size_t);                                                        \
  template EquilibriumReport<S> verify_mpe<S>(const UniformizedGame<S>&, const PolicyProfile&, double,        \
                                              GainScope);                                                      \
  template SocialOptimum<S> social_optimum<S>(const UniformizedGame<S>&, const PlannerOptions&);               \
  template std::uint64_t stationary_count<S>(const UniformizedGame<S>&, std::uint64_t);                       \
  template PolicyProfile decode_stationary<S>(const UniformizedGame<S>&, std::uint64_t);                      \
  template std::vector<MpeCandidate<S>> enumerate_mpe<S>(const UniformizedGame<S>&, double, std::uint64_t);

LTG_INSTANTIATE_SOLVE(double)
LTG_INSTANTIATE_SOLVE(Rational)

}  // namespace ltg
