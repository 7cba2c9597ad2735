#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ltg/model.hpp"

namespace ltg {

/// One in-flight token counter per transport edge with positive latency.
/// Counter 0 is idle; a counter of 1 delivers during the current stage.
struct TokenLayout {
  std::vector<std::size_t> edges;       // indices into GameSpec::edges
  std::vector<std::uint32_t> lifetime;  // ceil(latency * gamma), at least 1
  std::size_t combinations = 1;         // prod (lifetime + 1)

  std::vector<std::uint32_t> decode(std::size_t code) const;
  std::size_t encode(std::span<const std::uint32_t> counters) const;
};

/// Discrete-time equivalent of a game at uniformization rate gamma.
/// Augmented state x = base * tokens.combinations + token code.
template <class S>
struct UniformizedGame {
  struct Arc {
    std::size_t target;
    S prob;
  };

  std::shared_ptr<const GameSpec> spec;  // validated source game
  Rational gamma = 0;
  std::size_t stages = 0;
  Rational step = 0;       // 1 / gamma
  Rational horizon = 0;    // stages / gamma (the effective horizon)
  std::size_t n = 0;
  std::size_t base_states = 0;
  std::size_t states = 0;  // augmented
  std::size_t profiles = 0;
  StateSpace state_space;
  ProfileSpace profile_space;
  TokenLayout tokens;

  // Row (x, a) lives in arcs[row_begin[x * profiles + a] .. row_begin[x * profiles + a + 1]).
  std::vector<std::size_t> row_begin;
  std::vector<Arc> arcs;
  std::vector<S> stage_reward;   // [(x * profiles + a) * n + i], (b - c) / gamma
  std::vector<S> switch_cost;    // same key, expected lump cost this stage, >= 0
  std::vector<S> terminal;       // [x * n + i]
  // Stage transfers t / gamma keyed [((k * base_states + s) * profiles + a) * n + i];
  // transfer_stages is 0 (none), 1 (time-invariant) or `stages`.
  std::size_t transfer_stages = 0;
  std::vector<S> transfer;

  std::size_t base_of(std::size_t x) const { return x / tokens.combinations; }
  std::size_t row(std::size_t x, std::size_t a) const { return x * profiles + a; }
  S transfer_at(std::size_t k, std::size_t x, std::size_t a, std::size_t i) const {
    if (transfer_stages == 0) return S(0);
    std::size_t kk = transfer_stages == 1 ? 0 : k;
    return transfer[((kk * base_states + base_of(x)) * profiles + a) * n + i];
  }
  /// Remaining time from stage k to the effective horizon.
  Rational remaining(std::size_t k) const { return Rational(static_cast<long long>(stages - k)) * step; }
};

/// Number of stages ceil(gamma * T).
std::size_t stage_count(const Rational& gamma, const Rational& horizon);

/// Throws std::invalid_argument when gamma < lambda_max or gamma <= 0.
template <class S>
UniformizedGame<S> uniformize(const GameSpec& spec, const Rational& gamma);

/// Augmented index of the game's initial state with idle tokens.
template <class S>
std::size_t initial_index(const UniformizedGame<S>& ug) {
  return ug.state_space.encode(ug.spec->initial_state) * ug.tokens.combinations;
}

extern template UniformizedGame<double> uniformize<double>(const GameSpec&, const Rational&);
extern template UniformizedGame<Rational> uniformize<Rational>(const GameSpec&, const Rational&);

}  // namespace ltg
