#pragma once

#include <cstdint>
#include <vector>

#include "ltg/solve.hpp"

namespace ltg {

struct Segment {
  double start = 0;
  JointState state;
  std::vector<std::size_t> controls;
};

struct Jump {
  double time = 0;
  std::size_t player = 0;
  PlayerState from = PlayerState::Active;
  PlayerState to = PlayerState::Active;
};

struct Trajectory {
  std::vector<Segment> segments;  // start times strictly increasing
  std::vector<Jump> jumps;
  double end = 0;
  std::vector<double> payoff;     // realized, per player
};

struct SimulationResult {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t paths = 0;
  Trajectory sample;  // path 0
};

/// Monte Carlo estimate of each player's expected payoff from (t0, s0) with exact exponential
/// clocks. The profile is read at stage floor(t * gamma); it must be defined on base states,
/// so games whose transport edges carry positive latency are rejected.
SimulationResult simulate(const GameSpec& spec, const PolicyProfile& profile, const Rational& gamma, double t0,
                          const JointState& s0, std::uint64_t seed, std::size_t paths);

/// Sub-seed for path `index`; a pure function of (seed, index).
std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace ltg
