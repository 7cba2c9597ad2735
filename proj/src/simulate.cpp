#include "ltg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace ltg {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform on [0, 1) from the top 53 bits; independent of the standard library's distributions.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Exit {
  std::size_t target;
  std::size_t player;
  PlayerState from;
  PlayerState to;
  double rate;
  double kappa;
};

// Double-precision view of the continuous-time model, built directly from the GameSpec tables.
struct Dynamics {
  std::size_t n = 0, states = 0, profiles = 0;
  std::vector<std::vector<Exit>> exits;  // [s * profiles + a]
  std::vector<double> total;             // [s * profiles + a]
  std::vector<double> flow;              // [(s * profiles + a) * n + i], b - c per unit time
  std::vector<double> terminal;          // [s * n + i]
};

Dynamics build(const GameSpec& spec) {
  Dynamics d;
  StateSpace ss = spec.state_space();
  ProfileSpace ps = spec.profile_space();
  d.n = spec.n;
  d.states = ss.size();
  d.profiles = ps.size();
  d.exits.resize(d.states * d.profiles);
  d.total.assign(d.states * d.profiles, 0.0);
  d.flow.assign(d.states * d.profiles * d.n, 0.0);
  for (std::size_t s = 0; s < d.states; ++s)
    for (std::size_t a = 0; a < d.profiles; ++a) {
      const std::size_t r = s * d.profiles + a;
      auto b = benefit_rate(spec, s, a);
      for (std::size_t i = 0; i < d.n; ++i) {
        const std::size_t c = ps.control(a, i);
        d.flow[r * d.n + i] = to_double(b[i] - spec.payoffs.control_cost[i][c]);
        const PlayerState from = ss.player_state(s, i);
        for (PlayerState q : spec.allowed_states[i]) {
          Rational rate = spec.rates.rate(s, i, q, c);
          if (rate == 0) continue;
          double kappa =
              to_double(spec.payoffs.switch_cost[i][static_cast<std::size_t>(from)][static_cast<std::size_t>(q)]);
          d.exits[r].push_back({ss.with_player(s, i, q), i, from, q, to_double(rate), kappa});
          d.total[r] += to_double(rate);
        }
      }
    }
  d.terminal.resize(d.states * d.n);
  for (std::size_t j = 0; j < d.terminal.size(); ++j) d.terminal[j] = to_double(spec.payoffs.terminal[j]);
  return d;
}

bool same_transfers(const TransferTable& t, std::size_t k1, std::size_t k2, std::size_t s, std::size_t a,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (t.at(k1, s, a, i) != t.at(k2, s, a, i)) return false;
  return true;
}

std::vector<double> run_path(const GameSpec& spec, const Dynamics& d, const PolicyProfile& profile, double gamma,
                             double horizon, double t0, std::size_t s0, std::uint64_t seed, Trajectory* record) {
  std::mt19937_64 rng(seed);
  const ProfileSpace ps = spec.profile_space();
  const StateSpace ss = spec.state_space();
  std::vector<double> payoff(d.n, 0.0);
  double tau = t0;
  std::size_t s = s0;
  const std::size_t last_stage = profile.stages == 0 ? 0 : profile.stages - 1;
  // The stage counter advances only at boundaries, so rounding in tau * gamma cannot stall it.
  std::size_t k = std::min(static_cast<std::size_t>(std::floor(tau * gamma)), last_stage);
  const bool varying_transfers = spec.transfers && spec.transfers->stages() > 1;
  const bool constant_stages = profile.stationary() && !varying_transfers;
  while (tau < horizon) {
    const std::size_t a = profile.profile_index(ps, k, s);
    const std::size_t r = s * d.profiles + a;
    // Clocks are memoryless, so one draw covers every stage until the controls or transfers change.
    std::size_t next = last_stage + 1;
    if (!constant_stages) {
      next = k + 1;
      while (next <= last_stage && profile.profile_index(ps, next, s) == a &&
             (!varying_transfers || same_transfers(*spec.transfers, k, next, s, a, d.n)))
        ++next;
    }
    const double boundary = next > last_stage ? horizon : std::min(horizon, static_cast<double>(next) / gamma);
    if (record) {
      Segment seg{tau, ss.decode(s), ps.decode(a)};
      if (record->segments.empty() || record->segments.back().state != seg.state ||
          record->segments.back().controls != seg.controls)
        record->segments.push_back(std::move(seg));
    }
    double until = boundary;
    const Exit* fired = nullptr;
    if (d.total[r] > 0) {
      const double wait = -std::log1p(-uniform01(rng)) / d.total[r];
      if (tau + wait < boundary) {
        until = tau + wait;
        double pick = uniform01(rng) * d.total[r];
        fired = &d.exits[r].back();
        for (const Exit& e : d.exits[r]) {
          if (pick < e.rate) {
            fired = &e;
            break;
          }
          pick -= e.rate;
        }
      }
    }
    const double dt = until - tau;
    for (std::size_t i = 0; i < d.n; ++i) {
      double rate = d.flow[r * d.n + i];
      if (spec.transfers) rate += spec.transfers->at(k, s, a, i);
      payoff[i] += rate * dt;
    }
    tau = until;
    if (fired) {
      payoff[fired->player] -= fired->kappa;
      if (record) record->jumps.push_back({tau, fired->player, fired->from, fired->to});
      s = fired->target;
    }
    if (!fired) {
      if (boundary >= horizon) break;
      k = std::min(next, last_stage);
    }
  }
  for (std::size_t i = 0; i < d.n; ++i) payoff[i] += d.terminal[s * d.n + i];
  if (record) {
    record->end = horizon;
    record->payoff = payoff;
  }
  return payoff;
}

}  // namespace

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

SimulationResult simulate(const GameSpec& input, const PolicyProfile& profile, const Rational& gamma, double t0,
                          const JointState& s0, std::uint64_t seed, std::size_t paths) {
  if (paths == 0) throw std::invalid_argument("simulate: need at least one path");
  const GameSpec spec = input.validated() ? input : validate_game(input);
  for (const auto& e : spec.edges)
    if (edge_needs_token(e))
      throw std::invalid_argument("simulate: transport edges with positive latency are not supported");
  const double horizon = to_double(spec.horizon);
  if (!(t0 >= 0 && (t0 < horizon || horizon == 0)))
    throw std::invalid_argument("simulate: start time outside [0, T)");
  const StateSpace ss = spec.state_space();
  if (profile.states != ss.size() || profile.players.size() != spec.n)
    throw std::invalid_argument("simulate: policy profile does not match the game");
  const std::size_t start = ss.encode(s0);
  const Dynamics d = build(spec);
  const double g = to_double(gamma);

  std::vector<double> samples(paths * spec.n);
  SimulationResult result;
  result.paths = paths;
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
  auto work = [&](std::size_t w) {
    for (std::size_t p = w; p < paths; p += workers) {
      auto pay = run_path(spec, d, profile, g, horizon, t0, start, path_seed(seed, p), p == 0 ? &result.sample : nullptr);
      std::copy(pay.begin(), pay.end(), samples.begin() + static_cast<std::ptrdiff_t>(p * spec.n));
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }

  result.mean.assign(spec.n, 0.0);
  result.std_error.assign(spec.n, 0.0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double sum = 0;
    for (std::size_t p = 0; p < paths; ++p) sum += samples[p * spec.n + i];
    const double mean = sum / static_cast<double>(paths);
    double sq = 0;
    for (std::size_t p = 0; p < paths; ++p) {
      double dev = samples[p * spec.n + i] - mean;
      sq += dev * dev;
    }
    result.mean[i] = mean;
    result.std_error[i] = paths > 1 ? std::sqrt(sq / static_cast<double>(paths - 1) / static_cast<double>(paths)) : 0.0;
  }
  return result;
}

}  // namespace ltg
