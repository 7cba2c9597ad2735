#include "ltg/inertia.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ltg/simulate.hpp"

namespace ltg {

namespace {

template <class S>
S abs_value(const S& v) {
  return v < 0 ? S(-v) : v;
}

// Total-variation distance between the next-state laws of two rows.
template <class S>
S tv_distance(const UniformizedGame<S>& ug, std::size_t r1, std::size_t r2) {
  std::vector<S> diff(ug.states, S(0));
  for (std::size_t j = ug.row_begin[r1]; j < ug.row_begin[r1 + 1]; ++j) diff[ug.arcs[j].target] += ug.arcs[j].prob;
  for (std::size_t j = ug.row_begin[r2]; j < ug.row_begin[r2 + 1]; ++j) diff[ug.arcs[j].target] -= ug.arcs[j].prob;
  S total = S(0);
  for (const S& d : diff) total += abs_value(d);
  return total / 2;
}

template <class S>
S from_rational(const Rational& r) {
  return scalar_from<S>(r);
}

}  // namespace

template <class S>
std::optional<S> deviation_gain(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t i,
                                std::size_t k, std::size_t x, double tol) {
  if (i >= ug.n || k >= ug.stages || x >= ug.states)
    throw std::invalid_argument("deviation_gain: player, stage or state out of range");
  const std::size_t C = ug.profile_space.count(i);
  if (C < 2) return std::nullopt;
  const ValueTable<S> v = joint_value(ug, profile);
  const BestResponse<S> br = best_response(ug, profile, i);
  const std::size_t X = ug.states;
  const S value = v.at(i, k, x);
  const S raw = br.value[k * X + x] - value;
  bool improving;
  if constexpr (std::is_same_v<S, double>) {
    improving = raw > tol;
  } else {
    improving = raw > Rational(tol);
  }
  if (improving) return raw;

  const std::size_t a0 = profile.profile_index(ug.profile_space, k, x);
  const std::size_t own = ug.profile_space.control(a0, i);
  const S* next = &br.value[(k + 1) * X];
  const S scale = from_rational<S>(ug.gamma * ug.remaining(k));
  std::optional<S> best;
  for (std::size_t c = 0; c < C; ++c) {
    if (c == own) continue;
    const std::size_t a = ug.profile_space.with_control(a0, i, c);
    const S gap = q_value(ug, k, x, a, i, next) - value;
    const S m = tv_distance(ug, ug.row(x, a), ug.row(x, a0));
    const S d = m > 0 ? S(gap / m) : S(gap * scale);
    if (!best || d > *best) best = d;
  }
  return best;
}

template <class S>
InertiaReport<S> inertia_depth(const UniformizedGame<S>& ug, const PolicyProfile& profile, std::size_t k,
                               std::size_t x, double tol, double epsilon) {
  if (k >= ug.stages) throw std::invalid_argument("inertia_depth: no time remains after the evaluation stage");
  auto check = verify_mpe(ug, profile, tol, GainScope::at(k, x));
  if (!check.is_mpe) throw std::invalid_argument("inertia_depth: profile is not an MPE from the evaluation point");
  InertiaReport<S> report;
  report.stage = k;
  report.state = x;
  report.remaining = ug.remaining(k);
  bool any = false;
  for (std::size_t i = 0; i < ug.n; ++i) {
    report.deviation.push_back(deviation_gain(ug, profile, i, k, x, tol));
    if (!report.deviation.back()) continue;
    S minus = -*report.deviation.back();
    if (!any || minus < report.theta) report.theta = minus;
    any = true;
  }
  const S rem = from_rational<S>(report.remaining);
  report.epsilon = epsilon >= 0 ? epsilon : std::max(1e-3 * scalar_to_double(report.theta), 1e-6);
  report.survival_delta = report.theta / (2 * rem);
  S eps;
  if constexpr (std::is_same_v<S, double>) {
    eps = report.epsilon;
  } else {
    eps = rational_from_double(report.epsilon);
  }
  report.converse_delta = report.theta / rem + eps;
  return report;
}

TransferTable converse_transfer(const GameSpec& spec, double theta, double remaining, double epsilon,
                                const JointState& s_sq) {
  if (!(remaining > 0)) throw std::invalid_argument("converse_transfer: requires T > t");
  if (!(epsilon > 0)) throw std::invalid_argument("converse_transfer: epsilon must be positive");
  return concentrated_transfers(spec, -(theta / remaining + epsilon), s_sq, false);
}

TransferTable concentrated_transfers(const GameSpec& spec, double value, const JointState& s_sq, bool off_sq) {
  const StateSpace ss = spec.state_space();
  const ProfileSpace ps = spec.profile_space();
  const std::size_t target = ss.encode(s_sq);
  TransferTable table(1, ss.size(), ps.size(), spec.n);
  for (std::size_t s = 0; s < ss.size(); ++s) {
    if ((s == target) == off_sq) continue;
    for (std::size_t a = 0; a < ps.size(); ++a)
      for (std::size_t i = 0; i < spec.n; ++i) table.set(0, s, a, i, value);
  }
  return table;
}

TransferTable random_transfers(const GameSpec& spec, std::size_t stages, double bound, std::uint64_t seed) {
  const StateSpace ss = spec.state_space();
  const ProfileSpace ps = spec.profile_space();
  TransferTable table(std::max<std::size_t>(stages, 1), ss.size(), ps.size(), spec.n);
  std::mt19937_64 rng(path_seed(seed, 0));
  for (std::size_t k = 0; k < table.stages(); ++k)
    for (std::size_t s = 0; s < ss.size(); ++s)
      for (std::size_t a = 0; a < ps.size(); ++a)
        for (std::size_t i = 0; i < spec.n; ++i) {
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          table.set(k, s, a, i, bound * (2.0 * u - 1.0));
        }
  return table;
}

SurvivalResult test_survival(const GameSpec& spec, const Rational& gamma, const PolicyProfile& profile,
                             const TransferTable& transfers, double tol, GainScope scope) {
  const GameSpec induced = apply_transfers(spec, transfers);
  const UniformizedGame<double> ug = uniformize<double>(induced, gamma);
  SurvivalResult out;
  out.report = verify_mpe(ug, profile, tol, scope);
  out.survives = out.report.is_mpe;
  out.survives_everywhere = scope.from_point ? verify_mpe(ug, profile, tol).is_mpe : out.survives;
  return out;
}

template std::optional<double> deviation_gain<double>(const UniformizedGame<double>&, const PolicyProfile&,
                                                      std::size_t, std::size_t, std::size_t, double);
template std::optional<Rational> deviation_gain<Rational>(const UniformizedGame<Rational>&, const PolicyProfile&,
                                                          std::size_t, std::size_t, std::size_t, double);
template InertiaReport<double> inertia_depth<double>(const UniformizedGame<double>&, const PolicyProfile&,
                                                     std::size_t, std::size_t, double, double);
template InertiaReport<Rational> inertia_depth<Rational>(const UniformizedGame<Rational>&, const PolicyProfile&,
                                                         std::size_t, std::size_t, double, double);

}  // namespace ltg
