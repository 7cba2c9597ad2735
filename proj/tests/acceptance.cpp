// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "ltg/inertia.hpp"
#include "ltg/scenario.hpp"
#include "ltg/simulate.hpp"
#include "oracle.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace ltg;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double welfare(const UniformizedGame<double>& ug, const PolicyProfile& p) {
  const auto v = joint_value(ug, p);
  double sum = 0;
  for (std::size_t i = 0; i < ug.n; ++i) sum += v.at(i, 0, initial_index(ug));
  return sum;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

// 1. DP against Monte Carlo on five corpus games, every constant profile, 1e5 paths each.
Outcome uniformization_fidelity() {
  const Rational gamma = 2000;
  const std::size_t paths = 100000;
  std::size_t comparisons = 0, within = 0;
  double worst_z = 0;
  for (const char* name : {"single_decay", "coordination_cf", "coordination_dt0", "asym_two_player", "dead_states"}) {
    const GameSpec g = support::corpus_game(name);
    const auto ug = uniformize<double>(g, gamma);
    for (std::size_t a = 0; a < ug.profile_space.size(); ++a) {
      const PolicyProfile p = constant_profile(ug, ug.profile_space.decode(a));
      const auto v = joint_value(ug, p);
      const auto sim = simulate(g, p, gamma, 0.0, g.initial_state, path_seed(20261017, comparisons), paths);
      for (std::size_t i = 0; i < ug.n; ++i) {
        const double diff = std::abs(v.at(i, 0, initial_index(ug)) - sim.mean[i]);
        ++comparisons;
        within += diff <= 3 * sim.std_error[i] + 1e-12;
        // Near-deterministic payoffs have a vanishing standard error; z is only meaningful above rounding.
        if (sim.std_error[i] > 1e-9) worst_z = std::max(worst_z, diff / sim.std_error[i]);
      }
    }
  }
  return {within == comparisons, std::to_string(within) + "/" + std::to_string(comparisons) +
                                     " within 3 SE, max |z| " + format_double(worst_z)};
}

struct Inertia {
  DominanceFamily family;
  UniformizedGame<double> ug;
  PolicyProfile sq;
  std::size_t x0;
  InertiaReport<double> depth;
};

Inertia inertia_setup(const Rational& gamma) {
  DominanceFamily f = dominance_family(10, 1, gamma);
  auto ug = uniformize<double>(f.continuous, gamma);
  PolicyProfile sq = status_quo(ug);
  const std::size_t x0 = initial_index(ug);
  InertiaReport<double> depth = inertia_depth(ug, sq, 0, x0, 1e-9);
  return {std::move(f), std::move(ug), std::move(sq), x0, std::move(depth)};
}

// 2. Random transfers strictly below theta / (2 (T - t)) never dislodge the status quo.
Outcome survival(const Inertia& s) {
  const double bound = s.depth.survival_delta * (1 - 1e-6);
  std::size_t survived = 0;
  for (std::size_t j = 0; j < 100; ++j) {
    const TransferTable t = random_transfers(s.family.continuous, s.ug.stages, bound, path_seed(11, j));
    survived += test_survival(s.family.continuous, s.ug.gamma, s.sq, t, 1e-9, GainScope::at(0, s.x0)).survives;
  }
  return {survived == 100 && s.depth.theta > 0, "theta " + format_double(s.depth.theta) + ", bound " +
                                                     format_double(bound) + ", " + std::to_string(survived) +
                                                     "/100 survive"};
}

// 3. The explicit penalty -(theta / (T - t) + epsilon) on the status-quo state eliminates it.
Outcome converse(const Inertia& s) {
  const double eps = 1e-3 * s.depth.theta;
  const TransferTable t = converse_transfer(s.family.continuous, s.depth.theta, to_double(s.depth.remaining), eps,
                                            s.family.continuous.initial_state);
  const GameSpec penalized = apply_transfers(s.family.continuous, t);
  const auto report = verify_mpe(uniformize<double>(penalized, s.ug.gamma), s.sq, 1e-9, GainScope::at(0, s.x0));
  return {!report.is_mpe, "epsilon " + format_double(eps) + ", max gain " + format_double(max_of(report.gain))};
}

// 4. Continuous flow entrenches all-Sleep; discrete transport at latency 0 should unlock activation.
Outcome dominance() {
  const Rational gamma = 40;
  const DominanceFamily f = dominance_family(10, 1, gamma);
  const auto uc = uniformize<double>(f.continuous, gamma), ud = uniformize<double>(f.discrete, gamma);
  const PolicyProfile sqc = status_quo(uc), sqd = status_quo(ud);
  const std::size_t xc = initial_index(uc), xd = initial_index(ud);
  const bool c_mpe = verify_mpe(uc, sqc, 1e-9).is_mpe;
  std::size_t survived = 0;
  for (std::size_t j = 0; j < 100; ++j) {
    const TransferTable t = random_transfers(f.continuous, uc.stages, 10, path_seed(12, j));
    survived += test_survival(f.continuous, gamma, sqc, t, 1e-9, GainScope::at(0, xc)).survives;
  }
  const auto d_report = verify_mpe(ud, sqd, 1e-9, GainScope::at(0, xd));
  const double sq_welfare = welfare(ud, sqd);
  std::optional<double> best;
  for (const auto& m : enumerate_mpe(ud, 1e-9)) {
    const auto sig = outcome_signature(ud, m.profile);
    if (std::find(sig.terminal.begin(), sig.terminal.end(), PlayerState::Active) == sig.terminal.end()) continue;
    const double w = welfare(ud, m.profile);
    if (!best || w > *best) best = w;
  }
  const bool part_i = c_mpe && survived == 100;
  const bool part_ii = !d_report.is_mpe && best && *best > sq_welfare + 1e-9;
  return {part_i && part_ii,
          std::string("(i) ") + (part_i ? "holds" : "fails") + ": CF all-Sleep MPE " + (c_mpe ? "yes" : "no") + ", " +
              std::to_string(survived) + "/100 survive; (ii) " + (part_ii ? "holds" : "fails") +
              ": DT all-Sleep max gain " + format_double(max_of(d_report.gain)) + ", best activating MPE welfare " +
              (best ? format_double(*best) : std::string("none")) + " vs " + format_double(sq_welfare)};
}

// 5. Implementable sets only grow when continuous-flow edges become transport edges.
Outcome monotonicity() {
  const Rational gamma = 40;
  const GameSpec retype = support::corpus_game("coordination_cf");
  const Intervention iv =
      intervention_from_json(read_json_file(support::source_dir() / "corpus/interventions/retype_edge0.json"), retype);
  const DominanceFamily f = dominance_family(10, 1, gamma);
  std::vector<std::pair<std::string, std::pair<GameSpec, GameSpec>>> pairs = {
      {"family_B10", {f.continuous, f.discrete}},
      {"coordination", {retype, induced_game(retype, iv)}},
  };
  const GameSpec asym = support::corpus_game("asym_two_player");
  pairs.push_back({"asym", {asym, induced_game(asym, iv)}});
  bool all_subset = true, strict = false;
  std::string detail;
  for (const auto& [name, games] : pairs) {
    const auto c = implementable_set(uniformize<double>(games.first, gamma), 1e-9);
    const auto d = implementable_set(uniformize<double>(games.second, gamma), 1e-9);
    const bool subset = std::includes(d.begin(), d.end(), c.begin(), c.end());
    all_subset = all_subset && subset;
    if (name == "family_B10") strict = subset && d.size() > c.size();
    detail += name + " " + std::to_string(c.size()) + (subset ? " <= " : " !<= ") + std::to_string(d.size()) + "; ";
  }
  detail += strict ? "strict witness on family_B10" : "no strict witness on family_B10";
  return {all_subset && strict, detail};
}

// 6. Pivot transfers on the bilateral preset: exact EPIC and the deficit bound.
Outcome pivot() {
  const BilateralPreset p = bilateral_preset(Rational(1, 5), Rational(3, 2));
  const EpicReport epic = check_epic(p.base, p.types, pivot_mechanism_spec(p.base, p.types, p.gamma), p.gamma);
  const DeficitReport d = pivot_deficit_bound(p.base, p.types, p.gamma);
  bool bounded = d.bound == 2 * (d.w_max - d.w_min);
  for (const Rational& x : d.deficit) bounded = bounded && x >= 0 && x <= d.bound;
  return {epic.holds && epic.min_difference >= 0 && bounded,
          "EPIC min " + to_string(epic.min_difference) + ", deficit in [" + format_double(to_double(d.min_deficit)) +
              ", " + format_double(to_double(d.max_deficit)) + "], bound " + format_double(to_double(d.bound))};
}

// 7. Certificates on the 8x8 grid of activation costs.
Outcome impossibility() {
  std::size_t cells = 0, verified = 0, infeasible = 0, feasible = 0, feasible_ok = 0;
  for (int a = 1; a <= 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const BilateralPreset p = bilateral_preset(Rational(a, 10), Rational(9 + 2 * b, 10));
      const TradeInstance t = ms_embedding(p.base, p.types, p.gamma);
      const ImpossibilityResult r = impossibility_lp(t);
      ++cells;
      verified += r.verified && verify_certificate(r.system, r.certificate);
      if (r.certificate.feasible) {
        ++feasible;
        const MechanismSpec m = mechanism_from_solution(t, r, p.base);
        feasible_ok += check_epic(p.base, p.types, m, p.gamma).holds && check_budget(m, 2).balanced;
      } else {
        ++infeasible;
      }
    }
  const std::string finding = infeasible > 0 ? std::to_string(infeasible) + " infeasible cells under EPIC+BB+IR"
                                             : "no infeasible cell in the grid under EPIC+BB+IR";
  return {verified == cells && feasible_ok == feasible,
          std::to_string(verified) + "/" + std::to_string(cells) + " certificates verify, " +
              std::to_string(feasible_ok) + "/" + std::to_string(feasible) + " feasible cells pass EPIC and BB, " +
              finding};
}

// 8. Enumeration against the brute-force profile-by-deviation double loop.
Outcome oracle_equivalence() {
  std::size_t games = 0, agree = 0;
  auto compare = [&](const GameSpec& g, const Rational& gamma) {
    std::vector<std::uint64_t> codes;
    for (const auto& c : enumerate_mpe(uniformize<double>(g, gamma), 1e-9)) codes.push_back(c.code);
    ++games;
    agree += codes == oracle::brute_mpe(oracle::build<double>(g, gamma), 1e-9);
  };
  for (const char* name : {"single_decay", "three_state"}) {
    const GameSpec g = support::corpus_game(name);
    compare(g, g.rates.lambda_max);
  }
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t stages = 2 + static_cast<std::size_t>(trial % 2);
    compare(oracle::random_small_game(rng, 3, stages), stages);
  }
  return {agree == games, std::to_string(agree) + "/" + std::to_string(games) + " games agree"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9. Two full corpus runs produce byte-identical report trees.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("ltg-acceptance-" + std::to_string(std::random_device{}()));
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(support::source_dir() / "corpus" / "scenarios")) configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  for (const char* run : {"one", "two"})
    for (const auto& c : configs) {
      const ScenarioConfig cfg = load_scenario(c);
      write_report(run_scenario(cfg), root / run / cfg.name);
    }
  std::size_t files = 0, identical = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "one")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path twin = root / "two" / fs::relative(e.path(), root / "one");
    identical += fs::exists(twin) && slurp(e.path()) == slurp(twin);
  }
  std::size_t twins = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "two")) twins += e.is_regular_file();
  fs::remove_all(root);
  return {files > 0 && identical == files && twins == files,
          std::to_string(configs.size()) + " scenarios, " + std::to_string(identical) + "/" + std::to_string(files) +
              " files identical"};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  std::optional<Inertia> inertia;
  auto fine = [&]() -> const Inertia& {
    // gamma (T - t) must exceed theta / epsilon + 1 for the one-stage delay of a deviation to be affordable.
    if (!inertia) inertia = inertia_setup(8000);
    return *inertia;
  };
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 uniformization fidelity", uniformization_fidelity},
      {"2 survival below theta / (2 (T - t))", [&] { return survival(fine()); }},
      {"3 converse transfer eliminates the status quo", [&] { return converse(fine()); }},
      {"4 continuous flow against discrete transport", dominance},
      {"5 implementable-set monotonicity", monotonicity},
      {"6 pivot mechanism EPIC and deficit bound", pivot},
      {"7 impossibility certificates on the 8x8 grid", impossibility},
      {"8 enumeration matches the brute-force oracle", oracle_equivalence},
      {"9 determinism of full corpus runs", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    failed += !o.passed;
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.1f s", secs);
    std::cout << (o.passed ? "PASS " : "FAIL ") << name << " (" << timing << "): " << o.detail << std::endl;
  }
  std::cout << (9 - failed) << "/9 criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}
