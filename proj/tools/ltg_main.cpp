// Command-line front end: one subcommand per scenario kind plus batch run, report verification,
// and direct access to uniformization and simulation.
#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ltg/scenario.hpp"
#include "ltg/simulate.hpp"

namespace fs = std::filesystem;
using namespace ltg;

namespace {

struct Overrides {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::string gamma;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "Output directory (default $LTG_OUT_ROOT/<name>)");
  cmd->add_option("--seed", o.seed, "Seed override");
  cmd->add_option("--tol", o.tol, "Tolerance override");
  cmd->add_option("--gamma", o.gamma, "Uniformization rate override (rational)");
}

ScenarioConfig configure(const std::string& path, const Overrides& o, const std::string& expected_kind) {
  ScenarioConfig cfg = load_scenario(path);
  if (!expected_kind.empty() && cfg.kind != expected_kind)
    throw ParseError(path + ": config is a \"" + cfg.kind + "\" scenario, not \"" + expected_kind + "\"");
  if (o.seed) cfg.seed = *o.seed;
  if (o.tol) cfg.tol = *o.tol;
  if (!o.gamma.empty()) cfg.gamma = json_rational(Json(o.gamma), "--gamma");
  return cfg;
}

void print_assertions(const std::string& name, const std::vector<Assertion>& assertions) {
  for (const auto& a : assertions)
    std::cout << (a.passed ? "PASS " : "FAIL ") << name << ": " << a.name << (a.detail.empty() ? "" : " [" + a.detail + "]")
              << '\n';
}

int run_one(const ScenarioConfig& cfg, const fs::path& out) {
  const Report report = run_scenario(cfg);
  write_report(report, out);
  print_assertions(cfg.name, report.assertions);
  std::cout << "report written to " << out.string() << '\n';
  return exit_status(report.assertions);
}

GameSpec load_game(const std::string& path) { return game_from_json(read_json_file(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite living temporal games: equilibria, interventions and mechanisms"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config;
  Overrides overrides;
  std::string chosen;
  for (const auto& kind : scenario_kinds()) {
    CLI::App* cmd = app.add_subcommand(kind, "Run a " + kind + " scenario");
    cmd->add_option("--config", config, "Scenario config file")->required()->check(CLI::ExistingFile);
    add_overrides(cmd, overrides);
    cmd->callback([&chosen, kind] { chosen = kind; });
  }

  std::vector<std::string> configs;
  std::size_t jobs = 1;
  CLI::App* run = app.add_subcommand("run", "Run scenario configs of any kind");
  run->add_option("configs", configs, "Scenario config files")->required()->check(CLI::ExistingFile);
  run->add_option("--out", overrides.out, "Output root; each scenario writes <root>/<name>");
  run->add_option("--jobs", jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);
  run->add_option("--seed", overrides.seed, "Seed override");
  run->add_option("--tol", overrides.tol, "Tolerance override");
  run->add_option("--gamma", overrides.gamma, "Uniformization rate override (rational)");

  std::vector<std::string> dirs;
  CLI::App* verify = app.add_subcommand("verify", "Re-derive headline numbers of report directories");
  verify->add_option("reports", dirs, "Report directories")->required()->check(CLI::ExistingDirectory);

  std::string game_path, gamma_text = "100", policy_path;
  CLI::App* uni = app.add_subcommand("uniformize", "Print the uniformized game's dimensions and tables");
  uni->add_option("--game", game_path, "Game file")->required()->check(CLI::ExistingFile);
  uni->add_option("--gamma", gamma_text, "Uniformization rate (rational)");
  uni->add_option("--out", overrides.out, "Write the tables to this JSON file");

  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo payoff estimate next to the DP value");
  sim->add_option("--game", game_path, "Game file")->required()->check(CLI::ExistingFile);
  sim->add_option("--gamma", gamma_text, "Uniformization rate (rational)");
  sim->add_option("--policy", policy_path, "Policy file (default: control 0 everywhere)")->check(CLI::ExistingFile);
  sim->add_option("--paths", paths, "Number of paths")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!chosen.empty()) {
      const ScenarioConfig cfg = configure(config, overrides, chosen);
      const fs::path out = overrides.out.empty() ? default_output_root() / cfg.name : fs::path(overrides.out);
      return run_one(cfg, out);
    }
    if (run->parsed()) {
      std::vector<ScenarioConfig> cfgs;
      for (const auto& path : configs) cfgs.push_back(configure(path, overrides, ""));
      const fs::path root = overrides.out.empty() ? default_output_root() : fs::path(overrides.out);
      std::vector<int> status(cfgs.size(), 0);
      std::vector<std::string> errors(cfgs.size());
      std::vector<std::vector<Assertion>> results(cfgs.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t j; (j = next++) < cfgs.size();) {
          try {
            const Report report = run_scenario(cfgs[j]);
            write_report(report, root / cfgs[j].name);
            results[j] = report.assertions;
            status[j] = exit_status(report.assertions);
          } catch (const std::exception& e) {
            errors[j] = e.what();
            status[j] = 2;
          }
        }
      };
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < std::min(jobs, cfgs.size()); ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      int worst = 0;
      for (std::size_t j = 0; j < cfgs.size(); ++j) {
        if (!errors[j].empty()) std::cerr << "error: " << cfgs[j].name << ": " << errors[j] << '\n';
        print_assertions(cfgs[j].name, results[j]);
        worst = std::max(worst, status[j]);
      }
      return worst;
    }
    if (verify->parsed()) {
      int worst = 0;
      for (const auto& dir : dirs) {
        const auto checks = verify_report(dir);
        print_assertions(dir, checks);
        worst = std::max(worst, exit_status(checks));
      }
      return worst;
    }
    if (uni->parsed()) {
      const GameSpec game = load_game(game_path);
      const Rational gamma = parse_rational(gamma_text);
      const auto ug = uniformize<Rational>(game, gamma);
      Json doc;
      doc["gamma"] = to_string(gamma);
      doc["stages"] = ug.stages;
      doc["step"] = to_string(ug.step);
      doc["effective_horizon"] = to_string(ug.horizon);
      doc["base_states"] = ug.base_states;
      doc["augmented_states"] = ug.states;
      doc["profiles"] = ug.profiles;
      Json rows = Json::array();
      for (std::size_t x = 0; x < ug.states; ++x)
        for (std::size_t a = 0; a < ug.profiles; ++a) {
          Json arcs = Json::array();
          const std::size_t r = ug.row(x, a);
          for (std::size_t j = ug.row_begin[r]; j < ug.row_begin[r + 1]; ++j)
            arcs.push_back({ug.arcs[j].target, to_string(ug.arcs[j].prob)});
          Json reward = Json::array(), cost = Json::array();
          for (std::size_t i = 0; i < ug.n; ++i) {
            reward.push_back(to_string(ug.stage_reward[r * ug.n + i]));
            cost.push_back(to_string(ug.switch_cost[r * ug.n + i]));
          }
          rows.push_back({{"state", x}, {"profile", a}, {"arcs", arcs}, {"stage_reward", reward}, {"switch_cost", cost}});
        }
      doc["rows"] = rows;
      if (overrides.out.empty()) {
        std::cout << doc.dump(2) << '\n';
      } else {
        std::ofstream(overrides.out) << doc.dump(2) << '\n';
      }
      return 0;
    }
    if (sim->parsed()) {
      const GameSpec game = load_game(game_path);
      const Rational gamma = parse_rational(gamma_text);
      const auto ug = uniformize<double>(game, gamma);
      const PolicyProfile profile = policy_path.empty()
                                        ? constant_profile(ug, std::vector<std::size_t>(ug.n, 0))
                                        : policy_from_json(read_json_file(policy_path), ug);
      const auto v = joint_value(ug, profile);
      const auto result = simulate(game, profile, gamma, 0.0, game.initial_state, seed, paths);
      Json doc = Json::array();
      for (std::size_t i = 0; i < ug.n; ++i)
        doc.push_back({{"player", i},
                       {"dp_value", v.at(i, 0, initial_index(ug))},
                       {"mc_mean", result.mean[i]},
                       {"std_error", result.std_error[i]}});
      std::cout << doc.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
