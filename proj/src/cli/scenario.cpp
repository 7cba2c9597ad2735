#include "ltg/scenario.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "ltg/inertia.hpp"
#include "ltg/simulate.hpp"

namespace ltg {

namespace fs = std::filesystem;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0) return "0";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 14> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

fs::path default_output_root() {
  const char* env = std::getenv("LTG_OUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("ltg-out");
}

int exit_status(const std::vector<Assertion>& assertions) {
  for (const auto& a : assertions)
    if (!a.passed) return 1;
  return 0;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw ParseError("table has no column \"" + name + "\"");
}

bool Report::passed() const { return exit_status(assertions) == 0; }

void Report::check(std::string name, bool ok, std::string detail) {
  assertions.push_back(Assertion{std::move(name), ok, std::move(detail)});
}

ScenarioConfig scenario_from_json(const Json& doc, const fs::path& source) {
  const std::string w = source.string();
  if (!doc.is_object()) throw ParseError(w + ": expected an object");
  ScenarioConfig cfg;
  cfg.source = source;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    if (key == "name") {
      if (!v.is_string()) throw ParseError(w + "/name: expected a string");
      cfg.name = v.get<std::string>();
    } else if (key == "scenario") {
      if (!v.is_string()) throw ParseError(w + "/scenario: expected a string");
      cfg.kind = v.get<std::string>();
    } else if (key == "game" || key == "intervention" || key == "types" || key == "mechanism") {
      if (!v.is_string()) throw ParseError(w + "/" + key + ": expected a path");
      cfg.files[key] = v.get<std::string>();
    } else if (key == "gamma") {
      cfg.gamma = json_rational(v, w + "/gamma");
    } else if (key == "tol") {
      if (!v.is_number()) throw ParseError(w + "/tol: expected a number");
      cfg.tol = v.get<double>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ParseError(w + "/seed: expected a nonnegative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else if (key == "params") {
      if (!v.is_object()) throw ParseError(w + "/params: expected an object");
      cfg.params = v;
    } else {
      throw ParseError(w + ": unknown key \"" + key + "\"");
    }
  }
  const auto& kinds = scenario_kinds();
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    throw ParseError(w + "/scenario: unknown scenario kind \"" + cfg.kind + "\"");
  if (cfg.name.empty()) cfg.name = source.stem().string();
  if (!(cfg.tol >= 0)) throw ParseError(w + "/tol: must be nonnegative");
  return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) { return scenario_from_json(read_json_file(path), path); }

namespace {

// Shared plumbing for one run: input resolution with digests, parameter access.
struct Context {
  const ScenarioConfig& cfg;
  Report& report;
  Json inputs = Json::array();

  fs::path resolve(const std::string& path) const { return cfg.source.parent_path() / path; }

  Json load(const std::string& role, const std::string& path) {
    const fs::path p = resolve(path);
    inputs.push_back({{"role", role}, {"path", path}, {"sha256", sha256_file(p)}});
    return read_json_file(p);
  }

  std::optional<Json> file(const std::string& role) {
    auto it = cfg.files.find(role);
    if (it == cfg.files.end()) return std::nullopt;
    return load(role, it->second);
  }

  const Json* param(const char* key) const {
    auto it = cfg.params.find(key);
    return it == cfg.params.end() ? nullptr : &*it;
  }
  Rational rational(const char* key, const Rational& fallback) const {
    const Json* v = param(key);
    return v ? json_rational(*v, std::string("params/") + key) : fallback;
  }
  std::size_t count(const char* key, std::size_t fallback) const {
    const Json* v = param(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) throw ParseError(std::string("params/") + key + ": expected a nonnegative integer");
    return v->get<std::size_t>();
  }
  bool flag(const char* key, bool fallback) const {
    const Json* v = param(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ParseError(std::string("params/") + key + ": expected true or false");
    return v->get<bool>();
  }
  double real(const char* key, double fallback) const {
    const Json* v = param(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ParseError(std::string("params/") + key + ": expected a number");
    return v->get<double>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    const Json* v = param(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ParseError(std::string("params/") + key + ": expected a string");
    return v->get<std::string>();
  }

  Rational gamma(const Rational& fallback) const { return cfg.gamma ? *cfg.gamma : rational("gamma", fallback); }

  GameSpec game() {
    auto doc = file("game");
    if (!doc) throw ParseError(cfg.source.string() + ": scenario needs a \"game\" file");
    return game_from_json(*doc);
  }
};

void check_gamma(const GameSpec& spec, const Rational& gamma, const std::string& what) {
  if (gamma <= 0 || gamma < spec.rates.lambda_max)
    throw ParseError(what + ": gamma " + to_string(gamma) + " is below lambda_max " + to_string(spec.rates.lambda_max));
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t j = 0; j < v.size(); ++j) out += (j ? " " : "") + std::to_string(v[j]);
  return out;
}

std::string state_name(const JointState& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::string(to_string(s[i]));
  return out + ")";
}

template <class S>
S total_value(const ValueTable<S>& v, std::size_t x) {
  S sum = S(0);
  for (std::size_t i = 0; i < v.values.size(); ++i) sum += v.at(i, 0, x);
  return sum;
}

std::vector<std::vector<std::size_t>> constant_controls(const ProfileSpace& ps) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t a = 0; a < ps.size(); ++a) out.push_back(ps.decode(a));
  return out;
}

// Monte Carlo agreement with the dynamic program.
void run_uniformize_check(Context& ctx) {
  Report& r = ctx.report;
  const GameSpec game = ctx.game();
  const Rational gamma = ctx.gamma(Rational(2000));
  check_gamma(game, gamma, "uniformize-check");
  const std::size_t paths = ctx.count("paths", 100000);
  const double sigmas = ctx.real("sigmas", 3.0);
  const auto ug = uniformize<double>(game, gamma);

  double row_error = 0;
  for (std::size_t row = 0; row + 1 < ug.row_begin.size(); ++row) {
    double sum = 0;
    for (std::size_t j = ug.row_begin[row]; j < ug.row_begin[row + 1]; ++j) {
      if (ug.arcs[j].prob < 0) row_error = std::max(row_error, -ug.arcs[j].prob);
      sum += ug.arcs[j].prob;
    }
    row_error = std::max(row_error, std::abs(sum - 1));
  }
  r.check("transition rows are probability vectors", row_error <= 1e-12, "max row error " + format_double(row_error));

  std::vector<PolicyProfile> profiles;
  std::vector<std::string> labels;
  if (const Json* list = ctx.param("profiles")) {
    if (!list->is_array()) throw ParseError("params/profiles: expected a list of policies");
    for (std::size_t p = 0; p < list->size(); ++p) {
      profiles.push_back(policy_from_json((*list)[p], ug));
      labels.push_back("policy" + std::to_string(p));
    }
  } else {
    for (const auto& c : constant_controls(ug.profile_space)) {
      profiles.push_back(constant_profile(ug, c));
      labels.push_back("[" + join(c) + "]");
    }
  }

  Table t{{"profile", "player", "dp_value", "mc_mean", "std_error", "abs_z", "within"}, {}};
  double max_z = 0;
  std::size_t within_count = 0, total = 0;
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto v = joint_value(ug, profiles[p]);
    const auto sim = simulate(game, profiles[p], gamma, 0.0, game.initial_state, path_seed(ctx.cfg.seed, p), paths);
    for (std::size_t i = 0; i < ug.n; ++i) {
      const double dp = v.at(i, 0, initial_index(ug));
      const double diff = std::abs(dp - sim.mean[i]);
      const double z = sim.std_error[i] > 0 ? diff / sim.std_error[i] : (diff > 0 ? INFINITY : 0.0);
      const bool ok = diff <= sigmas * sim.std_error[i] + 1e-9 * (1 + std::abs(dp));
      max_z = std::max(max_z, z);
      within_count += ok;
      ++total;
      t.add({labels[p], std::to_string(i), format_double(dp), format_double(sim.mean[i]),
             format_double(sim.std_error[i]), format_double(z), ok ? "1" : "0"});
      r.check("dp within " + format_double(sigmas) + " SE, profile " + labels[p] + " player " + std::to_string(i), ok,
              "dp " + format_double(dp) + " mc " + format_double(sim.mean[i]) + " se " +
                  format_double(sim.std_error[i]));
    }
  }
  r.tables["monte_carlo"] = std::move(t);
  r.summary["gamma"] = to_string(gamma);
  r.summary["stages"] = ug.stages;
  r.summary["paths"] = paths;
  r.summary["sigmas"] = sigmas;
  r.summary["max_row_error"] = format_double(row_error);
  r.summary["max_abs_z"] = format_double(max_z);
  r.summary["within"] = within_count;
  r.summary["comparisons"] = total;
}

void run_mpe_verify(Context& ctx) {
  Report& r = ctx.report;
  const GameSpec game = ctx.game();
  const Rational gamma = ctx.gamma(Rational(100));
  check_gamma(game, gamma, "mpe-verify");
  const double tol = ctx.cfg.tol;
  const auto ug = uniformize<double>(game, gamma);
  const std::size_t x0 = initial_index(ug);

  Table gains{{"profile", "player", "gain", "stage", "state", "is_mpe"}, {}};
  Json verdicts = Json::object();
  if (const Json* list = ctx.param("profiles")) {
    if (!list->is_array()) throw ParseError("params/profiles: expected a list");
    for (std::size_t p = 0; p < list->size(); ++p) {
      const Json& entry = (*list)[p];
      if (!entry.is_object() || !entry.contains("policy")) throw ParseError("params/profiles: entries need a policy");
      const std::string name = entry.value("name", "profile" + std::to_string(p));
      const PolicyProfile profile = policy_from_json(entry["policy"], ug);
      const auto rep = verify_mpe(ug, profile, tol);
      for (std::size_t i = 0; i < ug.n; ++i)
        gains.add({name, std::to_string(i), format_double(rep.gain[i]), std::to_string(rep.gain_stage[i]),
                   std::to_string(rep.gain_state[i]), rep.is_mpe ? "1" : "0"});
      verdicts[name] = rep.is_mpe;
      if (entry.contains("expect_mpe"))
        r.check("profile " + name + (entry["expect_mpe"].get<bool>() ? " is" : " is not") + " an MPE",
                rep.is_mpe == entry["expect_mpe"].get<bool>(),
                "max gain " + format_double(*std::max_element(rep.gain.begin(), rep.gain.end())));
    }
  }
  r.tables["gains"] = std::move(gains);
  r.summary["gamma"] = to_string(gamma);
  r.summary["stages"] = ug.stages;
  r.summary["verdicts"] = verdicts;

  if (ctx.flag("enumerate", true)) {
    const auto mpes = enumerate_mpe(ug, tol);
    Table t{{"code", "controls", "welfare", "terminal", "welfare_nano"}, {}};
    for (const auto& m : mpes) {
      std::string controls;
      for (std::size_t i = 0; i < ug.n; ++i) {
        std::vector<std::size_t> row(m.profile.players[i].controls.begin(), m.profile.players[i].controls.end());
        controls += (i ? " | " : "") + join(row);
      }
      const auto sig = outcome_signature(ug, m.profile);
      t.add({std::to_string(m.code), controls, format_double(total_value(joint_value(ug, m.profile), x0)),
             state_name(sig.terminal), std::to_string(sig.welfare_nano)});
    }
    r.summary["mpe_count"] = mpes.size();
    r.summary["stationary_profiles"] = stationary_count(ug);
    if (const Json* expect = ctx.param("expect_mpe_count"))
      r.check("stationary MPE count", mpes.size() == expect->get<std::size_t>(),
              std::to_string(mpes.size()) + " found, " + std::to_string(expect->get<std::size_t>()) + " expected");
    r.tables["mpe"] = std::move(t);
  }
}

// Inertia depth and both directions of the threshold on the dominance family.
void run_inertia(Context& ctx) {
  Report& r = ctx.report;
  const Rational B = ctx.rational("B", 10), T = ctx.rational("T", 1);
  const Rational gamma = ctx.gamma(Rational(8000));
  const double tol = ctx.cfg.tol;
  const std::size_t samples = ctx.count("samples", 100);
  const double shrink = ctx.real("shrink", 1 - 1e-6);
  const double epsilon = ctx.real("epsilon", -1);
  if (!(shrink > 0 && shrink < 1)) throw ParseError("params/shrink: must lie in (0, 1)");
  const DominanceFamily fam = dominance_family(B, T, gamma, ctx.rational("latency", 0));
  const GameSpec& spec = fam.continuous;
  const auto ug = uniformize<double>(spec, gamma);
  const std::size_t x0 = initial_index(ug);
  const PolicyProfile sq = status_quo(ug);
  const auto rep = inertia_depth(ug, sq, 0, x0, tol, epsilon);

  Table dev{{"player", "deviation_gain"}, {}};
  for (std::size_t i = 0; i < rep.deviation.size(); ++i)
    dev.add({std::to_string(i), rep.deviation[i] ? format_double(*rep.deviation[i]) : "none"});
  r.tables["deviation"] = std::move(dev);
  const double remaining = to_double(rep.remaining);
  r.summary["B"] = to_string(B);
  r.summary["T"] = to_string(T);
  r.summary["gamma"] = to_string(gamma);
  r.summary["stages"] = ug.stages;
  r.summary["theta"] = format_double(rep.theta);
  r.summary["remaining"] = to_string(rep.remaining);
  r.summary["survival_delta"] = format_double(rep.survival_delta);
  r.summary["converse_delta"] = format_double(rep.converse_delta);
  r.summary["epsilon"] = format_double(rep.epsilon);
  r.check("status quo has positive inertia depth", rep.theta > 0, "theta " + format_double(rep.theta));

  const double bound = rep.survival_delta * shrink;
  Table surv{{"sample", "norm", "survives", "survives_everywhere", "max_gain"}, {}};
  std::size_t survived = 0, everywhere = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const TransferTable tt = random_transfers(spec, ug.stages, bound, path_seed(ctx.cfg.seed, s));
    const auto res = test_survival(spec, gamma, sq, tt, tol, GainScope::at(0, x0));
    survived += res.survives;
    everywhere += res.survives_everywhere;
    surv.add({std::to_string(s), format_double(tt.norm()), res.survives ? "1" : "0",
              res.survives_everywhere ? "1" : "0",
              format_double(*std::max_element(res.report.gain.begin(), res.report.gain.end()))});
  }
  r.tables["survival"] = std::move(surv);
  r.summary["transfer_bound"] = format_double(bound);
  r.summary["samples"] = samples;
  r.summary["survived"] = survived;
  r.summary["survived_everywhere"] = everywhere;
  r.check("status quo survives every transfer below theta / (2 (T - t))", survived == samples,
          std::to_string(survived) + " of " + std::to_string(samples));

  const TransferTable ct = converse_transfer(spec, rep.theta, remaining, rep.epsilon, spec.initial_state);
  const auto conv = test_survival(spec, gamma, sq, ct, tol, GainScope::at(0, x0));
  Table ctab{{"player", "gain"}, {}};
  for (std::size_t i = 0; i < conv.report.gain.size(); ++i)
    ctab.add({std::to_string(i), format_double(conv.report.gain[i])});
  r.tables["converse"] = std::move(ctab);
  r.summary["converse_norm"] = format_double(ct.norm());
  r.summary["converse_breaks"] = !conv.survives;
  r.check("converse transfer eliminates the status quo", !conv.survives,
          "norm " + format_double(ct.norm()) + ", max gain " +
              format_double(*std::max_element(conv.report.gain.begin(), conv.report.gain.end())));
}

bool activates(const OutcomeSignature& sig) {
  return std::find(sig.terminal.begin(), sig.terminal.end(), PlayerState::Active) != sig.terminal.end();
}

Table mpe_table(const UniformizedGame<double>& ug, const std::vector<MpeCandidate<double>>& mpes) {
  Table t{{"code", "welfare", "terminal", "activating"}, {}};
  for (const auto& m : mpes) {
    const auto sig = outcome_signature(ug, m.profile);
    t.add({std::to_string(m.code), format_double(total_value(joint_value(ug, m.profile), initial_index(ug))),
           state_name(sig.terminal), activates(sig) ? "1" : "0"});
  }
  return t;
}

// Continuous flow against discrete transport on the two-player activation family.
void run_dominance(Context& ctx) {
  Report& r = ctx.report;
  const Rational B = ctx.rational("B", 10), T = ctx.rational("T", 1);
  const Rational gamma = ctx.gamma(Rational(40));
  const double tol = ctx.cfg.tol;
  const std::size_t samples = ctx.count("samples", 100);
  const double bound = to_double(ctx.rational("bound", B));
  const DominanceFamily fam = dominance_family(B, T, gamma, ctx.rational("latency", 0));
  const auto ugC = uniformize<double>(fam.continuous, gamma);
  const auto ugD = uniformize<double>(fam.discrete, gamma);
  const std::size_t xC = initial_index(ugC), xD = initial_index(ugD);
  const PolicyProfile sqC = status_quo(ugC), sqD = status_quo(ugD);
  r.summary["B"] = to_string(B);
  r.summary["T"] = to_string(T);
  r.summary["kappa"] = to_string(fam.kappa);
  r.summary["gamma"] = to_string(gamma);
  r.summary["transfer_bound"] = format_double(bound);

  const auto mpeC = verify_mpe(ugC, sqC, tol);
  r.check("continuous-flow all-Sleep is an MPE", mpeC.is_mpe,
          "max gain " + format_double(*std::max_element(mpeC.gain.begin(), mpeC.gain.end())));
  Table surv{{"sample", "norm", "survives", "survives_everywhere", "max_gain"}, {}};
  std::size_t survived = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const TransferTable tt = random_transfers(fam.continuous, ugC.stages, bound, path_seed(ctx.cfg.seed, s));
    const auto res = test_survival(fam.continuous, gamma, sqC, tt, tol, GainScope::at(0, xC));
    survived += res.survives;
    surv.add({std::to_string(s), format_double(tt.norm()), res.survives ? "1" : "0",
              res.survives_everywhere ? "1" : "0",
              format_double(*std::max_element(res.report.gain.begin(), res.report.gain.end()))});
  }
  r.tables["survival"] = std::move(surv);
  r.summary["samples"] = samples;
  r.summary["survived"] = survived;
  r.check("continuous-flow all-Sleep survives every sampled transfer", survived == samples,
          std::to_string(survived) + " of " + std::to_string(samples));

  const auto mpeD = verify_mpe(ugD, sqD, tol, GainScope::at(0, xD));
  r.summary["transport_status_quo_is_mpe"] = mpeD.is_mpe;
  r.check("discrete-transport all-Sleep fails verify_mpe", !mpeD.is_mpe,
          "max gain " + format_double(*std::max_element(mpeD.gain.begin(), mpeD.gain.end())));

  const double sq_welfare = total_value(joint_value(ugD, sqD), xD);
  const auto listC = enumerate_mpe(ugC, tol);
  const auto listD = enumerate_mpe(ugD, tol);
  r.tables["mpe_continuous"] = mpe_table(ugC, listC);
  Table tD = mpe_table(ugD, listD);
  std::optional<double> best;
  for (const auto& row : tD.rows)
    if (row[3] == "1") {
      const double w = std::stod(row[1]);
      if (!best || w > *best) best = w;
    }
  r.tables["mpe_transport"] = std::move(tD);
  r.summary["status_quo_welfare"] = format_double(sq_welfare);
  r.summary["mpe_continuous"] = listC.size();
  r.summary["mpe_transport"] = listD.size();
  r.summary["best_activating_welfare"] = best ? Json(format_double(*best)) : Json(nullptr);
  r.check("an activating transport MPE has strictly greater welfare",
          best && *best > sq_welfare + tol * (1 + std::abs(sq_welfare)),
          best ? "best activating " + format_double(*best) + " vs status quo " + format_double(sq_welfare)
               : "no activating stationary MPE");
}

// Implementable-set inclusion for each (continuous, transport) pair.
void run_monotonicity(Context& ctx) {
  Report& r = ctx.report;
  const Rational gamma = ctx.gamma(Rational(40));
  const double tol = ctx.cfg.tol;
  const Json* pairs = ctx.param("pairs");
  if (!pairs || !pairs->is_array() || pairs->empty()) throw ParseError("params/pairs: expected a nonempty list");
  Table sigs{{"pair", "game", "terminal", "welfare_nano"}, {}};
  Table ptab{{"pair", "continuous", "transport", "subset", "strict"}, {}};
  Json results = Json::object();
  for (std::size_t p = 0; p < pairs->size(); ++p) {
    const Json& entry = (*pairs)[p];
    const std::string w = "params/pairs/" + std::to_string(p);
    if (!entry.is_object()) throw ParseError(w + ": expected an object");
    const std::string name = entry.value("name", "pair" + std::to_string(p));
    GameSpec C, D;
    if (entry.contains("family")) {
      const Json& f = entry["family"];
      const auto fam = dominance_family(json_rational(f.value("B", Json(10)), w + "/B"),
                                        json_rational(f.value("T", Json(1)), w + "/T"), gamma,
                                        json_rational(f.value("latency", Json(0)), w + "/latency"));
      C = fam.continuous;
      D = fam.discrete;
    } else {
      if (!entry.contains("game") || !entry.contains("intervention"))
        throw ParseError(w + ": needs \"family\" or both \"game\" and \"intervention\"");
      C = game_from_json(ctx.load(name + ".game", entry["game"].get<std::string>()));
      const Intervention iv = intervention_from_json(ctx.load(name + ".intervention", entry["intervention"].get<std::string>()), C);
      D = induced_game(C, iv);
    }
    check_gamma(C, gamma, w);
    check_gamma(D, gamma, w);
    const auto impC = implementable_set(uniformize<double>(C, gamma), tol);
    const auto impD = implementable_set(uniformize<double>(D, gamma), tol);
    for (const auto& s : impC) sigs.add({name, "continuous", state_name(s.terminal), std::to_string(s.welfare_nano)});
    for (const auto& s : impD) sigs.add({name, "transport", state_name(s.terminal), std::to_string(s.welfare_nano)});
    const bool subset = std::includes(impD.begin(), impD.end(), impC.begin(), impC.end());
    const bool strict = subset && impD.size() > impC.size();
    ptab.add({name, std::to_string(impC.size()), std::to_string(impD.size()), subset ? "1" : "0", strict ? "1" : "0"});
    results[name] = {{"subset", subset}, {"strict", strict}};
    r.check("Imp(continuous) within Imp(transport) for " + name, subset,
            std::to_string(impC.size()) + " vs " + std::to_string(impD.size()) + " signatures");
    if (entry.value("strict", false))
      r.check("strict inclusion witness for " + name, strict,
              strict ? "transport adds an outcome" : "the two implementable sets coincide");
  }
  r.tables["signatures"] = std::move(sigs);
  r.tables["pairs"] = std::move(ptab);
  r.summary["gamma"] = to_string(gamma);
  r.summary["pairs"] = results;
}

struct TypedGame {
  GameSpec base;
  TypeSpace types;
  Rational gamma;
};

TypedGame typed_game(Context& ctx) {
  auto types_doc = ctx.file("types");
  if (types_doc) {
    TypedGame tg{ctx.game(), types_from_json(*types_doc), 0};
    tg.gamma = ctx.gamma(Rational(200));
    check_gamma(tg.base, tg.gamma, ctx.cfg.kind);
    return tg;
  }
  const BilateralPreset p =
      bilateral_preset(ctx.rational("kappa_low", Rational(1, 5)), ctx.rational("kappa_high", Rational(3, 2)),
                       ctx.rational("T", 1), ctx.rational("benefit", 1), ctx.rational("rate", 100),
                       ctx.rational("gamma", 200));
  TypedGame tg{p.base, p.types, ctx.cfg.gamma ? *ctx.cfg.gamma : p.gamma};
  check_gamma(tg.base, tg.gamma, ctx.cfg.kind);
  return tg;
}

PivotMode pivot_mode(const Context& ctx) {
  const std::string mode = ctx.text("mode", "null");
  if (mode == "null") return PivotMode::NullControl;
  if (mode == "follow") return PivotMode::FollowOptimum;
  throw ParseError("params/mode: expected \"null\" or \"follow\"");
}

void run_pivot(Context& ctx) {
  Report& r = ctx.report;
  const TypedGame tg = typed_game(ctx);
  const PivotMode mode = pivot_mode(ctx);
  const std::size_t P = tg.types.profile_count(), n = tg.types.players();

  Table tr{{"report", "player", "transfer", "welfare_others", "welfare_without"}, {}};
  Table wt{{"report", "welfare", "deficit"}, {}};
  for (std::size_t c = 0; c < P; ++c) {
    const PivotResult p = pivot_mechanism(tg.base, tg.types, tg.types.decode(c), tg.gamma, mode);
    Rational deficit = 0;
    for (std::size_t i = 0; i < n; ++i) {
      deficit += p.transfer[i];
      tr.add({report_key(tg.types, c), std::to_string(i), to_string(p.transfer[i]), to_string(p.welfare_others[i]),
              to_string(p.welfare_without[i])});
    }
    wt.add({report_key(tg.types, c), to_string(p.welfare), to_string(deficit)});
  }
  const MechanismSpec mech = pivot_mechanism_spec(tg.base, tg.types, tg.gamma, mode);
  const EpicReport epic = check_epic(tg.base, tg.types, mech, tg.gamma);
  Table et{{"player", "truth", "misreport", "stage", "state", "difference"}, {}};
  for (const auto& e : epic.entries)
    et.add({std::to_string(e.player), report_key(tg.types, e.truth), report_key(tg.types, e.misreport),
            std::to_string(e.stage), std::to_string(e.state), to_string(e.difference)});
  const BudgetReport budget = check_budget(mech, n);
  const DeficitReport deficit = pivot_deficit_bound(tg.base, tg.types, tg.gamma, mode);

  r.tables["transfers"] = std::move(tr);
  r.tables["welfare"] = std::move(wt);
  r.tables["epic"] = std::move(et);
  r.documents["mechanism"] = mechanism_to_json(mech, tg.types);
  r.documents["types"] = types_to_json(tg.types);
  r.summary["gamma"] = to_string(tg.gamma);
  r.summary["mode"] = mode == PivotMode::NullControl ? "null" : "follow";
  r.summary["epic_min_difference"] = to_string(epic.min_difference);
  r.summary["epic_holds"] = epic.holds;
  r.summary["budget_balanced"] = budget.balanced;
  r.summary["w_max"] = to_string(deficit.w_max);
  r.summary["w_min"] = to_string(deficit.w_min);
  r.summary["max_deficit"] = to_string(deficit.max_deficit);
  r.summary["min_deficit"] = to_string(deficit.min_deficit);
  r.summary["deficit_bound"] = to_string(deficit.bound);
  r.summary["approx"] = {{"epic_min_difference", to_double(epic.min_difference)},
                         {"max_deficit", to_double(deficit.max_deficit)},
                         {"deficit_bound", to_double(deficit.bound)}};
  r.check("pivot mechanism is EPIC (exact minimum difference >= 0)", epic.holds,
          "minimum " + to_string(epic.min_difference));
  r.check("0 <= pivot deficit <= n (W_max - W_min)", deficit.within,
          "deficits in [" + to_string(deficit.min_deficit) + ", " + to_string(deficit.max_deficit) + "], bound " +
              to_string(deficit.bound));
}

std::vector<Rational> rational_list(const Context& ctx, const char* key, const std::vector<Rational>& fallback) {
  const Json* v = ctx.param(key);
  if (!v) return fallback;
  if (!v->is_array() || v->empty()) throw ParseError(std::string("params/") + key + ": expected a nonempty list");
  std::vector<Rational> out;
  for (const auto& x : *v) out.push_back(json_rational(x, std::string("params/") + key));
  return out;
}

// Per-cell impossibility certificates over a (kappa_L, kappa_H) grid of bilateral presets.
void run_impossibility(Context& ctx) {
  Report& r = ctx.report;
  std::vector<Rational> low, high;
  for (int j = 1; j <= 8; ++j) low.push_back(Rational(j, 10));
  for (int j = 0; j < 8; ++j) high.push_back(Rational(9 + 2 * j, 10));
  low = rational_list(ctx, "kappa_low", low);
  high = rational_list(ctx, "kappa_high", high);
  const Rational T = ctx.rational("T", 1), benefit = ctx.rational("benefit", 1), rate = ctx.rational("rate", 100);
  const Rational gamma = ctx.gamma(Rational(200));
  ImpossibilityOptions options;
  options.interim_ir = ctx.flag("interim_ir", true);
  options.state_keyed = ctx.flag("state_keyed", false);
  const std::string constraint_set = std::string("EPIC+BB") + (options.interim_ir ? "+IR" : "") +
                                     (options.state_keyed ? " (state-keyed flows)" : " (time-0 lumps)");

  Table cells{{"cell", "kappa_low", "kappa_high", "status", "verified", "efficient", "planner_activates", "agrees",
               "epic_min", "balanced"},
              {}};
  std::size_t infeasible = 0, verified = 0, feasible_ok = 0, feasible = 0, agree = 0, total = 0;
  for (std::size_t a = 0; a < low.size(); ++a)
    for (std::size_t b = 0; b < high.size(); ++b) {
      const std::string cell = "cell_" + std::to_string(a) + "_" + std::to_string(b);
      const BilateralPreset p = bilateral_preset(low[a], high[b], T, benefit, rate, gamma);
      const TradeInstance inst = ms_embedding(p.base, p.types, gamma);
      std::string eff, act;
      bool agrees = true;
      for (std::size_t c = 0; c < inst.profiles; ++c) {
        eff += inst.efficient[c] ? '1' : '0';
        act += inst.planner_activates[c] ? '1' : '0';
        agrees = agrees && inst.efficient[c] == inst.planner_activates[c];
      }
      const ImpossibilityResult res = impossibility_lp(inst, options);
      ++total;
      agree += agrees;
      verified += res.verified;
      std::string epic_min, balanced;
      if (res.certificate.feasible) {
        ++feasible;
        const MechanismSpec mech = mechanism_from_solution(inst, res, p.base);
        const EpicReport epic = check_epic(p.base, p.types, mech, gamma);
        const BudgetReport bb = check_budget(mech, 2);
        epic_min = to_string(epic.min_difference);
        balanced = bb.balanced ? "1" : "0";
        feasible_ok += epic.holds && bb.balanced;
      } else {
        ++infeasible;
      }
      Json cert = certificate_to_json(res.system, res.certificate);
      cert["constraint_set"] = constraint_set;
      cert["kappa_low"] = to_string(low[a]);
      cert["kappa_high"] = to_string(high[b]);
      r.documents[cell] = std::move(cert);
      cells.add({cell, to_string(low[a]), to_string(high[b]), res.certificate.feasible ? "feasible" : "infeasible",
                 res.verified ? "1" : "0", eff, act, agrees ? "1" : "0", epic_min, balanced});
    }
  r.tables["cells"] = std::move(cells);
  r.summary["gamma"] = to_string(gamma);
  r.summary["constraint_set"] = constraint_set;
  r.summary["cells"] = total;
  r.summary["infeasible_cells"] = infeasible;
  r.summary["feasible_cells"] = feasible;
  r.summary["verified_certificates"] = verified;
  r.summary["embedding_agreements"] = agree;
  r.summary["finding"] = infeasible > 0 ? "at least one cell is infeasible under " + constraint_set
                                        : "no cell of the grid is infeasible under " + constraint_set;
  r.check("every certificate verifies exactly", verified == total,
          std::to_string(verified) + " of " + std::to_string(total));
  r.check("every feasible solution passes check_epic and check_budget", feasible_ok == feasible,
          std::to_string(feasible_ok) + " of " + std::to_string(feasible));
  r.check("embedding predicate matches the planner on every cell", agree == total,
          std::to_string(agree) + " of " + std::to_string(total));
}

}  // namespace

Report run_scenario(const ScenarioConfig& config) {
  Report report;
  report.name = config.name;
  report.kind = config.kind;
  Context ctx{config, report};
  if (config.kind == "uniformize-check") {
    run_uniformize_check(ctx);
  } else if (config.kind == "mpe-verify") {
    run_mpe_verify(ctx);
  } else if (config.kind == "inertia") {
    run_inertia(ctx);
  } else if (config.kind == "dominance") {
    run_dominance(ctx);
  } else if (config.kind == "monotonicity") {
    run_monotonicity(ctx);
  } else if (config.kind == "pivot") {
    run_pivot(ctx);
  } else if (config.kind == "impossibility") {
    run_impossibility(ctx);
  } else {
    throw ParseError("unknown scenario kind \"" + config.kind + "\"");
  }
  Json head;
  head["tool"] = kToolVersion;
  head["scenario"] = config.name;
  head["kind"] = config.kind;
  head["tol"] = config.tol;
  head["seed"] = config.seed;
  head["inputs"] = ctx.inputs;
  head["params"] = config.params;
  head["headline"] = report.summary;
  std::size_t failed = 0;
  for (const auto& a : report.assertions) failed += !a.passed;
  head["assertions"] = {{"total", report.assertions.size()}, {"failed", failed}};
  head["passed"] = failed == 0;
  report.summary = std::move(head);
  return report;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_csv(const fs::path& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_field(row[c]);
    out << '\n';
  };
  line(t.header);
  for (const auto& row : t.rows) line(row);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Table read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  Table t;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, first = true;
  for (std::size_t j = 0; j < text.size(); ++j) {
    const char c = text[j];
    if (quoted) {
      if (c == '"' && j + 1 < text.size() && text[j + 1] == '"') {
        field += '"';
        ++j;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      (first ? t.header : t.rows.emplace_back()) = std::move(row);
      row.clear();
      first = false;
    } else {
      field += c;
    }
  }
  return t;
}

}  // namespace

void write_report(const Report& report, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "summary.json", std::ios::binary);
    out << report.summary.dump(2) << '\n';
  }
  Table a{{"assertion", "passed", "detail"}, {}};
  for (const auto& x : report.assertions) a.add({x.name, x.passed ? "1" : "0", x.detail});
  write_csv(dir / "assertions.csv", a);
  for (const auto& [key, table] : report.tables) write_csv(dir / (key + ".csv"), table);
  for (const auto& [key, doc] : report.documents) {
    std::ofstream out(dir / (key + ".json"), std::ios::binary);
    out << doc.dump(2) << '\n';
  }
}

namespace {

bool close(double a, double b) { return a == b || std::abs(a - b) <= 1e-12 * (1 + std::abs(a) + std::abs(b)); }

double number(const std::string& s) {
  if (s == "inf") return INFINITY;
  return std::stod(s);
}

double number(const Json& j) { return j.is_string() ? number(j.get<std::string>()) : j.get<double>(); }

struct Verifier {
  fs::path dir;
  Json head;
  std::vector<Assertion> out;

  Table table(const std::string& key) const { return read_csv(dir / (key + ".csv")); }
  const Json& headline(const char* key) const { return head.at("headline").at(key); }
  void expect(const std::string& what, bool ok, const std::string& detail) { out.push_back({what, ok, detail}); }
  void same_real(const std::string& what, double derived, const Json& stated) {
    expect(what, close(derived, number(stated)), "derived " + format_double(derived) + ", stated " + stated.dump());
  }
  void same_count(const std::string& what, std::size_t derived, const Json& stated) {
    expect(what, derived == stated.get<std::size_t>(), "derived " + std::to_string(derived) + ", stated " + stated.dump());
  }
  void same_rational(const std::string& what, const Rational& derived, const Json& stated) {
    expect(what, derived == parse_rational(stated.get<std::string>()),
           "derived " + to_string(derived) + ", stated " + stated.get<std::string>());
  }
  std::size_t ones(const Table& t, const std::string& col) const {
    const std::size_t c = t.column(col);
    std::size_t n = 0;
    for (const auto& row : t.rows) n += row[c] == "1";
    return n;
  }
};

void verify_uniformize(Verifier& v) {
  const Table t = v.table("monte_carlo");
  const double sigmas = v.headline("sigmas").get<double>();
  double max_z = 0;
  std::size_t within = 0;
  for (const auto& row : t.rows) {
    const double dp = number(row[t.column("dp_value")]), mc = number(row[t.column("mc_mean")]);
    const double se = number(row[t.column("std_error")]);
    const double diff = std::abs(dp - mc);
    max_z = std::max(max_z, se > 0 ? diff / se : (diff > 0 ? INFINITY : 0.0));
    within += diff <= sigmas * se + 1e-9 * (1 + std::abs(dp));
  }
  v.same_real("max |z| from the Monte Carlo table", max_z, v.headline("max_abs_z"));
  v.same_count("comparisons within tolerance", within, v.headline("within"));
  v.same_count("within flags", v.ones(t, "within"), v.headline("within"));
}

void verify_mpe(Verifier& v) {
  if (v.head.at("headline").contains("mpe_count"))
    v.same_count("MPE count from the MPE table", v.table("mpe").rows.size(), v.headline("mpe_count"));
  const Table g = v.table("gains");
  const double tol = v.head.at("tol").get<double>();
  std::map<std::string, bool> verdict;
  for (const auto& row : g.rows) {
    auto [it, fresh] = verdict.emplace(row[0], true);
    it->second = it->second && number(row[g.column("gain")]) <= tol;
  }
  for (const auto& [name, ok] : verdict)
    v.expect("MPE verdict of " + name + " from its gains", v.headline("verdicts").at(name).get<bool>() == ok,
             ok ? "all gains within tol" : "some gain above tol");
}

void verify_inertia(Verifier& v) {
  const Table d = v.table("deviation");
  std::optional<double> theta;
  for (const auto& row : d.rows) {
    if (row[1] == "none") continue;
    const double minus = -number(row[1]);
    if (!theta || minus < *theta) theta = minus;
  }
  v.expect("deviation table is nonempty", theta.has_value(), "");
  if (!theta) return;
  const double rem = to_double(parse_rational(v.headline("remaining").get<std::string>()));
  const double eps = number(v.headline("epsilon"));
  v.same_real("theta = min_i -D_i", *theta, v.headline("theta"));
  v.same_real("survival threshold theta / (2 (T - t))", *theta / (2 * rem), v.headline("survival_delta"));
  v.same_real("converse level theta / (T - t) + epsilon", *theta / rem + eps, v.headline("converse_delta"));
  v.same_real("converse transfer norm", *theta / rem + eps, v.headline("converse_norm"));
  const Table s = v.table("survival");
  v.same_count("survivals from the survival table", v.ones(s, "survives"), v.headline("survived"));
  double max_norm = 0;
  for (const auto& row : s.rows) max_norm = std::max(max_norm, number(row[s.column("norm")]));
  v.expect("every sampled transfer norm is below the threshold", max_norm < number(v.headline("survival_delta")),
           "max norm " + format_double(max_norm));
  const Table c = v.table("converse");
  bool broken = false;
  for (const auto& row : c.rows) broken = broken || number(row[1]) > v.head.at("tol").get<double>();
  v.expect("converse verdict from its gains", broken == v.headline("converse_breaks").get<bool>(), "");
}

void verify_dominance(Verifier& v) {
  const Table s = v.table("survival");
  v.same_count("survivals from the survival table", v.ones(s, "survives"), v.headline("survived"));
  const Table d = v.table("mpe_transport");
  v.same_count("transport MPE count", d.rows.size(), v.headline("mpe_transport"));
  v.same_count("continuous MPE count", v.table("mpe_continuous").rows.size(), v.headline("mpe_continuous"));
  std::optional<double> best;
  for (const auto& row : d.rows)
    if (row[d.column("activating")] == "1") {
      const double w = number(row[d.column("welfare")]);
      if (!best || w > *best) best = w;
    }
  const Json& stated = v.headline("best_activating_welfare");
  if (best) {
    v.same_real("best activating transport welfare", *best, stated);
  } else {
    v.expect("no activating transport MPE", stated.is_null(), stated.dump());
  }
}

void verify_monotonicity(Verifier& v) {
  const Table s = v.table("signatures");
  std::map<std::string, std::set<std::pair<std::string, std::string>>> cont, trans;
  for (const auto& row : s.rows)
    (row[1] == "continuous" ? cont : trans)[row[0]].insert({row[2], row[3]});
  for (auto it = v.headline("pairs").begin(); it != v.headline("pairs").end(); ++it) {
    const auto& c = cont[it.key()];
    const auto& t = trans[it.key()];
    const bool subset = std::includes(t.begin(), t.end(), c.begin(), c.end());
    const bool strict = subset && t.size() > c.size();
    v.expect("inclusion for " + it.key() + " from the signature table", subset == it.value().at("subset").get<bool>(),
             "");
    v.expect("strictness for " + it.key() + " from the signature table", strict == it.value().at("strict").get<bool>(),
             "");
  }
}

void verify_pivot(Verifier& v) {
  const Table t = v.table("transfers");
  std::map<std::string, Rational> deficit;
  for (const auto& row : t.rows) {
    const Rational others = parse_rational(row[t.column("welfare_others")]);
    const Rational without = parse_rational(row[t.column("welfare_without")]);
    const Rational transfer = parse_rational(row[t.column("transfer")]);
    v.expect("T_i = others' welfare - welfare without i (" + row[0] + ", player " + row[1] + ")",
             transfer == others - without, to_string(transfer));
    deficit[row[0]] += transfer;
  }
  const Table w = v.table("welfare");
  std::optional<Rational> wmax, wmin, dmax, dmin;
  for (const auto& row : w.rows) {
    const Rational welfare = parse_rational(row[1]), d = parse_rational(row[2]);
    v.expect("deficit of " + row[0] + " is the sum of its transfers", deficit[row[0]] == d, to_string(d));
    if (!wmax || welfare > *wmax) wmax = welfare;
    if (!wmin || welfare < *wmin) wmin = welfare;
    if (!dmax || d > *dmax) dmax = d;
    if (!dmin || d < *dmin) dmin = d;
  }
  const Table types = v.table("transfers");
  std::set<std::string> players;
  for (const auto& row : types.rows) players.insert(row[1]);
  v.same_rational("W_max", *wmax, v.headline("w_max"));
  v.same_rational("W_min", *wmin, v.headline("w_min"));
  v.same_rational("max deficit", *dmax, v.headline("max_deficit"));
  v.same_rational("min deficit", *dmin, v.headline("min_deficit"));
  v.same_rational("bound n (W_max - W_min)", Rational(static_cast<long long>(players.size())) * (*wmax - *wmin),
                  v.headline("deficit_bound"));
  const Table e = v.table("epic");
  std::optional<Rational> emin;
  for (const auto& row : e.rows) {
    const Rational d = parse_rational(row[e.column("difference")]);
    if (!emin || d < *emin) emin = d;
  }
  v.same_rational("EPIC minimum difference", emin.value_or(0), v.headline("epic_min_difference"));
}

void verify_impossibility(Verifier& v) {
  const Table c = v.table("cells");
  std::size_t infeasible = 0, verified = 0;
  for (const auto& row : c.rows) {
    const Json doc = read_json_file(v.dir / (row[0] + ".json"));
    const auto [system, cert] = certificate_from_json(doc);
    const bool ok = verify_certificate(system, cert);
    verified += ok;
    infeasible += !cert.feasible;
    v.expect("certificate " + row[0] + " re-verifies from its serialized matrix", ok,
             cert.feasible ? "feasible point" : "Farkas witness");
    v.expect("status of " + row[0] + " matches the table",
             (cert.feasible ? "feasible" : "infeasible") == row[c.column("status")], row[c.column("status")]);
  }
  v.same_count("infeasible cells", infeasible, v.headline("infeasible_cells"));
  v.same_count("verified certificates", verified, v.headline("verified_certificates"));
  v.same_count("embedding agreements", v.ones(c, "agrees"), v.headline("embedding_agreements"));
}

}  // namespace

std::vector<Assertion> verify_report(const fs::path& dir) {
  Verifier v{dir, read_json_file(dir / "summary.json"), {}};
  const std::string kind = v.head.at("kind").get<std::string>();
  try {
    if (kind == "uniformize-check") {
      verify_uniformize(v);
    } else if (kind == "mpe-verify") {
      verify_mpe(v);
    } else if (kind == "inertia") {
      verify_inertia(v);
    } else if (kind == "dominance") {
      verify_dominance(v);
    } else if (kind == "monotonicity") {
      verify_monotonicity(v);
    } else if (kind == "pivot") {
      verify_pivot(v);
    } else if (kind == "impossibility") {
      verify_impossibility(v);
    } else {
      throw ParseError(dir.string() + ": unknown report kind \"" + kind + "\"");
    }
  } catch (const Json::exception& e) {
    throw ParseError(dir.string() + ": malformed report: " + e.what());
  }
  const Table a = v.table("assertions");
  std::size_t failed = 0;
  for (const auto& row : a.rows) failed += row[1] != "1";
  v.same_count("failed assertions", failed, v.head.at("assertions").at("failed"));
  return v.out;
}

}  // namespace ltg
