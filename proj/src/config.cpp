#include "ltg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ltg {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ParseError(where + ": " + what); }

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing key \"") + key + "\"");
  return *it;
}

void only_keys(const Json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) fail(where, "unknown key \"" + it.key() + "\"");
  }
}

std::size_t as_index(const Json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(where, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

double as_double(const Json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return to_double(json_rational(v, where));
  fail(where, "expected a number");
}

std::string as_string(const Json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

const Json& as_array(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected a list");
  return v;
}

PlayerState as_state(const Json& v, const std::string& where) {
  try {
    return parse_player_state(as_string(v, where));
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

EdgeKind as_edge_kind(const Json& v, const std::string& where) {
  try {
    return parse_edge_kind(as_string(v, where));
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

std::size_t joint_state(const Json& v, const StateSpace& ss, const std::string& where) {
  if (v.is_number_integer()) {
    std::size_t s = as_index(v, where);
    if (s >= ss.size()) fail(where, "state index out of range");
    return s;
  }
  const Json& list = as_array(v, where);
  if (list.size() != ss.players()) fail(where, "joint state has the wrong length");
  JointState js;
  for (std::size_t i = 0; i < list.size(); ++i) js.push_back(as_state(list[i], where + "/" + std::to_string(i)));
  try {
    return ss.encode(js);
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

std::size_t control_profile(const Json& v, const ProfileSpace& ps, const std::string& where) {
  if (v.is_number_integer()) {
    std::size_t a = as_index(v, where);
    if (a >= ps.size()) fail(where, "profile index out of range");
    return a;
  }
  const Json& list = as_array(v, where);
  if (list.size() != ps.players()) fail(where, "control profile has the wrong length");
  std::vector<std::size_t> controls;
  for (std::size_t i = 0; i < list.size(); ++i) {
    controls.push_back(as_index(list[i], where + "/" + std::to_string(i)));
    if (controls.back() >= ps.count(i)) fail(where, "control index out of range");
  }
  return ps.encode(controls);
}

Json state_json(const StateSpace& ss, std::size_t s) {
  Json out = Json::array();
  for (PlayerState q : ss.decode(s)) out.push_back(std::string(to_string(q)));
  return out;
}

Json profile_json(const ProfileSpace& ps, std::size_t a) {
  Json out = Json::array();
  for (std::size_t c : ps.decode(a)) out.push_back(c);
  return out;
}

EdgeSpec edge_from_json(const Json& e, const std::string& where) {
  only_keys(e, {"src", "dst", "kind", "latency", "weight", "send_coord"}, where);
  EdgeSpec edge;
  edge.src = as_index(require(e, "src", where), where + "/src");
  edge.dst = as_index(require(e, "dst", where), where + "/dst");
  edge.kind = as_edge_kind(require(e, "kind", where), where + "/kind");
  if (e.contains("latency")) edge.latency = json_rational(e["latency"], where + "/latency");
  if (e.contains("weight")) edge.weight = json_rational(e["weight"], where + "/weight");
  if (e.contains("send_coord")) {
    if (!e["send_coord"].is_number_integer()) fail(where + "/send_coord", "expected an integer");
    edge.send_coord = e["send_coord"].get<int>();
  }
  return edge;
}

Json edge_to_json(const EdgeSpec& edge) {
  Json e;
  e["src"] = edge.src;
  e["dst"] = edge.dst;
  e["kind"] = std::string(to_string(edge.kind));
  e["latency"] = rational_json(edge.latency);
  e["weight"] = rational_json(edge.weight);
  e["send_coord"] = edge.send_coord;
  return e;
}

}  // namespace

Rational json_rational(const Json& value, const std::string& where) {
  try {
    if (value.is_string()) return parse_rational(value.get<std::string>());
    if (value.is_number_integer()) return Rational(value.get<long long>());
    if (value.is_number()) return rational_from_double(value.get<double>());
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  fail(where, "expected a rational (string or number)");
}

Json rational_json(const Rational& value) { return to_string(value); }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

GameSpec game_from_json(const Json& doc) {
  const std::string g = "game";
  only_keys(doc, {"allowed_states", "controls", "send_coords", "lambda_max", "rates", "benefit", "control_cost",
                  "switch_cost", "terminal", "edges", "horizon", "initial_state", "transfers", "name", "note"},
            g);
  const Json& allowed_json = as_array(require(doc, "allowed_states", g), g + "/allowed_states");
  std::vector<std::vector<PlayerState>> allowed;
  for (std::size_t i = 0; i < allowed_json.size(); ++i) {
    const std::string w = g + "/allowed_states/" + std::to_string(i);
    std::vector<PlayerState> row;
    for (const auto& q : as_array(allowed_json[i], w)) row.push_back(as_state(q, w));
    allowed.push_back(std::move(row));
  }
  const Json& controls_json = as_array(require(doc, "controls", g), g + "/controls");
  ControlGrid controls;
  for (std::size_t i = 0; i < controls_json.size(); ++i) {
    const std::string w = g + "/controls/" + std::to_string(i);
    std::vector<ControlPoint> row;
    for (const auto& point : as_array(controls_json[i], w)) {
      ControlPoint p;
      for (const auto& c : as_array(point, w)) p.push_back(as_double(c, w));
      row.push_back(std::move(p));
    }
    controls.push_back(std::move(row));
  }
  if (allowed.size() != controls.size()) fail(g, "allowed_states and controls disagree on the player count");
  const Rational horizon = json_rational(require(doc, "horizon", g), g + "/horizon");
  GameSpec spec;
  try {
    spec = make_empty_game(allowed, controls, horizon);
  } catch (const std::invalid_argument& e) {
    fail(g, e.what());
  }
  const StateSpace ss = spec.state_space();
  const ProfileSpace ps = spec.profile_space();

  if (doc.contains("send_coords")) {
    const Json& sc = as_array(doc["send_coords"], g + "/send_coords");
    if (sc.size() != spec.n) fail(g + "/send_coords", "wrong player count");
    for (std::size_t i = 0; i < spec.n; ++i)
      for (const auto& c : as_array(sc[i], g + "/send_coords")) spec.send_coords[i].push_back(as_index(c, g));
  }
  spec.rates.lambda_max = json_rational(require(doc, "lambda_max", g), g + "/lambda_max");
  if (doc.contains("rates")) {
    const Json& rates = as_array(doc["rates"], g + "/rates");
    for (std::size_t j = 0; j < rates.size(); ++j) {
      const std::string w = g + "/rates/" + std::to_string(j);
      only_keys(rates[j], {"state", "player", "target", "control", "rate"}, w);
      RateKey key;
      key.state = joint_state(require(rates[j], "state", w), ss, w + "/state");
      key.player = as_index(require(rates[j], "player", w), w + "/player");
      if (key.player >= spec.n) fail(w, "player out of range");
      key.target = as_state(require(rates[j], "target", w), w + "/target");
      key.control = as_index(require(rates[j], "control", w), w + "/control");
      if (key.control >= spec.controls[key.player].size()) fail(w, "control out of range");
      if (spec.rates.entries.count(key)) fail(w, "duplicate rate entry");
      spec.rates.entries[key] = json_rational(require(rates[j], "rate", w), w + "/rate");
    }
  }
  if (doc.contains("benefit")) {
    const Json& ben = as_array(doc["benefit"], g + "/benefit");
    for (std::size_t j = 0; j < ben.size(); ++j) {
      const std::string w = g + "/benefit/" + std::to_string(j);
      only_keys(ben[j], {"state", "profile", "player", "value"}, w);
      BenefitKey key;
      key.state = joint_state(require(ben[j], "state", w), ss, w + "/state");
      key.profile = control_profile(require(ben[j], "profile", w), ps, w + "/profile");
      key.player = as_index(require(ben[j], "player", w), w + "/player");
      if (key.player >= spec.n) fail(w, "player out of range");
      spec.payoffs.benefit[key] = json_rational(require(ben[j], "value", w), w + "/value");
    }
  }
  if (doc.contains("control_cost")) {
    const Json& cc = as_array(doc["control_cost"], g + "/control_cost");
    if (cc.size() != spec.n) fail(g + "/control_cost", "wrong player count");
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::string w = g + "/control_cost/" + std::to_string(i);
      const Json& row = as_array(cc[i], w);
      if (row.size() != spec.controls[i].size()) fail(w, "ragged table: one cost per control expected");
      for (std::size_t c = 0; c < row.size(); ++c) spec.payoffs.control_cost[i][c] = json_rational(row[c], w);
    }
  }
  if (doc.contains("switch_cost")) {
    const Json& sw = as_array(doc["switch_cost"], g + "/switch_cost");
    for (std::size_t j = 0; j < sw.size(); ++j) {
      const std::string w = g + "/switch_cost/" + std::to_string(j);
      only_keys(sw[j], {"player", "from", "to", "value"}, w);
      const std::size_t i = as_index(require(sw[j], "player", w), w + "/player");
      if (i >= spec.n) fail(w, "player out of range");
      const PlayerState from = as_state(require(sw[j], "from", w), w + "/from");
      const PlayerState to = as_state(require(sw[j], "to", w), w + "/to");
      spec.payoffs.switch_cost[i][static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] =
          json_rational(require(sw[j], "value", w), w + "/value");
    }
  }
  if (doc.contains("terminal")) {
    const Json& term = as_array(doc["terminal"], g + "/terminal");
    for (std::size_t j = 0; j < term.size(); ++j) {
      const std::string w = g + "/terminal/" + std::to_string(j);
      only_keys(term[j], {"state", "player", "value"}, w);
      const std::size_t s = joint_state(require(term[j], "state", w), ss, w + "/state");
      const std::size_t i = as_index(require(term[j], "player", w), w + "/player");
      if (i >= spec.n) fail(w, "player out of range");
      spec.payoffs.terminal[s * spec.n + i] = json_rational(require(term[j], "value", w), w + "/value");
    }
  }
  if (doc.contains("edges")) {
    const Json& edges = as_array(doc["edges"], g + "/edges");
    for (std::size_t j = 0; j < edges.size(); ++j)
      spec.edges.push_back(edge_from_json(edges[j], g + "/edges/" + std::to_string(j)));
  }
  const Json& init = as_array(require(doc, "initial_state", g), g + "/initial_state");
  spec.initial_state.clear();
  for (std::size_t i = 0; i < init.size(); ++i) spec.initial_state.push_back(as_state(init[i], g + "/initial_state"));
  if (doc.contains("transfers")) spec.transfers = transfers_from_json(doc["transfers"], spec);
  try {
    return validate_game(std::move(spec));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("game: ") + e.what());
  }
}

Json game_to_json(const GameSpec& spec) {
  const StateSpace ss = spec.state_space();
  const ProfileSpace ps = spec.profile_space();
  Json doc;
  Json allowed = Json::array();
  for (const auto& row : spec.allowed_states) {
    Json r = Json::array();
    for (PlayerState q : row) r.push_back(std::string(to_string(q)));
    allowed.push_back(r);
  }
  doc["allowed_states"] = allowed;
  doc["controls"] = spec.controls;
  doc["send_coords"] = spec.send_coords;
  doc["lambda_max"] = rational_json(spec.rates.lambda_max);
  Json rates = Json::array();
  for (const auto& [key, rate] : spec.rates.entries) {
    if (rate == 0) continue;
    rates.push_back({{"state", state_json(ss, key.state)},
                     {"player", key.player},
                     {"target", std::string(to_string(key.target))},
                     {"control", key.control},
                     {"rate", rational_json(rate)}});
  }
  doc["rates"] = rates;
  Json benefit = Json::array();
  for (const auto& [key, value] : spec.payoffs.benefit) {
    if (value == 0) continue;
    benefit.push_back({{"state", state_json(ss, key.state)},
                       {"profile", profile_json(ps, key.profile)},
                       {"player", key.player},
                       {"value", rational_json(value)}});
  }
  doc["benefit"] = benefit;
  Json cc = Json::array();
  for (const auto& row : spec.payoffs.control_cost) {
    Json r = Json::array();
    for (const auto& c : row) r.push_back(rational_json(c));
    cc.push_back(r);
  }
  doc["control_cost"] = cc;
  Json sw = Json::array();
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t f = 0; f < kPlayerStateCount; ++f)
      for (std::size_t t = 0; t < kPlayerStateCount; ++t)
        if (spec.payoffs.switch_cost[i][f][t] != 0)
          sw.push_back({{"player", i},
                        {"from", std::string(to_string(static_cast<PlayerState>(f)))},
                        {"to", std::string(to_string(static_cast<PlayerState>(t)))},
                        {"value", rational_json(spec.payoffs.switch_cost[i][f][t])}});
  doc["switch_cost"] = sw;
  Json term = Json::array();
  for (std::size_t s = 0; s < ss.size(); ++s)
    for (std::size_t i = 0; i < spec.n; ++i)
      if (spec.payoffs.terminal[s * spec.n + i] != 0)
        term.push_back(
            {{"state", state_json(ss, s)}, {"player", i}, {"value", rational_json(spec.payoffs.terminal[s * spec.n + i])}});
  doc["terminal"] = term;
  Json edges = Json::array();
  for (const auto& e : spec.edges) edges.push_back(edge_to_json(e));
  doc["edges"] = edges;
  doc["horizon"] = rational_json(spec.horizon);
  Json init = Json::array();
  for (PlayerState q : spec.initial_state) init.push_back(std::string(to_string(q)));
  doc["initial_state"] = init;
  if (spec.transfers) doc["transfers"] = transfers_to_json(*spec.transfers, spec);
  return doc;
}

TransferTable transfers_from_json(const Json& doc, const GameSpec& game) {
  const std::string w = "transfers";
  only_keys(doc, {"stages", "entries"}, w);
  const StateSpace ss = game.state_space();
  const ProfileSpace ps = game.profile_space();
  const std::size_t stages = doc.contains("stages") ? as_index(doc["stages"], w + "/stages") : 1;
  if (stages == 0) fail(w + "/stages", "must be positive");
  TransferTable table(stages, ss.size(), ps.size(), game.n);
  if (!doc.contains("entries")) return table;
  const Json& entries = as_array(doc["entries"], w + "/entries");
  for (std::size_t j = 0; j < entries.size(); ++j) {
    const std::string e = w + "/entries/" + std::to_string(j);
    only_keys(entries[j], {"stage", "state", "profile", "player", "value"}, e);
    const std::size_t k = entries[j].contains("stage") ? as_index(entries[j]["stage"], e + "/stage") : 0;
    if (k >= stages) fail(e, "stage out of range");
    const std::size_t s = joint_state(require(entries[j], "state", e), ss, e + "/state");
    const std::size_t i = as_index(require(entries[j], "player", e), e + "/player");
    if (i >= game.n) fail(e, "player out of range");
    const double value = as_double(require(entries[j], "value", e), e + "/value");
    // An omitted profile applies to every control profile.
    if (entries[j].contains("profile")) {
      table.set(k, s, control_profile(entries[j]["profile"], ps, e + "/profile"), i, value);
    } else {
      for (std::size_t a = 0; a < ps.size(); ++a) table.set(k, s, a, i, value);
    }
  }
  return table;
}

Json transfers_to_json(const TransferTable& table, const GameSpec& game) {
  const StateSpace ss = game.state_space();
  const ProfileSpace ps = game.profile_space();
  Json entries = Json::array();
  for (std::size_t k = 0; k < table.stages(); ++k)
    for (std::size_t s = 0; s < table.states(); ++s)
      for (std::size_t a = 0; a < table.profiles(); ++a)
        for (std::size_t i = 0; i < table.players(); ++i) {
          const double v = table.at(k, s, a, i);
          if (v == 0) continue;
          entries.push_back({{"stage", k},
                             {"state", state_json(ss, s)},
                             {"profile", profile_json(ps, a)},
                             {"player", i},
                             {"value", v}});
        }
  return Json{{"stages", table.stages()}, {"entries", entries}};
}

Intervention intervention_from_json(const Json& doc, const GameSpec& game) {
  const std::string w = "intervention";
  only_keys(doc, {"transfers", "edits", "signal"}, w);
  Intervention out;
  if (doc.contains("edits")) {
    const Json& edits = as_array(doc["edits"], w + "/edits");
    for (std::size_t j = 0; j < edits.size(); ++j) {
      const std::string e = w + "/edits/" + std::to_string(j);
      const std::string op = as_string(require(edits[j], "op", e), e + "/op");
      if (op == "delete") {
        only_keys(edits[j], {"op", "edge"}, e);
        out.edits.push_back(StructuralEdit::remove(as_index(require(edits[j], "edge", e), e + "/edge")));
      } else if (op == "add") {
        only_keys(edits[j], {"op", "edge"}, e);
        out.edits.push_back(StructuralEdit::add(edge_from_json(require(edits[j], "edge", e), e + "/edge")));
      } else if (op == "retype") {
        only_keys(edits[j], {"op", "edge", "kind", "latency"}, e);
        Rational latency = edits[j].contains("latency") ? json_rational(edits[j]["latency"], e + "/latency") : 0;
        out.edits.push_back(StructuralEdit::retype(as_index(require(edits[j], "edge", e), e + "/edge"),
                                                   as_edge_kind(require(edits[j], "kind", e), e + "/kind"), latency));
      } else {
        fail(e + "/op", "unknown edit \"" + op + "\"");
      }
    }
  }
  if (doc.contains("transfers")) {
    const GameSpec edited = out.edits.empty() ? game : apply_structural(game, out.edits);
    out.transfers = transfers_from_json(doc["transfers"], edited);
  }
  if (doc.contains("signal")) {
    const std::string s = w + "/signal";
    const Json& sig = doc["signal"];
    only_keys(sig, {"labels", "stages", "probs"}, s);
    SignalKernel kernel;
    for (const auto& l : as_array(require(sig, "labels", s), s + "/labels")) kernel.labels.push_back(as_string(l, s));
    kernel.stages = sig.contains("stages") ? as_index(sig["stages"], s + "/stages") : 1;
    kernel.states = game.state_space().size();
    const Json& rows = as_array(require(sig, "probs", s), s + "/probs");
    if (rows.size() != kernel.stages * kernel.states) fail(s + "/probs", "one row per (stage, state) expected");
    for (const auto& row : rows) {
      const Json& r = as_array(row, s + "/probs");
      if (r.size() != kernel.labels.size()) fail(s + "/probs", "ragged table: one probability per label expected");
      for (const auto& p : r) kernel.probs.push_back(as_double(p, s + "/probs"));
    }
    validate_signal(kernel);
    out.signal = std::move(kernel);
  }
  return out;
}

Json intervention_to_json(const Intervention& intervention, const GameSpec& game) {
  Json doc = Json::object();
  if (!intervention.edits.empty()) {
    Json edits = Json::array();
    for (const auto& e : intervention.edits) {
      switch (e.kind) {
        case StructuralEdit::Kind::DeleteEdge:
          edits.push_back({{"op", "delete"}, {"edge", e.index}});
          break;
        case StructuralEdit::Kind::AddEdge:
          edits.push_back({{"op", "add"}, {"edge", edge_to_json(e.edge)}});
          break;
        case StructuralEdit::Kind::RetypeEdge:
          edits.push_back({{"op", "retype"},
                           {"edge", e.index},
                           {"kind", std::string(to_string(e.new_kind))},
                           {"latency", rational_json(e.latency)}});
          break;
      }
    }
    doc["edits"] = edits;
  }
  if (intervention.transfers) {
    const GameSpec edited = intervention.edits.empty() ? game : apply_structural(game, intervention.edits);
    doc["transfers"] = transfers_to_json(*intervention.transfers, edited);
  }
  if (intervention.signal) {
    const SignalKernel& k = *intervention.signal;
    Json rows = Json::array();
    const std::size_t L = k.labels.size();
    for (std::size_t r = 0; r < k.stages * k.states; ++r)
      rows.push_back(std::vector<double>(k.probs.begin() + r * L, k.probs.begin() + (r + 1) * L));
    doc["signal"] = {{"labels", k.labels}, {"stages", k.stages}, {"probs", rows}};
  }
  return doc;
}

template <class S>
PolicyProfile policy_from_json(const Json& doc, const UniformizedGame<S>& ug) {
  const std::string w = "policy";
  only_keys(doc, {"stationary", "controls"}, w);
  const bool stationary = doc.contains("stationary") ? doc["stationary"].get<bool>() : true;
  const Json& controls = as_array(require(doc, "controls", w), w + "/controls");
  if (controls.size() != ug.n) fail(w + "/controls", "one list per player expected");
  PolicyProfile profile;
  profile.stages = ug.stages;
  profile.states = ug.states;
  for (std::size_t i = 0; i < ug.n; ++i) {
    PlayerPolicy p;
    p.stationary = stationary;
    const std::string pw = w + "/controls/" + std::to_string(i);
    const Json& row = as_array(controls[i], pw);
    // A single entry broadcasts over every (stage, state).
    const std::size_t size = stationary ? ug.states : ug.stages * ug.states;
    if (row.size() != size && row.size() != 1) fail(pw, "expected " + std::to_string(size) + " controls");
    for (std::size_t j = 0; j < size; ++j)
      p.controls.push_back(static_cast<std::uint32_t>(as_index(row[row.size() == 1 ? 0 : j], pw)));
    profile.players.push_back(std::move(p));
  }
  try {
    check_profile(ug, profile);
  } catch (const std::invalid_argument& e) {
    fail(w, e.what());
  }
  return profile;
}

Json policy_to_json(const PolicyProfile& profile) {
  Json controls = Json::array();
  bool stationary = true;
  for (const auto& p : profile.players) {
    stationary = stationary && p.stationary;
    controls.push_back(p.controls);
  }
  if (!stationary) {
    // Mixed profiles are written fully expanded.
    controls = Json::array();
    for (std::size_t i = 0; i < profile.players.size(); ++i) {
      std::vector<std::uint32_t> row;
      for (std::size_t k = 0; k < profile.stages; ++k)
        for (std::size_t x = 0; x < profile.states; ++x)
          row.push_back(static_cast<std::uint32_t>(profile.control(i, k, x)));
      controls.push_back(row);
    }
  }
  return Json{{"stationary", stationary}, {"controls", controls}};
}

TypeSpace types_from_json(const Json& doc) {
  const std::string w = "types";
  only_keys(doc, {"players", "prior"}, w);
  TypeSpace ts;
  const Json& players = as_array(require(doc, "players", w), w + "/players");
  for (std::size_t i = 0; i < players.size(); ++i) {
    std::vector<PlayerType> row;
    const Json& types = as_array(players[i], w + "/players/" + std::to_string(i));
    for (std::size_t t = 0; t < types.size(); ++t) {
      const std::string tw = w + "/players/" + std::to_string(i) + "/" + std::to_string(t);
      only_keys(types[t], {"label", "overrides"}, tw);
      PlayerType type;
      type.label = as_string(require(types[t], "label", tw), tw + "/label");
      if (types[t].contains("overrides"))
        for (const auto& o : as_array(types[t]["overrides"], tw + "/overrides")) {
          ParamOverride po;
          const std::string kind = as_string(require(o, "kind", tw), tw + "/kind");
          if (kind == "switch_cost") {
            only_keys(o, {"kind", "from", "to", "value"}, tw);
            po.kind = ParamOverride::Kind::SwitchCost;
            po.from = as_state(require(o, "from", tw), tw + "/from");
            po.to = as_state(require(o, "to", tw), tw + "/to");
          } else if (kind == "control_cost" || kind == "edge_weight") {
            only_keys(o, {"kind", "index", "value"}, tw);
            po.kind = kind == "control_cost" ? ParamOverride::Kind::ControlCost : ParamOverride::Kind::EdgeWeight;
            po.index = as_index(require(o, "index", tw), tw + "/index");
          } else {
            fail(tw + "/kind", "unknown override \"" + kind + "\"");
          }
          po.value = json_rational(require(o, "value", tw), tw + "/value");
          type.overrides.push_back(po);
        }
      row.push_back(std::move(type));
    }
    ts.types.push_back(std::move(row));
  }
  const Json& prior = as_array(require(doc, "prior", w), w + "/prior");
  for (const auto& row : prior) {
    std::vector<Rational> p;
    for (const auto& v : as_array(row, w + "/prior")) p.push_back(json_rational(v, w + "/prior"));
    ts.prior.push_back(std::move(p));
  }
  validate_types(ts);
  return ts;
}

Json types_to_json(const TypeSpace& ts) {
  Json players = Json::array();
  for (const auto& row : ts.types) {
    Json r = Json::array();
    for (const auto& t : row) {
      Json overrides = Json::array();
      for (const auto& o : t.overrides) {
        switch (o.kind) {
          case ParamOverride::Kind::SwitchCost:
            overrides.push_back({{"kind", "switch_cost"},
                                 {"from", std::string(to_string(o.from))},
                                 {"to", std::string(to_string(o.to))},
                                 {"value", rational_json(o.value)}});
            break;
          case ParamOverride::Kind::ControlCost:
          case ParamOverride::Kind::EdgeWeight:
            overrides.push_back({{"kind", o.kind == ParamOverride::Kind::ControlCost ? "control_cost" : "edge_weight"},
                                 {"index", o.index},
                                 {"value", rational_json(o.value)}});
            break;
        }
      }
      r.push_back({{"label", t.label}, {"overrides", overrides}});
    }
    players.push_back(r);
  }
  Json prior = Json::array();
  for (const auto& row : ts.prior) {
    Json r = Json::array();
    for (const auto& p : row) r.push_back(rational_json(p));
    prior.push_back(r);
  }
  return Json{{"players", players}, {"prior", prior}};
}

std::string report_key(const TypeSpace& ts, std::size_t code) {
  const auto profile = ts.decode(code);
  std::string key;
  for (std::size_t i = 0; i < profile.size(); ++i) key += ts.types[i][profile[i]].label;
  return key;
}

MechanismSpec mechanism_from_json(const Json& doc, const GameSpec& base, const TypeSpace& ts, const Rational& gamma) {
  const std::string w = "mechanism";
  only_keys(doc, {"messages", "policies", "allocation", "transfers", "timing"}, w);
  MechanismSpec mech;
  const std::size_t P = ts.profile_count(), n = ts.players();
  std::map<std::string, std::size_t> codes;
  for (std::size_t c = 0; c < P; ++c)
    if (!codes.emplace(report_key(ts, c), c).second) fail(w, "type labels do not give unique report keys");

  if (doc.contains("messages")) {
    for (const auto& row : as_array(doc["messages"], w + "/messages")) {
      std::vector<std::string> labels;
      for (const auto& l : as_array(row, w + "/messages")) labels.push_back(as_string(l, w + "/messages"));
      mech.messages.push_back(std::move(labels));
    }
  } else {
    for (const auto& row : ts.types) {
      std::vector<std::string> labels;
      for (const auto& t : row) labels.push_back(t.label);
      mech.messages.push_back(std::move(labels));
    }
  }
  const std::string timing = doc.contains("timing") ? as_string(doc["timing"], w + "/timing") : "once";
  if (timing == "once") {
    mech.timing = ReportTiming::Once;
  } else if (timing == "continual") {
    mech.timing = ReportTiming::Continual;
  } else {
    fail(w + "/timing", "expected \"once\" or \"continual\"");
  }

  // Policies only depend on the augmented state layout, which types never change.
  const auto ug = uniformize<double>(base, gamma);
  std::map<std::string, PolicyProfile> policies;
  const Json& pol = require(doc, "policies", w);
  if (!pol.is_object()) fail(w + "/policies", "expected an object");
  for (auto it = pol.begin(); it != pol.end(); ++it) policies.emplace(it.key(), policy_from_json(it.value(), ug));
  const Json& alloc = require(doc, "allocation", w);
  if (!alloc.is_object()) fail(w + "/allocation", "expected an object");
  mech.allocation.resize(P);
  std::vector<bool> seen(P, false);
  for (auto it = alloc.begin(); it != alloc.end(); ++it) {
    auto c = codes.find(it.key());
    if (c == codes.end()) fail(w + "/allocation", "unknown report profile \"" + it.key() + "\"");
    const std::string name = as_string(it.value(), w + "/allocation/" + it.key());
    auto p = policies.find(name);
    if (p == policies.end()) fail(w + "/allocation/" + it.key(), "unknown policy \"" + name + "\"");
    mech.allocation[c->second] = p->second;
    seen[c->second] = true;
  }
  for (std::size_t c = 0; c < P; ++c)
    if (!seen[c]) fail(w + "/allocation", "report profile \"" + report_key(ts, c) + "\" has no policy");

  mech.transfers.resize(P);
  if (doc.contains("transfers")) {
    const Json& tr = as_array(doc["transfers"], w + "/transfers");
    for (std::size_t j = 0; j < tr.size(); ++j) {
      const std::string e = w + "/transfers/" + std::to_string(j);
      only_keys(tr[j], {"report", "stage", "state", "values"}, e);
      const std::string key = as_string(require(tr[j], "report", e), e + "/report");
      auto c = codes.find(key);
      if (c == codes.end()) fail(e, "unknown report profile \"" + key + "\"");
      const std::size_t k = tr[j].contains("stage") ? as_index(tr[j]["stage"], e + "/stage") : 0;
      std::size_t x = initial_index(ug);
      if (tr[j].contains("state")) {
        x = as_index(tr[j]["state"], e + "/state");
        if (x >= ug.states) fail(e, "state index out of range");
      }
      const Json& values = as_array(require(tr[j], "values", e), e + "/values");
      if (values.size() != n) fail(e, "one transfer per player expected");
      std::vector<Rational> v;
      for (const auto& t : values) v.push_back(json_rational(t, e + "/values"));
      mech.transfers[c->second][{k, x}] = std::move(v);
    }
  }
  return mech;
}

Json mechanism_to_json(const MechanismSpec& mech, const TypeSpace& ts) {
  Json doc;
  doc["messages"] = mech.messages;
  doc["timing"] = mech.timing == ReportTiming::Once ? "once" : "continual";
  // Identical allocations share a policy name.
  Json policies = Json::object();
  Json allocation = Json::object();
  std::vector<std::pair<PolicyProfile, std::string>> named;
  for (std::size_t c = 0; c < mech.allocation.size(); ++c) {
    std::string name;
    for (const auto& [p, nm] : named)
      if (p == mech.allocation[c]) name = nm;
    if (name.empty()) {
      name = "g" + std::to_string(named.size());
      named.emplace_back(mech.allocation[c], name);
      policies[name] = policy_to_json(mech.allocation[c]);
    }
    allocation[report_key(ts, c)] = name;
  }
  doc["policies"] = policies;
  doc["allocation"] = allocation;
  Json transfers = Json::array();
  for (std::size_t c = 0; c < mech.transfers.size(); ++c)
    for (const auto& [key, values] : mech.transfers[c]) {
      Json v = Json::array();
      for (const auto& t : values) v.push_back(rational_json(t));
      transfers.push_back({{"report", report_key(ts, c)}, {"stage", key.first}, {"state", key.second}, {"values", v}});
    }
  doc["transfers"] = transfers;
  return doc;
}

Json certificate_to_json(const LinearSystem& system, const FeasibilityCertificate& cert) {
  Json rows = Json::array();
  for (std::size_t j = 0; j < system.rows.size(); ++j) {
    Json coef = Json::array();
    for (const auto& c : system.rows[j]) coef.push_back(rational_json(c));
    rows.push_back({{"label", system.labels[j]},
                    {"sense", system.sense[j] == Sense::Equal ? "=" : "<="},
                    {"coefficients", coef},
                    {"rhs", rational_json(system.rhs[j])}});
  }
  Json doc;
  doc["variables"] = system.var_names;
  doc["rows"] = rows;
  doc["status"] = cert.feasible ? "feasible" : "infeasible";
  if (cert.feasible) {
    Json sol = Json::array();
    for (const auto& v : cert.solution) sol.push_back(rational_json(v));
    doc["solution"] = sol;
  } else {
    const LinearSystem expanded = expand_equalities(system);
    Json mult = Json::array();
    for (std::size_t j = 0; j < cert.multipliers.size(); ++j)
      mult.push_back({{"row", expanded.labels[j]}, {"weight", rational_json(cert.multipliers[j])}});
    doc["multipliers"] = mult;
  }
  return doc;
}

std::pair<LinearSystem, FeasibilityCertificate> certificate_from_json(const Json& doc) {
  const std::string w = "certificate";
  LinearSystem sys;
  for (const auto& v : as_array(require(doc, "variables", w), w + "/variables"))
    sys.var_names.push_back(as_string(v, w + "/variables"));
  sys.vars = sys.var_names.size();
  for (const auto& row : as_array(require(doc, "rows", w), w + "/rows")) {
    std::vector<Rational> coef;
    for (const auto& c : as_array(require(row, "coefficients", w), w + "/rows")) coef.push_back(json_rational(c, w));
    if (coef.size() != sys.vars) fail(w + "/rows", "ragged table: row width differs from the variable count");
    const std::string sense = as_string(require(row, "sense", w), w + "/rows");
    if (sense != "=" && sense != "<=") fail(w + "/rows", "sense must be \"=\" or \"<=\"");
    sys.add_row(std::move(coef), sense == "=" ? Sense::Equal : Sense::LessEq, json_rational(require(row, "rhs", w), w),
                as_string(require(row, "label", w), w + "/rows"));
  }
  FeasibilityCertificate cert;
  cert.feasible = as_string(require(doc, "status", w), w + "/status") == "feasible";
  if (cert.feasible) {
    for (const auto& v : as_array(require(doc, "solution", w), w + "/solution"))
      cert.solution.push_back(json_rational(v, w));
  } else {
    for (const auto& m : as_array(require(doc, "multipliers", w), w + "/multipliers"))
      cert.multipliers.push_back(json_rational(require(m, "weight", w), w));
  }
  return {std::move(sys), std::move(cert)};
}

template PolicyProfile policy_from_json<double>(const Json&, const UniformizedGame<double>&);
template PolicyProfile policy_from_json<Rational>(const Json&, const UniformizedGame<Rational>&);

}  // namespace ltg
