#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ltg/intervene.hpp"
#include "ltg/mech.hpp"

namespace ltg {

using Json = nlohmann::ordered_json;

/// Malformed or ill-typed input documents. Messages carry a JSON-pointer-like path.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rationals are written as strings ("7/20", "0.25", "1e-3"); plain JSON numbers are accepted
/// and read through their shortest round-tripping decimal.
Rational json_rational(const Json& value, const std::string& where);
Json rational_json(const Rational& value);

/// Reads a file as JSON; throws ParseError with the file name on failure.
Json read_json_file(const std::filesystem::path& path);

// Game documents. A joint state is a list of state names or a flat index; a control profile is
// a list of per-player control indices or a flat index. Unlisted rates and benefits are 0.
GameSpec game_from_json(const Json& doc);
Json game_to_json(const GameSpec& spec);

// Intervention documents: optional "transfers", "edits" and "signal"; anything else is rejected.
// Transfers are dimensioned against the game after the edits.
Intervention intervention_from_json(const Json& doc, const GameSpec& game);
Json intervention_to_json(const Intervention& intervention, const GameSpec& game);

TransferTable transfers_from_json(const Json& doc, const GameSpec& game);
Json transfers_to_json(const TransferTable& table, const GameSpec& game);

/// {"stationary": bool, "controls": [[...] per player]} over the augmented states of `ug`.
template <class S>
PolicyProfile policy_from_json(const Json& doc, const UniformizedGame<S>& ug);
Json policy_to_json(const PolicyProfile& profile);

TypeSpace types_from_json(const Json& doc);
Json types_to_json(const TypeSpace& ts);

/// Report profiles are keyed by the concatenation of their type labels ("LH").
std::string report_key(const TypeSpace& ts, std::size_t code);

/// Mechanism documents: "messages", named "policies", "allocation" (report key -> policy name),
/// sparse "transfers" and "timing". Policies are read against the typed games at `gamma`.
MechanismSpec mechanism_from_json(const Json& doc, const GameSpec& base, const TypeSpace& ts, const Rational& gamma);
Json mechanism_to_json(const MechanismSpec& mech, const TypeSpace& ts);

/// Full constraint matrix plus the certificate, all entries exact.
Json certificate_to_json(const LinearSystem& system, const FeasibilityCertificate& cert);
/// Inverse of certificate_to_json, for third-party re-verification.
std::pair<LinearSystem, FeasibilityCertificate> certificate_from_json(const Json& doc);

}  // namespace ltg
