#pragma once

#include <filesystem>
#include <string>

#include "ltg/config.hpp"

namespace support {

inline std::filesystem::path source_dir() { return LTG_SOURCE_DIR; }

inline ltg::GameSpec corpus_game(const std::string& name) {
  return ltg::game_from_json(ltg::read_json_file(source_dir() / "corpus" / "games" / (name + ".json")));
}

/// One player on {Active, Sleep} with controls {0, 1}; control 1 leaves Active at `rate`.
inline ltg::GameSpec one_player(const ltg::Rational& rate, const ltg::Rational& benefit, const ltg::Rational& horizon) {
  using ltg::PlayerState;
  ltg::GameSpec g = ltg::make_empty_game({{PlayerState::Active, PlayerState::Sleep}}, {{{0.0}, {1.0}}}, horizon);
  g.rates.lambda_max = rate;
  if (rate != 0) g.rates.entries[ltg::RateKey{0, 0, PlayerState::Sleep, 1}] = rate;
  g.payoffs.benefit[ltg::BenefitKey{0, 0, 0}] = benefit;
  g.payoffs.benefit[ltg::BenefitKey{0, 1, 0}] = benefit;
  return ltg::validate_game(std::move(g));
}

}  // namespace support
