#include <doctest.h>

#include <algorithm>
#include <random>

#include "ltg/intervene.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace ltg;
using PS = PlayerState;

TEST_SUITE("model") {

TEST_CASE("state space is mixed radix with player 0 most significant") {
  StateSpace ss({{PS::Active, PS::Sleep, PS::DeadOut}, {PS::Active, PS::Sleep}});
  CHECK(ss.size() == 6);
  CHECK(ss.encode({PS::Active, PS::Sleep}) == 1);
  CHECK(ss.encode({PS::Sleep, PS::Active}) == 2);
  CHECK(ss.encode({PS::DeadOut, PS::Sleep}) == 5);
  for (std::size_t s = 0; s < ss.size(); ++s) CHECK(ss.encode(ss.decode(s)) == s);
  CHECK(ss.with_player(0, 0, PS::DeadOut) == 4);
  CHECK(ss.player_state(3, 0) == PS::Sleep);
  CHECK_THROWS_AS(ss.encode({PS::DeadIn, PS::Active}), std::invalid_argument);
  CHECK_THROWS_AS(ss.encode({PS::Active}), std::invalid_argument);
}

TEST_CASE("profile space round trips and replaces single controls") {
  ProfileSpace ps({3, 2});
  CHECK(ps.size() == 6);
  for (std::size_t a = 0; a < ps.size(); ++a) CHECK(ps.encode(ps.decode(a)) == a);
  const std::vector<std::size_t> u = {2, 1};
  CHECK(ps.encode(u) == 5);
  CHECK(ps.with_control(5, 0, 0) == 1);
  CHECK(ps.control(5, 1) == 1);
}

TEST_CASE("state and kind names round trip") {
  for (std::size_t q = 0; q < kPlayerStateCount; ++q) {
    PS s = static_cast<PS>(q);
    CHECK(parse_player_state(to_string(s)) == s);
  }
  CHECK(parse_edge_kind(to_string(EdgeKind::DiscreteTransport)) == EdgeKind::DiscreteTransport);
  CHECK_THROWS_AS(parse_player_state("Dormant"), std::invalid_argument);
}

TEST_CASE("validation names the first violated invariant") {
  GameSpec g = support::one_player(1, 1, 1);
  SUBCASE("diagonal switching cost") {
    g.payoffs.switch_cost[0][1][1] = Rational(1, 2);
    CHECK_THROWS_WITH_AS(validate_game(g), doctest::Contains("diagonal switching cost"), ValidationError);
  }
  SUBCASE("negative rate") {
    g.rates.entries[RateKey{0, 0, PS::Sleep, 0}] = -1;
    CHECK_THROWS_WITH_AS(validate_game(g), doctest::Contains("negative rate"), ValidationError);
  }
  SUBCASE("rate bound") {
    g.rates.entries[RateKey{0, 0, PS::Sleep, 1}] = 2;
    CHECK_THROWS_WITH_AS(validate_game(g), doctest::Contains("rate bound exceeded at state 0, profile 1"),
                         ValidationError);
  }
  SUBCASE("ragged table") {
    g.payoffs.terminal.pop_back();
    CHECK_THROWS_WITH_AS(validate_game(g), doctest::Contains("ragged table"), ValidationError);
  }
  SUBCASE("self rate") {
    g.rates.entries[RateKey{0, 0, PS::Active, 1}] = Rational(1, 2);
    CHECK_THROWS_AS(validate_game(g), ValidationError);
  }
  SUBCASE("transport edge without a send coordinate") {
    GameSpec two = make_empty_game({{PS::Active}, {PS::Active}}, {{{0.0}}, {{0.0}}}, 1);
    two.edges.push_back(EdgeSpec{0, 1, EdgeKind::DiscreteTransport, 0, 1, -1});
    CHECK_THROWS_WITH_AS(validate_game(two), doctest::Contains("send coordinate"), ValidationError);
  }
}

TEST_CASE("zero dynamics is valid with zero exit rates") {
  GameSpec g = validate_game(make_empty_game({{PS::Active, PS::Sleep}, {PS::Sleep}}, {{{0.0}, {1.0}}, {{0.0}}}, 2));
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a) CHECK(g.exit_rate(s, a) == 0);
}

TEST_CASE("dominance family validates with activation cost B + 1") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  CHECK(f.kappa == 11);
  CHECK(f.continuous.validated());
  CHECK(f.discrete.validated());
  CHECK(f.continuous.payoffs.switch_cost[0][1][0] == 11);
  CHECK(f.continuous.payoffs.switch_cost[1][0][1] == 0);
}

TEST_CASE("cached exit rate is the sum of listed rates and within the bound") {
  for (const char* name : {"single_decay", "coordination_cf", "coordination_dt0", "dead_states", "asym_two_player",
                           "three_state"}) {
    const GameSpec g = support::corpus_game(name);
    const StateSpace ss = g.state_space();
    const ProfileSpace ps = g.profile_space();
    for (std::size_t s = 0; s < ss.size(); ++s)
      for (std::size_t a = 0; a < ps.size(); ++a) {
        Rational total = 0;
        for (const auto& [key, rate] : g.rates.entries)
          if (key.state == s && key.control == ps.control(a, key.player)) total += rate;
        CHECK(g.exit_rate(s, a) == total);
        CHECK(total <= g.rates.lambda_max);
      }
  }
}

TEST_CASE("continuous flow pays both endpoints only under joint activity") {
  const GameSpec g = dominance_family(10, 1, 40).continuous;
  const std::vector<std::size_t> stay = {0, 0};
  CHECK(benefit_rate(g, {PS::Active, PS::Active}, stay) == std::vector<Rational>{1, 1});
  CHECK(benefit_rate(g, {PS::Active, PS::Sleep}, stay) == std::vector<Rational>{0, 0});
  CHECK(benefit_rate(g, {PS::Sleep, PS::Sleep}, stay) == std::vector<Rational>{0, 0});
}

TEST_CASE("transport pays only on delivery to an active destination") {
  const GameSpec g = dominance_family(10, 1, 40, Rational(1, 2)).discrete;
  REQUIRE(edge_needs_token(g.edges[0]));
  const StateSpace ss = g.state_space();
  const std::vector<std::uint32_t> idle = {0}, delivering = {1};
  for (std::size_t s = 0; s < ss.size(); ++s)
    for (std::size_t a = 0; a < g.profile_space().size(); ++a)
      CHECK(benefit_rate(g, s, a, idle) == std::vector<Rational>{0, 0});
  const std::size_t sa = ss.encode({PS::Sleep, PS::Active});
  const std::size_t as = ss.encode({PS::Active, PS::Sleep});
  CHECK(benefit_rate(g, sa, 0, delivering) == std::vector<Rational>{1, 1});
  CHECK(benefit_rate(g, as, 0, delivering) == std::vector<Rational>{0, 0});
  CHECK_THROWS_AS(benefit_rate(g, sa, 0), std::invalid_argument);
}

TEST_CASE("benefit rate is invariant under permuting the edge list") {
  std::mt19937_64 rng(404);
  GameSpec g = make_empty_game({{PS::Active, PS::Sleep}, {PS::Active, PS::Sleep}, {PS::Active}},
                               {{{0.0}, {1.0}}, {{0.0}}, {{0.0}, {1.0}}}, 1);
  g.send_coords = {{0}, {}, {0}};
  g.edges = {EdgeSpec{0, 1, EdgeKind::ContinuousFlow, 0, 1, -1}, EdgeSpec{2, 0, EdgeKind::DiscreteTransport, 0, 3, 0},
             EdgeSpec{1, 2, EdgeKind::ContinuousFlow, 0, Rational(1, 2), -1},
             EdgeSpec{0, 2, EdgeKind::DiscreteTransport, 0, Rational(5, 4), 0}};
  const GameSpec base = validate_game(g);
  std::vector<std::size_t> order = {0, 1, 2, 3};
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    GameSpec p = base;
    for (std::size_t e = 0; e < order.size(); ++e) p.edges[e] = base.edges[order[e]];
    p = validate_game(std::move(p));
    for (std::size_t s = 0; s < base.state_space().size(); ++s)
      for (std::size_t a = 0; a < base.profile_space().size(); ++a) CHECK(benefit_rate(p, s, a) == benefit_rate(base, s, a));
  }
}

TEST_CASE("benefit rate agrees with the independent edge oracle") {
  for (const char* name : {"coordination_cf", "coordination_dt0", "asym_two_player"}) {
    const GameSpec g = support::corpus_game(name);
    const StateSpace ss = g.state_space();
    const ProfileSpace ps = g.profile_space();
    for (std::size_t s = 0; s < ss.size(); ++s)
      for (std::size_t a = 0; a < ps.size(); ++a)
        CHECK(benefit_rate(g, s, a) == oracle::edge_benefit(g, ss.decode(s), ps.decode(a), s, a));
  }
}

TEST_CASE("zero-latency transport with immediate send matches continuous flow under joint activity") {
  for (const Rational& gamma : {Rational(40), Rational(8)}) {
    const DominanceFamily f = dominance_family(10, 1, gamma);
    const auto uc = uniformize<Rational>(f.continuous, gamma);
    const auto ud = uniformize<Rational>(f.discrete, gamma);
    REQUIRE(ud.states == uc.states);
    const std::size_t aa = uc.state_space.encode({PS::Active, PS::Active});
    for (std::size_t a = 0; a < uc.profiles; ++a) {
      const auto u = uc.profile_space.decode(a);
      // The source's control c becomes 2c + 1 when it also sends.
      std::vector<std::size_t> v = {2 * u[0] + 1, u[1]};
      const std::size_t b = ud.profile_space.encode(v);
      for (std::size_t i = 0; i < 2; ++i)
        CHECK(ud.stage_reward[ud.row(aa, b) * 2 + i] == uc.stage_reward[uc.row(aa, a) * 2 + i]);
    }
  }
}

TEST_CASE("null control is silent and free") {
  const GameSpec g = support::corpus_game("single_decay");
  // Control 0 still decays, so neither control is silent.
  CHECK_FALSE(null_control(g, 0).has_value());
  const GameSpec f = dominance_family(10, 1, 40).continuous;
  CHECK(null_control(f, 0) == std::optional<std::size_t>(0));
}

TEST_CASE("transfer table caches its sup norm and broadcasts a single stage") {
  TransferTable t(1, 2, 2, 2);
  t.set(0, 1, 1, 0, -3.5);
  t.set(0, 0, 1, 1, 2.0);
  CHECK(t.norm() == 3.5);
  CHECK(t.at(7, 1, 1, 0) == -3.5);
  t.set(0, 1, 1, 0, 1.0);
  CHECK(t.norm() == 2.0);
  CHECK_THROWS_AS(TransferTable(0, 1, 1, 1), std::invalid_argument);
}

}  // TEST_SUITE
