#include <doctest.h>

#include <algorithm>

#include "ltg/inertia.hpp"
#include "support.hpp"

using namespace ltg;
using PS = PlayerState;

namespace {

std::vector<std::uint64_t> mpe_codes(const UniformizedGame<double>& ug) {
  std::vector<std::uint64_t> out;
  for (const auto& c : enumerate_mpe(ug, 1e-9)) out.push_back(c.code);
  return out;
}

}  // namespace

TEST_SUITE("intervene") {

TEST_CASE("zero transfers leave every value table unchanged") {
  const GameSpec g = support::corpus_game("coordination_cf");
  const GameSpec induced = apply_transfers(g, TransferTable(1, 4, 4, 2));
  const auto a = uniformize<Rational>(g, 8), b = uniformize<Rational>(induced, 8);
  for (std::uint64_t code = 0; code < stationary_count(a); code += 17) {
    const auto va = joint_value(a, decode_stationary(a, code));
    const auto vb = joint_value(b, decode_stationary(b, code));
    CHECK(va.values == vb.values);
  }
}

TEST_CASE("a constant transfer shifts values by c (T - t) and keeps every equilibrium") {
  const GameSpec g = support::corpus_game("single_decay");
  const double c = 0.75;
  TransferTable t(1, 2, 2, 1);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a) t.set(0, s, a, 0, c);
  const GameSpec induced = apply_transfers(g, t);
  const auto a = uniformize<Rational>(g, 10), b = uniformize<Rational>(induced, 10);
  for (std::uint64_t code = 0; code < stationary_count(a); ++code) {
    const auto va = joint_value(a, decode_stationary(a, code));
    const auto vb = joint_value(b, decode_stationary(b, code));
    for (std::size_t k = 0; k <= a.stages; ++k)
      for (std::size_t x = 0; x < a.states; ++x)
        CHECK(vb.at(0, k, x) - va.at(0, k, x) == rational_from_double(c) * a.remaining(k));
  }
  const auto da = uniformize<double>(g, 10), db = uniformize<double>(induced, 10);
  CHECK(mpe_codes(da) == mpe_codes(db));
}

TEST_CASE("transfers never touch the transition kernel") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  const GameSpec induced = apply_transfers(f.continuous, random_transfers(f.continuous, 40, 5, 3));
  const auto a = uniformize<double>(f.continuous, 40), b = uniformize<double>(induced, 40);
  CHECK(a.row_begin == b.row_begin);
  REQUIRE(a.arcs.size() == b.arcs.size());
  for (std::size_t j = 0; j < a.arcs.size(); ++j) {
    CHECK(a.arcs[j].target == b.arcs[j].target);
    CHECK(a.arcs[j].prob == b.arcs[j].prob);
  }
  CHECK(a.switch_cost == b.switch_cost);
  CHECK(induced.rates == f.continuous.rates);
}

TEST_CASE("transfers accumulate") {
  const GameSpec g = support::corpus_game("single_decay");
  TransferTable t(1, 2, 2, 1);
  t.set(0, 1, 0, 0, 2.0);
  const GameSpec twice = apply_transfers(apply_transfers(g, t), t);
  CHECK(twice.transfers->at(0, 1, 0, 0) == 4.0);
  CHECK_THROWS_AS(apply_transfers(g, TransferTable(1, 3, 2, 1)), std::invalid_argument);
}

TEST_CASE("deleting the only edge leaves the stored benefits") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  const GameSpec g = apply_structural(f.continuous, {StructuralEdit::remove(0)});
  CHECK(g.edges.empty());
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t a = 0; a < 4; ++a) CHECK(benefit_rate(g, s, a) == std::vector<Rational>{0, 0});
  CHECK_THROWS_AS(apply_structural(f.continuous, {StructuralEdit::remove(3)}), std::invalid_argument);
}

TEST_CASE("retyping the family edge produces the transport variant") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  const GameSpec d = apply_structural(f.continuous, {StructuralEdit::retype(0, EdgeKind::DiscreteTransport, 0)});
  CHECK(d == f.discrete);
  CHECK(d.edges[0].kind == EdgeKind::DiscreteTransport);
  CHECK(d.controls[0].size() == 4);
  CHECK(d.controls[0][3] == ControlPoint{1.0, 1.0});
  CHECK(d.send_coords[0] == std::vector<std::size_t>{1});
}

TEST_CASE("adding then deleting an edge restores the canonical game") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  const EdgeSpec extra{1, 0, EdgeKind::ContinuousFlow, 0, 2, -1};
  const GameSpec g = apply_structural(f.continuous, {StructuralEdit::add(extra), StructuralEdit::remove(1)});
  CHECK(g == f.continuous);
  // The same holds for a transport edge, whose send coordinate is dropped again.
  const EdgeSpec transport{1, 0, EdgeKind::DiscreteTransport, 0, 2, -1};
  const GameSpec h = apply_structural(f.continuous, {StructuralEdit::add(transport), StructuralEdit::remove(1)});
  CHECK(h == f.continuous);
}

TEST_CASE("edit lists compose") {
  const GameSpec g = support::corpus_game("asym_two_player");
  const std::vector<StructuralEdit> e = {StructuralEdit::retype(0, EdgeKind::DiscreteTransport, 0),
                                         StructuralEdit::add(EdgeSpec{1, 0, EdgeKind::ContinuousFlow, 0, 1, -1}),
                                         StructuralEdit::remove(1)};
  for (std::size_t split = 0; split <= e.size(); ++split) {
    const std::vector<StructuralEdit> head(e.begin(), e.begin() + static_cast<long>(split));
    const std::vector<StructuralEdit> tail(e.begin() + static_cast<long>(split), e.end());
    CHECK(apply_structural(apply_structural(g, head), tail) == apply_structural(g, e));
  }
}

TEST_CASE("retyping to the current kind is the identity with a warning") {
  const GameSpec g = support::corpus_game("coordination_cf");
  std::vector<std::string> warnings;
  CHECK(apply_structural(g, {StructuralEdit::retype(0, EdgeKind::ContinuousFlow, 0)}, &warnings) == g);
  CHECK(warnings.size() == 1);
}

TEST_CASE("canonical form drops unreferenced send coordinates only") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  CHECK(canonicalize(f.discrete) == f.discrete);
  const GameSpec back = apply_structural(f.discrete, {StructuralEdit::retype(0, EdgeKind::ContinuousFlow, 0)});
  CHECK(back == f.continuous);
}

TEST_CASE("signal kernels are validated and ignored by the solvers") {
  SignalKernel k{{"quiet", "alarm"}, 1, 2, {0.5, 0.5, 1.0, 0.0}};
  CHECK_NOTHROW(validate_signal(k));
  k.probs[3] = 0.1;
  CHECK_THROWS_AS(validate_signal(k), ValidationError);
  k.probs = {0.5, 0.5};
  CHECK_THROWS_AS(validate_signal(k), ValidationError);
  const GameSpec g = support::corpus_game("single_decay");
  Intervention iv;
  iv.signal = SignalKernel{{"z"}, 1, 2, {1.0, 1.0}};
  CHECK(induced_game(g, iv) == g);
}

TEST_CASE("induced game applies edits before transfers") {
  const GameSpec g = support::corpus_game("coordination_cf");
  Intervention iv;
  iv.edits = {StructuralEdit::retype(0, EdgeKind::DiscreteTransport, 0)};
  iv.transfers = TransferTable(1, 4, 8, 2);
  iv.transfers->set(0, 0, 7, 1, 1.5);
  const GameSpec h = induced_game(g, iv);
  CHECK(h.profile_space().size() == 8);
  CHECK(h.transfers->at(0, 0, 7, 1) == 1.5);
}

TEST_CASE("inertia breaking and implementation checks") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  const auto ug = uniformize<double>(f.continuous, 40);
  const auto sq = status_quo(ug);
  const std::size_t x0 = initial_index(ug);
  // Identity intervention.
  CHECK_FALSE(breaks_inertia(ug, sq, 1e-9));
  // The converse penalty breaks it.
  const auto depth = inertia_depth(ug, sq, 0, x0);
  // At gamma = 40 a deviation needs a full stage to take effect, which costs more than epsilon.
  const GameSpec penalized = apply_transfers(
      f.continuous, converse_transfer(f.continuous, depth.theta, 1.0, depth.epsilon, {PS::Sleep, PS::Sleep}));
  const auto up = uniformize<double>(penalized, 40);
  CHECK_FALSE(breaks_inertia(up, sq, 1e-9, GainScope::at(0, x0)));
  const auto fine = uniformize<double>(penalized, 2000);
  const auto sq_fine = status_quo(fine);
  CHECK(breaks_inertia(fine, sq_fine, 1e-9, GainScope::at(0, x0)));
  // Small transfers do not.
  const GameSpec nudged = apply_transfers(f.continuous, random_transfers(f.continuous, 40, depth.survival_delta / 2, 9));
  CHECK_FALSE(breaks_inertia(uniformize<double>(nudged, 40), sq, 1e-9, GainScope::at(0, x0)));
  // The target can never be the status quo itself, and a non-MPE target is never implemented.
  CHECK_FALSE(implements(fine, sq_fine, sq_fine, 1e-9));
  CHECK_FALSE(implements(ug, constant_profile(ug, {1, 1}), sq, 1e-9));
}

TEST_CASE("embedded profiles keep their values in the zero-latency transport game") {
  for (const char* name : {"coordination_cf", "asym_two_player"}) {
    CAPTURE(name);
    const GameSpec g = support::corpus_game(name);
    const GameSpec d = apply_structural(g, {StructuralEdit::retype(0, EdgeKind::DiscreteTransport, 0)});
    const Rational gamma = 2 * g.rates.lambda_max;
    const auto uc = uniformize<Rational>(g, gamma), ud = uniformize<Rational>(d, gamma);
    for (std::uint64_t code = 0; code < stationary_count(uc); code += 13) {
      const auto p = decode_stationary(uc, code);
      const auto vc = joint_value(uc, p);
      const auto vd = joint_value(ud, embed_profile(uc, ud, p));
      CHECK(vc.values == vd.values);
    }
  }
}

TEST_CASE("status quo sends exactly while the source is active") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  const auto ud = uniformize<double>(f.discrete, 40);
  const auto sq = status_quo(ud);
  for (std::size_t x = 0; x < ud.states; ++x) {
    const bool active = ud.state_space.player_state(ud.base_of(x), 0) == PS::Active;
    CHECK(sq.control(0, 0, x) == (active ? 1u : 0u));
    CHECK(sq.control(1, 0, x) == 0);
  }
}

TEST_CASE("a game without stationary MPEs has an empty implementable set") {
  const GameSpec g = support::corpus_game("coordination_cf");
  const auto ug = uniformize<double>(g, 8);
  REQUIRE(enumerate_mpe(ug, 1e-9).empty());
  CHECK(implementable_set(ug, 1e-9).empty());
}

TEST_CASE("continuous-flow signatures are implementable after retyping") {
  const DominanceFamily f = dominance_family(10, 1, 40);
  const auto uc = uniformize<double>(f.continuous, 40), ud = uniformize<double>(f.discrete, 40);
  const auto c = implementable_set(uc, 1e-9), d = implementable_set(ud, 1e-9);
  CHECK_FALSE(c.empty());
  CHECK(std::includes(d.begin(), d.end(), c.begin(), c.end()));
  const auto sig = outcome_signature(uc, status_quo(uc));
  CHECK(sig.terminal == JointState{PS::Sleep, PS::Sleep});
  CHECK(sig.welfare_nano == 0);
  CHECK(c.count(sig) == 1);
}

}  // TEST_SUITE
