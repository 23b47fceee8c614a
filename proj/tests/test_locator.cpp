#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracle/tap_bus_oracle.hpp"
#include "support.hpp"

using namespace faultloc;

namespace {

constexpr double kTol = 1e-9;


double locate_once(const Network& net, const Placement& p, const FaultScenario& sc) {
  const SequenceModel model = build_sequence_model(net);
  MeasurementTaps taps{p.buses, p.branches};
  const auto ms = simulate_measurements(model, sc, taps);
  return locate(net, model[Sequence::positive], sc.line, p, ms).m;
}

/// Buses 1 and 2 sit on a spur that reaches the rest of the network only
/// through the bridge 2-3. The faulted line 3-4 lies in the loop 3-4-5.
Network spur_network() {
  return parse_case(R"(
bus 1
bus 2
bus 3
bus 4
bus 5
line A 1 2 10 0.01 0.1 0.03 0.3
line B 2 3 10 0.01 0.1 0.03 0.3
line F 3 4 10 0.01 0.1 0.03 0.3
line G 4 5 10 0.01 0.1 0.03 0.3
line H 5 3 10 0.01 0.1 0.03 0.3
source 1 0 0.05
source 4 0 0.08
)");
}

Network parallel_network() {
  return parse_case(R"(
bus 1
bus 2
bus 3
line P1 1 2 10 0.01 0.1 0.03 0.3
line P2 1 2 10 0.01 0.1 0.03 0.3
line S 2 3 10 0.01 0.1 0.03 0.3
source 1 0 0.05
source 3 0 0.07
)");
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : kAllMethods) CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("ssvm2"), Error);
}

TEST_CASE("four-bus SSVM round trip, LG at 100 km of T2") {
  const Network net = testsupport::fourbus();
  const double m = locate_once(net, {Method::ssvm, {1, 2}, {}}, {"T2", 0.56, FaultType::LG, 1.0});
  CHECK(std::abs(m - 0.56) <= kTol);
}

TEST_CASE("four-bus SSCM round trip, LLL at 50 km of T2") {
  const Network net = testsupport::fourbus();
  const Placement p{Method::sscm, {}, {{"T1", 1}, {"T3", 2}}};
  CHECK(std::abs(locate_once(net, p, {"T2", 0.28, FaultType::LLL, 10.0}) - 0.28) <= kTol);
}

TEST_CASE("IEEE 14-bus hybrid round trip on line 1-5") {
  const Network net = testsupport::ieee14();
  for (Method method : {Method::hybrid_direct, Method::hybrid_quad}) {
    const Placement p{method, {1}, {{"L2-3", 2}}};
    CHECK(std::abs(locate_once(net, p, {"L1-5", 0.5, FaultType::LLL, 10.0}) - 0.5) <= kTol);
  }
}

TEST_CASE("faults at the line terminals") {
  const Network net = testsupport::fourbus();
  for (double m_true : {0.0, 1.0})
    for (const Placement& p : testsupport::fourbus_placements()) {
      CAPTURE(to_string(p.method));
      CHECK(std::abs(locate_once(net, p, {"T2", m_true, FaultType::LLG, 1.0}) - m_true) <= kTol);
    }
}

TEST_CASE("quadratic root selection") {
  SUBCASE("double root") {
    const auto sol = select_quadratic_root({1.0, -1.0, 0.25});
    CHECK(sol.m == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(sol.ambiguous);
  }
  SUBCASE("double root from a magnitude equation") {
    // |m - 0.5|^2 = 0 * |1|^2: numerator vanishes only at m = 0.5.
    const auto q = location_quadratic(-0.5, 1.0, 1.0, 0.0, 0.0);
    CHECK(select_quadratic_root(q).m == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("linear fallback") { CHECK(select_quadratic_root({0.0, 2.0, -1.0}).m == 0.5); }
  SUBCASE("one root in range") {
    const auto sol = select_quadratic_root({1.0, -2.3, 0.6});  // roots 0.3 and 2.0
    CHECK(sol.m == doctest::Approx(0.3));
    CHECK(sol.roots.size() == 2);
    CHECK_FALSE(sol.ambiguous);
  }
  SUBCASE("two roots in range resolve toward the tiebreak") {
    const auto sol = select_quadratic_root({1.0, -1.0, 0.21}, 0.68);  // roots 0.3 and 0.7
    CHECK(sol.ambiguous);
    CHECK(sol.m == doctest::Approx(0.7));
  }
  SUBCASE("no root in range") {
    CHECK_THROWS_AS(select_quadratic_root({1.0, 0.0, 1.0}), LocateError);
    CHECK_THROWS_AS(select_quadratic_root({1.0, -5.0, 6.0}), LocateError);
  }
}

TEST_CASE("identical parallel branches are linearly dependent") {
  const Network net = parallel_network();
  const Placement p{Method::sscm, {}, {{"P1", 1}, {"P2", 1}}};
  const Feasibility f = feasibility_check(net, "S", p);
  CHECK_FALSE(f.feasible);
  CHECK(f.reason == Feasibility::Reason::linear_dependence);

  const SequenceModel model = build_sequence_model(net);
  const auto ms = simulate_measurements(model, {"S", 0.4, FaultType::LLL, 1.0}, {{}, p.branches});
  try {
    locate(net, model[Sequence::positive], "S", p, ms);
    FAIL("expected linear dependence");
  } catch (const LocateError& e) {
    CHECK(e.reason() == LocateError::Reason::linear_dependence);
  }
}

TEST_CASE("spur placement has no simple path through the fault") {
  const Network net = spur_network();
  CHECK_FALSE(oracle::brute_force_path_through(net, {1}, {2}, "F"));
  CHECK_FALSE(simple_path_through(net, {1}, {2}, "F"));
  const Feasibility f = feasibility_check(net, "F", {Method::ssvm, {1, 2}, {}});
  CHECK_FALSE(f.feasible);
  CHECK(f.reason == Feasibility::Reason::no_simple_path);

  CHECK(feasibility_check(net, "F", {Method::ssvm, {2, 5}, {}}).feasible);
}

TEST_CASE("graph test agrees with exhaustive path enumeration") {
  for (const Network& net : {testsupport::fourbus(), testsupport::ieee14(), spur_network(), parallel_network()}) {
    for (const LineRecord& l : net.lines)
      for (const BusId& a : net.buses)
        for (const BusId& b : net.buses) {
          if (a.label == b.label) continue;
          CAPTURE(l.id);
          CAPTURE(a.label);
          CAPTURE(b.label);
          CHECK(simple_path_through(net, {a.label}, {b.label}, l.id) ==
                oracle::brute_force_path_through(net, {a.label}, {b.label}, l.id));
        }
  }
}

TEST_CASE("reference placements are feasible") {
  const Network four = testsupport::fourbus();
  for (const Placement& p : testsupport::fourbus_placements()) {
    CAPTURE(describe(p));
    CHECK(feasibility_check(four, "T2", p).feasible);
  }
  const Network ieee = testsupport::ieee14();
  for (const auto& [line, p] : testsupport::ieee14_reference_placements()) {
    CAPTURE(line);
    CAPTURE(describe(p));
    CHECK(feasibility_check(ieee, line, p).feasible);
  }
}

TEST_CASE("wrong channel counts are rejected") {
  const Feasibility f = feasibility_check(testsupport::fourbus(), "T2", {Method::ssvm, {1}, {}});
  CHECK_FALSE(f.feasible);
  CHECK(f.reason == Feasibility::Reason::bad_placement);
}

TEST_CASE("percent error metric") {
  CHECK(percent_error(100.0, 102.159215520, 178.6) == doctest::Approx(1.20896726).epsilon(1e-8));
  CHECK(percent_error(100.0, 102.390658723, 178.6) == doctest::Approx(1.33855472).epsilon(1e-8));
  CHECK(percent_error(100.0, 100.0, 178.6) == 0.0);
  CHECK_THROWS_AS(percent_error(1.0, 1.0, 0.0), Error);
}

TEST_CASE("estimates are invariant to a common complex scale on the channels") {
  const Network net = testsupport::ieee14();
  const SequenceModel model = build_sequence_model(net);
  const FaultScenario sc{"L6-12", 0.63, FaultType::LG, 1.0};
  const Complex k = std::polar(3.7, 1.1);
  for (const Placement& p : testsupport::terminal_placements(net, sc.line)) {
    const auto ms = simulate_measurements(model, sc, {p.buses, p.branches});
    PhasorMeasurementSet scaled = ms;
    for (auto& [b, v] : scaled.prefault_bus_v) v *= k;
    for (auto& [b, v] : scaled.fault_bus_v)
      for (Complex& x : v) x *= k;
    for (auto& [b, v] : scaled.prefault_branch_i) v *= k;
    for (auto& [b, v] : scaled.fault_branch_i)
      for (Complex& x : v) x *= k;
    // Hybrid pairs mix a voltage and a current; scale the two kinds equally.
    const double a = locate(net, model[Sequence::positive], sc.line, p, ms).m;
    const double b = locate(net, model[Sequence::positive], sc.line, p, scaled).m;
    CAPTURE(describe(p));
    CHECK(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("distorting an unused channel leaves each locator bit-identical") {
  const Network net = testsupport::fourbus();
  const SequenceModel model = build_sequence_model(net);
  const auto clean = simulate_measurements(model, {"T2", 0.56, FaultType::LLG, 1.0}, all_taps(net));
  for (const Placement& p : testsupport::fourbus_placements()) {
    const auto used = p.channels();
    const double base = locate(net, model[Sequence::positive], "T2", p, clean).m;
    for (BusLabel b : {1, 2, 3, 4}) {
      const ChannelId ch{ChannelId::Kind::bus_voltage, b, {}};
      if (std::find(used.begin(), used.end(), ch) != used.end()) continue;
      const auto bad = apply_distortion(clean, {{{ch, DistortionEntry::Mode::gain, 1.3, 7.0, 1.0}}});
      CHECK(locate(net, model[Sequence::positive], "T2", p, bad).m == base);
    }
    for (const auto& [tap, i] : clean.fault_branch_i) {
      const ChannelId ch{ChannelId::Kind::branch_current, 0, tap};
      if (std::find(used.begin(), used.end(), ch) != used.end()) continue;
      const auto bad = apply_distortion(clean, {{{ch, DistortionEntry::Mode::clamp, 1.0, 0.0, 0.5}}});
      CHECK(locate(net, model[Sequence::positive], "T2", p, bad).m == base);
    }
  }
}

TEST_CASE("guard conditions") {
  const TransferCoefficients tk{1.0, 0.5, 1, "X", Sequence::positive};
  const TransferCoefficients tl{2.0, -0.5, 2, "X", Sequence::positive};
  SUBCASE("denominator without a fault signature") {
    const VoltagePair pair{1, 2, {1.0, 0.9, 0}, {1.0, 1.0, 0}};
    try {
      locate_ssvm(pair, tk, tl);
      FAIL("expected degenerate denominator");
    } catch (const LocateError& e) {
      CHECK(e.reason() == LocateError::Reason::degenerate_denominator);
    }
  }
  SUBCASE("channels from different snapshots") {
    const VoltagePair pair{1, 2, {1.0, 0.9, 1}, {1.0, 0.8, 2}};
    try {
      locate_ssvm(pair, tk, tl);
      FAIL("expected misalignment");
    } catch (const LocateError& e) {
      CHECK(e.reason() == LocateError::Reason::misaligned);
    }
  }
}

TEST_CASE("the true line is among the identified hypotheses") {
  const Network net = testsupport::ieee14();
  const SequenceModel model = build_sequence_model(net);
  const Placement p{Method::ssvm, {1, 14}, {}};
  const auto ms = simulate_measurements(model, {"L9-14", 0.3, FaultType::LL, 1.0}, {p.buses, {}});
  const auto hyps = identify_faulted_line(net, model[Sequence::positive], p, ms);
  const auto it = std::find_if(hyps.begin(), hyps.end(), [](const LineHypothesis& h) { return h.line == "L9-14"; });
  REQUIRE(it != hyps.end());
  CHECK(std::abs(it->estimate.m - 0.3) <= kTol);
  CHECK(hyps.front().estimate.residual <= kTol);
}
