#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "oracle/tap_bus_oracle.hpp"
#include "support.hpp"

using namespace faultloc;

namespace {

constexpr double kTol = 1e-9;

Network two_bus(Complex zs, Complex z) {
  Network net;
  net.buses = {{1, 0}, {2, 1}};
  net.lines.push_back({"A", 1, 2, 1.0, z, 3.0 * z});
  net.sources.push_back({1, zs, zs, zs, 1.0, 0.0});
  return net;
}

/// Bus 1 with a source, two identical lines to bus 2, a load-free stub to
/// bus 3 and a second source at bus 3.
Network parallel_lines() {
  Network net;
  net.buses = {{1, 0}, {2, 1}, {3, 2}};
  const Complex z(0.01, 0.1);
  net.lines.push_back({"P1", 1, 2, 1.0, z, 3.0 * z});
  net.lines.push_back({"P2", 1, 2, 1.0, z, 3.0 * z});
  net.lines.push_back({"S", 2, 3, 1.0, z, 3.0 * z});
  net.sources.push_back({1, {0, 0.05}, {0, 0.05}, {0, 0.05}, 1.0, 0.0});
  net.sources.push_back({3, {0, 0.07}, {0, 0.07}, {0, 0.07}, 1.0, 0.0});
  return net;
}

double zy_residual(const Network& net, Sequence s) {
  const ComplexMatrix prod = build_zbus(net, s).z * build_ybus(net, s);
  double worst = 0.0;
  for (std::size_t i = 0; i < prod.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < prod.cols(); ++j) row += std::abs(prod(i, j) - (i == j ? 1.0 : 0.0));
    worst = std::max(worst, row);
  }
  return worst;
}

}  // namespace

TEST_CASE("one-bus Zbus is the source impedance") {
  const Network net = parse_case("bus 1\nsource 1 0.0006 0.037343\n");
  const SequenceZbus z = build_zbus(net, Sequence::positive);
  REQUIRE(z.z.rows() == 1);
  CHECK(std::abs(z.z(0, 0) - Complex(0.0006, 0.037343)) <= 1e-15);
}

TEST_CASE("two-bus series circuit") {
  const Complex zs(0.01, 0.2), zl(0.05, 0.4);
  const SequenceZbus z = build_zbus(two_bus(zs, zl), Sequence::positive);
  CHECK(std::abs(z.at(1, 1) - zs) <= 1e-14);
  CHECK(std::abs(z.at(1, 2) - zs) <= 1e-14);
  CHECK(std::abs(z.at(2, 2) - (zs + zl)) <= 1e-14);

  const auto tc = transfer_coefficients(z, two_bus(zs, zl).line("A"), 2);
  CHECK(std::abs(tc.b - zs) <= 1e-14);
  CHECK(std::abs(tc.c - zl) <= 1e-14);
}

TEST_CASE("Zbus properties on the bundled networks") {
  for (const Network& net : {testsupport::fourbus(), testsupport::ieee14()}) {
    for (Sequence s : kAllSequences) {
      CAPTURE(index_of(s));
      CHECK(zy_residual(net, s) <= kTol);
      const SequenceZbus z = build_zbus(net, s);
      const Eigen::MatrixXcd ref = oracle::zbus(net, s);
      double scale = max_abs(z.z), asym = 0.0, diff = 0.0;
      for (std::size_t j = 0; j < z.z.rows(); ++j)
        for (std::size_t k = 0; k < z.z.cols(); ++k) {
          asym = std::max(asym, std::abs(z.z(j, k) - z.z(k, j)));
          diff = std::max(diff, std::abs(z.z(j, k) - ref(Eigen::Index(j), Eigen::Index(k))));
        }
      CHECK(asym <= 1e-12 * scale);
      CHECK(diff <= kTol);
    }
    CHECK(build_zbus(net, Sequence::negative).z == build_zbus(net, Sequence::positive).z);
  }
}

TEST_CASE("ungrounded and ill-conditioned networks are rejected") {
  Network net = testsupport::fourbus();
  net.buses.push_back({7, 4});
  CHECK_THROWS_AS(build_zbus(net, Sequence::positive), UngroundedError);

  Network stiff = two_bus({0, 1e-14}, {0, 1e3});
  CHECK_THROWS_AS(build_zbus(stiff, Sequence::positive), ConditioningError);
}

TEST_CASE("endpoint identities of the transfer and driving-point coefficients") {
  const Network net = testsupport::ieee14();
  const SequenceZbus z = build_zbus(net, Sequence::positive);
  for (const LineRecord& l : net.lines) {
    const auto tc = transfer_coefficients(z, l, l.from);
    CHECK(tc.b == z.at(l.from, l.from));
    CHECK(tc.c == z.at(l.to, l.from) - z.at(l.from, l.from));
    const auto fp = fault_point_coefficients(z, l);
    CHECK(std::abs(fp.at(0.0) - z.at(l.from, l.from)) <= 1e-12);
    CHECK(std::abs(fp.at(1.0) - z.at(l.to, l.to)) <= 1e-12);
  }
}

TEST_CASE("coefficients match an explicitly tapped network") {
  const Network net = testsupport::fourbus();
  for (Sequence s : kAllSequences) {
    const SequenceZbus z = build_zbus(net, s);
    for (const LineRecord& l : net.lines) {
      const auto fp = fault_point_coefficients(z, l);
      for (double m : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        CAPTURE(l.id);
        CAPTURE(m);
        CHECK(std::abs(fp.at(m) - oracle::z_rr(net, s, l.id, m)) <= kTol);
        for (const BusId& k : net.buses) {
          const auto tc = transfer_coefficients(z, l, k.label);
          CHECK(std::abs(tc.at(m) - oracle::z_kr(net, s, l.id, m, k.label)) <= kTol);
        }
      }
    }
  }
}

TEST_CASE("branch and segment coefficients reproduce oracle current changes") {
  for (const Network& net : {testsupport::fourbus(), testsupport::ieee14()}) {
    const SequenceModel model = build_sequence_model(net);
    for (const LineRecord& faulted : net.lines) {
      const FaultScenario sc{faulted.id, 0.5, FaultType::LG, 1.0};
      const MeasurementTaps taps = all_taps(net);
      const oracle::FaultSolution ref = oracle::solve_fault(net, sc, taps);
      for (Sequence s : kAllSequences) {
        const std::size_t si = index_of(s);
        for (const BranchTap& t : taps.branches) {
          CAPTURE(faulted.id);
          CAPTURE(to_string(t));
          const auto bc = tap_coefficients(model[s], net, faulted, t);
          const Complex pre = s == Sequence::positive ? ref.prefault_i.at(t) : Complex{};
          const Complex delta = ref.fault_i.at(t)[si] - pre;
          CHECK(std::abs(-bc.at(0.5) * ref.i_f[si] - delta) <= kTol);
        }
      }
    }
  }
}

TEST_CASE("segment coefficients at the two terminals sum to -1") {
  const Network net = testsupport::fourbus();
  const SequenceZbus z = build_zbus(net, Sequence::zero);
  for (const LineRecord& l : net.lines) {
    const auto bp = segment_coefficients(z, l, l.from);
    const auto bq = segment_coefficients(z, l, l.to);
    for (double m : {0.1, 0.5, 0.9}) CHECK(std::abs(bp.at(m) + bq.at(m) + 1.0) <= 1e-12);
  }
}

TEST_CASE("healthy parallel line has a non-constant beta") {
  const Network net = parallel_lines();
  const SequenceZbus z = build_zbus(net, Sequence::positive);
  const auto bc = branch_coefficients(z, net.line("P1"), net.line("P2"), 1);
  CHECK(std::abs(bc.c) > 1e-3);
  CHECK_THROWS_AS(branch_coefficients(z, net.line("P1"), net.line("P1"), 1), Error);

  const SequenceModel model = build_sequence_model(net);
  for (double m : {0.2, 0.7}) {
    const auto ref = oracle::solve_fault(net, {"P1", m, FaultType::LLL, 0.0}, {{}, {{"P2", 1}}});
    const Complex delta = ref.fault_i.at({"P2", 1})[1] - ref.prefault_i.at({"P2", 1});
    CHECK(std::abs(-bc.at(m) * ref.i_f[1] - delta) <= kTol);
  }
}

TEST_CASE("branch with equal terminal coefficients has beta = 0") {
  // Radial stub: a line hanging off bus 2 with nothing beyond it sees no
  // fault current.
  Network net = two_bus({0, 0.1}, {0.01, 0.1});
  net.buses.push_back({3, 2});
  net.lines.push_back({"stub", 2, 3, 1.0, {0.02, 0.2}, {0.06, 0.6}});
  const SequenceZbus z = build_zbus(net, Sequence::positive);
  const auto bc = branch_coefficients(z, net.line("A"), net.line("stub"), 2);
  CHECK(std::abs(bc.b) <= 1e-12);
  CHECK(std::abs(bc.c) <= 1e-12);
}

TEST_CASE("Zbus CSV export") {
  const SequenceZbus z = build_zbus(testsupport::fourbus(), Sequence::positive);
  std::ostringstream out;
  write_zbus_csv(out, z);
  const std::string text = out.str();
  CHECK(text.rfind("bus,1,2,3,4\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}
