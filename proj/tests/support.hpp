#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "faultloc/faultsim.hpp"
#include "faultloc/locator.hpp"
#include "faultloc/netmodel.hpp"
#include "faultloc/study.hpp"

namespace testsupport {

using namespace faultloc;

inline std::string data_path(const std::string& name) { return std::string(FAULTLOC_DATA_DIR) + "/" + name; }

inline Network fourbus() { return load_case(data_path("fourbus.case")); }
inline Network ieee14() { return load_case(data_path("ieee14.case")); }

/// Reference measurement placements for the 4-bus system: V1 & V2, I1 & I2,
/// V2 & I1, with I1 on T1 seen from bus 1 and I2 on T3 seen from bus 2.
inline std::vector<Placement> fourbus_placements() {
  return {
      {Method::ssvm, {1, 2}, {}},
      {Method::sscm, {}, {{"T1", 1}, {"T3", 2}}},
      {Method::hybrid_direct, {2}, {{"T1", 1}}},
      {Method::hybrid_quad, {2}, {{"T1", 1}}},
  };
}

struct LinePlacement {
  std::string line;
  Placement placement;
};

/// Reference IEEE 14-bus placements, each tied to the faulted line it was
/// used for.
inline std::vector<LinePlacement> ieee14_reference_placements() {
  return {
      {"L1-5", {Method::ssvm, {1, 5}, {}}},
      {"L12-13", {Method::ssvm, {12, 13}, {}}},
      {"L9-14", {Method::ssvm, {9, 14}, {}}},
      {"L1-5", {Method::hybrid_direct, {1}, {{"L2-3", 2}}}},
      {"L12-13", {Method::hybrid_direct, {12}, {{"L13-14", 13}}}},
      {"L9-14", {Method::hybrid_direct, {9}, {{"L13-14", 13}}}},
  };
}

/// A healthy line touching `bus` other than `excluded`, tapped at `bus`.
inline std::optional<BranchTap> neighbour_tap(const Network& net, BusLabel bus, const std::string& excluded) {
  for (const LineRecord& l : net.lines)
    if (l.id != excluded && l.touches(bus)) return BranchTap{l.id, bus};
  return std::nullopt;
}

/// Generic placements for a fault on `line` (p -> q): voltages at both
/// terminals, currents on neighbouring branches at both terminals (falling
/// back to the faulted line's own segment current), and a hybrid pairing.
inline std::vector<Placement> terminal_placements(const Network& net, const std::string& line) {
  const LineRecord& l = net.line(line);
  const BranchTap at_p = neighbour_tap(net, l.from, line).value_or(BranchTap{line, l.from});
  const BranchTap at_q = neighbour_tap(net, l.to, line).value_or(BranchTap{line, l.to});
  return {
      {Method::ssvm, {l.from, l.to}, {}},
      {Method::sscm, {}, {at_p, at_q}},
      {Method::hybrid_direct, {l.from}, {at_q}},
      {Method::hybrid_quad, {l.from}, {at_q}},
  };
}

inline std::vector<double> m_grid() {
  std::vector<double> m;
  for (int i = 1; i <= 9; ++i) m.push_back(i / 10.0);
  return m;
}

inline const std::vector<double>& rf_grid() {
  static const std::vector<double> rf{0.1, 1.0, 10.0};
  return rf;
}

inline std::vector<FaultScenario> scenario_grid(const Network& net) {
  std::vector<FaultScenario> out;
  for (const LineRecord& l : net.lines)
    for (FaultType t : kAllFaultTypes)
      for (double m : m_grid())
        for (double rf : rf_grid()) out.push_back({l.id, m, t, rf});
  return out;
}

}  // namespace testsupport
