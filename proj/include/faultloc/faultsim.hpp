#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "faultloc/netmodel.hpp"
#include "faultloc/seqmatrix.hpp"

namespace faultloc {

enum class FaultType { LG, LL, LLG, LLL };

inline constexpr std::array<FaultType, 4> kAllFaultTypes{FaultType::LG, FaultType::LL,
                                                         FaultType::LLG, FaultType::LLL};

std::string_view to_string(FaultType t);
/// Accepts LG, LL, LLG, LLL (case-insensitive).
FaultType parse_fault_type(std::string_view text);

struct FaultScenario {
  std::string line;
  double m = 0.0;  // fraction of line length from the line's from-bus
  FaultType type = FaultType::LLL;
  double rf_ohm = 0.0;
};

/// Positive-sequence steady state before the fault.
struct PrefaultState {
  std::vector<Complex> bus_v;                 // by internal bus index
  std::map<std::string, Complex> line_i;      // by line id, from-bus toward to-bus

  Complex voltage(const Network& net, BusLabel bus) const { return bus_v[net.bus_index(bus)]; }
  /// Current observed at tap.at flowing into the line.
  Complex current(const Network& net, const BranchTap& tap) const;
};

/// Nodal solve with every source as its EMF behind z1.
PrefaultState prefault_solve(const Network& net);

/// Fault currents (index_of(Sequence) order) leaving the network at the
/// fault point. rf_pu is the fault resistance in per unit. LLG uses z1 in
/// series with (z2 || (z0 + 3 rf)).
SequenceTriple fault_sequence_currents(FaultType type, double rf_pu, const SequenceTriple& z_rr,
                                       Complex e_prefault);

/// Everything that depends only on the network: the three sequence Zbus
/// matrices and the pre-fault state. Immutable once built; share freely.
struct SequenceModel {
  Network net;
  std::array<SequenceZbus, 3> zbus;
  PrefaultState prefault;

  const SequenceZbus& operator[](Sequence s) const { return zbus[index_of(s)]; }
};

SequenceModel build_sequence_model(Network net);

struct MeasurementTaps {
  std::vector<BusLabel> buses;
  std::vector<BranchTap> branches;
};

/// All buses and both terminals of every line except `excluded_line`.
MeasurementTaps all_taps(const Network& net, std::string_view excluded_line = {});

struct PhasorMeasurementSet {
  std::uint64_t alignment = 0;  // shared synchronization token for every channel
  std::map<BusLabel, Complex> prefault_bus_v;
  std::map<BusLabel, SequenceTriple> fault_bus_v;
  std::map<BranchTap, Complex> prefault_branch_i;
  std::map<BranchTap, SequenceTriple> fault_branch_i;

  bool operator==(const PhasorMeasurementSet&) const = default;
};

/// Analytic sequence-network solution of a fault scenario, reported at the
/// requested taps. A tap on the faulted line reports that segment's current.
PhasorMeasurementSet simulate_measurements(const SequenceModel& model, const FaultScenario& scenario,
                                           const MeasurementTaps& taps);
PhasorMeasurementSet simulate_measurements(const Network& net, const FaultScenario& scenario,
                                           const MeasurementTaps& taps);

/// A measurement channel: a bus voltage ("V:<bus>") or branch current
/// ("I:<line>@<bus>").
struct ChannelId {
  enum class Kind { bus_voltage, branch_current };
  Kind kind = Kind::bus_voltage;
  BusLabel bus = 0;
  BranchTap branch;

  auto operator<=>(const ChannelId&) const = default;
};

std::string to_string(const ChannelId& ch);

struct DistortionEntry {
  enum class Mode { gain, clamp };
  ChannelId channel;
  Mode mode = Mode::gain;
  double gain = 1.0;            // gain mode: magnitude factor
  double phase_deg = 0.0;       // gain mode: phase error
  double clamp_fraction = 1.0;  // clamp mode: limit relative to the fault-stage positive sequence
};

struct DistortionSpec {
  std::vector<DistortionEntry> entries;
};

/// Parses "gain:V:<bus>:<factor>[:<phase_deg>]" and
/// "clamp:I:<line>@<bus>:<fraction>" entries separated by ','.
DistortionSpec parse_distortion(std::string_view text);

/// Gain entries scale pre-fault and fault phasors of the channel. Clamp
/// entries model CT saturation: fault-stage phasors whose magnitude exceeds
/// clamp_fraction * |positive-sequence fault phasor| are cut to that limit.
/// Other channels are left untouched. Throws for channels not in the set.
PhasorMeasurementSet apply_distortion(PhasorMeasurementSet ms, const DistortionSpec& spec);

/// Phase (a, b, c) to sequence (zero, positive, negative) components.
SequenceTriple sequence_transform(const std::array<Complex, 3>& abc);
std::array<Complex, 3> inverse_sequence_transform(const SequenceTriple& seq);

/// CSV rows: kind(busV|branchI),id,stage(pre|fault),seq,re,im.
void write_measurements_csv(std::ostream& out, const PhasorMeasurementSet& ms);
PhasorMeasurementSet read_measurements_csv(std::istream& in);

}  // namespace faultloc
