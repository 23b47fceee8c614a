#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faultloc/types.hpp"

namespace faultloc {

struct BusId {
  BusLabel label = 0;
  std::size_t index = 0;  // position in matrix ordering

  bool operator==(const BusId&) const = default;
};

struct LineRecord {
  std::string id;
  BusLabel from = 0;
  BusLabel to = 0;
  double length_km = 0.0;
  Complex z1_per_km;
  Complex z0_per_km;

  Complex z1() const { return z1_per_km * length_km; }
  Complex z0() const { return z0_per_km * length_km; }
  /// Total impedance of the line in the given sequence network. The network
  /// is taken as transposed, so negative sequence equals positive sequence.
  Complex impedance(Sequence s) const { return s == Sequence::zero ? z0() : z1(); }

  bool touches(BusLabel bus) const { return from == bus || to == bus; }
  BusLabel other_end(BusLabel bus) const { return bus == from ? to : from; }

  bool operator==(const LineRecord&) const = default;
};

struct SourceRecord {
  BusLabel bus = 0;
  Complex z1;
  Complex z2;
  Complex z0;
  double emf_mag = 1.0;
  double emf_deg = 0.0;

  Complex impedance(Sequence s) const;
  Complex emf() const;

  bool operator==(const SourceRecord&) const = default;
};

/// A current measurement point: the line `line` observed at its terminal
/// `at`, positive direction flowing from `at` into the line. On a faulted
/// line this is the segment current from `at` toward the fault point.
struct BranchTap {
  std::string line;
  BusLabel at = 0;

  auto operator<=>(const BranchTap&) const = default;
};

/// "<line>@<bus>", the canonical text form used in CSV files and reports.
std::string to_string(const BranchTap& tap);

struct Network {
  double base_mva = 100.0;
  double base_kv = 230.0;
  double frequency_hz = 50.0;
  std::vector<BusId> buses;
  std::vector<LineRecord> lines;
  std::vector<SourceRecord> sources;

  std::size_t bus_count() const { return buses.size(); }
  bool has_bus(BusLabel label) const;
  /// Internal 0-based index of a bus. Throws Error for unknown labels.
  std::size_t bus_index(BusLabel label) const;

  const LineRecord* find_line(std::string_view id) const;
  /// Throws Error for unknown ids.
  const LineRecord& line(std::string_view id) const;

  /// Impedance base in ohms, base_kv^2 / base_mva.
  double base_impedance_ohm() const { return base_kv * base_kv / base_mva; }
  double ohm_to_pu(double ohm) const { return ohm / base_impedance_ohm(); }

  bool operator==(const Network&) const = default;
};

/// Parse or validation failure in a case file. line_number is 0 when the
/// problem is not tied to a single record.
class CaseError : public Error {
 public:
  CaseError(std::size_t line_number, const std::string& message);
  std::size_t line_number() const { return line_number_; }

 private:
  std::size_t line_number_;
};

struct Diagnostic {
  std::string record;
  std::string message;
};

Network parse_case(std::string_view text);
Network load_case(const std::string& path);

/// Writes a case file that parses back to an identical Network.
std::string to_case_text(const Network& net);

/// One diagnostic per violated invariant; empty iff the network is usable.
std::vector<Diagnostic> validate(const Network& net);

/// Resolves "a-b" (the first line joining buses a and b, tapped at a),
/// "<line>@<bus>", or a bare line id (tapped at its from-bus).
BranchTap parse_branch_tap(const Network& net, std::string_view text);

}  // namespace faultloc
