#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "faultloc/linalg.hpp"
#include "faultloc/netmodel.hpp"

namespace faultloc {

/// Raised when a sequence network has a bus with no path to the reference.
class UngroundedError : public Error {
 public:
  using Error::Error;
};

/// Raised when the admittance matrix is too ill-conditioned to invert reliably.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kMaxConditionNumber = 1e12;

/// Bus impedance matrix of one sequence network, indexed in the network's
/// internal bus order.
struct SequenceZbus {
  Sequence sequence = Sequence::positive;
  ComplexMatrix z;
  std::vector<BusLabel> bus_order;

  std::size_t index_of(BusLabel label) const;
  Complex at(BusLabel j, BusLabel k) const { return z(index_of(j), index_of(k)); }
};

/// Nodal admittance matrix: lines as series branches, sources as shunt
/// branches to the reference node.
ComplexMatrix build_ybus(const Network& net, Sequence seq);

/// Inverts the nodal admittance matrix. Throws UngroundedError or
/// ConditioningError (1-norm condition number above kMaxConditionNumber).
SequenceZbus build_zbus(const Network& net, Sequence seq);

/// Z_kr(m) = b + c*m: transfer impedance between bus k and a fault point at
/// fraction m along the faulted line, measured from its from-bus.
struct TransferCoefficients {
  Complex b;
  Complex c;
  BusLabel bus = 0;
  std::string line;
  Sequence sequence = Sequence::positive;

  Complex at(double m) const { return b + c * m; }
};

/// beta(m) = b + c*m: branch current change per unit fault current,
/// I = I_pre - beta(m) * I_f, for the branch observed at a given terminal.
struct BranchCoefficients {
  Complex b;
  Complex c;
  BranchTap branch;
  std::string faulted_line;
  Sequence sequence = Sequence::positive;

  Complex at(double m) const { return b + c * m; }
};

/// Z_rr(m) = a0 + a1*m + a2*m^2: driving-point impedance at the fault point.
struct FaultPointCoefficients {
  Complex a0;
  Complex a1;
  Complex a2;

  Complex at(double m) const { return a0 + (a1 + a2 * m) * m; }
};

TransferCoefficients transfer_coefficients(const SequenceZbus& zbus, const LineRecord& faulted,
                                           BusLabel k);

/// Coefficients for a healthy branch. Throws if `branch` is the faulted line
/// (use segment_coefficients) or has zero impedance in this sequence.
BranchCoefficients branch_coefficients(const SequenceZbus& zbus, const LineRecord& faulted,
                                       const LineRecord& branch, BusLabel at);

/// Coefficients for the faulted line's own terminal current, from terminal
/// `at` toward the fault point.
BranchCoefficients segment_coefficients(const SequenceZbus& zbus, const LineRecord& faulted,
                                        BusLabel at);

/// Dispatches to branch_coefficients or segment_coefficients.
BranchCoefficients tap_coefficients(const SequenceZbus& zbus, const Network& net,
                                    const LineRecord& faulted, const BranchTap& tap);

FaultPointCoefficients fault_point_coefficients(const SequenceZbus& zbus,
                                                const LineRecord& faulted);

/// Row-major CSV with "re+imj" cells and a header row of bus labels.
void write_zbus_csv(std::ostream& out, const SequenceZbus& zbus);

}  // namespace faultloc
