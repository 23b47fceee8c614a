#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faultloc/faultsim.hpp"
#include "faultloc/netmodel.hpp"
#include "faultloc/seqmatrix.hpp"

namespace faultloc {

enum class Method { ssvm, sscm, hybrid_direct, hybrid_quad };

inline constexpr std::array<Method, 4> kAllMethods{Method::ssvm, Method::sscm,
                                                   Method::hybrid_direct, Method::hybrid_quad};

/// "ssvm", "sscm", "hybrid", "hybrid-quad".
std::string_view to_string(Method m);
Method parse_method(std::string_view text);

/// Denominator channels whose fault-induced change is below this (pu) carry
/// no observable fault signature.
inline constexpr double kDegeneracyThreshold = 1e-9;
/// Relative threshold for the proportionality (rank) test on coefficient pairs.
inline constexpr double kRankThreshold = 1e-8;
/// Slack when deciding whether a quadratic root lies in [0, 1].
inline constexpr double kRootSlack = 1e-9;

/// Positive-sequence pre-fault and during-fault phasors of one channel.
struct Channel {
  Complex prefault;
  Complex fault;
  std::uint64_t alignment = 0;

  Complex delta() const { return fault - prefault; }
};

struct VoltagePair {
  BusLabel k = 0;
  BusLabel l = 0;
  Channel ek;
  Channel el;  // denominator
};

struct CurrentPair {
  BranchTap first;
  BranchTap second;
  Channel i_first;
  Channel i_second;  // denominator
};

struct HybridPair {
  BranchTap branch;
  BusLabel bus = 0;
  Channel current;
  Channel voltage;  // denominator
};

struct LocationEstimate {
  double m = 0.0;
  Complex m_complex;
  double residual = 0.0;  // |Im m_complex|, or quadratic consistency residual
  Method method = Method::ssvm;
  bool feasible = true;
  bool in_range = true;   // 0 <= m <= 1
  bool ambiguous = false; // both quadratic roots in range
  std::string notes;
};

class LocateError : public Error {
 public:
  enum class Reason { degenerate_denominator, vanishing_solve, linear_dependence, no_root, misaligned };
  LocateError(Reason reason, const std::string& message) : Error(message), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

LocationEstimate locate_ssvm(const VoltagePair& pair, const TransferCoefficients& k,
                             const TransferCoefficients& l);
LocationEstimate locate_sscm(const CurrentPair& pair, const BranchCoefficients& first,
                             const BranchCoefficients& second);
LocationEstimate locate_hybrid_direct(const HybridPair& pair, const BranchCoefficients& branch,
                                      const TransferCoefficients& bus);
LocationEstimate locate_hybrid_quadratic(const HybridPair& pair, const BranchCoefficients& branch,
                                         const TransferCoefficients& bus);

/// c2*m^2 + c1*m + c0 = 0
struct QuadraticCoefficients {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;
};

struct QuadraticSolution {
  double m = 0.0;
  std::vector<double> roots;  // real roots, ascending
  bool ambiguous = false;
};

/// Magnitude form |b_num + c_num m|^2 = |d|^2 |b_den + c_den m|^2.
QuadraticCoefficients location_quadratic(Complex b_num, Complex c_num, Complex b_den, Complex c_den,
                                         double d_abs);

/// Picks the root in [0, 1]. With two in range, the one nearest `tiebreak`
/// wins and the result is flagged ambiguous. Near-zero c2 falls back to the
/// linear equation. Throws LocateError(no_root) when no root is in range.
QuadraticSolution select_quadratic_root(const QuadraticCoefficients& q,
                                        std::optional<double> tiebreak = std::nullopt);

/// Measurement placement for one method. ssvm: two buses; sscm: two branch
/// taps; hybrid methods: one bus and one branch tap.
struct Placement {
  Method method = Method::ssvm;
  std::vector<BusLabel> buses;
  std::vector<BranchTap> branches;

  std::vector<ChannelId> channels() const;
  /// Throws Error when the channel counts do not fit the method.
  void check_shape() const;
};

std::string describe(const Placement& p);

struct Feasibility {
  enum class Reason { ok, bad_placement, no_simple_path, linear_dependence };
  bool feasible = true;
  Reason reason = Reason::ok;
  std::string detail;
};

std::string_view to_string(Feasibility::Reason r);

/// Graph test (placements with a bus voltage): a simple path between the two
/// measurement locations that runs through the faulted line, ground node
/// excluded. Rank test (all placements): the two channels' (b, c)
/// coefficient vectors must not be proportional.
Feasibility feasibility_check(const Network& net, const SequenceZbus& zbus1,
                              std::string_view faulted_line, const Placement& placement);
Feasibility feasibility_check(const Network& net, std::string_view faulted_line,
                              const Placement& placement);

/// Just the graph part: is there a simple path from some bus in `from` to
/// some bus in `to` that uses the line `via`?
bool simple_path_through(const Network& net, const std::vector<BusLabel>& from,
                         const std::vector<BusLabel>& to, std::string_view via);

/// Pulls the positive-sequence channels named by the placement out of a
/// measurement set and runs the matching locator against the faulted-line
/// hypothesis.
LocationEstimate locate(const Network& net, const SequenceZbus& zbus1, std::string_view faulted_line,
                        const Placement& placement, const PhasorMeasurementSet& ms);

double percent_error(double actual_km, double estimated_km, double line_length_km);

struct LineHypothesis {
  std::string line;
  LocationEstimate estimate;
};

/// Runs the locator against every line the placement can be evaluated on and
/// returns the in-range hypotheses ordered by residual.
std::vector<LineHypothesis> identify_faulted_line(const Network& net, const SequenceZbus& zbus1,
                                                  const Placement& placement,
                                                  const PhasorMeasurementSet& ms);

}  // namespace faultloc
