#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faultloc/faultsim.hpp"
#include "faultloc/locator.hpp"

namespace faultloc {

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(std::string_view text);

/// Placement as written by a user, before branch names are resolved against
/// a network. `line`, when set, restricts the placement to that faulted line.
struct PlacementText {
  std::string method;
  std::vector<BusLabel> buses;
  std::vector<std::string> branches;
  std::optional<std::string> line;
};

struct SweepSpec {
  std::string case_path;
  std::vector<std::string> lines;
  std::vector<FaultType> types;
  std::vector<double> m_values;
  std::vector<double> rf_ohm;
  std::vector<PlacementText> placements;
  std::string distortion;
  std::string output_path;
  ReportFormat format = ReportFormat::csv;

  /// Throws Error on empty lists or out-of-range values.
  void check() const;
};

/// Reads the JSON sweep description. Relative case/output paths are kept
/// as written; callers resolve them.
SweepSpec parse_sweep_spec(std::string_view json_text);

struct PlacementSpec {
  std::optional<std::string> line;
  Placement placement;
};

/// A resolved, ready-to-run sweep: the sequence model, the scenario
/// cross-product in report order, and pre-computed feasibility.
struct SweepPlan {
  SequenceModel model;
  std::vector<FaultScenario> scenarios;
  std::vector<PlacementSpec> placements;  // sorted by method
  DistortionSpec distortion;
  std::map<std::pair<std::string, std::size_t>, Feasibility> feasibility;  // (line, placement)

  std::vector<std::size_t> placements_for(std::string_view line) const;
};

SweepPlan make_plan(const Network& net, const SweepSpec& spec);
SweepPlan make_plan(const Network& net, std::vector<FaultScenario> scenarios,
                    std::vector<PlacementSpec> placements, DistortionSpec distortion = {});

Placement resolve_placement(const Network& net, const PlacementText& text);

struct ReportRow {
  std::string line;
  FaultType type = FaultType::LLL;
  double m_true = 0.0;
  double rf_ohm = 0.0;
  Method method = Method::ssvm;
  std::string placement;
  double m_est = 0.0;
  double residual = 0.0;
  double pct_error = 0.0;
  bool feasible = false;
  bool in_range = false;
  bool ambiguous = false;
  std::string note;

  bool operator==(const ReportRow&) const = default;
};

/// Simulates one scenario (applying the plan's distortion) and evaluates
/// every applicable placement against it.
std::vector<ReportRow> evaluate_scenario(const SweepPlan& plan, const FaultScenario& scenario);
/// Same, but with caller-provided measurements (m_true is taken from the scenario).
std::vector<ReportRow> evaluate_measurements(const SweepPlan& plan, const FaultScenario& scenario,
                                             const PhasorMeasurementSet& ms);

/// Measurement taps needed by the placements applicable to `line`, plus any
/// distortion channels.
MeasurementTaps required_taps(const SweepPlan& plan, std::string_view line);

/// Serial reference sweep.
std::vector<ReportRow> run_sweep_serial(const SweepPlan& plan);
/// OpenMP sweep over scenarios; output identical to run_sweep_serial.
std::vector<ReportRow> run_sweep_parallel(const SweepPlan& plan);

struct MethodAggregate {
  Method method = Method::ssvm;
  std::size_t rows = 0;
  std::size_t feasible = 0;
  double max_pct_error = 0.0;
  double mean_pct_error = 0.0;
};

std::vector<MethodAggregate> aggregate(const std::vector<ReportRow>& rows);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
void write_report_json(std::ostream& out, const std::vector<ReportRow>& rows);
/// Writes to a temporary file next to `path` and renames it into place.
void write_report_file(const std::string& path, ReportFormat format,
                       const std::vector<ReportRow>& rows);

struct NoiseOptions {
  double sigma = 1e-3;  // std-dev of each real/imag part of the multiplicative error
  int trials = 1000;
  std::uint64_t seed = 1;
};

/// Multiplies every pre-fault and fault phasor of `channels` by
/// (1 + n_re + j n_im), n ~ N(0, sigma^2), using a per-trial generator.
PhasorMeasurementSet add_channel_noise(PhasorMeasurementSet ms, const std::vector<ChannelId>& channels,
                                       double sigma, std::uint64_t seed);

/// |m_est - m_true| for each noisy trial of one placement; failed trials
/// report +inf. Serial reference and OpenMP variants return identical vectors.
std::vector<double> noise_errors_serial(const SweepPlan& plan, const FaultScenario& scenario,
                                        const Placement& placement, const NoiseOptions& opts);
std::vector<double> noise_errors_parallel(const SweepPlan& plan, const FaultScenario& scenario,
                                          const Placement& placement, const NoiseOptions& opts);

double median(std::vector<double> values);

}  // namespace faultloc
