// faultloc: locate faults on a meshed network from sparse synchronized
// phasor measurements.
//
// Single scenario:
//   faultloc --case data/fourbus.case --line T2 --type LG --m 0.56 --rf-ohm 1 \
//            --method hybrid --buses 2 --branches 1-3
// Sweep:
//   faultloc --sweep sweeps/fourbus.json [--out report.json --format json]
//
// Exit codes: 0 success, 1 parse/validation failure, 2 infeasible placement.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faultloc/faultsim.hpp"
#include "faultloc/locator.hpp"
#include "faultloc/netmodel.hpp"
#include "faultloc/seqmatrix.hpp"
#include "faultloc/study.hpp"

namespace {

using namespace faultloc;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitInfeasible = 2;

struct Options {
  std::string case_path;
  std::string line;
  std::string type = "LLL";
  double m = std::numeric_limits<double>::quiet_NaN();
  double rf_ohm = 0.0;
  std::string method = "all";
  std::vector<BusLabel> buses;
  std::vector<std::string> branches;
  std::string distort;
  std::string out;
  std::string format;
  std::string sweep;
  std::string measurements;
  std::string dump_measurements;
  std::string dump_zbus;
  int sequence = 1;
  bool identify = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Options& opt, ReportFormat format, const std::vector<ReportRow>& rows) {
  if (opt.out.empty()) {
    if (format == ReportFormat::csv) write_report_csv(std::cout, rows);
    else write_report_json(std::cout, rows);
  } else {
    write_report_file(opt.out, format, rows);
  }
}

std::vector<PlacementSpec> placements_from_flags(const Network& net, const Options& opt) {
  std::vector<BranchTap> taps;
  for (const std::string& b : opt.branches) taps.push_back(parse_branch_tap(net, b));
  for (BusLabel b : opt.buses)
    if (!net.has_bus(b)) throw Error("unknown bus " + std::to_string(b));

  auto make = [&](Method m) -> std::optional<Placement> {
    Placement p{m, {}, {}};
    switch (m) {
      case Method::ssvm:
        if (opt.buses.size() < 2) return std::nullopt;
        p.buses = {opt.buses[0], opt.buses[1]};
        break;
      case Method::sscm:
        if (taps.size() < 2) return std::nullopt;
        p.branches = {taps[0], taps[1]};
        break;
      case Method::hybrid_direct:
      case Method::hybrid_quad:
        if (opt.buses.empty() || taps.empty()) return std::nullopt;
        p.buses = {opt.buses.back()};
        p.branches = {taps.front()};
        break;
    }
    return p;
  };

  std::vector<PlacementSpec> out;
  if (opt.method == "all") {
    for (Method m : kAllMethods)
      if (auto p = make(m)) out.push_back({std::nullopt, *p});
    if (out.empty()) throw Error("--method all needs --buses and/or --branches");
  } else {
    const Method m = parse_method(opt.method);
    auto p = make(m);
    if (!p) {
      Placement probe{m, {}, {}};
      probe.buses = opt.buses;
      probe.branches = taps;
      probe.check_shape();  // throws with a description of what is needed
    }
    out.push_back({std::nullopt, *p});
  }
  return out;
}

int report_feasibility(const SweepPlan& plan) {
  int code = kExitOk;
  for (const auto& [key, f] : plan.feasibility) {
    if (f.feasible) continue;
    std::cerr << "faultloc: infeasible placement on line " << key.first << ": "
              << to_string(f.reason) << " (" << f.detail << ")\n";
    code = kExitInfeasible;
  }
  return code;
}

int run_locate(const Options& opt) {
  const Network net = load_case(opt.case_path);

  if (!opt.dump_zbus.empty()) {
    if (opt.sequence < 0 || opt.sequence > 2) throw Error("--sequence must be 0, 1 or 2");
    const auto z = build_zbus(net, static_cast<Sequence>(opt.sequence));
    std::ofstream out(opt.dump_zbus, std::ios::binary);
    if (!out) throw Error("cannot write '" + opt.dump_zbus + "'");
    write_zbus_csv(out, z);
    if (opt.line.empty()) return kExitOk;
  }

  if (opt.line.empty()) throw Error("--line is required");
  const LineRecord& faulted = net.line(opt.line);
  const bool imported = !opt.measurements.empty();
  if (!imported && std::isnan(opt.m)) throw Error("--m is required unless --measurements is given");
  if (!std::isnan(opt.m) && !(opt.m >= 0.0 && opt.m <= 1.0)) throw Error("--m must lie in [0, 1]");
  if (!(opt.rf_ohm >= 0.0)) throw Error("--rf-ohm must be non-negative");

  const FaultScenario scenario{faulted.id, opt.m, parse_fault_type(opt.type), opt.rf_ohm};
  const SweepPlan plan =
      make_plan(net, {scenario}, placements_from_flags(net, opt), parse_distortion(opt.distort));
  const int code = report_feasibility(plan);

  PhasorMeasurementSet ms;
  if (imported) {
    std::ifstream in(opt.measurements, std::ios::binary);
    if (!in) throw Error("cannot open '" + opt.measurements + "'");
    ms = read_measurements_csv(in);
  } else {
    MeasurementTaps taps = required_taps(plan, faulted.id);
    if (!opt.dump_measurements.empty()) taps = all_taps(net);
    ms = simulate_measurements(plan.model, scenario, taps);
    if (!opt.dump_measurements.empty()) {
      std::ofstream out(opt.dump_measurements, std::ios::binary);
      if (!out) throw Error("cannot write '" + opt.dump_measurements + "'");
      write_measurements_csv(out, ms);
    }
  }
  if (!plan.distortion.entries.empty()) ms = apply_distortion(std::move(ms), plan.distortion);

  if (opt.identify) {
    for (const PlacementSpec& p : plan.placements) {
      std::cout << "# " << to_string(p.placement.method) << " " << describe(p.placement) << '\n';
      for (const LineHypothesis& h :
           identify_faulted_line(net, plan.model[Sequence::positive], p.placement, ms))
        std::cout << h.line << ",m=" << h.estimate.m << ",residual=" << h.estimate.residual << '\n';
    }
    return code;
  }

  const auto rows = evaluate_measurements(plan, scenario, ms);
  emit(opt, opt.format.empty() ? ReportFormat::csv : parse_report_format(opt.format), rows);
  return code;
}

int run_sweep(Options opt) {
  const std::filesystem::path spec_path(opt.sweep);
  SweepSpec spec = parse_sweep_spec(read_file(opt.sweep));
  std::filesystem::path case_path = opt.case_path.empty() ? spec.case_path : opt.case_path;
  if (case_path.empty()) throw Error("sweep spec names no case file");
  if (case_path.is_relative() && opt.case_path.empty() && !std::filesystem::exists(case_path))
    case_path = spec_path.parent_path() / case_path;

  const Network net = load_case(case_path.string());
  const SweepPlan plan = make_plan(net, spec);
  const int code = report_feasibility(plan);
  const auto rows = run_sweep_parallel(plan);

  if (opt.out.empty()) opt.out = spec.output_path;
  const ReportFormat format = opt.format.empty() ? spec.format : parse_report_format(opt.format);
  emit(opt, format, rows);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault location from sparse synchronized voltage and current phasors"};
  Options opt;
  app.add_option("--case", opt.case_path, "Case file");
  app.add_option("--line", opt.line, "Faulted line id");
  app.add_option("--type", opt.type, "Fault type: LG, LL, LLG or LLL")->capture_default_str();
  app.add_option("--m", opt.m, "Fault distance as a fraction of line length from the from-bus");
  app.add_option("--rf-ohm", opt.rf_ohm,
                 "Fault resistance in ohms (converted with Zbase = kV^2 / MVA)")
      ->capture_default_str();
  app.add_option("--method", opt.method,
                 "ssvm | sscm | hybrid | hybrid-quad | all. 'all' runs every method whose "
                 "channels are given; hybrid uses the last bus and the first branch")
      ->capture_default_str();
  app.add_option("--buses", opt.buses, "Voltage measurement buses, e.g. 1,2")->delimiter(',');
  app.add_option("--branches", opt.branches,
                 "Current measurement branches: a-b (line a-b seen from a) or <line>@<bus>")
      ->delimiter(',');
  app.add_option("--distort", opt.distort,
                 "Channel distortion, e.g. clamp:I:T2@2:0.8,gain:V:1:1.01:0.5");
  app.add_option("--out", opt.out, "Report path (default: stdout)");
  app.add_option("--format", opt.format, "Report format: csv or json");
  app.add_option("--sweep", opt.sweep, "JSON sweep specification");
  app.add_option("--measurements", opt.measurements,
                 "Locate from a measurement CSV instead of simulating");
  app.add_option("--dump-measurements", opt.dump_measurements,
                 "Write the simulated measurement set (all taps) as CSV");
  app.add_option("--dump-zbus", opt.dump_zbus, "Write the bus impedance matrix as CSV");
  app.add_option("--sequence", opt.sequence, "Sequence for --dump-zbus (0, 1, 2)")
      ->capture_default_str();
  app.add_flag("--identify", opt.identify,
               "List in-range faulted-line hypotheses instead of a report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    int code = kExitOk;
    if (!opt.sweep.empty()) {
      code = run_sweep(opt);
    } else {
      if (opt.case_path.empty()) throw Error("--case is required");
      code = run_locate(opt);
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    std::cerr << "faultloc: wall time " << elapsed.count() << " s\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "faultloc: " << e.what() << '\n';
    return kExitInvalid;
  }
}
