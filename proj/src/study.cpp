#include "faultloc/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

namespace faultloc {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v, const char* format = "%.15g") {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

ReportRow base_row(const FaultScenario& s, const PlacementSpec& p) {
  ReportRow row;
  row.line = s.line;
  row.type = s.type;
  row.m_true = s.m;
  row.rf_ohm = s.rf_ohm;
  row.method = p.placement.method;
  row.placement = describe(p.placement);
  row.m_est = kNaN;
  row.residual = kNaN;
  row.pct_error = kNaN;
  return row;
}

template <class T>
std::vector<T> required_list(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("sweep spec is missing '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_array()) throw Error(std::string("sweep spec '") + key + "' must be a list");
  return v.get<std::vector<T>>();
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw Error("unknown report format '" + std::string(text) + "' (expected csv or json)");
}

void SweepSpec::check() const {
  if (lines.empty()) throw Error("sweep spec: empty line list");
  if (types.empty()) throw Error("sweep spec: empty fault-type list");
  if (m_values.empty()) throw Error("sweep spec: empty m list");
  if (rf_ohm.empty()) throw Error("sweep spec: empty rf list");
  if (placements.empty()) throw Error("sweep spec: empty placement list");
  for (double m : m_values)
    if (!(m >= 0.0 && m <= 1.0)) throw Error("sweep spec: m values must lie in [0, 1]");
  for (double r : rf_ohm)
    if (!(r >= 0.0)) throw Error("sweep spec: rf values must be non-negative");
}

SweepSpec parse_sweep_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("sweep spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("sweep spec must be a JSON object");

  SweepSpec spec;
  try {
    spec.case_path = j.value("case", std::string{});
    spec.lines = required_list<std::string>(j, "lines");
    for (const auto& t : required_list<std::string>(j, "types"))
      spec.types.push_back(parse_fault_type(t));
    spec.m_values = required_list<double>(j, "m");
    spec.rf_ohm = required_list<double>(j, "rf_ohm");
    for (const json& p : required_list<json>(j, "placements")) {
      PlacementText text;
      text.method = p.at("method").get<std::string>();
      text.buses = p.value("buses", std::vector<BusLabel>{});
      text.branches = p.value("branches", std::vector<std::string>{});
      if (p.contains("line")) text.line = p.at("line").get<std::string>();
      spec.placements.push_back(std::move(text));
    }
    spec.distortion = j.value("distort", std::string{});
    if (j.contains("output")) {
      const json& out = j.at("output");
      spec.output_path = out.value("path", std::string{});
      spec.format = parse_report_format(out.value("format", std::string("csv")));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("sweep spec: ") + e.what());
  }
  spec.check();
  return spec;
}

Placement resolve_placement(const Network& net, const PlacementText& text) {
  Placement p;
  p.method = parse_method(text.method);
  for (BusLabel b : text.buses) {
    if (!net.has_bus(b)) throw Error("placement references unknown bus " + std::to_string(b));
    p.buses.push_back(b);
  }
  for (const std::string& br : text.branches) p.branches.push_back(parse_branch_tap(net, br));
  p.check_shape();
  return p;
}

std::vector<std::size_t> SweepPlan::placements_for(std::string_view line) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < placements.size(); ++i)
    if (!placements[i].line || *placements[i].line == line) out.push_back(i);
  return out;
}

SweepPlan make_plan(const Network& net, std::vector<FaultScenario> scenarios,
                    std::vector<PlacementSpec> placements, DistortionSpec distortion) {
  SweepPlan plan;
  plan.model = build_sequence_model(net);
  plan.scenarios = std::move(scenarios);
  plan.placements = std::move(placements);
  std::stable_sort(plan.placements.begin(), plan.placements.end(),
                   [](const PlacementSpec& a, const PlacementSpec& b) {
                     return a.placement.method < b.placement.method;
                   });
  plan.distortion = std::move(distortion);

  const SequenceZbus& z1 = plan.model[Sequence::positive];
  for (const FaultScenario& s : plan.scenarios) {
    plan.model.net.line(s.line);
    for (std::size_t i : plan.placements_for(s.line)) {
      const auto key = std::make_pair(s.line, i);
      if (!plan.feasibility.contains(key))
        plan.feasibility[key] =
            feasibility_check(plan.model.net, z1, s.line, plan.placements[i].placement);
    }
  }
  return plan;
}

SweepPlan make_plan(const Network& net, const SweepSpec& spec) {
  spec.check();
  std::vector<FaultScenario> scenarios;
  for (const std::string& line : spec.lines)
    for (FaultType t : spec.types)
      for (double m : spec.m_values)
        for (double rf : spec.rf_ohm) scenarios.push_back({line, m, t, rf});
  std::vector<PlacementSpec> placements;
  for (const PlacementText& text : spec.placements) {
    if (text.line) net.line(*text.line);
    placements.push_back({text.line, resolve_placement(net, text)});
  }
  return make_plan(net, std::move(scenarios), std::move(placements),
                   parse_distortion(spec.distortion));
}

MeasurementTaps required_taps(const SweepPlan& plan, std::string_view line) {
  std::set<BusLabel> buses;
  std::set<BranchTap> branches;
  auto add = [&](const ChannelId& ch) {
    if (ch.kind == ChannelId::Kind::bus_voltage) buses.insert(ch.bus);
    else branches.insert(ch.branch);
  };
  for (std::size_t i : plan.placements_for(line))
    for (const ChannelId& ch : plan.placements[i].placement.channels()) add(ch);
  for (const DistortionEntry& d : plan.distortion.entries) add(d.channel);
  return {{buses.begin(), buses.end()}, {branches.begin(), branches.end()}};
}

std::vector<ReportRow> evaluate_measurements(const SweepPlan& plan, const FaultScenario& scenario,
                                             const PhasorMeasurementSet& ms) {
  const Network& net = plan.model.net;
  const double length = net.line(scenario.line).length_km;
  const SequenceZbus& z1 = plan.model[Sequence::positive];

  std::vector<ReportRow> rows;
  for (std::size_t i : plan.placements_for(scenario.line)) {
    const PlacementSpec& p = plan.placements[i];
    ReportRow row = base_row(scenario, p);
    const Feasibility& f = plan.feasibility.at({scenario.line, i});
    if (!f.feasible) {
      row.note = std::string(to_string(f.reason));
      rows.push_back(std::move(row));
      continue;
    }
    try {
      const LocationEstimate est = locate(net, z1, scenario.line, p.placement, ms);
      row.feasible = true;
      row.m_est = est.m;
      row.residual = est.residual;
      row.in_range = est.in_range;
      row.ambiguous = est.ambiguous;
      row.note = est.notes;
      if (!std::isnan(scenario.m))
        row.pct_error = percent_error(scenario.m * length, est.m * length, length);
    } catch (const LocateError& e) {
      row.note = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ReportRow> evaluate_scenario(const SweepPlan& plan, const FaultScenario& scenario) {
  PhasorMeasurementSet ms =
      simulate_measurements(plan.model, scenario, required_taps(plan, scenario.line));
  if (!plan.distortion.entries.empty()) ms = apply_distortion(std::move(ms), plan.distortion);
  return evaluate_measurements(plan, scenario, ms);
}

std::vector<ReportRow> run_sweep_serial(const SweepPlan& plan) {
  std::vector<ReportRow> rows;
  for (const FaultScenario& s : plan.scenarios) {
    auto part = evaluate_scenario(plan, s);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  return rows;
}

std::vector<ReportRow> run_sweep_parallel(const SweepPlan& plan) {
  const auto n = static_cast<std::ptrdiff_t>(plan.scenarios.size());
  std::vector<std::vector<ReportRow>> parts(plan.scenarios.size());
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      parts[static_cast<std::size_t>(i)] = evaluate_scenario(plan, plan.scenarios[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(faultloc_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ReportRow> rows;
  for (auto& part : parts)
    rows.insert(rows.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  return rows;
}

std::vector<MethodAggregate> aggregate(const std::vector<ReportRow>& rows) {
  std::vector<MethodAggregate> out;
  for (Method m : kAllMethods) {
    MethodAggregate agg;
    agg.method = m;
    double sum = 0.0;
    std::size_t counted = 0;
    for (const ReportRow& r : rows) {
      if (r.method != m) continue;
      ++agg.rows;
      if (!r.feasible) continue;
      ++agg.feasible;
      if (std::isnan(r.pct_error)) continue;
      agg.max_pct_error = std::max(agg.max_pct_error, r.pct_error);
      sum += r.pct_error;
      ++counted;
    }
    if (agg.rows == 0) continue;
    if (counted == 0) agg.max_pct_error = kNaN;
    agg.mean_pct_error = counted ? sum / static_cast<double>(counted) : kNaN;
    out.push_back(agg);
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "line,type,m_true,rf_ohm,method,m_est,residual,pct_error,feasible\n";
  for (const ReportRow& r : rows) {
    out << r.line << ',' << to_string(r.type) << ',' << num(r.m_true) << ',' << num(r.rf_ohm)
        << ',' << to_string(r.method) << ',' << num(r.m_est) << ',' << num(r.residual, "%.6e")
        << ',' << num(r.pct_error, "%.10g") << ',' << (r.feasible ? "true" : "false") << '\n';
  }
  for (const MethodAggregate& a : aggregate(rows)) {
    out << "# aggregate method=" << to_string(a.method) << " rows=" << a.rows
        << " feasible=" << a.feasible << " max_pct_error=" << num(a.max_pct_error, "%.10g")
        << " mean_pct_error=" << num(a.mean_pct_error, "%.10g") << '\n';
  }
}

void write_report_json(std::ostream& out, const std::vector<ReportRow>& rows) {
  auto val = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json doc;
  doc["schema"] = 1;
  json arr = json::array();
  for (const ReportRow& r : rows) {
    arr.push_back({{"line", r.line},
                   {"type", std::string(to_string(r.type))},
                   {"m_true", val(r.m_true)},
                   {"rf_ohm", r.rf_ohm},
                   {"method", std::string(to_string(r.method))},
                   {"placement", r.placement},
                   {"m_est", val(r.m_est)},
                   {"residual", val(r.residual)},
                   {"pct_error", val(r.pct_error)},
                   {"feasible", r.feasible},
                   {"in_range", r.in_range},
                   {"ambiguous", r.ambiguous},
                   {"note", r.note}});
  }
  doc["rows"] = std::move(arr);
  json aggs = json::array();
  for (const MethodAggregate& a : aggregate(rows)) {
    aggs.push_back({{"method", std::string(to_string(a.method))},
                    {"rows", a.rows},
                    {"feasible", a.feasible},
                    {"max_pct_error", val(a.max_pct_error)},
                    {"mean_pct_error", val(a.mean_pct_error)}});
  }
  doc["aggregates"] = std::move(aggs);
  out << doc.dump(2) << '\n';
}

void write_report_file(const std::string& path, ReportFormat format,
                       const std::vector<ReportRow>& rows) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report to '" + tmp.string() + "'");
    if (format == ReportFormat::csv) write_report_csv(out, rows);
    else write_report_json(out, rows);
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error("failed writing report '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, target);
}

PhasorMeasurementSet add_channel_noise(PhasorMeasurementSet ms, const std::vector<ChannelId>& channels,
                                       double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  auto perturb = [&](Complex& v) { v *= Complex(1.0 + noise(rng), noise(rng)); };
  for (const ChannelId& ch : channels) {
    if (ch.kind == ChannelId::Kind::bus_voltage) {
      perturb(ms.prefault_bus_v.at(ch.bus));
      for (Complex& v : ms.fault_bus_v.at(ch.bus)) perturb(v);
    } else {
      perturb(ms.prefault_branch_i.at(ch.branch));
      for (Complex& v : ms.fault_branch_i.at(ch.branch)) perturb(v);
    }
  }
  return ms;
}

namespace {

std::uint64_t trial_seed(std::uint64_t base, int trial) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(trial + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double noisy_trial(const SweepPlan& plan, const FaultScenario& scenario, const Placement& placement,
                   const PhasorMeasurementSet& clean, const std::vector<ChannelId>& channels,
                   const NoiseOptions& opts, int trial) {
  const auto ms = add_channel_noise(clean, channels, opts.sigma, trial_seed(opts.seed, trial));
  try {
    const auto est =
        locate(plan.model.net, plan.model[Sequence::positive], scenario.line, placement, ms);
    return std::abs(est.m - scenario.m);
  } catch (const LocateError&) {
    return std::numeric_limits<double>::infinity();
  }
}

PhasorMeasurementSet clean_measurements(const SweepPlan& plan, const FaultScenario& scenario,
                                        const Placement& placement) {
  MeasurementTaps taps;
  for (const ChannelId& ch : placement.channels()) {
    if (ch.kind == ChannelId::Kind::bus_voltage) taps.buses.push_back(ch.bus);
    else taps.branches.push_back(ch.branch);
  }
  return simulate_measurements(plan.model, scenario, taps);
}

}  // namespace

std::vector<double> noise_errors_serial(const SweepPlan& plan, const FaultScenario& scenario,
                                        const Placement& placement, const NoiseOptions& opts) {
  const auto clean = clean_measurements(plan, scenario, placement);
  const auto channels = placement.channels();
  std::vector<double> out(static_cast<std::size_t>(std::max(opts.trials, 0)));
  for (int t = 0; t < opts.trials; ++t)
    out[static_cast<std::size_t>(t)] = noisy_trial(plan, scenario, placement, clean, channels, opts, t);
  return out;
}

std::vector<double> noise_errors_parallel(const SweepPlan& plan, const FaultScenario& scenario,
                                          const Placement& placement, const NoiseOptions& opts) {
  const auto clean = clean_measurements(plan, scenario, placement);
  const auto channels = placement.channels();
  std::vector<double> out(static_cast<std::size_t>(std::max(opts.trials, 0)));
  std::exception_ptr failure;

#pragma omp parallel for schedule(static)
  for (int t = 0; t < opts.trials; ++t) {
    try {
      out[static_cast<std::size_t>(t)] =
          noisy_trial(plan, scenario, placement, clean, channels, opts, t);
    } catch (...) {
#pragma omp critical(faultloc_noise_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  if (values.size() % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace faultloc
