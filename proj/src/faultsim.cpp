#include "faultloc/faultsim.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace faultloc {

namespace {

const Complex kAlpha = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    out.push_back(s.substr(start, at == std::string_view::npos ? s.size() - start : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view tok, std::string_view what) {
  tok = trim(tok);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw Error("invalid number '" + std::string(tok) + "' in " + std::string(what));
  return v;
}

int parse_int(std::string_view tok, std::string_view what) {
  tok = trim(tok);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw Error("invalid integer '" + std::string(tok) + "' in " + std::string(what));
  return v;
}

BranchTap parse_tap_text(std::string_view text) {
  const auto at = text.rfind('@');
  if (at == std::string_view::npos || at == 0)
    throw Error("branch channel '" + std::string(text) + "' must be <line>@<bus>");
  return {std::string(text.substr(0, at)), parse_int(text.substr(at + 1), "branch channel")};
}

// FNV-1a over the scenario description; stands in for a GPS time tag.
std::uint64_t alignment_token(const FaultScenario& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s|%.17g|%d|%.17g", s.line.c_str(), s.m,
                static_cast<int>(s.type), s.rf_ohm);
  std::uint64_t h = 14695981039346656037ull;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string_view to_string(FaultType t) {
  switch (t) {
    case FaultType::LG:
      return "LG";
    case FaultType::LL:
      return "LL";
    case FaultType::LLG:
      return "LLG";
    case FaultType::LLL:
      return "LLL";
  }
  return "?";
}

FaultType parse_fault_type(std::string_view text) {
  std::string up(trim(text));
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (FaultType t : kAllFaultTypes)
    if (to_string(t) == up) return t;
  throw Error("unknown fault type '" + std::string(text) + "' (expected LG, LL, LLG or LLL)");
}

Complex PrefaultState::current(const Network& net, const BranchTap& tap) const {
  const LineRecord& l = net.line(tap.line);
  const Complex i = line_i.at(l.id);
  return tap.at == l.from ? i : -i;
}

PrefaultState prefault_solve(const Network& net) {
  const ComplexMatrix y = build_ybus(net, Sequence::positive);
  std::vector<Complex> injection(net.bus_count());
  for (const SourceRecord& s : net.sources)
    injection[net.bus_index(s.bus)] += s.emf() / s.z1;

  PrefaultState out;
  try {
    out.bus_v = LuDecomposition(y).solve(injection);
  } catch (const SingularMatrixError&) {
    throw UngroundedError("pre-fault system is singular");
  }
  for (const LineRecord& l : net.lines) {
    const Complex dv = out.bus_v[net.bus_index(l.from)] - out.bus_v[net.bus_index(l.to)];
    out.line_i[l.id] = dv / l.z1();
  }
  return out;
}

SequenceTriple fault_sequence_currents(FaultType type, double rf_pu, const SequenceTriple& z_rr,
                                       Complex e_prefault) {
  const Complex z0 = z_rr[index_of(Sequence::zero)];
  const Complex z1 = z_rr[index_of(Sequence::positive)];
  const Complex z2 = z_rr[index_of(Sequence::negative)];
  auto checked = [](Complex loop) {
    if (std::abs(loop) == 0.0) throw Error("fault loop impedance is zero");
    return loop;
  };

  Complex i0, i1, i2;
  switch (type) {
    case FaultType::LLL:
      i1 = e_prefault / checked(z1 + rf_pu);
      break;
    case FaultType::LG:
      i1 = e_prefault / checked(z0 + z1 + z2 + 3.0 * rf_pu);
      i0 = i1;
      i2 = i1;
      break;
    case FaultType::LL:
      i1 = e_prefault / checked(z1 + z2 + rf_pu);
      i2 = -i1;
      break;
    case FaultType::LLG: {
      const Complex zg = z0 + 3.0 * rf_pu;
      const Complex split = checked(z2 + zg);
      i1 = e_prefault / checked(z1 + z2 * zg / split);
      i2 = -i1 * zg / split;
      i0 = -i1 * z2 / split;
      break;
    }
  }
  SequenceTriple out;
  out[index_of(Sequence::zero)] = i0;
  out[index_of(Sequence::positive)] = i1;
  out[index_of(Sequence::negative)] = i2;
  return out;
}

SequenceModel build_sequence_model(Network net) {
  SequenceModel model;
  for (Sequence s : kAllSequences) model.zbus[index_of(s)] = build_zbus(net, s);
  model.prefault = prefault_solve(net);
  model.net = std::move(net);
  return model;
}

MeasurementTaps all_taps(const Network& net, std::string_view excluded_line) {
  MeasurementTaps taps;
  for (const BusId& b : net.buses) taps.buses.push_back(b.label);
  for (const LineRecord& l : net.lines) {
    if (l.id == excluded_line) continue;
    taps.branches.push_back({l.id, l.from});
    taps.branches.push_back({l.id, l.to});
  }
  return taps;
}

PhasorMeasurementSet simulate_measurements(const SequenceModel& model, const FaultScenario& scenario,
                                           const MeasurementTaps& taps) {
  const Network& net = model.net;
  const LineRecord& faulted = net.line(scenario.line);
  if (!(scenario.m >= 0.0 && scenario.m <= 1.0))
    throw Error("fault distance m must lie in [0, 1]");
  if (!(scenario.rf_ohm >= 0.0)) throw Error("fault resistance must be non-negative");
  const double m = scenario.m;

  SequenceTriple z_rr;
  for (Sequence s : kAllSequences)
    z_rr[index_of(s)] = fault_point_coefficients(model[s], faulted).at(m);
  const Complex e_r = (1.0 - m) * model.prefault.voltage(net, faulted.from) +
                      m * model.prefault.voltage(net, faulted.to);
  const SequenceTriple i_f =
      fault_sequence_currents(scenario.type, net.ohm_to_pu(scenario.rf_ohm), z_rr, e_r);

  PhasorMeasurementSet ms;
  ms.alignment = alignment_token(scenario);
  for (BusLabel k : taps.buses) {
    if (!net.has_bus(k)) throw Error("tap references unknown bus " + std::to_string(k));
    const Complex pre = model.prefault.voltage(net, k);
    SequenceTriple v;
    for (Sequence s : kAllSequences)
      v[index_of(s)] = -transfer_coefficients(model[s], faulted, k).at(m) * i_f[index_of(s)];
    v[index_of(Sequence::positive)] += pre;
    ms.prefault_bus_v[k] = pre;
    ms.fault_bus_v[k] = v;
  }
  for (const BranchTap& tap : taps.branches) {
    const LineRecord* l = net.find_line(tap.line);
    if (l == nullptr || !l->touches(tap.at))
      throw Error("tap references unknown branch " + to_string(tap));
    const Complex pre = model.prefault.current(net, tap);
    SequenceTriple i;
    for (Sequence s : kAllSequences)
      i[index_of(s)] = -tap_coefficients(model[s], net, faulted, tap).at(m) * i_f[index_of(s)];
    i[index_of(Sequence::positive)] += pre;
    ms.prefault_branch_i[tap] = pre;
    ms.fault_branch_i[tap] = i;
  }
  return ms;
}

PhasorMeasurementSet simulate_measurements(const Network& net, const FaultScenario& scenario,
                                           const MeasurementTaps& taps) {
  return simulate_measurements(build_sequence_model(net), scenario, taps);
}

std::string to_string(const ChannelId& ch) {
  if (ch.kind == ChannelId::Kind::bus_voltage) return "V:" + std::to_string(ch.bus);
  return "I:" + to_string(ch.branch);
}

DistortionSpec parse_distortion(std::string_view text) {
  DistortionSpec spec;
  if (trim(text).empty()) return spec;
  for (std::string_view entry : split(text, ',')) {
    entry = trim(entry);
    if (entry.empty()) continue;
    const auto f = split(entry, ':');
    if (f.size() < 4) throw Error("distortion entry '" + std::string(entry) + "' is too short");

    DistortionEntry d;
    const std::string_view kind = trim(f[1]);
    if (kind == "V") {
      d.channel.kind = ChannelId::Kind::bus_voltage;
      d.channel.bus = parse_int(f[2], "distortion channel");
    } else if (kind == "I") {
      d.channel.kind = ChannelId::Kind::branch_current;
      d.channel.branch = parse_tap_text(trim(f[2]));
    } else {
      throw Error("distortion channel kind must be V or I, got '" + std::string(kind) + "'");
    }

    const std::string_view mode = trim(f[0]);
    if (mode == "gain") {
      if (f.size() > 5) throw Error("gain entry takes <factor>[:<phase_deg>]");
      d.mode = DistortionEntry::Mode::gain;
      d.gain = parse_number(f[3], "gain factor");
      if (f.size() == 5) d.phase_deg = parse_number(f[4], "gain phase");
    } else if (mode == "clamp") {
      if (f.size() != 4) throw Error("clamp entry takes a single <fraction>");
      d.mode = DistortionEntry::Mode::clamp;
      d.clamp_fraction = parse_number(f[3], "clamp fraction");
      if (!(d.clamp_fraction >= 0.0)) throw Error("clamp fraction must be non-negative");
    } else {
      throw Error("distortion mode must be gain or clamp, got '" + std::string(mode) + "'");
    }
    spec.entries.push_back(d);
  }
  return spec;
}

PhasorMeasurementSet apply_distortion(PhasorMeasurementSet ms, const DistortionSpec& spec) {
  for (const DistortionEntry& d : spec.entries) {
    Complex* pre = nullptr;
    SequenceTriple* fault = nullptr;
    if (d.channel.kind == ChannelId::Kind::bus_voltage) {
      auto it = ms.fault_bus_v.find(d.channel.bus);
      if (it == ms.fault_bus_v.end()) throw Error("unknown channel " + to_string(d.channel));
      fault = &it->second;
      pre = &ms.prefault_bus_v.at(d.channel.bus);
    } else {
      auto it = ms.fault_branch_i.find(d.channel.branch);
      if (it == ms.fault_branch_i.end()) throw Error("unknown channel " + to_string(d.channel));
      fault = &it->second;
      pre = &ms.prefault_branch_i.at(d.channel.branch);
    }

    if (d.mode == DistortionEntry::Mode::gain) {
      const Complex g = std::polar(d.gain, d.phase_deg * std::numbers::pi / 180.0);
      *pre *= g;
      for (Complex& v : *fault) v *= g;
    } else {
      const double limit = d.clamp_fraction * std::abs((*fault)[index_of(Sequence::positive)]);
      for (Complex& v : *fault) {
        const double mag = std::abs(v);
        if (mag > limit) v *= limit / mag;
      }
    }
  }
  return ms;
}

SequenceTriple sequence_transform(const std::array<Complex, 3>& abc) {
  const Complex a2 = kAlpha * kAlpha;
  const auto& [a, b, c] = abc;
  SequenceTriple out;
  out[index_of(Sequence::zero)] = (a + b + c) / 3.0;
  out[index_of(Sequence::positive)] = (a + kAlpha * b + a2 * c) / 3.0;
  out[index_of(Sequence::negative)] = (a + a2 * b + kAlpha * c) / 3.0;
  return out;
}

std::array<Complex, 3> inverse_sequence_transform(const SequenceTriple& seq) {
  const Complex a2 = kAlpha * kAlpha;
  const Complex s0 = seq[index_of(Sequence::zero)];
  const Complex s1 = seq[index_of(Sequence::positive)];
  const Complex s2 = seq[index_of(Sequence::negative)];
  return {s0 + s1 + s2, s0 + a2 * s1 + kAlpha * s2, s0 + kAlpha * s1 + a2 * s2};
}

void write_measurements_csv(std::ostream& out, const PhasorMeasurementSet& ms) {
  char buf[128];
  auto row = [&](const char* kind, const std::string& id, const char* stage, int seq, Complex v) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", v.real(), v.imag());
    out << kind << ',' << id << ',' << stage << ',' << seq << ',' << buf << '\n';
  };
  out << "# alignment=" << ms.alignment << '\n';
  out << "kind,id,stage,seq,re,im\n";
  for (const auto& [bus, v] : ms.prefault_bus_v) row("busV", std::to_string(bus), "pre", 1, v);
  for (const auto& [bus, v] : ms.fault_bus_v)
    for (Sequence s : kAllSequences)
      row("busV", std::to_string(bus), "fault", static_cast<int>(s), v[index_of(s)]);
  for (const auto& [tap, v] : ms.prefault_branch_i) row("branchI", to_string(tap), "pre", 1, v);
  for (const auto& [tap, v] : ms.fault_branch_i)
    for (Sequence s : kAllSequences)
      row("branchI", to_string(tap), "fault", static_cast<int>(s), v[index_of(s)]);
}

PhasorMeasurementSet read_measurements_csv(std::istream& in) {
  PhasorMeasurementSet ms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      constexpr std::string_view key = "alignment=";
      if (const auto at = text.find(key); at != std::string_view::npos) {
        const std::string_view num = trim(text.substr(at + key.size()));
        std::from_chars(num.data(), num.data() + num.size(), ms.alignment);
      }
      continue;
    }
    if (text.starts_with("kind,")) continue;

    const auto f = split(text, ',');
    const std::string where = "measurement row " + std::to_string(line_no);
    if (f.size() != 6) throw Error(where + ": expected 6 columns");
    const std::string_view kind = trim(f[0]);
    const std::string_view id = trim(f[1]);
    const std::string_view stage = trim(f[2]);
    const int seq = parse_int(f[3], where);
    if (seq < 0 || seq > 2) throw Error(where + ": sequence must be 0, 1 or 2");
    const Complex v{parse_number(f[4], where), parse_number(f[5], where)};
    const bool pre = stage == "pre";
    if (!pre && stage != "fault") throw Error(where + ": stage must be pre or fault");
    if (pre && seq != 1) throw Error(where + ": pre-fault rows carry positive sequence only");

    if (kind == "busV") {
      const BusLabel bus = parse_int(id, where);
      if (pre) ms.prefault_bus_v[bus] = v;
      else ms.fault_bus_v[bus][static_cast<std::size_t>(seq)] = v;
    } else if (kind == "branchI") {
      const BranchTap tap = parse_tap_text(id);
      if (pre) ms.prefault_branch_i[tap] = v;
      else ms.fault_branch_i[tap][static_cast<std::size_t>(seq)] = v;
    } else {
      throw Error(where + ": kind must be busV or branchI");
    }
  }
  // Every channel carries both stages.
  auto paired = [](const auto& pre, const auto& fault) {
    if (pre.size() != fault.size()) return false;
    for (const auto& [key, value] : fault)
      if (!pre.contains(key)) return false;
    return true;
  };
  if (!paired(ms.prefault_bus_v, ms.fault_bus_v) || !paired(ms.prefault_branch_i, ms.fault_branch_i))
    throw Error("measurements: every channel needs both pre and fault rows");
  return ms;
}

}  // namespace faultloc
