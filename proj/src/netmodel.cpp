#include "faultloc/netmodel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

namespace faultloc {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double to_double(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw CaseError(line_no, "expected a number, got '" + std::string(tok) + "'");
  return v;
}

BusLabel to_label(std::string_view tok, std::size_t line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || v < 1)
    throw CaseError(line_no, "expected a positive integer bus label, got '" + std::string(tok) + "'");
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string line_name(const LineRecord& l) { return "line " + l.id; }
std::string source_name(const SourceRecord& s) { return "source at bus " + std::to_string(s.bus); }

}  // namespace

CaseError::CaseError(std::size_t line_number, const std::string& message)
    : Error(line_number > 0 ? "line " + std::to_string(line_number) + ": " + message : message),
      line_number_(line_number) {}

std::string to_string(const BranchTap& tap) { return tap.line + "@" + std::to_string(tap.at); }

Complex SourceRecord::impedance(Sequence s) const {
  switch (s) {
    case Sequence::zero:
      return z0;
    case Sequence::negative:
      return z2;
    case Sequence::positive:
      break;
  }
  return z1;
}

Complex SourceRecord::emf() const {
  return std::polar(emf_mag, emf_deg * std::numbers::pi / 180.0);
}

bool Network::has_bus(BusLabel label) const {
  return std::any_of(buses.begin(), buses.end(), [&](const BusId& b) { return b.label == label; });
}

std::size_t Network::bus_index(BusLabel label) const {
  for (const BusId& b : buses)
    if (b.label == label) return b.index;
  throw Error("unknown bus " + std::to_string(label));
}

const LineRecord* Network::find_line(std::string_view id) const {
  for (const LineRecord& l : lines)
    if (l.id == id) return &l;
  return nullptr;
}

const LineRecord& Network::line(std::string_view id) const {
  if (const LineRecord* l = find_line(id)) return *l;
  throw Error("unknown line '" + std::string(id) + "'");
}

std::vector<Diagnostic> validate(const Network& net) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string record, std::string message) {
    out.push_back({std::move(record), std::move(message)});
  };

  if (!(net.base_mva > 0.0) || !(net.base_kv > 0.0) || !(net.frequency_hz > 0.0))
    add("base", "base values must be positive");

  std::set<BusLabel> labels;
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const BusId& b = net.buses[i];
    if (!labels.insert(b.label).second) add("bus " + std::to_string(b.label), "duplicate bus label");
    if (b.index != i) add("bus " + std::to_string(b.label), "internal indices are not contiguous");
  }

  std::set<std::string> line_ids;
  for (const LineRecord& l : net.lines) {
    if (!line_ids.insert(l.id).second) add(line_name(l), "duplicate line id");
    if (!labels.contains(l.from)) add(line_name(l), "unknown bus " + std::to_string(l.from));
    if (!labels.contains(l.to)) add(line_name(l), "unknown bus " + std::to_string(l.to));
    if (l.from == l.to) add(line_name(l), "line connects a bus to itself");
    if (!(l.length_km > 0.0)) add(line_name(l), "non-positive length");
    if (l.z1_per_km.real() < 0.0 || l.z0_per_km.real() < 0.0)
      add(line_name(l), "negative resistance");
    if (std::abs(l.z1_per_km) == 0.0 || std::abs(l.z0_per_km) == 0.0)
      add(line_name(l), "zero impedance");
  }

  if (net.sources.empty()) add("network", "ungrounded network: no sources");
  for (const SourceRecord& s : net.sources) {
    if (!labels.contains(s.bus)) add(source_name(s), "unknown bus " + std::to_string(s.bus));
    if (std::abs(s.z1) == 0.0 || std::abs(s.z2) == 0.0 || std::abs(s.z0) == 0.0)
      add(source_name(s), "source impedance must be nonzero");
  }

  // Every bus needs a line path to some source, otherwise its driving-point
  // impedance is infinite.
  if (!net.sources.empty()) {
    std::map<BusLabel, std::vector<BusLabel>> adj;
    for (const LineRecord& l : net.lines) {
      adj[l.from].push_back(l.to);
      adj[l.to].push_back(l.from);
    }
    std::set<BusLabel> seen;
    std::queue<BusLabel> todo;
    for (const SourceRecord& s : net.sources)
      if (labels.contains(s.bus) && seen.insert(s.bus).second) todo.push(s.bus);
    while (!todo.empty()) {
      const BusLabel b = todo.front();
      todo.pop();
      for (BusLabel nb : adj[b])
        if (seen.insert(nb).second) todo.push(nb);
    }
    for (const BusId& b : net.buses)
      if (!seen.contains(b.label))
        add("bus " + std::to_string(b.label), "ungrounded: no path to any source");
  }
  return out;
}

Network parse_case(std::string_view text) {
  Network net;
  std::map<std::string, std::size_t> line_origin;  // line id -> source line number
  std::vector<std::size_t> source_origin;
  bool saw_base = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view raw = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto tok = split_ws(raw);
    if (tok.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    const std::string_view kind = tok[0];
    if (kind == "base") {
      if (tok.size() != 4) throw CaseError(line_no, "base expects <mva> <kv> <hz>");
      if (saw_base) throw CaseError(line_no, "duplicate base record");
      saw_base = true;
      net.base_mva = to_double(tok[1], line_no);
      net.base_kv = to_double(tok[2], line_no);
      net.frequency_hz = to_double(tok[3], line_no);
      if (!(net.base_mva > 0.0 && net.base_kv > 0.0 && net.frequency_hz > 0.0))
        throw CaseError(line_no, "base values must be positive");
    } else if (kind == "bus") {
      if (tok.size() != 2) throw CaseError(line_no, "bus expects <label>");
      const BusLabel label = to_label(tok[1], line_no);
      if (net.has_bus(label)) throw CaseError(line_no, "duplicate bus label " + std::to_string(label));
      net.buses.push_back({label, net.buses.size()});
    } else if (kind == "line") {
      if (tok.size() != 9)
        throw CaseError(line_no,
                        "line expects <id> <from> <to> <length_km> <r1> <x1> <r0> <x0>");
      LineRecord l;
      l.id = std::string(tok[1]);
      l.from = to_label(tok[2], line_no);
      l.to = to_label(tok[3], line_no);
      l.length_km = to_double(tok[4], line_no);
      l.z1_per_km = {to_double(tok[5], line_no), to_double(tok[6], line_no)};
      l.z0_per_km = {to_double(tok[7], line_no), to_double(tok[8], line_no)};
      if (!(l.length_km > 0.0)) throw CaseError(line_no, "non-positive length for line " + l.id);
      if (l.from == l.to) throw CaseError(line_no, "line " + l.id + " connects a bus to itself");
      if (line_origin.contains(l.id)) throw CaseError(line_no, "duplicate line id " + l.id);
      line_origin[l.id] = line_no;
      net.lines.push_back(std::move(l));
    } else if (kind == "source") {
      const std::size_t n = tok.size() - 1;
      if (n != 3 && n != 5 && n != 7 && n != 9)
        throw CaseError(line_no, "source expects <bus> <r1> <x1> [r0 x0 r2 x2] [emf_mag emf_deg]");
      SourceRecord s;
      s.bus = to_label(tok[1], line_no);
      s.z1 = {to_double(tok[2], line_no), to_double(tok[3], line_no)};
      s.z0 = s.z1;
      s.z2 = s.z1;
      std::size_t next = 4;
      if (n >= 7) {
        s.z0 = {to_double(tok[4], line_no), to_double(tok[5], line_no)};
        s.z2 = {to_double(tok[6], line_no), to_double(tok[7], line_no)};
        next = 8;
      }
      if (n == 5 || n == 9) {
        s.emf_mag = to_double(tok[next], line_no);
        s.emf_deg = to_double(tok[next + 1], line_no);
      }
      if (std::abs(s.z1) == 0.0) throw CaseError(line_no, "source impedance must be nonzero");
      source_origin.push_back(line_no);
      net.sources.push_back(s);
    } else {
      throw CaseError(line_no, "unknown record '" + std::string(kind) + "'");
    }
    if (eol == text.size()) break;
  }

  for (const LineRecord& l : net.lines) {
    for (BusLabel b : {l.from, l.to})
      if (!net.has_bus(b))
        throw CaseError(line_origin[l.id],
                        "line " + l.id + " references unknown bus " + std::to_string(b));
  }
  for (std::size_t i = 0; i < net.sources.size(); ++i)
    if (!net.has_bus(net.sources[i].bus))
      throw CaseError(source_origin[i],
                      "source references unknown bus " + std::to_string(net.sources[i].bus));
  if (net.sources.empty()) throw CaseError(0, "case has no sources");

  if (const auto diags = validate(net); !diags.empty())
    throw CaseError(0, diags.front().record + ": " + diags.front().message);
  return net;
}

Network load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseError(0, "cannot open case file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string to_case_text(const Network& net) {
  std::ostringstream out;
  out << "base " << fmt(net.base_mva) << ' ' << fmt(net.base_kv) << ' ' << fmt(net.frequency_hz)
      << '\n';
  for (const BusId& b : net.buses) out << "bus " << b.label << '\n';
  for (const LineRecord& l : net.lines) {
    out << "line " << l.id << ' ' << l.from << ' ' << l.to << ' ' << fmt(l.length_km) << ' '
        << fmt(l.z1_per_km.real()) << ' ' << fmt(l.z1_per_km.imag()) << ' '
        << fmt(l.z0_per_km.real()) << ' ' << fmt(l.z0_per_km.imag()) << '\n';
  }
  for (const SourceRecord& s : net.sources) {
    out << "source " << s.bus << ' ' << fmt(s.z1.real()) << ' ' << fmt(s.z1.imag()) << ' '
        << fmt(s.z0.real()) << ' ' << fmt(s.z0.imag()) << ' ' << fmt(s.z2.real()) << ' '
        << fmt(s.z2.imag()) << ' ' << fmt(s.emf_mag) << ' ' << fmt(s.emf_deg) << '\n';
  }
  return out.str();
}

BranchTap parse_branch_tap(const Network& net, std::string_view text) {
  if (const auto at = text.find('@'); at != std::string_view::npos) {
    const LineRecord& l = net.line(text.substr(0, at));
    const BusLabel bus = to_label(text.substr(at + 1), 0);
    if (!l.touches(bus))
      throw Error("bus " + std::to_string(bus) + " is not a terminal of line " + l.id);
    return {l.id, bus};
  }
  if (const LineRecord* l = net.find_line(text)) return {l->id, l->from};
  if (const auto dash = text.find('-'); dash != std::string_view::npos) {
    const BusLabel a = to_label(text.substr(0, dash), 0);
    const BusLabel b = to_label(text.substr(dash + 1), 0);
    for (const LineRecord& l : net.lines)
      if (l.touches(a) && l.other_end(a) == b && a != b) return {l.id, a};
    throw Error("no line joins buses " + std::to_string(a) + " and " + std::to_string(b));
  }
  throw Error("cannot resolve branch '" + std::string(text) + "'");
}

}  // namespace faultloc
