#include "faultloc/seqmatrix.hpp"

#include <cstdio>
#include <ostream>

namespace faultloc {

std::size_t SequenceZbus::index_of(BusLabel label) const {
  for (std::size_t i = 0; i < bus_order.size(); ++i)
    if (bus_order[i] == label) return i;
  throw Error("bus " + std::to_string(label) + " is not in this impedance matrix");
}

ComplexMatrix build_ybus(const Network& net, Sequence seq) {
  const std::size_t n = net.bus_count();
  ComplexMatrix y(n, n);
  for (const LineRecord& l : net.lines) {
    const Complex adm = 1.0 / l.impedance(seq);
    const std::size_t i = net.bus_index(l.from);
    const std::size_t j = net.bus_index(l.to);
    y(i, i) += adm;
    y(j, j) += adm;
    y(i, j) -= adm;
    y(j, i) -= adm;
  }
  for (const SourceRecord& s : net.sources) {
    const std::size_t i = net.bus_index(s.bus);
    y(i, i) += 1.0 / s.impedance(seq);
  }
  return y;
}

SequenceZbus build_zbus(const Network& net, Sequence seq) {
  for (const Diagnostic& d : validate(net)) {
    if (d.message.starts_with("ungrounded"))
      throw UngroundedError(d.record + ": " + d.message);
  }
  if (net.bus_count() == 0) throw UngroundedError("network has no buses");

  const ComplexMatrix y = build_ybus(net, seq);
  SequenceZbus out;
  out.sequence = seq;
  try {
    out.z = LuDecomposition(y).inverse();
  } catch (const SingularMatrixError&) {
    throw UngroundedError("admittance matrix is singular");
  }
  const double cond = norm_one(y) * norm_one(out.z);
  if (!(cond <= kMaxConditionNumber))
    throw ConditioningError("admittance matrix condition number " + std::to_string(cond) +
                            " exceeds limit");

  // The inverse of a symmetric matrix is symmetric; average away rounding.
  const std::size_t n = out.z.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Complex avg = 0.5 * (out.z(i, j) + out.z(j, i));
      out.z(i, j) = avg;
      out.z(j, i) = avg;
    }
  }
  out.bus_order.reserve(n);
  for (const BusId& b : net.buses) out.bus_order.push_back(b.label);
  return out;
}

TransferCoefficients transfer_coefficients(const SequenceZbus& zbus, const LineRecord& faulted,
                                           BusLabel k) {
  const Complex zpk = zbus.at(faulted.from, k);
  const Complex zqk = zbus.at(faulted.to, k);
  return {zpk, zqk - zpk, k, faulted.id, zbus.sequence};
}

BranchCoefficients branch_coefficients(const SequenceZbus& zbus, const LineRecord& faulted,
                                       const LineRecord& branch, BusLabel at) {
  if (branch.id == faulted.id)
    throw Error("branch " + branch.id + " is the faulted line; use segment coefficients");
  if (!branch.touches(at))
    throw Error("bus " + std::to_string(at) + " is not a terminal of line " + branch.id);
  const Complex z = branch.impedance(zbus.sequence);
  if (std::abs(z) == 0.0) throw Error("branch " + branch.id + " has zero impedance");

  const auto k = transfer_coefficients(zbus, faulted, at);
  const auto l = transfer_coefficients(zbus, faulted, branch.other_end(at));
  return {(k.b - l.b) / z, (k.c - l.c) / z, {branch.id, at}, faulted.id, zbus.sequence};
}

BranchCoefficients segment_coefficients(const SequenceZbus& zbus, const LineRecord& faulted,
                                        BusLabel at) {
  if (!faulted.touches(at))
    throw Error("bus " + std::to_string(at) + " is not a terminal of line " + faulted.id);
  const Complex z = faulted.impedance(zbus.sequence);
  const Complex zpp = zbus.at(faulted.from, faulted.from);
  const Complex zpq = zbus.at(faulted.from, faulted.to);
  const Complex a2 = fault_point_coefficients(zbus, faulted).a2;

  BranchCoefficients out{{}, {}, {faulted.id, at}, faulted.id, zbus.sequence};
  if (at == faulted.from) {
    out.b = (zpp - zpq - z) / z;
    out.c = -a2 / z;
  } else {
    out.b = (zpq - zpp) / z;
    out.c = a2 / z;
  }
  return out;
}

BranchCoefficients tap_coefficients(const SequenceZbus& zbus, const Network& net,
                                    const LineRecord& faulted, const BranchTap& tap) {
  if (tap.line == faulted.id) return segment_coefficients(zbus, faulted, tap.at);
  return branch_coefficients(zbus, faulted, net.line(tap.line), tap.at);
}

FaultPointCoefficients fault_point_coefficients(const SequenceZbus& zbus,
                                                const LineRecord& faulted) {
  const Complex zpp = zbus.at(faulted.from, faulted.from);
  const Complex zqq = zbus.at(faulted.to, faulted.to);
  const Complex zpq = zbus.at(faulted.from, faulted.to);
  const Complex z = faulted.impedance(zbus.sequence);
  return {zpp, 2.0 * (zpq - zpp) + z, zpp + zqq - 2.0 * zpq - z};
}

void write_zbus_csv(std::ostream& out, const SequenceZbus& zbus) {
  out << "bus";
  for (BusLabel b : zbus.bus_order) out << ',' << b;
  out << '\n';
  char buf[96];
  for (std::size_t r = 0; r < zbus.z.rows(); ++r) {
    out << zbus.bus_order[r];
    for (const Complex& v : zbus.z.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g%+.17gj", v.real(), v.imag());
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace faultloc
