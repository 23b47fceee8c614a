#include "faultloc/locator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace faultloc {

namespace {

void check_aligned(const Channel& a, const Channel& b) {
  if (a.alignment != b.alignment)
    throw LocateError(LocateError::Reason::misaligned, "channels are not synchronized");
}

void check_denominator(const Channel& den, std::string_view what) {
  if (std::abs(den.delta()) < kDegeneracyThreshold)
    throw LocateError(LocateError::Reason::degenerate_denominator,
                      "no observable fault signature on " + std::string(what));
}

double pair_norm(Complex b, Complex c) { return std::sqrt(std::norm(b) + std::norm(c)); }

bool proportional(Complex b1, Complex c1, Complex b2, Complex c2) {
  const double scale = pair_norm(b1, c1) * pair_norm(b2, c2);
  return scale == 0.0 || std::abs(b1 * c2 - b2 * c1) <= kRankThreshold * scale;
}

// Solves D = (b_num + c_num m) / (b_den + c_den m) for m.
Complex solve_ratio(Complex d, Complex b_num, Complex c_num, Complex b_den, Complex c_den) {
  const Complex den = d * c_den - c_num;
  const double scale = std::abs(d * c_den) + std::abs(c_num);
  if (std::abs(den) == 0.0 || std::abs(den) <= 1e-14 * scale)
    throw LocateError(LocateError::Reason::vanishing_solve,
                      "location equation is independent of m");
  return (b_num - d * b_den) / den;
}

LocationEstimate from_complex(Complex m, Method method) {
  LocationEstimate est;
  est.method = method;
  est.m_complex = m;
  est.m = m.real();
  est.residual = std::abs(m.imag());
  est.in_range = est.m >= 0.0 && est.m <= 1.0;
  if (!est.in_range) est.notes = "estimate outside the faulted-line hypothesis";
  return est;
}

LocationEstimate ratio_estimate(Method method, Complex d, Complex b_num, Complex c_num,
                                Complex b_den, Complex c_den, LocateError::Reason dependent) {
  if (proportional(b_num, c_num, b_den, c_den))
    throw LocateError(dependent, "channel coefficients are linearly dependent");
  return from_complex(solve_ratio(d, b_num, c_num, b_den, c_den), method);
}

Channel voltage_channel(const PhasorMeasurementSet& ms, BusLabel bus) {
  const auto pre = ms.prefault_bus_v.find(bus);
  const auto fault = ms.fault_bus_v.find(bus);
  if (pre == ms.prefault_bus_v.end() || fault == ms.fault_bus_v.end())
    throw Error("measurement set lacks voltage channel V:" + std::to_string(bus));
  return {pre->second, fault->second[index_of(Sequence::positive)], ms.alignment};
}

Channel current_channel(const PhasorMeasurementSet& ms, const BranchTap& tap) {
  const auto pre = ms.prefault_branch_i.find(tap);
  const auto fault = ms.fault_branch_i.find(tap);
  if (pre == ms.prefault_branch_i.end() || fault == ms.fault_branch_i.end())
    throw Error("measurement set lacks current channel I:" + to_string(tap));
  return {pre->second, fault->second[index_of(Sequence::positive)], ms.alignment};
}

// Edmonds-Karp on a small unit-capacity graph.
class FlowGraph {
 public:
  explicit FlowGraph(std::size_t n) : adj_(n) {}

  void add_edge(std::size_t from, std::size_t to, int cap) {
    adj_[from].push_back(edges_.size());
    edges_.push_back({to, cap});
    adj_[to].push_back(edges_.size());
    edges_.push_back({from, 0});
  }

  int max_flow(std::size_t source, std::size_t sink, int limit) {
    int flow = 0;
    while (flow < limit) {
      std::vector<std::size_t> via(adj_.size(), kNone);
      std::queue<std::size_t> todo;
      todo.push(source);
      via[source] = kNone - 1;
      while (!todo.empty() && via[sink] == kNone) {
        const std::size_t u = todo.front();
        todo.pop();
        for (std::size_t e : adj_[u]) {
          if (edges_[e].cap > 0 && via[edges_[e].to] == kNone) {
            via[edges_[e].to] = e;
            todo.push(edges_[e].to);
          }
        }
      }
      if (via[sink] == kNone) break;
      for (std::size_t v = sink; v != source;) {
        const std::size_t e = via[v];
        edges_[e].cap -= 1;
        edges_[e ^ 1].cap += 1;
        v = edges_[e ^ 1].to;
      }
      ++flow;
    }
    return flow;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  struct Edge {
    std::size_t to;
    int cap;
  };
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
};

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ssvm:
      return "ssvm";
    case Method::sscm:
      return "sscm";
    case Method::hybrid_direct:
      return "hybrid";
    case Method::hybrid_quad:
      return "hybrid-quad";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : kAllMethods)
    if (to_string(m) == text) return m;
  throw Error("unknown method '" + std::string(text) + "'");
}

LocationEstimate locate_ssvm(const VoltagePair& pair, const TransferCoefficients& k,
                             const TransferCoefficients& l) {
  check_aligned(pair.ek, pair.el);
  check_denominator(pair.el, "V:" + std::to_string(pair.l));
  const Complex d = pair.ek.delta() / pair.el.delta();
  return ratio_estimate(Method::ssvm, d, k.b, k.c, l.b, l.c,
                        LocateError::Reason::vanishing_solve);
}

LocationEstimate locate_sscm(const CurrentPair& pair, const BranchCoefficients& first,
                             const BranchCoefficients& second) {
  check_aligned(pair.i_first, pair.i_second);
  check_denominator(pair.i_second, "I:" + to_string(pair.second));
  const Complex d = pair.i_first.delta() / pair.i_second.delta();
  return ratio_estimate(Method::sscm, d, first.b, first.c, second.b, second.c,
                        LocateError::Reason::linear_dependence);
}

LocationEstimate locate_hybrid_direct(const HybridPair& pair, const BranchCoefficients& branch,
                                      const TransferCoefficients& bus) {
  check_aligned(pair.current, pair.voltage);
  check_denominator(pair.voltage, "V:" + std::to_string(pair.bus));
  const Complex d = pair.current.delta() / pair.voltage.delta();
  return ratio_estimate(Method::hybrid_direct, d, branch.b, branch.c, bus.b, bus.c,
                        LocateError::Reason::vanishing_solve);
}

QuadraticCoefficients location_quadratic(Complex b_num, Complex c_num, Complex b_den, Complex c_den,
                                         double d_abs) {
  const double d2 = d_abs * d_abs;
  QuadraticCoefficients q;
  q.c2 = std::norm(c_num) - d2 * std::norm(c_den);
  q.c1 = 2.0 * ((b_num.real() * c_num.real() + b_num.imag() * c_num.imag()) -
                d2 * (b_den.real() * c_den.real() + b_den.imag() * c_den.imag()));
  q.c0 = std::norm(b_num) - d2 * std::norm(b_den);
  return q;
}

QuadraticSolution select_quadratic_root(const QuadraticCoefficients& q,
                                        std::optional<double> tiebreak) {
  const double scale = std::max({std::abs(q.c2), std::abs(q.c1), std::abs(q.c0)});
  if (scale == 0.0)
    throw LocateError(LocateError::Reason::no_root, "quadratic is identically zero");

  QuadraticSolution sol;
  if (std::abs(q.c2) <= 1e-12 * scale) {
    if (q.c1 == 0.0) throw LocateError(LocateError::Reason::no_root, "quadratic has no root");
    sol.roots = {-q.c0 / q.c1};
  } else {
    double disc = q.c1 * q.c1 - 4.0 * q.c2 * q.c0;
    if (disc < 0.0) {
      if (disc < -1e-12 * (q.c1 * q.c1 + 4.0 * std::abs(q.c2 * q.c0)))
        throw LocateError(LocateError::Reason::no_root, "quadratic has no real root");
      disc = 0.0;
    }
    const double s = std::sqrt(disc);
    const double t = -0.5 * (q.c1 + std::copysign(s, q.c1));
    if (t == 0.0) {
      sol.roots = {0.0, 0.0};
    } else {
      sol.roots = {t / q.c2, q.c0 / t};
    }
    std::sort(sol.roots.begin(), sol.roots.end());
  }

  std::vector<double> inside;
  for (double r : sol.roots)
    if (r >= -kRootSlack && r <= 1.0 + kRootSlack) inside.push_back(r);
  if (inside.empty())
    throw LocateError(LocateError::Reason::no_root, "no quadratic root lies in [0, 1]");

  sol.m = inside.front();
  if (inside.size() == 2 && std::abs(inside[1] - inside[0]) > 1e-12 * (1.0 + std::abs(inside[0]))) {
    sol.ambiguous = true;
    if (tiebreak && std::abs(inside[1] - *tiebreak) < std::abs(inside[0] - *tiebreak))
      sol.m = inside[1];
  }
  return sol;
}

LocationEstimate locate_hybrid_quadratic(const HybridPair& pair, const BranchCoefficients& branch,
                                         const TransferCoefficients& bus) {
  const LocationEstimate direct = locate_hybrid_direct(pair, branch, bus);
  const Complex d = pair.current.delta() / pair.voltage.delta();
  const auto q = location_quadratic(branch.b, branch.c, bus.b, bus.c, std::abs(d));
  const QuadraticSolution sol = select_quadratic_root(q, direct.m);

  LocationEstimate est;
  est.method = Method::hybrid_quad;
  est.m = sol.m;
  est.m_complex = direct.m_complex;
  est.ambiguous = sol.ambiguous;
  est.in_range = est.m >= 0.0 && est.m <= 1.0;
  const Complex model = branch.at(est.m) / bus.at(est.m);
  est.residual = std::abs(model - d) / std::abs(d);
  if (sol.ambiguous) est.notes = "two roots in [0, 1]; nearest to direct solution used";
  return est;
}

std::vector<ChannelId> Placement::channels() const {
  std::vector<ChannelId> out;
  for (BusLabel b : buses) out.push_back({ChannelId::Kind::bus_voltage, b, {}});
  for (const BranchTap& t : branches) out.push_back({ChannelId::Kind::branch_current, 0, t});
  return out;
}

void Placement::check_shape() const {
  const auto want = [&](std::size_t nb, std::size_t ni) {
    if (buses.size() != nb || branches.size() != ni) {
      std::ostringstream msg;
      msg << to_string(method) << " needs " << nb << " bus voltage(s) and " << ni
          << " branch current(s)";
      throw Error(msg.str());
    }
  };
  switch (method) {
    case Method::ssvm:
      want(2, 0);
      break;
    case Method::sscm:
      want(0, 2);
      break;
    case Method::hybrid_direct:
    case Method::hybrid_quad:
      want(1, 1);
      break;
  }
}

std::string describe(const Placement& p) {
  std::string out;
  for (const ChannelId& ch : p.channels()) {
    if (!out.empty()) out += ' ';
    out += to_string(ch);
  }
  return out;
}

std::string_view to_string(Feasibility::Reason r) {
  switch (r) {
    case Feasibility::Reason::ok:
      return "ok";
    case Feasibility::Reason::bad_placement:
      return "bad placement";
    case Feasibility::Reason::no_simple_path:
      return "no simple path through fault";
    case Feasibility::Reason::linear_dependence:
      return "linear dependence";
  }
  return "?";
}

bool simple_path_through(const Network& net, const std::vector<BusLabel>& from,
                         const std::vector<BusLabel>& to, std::string_view via) {
  const LineRecord& faulted = net.line(via);
  const std::size_t n = net.bus_count();
  // Node v is split into in = 2v and out = 2v + 1 so every bus is used once.
  const std::size_t src = 2 * n, side_a = 2 * n + 1, side_b = 2 * n + 2, sink = 2 * n + 3;
  FlowGraph g(2 * n + 4);
  for (std::size_t v = 0; v < n; ++v) g.add_edge(2 * v, 2 * v + 1, 1);
  for (const LineRecord& l : net.lines) {
    if (l.id == faulted.id) continue;
    const std::size_t u = net.bus_index(l.from), v = net.bus_index(l.to);
    g.add_edge(2 * u + 1, 2 * v, 1);
    g.add_edge(2 * v + 1, 2 * u, 1);
  }
  g.add_edge(src, side_a, 1);
  g.add_edge(src, side_b, 1);
  for (BusLabel b : from) g.add_edge(side_a, 2 * net.bus_index(b), 1);
  for (BusLabel b : to) g.add_edge(side_b, 2 * net.bus_index(b), 1);
  g.add_edge(2 * net.bus_index(faulted.from) + 1, sink, 1);
  g.add_edge(2 * net.bus_index(faulted.to) + 1, sink, 1);
  return g.max_flow(src, sink, 2) == 2;
}

Feasibility feasibility_check(const Network& net, const SequenceZbus& zbus1,
                              std::string_view faulted_line, const Placement& placement) {
  Feasibility out;
  auto fail = [&](Feasibility::Reason reason, std::string detail) {
    out.feasible = false;
    out.reason = reason;
    out.detail = std::move(detail);
    return out;
  };

  const LineRecord* faulted = net.find_line(faulted_line);
  if (faulted == nullptr)
    return fail(Feasibility::Reason::bad_placement, "unknown line " + std::string(faulted_line));
  try {
    placement.check_shape();
  } catch (const Error& e) {
    return fail(Feasibility::Reason::bad_placement, e.what());
  }

  // Locations and (b, c) coefficient vectors of the two channels, in the
  // order numerator then denominator.
  std::vector<std::vector<BusLabel>> where;
  std::vector<std::pair<Complex, Complex>> coeffs;
  for (const BranchTap& tap : placement.branches) {
    const LineRecord* l = net.find_line(tap.line);
    if (l == nullptr || !l->touches(tap.at))
      return fail(Feasibility::Reason::bad_placement, "unknown branch " + to_string(tap));
    if (l->id == faulted->id) where.push_back({tap.at});
    else where.push_back({l->from, l->to});
    const auto bc = tap_coefficients(zbus1, net, *faulted, tap);
    coeffs.emplace_back(bc.b, bc.c);
  }
  for (BusLabel bus : placement.buses) {
    if (!net.has_bus(bus))
      return fail(Feasibility::Reason::bad_placement, "unknown bus " + std::to_string(bus));
    where.push_back({bus});
    const auto tc = transfer_coefficients(zbus1, *faulted, bus);
    coeffs.emplace_back(tc.b, tc.c);
  }

  // Current-only placements are decided by the rank test alone.
  if (!placement.buses.empty() && !simple_path_through(net, where[0], where[1], faulted->id))
    return fail(Feasibility::Reason::no_simple_path,
                "no simple path between " + describe(placement) + " through line " + faulted->id);
  if (proportional(coeffs[0].first, coeffs[0].second, coeffs[1].first, coeffs[1].second))
    return fail(Feasibility::Reason::linear_dependence,
                "fault-induced changes on " + describe(placement) + " are linearly dependent");
  return out;
}

Feasibility feasibility_check(const Network& net, std::string_view faulted_line,
                              const Placement& placement) {
  return feasibility_check(net, build_zbus(net, Sequence::positive), faulted_line, placement);
}

LocationEstimate locate(const Network& net, const SequenceZbus& zbus1, std::string_view faulted_line,
                        const Placement& placement, const PhasorMeasurementSet& ms) {
  placement.check_shape();
  const LineRecord& faulted = net.line(faulted_line);
  switch (placement.method) {
    case Method::ssvm: {
      const BusLabel k = placement.buses[0], l = placement.buses[1];
      const VoltagePair pair{k, l, voltage_channel(ms, k), voltage_channel(ms, l)};
      return locate_ssvm(pair, transfer_coefficients(zbus1, faulted, k),
                         transfer_coefficients(zbus1, faulted, l));
    }
    case Method::sscm: {
      const BranchTap& a = placement.branches[0];
      const BranchTap& b = placement.branches[1];
      const CurrentPair pair{a, b, current_channel(ms, a), current_channel(ms, b)};
      return locate_sscm(pair, tap_coefficients(zbus1, net, faulted, a),
                         tap_coefficients(zbus1, net, faulted, b));
    }
    case Method::hybrid_direct:
    case Method::hybrid_quad: {
      const BranchTap& tap = placement.branches[0];
      const BusLabel bus = placement.buses[0];
      const HybridPair pair{tap, bus, current_channel(ms, tap), voltage_channel(ms, bus)};
      const auto bc = tap_coefficients(zbus1, net, faulted, tap);
      const auto tc = transfer_coefficients(zbus1, faulted, bus);
      return placement.method == Method::hybrid_direct ? locate_hybrid_direct(pair, bc, tc)
                                                       : locate_hybrid_quadratic(pair, bc, tc);
    }
  }
  throw Error("unreachable");
}

double percent_error(double actual_km, double estimated_km, double line_length_km) {
  if (!(line_length_km > 0.0)) throw Error("line length must be positive");
  return 100.0 * std::abs(actual_km - estimated_km) / line_length_km;
}

std::vector<LineHypothesis> identify_faulted_line(const Network& net, const SequenceZbus& zbus1,
                                                  const Placement& placement,
                                                  const PhasorMeasurementSet& ms) {
  std::vector<LineHypothesis> out;
  for (const LineRecord& l : net.lines) {
    try {
      LocationEstimate est = locate(net, zbus1, l.id, placement, ms);
      if (est.in_range) out.push_back({l.id, std::move(est)});
    } catch (const LocateError&) {
      // hypothesis not observable with this placement
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const LineHypothesis& a, const LineHypothesis& b) {
    return a.estimate.residual < b.estimate.residual;
  });
  return out;
}

}  // namespace faultloc
