// Serial vs OpenMP timing for the scenario sweep and the noise trials.
//
//   bench_sweep [case] [repeats]

#include <chrono>
#include <iostream>
#include <sstream>
#include <string>

#include <omp.h>

#include "faultloc/study.hpp"

using namespace faultloc;

namespace {

std::string as_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  write_report_csv(out, rows);
  return out.str();
}

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : FAULTLOC_DATA_DIR "/ieee14.case";
  const int repeats = argc > 2 ? std::stoi(argv[2]) : 3;
  const Network net = load_case(path);

  // Every line, every fault type, a fine m grid, and SSVM at the faulted
  // line's own terminals.
  std::vector<FaultScenario> scenarios;
  std::vector<PlacementSpec> placements;
  for (const LineRecord& l : net.lines) {
    placements.push_back({l.id, {Method::ssvm, {l.from, l.to}, {}}});
    for (FaultType t : kAllFaultTypes)
      for (int i = 1; i < 100; ++i)
        for (double rf : {0.1, 1.0, 10.0}) scenarios.push_back({l.id, i / 100.0, t, rf});
  }
  const SweepPlan plan = make_plan(net, scenarios, placements);
  std::cout << "case " << path << ": " << plan.scenarios.size() << " scenarios, "
            << omp_get_max_threads() << " OpenMP threads\n";

  int status = 0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<ReportRow> rows_s, rows_p;
    const double ts = seconds([&] { rows_s = run_sweep_serial(plan); });
    const double tp = seconds([&] { rows_p = run_sweep_parallel(plan); });
    const bool same = as_csv(rows_s) == as_csv(rows_p);
    std::cout << "sweep  serial " << ts << " s (" << rows_s.size() << " rows), parallel " << tp
              << " s, speedup " << ts / tp << (same ? "" : "  OUTPUT MISMATCH") << '\n';
    if (!same) status = 1;
  }

  const FaultScenario s = scenarios.front();
  const Placement& p = placements.front().placement;
  const NoiseOptions opts{1e-3, 20000, 7};
  for (int r = 0; r < repeats; ++r) {
    std::vector<double> err_s, err_p;
    const double ts = seconds([&] { err_s = noise_errors_serial(plan, s, p, opts); });
    const double tp = seconds([&] { err_p = noise_errors_parallel(plan, s, p, opts); });
    const bool same = err_s == err_p;
    std::cout << "noise  serial " << ts << " s, parallel " << tp << " s, speedup " << ts / tp
              << " (" << opts.trials << " trials)" << (same ? "" : "  OUTPUT MISMATCH") << '\n';
    if (!same) status = 1;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "bench_sweep: " << e.what() << '\n';
    return 1;
  }
}
