#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const std::string dir = FAULTLOC_TMP_DIR;
  const std::string out = dir + "/cli_stdout.txt", err = dir + "/cli_stderr.txt";
  const std::string cmd = std::string(FAULTLOC_CLI) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const std::string kData = FAULTLOC_DATA_DIR;
const std::string kFour = "--case " + kData + "/fourbus.case ";

std::size_t count_lines(const std::string& s, const std::string& prefix) {
  std::size_t n = 0;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(prefix, 0) == 0) ++n;
  return n;
}

}  // namespace

TEST_CASE("hybrid row for the four-bus LG fault") {
  const Run r = run(kFour + "--line T2 --type LG --m 0.56 --rf-ohm 1 --method hybrid --buses 2 --branches 1-3");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("line,type,m_true,rf_ohm,method,m_est,residual,pct_error,feasible\n", 0) == 0);
  CHECK(r.out.find("T2,LG,0.56,1,hybrid,0.56") != std::string::npos);
  CHECK(r.err.find("wall time") != std::string::npos);
}

TEST_CASE("method dispatch") {
  const Run r = run(kFour + "--line T2 --type LG --m 0.56 --rf-ohm 1 --method ssvm --buses 1,2");
  CHECK(r.code == 0);
  CHECK(count_lines(r.out, "T2,LG,0.56,1,ssvm,") == 1);
  CHECK(count_lines(r.out, "T2,") == 1);

  const Run all = run(kFour + "--line T2 --type LLG --m 0.3 --buses 1,2 --branches T1@1,T3@2");
  CHECK(all.code == 0);
  CHECK(count_lines(all.out, "T2,") == 4);
}

TEST_CASE("invalid inputs exit with 1") {
  CHECK(run("--case /nonexistent/x.case --line T2 --m 0.5 --buses 1,2").code == 1);
  CHECK(run("--case /nonexistent/x.case --line T2 --m 0.5 --buses 1,2").err.find("cannot open") !=
        std::string::npos);
  CHECK(run(kFour + "--line T9 --m 0.5 --buses 1,2").code == 1);
  CHECK(run(kFour + "--line T2 --m 1.5 --buses 1,2").code == 1);
  CHECK(run(kFour + "--line T2 --m 0.5 --type LLLG --buses 1,2").code == 1);
  CHECK(run(kFour + "--line T2 --m 0.5 --method ssvm --buses 1").code == 1);
  CHECK(run(kFour + "--line T2 --m 0.5 --bogus").code == 1);
}

TEST_CASE("infeasible placement exits with 2 and still reports") {
  const Run r = run(kFour + "--line T2 --m 0.5 --method ssvm --buses 3,1");
  CHECK(r.code == 2);
  CHECK(r.err.find("no simple path") != std::string::npos);
  CHECK(r.out.find(",false") != std::string::npos);
}

TEST_CASE("sweep file produces the 48-row report") {
  const Run r = run("--sweep " + kData + "/sweeps/fourbus.json");
  CHECK(r.code == 0);
  CHECK(count_lines(r.out, "T2,") == 48);
  CHECK(count_lines(r.out, "# aggregate") == 3);
  CHECK(r.out.find(",false") == std::string::npos);

  const Run again = run("--sweep " + kData + "/sweeps/fourbus.json");
  CHECK(again.out == r.out);
}

TEST_CASE("sweep writes JSON to --out") {
  const std::string path = std::string(FAULTLOC_TMP_DIR) + "/cli_report.json";
  const Run r = run("--sweep " + kData + "/sweeps/fourbus_ct_saturation.json --out " + path);
  CHECK(r.code == 0);
  const std::string text = slurp(path);
  CHECK(text.find("\"schema\": 1") != std::string::npos);
  CHECK(text.find("\"aggregates\"") != std::string::npos);
}

TEST_CASE("measurement export and re-import give the same estimate") {
  const std::string path = std::string(FAULTLOC_TMP_DIR) + "/cli_measurements.csv";
  const std::string common = kFour + "--line T2 --type LL --m 0.42 --rf-ohm 10 --buses 1,2 --branches T1@1,T3@2";
  const Run a = run(common + " --dump-measurements " + path);
  CHECK(a.code == 0);
  const Run b = run(common + " --measurements " + path);
  CHECK(b.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("Zbus export") {
  const std::string path = std::string(FAULTLOC_TMP_DIR) + "/cli_zbus.csv";
  const Run r = run(kFour + "--dump-zbus " + path + " --sequence 0");
  CHECK(r.code == 0);
  CHECK(slurp(path).rfind("bus,1,2,3,4\n", 0) == 0);
}
