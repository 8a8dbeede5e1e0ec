#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "dte/cli.hpp"
#include "dte/ecdf.hpp"
#include "dte/io.hpp"

using namespace dte;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dtebounds");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("dtebounds_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_text(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string dataset(const std::string& name, int n, unsigned seed, bool empty_control = false) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  std::ostringstream s;
  s.precision(10);
  s << "y,d,x1,x2\n";
  for (int i = 0; i < n; ++i) {
    const int d = empty_control ? 1 : i % 2;
    const double x1 = z(g), x2 = z(g);
    s << x1 + 0.5 * x2 + d * (0.3 + 0.5 * x1) + 0.5 * z(g) << ',' << d << ',' << x1 << ',' << x2 << '\n';
  }
  return write_text(name, s.str());
}

Json analyze_json(std::vector<std::string> extra) {
  extra.insert(extra.begin(), {"analyze", "--format", "json"});
  const Run r = cli(extra);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return Json::parse(r.out);
}

}  // namespace

TEST_CASE("cli: constant cross-fit equals the no-covariate bounds") {
  const std::string in = dataset("a.csv", 400, 1);
  const Json j = analyze_json({"--input", in, "--method", "cross-fit", "--model", "constant"});
  const Sample s = load_csv(in, {});
  const BoundsEstimate m = makarov_bounds(s);
  CHECK(j["estimate"]["theta_L"].get<double>() == doctest::Approx(m.theta_L).epsilon(1e-12));
  CHECK(j["estimate"]["theta_U"].get<double>() == doctest::Approx(m.theta_U).epsilon(1e-12));
  CHECK(j["method"] == "cross-fit");
  CHECK(j["data"]["n_treated"] == 200);
  CHECK(j["folds"].size() == 5);
}

TEST_CASE("cli: sample split reports the DKW constant for its main sample") {
  const std::string in = dataset("b.csv", 800, 2);
  const Json j = analyze_json({"--input", in, "--method", "sample-split", "--alpha", "0.1"});
  const double n1 = j["estimate"]["main_treated"].get<double>();
  const double n0 = j["estimate"]["main_control"].get<double>();
  CHECK(n1 == 200);
  CHECK(n0 == 200);
  const double c = std::sqrt(std::log(2.0 / 0.1) / 2.0) * (1 / std::sqrt(n1) + 1 / std::sqrt(n0));
  CHECK(j["estimate"]["c_alpha"].get<double>() == doctest::Approx(c).epsilon(1e-12));
  CHECK(c == doctest::Approx(0.17308).epsilon(1e-4));
}

TEST_CASE("cli: every method runs on covariate data") {
  const std::string in = dataset("c.csv", 300, 3);
  for (const char* m : {"sample-split", "cross-fit", "sjls", "cross-fit-ipw", "cross-fit-foldt"}) {
    const Json j = analyze_json({"--input", in, "--method", m, "--model", "knn_loc_shift:k=15", "--grid-size", "500"});
    const double lo = j["estimate"]["theta_L"].get<double>(), hi = j["estimate"]["theta_U"].get<double>();
    CHECK_MESSAGE(lo <= hi + 1e-9, m);
  }
  const std::string g = write_text("g.csv", "y,d,g\n1,1,1\n0,0,1\n2,1,1\n0.5,0,1\n3,1,2\n1,0,2\n2,1,2\n2.5,0,2\n");
  const Json j = analyze_json({"--input", g, "--method", "cross-fit-group", "--column-group", "g", "--k-folds", "2"});
  CHECK(j["estimate"]["theta_L"].get<double>() >= 0.0);
}

TEST_CASE("cli: configuration errors exit with 2 and name the problem") {
  const std::string in = dataset("d.csv", 100, 4);
  Run r = cli({"analyze", "--input", in, "--method", "bootstrap"});
  CHECK(r.code == 2);
  CHECK(r.err.find("cross-fit") != std::string::npos);
  r = cli({"analyze", "--input", in, "--alpha", "1.5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("alpha") != std::string::npos);
  r = cli({"analyze", "--input", in, "--no-such-flag", "1"});
  CHECK(r.code == 2);
  r = cli({"analyze", "--input", dataset("e.csv", 50, 5, true)});
  CHECK(r.code == 2);
  CHECK(r.err.find("control") != std::string::npos);
}

TEST_CASE("cli: missing input exits with 4") {
  const Run r = cli({"analyze", "--input", (scratch() / "missing.csv").string()});
  CHECK(r.code == 4);
}

TEST_CASE("cli: bounds curve maximum is the lower bound estimate") {
  const std::string in = dataset("f.csv", 300, 6);
  const std::string prefix = (scratch() / "curve").string();
  const Run r = cli({"bounds-curve", "--input", in, "--output", prefix});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto cols = read_columns(prefix + "_lower.csv", {"t", "delta"});
  double best = 0.0;
  for (double v : cols[1]) best = std::max(best, v);
  const Json j = analyze_json({"--input", in});
  CHECK(best == doctest::Approx(j["estimate"]["theta_L"].get<double>()).epsilon(1e-12));
  const auto up = read_columns(prefix + "_upper.csv", {"t", "delta"});
  double worst = 0.0;
  for (double v : up[1]) worst = std::min(worst, v);
  CHECK(1.0 + worst == doctest::Approx(j["estimate"]["theta_U"].get<double>()).epsilon(1e-12));
}

TEST_CASE("cli: identical inputs give identical reports") {
  const std::string in = dataset("h.csv", 300, 7);
  const std::vector<std::string> args = {"analyze", "--input", in, "--format", "json", "--model", "knn_loc_shift:k=10",
                                         "--seed", "42", "--grid-size", "400"};
  const Run a = cli(args), b = cli(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  std::vector<std::string> other = args;
  other[8] = "43";
  CHECK(cli(other).out != a.out);
}

TEST_CASE("cli: flags override the configuration file and reports re-run") {
  const std::string in = dataset("i.csv", 300, 8);
  const std::string conf = write_text("run.conf", "# settings\ninput = " + in + "\nalpha = 0.1\nmethod = sample-split\n");
  Json j = analyze_json({"--config", conf});
  CHECK(j["config"]["alpha"] == "0.1");
  CHECK(j["method"] == "sample-split");
  j = analyze_json({"--config", conf, "--alpha", "0.2"});
  CHECK(j["config"]["alpha"] == "0.2");

  const std::string report = write_text("report.json", j.dump());
  const Json again = analyze_json({"--config", report});
  CHECK(again["estimate"] == j["estimate"]);
}

TEST_CASE("cli: output prefix writes json and text reports") {
  const std::string in = dataset("k.csv", 200, 9);
  const std::string prefix = (scratch() / "rep").string();
  const Run r = cli({"analyze", "--input", in, "--output", prefix});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(prefix + ".json"));
  CHECK(fs::exists(prefix + ".txt"));
  std::ifstream t(prefix + ".txt");
  const std::string text((std::istreambuf_iterator<char>(t)), std::istreambuf_iterator<char>());
  CHECK(text.find("lower bound") != std::string::npos);
}

TEST_CASE("cli: simulate writes a table for a small cell list") {
  const std::string cells = write_text("cells.txt", "n,p,model,estimator\n200,20,constant,cross-fit\n200,10,oracle,cross-fit\n");
  const std::string prefix = (scratch() / "sim").string();
  const Run r = cli({"simulate", "--cells", cells, "--reps", "10", "--theta0-reps", "100000",
                     "--oracle-inner-reps", "200", "--grid-size", "500", "--output", prefix});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream lines(r.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 3);
  std::ifstream side(prefix + ".json");
  const Json j = Json::parse(side);
  CHECK(j["cells"].size() == 2);
  CHECK(j["theta0"].get<double>() > 0.0);
}

TEST_CASE("cli: installed binary runs and reports exit codes") {
  const char* bin = std::getenv("DTEBOUNDS_BIN");
  if (!bin) return;
  const std::string in = dataset("l.csv", 200, 10);
  const std::string cmd = std::string(bin) + " analyze --input " + in + " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  const std::string bad = std::string(bin) + " analyze --input " + in + " --method nope > /dev/null 2>&1";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
