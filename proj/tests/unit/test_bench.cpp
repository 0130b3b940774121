#include "mswave/bench.hpp"
#include "mswave/errors.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mswave;

namespace {

const std::filesystem::path kScratch = [] {
  const auto dir = std::filesystem::temp_directory_path() / "mswave-test-bench";
  std::filesystem::create_directories(dir);
  setenv("MSWAVE_CACHE_DIR", (dir / "cache").c_str(), 1);
  return dir;
}();

ExperimentConfig experiment(const std::string& text) { return parse_experiment(Config::parse_string(text)); }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MSWAVE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = kScratch / name;
  std::ofstream(path) << text;
  return path.string();
}

const char* kLod =
    "coeff.kind = periodic_1d\ncoeff.eps = 1/16\nmesh.N_fine = 256\nmethod = lod\n"
    "sweep.H = 1/4, 1/8, 1/16\ntime.T = 0.5\ntime.snapshots = 32\ndata.f = sin\n"
    "output.record_timing = false\nreference.cache = false\n";

}  // namespace

TEST_CASE("config: parsing of numbers, fractions, booleans and lists") {
  const Config c = Config::parse_string("a = 1/4\nb = 2.5e-1  # comment\nc = yes\nd = 1/8, 0.0625 1/32\n\n");
  CHECK(c.get_double("a", 0) == 0.25);
  CHECK(c.get_double("b", 0) == 0.25);
  CHECK(c.get_bool("c", false));
  CHECK(c.get_list("d") == std::vector<double>{0.125, 0.0625, 1.0 / 32});
  CHECK(c.get_double("missing", 7.0) == 7.0);
  CHECK_THROWS_AS(c.get_int("a", 0), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("x = 1/0").get_double("x", 0), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("x = 1.5abc").get_double("x", 0), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("x = maybe").get_bool("x", false), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("x = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("just words\n"), ConfigError);
  CHECK_THROWS_AS(Config::load((kScratch / "does-not-exist.cfg").string()), ConfigError);
}

TEST_CASE("config: experiment validation rejects bad input before solving") {
  CHECK_NOTHROW(experiment(kLod));
  CHECK_THROWS_AS(experiment("mesh.N_corase = 8\n"), ConfigError);
  CHECK_THROWS_AS(experiment("coeff.kind = wavy\n"), ConfigError);
  CHECK_THROWS_AS(experiment("method = magic\n"), ConfigError);
  CHECK_THROWS_AS(experiment("sweep.H = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(experiment("sweep.H = 1/3\nmesh.N_fine = 256\n"), ConfigError);
  CHECK_THROWS_AS(experiment("coeff.eps = 0\n"), ConfigError);
  CHECK_THROWS_AS(experiment("time.safety = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(experiment("coeff.kind = laminate_2d\n"), ConfigError);
  CHECK_THROWS_AS(experiment("method = boussinesq\n"), ConfigError);
  CHECK_THROWS_AS(experiment("data.g1 = wiggle\n"), ConfigError);
  CHECK_THROWS_AS(experiment("coeff.kind = piecewise_constant_sample\ncoeff.eps = 1/8\nmethod = fehmm\n"), ConfigError);
  CHECK_THROWS_AS(experiment("coeff.kind = constant\ncoeff.params = 1, 2\n"), ConfigError);
}

TEST_CASE("config: fine_per_eps rounds up to a common refinement") {
  const ExperimentConfig e = experiment("mesh.fine_per_eps = 10\nsweep.H = 1/4, 1/6\ncoeff.eps = 1/7\n");
  const int n = fine_cells(e, 1.0 / 7);
  CHECK(n == 72);
  CHECK(n % 4 == 0);
  CHECK(n % 6 == 0);
}

TEST_CASE("estimate_rate: examples") {
  const RateEstimate q = estimate_rate({0.1, 0.05, 0.025}, {4 * 0.01, 4 * 0.0025, 4 * 0.000625});
  REQUIRE(q.pairwise.size() == 2);
  CHECK(q.pairwise[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(q.pairwise[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(q.least_squares == doctest::Approx(2.0).epsilon(1e-12));

  const RateEstimate l = estimate_rate({0.1, 0.05}, {1e-2, 5e-3});
  CHECK(l.pairwise[0] == doctest::Approx(1.0).epsilon(1e-12));

  const RateEstimate z = estimate_rate({0.1, 0.05, 0.025}, {1e-2, 0.0, 1e-4});
  CHECK(z.flagged[0]);
  CHECK(z.flagged[1]);
  CHECK(std::isnan(z.pairwise[0]));
  CHECK(z.least_squares == doctest::Approx(std::log(100.0) / std::log(4.0)).epsilon(1e-12));
  CHECK_THROWS(estimate_rate({0.1}, {1.0, 2.0}));
}

TEST_CASE("estimate_rate: least squares tolerates 5% noise on an order-2 sequence") {
  testing::Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x, e;
    for (int i = 0; i < 5; ++i) {
      const double H = std::pow(0.5, 3 + i);
      x.push_back(H);
      e.push_back(3.0 * H * H * (1.0 + gen.uniform(-0.05, 0.05)));
    }
    const double r = estimate_rate(x, e).least_squares;
    CHECK(r >= 1.9);
    CHECK(r <= 2.1);
  }
}

TEST_CASE("csv: header and empty fields for missing values") {
  RunRecord r;
  r.method = "fehmm";
  r.dim = 1;
  r.eps = 0.01;
  r.H = 0.125;
  r.T = 1.0;
  r.dofs = 7;
  r.wall_time_s = 1.5;
  r.linf_l2 = 1e-3;
  r.linf_h1 = 2e-2;
  std::ostringstream out;
  CsvAppender app(&out, false);
  app.append(r);
  const auto ls = lines(out.str());
  REQUIRE(ls.size() == 2);
  CHECK(ls[0] == "method,dim,eps,H,h,k,delta,tau,T,dofs,wall_time_s,linf_l2,linf_h1,rate_l2,rate_h1");
  const auto f = split(ls[1]);
  REQUIRE(f.size() == split(ls[0]).size());
  CHECK(f[0] == "fehmm");
  CHECK(f[4].empty());   // h
  CHECK(f[5].empty());   // k
  CHECK(f[10].empty());  // wall time suppressed
  CHECK(f[13].empty());
  CHECK(std::stod(f[11]) == 1e-3);
  CHECK(split(CsvAppender::format(r, true))[10] == "1.5");
}

TEST_CASE("fnv1a: reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("run_experiment: fine method against its own reference has zero error") {
  const ExperimentConfig e = experiment(
      "coeff.kind = periodic_1d\ncoeff.eps = 1/8\nmesh.N_fine = 64\nmethod = fine\nsweep.H = 1/64\n"
      "time.T = 0.5\ndata.g1 = sin\nreference.cache = false\n");
  const auto recs = run_experiment(e);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].linf_l2 == 0.0);
  CHECK(recs[0].linf_h1 == 0.0);
}

TEST_CASE("run_experiment: lod errors decrease under refinement") {
  const auto recs = run_experiment(experiment(kLod));
  REQUIRE(recs.size() == 3);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    CHECK(recs[i].linf_l2 < recs[i - 1].linf_l2);
    CHECK(recs[i].linf_h1 < recs[i - 1].linf_h1);
    CHECK(recs[i].rate_l2 > 0.0);
  }
  CHECK(std::isnan(recs[0].rate_l2));
}

TEST_CASE("run_method: fehmm with a constant coefficient matches the homogenized solve") {
  const std::string base =
      "coeff.kind = constant\ncoeff.params = 3\ncoeff.eps = 1/32\nmesh.N_fine = 64\nsweep.H = 1/16\n"
      "time.T = 0.5\ndata.g2 = sin\ndata.f = bump\n";
  // g1 stays zero: the two Ritz projections of g1 use different quadrature.
  const ExperimentConfig a = experiment(base + "method = fehmm\n");
  const ExperimentConfig b = experiment(base + "method = homogenized\n");
  const TimeGrid grid = experiment_grid(a);
  const Mesh fine = Mesh::uniform(1, 64, Box::unit(1), false);
  const MethodRun ra = run_method(a, a.eps, 16, fine, grid);
  const MethodRun rb = run_method(b, b.eps, 16, fine, grid);
  REQUIRE(ra.traj.n_snapshots() == rb.traj.n_snapshots());
  double gap = 0.0;
  for (std::size_t i = 0; i < ra.traj.u.size(); ++i) gap = std::max(gap, (ra.traj.u[i] - rb.traj.u[i]).cwiseAbs().maxCoeff());
  CHECK(gap <= 1e-8);
}

TEST_CASE("run_experiment: csv output is byte-identical without timing") {
  std::ostringstream a, b;
  run_experiment(experiment(kLod), &a);
  run_experiment(experiment(kLod), &b);
  CHECK(a.str() == b.str());
  CHECK(lines(a.str()).size() == 4);
}

TEST_CASE("reference cache: a cached reference reproduces the computed one") {
  const std::string text =
      "coeff.kind = periodic_1d\ncoeff.eps = 1/8\nmesh.N_fine = 64\nmethod = homogenized\nsweep.H = 1/8\n"
      "time.T = 0.25\ndata.g1 = sin\nseed = 99\n";
  const ExperimentConfig e = experiment(text);
  std::filesystem::remove_all(cache_directory());
  const TimeGrid grid = experiment_grid(e);
  const Mesh fine = Mesh::uniform(1, 64, Box::unit(1), false);
  const Trajectory first = reference_trajectory(e, e.eps, fine, grid);
  CHECK(std::filesystem::exists(cache_directory()));
  CHECK(std::distance(std::filesystem::directory_iterator(cache_directory()), std::filesystem::directory_iterator{}) == 1);
  const Trajectory second = reference_trajectory(e, e.eps, fine, grid);
  REQUIRE(first.u.size() == second.u.size());
  for (std::size_t i = 0; i < first.u.size(); ++i) CHECK(first.u[i] == second.u[i]);
}

TEST_CASE("longtime: refuses runs over budget") {
  const ExperimentConfig e = experiment(
      "coeff.kind = periodic_1d\ncoeff.eps = 1/40\nmesh.periodic = true\nmesh.N_fine = 4000\n"
      "data.g1 = sin\ndata.k = 2\nlongtime.budget = 1e6\n");
  CHECK_THROWS_AS(longtime_compare(e), ConfigError);
  CHECK_THROWS_AS(longtime_compare(experiment("coeff.eps = 1/10\n")), ConfigError);
}

TEST_CASE("longtime: short run produces one row per checkpoint") {
  const ExperimentConfig e = experiment(
      "coeff.kind = periodic_1d\ncoeff.eps = 1/5\nmesh.periodic = true\nmesh.N_fine = 200\n"
      "mesh.N_coarse = 8\n"
      "time.scheme = newmark\ntime.dt_override = 1/100\ntime.snapshots = 40\ndata.g1 = sin\ndata.g2 = travel\n"
      "data.k = 2\nlongtime.T0 = 0.1\nlongtime.checkpoints = 4\nlongtime.hmm = false\nreference.cache = false\n");
  const LongtimeTable t = longtime_compare(e);
  REQUIRE(t.t.size() == 4);
  CHECK(t.t.back() == doctest::Approx(t.T_long));
  CHECK(t.T_long == doctest::Approx(2.5));
  CHECK(t.err_fehmm.empty());
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t.err_vs_u0[i] >= 0.0);
    CHECK(t.err_vs_boussinesq[i] >= 0.0);
  }
}

TEST_CASE("verify: invariant suite passes on a periodic lod setup") {
  std::ostringstream out;
  const ExperimentConfig e = experiment(
      "coeff.kind = periodic_1d\ncoeff.eps = 1/8\nmesh.N_coarse = 8\nmesh.N_fine = 64\nmesh.periodic = true\n"
      "method = lod\nsweep.H = 1/8\nreference = none\n");
  CHECK(verify_invariants(e, out));
  CHECK(out.str().find("FAIL") == std::string::npos);
  CHECK(out.str().find("PASS lod_orthogonality") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
  const std::string good = write_file("good.cfg", "coeff.kind = periodic_1d\ncoeff.eps = 1/8\nhomog.N_cell = 64\n");
  const std::string typo = write_file("typo.cfg", "coeff.kind = periodic_1d\ncoeff.epz = 1/8\n");
  const std::string bad_solve = write_file(
      "solver.cfg", "coeff.kind = periodic_1d\ncoeff.eps = 1/8\nsweep.H = 1/8\nmesh.N_fine = 64\n"
                    "output.traj = " + (kScratch / "no-such-dir" / "u.traj").string() + "\n");
  CHECK(run_cli("homogenize --config " + good) == 0);
  CHECK(run_cli("homogenize --config " + typo) == 2);
  CHECK(run_cli("homogenize --config " + (kScratch / "missing.cfg").string()) == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("homogenize") == 2);
  CHECK(run_cli("verify --config " + good) == 0);
  // Failures after validation, here an unwritable trajectory file, exit with 3.
  CHECK(run_cli("solve --config " + bad_solve) == 3);
}
