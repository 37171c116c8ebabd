#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "llg/harness/harness.hpp"

using namespace llg;
using namespace llg::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("llg_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LLGSIM_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallAccuracy = R"([run]
experiment = accuracy_time
schemes = bdf1 bdf2
alpha = 10

[accuracy]
dim = 1
final_time = 0.01
h = 0.05
divisors = 4 8
)";

}  // namespace

TEST_CASE("shipped configs parse and round trip", "[harness]") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(LLG_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".ini") continue;
    INFO(entry.path());
    const RunConfig c = load_config(entry.path());
    CHECK(parse_config(serialize(c)) == c);
    ++count;
  }
  CHECK(count >= 8);
}

TEST_CASE("config parsing details", "[harness]") {
  const RunConfig c = parse_config(std::string(kSmallAccuracy));
  CHECK(c.schemes == std::vector<Scheme>{Scheme::BDF1, Scheme::BDF2});
  CHECK(c.divisors_for(Scheme::BDF2) == std::vector<int>{4, 8});
  CHECK(c.startup == Startup::Exact);

  const RunConfig per = parse_config(std::string(kSmallAccuracy) + "divisors_bdf2 = 3 5\n");
  CHECK(per.divisors_for(Scheme::BDF1) == std::vector<int>{4, 8});
  CHECK(per.divisors_for(Scheme::BDF2) == std::vector<int>{3, 5});

  const RunConfig film = parse_config(std::string("[run]\nexperiment = relax_film\n"));
  CHECK(film.startup == Startup::Bootstrap);
  CHECK(film.grid == Index3{100, 100, 4});
}

TEST_CASE("config errors", "[harness]") {
  CHECK_THROWS_AS(parse_config(std::string(kSmallAccuracy) + "bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("[run]\nschemes = bdf1\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("[run]\nexperiment = nope\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("[run]\nexperiment = relax_film\nschemes = bdf4\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("[run]\nexperiment = relax_film\nalpha = -1\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("[run]\nexperiment = relax_film\n[material]\nextent_nm = 1 2\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("[run]\nexperiment = accuracy_time\n[accuracy]\ndim = 2\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string("not ini at all [")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), ConfigError);
}

TEST_CASE("accuracy runs are deterministic and write tables", "[harness]") {
  const RunConfig c = parse_config(std::string(kSmallAccuracy));
  const AccuracyTable a = run_accuracy_time(c), b = run_accuracy_time(c);
  REQUIRE(a.rows.size() == 4);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK_FALSE(a.rows[i].failed);
    CHECK(a.rows[i].error.linf == b.rows[i].error.linf);
    CHECK(a.rows[i].error.l2 == b.rows[i].error.l2);
  }
  const fs::path dir = scratch_dir("tables");
  write_accuracy(a, dir);
  const auto acc = read_csv(dir / "accuracy.csv");
  CHECK(acc.front() == std::vector<std::string>{"scheme", "k", "h", "linf", "l2", "h1"});
  CHECK(acc.size() == 5);
  CHECK(acc[1][0] == "bdf1");
  CHECK(std::stod(acc[1][3]) == a.rows[0].error.linf);
  CHECK(read_csv(dir / "orders.csv").front() == std::vector<std::string>{"scheme", "linf", "l2", "h1"});
  CHECK(read_csv(dir / "runs.csv").size() == 5);
}

TEST_CASE("energy series checks", "[harness]") {
  std::vector<EnergySample> e;
  for (int n = 0; n <= 10; ++n) {
    EnergySample s;
    s.step = n;
    s.energy.total = 10.0 - n;
    e.push_back(s);
  }
  CHECK(max_late_increase(e, 0.1) == 0.0);
  CHECK(max_rise_above_minimum(e) == 0.0);
  e[8].energy.total = 5.0;  // jump from 3 to 5 and back down
  CHECK(max_late_increase(e, 0.1) == Catch::Approx(0.2));
  CHECK(max_rise_above_minimum(e) == Catch::Approx(0.2));
}

TEST_CASE("efficiency matching", "[harness]") {
  auto row = [](Scheme s, double err, double secs) {
    AccuracyRow r;
    r.scheme = s;
    r.error.linf = err;
    r.wall_seconds = secs;
    return EfficiencyRow{"k", r};
  };
  const std::vector<EfficiencyRow> rows{row(Scheme::BDF2, 1e-3, 1), row(Scheme::BDF2, 1e-4, 2), row(Scheme::BDF2, 1e-5, 4),
                                        row(Scheme::BDF3, 5e-4, 0.5), row(Scheme::BDF3, 5e-5, 0.8), row(Scheme::BDF3, 1e-6, 1.5)};
  const auto m = match_efficiency(rows, "k");
  REQUIRE(m);
  CHECK(m->target_error == 1e-4);
  CHECK(m->reference_seconds == 2);
  REQUIRE(m->cheapest);
  CHECK(m->cheapest->wall_seconds == 0.8);
  CHECK(m->faster());
  CHECK_FALSE(match_efficiency(rows, "h"));
}

TEST_CASE("physical setup", "[harness]") {
  RunConfig c = parse_config(std::string("[run]\nexperiment = neel_wall\n[material]\nextent_nm = 80 10 4\ncells = 16 4 2\n"
                                         "[dynamics]\nfield_mT = 5\nstray = false\n"));
  const PhysicalSetup s = make_physical_setup(c);
  CHECK(s.length_m == Catch::Approx(8e-8));
  CHECK(s.mesh.spacing[0] == Catch::Approx(1.0 / 16));
  CHECK(s.h_ext[0] == Catch::Approx(4.9736e-3).epsilon(1e-4));
  CHECK(s.kernel == nullptr);
  const VectorField m0 = initial_state(c, s);
  const auto pos = wall_position(m0);
  REQUIRE(pos);
  CHECK(*pos == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("command line", "[harness][cli]") {
  const fs::path dir = scratch_dir("cli");
  {
    std::ofstream(dir / "bad.ini") << "[run]\nexperiment = accuracy_time\nunknown_key = 1\n";
    std::ofstream(dir / "good.ini") << kSmallAccuracy;
  }
  CHECK(run_cli("accuracy-time --config " + (dir / "bad.ini").string() + " --out " + (dir / "o1").string()) == 2);
  CHECK(run_cli("accuracy-space --config " + (dir / "good.ini").string() + " --out " + (dir / "o2").string()) == 2);
  CHECK(run_cli("accuracy-time --config " + (dir / "missing.ini").string() + " --out " + (dir / "o3").string()) != 0);
  CHECK(run_cli("") != 0);
  CHECK(run_cli("accuracy-time --config " + (dir / "good.ini").string() + " --out " + (dir / "o4").string()) == 0);
  CHECK(fs::exists(dir / "o4" / "accuracy.csv"));
  CHECK(fs::exists(dir / "o4" / "config.ini"));
  CHECK(load_config(dir / "o4" / "config.ini") == parse_config(std::string(kSmallAccuracy)));
}
