#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

std::string cli() {
  const char* p = std::getenv("DPDA_CLI");
  REQUIRE(p != nullptr);
  return p;
}

Result run_cli(const std::string& args) {
  const std::string cmd = cli() + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dpda_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path f = dir / "config.json";
  std::ofstream(f) << body;
  return f;
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("scenarios lists the built-ins") {
  const Result r = run_cli("scenarios");
  CHECK(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') >= 9);
  for (const char* name : {"static-10-15", "static-10-45", "static-40-60", "static-40-180", "tv-undirected-10-45",
                           "tv-directed-fig7", "compare-static", "compare-tv-undirected", "compare-tv-directed"})
    CHECK(r.out.find(name) != std::string::npos);
  CHECK(run_cli("--version").out.find("0.1.0") != std::string::npos);
}

TEST_CASE("run writes deterministic artifacts") {
  const fs::path a = scratch("a"), b = scratch("b");
  const Result ra = run_cli("run compare-static --replications 3 --iterations 200 --jobs 3 --output " + a.string());
  const Result rb = run_cli("run compare-static --replications 3 --iterations 200 --jobs 1 --output " + b.string());
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  const auto fa = files_under(a / "compare-static");
  CHECK(fa == files_under(b / "compare-static"));
  CHECK(fa.size() >= 9);  // summary, two averaged traces, six replications
  for (const auto& f : fa) CHECK(slurp(a / "compare-static" / f) == slurp(b / "compare-static" / f));

  const auto summary = nlohmann::json::parse(slurp(a / "compare-static" / "summary.json"));
  CHECK(summary.at("scenario") == "compare-static");
  CHECK(summary.at("master_seed") == 2018);
  CHECK(summary.at("config_hash").get<std::string>().size() == 64);
  CHECK(summary.at("modes").size() == 2);
  for (const auto& m : summary.at("modes")) CHECK(m.at("replications") == 3);
  const std::string prefix = "# config_hash=" + summary.at("config_hash").get<std::string>();
  for (const auto& f : fa)
    if (f.extension() == ".csv") CHECK(slurp(a / "compare-static" / f).rfind(prefix, 0) == 0);

  const fs::path c = scratch("c");
  REQUIRE(run_cli("run compare-static --replications 3 --iterations 200 --seed 7 --output " + c.string()).code == 0);
  const auto other = nlohmann::json::parse(slurp(c / "compare-static" / "summary.json"));
  CHECK(other.at("master_seed") == 7);
  CHECK(slurp(c / "compare-static" / "accelerated_trace.csv") != slurp(a / "compare-static" / "accelerated_trace.csv"));
}

TEST_CASE("validate reports nonnegative slacks") {
  const Result r = run_cli("validate static-10-45");
  CHECK(r.code == 0);
  CHECK(r.out.find("gamma_eta") != std::string::npos);
  CHECK(run_cli("validate tv-directed-fig7").code == 0);
}

TEST_CASE("decay writes a CSV") {
  const fs::path d = scratch("decay");
  const Result r = run_cli("decay tv-undirected-10-45 --output " + d.string());
  CHECK(r.code == 0);
  const std::string csv = slurp(d / "tv-undirected-10-45" / "decay.csv");
  CHECK(csv.rfind("# config_hash=", 0) == 0);
  CHECK(csv.find("\nq,error,fitted\n") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path d = scratch("codes");
  CHECK(run_cli("run no-such-scenario").code == 1);
  CHECK(run_cli("run static-10-15 --replications 0").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("run " + write_config(d, R"({"base": "static-10-15", "colour": "blue"})").string()).code == 1);
  CHECK(run_cli("run " + write_config(d, R"({"base": "static-10-15", "replications": "many"})").string()).code == 1);

  const fs::path hard = write_config(d, R"({"base": "static-10-15", "name": "hard", "replications": 1,
                                            "oracle": {"tol": 1e-14, "max_iters": 5}})");
  CHECK(run_cli("run " + hard.string() + " --output " + d.string()).code == 2);
  CHECK(run_cli("oracle " + hard.string() + " --output " + d.string()).code == 2);

  // A tampered oracle cache makes the bound checks fail.
  const fs::path out = scratch("tamper");
  const std::string args = "static-10-15 --replications 1 --iterations 100 --output " + out.string();
  REQUIRE(run_cli("run " + args + " --check-bounds").code == 0);
  std::size_t tampered = 0;
  for (const auto& e : fs::directory_iterator(out / "oracle_cache")) {
    auto j = nlohmann::json::parse(slurp(e.path()));
    auto& x = j.at("solution").at("x_star");
    for (auto& v : x) v = v.get<double>() + 5.0;
    std::ofstream(e.path()) << j.dump();
    ++tampered;
  }
  REQUIRE(tampered == 1);
  CHECK(run_cli("run " + args + " --check-bounds").code == 3);
  CHECK(run_cli("run " + args).code == 0);
}
