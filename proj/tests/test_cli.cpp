#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <algorithm>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef CANARD_LAB_BIN
#error "CANARD_LAB_BIN must point at the CLI binary"
#endif

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CANARD_LAB_BIN) + " " + args + " 2>/dev/null";
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) res.out.append(buf.data(), n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("classify emits the super-explosion verdict for fig6") {
  const RunResult res = run_cli("classify --preset fig6 --eps 0.2");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("corner").at("kind") == "SuperExplosion");
  CHECK(j.at("corner").at("criticality") == "supercritical");
  CHECK(j.at("corner").at("thresholds").contains("two_sqrt_eps"));
  CHECK(j.at("nonexistence").at("K").get<double>() == Catch::Approx(4.0 / 3.0));
}

TEST_CASE("missing system is a usage error") {
  const RunResult res = run_cli("simulate");
  CHECK(res.exit_code == 1);
}

TEST_CASE("invalid config exits with code 1") {
  const std::string path = "bad_system.json";
  std::ofstream(path) << R"({"epsilon":0.2,"lambda":0.1,"g":{"coeffs":[0.1,-1]},"h":{"coeffs":[0,1,-1]}})";
  const RunResult res = run_cli("classify --system " + path);
  CHECK(res.exit_code == 1);
  std::remove(path.c_str());
}

TEST_CASE("orbit exits 2 with NoOrbit past the nonexistence threshold") {
  const RunResult res = run_cli("orbit --preset fig6 --eps 0.2 --lambda -2 --out noorbit.csv");
  CHECK(res.exit_code == 2);
  std::remove("noorbit.csv");
}

TEST_CASE("simulate writes deterministic artifacts") {
  const std::string flags =
      "simulate --preset fig6 --eps 0.2 --lambda 0.001 --from-equilibrium --tmax 50 "
      "--tol 1e-10 --out sim_a.csv --events-out ev_a.json";
  REQUIRE(run_cli(flags).exit_code == 0);
  REQUIRE(run_cli("simulate --preset fig6 --eps 0.2 --lambda 0.001 --from-equilibrium "
                  "--tmax 50 --tol 1e-10 --out sim_b.csv --events-out ev_b.json")
              .exit_code == 0);
  CHECK(slurp("sim_a.csv") == slurp("sim_b.csv"));
  CHECK(slurp("ev_a.json") == slurp("ev_b.json"));
  CHECK(slurp("sim_a.csv").substr(0, 6) == "t,x,y\n");
  const auto events = nlohmann::json::parse(slurp("ev_a.json"));
  CHECK(events.is_array());
  for (const std::string f : {"sim_a.csv", "sim_b.csv", "ev_a.json", "ev_b.json"})
    std::remove(f.c_str());
}

TEST_CASE("system round trip produces bit-identical reports") {
  REQUIRE(run_cli("classify --preset fig4 --eps 0.2 --lambda 0.5 --save-system rt.json "
                  "--out rep_a.json")
              .exit_code == 0);
  REQUIRE(run_cli("classify --system rt.json --out rep_b.json").exit_code == 0);
  CHECK(slurp("rep_a.json") == slurp("rep_b.json"));
  for (const std::string f : {"rt.json", "rep_a.json", "rep_b.json"}) std::remove(f.c_str());
}

TEST_CASE("certify W writes a verified certificate") {
  const RunResult res =
      run_cli("certify --preset fig4 --eps 0.2 --lambda 0.5 --region W --out cert.json");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(slurp("cert.json"));
  CHECK(j.at("result").at("verified").get<bool>());
  CHECK(j.at("region").at("vertices").size() == 6);
  std::remove("cert.json");
}

TEST_CASE("sweep emits the CSV header and appends explosion intervals") {
  const RunResult res = run_cli(
      "sweep --preset fig6 --eps 0.2 --lambda-min 0.01 --lambda-max 0.05 --samples 3 "
      "--jump 1.0 --out sw.csv");
  REQUIRE(res.exit_code == 0);
  const std::string csv = slurp("sw.csv");
  CHECK(csv.rfind("lambda,amplitude,x_min,x_max,period,classification\n", 0) == 0);
  CHECK(csv.find("# {\"explosion_intervals\"") != std::string::npos);
  std::remove("sw.csv");
}

TEST_CASE("CANARD_LAB_THREADS caps sweep parallelism") {
  const std::string cmd =
      "CANARD_LAB_THREADS=2 " + std::string(CANARD_LAB_BIN) +
      " sweep --preset fig6 --eps 0.2 --lambda-min 0.02 --lambda-max 0.06 --samples 4 "
      "--jump 1.0 --out sw_threads.csv 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (fread(buf.data(), 1, buf.size(), pipe) > 0) {
  }
  const int status = pclose(pipe);
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  const std::string csv = slurp("sw_threads.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 5);
  std::remove("sw_threads.csv");
}

TEST_CASE("stommel preset writes both coordinate systems") {
  const RunResult res = run_cli(
      "stommel --K 1.5 --eps 0.05 --lambda 0.95 --tmax 50 --out st.csv --general-out stg.csv");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("regime").at("kind") == "SuperExplosion");
  CHECK(slurp("st.csv").substr(0, 7) == "t,y,mu\n");
  CHECK(slurp("stg.csv").substr(0, 6) == "t,x,y\n");
  std::remove("st.csv");
  std::remove("stg.csv");
}
