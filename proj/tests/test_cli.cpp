#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "pglim/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

// End-to-end invocations of the installed binary.
RunResult run(const std::string& args) {
  static int counter = 0;
  fs::path out = fs::temp_directory_path() /
                 ("pglim_cli_" + std::to_string(counter++) + ".out");
  std::string command = std::string(PG_LIMITS_BIN) + " " + args + " > " +
                        out.string() + " 2>/dev/null";
  int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  result.stdout_text.assign(std::istreambuf_iterator<char>(in),
                            std::istreambuf_iterator<char>());
  fs::remove(out);
  return result;
}

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / "pglim_cli_scratch";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("gradient at the scalar optimum is numerically zero") {
  RunResult r = run("gradient --a 1 --b 1 --k -0.6180339887498949");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.stdout_text);
  CHECK(std::abs(j["gradient"][0][0].get<double>()) <= 1e-9);
  CHECK(j["cost"].get<double>() == doctest::Approx(1.6180339887).epsilon(1e-9));
  CHECK(j["spectral_radius"].get<double>() ==
        doctest::Approx(0.3819660112).epsilon(1e-9));
}

TEST_CASE("gradient exit codes") {
  // rho(A) = 1 at k = 0: mathematical precondition.
  CHECK(run("gradient --a 1 --b 1 --k 0").exit_code == 3);
  // Missing gain: validation.
  CHECK(run("gradient --a 1 --b 1").exit_code == 2);
  CHECK(run("gradient --no-such-flag 1").exit_code == 2);
  CHECK(run("").exit_code == 2);
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("help text annotates default provenance") {
  RunResult r = run("figure1 --help");
  REQUIRE(r.exit_code == 0);
  CHECK(r.stdout_text.find("[experiment default]") != std::string::npos);
  CHECK(r.stdout_text.find("[tool default]") != std::string::npos);
}

TEST_CASE("system files round trip through the gradient command") {
  fs::path dir = scratch_dir();
  fs::path system_path = dir / "system.json";

  pglim::SystemFile file;
  file.system.A = Eigen::MatrixXd::Zero(3, 3);
  file.system.A << 0.3, 0.1, 0.0, 0.0, 0.2, 0.1, 0.05, 0.0, 0.4;
  file.system.B = Eigen::MatrixXd::Zero(3, 1);
  file.system.B << 1.0, 0.5, 0.0;
  file.system.SigmaW = Eigen::MatrixXd::Identity(3, 3);
  file.cost.Q = Eigen::MatrixXd::Identity(3, 3);
  file.cost.R = Eigen::MatrixXd::Identity(1, 1);
  pglim::atomic_write_file(system_path.string(),
                           pglim::system_file_to_json(file).dump(2));

  RunResult r = run("gradient --system " + system_path.string() +
                    " --K [[0.0,0.0,0.0]]");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.stdout_text);

  // The emitted gramian re-parses under the matrix schema.
  Eigen::MatrixXd gamma = pglim::matrix_from_json(j["Gamma"], "Gamma");
  CHECK(gamma.rows() == 3);
  CHECK(gamma.isApprox(gamma.transpose(), 1e-12));
}

TEST_CASE("scalar certificates reproduce the controllability trend") {
  RunResult strong = run("certificate scalar --a 1 --b 1 --NT 10000 --beta 1");
  RunResult weak = run("certificate scalar --a 1 --b 0.1 --NT 10000 --beta 1");
  REQUIRE(strong.exit_code == 0);
  REQUIRE(weak.exit_code == 0);
  double strong_bound =
      nlohmann::json::parse(strong.stdout_text)["bound_value"].get<double>();
  double weak_bound =
      nlohmann::json::parse(weak.stdout_text)["bound_value"].get<double>();
  CHECK(weak_bound > strong_bound);

  CHECK(run("certificate scalar --a 1 --b 0 --NT 100 --beta 1").exit_code == 3);
}

TEST_CASE("curse certificate meets the documented floor") {
  RunResult r = run("certificate curse --dx 6 --rho 0.5 --budget 1e6");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.stdout_text);
  CHECK(j["bound_value"].get<double>() >= 0.05);
  CHECK(j["riccati_value"].get<double>() >= 257.0);
}

TEST_CASE("vacuous certificates still exit zero") {
  // Tiny sigma_nu at small m drives the divergence past the vacuous boundary.
  RunResult r = run(
      "certificate scalar-po --a 0.9 --m 1e-4 --N 100 --T 100 --beta 100");
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.stdout_text);
  CHECK(j["vacuous"].get<bool>());
  CHECK(j["bound_value"].get<double>() == 0.0);
}

TEST_CASE("figure1 runs are byte identical for a fixed seed") {
  fs::path dir = scratch_dir();
  fs::path a = dir / "a.csv";
  fs::path b = dir / "b.csv";
  std::string flags =
      " --b-grid 0.5,1.0 --T 40 --n-plugin 10 --n-zeroth 100 --batch 50 "
      "--seed 7 --out ";
  REQUIRE(run("figure1" + flags + a.string()).exit_code == 0);
  REQUIRE(run("figure1" + flags + b.string() + " --workers 8").exit_code == 0);
  CHECK(pglim::read_file(a.string()) == pglim::read_file(b.string()));

  RunResult filtered = run("figure1 --b-grid 1.0 --T 40 --n-plugin 10 "
                           "--n-zeroth 100 --batch 50 --seed 7 "
                           "--methods plugin");
  REQUIRE(filtered.exit_code == 0);
  CHECK(filtered.stdout_text.find("zeroth") == std::string::npos);
  CHECK(filtered.stdout_text.find("plugin") != std::string::npos);
}

TEST_CASE("figure1 writes an svg plot on request") {
  fs::path dir = scratch_dir();
  fs::path csv = dir / "fig.csv";
  fs::path svg = dir / "fig.svg";
  REQUIRE(run("figure1 --b-grid 0.5,1.0 --T 40 --n-plugin 10 --n-zeroth 100 "
              "--batch 50 --seed 7 --out " +
              csv.string() + " --svg " + svg.string())
              .exit_code == 0);
  std::string content = pglim::read_file(svg.string());
  CHECK(content.find("<svg") == 0);
  CHECK(content.find("polyline") != std::string::npos);
}

TEST_CASE("sweep commands emit csv and enforce validation") {
  RunResult markov =
      run("sweep markov --a 0.9 --m-grid logspace:1,1e-2,4 --beta 100");
  REQUIRE(markov.exit_code == 0);
  CHECK(markov.stdout_text.rfind("m,b,c,bound_value", 0) == 0);
  CHECK(std::count(markov.stdout_text.begin(), markov.stdout_text.end(), '\n') ==
        5);

  RunResult dims = run("sweep dimension --dx-from 6 --dx-to 8 --beta 100");
  REQUIRE(dims.exit_code == 0);
  // Consecutive bounds grow by at least a factor of three.
  std::istringstream lines(dims.stdout_text);
  std::string line;
  std::getline(lines, line);  // header
  std::vector<double> ratios;
  while (std::getline(lines, line)) {
    std::size_t last_comma = line.rfind(',');
    ratios.push_back(std::stod(line.substr(last_comma + 1)));
  }
  REQUIRE(ratios.size() == 3);
  CHECK(ratios[1] >= 3.0);
  CHECK(ratios[2] >= 3.0);

  CHECK(run("sweep b-sweep --b-grid ,").exit_code == 2);
  CHECK(run("sweep dimension --dx-from 5 --dx-to 4").exit_code == 2);
}

TEST_CASE("io failures exit with code 4") {
  CHECK(run("figure1 --b-grid 1.0 --T 20 --n-plugin 4 --n-zeroth 50 "
            "--batch 50 --out /nonexistent-dir/x.csv")
            .exit_code == 4);
}
