#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int status = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(GRADPUSH_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult result;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe))
    result.output.append(buf, got);
  const int rc = pclose(pipe);
  result.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return result;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("gradpush_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("graph-info prints the spectral block") {
  const CmdResult ring = run_cli("graph-info --topology ring --n 5");
  CHECK(ring.status == 0);
  CHECK(contains(ring.output, "n=5"));
  CHECK(contains(ring.output, "arcs=10"));
  CHECK(contains(ring.output, "sigma_w="));
  CHECK(contains(ring.output, "pi="));
  CHECK(contains(ring.output, "pi_min=0.2"));
  CHECK(contains(ring.output, "norm_1n_minus_npi="));

  const CmdResult random = run_cli("graph-info --n 10 --p 0.7 --seed 7");
  CHECK(random.status == 0);
  CHECK(contains(random.output, "seed_used="));
}

TEST_CASE("run, verify and gate round trip") {
  const fs::path dir = fresh_dir("roundtrip");
  const std::string base = "--n 6 --p 0.7 --graph-seed 3 --d 3 --m 3 "
                           "--cost least_squares --cost-seed 4";
  const CmdResult run = run_cli("run " + base + " --alpha 1e-3 --iters 400 " +
                                "--out " + dir.string());
  CHECK(run.status == 0);
  CHECK(contains(run.output, "gate="));
  CHECK(fs::exists(dir / "graph.txt"));
  CHECK(fs::exists(dir / "ensemble.txt"));
  CHECK(fs::exists(dir / "run_alpha_0.001.csv"));

  const std::string files = "--graph " + (dir / "graph.txt").string() +
                            " --ensemble " + (dir / "ensemble.txt").string();
  const CmdResult verify =
      run_cli("verify " + files + " --csv " +
              (dir / "run_alpha_0.001.csv").string() + " --alpha 1e-3");
  CHECK(verify.status == 0);
  CHECK(contains(verify.output, "family=push-sum-weight-decay"));
  CHECK(contains(verify.output, "total_violations=0"));
  CHECK(contains(verify.output, "verify=pass"));

  // Verifying with the wrong stepsize is flagged as mismatched inputs.
  const CmdResult mismatched =
      run_cli("verify " + files + " --csv " +
              (dir / "run_alpha_0.001.csv").string() + " --alpha 5e-3");
  CHECK(mismatched.status != 0);
  CHECK(contains(mismatched.output, "error"));

  const CmdResult gate_ok = run_cli("gate " + base + " --alpha 1e-4");
  CHECK(gate_ok.status == 0);
  CHECK(contains(gate_ok.output, "gate=admissible"));

  const CmdResult gate_no = run_cli("gate " + base + " --alpha 0.9");
  CHECK(gate_no.status == 2);
  CHECK(contains(gate_no.output, "gate=rejected"));
  CHECK(contains(gate_no.output, "reason="));

  const CmdResult from_file =
      run_cli("graph-info --graph " + (dir / "graph.txt").string());
  CHECK(from_file.status == 0);
  CHECK(contains(from_file.output, "n=6"));
  CHECK(contains(from_file.output, "sigma_w="));

  fs::remove_all(dir);
}

TEST_CASE("sweep runs a config file end to end") {
  const fs::path dir = fresh_dir("sweep");
  const fs::path config = dir / "config.txt";
  {
    std::ofstream out(config);
    out << "cost_kind=least_squares\nn=6\nd=3\nm=3\np=0.6\n"
        << "alpha_list=1e-2,1e-3\niters=20000\ngraph_seed=5\ncost_seed=6\n"
        << "output_dir=" << (dir / "runs").string() << '\n';
  }
  const CmdResult sweep = run_cli("sweep --config " + config.string());
  CHECK(sweep.status == 0);
  CHECK(contains(sweep.output, "alpha=0.01"));
  CHECK(contains(sweep.output, "ratio_check=pass"));
  CHECK(fs::exists(dir / "runs" / "summary.csv"));

  const CmdResult monitored =
      run_cli("sweep --config " + config.string() + " --monitor");
  CHECK(monitored.status == 0);
  CHECK(contains(monitored.output, "total_violations=0"));
  fs::remove_all(dir);
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run_cli("").status != 0);
  CHECK(run_cli("run --alpha 0.1 --graph /no/such/file").status != 0);
  CHECK(run_cli("verify --graph a --ensemble b --csv c").status != 0);
}
