#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gradpush/costs.hpp"
#include "gradpush/digraph.hpp"
#include "gradpush/engine.hpp"
#include "gradpush/mixing.hpp"
#include "gradpush/theory.hpp"

namespace gradpush {

// One experiment: a single random graph and cost family shared across a
// sweep of stepsizes. Serialized as flat key=value text with exactly these
// field names; alpha_list is comma-separated.
struct ExperimentConfig {
  CostKind cost_kind = CostKind::least_squares;
  int n = 10;
  int d = 5;
  int m = 3;
  double p = 0.7;
  std::vector<double> alpha_list{1e-1, 1e-2, 1e-3, 1e-4};
  long iters = 20000;
  std::uint64_t graph_seed = 1;
  std::uint64_t cost_seed = 1;
  std::filesystem::path output_dir = "out";

  // alpha_list nonempty and strictly positive, iters >= 1, sizes positive,
  // p in [0, 1]. Throws std::invalid_argument.
  void validate() const;
};

ExperimentConfig read_config(std::istream& in);
void write_config(const ExperimentConfig& cfg, std::ostream& out);

// Graph, mixing matrix and costs for a config. The graph is resampled with
// seed+1, seed+2, ... until it is strongly connected; the seed that
// finally passed is recorded so replays skip straight to it.
struct Instance {
  DiGraph graph;
  MixingMatrix mix;
  CostEnsemble costs;
  std::uint64_t graph_seed_used = 0;
};

DiGraph generate_connected_digraph(int n, double p, std::uint64_t seed,
                                   std::uint64_t* seed_used = nullptr,
                                   long max_attempts = 100000);
Instance build_instance(const ExperimentConfig& cfg);

struct SweepRow {
  double alpha = 0.0;
  double floor = 0.0;  // median of sum_sq_err over the last 10% of rows
  long t_floor = 0;    // first t with sum_sq_err within 5% of the floor
  bool gate_admissible = false;
  double sigma_w = 0.0;
  double delta = 0.0;
  double rho = 0.0;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  std::uint64_t graph_seed_used = 0;
  std::uint64_t cost_seed_used = 0;
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> run_files;  // one CSV per stepsize
};

// Runs the engine once per stepsize on the shared instance. Writes
// graph.txt, ensemble.txt, one run CSV per stepsize and summary.csv
// (columns alpha,floor,t_floor,gate,sigma_w,delta,rho; written atomically
// via a rename). A build failure or a diverging run throws and removes
// whatever outputs were already written.
SweepSummary run_experiment(const ExperimentConfig& cfg);

// Floor of a single run, as recorded in summary.csv.
double floor_estimate(const std::vector<double>& sum_sq_err);
long floor_crossing(const std::vector<double>& sum_sq_err, double floor);

// Adjacent-decade floor ratios. For every consecutive pair of stepsizes
// one decade apart, floor(10 alpha) / floor(alpha) must land in [10, 1000].
// Floors at numerical noise level are reported as below the measurable
// floor and do not fail the check. Requires at least two rows.
struct RatioCheck {
  struct Pair {
    double alpha_hi = 0.0;
    double alpha_lo = 0.0;
    double ratio = 0.0;
    bool pass = false;
    bool below_floor = false;
  };
  std::vector<Pair> pairs;
  bool pass = true;
  std::string note;
};

RatioCheck sweep_ratio_check(const SweepSummary& summary);

}  // namespace gradpush
