// Command line front end for the push-sum gradient toolkit.
//
// Subcommands:
//   graph-info  spectral quantities of a mixing matrix as key=value text
//   run         one stepsize on a fresh instance; writes replayable files
//   sweep       a full stepsize sweep from a config file, with floor
//               ratio checking
//   verify      replay a serialized run and check every tracked inequality
//   gate        stepsize admissibility for an instance
//
// Exit codes: 0 success, 1 usage or runtime error, 2 a requested
// verification (ratio check, inequality monitor, gate) failed.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradpush/costs.hpp"
#include "gradpush/digraph.hpp"
#include "gradpush/engine.hpp"
#include "gradpush/harness.hpp"
#include "gradpush/mixing.hpp"
#include "gradpush/theory.hpp"

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct GraphSource {
  std::string file;
  std::string topology = "random";
  int n = 10;
  double p = 0.7;
  std::uint64_t seed = 1;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--graph", file, "Edge-list file to load");
    cmd->add_option("--topology", topology, "random, ring or complete")
        ->check(CLI::IsMember({"random", "ring", "complete"}));
    cmd->add_option("--n", n, "Vertex count for generated graphs");
    cmd->add_option("--p", p, "Arc probability for random graphs");
    cmd->add_option("--graph-seed,--seed", seed,
                    "Seed for random graphs (bumped until strongly "
                    "connected)");
  }

  gradpush::DiGraph load(std::uint64_t* seed_used) const {
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw std::runtime_error("cannot open graph file " + file);
      return gradpush::read_edge_list(in);
    }
    if (topology == "ring") return gradpush::ring_digraph(n);
    if (topology == "complete") return gradpush::complete_digraph(n);
    return gradpush::generate_connected_digraph(n, p, seed, seed_used);
  }
};

struct EnsembleSource {
  std::string file;
  std::string cost = "least_squares";
  int d = 5;
  int m = 3;
  std::uint64_t seed = 1;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--ensemble", file, "Ensemble file to load");
    cmd->add_option("--cost", cost, "least_squares or quadratic")
        ->check(CLI::IsMember({"least_squares", "quadratic"}));
    cmd->add_option("--d", d, "Decision dimension");
    cmd->add_option("--m", m, "Rows per local least-squares block");
    cmd->add_option("--cost-seed", seed, "Seed for sampled ensembles");
  }

  gradpush::CostEnsemble load(int n) const {
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw std::runtime_error("cannot open ensemble file " + file);
      return gradpush::read_ensemble(in);
    }
    if (cost == "quadratic") return gradpush::quadratic_ensemble(n, d, seed);
    return gradpush::least_squares_ensemble(n, d, m, seed);
  }
};

void print_graph_info(const gradpush::DiGraph& g,
                      const gradpush::MixingMatrix& mix,
                      std::uint64_t seed_used, bool generated) {
  std::cout << "n=" << g.size() << '\n';
  std::cout << "arcs=" << g.arcs().size() << '\n';
  if (generated) std::cout << "seed_used=" << seed_used << '\n';
  std::cout << "sigma_w=" << fmt(mix.sigma_w) << '\n';
  std::cout << "pi=";
  for (int i = 0; i < mix.size(); ++i) {
    if (i) std::cout << ' ';
    std::cout << fmt(mix.pi[i]);
  }
  std::cout << '\n';
  std::cout << "pi_min=" << fmt(mix.pi_min()) << '\n';
  std::cout << "pi_max=" << fmt(mix.pi_max()) << '\n';
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mix.size());
  std::cout << "norm_1n_minus_npi="
            << fmt(gradpush::pi_norm(
                   ones - static_cast<double>(mix.size()) * mix.pi, mix.pi))
            << '\n';
}

double run_delta(const gradpush::RunRecord& rec,
                 const gradpush::MixingMatrix& mix) {
  return std::max(rec.delta_running.back(),
                  1.0 / (mix.size() * mix.pi.minCoeff()));
}

int report_monitor(const gradpush::MonitorReport& report) {
  long total = 0;
  for (const auto& fam : report.families) {
    std::cout << "family=" << fam.id << " checked=" << fam.checked
              << " violations=" << fam.violations
              << " worst_margin=" << fmt(fam.worst_margin) << '\n';
    total += fam.violations;
  }
  for (const auto& v : report.violations)
    std::cout << "violation family=" << v.family << " t=" << v.t
              << " lhs=" << fmt(v.lhs) << " rhs=" << fmt(v.rhs) << '\n';
  std::cout << "total_violations=" << total << '\n';
  return total == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Push-sum gradient simulator and convergence checker"};
  app.require_subcommand(1);

  // graph-info ------------------------------------------------------------
  auto* info_cmd =
      app.add_subcommand("graph-info", "Spectral quantities of a graph");
  auto info_src = std::make_shared<GraphSource>();
  info_src->add_options(info_cmd);
  info_cmd->callback([info_src]() {
    std::uint64_t seed_used = info_src->seed;
    const gradpush::DiGraph g = info_src->load(&seed_used);
    const gradpush::MixingMatrix mix = gradpush::build_mixing(g);
    print_graph_info(g, mix, seed_used, info_src->file.empty());
  });

  // run ---------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Single-stepsize run");
  struct RunArgs {
    GraphSource graph;
    EnsembleSource ensemble;
    double alpha = 1e-2;
    long iters = 20000;
    std::string out = "out";
  };
  auto run_args = std::make_shared<RunArgs>();
  run_args->graph.add_options(run_cmd);
  run_args->ensemble.add_options(run_cmd);
  run_cmd->add_option("--alpha", run_args->alpha, "Stepsize")->required();
  run_cmd->add_option("--iters", run_args->iters, "Iteration count");
  run_cmd->add_option("--out", run_args->out, "Output directory");
  run_cmd->callback([run_args]() {
    std::uint64_t seed_used = run_args->graph.seed;
    const gradpush::DiGraph g = run_args->graph.load(&seed_used);
    const gradpush::MixingMatrix mix = gradpush::build_mixing(g);
    const gradpush::CostEnsemble ens = run_args->ensemble.load(g.size());
    const std::filesystem::path dir(run_args->out);
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(dir / "graph.txt");
      gradpush::write_edge_list(g, out);
    }
    {
      std::ofstream out(dir / "ensemble.txt");
      gradpush::write_ensemble(ens, out);
    }
    const Eigen::VectorXd x0 =
        Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size()) * ens.d);
    const gradpush::RunRecord rec =
        gradpush::run(mix, ens, run_args->alpha, run_args->iters, x0);
    const auto csv = dir / ("run_alpha_" + fmt(run_args->alpha) + ".csv");
    {
      std::ofstream out(csv);
      rec.write_csv(out);
    }
    std::cout << "graph_seed_used=" << seed_used << '\n';
    std::cout << "cost_seed_used=" << ens.seed << '\n';
    std::cout << "csv=" << csv.string() << '\n';
    if (rec.diverged) {
      std::cout << "diverged_at=" << rec.fail_t
                << " agent=" << rec.fail_agent << '\n';
      throw std::runtime_error("run diverged; partial record written");
    }
    const double delta = run_delta(rec, mix);
    const auto consts =
        gradpush::compute_constants(mix, ens, run_args->alpha, delta);
    const auto gate = gradpush::stepsize_gate(consts, run_args->alpha);
    std::cout << "floor=" << fmt(gradpush::floor_estimate(rec.sum_sq_err))
              << '\n';
    std::cout << "delta=" << fmt(delta) << '\n';
    std::cout << "sigma_w=" << fmt(mix.sigma_w) << '\n';
    std::cout << "rho=" << fmt(consts.rho) << '\n';
    std::cout << "gate=" << (gate.admissible ? "admissible" : "rejected")
              << '\n';
  });

  // sweep ---------------------------------------------------------------
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Stepsize sweep from a config file");
  struct SweepArgs {
    std::string config;
    std::string out;
    bool monitor = false;
  };
  auto sweep_args = std::make_shared<SweepArgs>();
  sweep_cmd->add_option("--config", sweep_args->config, "key=value config")
      ->required();
  sweep_cmd->add_option("--out", sweep_args->out,
                        "Override the config's output_dir");
  sweep_cmd->add_flag("--monitor", sweep_args->monitor,
                      "Also run the inequality monitors on every "
                      "admissible stepsize");
  sweep_cmd->callback([sweep_args]() {
    std::ifstream in(sweep_args->config);
    if (!in)
      throw std::runtime_error("cannot open config " + sweep_args->config);
    gradpush::ExperimentConfig cfg = gradpush::read_config(in);
    if (!sweep_args->out.empty()) cfg.output_dir = sweep_args->out;
    const gradpush::SweepSummary summary = gradpush::run_experiment(cfg);
    std::cout << "graph_seed_used=" << summary.graph_seed_used << '\n';
    std::cout << "cost_seed_used=" << summary.cost_seed_used << '\n';
    for (const auto& row : summary.rows) {
      std::cout << "alpha=" << fmt(row.alpha) << " floor=" << fmt(row.floor)
                << " t_floor=" << row.t_floor << " gate="
                << (row.gate_admissible ? "admissible" : "rejected")
                << " rho=" << fmt(row.rho) << '\n';
    }
    int status = 0;
    const gradpush::RatioCheck ratios = gradpush::sweep_ratio_check(summary);
    for (const auto& pair : ratios.pairs) {
      std::cout << "ratio alpha_hi=" << fmt(pair.alpha_hi)
                << " alpha_lo=" << fmt(pair.alpha_lo);
      if (pair.below_floor)
        std::cout << " below_measurable_floor=1";
      else
        std::cout << " value=" << fmt(pair.ratio);
      std::cout << " pass=" << (pair.pass ? 1 : 0) << '\n';
    }
    if (!ratios.note.empty()) std::cout << "note=" << ratios.note << '\n';
    std::cout << "ratio_check=" << (ratios.pass ? "pass" : "fail") << '\n';
    if (!ratios.pass) status = 2;

    if (sweep_args->monitor) {
      const gradpush::Instance inst = gradpush::build_instance(cfg);
      const Eigen::VectorXd x0 =
          Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.n) * cfg.d);
      for (std::size_t i = 0; i < summary.rows.size(); ++i) {
        if (!summary.rows[i].gate_admissible) continue;
        std::ifstream csv(summary.run_files[i]);
        const gradpush::RunRecord rec = gradpush::RunRecord::read_csv(csv);
        const auto consts = gradpush::compute_constants(
            inst.mix, inst.costs, summary.rows[i].alpha,
            summary.rows[i].delta);
        std::cout << "monitor alpha=" << fmt(summary.rows[i].alpha) << '\n';
        const auto report = gradpush::monitor_inequalities(
            rec, consts, inst.mix, inst.costs, summary.rows[i].alpha, x0);
        if (report_monitor(report) != 0) status = 2;
      }
    }
    if (status != 0) std::exit(status);
  });

  // verify ---------------------------------------------------------------
  auto* verify_cmd = app.add_subcommand(
      "verify", "Replay a serialized run and check the tracked inequalities");
  struct VerifyArgs {
    std::string graph, ensemble, csv;
    double alpha = 0.0;
  };
  auto verify_args = std::make_shared<VerifyArgs>();
  verify_cmd->add_option("--graph", verify_args->graph, "graph.txt")
      ->required();
  verify_cmd->add_option("--ensemble", verify_args->ensemble, "ensemble.txt")
      ->required();
  verify_cmd->add_option("--csv", verify_args->csv, "run CSV")->required();
  verify_cmd->add_option("--alpha", verify_args->alpha,
                         "Stepsize the run was produced with")
      ->required();
  verify_cmd->callback([verify_args]() {
    std::ifstream gin(verify_args->graph);
    if (!gin)
      throw std::runtime_error("cannot open graph " + verify_args->graph);
    const gradpush::DiGraph g = gradpush::read_edge_list(gin);
    const gradpush::MixingMatrix mix = gradpush::build_mixing(g);
    std::ifstream ein(verify_args->ensemble);
    if (!ein)
      throw std::runtime_error("cannot open ensemble " +
                               verify_args->ensemble);
    const gradpush::CostEnsemble ens = gradpush::read_ensemble(ein);
    std::ifstream cin_file(verify_args->csv);
    if (!cin_file)
      throw std::runtime_error("cannot open csv " + verify_args->csv);
    const gradpush::RunRecord rec = gradpush::RunRecord::read_csv(cin_file);

    const double delta = run_delta(rec, mix);
    const auto consts =
        gradpush::compute_constants(mix, ens, verify_args->alpha, delta);
    const Eigen::VectorXd x0 =
        Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size()) * ens.d);

    std::cout << "rows=" << rec.rows() << '\n';
    std::cout << "delta=" << fmt(delta) << '\n';
    const auto gate = gradpush::stepsize_gate(consts, verify_args->alpha);
    std::cout << "gate=" << (gate.admissible ? "admissible" : "rejected")
              << '\n';
    if (!gate.admissible) std::cout << "gate_reason=" << gate.reason << '\n';

    const auto report = gradpush::monitor_inequalities(
        rec, consts, mix, ens, verify_args->alpha, x0);
    int status = report_monitor(report);

    if (gate.admissible) {
      const auto cert = gradpush::check_boundedness_certificate(rec, consts);
      std::cout << "certificate=" << (cert.certified ? "pass" : "fail")
                << " r=" << fmt(cert.r) << " t0=" << cert.t0
                << " worst_margin_a=" << fmt(cert.worst_margin_a)
                << " worst_margin_b=" << fmt(cert.worst_margin_b) << '\n';
      if (!cert.certified) status = 2;

      // Trajectory envelopes with the measured sup of the distance column.
      // The distance envelope is evaluated one round late: the first round
      // only mixes the gradient-free initial state, so the contraction
      // clock starts at round one.
      const double r_measured = *std::max_element(rec.dist_to_opt.begin(),
                                                  rec.dist_to_opt.end());
      long env_viol = 0;
      double worst_a = std::numeric_limits<double>::infinity();
      double worst_b = worst_a;
      for (std::size_t t = 0; t < rec.rows(); ++t) {
        const double ea = gradpush::envelope_a(
            consts, rec.dist_to_opt[0], rec.consensus_pi[0], r_measured,
            t == 0 ? 0 : static_cast<long>(t) - 1);
        const double eb = gradpush::envelope_b(
            consts, rec.consensus_pi[0], r_measured, static_cast<long>(t));
        worst_a = std::min(worst_a, ea - rec.dist_to_opt[t]);
        worst_b = std::min(worst_b, eb - rec.consensus_pi[t]);
        if (rec.dist_to_opt[t] > ea + 1e-9 * (1.0 + ea)) ++env_viol;
        if (rec.consensus_pi[t] > eb + 1e-9 * (1.0 + eb)) ++env_viol;
      }
      std::cout << "envelopes checked=" << rec.rows()
                << " violations=" << env_viol
                << " worst_margin_a=" << fmt(worst_a)
                << " worst_margin_b=" << fmt(worst_b) << '\n';
      if (env_viol > 0) status = 2;
    }
    std::cout << "verify=" << (status == 0 ? "pass" : "fail") << '\n';
    if (status != 0) std::exit(status);
  });

  // gate ---------------------------------------------------------------
  auto* gate_cmd =
      app.add_subcommand("gate", "Stepsize admissibility for an instance");
  struct GateArgs {
    GraphSource graph;
    EnsembleSource ensemble;
    double alpha = 0.0;
  };
  auto gate_args = std::make_shared<GateArgs>();
  gate_args->graph.add_options(gate_cmd);
  gate_args->ensemble.add_options(gate_cmd);
  gate_cmd->add_option("--alpha", gate_args->alpha, "Stepsize to test")
      ->required();
  gate_cmd->callback([gate_args]() {
    std::uint64_t seed_used = gate_args->graph.seed;
    const gradpush::DiGraph g = gate_args->graph.load(&seed_used);
    const gradpush::MixingMatrix mix = gradpush::build_mixing(g);
    const gradpush::CostEnsemble ens = gate_args->ensemble.load(g.size());
    const double delta = gradpush::empirical_delta(mix);
    const auto consts =
        gradpush::compute_constants(mix, ens, gate_args->alpha, delta);
    const auto verdict = gradpush::stepsize_gate(consts, gate_args->alpha);
    std::cout << "alpha=" << fmt(gate_args->alpha) << '\n';
    std::cout << "delta=" << fmt(delta) << '\n';
    std::cout << "sigma_w=" << fmt(mix.sigma_w) << '\n';
    std::cout << "alpha_max_smooth=" << fmt(consts.alpha_max_smooth) << '\n';
    std::cout << "alpha_max_gate=" << fmt(consts.alpha_max_gate) << '\n';
    std::cout << "rho=" << fmt(consts.rho) << '\n';
    std::cout << "gate=" << (verdict.admissible ? "admissible" : "rejected")
              << '\n';
    std::cout << "reason=" << verdict.reason << '\n';
    if (!verdict.admissible) std::exit(2);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
