#include "gradpush/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "text_util.hpp"

namespace gradpush {

void ExperimentConfig::validate() const {
  if (n < 1 || d < 1 || m < 1)
    throw std::invalid_argument("config: n, d, m must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("config: p must lie in [0, 1]");
  if (alpha_list.empty())
    throw std::invalid_argument("config: alpha_list must be nonempty");
  for (double a : alpha_list)
    if (!(a > 0.0))
      throw std::invalid_argument("config: stepsizes must be positive");
  if (iters < 1) throw std::invalid_argument("config: iters must be >= 1");
  if (output_dir.empty())
    throw std::invalid_argument("config: output_dir must be set");
}

ExperimentConfig read_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view key, value;
    if (!detail::split_key_value(line, &key, &value)) continue;
    if (key == "cost_kind") {
      if (value == "least_squares") {
        cfg.cost_kind = CostKind::least_squares;
      } else if (value == "quadratic") {
        cfg.cost_kind = CostKind::quadratic;
      } else {
        throw std::invalid_argument("config: bad cost_kind '" +
                                    std::string(value) + "'");
      }
    } else if (key == "n") {
      cfg.n = static_cast<int>(detail::parse_long(value, "config n"));
    } else if (key == "d") {
      cfg.d = static_cast<int>(detail::parse_long(value, "config d"));
    } else if (key == "m") {
      cfg.m = static_cast<int>(detail::parse_long(value, "config m"));
    } else if (key == "p") {
      cfg.p = detail::parse_double(value, "config p");
    } else if (key == "alpha_list") {
      cfg.alpha_list.clear();
      std::size_t pos = 0;
      while (pos <= value.size()) {
        const std::size_t comma = value.find(',', pos);
        const auto piece = detail::trim(
            value.substr(pos, comma == std::string_view::npos
                                  ? std::string_view::npos
                                  : comma - pos));
        if (!piece.empty())
          cfg.alpha_list.push_back(
              detail::parse_double(piece, "config alpha_list"));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
      }
    } else if (key == "iters") {
      cfg.iters = detail::parse_long(value, "config iters");
    } else if (key == "graph_seed") {
      cfg.graph_seed = detail::parse_u64(value, "config graph_seed");
    } else if (key == "cost_seed") {
      cfg.cost_seed = detail::parse_u64(value, "config cost_seed");
    } else if (key == "output_dir") {
      cfg.output_dir = std::string(value);
    } else {
      throw std::invalid_argument("config: unknown key '" + std::string(key) +
                                  "'");
    }
  }
  cfg.validate();
  return cfg;
}

void write_config(const ExperimentConfig& cfg, std::ostream& out) {
  out << "cost_kind="
      << (cfg.cost_kind == CostKind::least_squares ? "least_squares"
                                                   : "quadratic")
      << '\n';
  out << "n=" << cfg.n << '\n';
  out << "d=" << cfg.d << '\n';
  out << "m=" << cfg.m << '\n';
  out << "p=" << detail::format_double(cfg.p) << '\n';
  out << "alpha_list=";
  for (std::size_t i = 0; i < cfg.alpha_list.size(); ++i) {
    if (i) out << ',';
    out << detail::format_double(cfg.alpha_list[i]);
  }
  out << '\n';
  out << "iters=" << cfg.iters << '\n';
  out << "graph_seed=" << cfg.graph_seed << '\n';
  out << "cost_seed=" << cfg.cost_seed << '\n';
  out << "output_dir=" << cfg.output_dir.string() << '\n';
}

DiGraph generate_connected_digraph(int n, double p, std::uint64_t seed,
                                   std::uint64_t* seed_used,
                                   long max_attempts) {
  for (long attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    DiGraph g = random_digraph(n, p, s);
    if (is_strongly_connected(g)) {
      if (seed_used) *seed_used = s;
      return g;
    }
  }
  throw std::runtime_error(
      "generate_connected_digraph: no strongly connected draw within " +
      std::to_string(max_attempts) + " seeds from " + std::to_string(seed));
}

Instance build_instance(const ExperimentConfig& cfg) {
  cfg.validate();
  std::uint64_t seed_used = cfg.graph_seed;
  DiGraph graph =
      generate_connected_digraph(cfg.n, cfg.p, cfg.graph_seed, &seed_used);
  MixingMatrix mix = build_mixing(graph);
  CostEnsemble costs =
      cfg.cost_kind == CostKind::least_squares
          ? least_squares_ensemble(cfg.n, cfg.d, cfg.m, cfg.cost_seed)
          : quadratic_ensemble(cfg.n, cfg.d, cfg.cost_seed);
  return Instance{std::move(graph), std::move(mix), std::move(costs),
                  seed_used};
}

double floor_estimate(const std::vector<double>& sum_sq_err) {
  if (sum_sq_err.empty())
    throw std::invalid_argument("floor_estimate: empty column");
  const std::size_t rows = sum_sq_err.size();
  const std::size_t tail = std::max<std::size_t>(1, rows / 10);
  std::vector<double> window(sum_sq_err.end() - tail, sum_sq_err.end());
  std::sort(window.begin(), window.end());
  const std::size_t mid = window.size() / 2;
  if (window.size() % 2 == 1) return window[mid];
  return 0.5 * (window[mid - 1] + window[mid]);
}

long floor_crossing(const std::vector<double>& sum_sq_err, double floor) {
  for (std::size_t t = 0; t < sum_sq_err.size(); ++t)
    if (sum_sq_err[t] <= 1.05 * floor) return static_cast<long>(t);
  return static_cast<long>(sum_sq_err.size()) - 1;
}

namespace {

std::string alpha_tag(double alpha) { return detail::format_double(alpha); }

void write_summary_csv(const SweepSummary& summary,
                       const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out << "alpha,floor,t_floor,gate,sigma_w,delta,rho\n";
    for (const SweepRow& row : summary.rows) {
      out << detail::format_double(row.alpha) << ','
          << detail::format_double(row.floor) << ',' << row.t_floor << ','
          << (row.gate_admissible ? "admissible" : "rejected") << ','
          << detail::format_double(row.sigma_w) << ','
          << detail::format_double(row.delta) << ','
          << detail::format_double(row.rho) << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

SweepSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<std::filesystem::path> written;
  auto cleanup = [&written]() {
    for (const auto& p : written) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  };
  try {
    Instance inst = build_instance(cfg);
    SweepSummary summary;
    summary.graph_seed_used = inst.graph_seed_used;
    summary.cost_seed_used = inst.costs.seed;
    summary.output_dir = cfg.output_dir;

    {
      const auto path = cfg.output_dir / "graph.txt";
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      write_edge_list(inst.graph, out);
      written.push_back(path);
    }
    {
      const auto path = cfg.output_dir / "ensemble.txt";
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      write_ensemble(inst.costs, out);
      written.push_back(path);
    }

    const Eigen::VectorXd x0 =
        Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.n) * cfg.d);
    const double limit_delta = 1.0 / (cfg.n * inst.mix.pi.minCoeff());
    for (double alpha : cfg.alpha_list) {
      RunRecord rec = run(inst.mix, inst.costs, alpha, cfg.iters, x0);
      if (rec.diverged)
        throw std::runtime_error(
            "run_experiment: run diverged at iteration " +
            std::to_string(rec.fail_t) + " (agent " +
            std::to_string(rec.fail_agent) + ") for alpha = " +
            detail::format_double(alpha));
      const auto path =
          cfg.output_dir / ("run_alpha_" + alpha_tag(alpha) + ".csv");
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      rec.write_csv(out);
      written.push_back(path);
      summary.run_files.push_back(path);

      SweepRow row;
      row.alpha = alpha;
      row.floor = floor_estimate(rec.sum_sq_err);
      row.t_floor = floor_crossing(rec.sum_sq_err, row.floor);
      row.delta = std::max(rec.delta_running.back(), limit_delta);
      const TheoryConstants consts =
          compute_constants(inst.mix, inst.costs, alpha, row.delta);
      row.gate_admissible = stepsize_gate(consts, alpha).admissible;
      row.sigma_w = inst.mix.sigma_w;
      row.rho = consts.rho;
      summary.rows.push_back(row);
    }

    const auto summary_path = cfg.output_dir / "summary.csv";
    write_summary_csv(summary, summary_path);
    return summary;
  } catch (...) {
    cleanup();
    throw;
  }
}

RatioCheck sweep_ratio_check(const SweepSummary& summary) {
  if (summary.rows.size() < 2)
    throw std::invalid_argument(
        "sweep_ratio_check: need at least two stepsizes");
  std::vector<SweepRow> rows = summary.rows;
  std::sort(rows.begin(), rows.end(),
            [](const SweepRow& a, const SweepRow& b) {
              return a.alpha > b.alpha;
            });

  // Below this the floor is numerical noise rather than a stepsize floor.
  constexpr double kMeasurable = 1e-26;

  RatioCheck check;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double ratio_alpha = rows[i].alpha / rows[i + 1].alpha;
    if (ratio_alpha < 9.5 || ratio_alpha > 10.5) continue;  // not a decade
    RatioCheck::Pair pair;
    pair.alpha_hi = rows[i].alpha;
    pair.alpha_lo = rows[i + 1].alpha;
    if (rows[i].floor <= kMeasurable || rows[i + 1].floor <= kMeasurable) {
      pair.below_floor = true;
      pair.pass = true;
      pair.ratio = 0.0;
      check.note = "some floors are below the measurable level";
    } else {
      pair.ratio = rows[i].floor / rows[i + 1].floor;
      pair.pass = pair.ratio >= 10.0 && pair.ratio <= 1000.0;
    }
    if (!pair.pass) check.pass = false;
    check.pairs.push_back(pair);
  }
  if (check.pairs.empty())
    check.note = "no adjacent-decade stepsize pairs to compare";
  return check;
}

}  // namespace gradpush
