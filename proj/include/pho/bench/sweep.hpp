#pragma once

/**
 * @file
 * @brief Success-map sweeps and cost-vs-budget curves over sampled goal parameters.
 */

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace pho::bench {

struct SweepRow
{
  std::size_t theta_index{0};
  std::string algorithm;
  std::size_t seed_index{0};
  std::uint64_t seed{0};
  RunStatus status{RunStatus::Failed};
  std::size_t queries{0};
  double wall_time{0.0};
  std::optional<double> best_objective;
  std::string error;
};

struct SweepReport
{
  std::vector<Vec> thetas;
  std::vector<std::string> algorithms;
  std::size_t n_seeds{0};
  std::vector<SweepRow> rows;
  /// Full results in row order; kept only when requested.
  std::vector<RunResult> results;

  std::size_t solved_count(const std::string & algorithm) const
  {
    std::size_t n = 0;
    for (const auto & r : rows) { n += (r.algorithm == algorithm && r.status == RunStatus::Solved) ? 1 : 0; }
    return n;
  }

  std::size_t runs(const std::string & algorithm) const
  {
    std::size_t n = 0;
    for (const auto & r : rows) { n += r.algorithm == algorithm ? 1 : 0; }
    return n;
  }
};

/// Goal parameters: the fixed goal, or n samples from the configured ranges on their own stream.
inline std::vector<Vec> sample_thetas(const ExperimentConfig & c, const Vec & fallback_goal)
{
  if (c.theta_ranges.empty()) { return {c.theta_goal ? *c.theta_goal : fallback_goal}; }
  Rng rng(derive_seed(c.base_seed, 0));
  std::vector<Vec> out;
  for (std::size_t i = 0; i < c.n_theta_samples; ++i) {
    Vec th(static_cast<Eigen::Index>(c.theta_ranges.size()));
    for (std::size_t k = 0; k < c.theta_ranges.size(); ++k) {
      const auto [lo, hi] = c.theta_ranges[k];
      th[static_cast<Eigen::Index>(k)] = lo + (hi - lo) * rng.uniform();
    }
    out.push_back(std::move(th));
  }
  return out;
}

/// Seed of the j-th run for every goal parameter; independent of the theta stream.
inline std::uint64_t run_seed(const ExperimentConfig & c, std::size_t seed_index)
{
  return derive_seed(c.base_seed, seed_index + 1);
}

/// Runs one algorithm on one goal parameter.
inline RunResult run_algorithm(
  const ExperimentConfig & c, const ProblemInstance & inst, const AlgorithmConfig & a, const Vec & easy,
  const Vec & goal, std::uint64_t seed)
{
  const ParamMap map = make_map(c, easy, goal, a.kind);
  RunResult r;
  switch (a.kind) {
    case AlgorithmKind::Pho:
      r = run_pho(inst.nlp, map, inst.x0, a.pho, c.budget, seed, c.solver, c.similarity_tol);
      break;
    case AlgorithmKind::Rho: r = run_rho(inst.nlp, map, inst.x0, a.rho, c.budget, seed, c.solver); break;
    case AlgorithmKind::Liho: r = run_liho(inst.nlp, map, inst.x0, a.liho, c.budget, c.solver); break;
    case AlgorithmKind::OneDepth: r = run_one_depth(inst.nlp, map, inst.x0, c.budget, c.solver); break;
  }
  r.seed = seed;
  return r;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path & p)
{
  std::ofstream os(p);
  if (!os) { throw IoError("cannot write " + p.string()); }
  return os;
}

inline void prepare_output_dir(const std::filesystem::path & dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) { throw IoError("cannot create output directory " + dir.string()); }
  const auto probe = dir / ".write_test";
  {
    std::ofstream os(probe);
    if (!os || !(os << "ok")) { throw IoError("output directory is not writable: " + dir.string()); }
  }
  std::filesystem::remove(probe, ec);
}

inline std::string opt_to_string(const std::optional<double> & v) { return v ? pho::detail::format_double(*v) : ""; }

}  // namespace detail

/**
 * @brief Runs every configured algorithm on every sampled goal parameter and seed.
 *
 * Deterministic algorithms (LIHO, one-depth) are run once per goal parameter and their row is
 * repeated for each seed. Exceptions inside a run are recorded as Failed rows.
 */
inline SweepReport run_sweep(const ExperimentConfig & c, std::ostream * progress = nullptr, bool keep_results = false)
{
  c.validate();
  const ProblemInstance inst = make_problem(c.problem);
  const Vec easy = c.theta_easy ? *c.theta_easy : inst.default_easy;
  if (static_cast<std::size_t>(easy.size()) != inst.nlp.param_dim) {
    throw ConfigError("theta_easy has " + std::to_string(easy.size()) + " entries, problem expects "
                      + std::to_string(inst.nlp.param_dim));
  }
  if (!c.theta_ranges.empty() && c.theta_ranges.size() != inst.nlp.param_dim) {
    throw ConfigError("theta_ranges must have one range per parameter");
  }
  if (c.theta_ranges.empty() && !c.theta_goal) { throw ConfigError("config needs theta_goal or theta_ranges"); }
  if (c.theta_goal && static_cast<std::size_t>(c.theta_goal->size()) != inst.nlp.param_dim) {
    throw ConfigError("theta_goal size does not match the problem");
  }

  SweepReport rep;
  rep.n_seeds = c.n_seeds;
  rep.thetas = sample_thetas(c, easy);
  for (const auto & a : c.algorithms) { rep.algorithms.emplace_back(to_string(a.kind)); }
  if (!c.output_dir.empty()) { detail::prepare_output_dir(c.output_dir); }

  for (std::size_t i = 0; i < rep.thetas.size(); ++i) {
    for (const auto & a : c.algorithms) {
      std::optional<RunResult> shared;
      for (std::size_t j = 0; j < c.n_seeds; ++j) {
        SweepRow row;
        row.theta_index = i;
        row.algorithm = std::string(to_string(a.kind));
        row.seed_index = j;
        row.seed = run_seed(c, j);
        RunResult r;
        try {
          if (a.randomized() || !shared) {
            r = run_algorithm(c, inst, a, easy, rep.thetas[i], row.seed);
            if (!a.randomized()) { shared = r; }
          } else {
            r = *shared;
          }
          row.status = r.status;
          row.queries = r.solver_queries;
          row.wall_time = r.wall_time;
          row.best_objective = r.best_objective;
        } catch (const std::exception & e) {
          row.status = RunStatus::Failed;
          row.error = e.what();
        }
        if (c.save_trees && r.tree && !c.output_dir.empty()) {
          const auto dir = std::filesystem::path(c.output_dir) / "trees";
          std::filesystem::create_directories(dir);
          auto os = detail::open_output(
            dir / ("theta" + std::to_string(i) + "_" + row.algorithm + "_seed" + std::to_string(j) + ".tree"));
          r.tree->serialize(os);
        }
        if (progress != nullptr) {
          *progress << "theta " << i << " " << row.algorithm << " seed " << j << ": " << to_string(row.status) << " ("
                    << row.queries << " queries, " << row.wall_time << " s)\n"
                    << std::flush;
        }
        rep.rows.push_back(std::move(row));
        if (keep_results) { rep.results.push_back(std::move(r)); }
      }
    }
  }
  return rep;
}

/// sweep_rows.csv, summary.csv and success_map.csv in `dir`.
inline void write_sweep_report(const SweepReport & rep, const std::filesystem::path & dir)
{
  detail::prepare_output_dir(dir);
  const std::size_t p = rep.thetas.empty() ? 0 : static_cast<std::size_t>(rep.thetas.front().size());
  {
    auto os = detail::open_output(dir / "sweep_rows.csv");
    os << "theta_index";
    for (std::size_t k = 0; k < p; ++k) { os << ",theta" << k; }
    os << ",algorithm,seed,status,queries,wall_time,best_objective,error\n";
    for (const auto & r : rep.rows) {
      os << r.theta_index;
      for (std::size_t k = 0; k < p; ++k) {
        os << ',' << pho::detail::format_double(rep.thetas[r.theta_index][static_cast<Eigen::Index>(k)]);
      }
      os << ',' << r.algorithm << ',' << r.seed << ',' << to_string(r.status) << ',' << r.queries << ','
         << r.wall_time << ',' << detail::opt_to_string(r.best_objective) << ',' << '"' << r.error << '"' << '\n';
    }
  }
  {
    auto os = detail::open_output(dir / "summary.csv");
    os << "algorithm,runs,solved,success_rate\n";
    for (const auto & a : rep.algorithms) {
      const auto n = rep.runs(a);
      const auto s = rep.solved_count(a);
      os << a << ',' << n << ',' << s << ',' << (n > 0 ? static_cast<double>(s) / static_cast<double>(n) : 0.0)
         << '\n';
    }
  }
  {
    auto os = detail::open_output(dir / "success_map.csv");
    os << "theta_index";
    for (std::size_t k = 0; k < p; ++k) { os << ",theta" << k; }
    for (const auto & a : rep.algorithms) { os << ',' << a; }
    os << '\n';
    for (std::size_t i = 0; i < rep.thetas.size(); ++i) {
      os << i;
      for (std::size_t k = 0; k < p; ++k) {
        os << ',' << pho::detail::format_double(rep.thetas[i][static_cast<Eigen::Index>(k)]);
      }
      for (const auto & a : rep.algorithms) {
        std::size_t solved = 0;
        std::size_t runs = 0;
        for (const auto & r : rep.rows) {
          if (r.theta_index == i && r.algorithm == a) {
            ++runs;
            solved += r.status == RunStatus::Solved ? 1 : 0;
          }
        }
        os << ',' << (runs > 0 ? static_cast<double>(solved) / static_cast<double>(runs) : 0.0);
      }
      os << '\n';
    }
  }
}

struct CurvePoint
{
  std::string algorithm;
  std::string unit;  ///< "queries" or "seconds"
  double checkpoint{0.0};
  double success_rate{0.0};
  /// Mean best objective over the runs solved by the checkpoint; empty if none.
  std::optional<double> mean_best_objective;
};

/// Per algorithm and checkpoint: fraction of runs with a goal solution and their mean best objective.
inline std::vector<CurvePoint> budget_curve(const ExperimentConfig & c, const SweepReport & rep)
{
  if (rep.results.size() != rep.rows.size()) { throw ConfigError("budget curve needs the full run results"); }
  std::vector<CurvePoint> out;
  auto add = [&](const std::string & unit, double cp, auto best_of) {
    for (const auto & a : rep.algorithms) {
      std::size_t runs = 0;
      std::size_t solved = 0;
      double sum = 0.0;
      for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (rep.rows[i].algorithm != a) { continue; }
        ++runs;
        if (const auto b = best_of(rep.results[i], cp)) {
          ++solved;
          sum += *b;
        }
      }
      CurvePoint pt{a, unit, cp, runs > 0 ? static_cast<double>(solved) / static_cast<double>(runs) : 0.0, {}};
      if (solved > 0) { pt.mean_best_objective = sum / static_cast<double>(solved); }
      out.push_back(pt);
    }
  };
  for (auto q : c.query_checkpoints) {
    add("queries", static_cast<double>(q), [](const RunResult & r, double cp) {
      return r.best_within_queries(static_cast<std::size_t>(cp));
    });
  }
  for (auto t : c.time_checkpoints) {
    add("seconds", t, [](const RunResult & r, double cp) { return r.best_within_seconds(cp); });
  }
  return out;
}

inline std::vector<CurvePoint> run_budget_curve(const ExperimentConfig & c, std::ostream * progress = nullptr)
{
  if (c.query_checkpoints.empty() && c.time_checkpoints.empty()) {
    throw ConfigError("budget-curve needs checkpoints.queries or checkpoints.seconds");
  }
  const auto rep = run_sweep(c, progress, true);
  return budget_curve(c, rep);
}

inline void write_budget_curve(const std::vector<CurvePoint> & pts, const std::filesystem::path & dir)
{
  detail::prepare_output_dir(dir);
  auto os = detail::open_output(dir / "budget_curve.csv");
  os << "algorithm,unit,checkpoint,success_rate,mean_best_objective\n";
  for (const auto & p : pts) {
    os << p.algorithm << ',' << p.unit << ',' << p.checkpoint << ',' << p.success_rate << ','
       << detail::opt_to_string(p.mean_best_objective) << '\n';
  }
}

}  // namespace pho::bench
