#pragma once

/**
 * @file
 * @brief Experiment configuration read from YAML. Unknown keys are rejected.
 *
 * @code{.yaml}
 * problem:
 *   name: cartpole          # or a synthetic family: bifurcation, double_well, ...
 *   knots: 101
 *   horizon: 5.0
 *   homotopy: per_component # or scalar
 * theta_easy: [20, 1, 200, 0.6, 1.6]
 * theta_goal: [20, 60, 100, 2.0, 1.6]  # fixed goal, or
 * theta_ranges: [[20, 20], [1, 60], [100, 100], [0.6, 2.0], [1.6, 1.6]]
 * algorithms:
 *   - name: pho
 *     P_g: 0.3
 *   - name: liho
 * budget: {max_solver_queries: 200}
 * n_theta_samples: 50
 * n_seeds: 10
 * base_seed: 1
 * output_dir: results
 * checkpoints: {queries: [10, 50, 200]}
 * @endcode
 */

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "../algorithms.hpp"
#include "../problems/cartpole.hpp"
#include "../problems/synthetic.hpp"

namespace pho::bench {

/// Raised when output files cannot be created or written.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class AlgorithmKind { Pho, Rho, Liho, OneDepth };

inline std::string_view to_string(AlgorithmKind k)
{
  switch (k) {
    case AlgorithmKind::Pho: return "pho";
    case AlgorithmKind::Rho: return "rho";
    case AlgorithmKind::Liho: return "liho";
    case AlgorithmKind::OneDepth: return "one_depth";
  }
  return "unknown";
}

struct AlgorithmConfig
{
  AlgorithmKind kind{AlgorithmKind::Pho};
  PhoHyperparams pho;
  RhoHyperparams rho;
  LihoHyperparams liho;

  bool randomized() const { return kind == AlgorithmKind::Pho || kind == AlgorithmKind::Rho; }
};

struct ProblemConfig
{
  std::string name{"cartpole"};
  cartpole::TranscriptionSettings transcription;
  /// "per_component" (one homotopy coordinate per parameter) or "scalar".
  std::string homotopy{"per_component"};
};

struct ExperimentConfig
{
  ProblemConfig problem;
  std::optional<Vec> theta_easy;
  std::optional<Vec> theta_goal;
  std::vector<std::pair<double, double>> theta_ranges;
  std::vector<AlgorithmConfig> algorithms;
  Budget budget{Budget::queries(200)};
  std::size_t n_theta_samples{50};
  std::size_t n_seeds{10};
  std::uint64_t base_seed{1};
  std::string output_dir;
  SolverSettings solver;
  double similarity_tol{OptimizationTree::kDefaultSimilarityTol};
  bool save_trees{false};
  std::vector<std::size_t> query_checkpoints;
  std::vector<double> time_checkpoints;

  void validate() const
  {
    if (algorithms.empty()) { throw ConfigError("config: at least one algorithm is required"); }
    if (n_seeds < 1) { throw ConfigError("config: n_seeds must be at least 1"); }
    if (!theta_ranges.empty() && theta_goal) { throw ConfigError("config: give either theta_goal or theta_ranges"); }
    for (const auto & [lo, hi] : theta_ranges) {
      if (!(lo <= hi)) { throw ConfigError("config: every theta range needs lo <= hi"); }
    }
    if (problem.homotopy != "per_component" && problem.homotopy != "scalar") {
      throw ConfigError("config: problem.homotopy must be per_component or scalar");
    }
    if (!(similarity_tol >= 0.0)) { throw ConfigError("config: similarity_tol must be non-negative"); }
    budget.validate();
    solver.validate();
    for (std::size_t i = 1; i < query_checkpoints.size(); ++i) {
      if (query_checkpoints[i] <= query_checkpoints[i - 1]) {
        throw ConfigError("config: query checkpoints must be strictly increasing");
      }
    }
    for (std::size_t i = 1; i < time_checkpoints.size(); ++i) {
      if (time_checkpoints[i] <= time_checkpoints[i - 1]) {
        throw ConfigError("config: time checkpoints must be strictly increasing");
      }
    }
    for (const auto & a : algorithms) {
      a.pho.validate();
      a.rho.validate();
      a.liho.validate();
    }
  }
};

namespace detail {

class MapReader
{
public:
  MapReader(const YAML::Node & node, std::string where) : node_(node), where_(std::move(where))
  {
    if (node_ && !node_.IsMap()) { throw ConfigError(where_ + ": expected a mapping"); }
  }

  template <class T>
  void get(const std::string & key, T & out)
  {
    seen_.insert(key);
    if (!node_ || !node_[key]) { return; }
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception &) {
      throw ConfigError(where_ + "." + key + ": invalid value");
    }
  }

  YAML::Node child(const std::string & key)
  {
    seen_.insert(key);
    return node_ ? node_[key] : YAML::Node();
  }

  void finish() const
  {
    if (!node_) { return; }
    for (const auto & kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) { throw ConfigError(where_ + ": unknown key '" + key + "'"); }
    }
  }

private:
  YAML::Node node_;
  std::string where_;
  std::set<std::string> seen_;
};

inline Vec read_vector(const YAML::Node & n, const std::string & where)
{
  if (!n.IsSequence()) { throw ConfigError(where + ": expected a list of numbers"); }
  Vec v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) {
    try {
      v[static_cast<Eigen::Index>(i)] = n[i].as<double>();
    } catch (const YAML::Exception &) {
      throw ConfigError(where + ": entry " + std::to_string(i) + " is not a number");
    }
  }
  return v;
}

inline AlgorithmConfig read_algorithm(const YAML::Node & n, std::size_t index)
{
  const std::string where = "algorithms[" + std::to_string(index) + "]";
  MapReader r(n, where);
  std::string name;
  r.get("name", name);
  AlgorithmConfig a;
  if (name == "pho") {
    a.kind = AlgorithmKind::Pho;
    r.get("P_g", a.pho.P_g);
    r.get("rho_A", a.pho.rho_A);
    r.get("q", a.pho.q);
    r.get("stop_at_first_goal", a.pho.stop_at_first_goal);
  } else if (name == "rho") {
    a.kind = AlgorithmKind::Rho;
    r.get("P_g", a.rho.P_g);
    r.get("q", a.rho.q);
  } else if (name == "liho") {
    a.kind = AlgorithmKind::Liho;
    r.get("k1", a.liho.k1);
    r.get("c1", a.liho.c1);
    r.get("k2", a.liho.k2);
    r.get("c2", a.liho.c2);
    r.get("epsilon", a.liho.epsilon);
    r.get("delta_lambda_0", a.liho.delta_lambda_0);
    r.get("rollback", a.liho.rollback);
  } else if (name == "one_depth") {
    a.kind = AlgorithmKind::OneDepth;
  } else {
    throw ConfigError(where + ": unknown algorithm '" + name + "'");
  }
  r.finish();
  return a;
}

inline void read_solver(const YAML::Node & n, SolverSettings & s)
{
  MapReader r(n, "solver");
  r.get("max_outer_iters", s.max_outer_iters);
  r.get("max_inner_iters", s.max_inner_iters);
  r.get("kkt_tol", s.kkt_tol);
  r.get("eq_tol", s.eq_tol);
  r.get("bound_tol", s.bound_tol);
  r.get("penalty_init", s.penalty_init);
  r.get("penalty_growth", s.penalty_growth);
  r.get("penalty_max", s.penalty_max);
  r.get("inner_step_tol", s.inner_step_tol);
  r.get("max_wall_time", s.max_wall_time);
  std::string method;
  r.get("inner_method", method);
  if (method == "projected_gradient") {
    s.inner_method = InnerMethod::ProjectedGradient;
  } else if (!method.empty() && method != "projected_newton") {
    throw ConfigError("solver.inner_method: expected projected_newton or projected_gradient");
  }
  r.finish();
}

}  // namespace detail

inline ExperimentConfig parse_config(const YAML::Node & root)
{
  if (!root.IsMap()) { throw ConfigError("config: top level must be a mapping"); }
  ExperimentConfig c;
  detail::MapReader top(root, "config");
  {
    detail::MapReader p(top.child("problem"), "problem");
    p.get("name", c.problem.name);
    p.get("knots", c.problem.transcription.knots);
    p.get("horizon", c.problem.transcription.horizon);
    p.get("gravity", c.problem.transcription.gravity);
    p.get("homotopy", c.problem.homotopy);
    p.finish();
  }
  if (auto n = top.child("theta_easy")) { c.theta_easy = detail::read_vector(n, "theta_easy"); }
  if (auto n = top.child("theta_goal")) { c.theta_goal = detail::read_vector(n, "theta_goal"); }
  if (auto n = top.child("theta_ranges")) {
    if (!n.IsSequence()) { throw ConfigError("theta_ranges: expected a list of [lo, hi] pairs"); }
    for (std::size_t i = 0; i < n.size(); ++i) {
      const Vec r = detail::read_vector(n[i], "theta_ranges[" + std::to_string(i) + "]");
      if (r.size() != 2) { throw ConfigError("theta_ranges[" + std::to_string(i) + "]: expected [lo, hi]"); }
      c.theta_ranges.emplace_back(r[0], r[1]);
    }
  }
  if (auto n = top.child("algorithms")) {
    if (!n.IsSequence()) { throw ConfigError("algorithms: expected a list"); }
    for (std::size_t i = 0; i < n.size(); ++i) { c.algorithms.push_back(detail::read_algorithm(n[i], i)); }
  }
  {
    detail::MapReader b(top.child("budget"), "budget");
    b.get("max_solver_queries", c.budget.max_solver_queries);
    b.get("max_wall_time", c.budget.max_wall_time);
    b.finish();
  }
  top.get("n_theta_samples", c.n_theta_samples);
  top.get("n_seeds", c.n_seeds);
  top.get("base_seed", c.base_seed);
  top.get("output_dir", c.output_dir);
  top.get("similarity_tol", c.similarity_tol);
  top.get("save_trees", c.save_trees);
  if (auto n = top.child("solver")) { detail::read_solver(n, c.solver); }
  {
    detail::MapReader k(top.child("checkpoints"), "checkpoints");
    k.get("queries", c.query_checkpoints);
    k.get("seconds", c.time_checkpoints);
    k.finish();
  }
  top.finish();
  if (c.output_dir.empty()) {
    const char * env = std::getenv("PHO_OUTPUT_DIR");
    c.output_dir = env != nullptr ? env : "pho_results";
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path & path)
{
  if (!std::filesystem::exists(path)) { throw ConfigError("config file not found: " + path.string()); }
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception & e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(root);
}

/// A configured problem with everything needed to build parameter maps.
struct ProblemInstance
{
  ParamNLP nlp;
  Vec x0;
  Vec default_easy;
  std::optional<synthetic::SyntheticProblem> synthetic;
  std::optional<cartpole::TranscriptionSettings> transcription;
};

inline ProblemInstance make_problem(const ProblemConfig & pc)
{
  ProblemInstance inst;
  if (pc.name == "cartpole") {
    pc.transcription.validate();
    inst.nlp = cartpole::build_nlp(pc.transcription);
    inst.x0 = Vec::Zero(static_cast<Eigen::Index>(inst.nlp.n_vars));
    inst.default_easy = cartpole::easy_params().to_vector();
    inst.transcription = pc.transcription;
    return inst;
  }
  auto sp = synthetic::make_synthetic(synthetic::kind_from_string(pc.name));
  inst.nlp = sp.nlp;
  inst.x0 = sp.x0;
  inst.default_easy = sp.map.theta_easy;
  inst.synthetic = std::move(sp);
  return inst;
}

/// Parameter map used for an algorithm; LIHO always gets a scalar one.
inline ParamMap make_map(const ExperimentConfig & c, const Vec & easy, const Vec & goal, AlgorithmKind kind)
{
  if (kind == AlgorithmKind::Liho || c.problem.homotopy == "scalar") { return ParamMap::scalar(easy, goal); }
  return ParamMap::per_component(easy, goal);
}

}  // namespace pho::bench
