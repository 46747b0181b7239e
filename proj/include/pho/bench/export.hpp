#pragma once

/// @file
/// @brief Export of the cart-pole trajectories along a tree path from the root to a goal node.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "../problems/cartpole.hpp"
#include "../tree.hpp"
#include "sweep.hpp"

namespace pho::bench {

struct EvolutionStep
{
  NodeId node{0};
  HomotopyPoint lambda;
  double objective{0.0};
  int swings{0};
};

/// Path from the root to the goal node with the lowest objective.
inline std::vector<EvolutionStep> trajectory_evolution(
  const OptimizationTree & tree, const cartpole::TranscriptionSettings & ts = {})
{
  const auto goals = tree.goal_nodes();
  if (goals.empty()) { throw TreeError("tree has no node at the goal"); }
  NodeId best = goals.front();
  for (auto g : goals) {
    if (tree.node(g).objective < tree.node(best).objective) { best = g; }
  }
  std::vector<EvolutionStep> out;
  for (auto id : tree.path_to(best)) {
    const auto & n = tree.node(id);
    out.push_back({id, tree.param(n.lambda_id), n.objective, cartpole::swing_count(n.x_star, ts)});
  }
  return out;
}

/**
 * Writes step_<k>.csv (t, x, xdot, phi, phidot, F) for every node on the path plus
 * evolution_summary.csv with one row per step. Returns the steps.
 */
inline std::vector<EvolutionStep> export_trajectory_evolution(
  const OptimizationTree & tree, const std::filesystem::path & dir, const cartpole::TranscriptionSettings & ts = {})
{
  const auto steps = trajectory_evolution(tree, ts);
  detail::prepare_output_dir(dir);
  const std::size_t d = steps.front().lambda.dim();
  auto summary = detail::open_output(dir / "evolution_summary.csv");
  summary << "step,node";
  for (std::size_t k = 0; k < d; ++k) { summary << ",lambda" << k; }
  summary << ",objective,swings\n";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto os = detail::open_output(dir / ("step_" + std::to_string(i) + ".csv"));
    cartpole::write_trajectory_csv(os, tree.node(steps[i].node).x_star, ts);
    summary << i << ',' << steps[i].node;
    for (std::size_t k = 0; k < d; ++k) { summary << ',' << pho::detail::format_double(steps[i].lambda[k]); }
    summary << ',' << pho::detail::format_double(steps[i].objective) << ',' << steps[i].swings << '\n';
  }
  return steps;
}

}  // namespace pho::bench
