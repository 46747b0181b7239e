#pragma once

/**
 * @file
 * @brief Optimization tree: solutions (nodes), candidate homotopy points and the record of
 * which (node, point) solve attempts have been made.
 */

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlp.hpp"

namespace pho {

using NodeId = std::size_t;
using ParamId = std::size_t;

/// Raised on contract violations such as unknown ids or repeated attempts.
class TreeError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

/// Raised when a serialized tree cannot be read back.
class ParseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct TreeNode
{
  NodeId id{0};
  Vec x_star;
  ParamId lambda_id{0};
  std::optional<NodeId> parent;
  double objective{0.0};
};

/// Which existing nodes a new solution is compared against before admission.
enum class UniquenessScope { SameLambda, AllNodes };

struct GoalSolution
{
  Vec x_star;
  double objective;
};

class OptimizationTree
{
public:
  static constexpr double kDefaultSimilarityTol = 1e-3;

  OptimizationTree() = default;

  /// Root node at 0_d with parameter set {1_d, 0_d}.
  static OptimizationTree init(
    std::size_t homotopy_dim, Vec root_solution, double objective, double similarity_tol = kDefaultSimilarityTol,
    UniquenessScope scope = UniquenessScope::SameLambda)
  {
    if (homotopy_dim == 0) { throw ConfigError("tree: homotopy dimension must be positive"); }
    if (!(similarity_tol >= 0.0)) { throw ConfigError("tree: similarity tolerance must be non-negative"); }
    OptimizationTree t;
    t.similarity_tol_ = similarity_tol;
    t.scope_ = scope;
    t.params_.push_back(HomotopyPoint::ones(homotopy_dim));
    t.params_.push_back(HomotopyPoint::zeros(homotopy_dim));
    t.nodes_.push_back(TreeNode{0, std::move(root_solution), 1, std::nullopt, objective});
    return t;
  }

  const std::vector<TreeNode> & nodes() const { return nodes_; }
  const std::vector<HomotopyPoint> & params() const { return params_; }
  const std::set<std::pair<NodeId, ParamId>> & attempts() const { return attempts_; }
  double similarity_tol() const { return similarity_tol_; }
  UniquenessScope scope() const { return scope_; }

  const TreeNode & node(NodeId id) const
  {
    if (id >= nodes_.size()) { throw TreeError("unknown node id " + std::to_string(id)); }
    return nodes_[id];
  }
  const HomotopyPoint & param(ParamId id) const
  {
    if (id >= params_.size()) { throw TreeError("unknown parameter id " + std::to_string(id)); }
    return params_[id];
  }
  const HomotopyPoint & lambda_of(NodeId id) const { return param(node(id).lambda_id); }

  /// Id of the goal point 1_d, which is always present.
  static constexpr ParamId goal_id() { return 0; }

  double solve_sample_ratio() const
  {
    if (nodes_.empty() || params_.empty()) { return 0.0; }
    return static_cast<double>(attempts_.size())
           / (static_cast<double>(nodes_.size()) * static_cast<double>(params_.size()));
  }

  bool attempted(NodeId n, ParamId p) const { return attempts_.count({n, p}) > 0; }

  void record_attempt(NodeId n, ParamId p)
  {
    node(n);
    param(p);
    if (!attempts_.insert({n, p}).second) {
      throw TreeError("attempt (" + std::to_string(n) + ", " + std::to_string(p) + ") already recorded");
    }
  }

  /// Adds a homotopy point unless an exactly equal one exists; returns its id either way.
  ParamId add_param(const HomotopyPoint & lambda)
  {
    if (!params_.empty() && lambda.dim() != params_.front().dim()) {
      throw TreeError("homotopy point dimension does not match the tree");
    }
    for (ParamId i = 0; i < params_.size(); ++i) {
      if (params_[i] == lambda) { return i; }
    }
    params_.push_back(lambda);
    return params_.size() - 1;
  }

  /// True if some node in the uniqueness scope lies within similarity_tol of x.
  bool has_similar(const Vec & x, ParamId lambda_id) const
  {
    for (const auto & n : nodes_) {
      if (scope_ == UniquenessScope::SameLambda && n.lambda_id != lambda_id) { continue; }
      if (n.x_star.size() == x.size() && (n.x_star - x).lpNorm<Eigen::Infinity>() <= similarity_tol_) { return true; }
    }
    return false;
  }

  /// Appends the node unless a similar one already exists. The caller has checked feasibility.
  std::optional<NodeId> admit_node(Vec x, ParamId lambda_id, NodeId parent, double objective)
  {
    node(parent);
    param(lambda_id);
    if (has_similar(x, lambda_id)) { return std::nullopt; }
    return append(std::move(x), lambda_id, parent, objective);
  }

  /// Appends the node without a similarity check.
  NodeId add_node(Vec x, ParamId lambda_id, NodeId parent, double objective)
  {
    node(parent);
    param(lambda_id);
    return append(std::move(x), lambda_id, parent, objective);
  }

  /// Node with the closest homotopy point in Euclidean distance; ties go to the lower id.
  NodeId nearest_node(const HomotopyPoint & lambda) const
  {
    if (nodes_.empty()) { throw TreeError("nearest_node on an empty tree"); }
    NodeId best = 0;
    double best_d = kInf;
    for (const auto & n : nodes_) {
      const double d = lambda.distance(params_[n.lambda_id]);
      if (d < best_d) {
        best_d = d;
        best = n.id;
      }
    }
    return best;
  }

  std::vector<NodeId> goal_nodes() const
  {
    std::vector<NodeId> out;
    for (const auto & n : nodes_) {
      if (params_[n.lambda_id].is_goal()) { out.push_back(n.id); }
    }
    return out;
  }

  std::vector<GoalSolution> solutions_at_goal() const
  {
    std::vector<GoalSolution> out;
    for (auto id : goal_nodes()) { out.push_back({nodes_[id].x_star, nodes_[id].objective}); }
    return out;
  }

  /// Node ids from the root to `id`, inclusive.
  std::vector<NodeId> path_to(NodeId id) const
  {
    std::vector<NodeId> path;
    std::optional<NodeId> cur = node(id).id;
    while (cur) {
      path.push_back(*cur);
      cur = nodes_[*cur].parent;
    }
    return {path.rbegin(), path.rend()};
  }

  friend bool operator==(const OptimizationTree & a, const OptimizationTree & b)
  {
    if (a.similarity_tol_ != b.similarity_tol_ || a.scope_ != b.scope_ || a.params_ != b.params_
        || a.attempts_ != b.attempts_ || a.nodes_.size() != b.nodes_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      const auto & x = a.nodes_[i];
      const auto & y = b.nodes_[i];
      if (x.id != y.id || x.lambda_id != y.lambda_id || x.parent != y.parent || x.objective != y.objective
          || x.x_star.size() != y.x_star.size() || !(x.x_star.array() == y.x_star.array()).all()) {
        return false;
      }
    }
    return true;
  }

  void serialize(std::ostream & os) const;
  static OptimizationTree deserialize(std::istream & is);

private:
  NodeId append(Vec x, ParamId lambda_id, NodeId parent, double objective)
  {
    const NodeId id = nodes_.size();
    nodes_.push_back(TreeNode{id, std::move(x), lambda_id, parent, objective});
    return id;
  }

  std::vector<TreeNode> nodes_;
  std::vector<HomotopyPoint> params_;
  std::set<std::pair<NodeId, ParamId>> attempts_;
  double similarity_tol_{kDefaultSimilarityTol};
  UniquenessScope scope_{UniquenessScope::SameLambda};
};

namespace detail {

/// Shortest text that reads back to the same double.
inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class LineReader
{
public:
  explicit LineReader(std::istream & is) : is_(is) {}

  std::istringstream next(const char * what)
  {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') { line.pop_back(); }
      if (line.find_first_not_of(" \t") == std::string::npos) { continue; }
      return std::istringstream(line);
    }
    fail(std::string("unexpected end of input, expected ") + what);
  }

  [[noreturn]] void fail(const std::string & msg) const
  {
    throw ParseError("tree file line " + std::to_string(line_no_) + ": " + msg);
  }

  template <class T>
  T field(std::istringstream & ss, const char * what) const
  {
    std::string tok;
    if (!(ss >> tok)) { fail(std::string("missing field '") + what + "'"); }
    try {
      std::size_t used = 0;
      T v{};
      if constexpr (std::is_same_v<T, double>) {
        v = std::stod(tok, &used);
      } else {
        const long long n = std::stoll(tok, &used);
        if (n < 0) { fail(std::string("negative value for '") + what + "'"); }
        v = static_cast<T>(n);
      }
      if (used != tok.size()) { throw std::invalid_argument(tok); }
      return v;
    } catch (const std::logic_error &) {
      fail(std::string("bad value '") + tok + "' for '" + what + "'");
    }
  }

  void keyword(std::istringstream & ss, const std::string & expected) const
  {
    std::string tok;
    ss >> tok;
    if (tok != expected) { fail("expected '" + expected + "', found '" + tok + "'"); }
  }

  void end(std::istringstream & ss) const
  {
    std::string extra;
    if (ss >> extra) { fail("unexpected trailing field '" + extra + "'"); }
  }

private:
  std::istream & is_;
  std::size_t line_no_{0};
};

}  // namespace detail

/*
 * homotopy-tree v1
 * similarity_tol <tol> scope <same_lambda|all_nodes>
 * params <count> <dim>
 * <id> <lambda...>
 * nodes <count> <n_vars>
 * <id> <parent|-> <lambda_id> <objective> <x...>
 * attempts <count>
 * <node_id> <lambda_id>
 */
inline void OptimizationTree::serialize(std::ostream & os) const
{
  using detail::format_double;
  const std::size_t dim = params_.empty() ? 0 : params_.front().dim();
  const auto n_vars = nodes_.empty() ? 0 : nodes_.front().x_star.size();
  os << "homotopy-tree v1\n";
  os << "similarity_tol " << format_double(similarity_tol_) << " scope "
     << (scope_ == UniquenessScope::SameLambda ? "same_lambda" : "all_nodes") << '\n';
  os << "params " << params_.size() << ' ' << dim << '\n';
  for (ParamId i = 0; i < params_.size(); ++i) {
    os << i;
    for (std::size_t k = 0; k < dim; ++k) { os << ' ' << format_double(params_[i][k]); }
    os << '\n';
  }
  os << "nodes " << nodes_.size() << ' ' << n_vars << '\n';
  for (const auto & n : nodes_) {
    os << n.id << ' ' << (n.parent ? std::to_string(*n.parent) : std::string("-")) << ' ' << n.lambda_id << ' '
       << format_double(n.objective);
    for (Eigen::Index k = 0; k < n.x_star.size(); ++k) { os << ' ' << format_double(n.x_star[k]); }
    os << '\n';
  }
  os << "attempts " << attempts_.size() << '\n';
  for (const auto & [n, p] : attempts_) { os << n << ' ' << p << '\n'; }
}

inline OptimizationTree OptimizationTree::deserialize(std::istream & is)
{
  detail::LineReader in(is);
  OptimizationTree t;
  {
    std::string header;
    auto ss = in.next("header");
    std::getline(ss, header);
    if (header != "homotopy-tree v1") { in.fail("expected header 'homotopy-tree v1'"); }
  }
  {
    auto ss = in.next("similarity_tol line");
    in.keyword(ss, "similarity_tol");
    t.similarity_tol_ = in.field<double>(ss, "similarity_tol");
    in.keyword(ss, "scope");
    std::string scope;
    ss >> scope;
    if (scope == "same_lambda") {
      t.scope_ = UniquenessScope::SameLambda;
    } else if (scope == "all_nodes") {
      t.scope_ = UniquenessScope::AllNodes;
    } else {
      in.fail("unknown scope '" + scope + "'");
    }
    in.end(ss);
  }
  auto ss = in.next("params section");
  in.keyword(ss, "params");
  const auto n_params = in.field<std::size_t>(ss, "param count");
  const auto dim = in.field<std::size_t>(ss, "param dimension");
  in.end(ss);
  for (std::size_t i = 0; i < n_params; ++i) {
    auto row = in.next("param row");
    if (in.field<std::size_t>(row, "param id") != i) { in.fail("param ids must be consecutive from 0"); }
    Vec l(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) { l[static_cast<Eigen::Index>(k)] = in.field<double>(row, "lambda"); }
    in.end(row);
    try {
      t.params_.emplace_back(std::move(l));
    } catch (const ConfigError & e) {
      in.fail(e.what());
    }
  }
  ss = in.next("nodes section");
  in.keyword(ss, "nodes");
  const auto n_nodes = in.field<std::size_t>(ss, "node count");
  const auto n_vars = in.field<std::size_t>(ss, "variable count");
  in.end(ss);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto row = in.next("node row");
    TreeNode n;
    n.id = in.field<std::size_t>(row, "node id");
    if (n.id != i) { in.fail("node ids must be consecutive from 0"); }
    std::string parent;
    row >> parent;
    if (parent != "-") {
      std::istringstream ps(parent);
      n.parent = in.field<std::size_t>(ps, "parent");
      if (*n.parent >= i) { in.fail("parent must precede its child"); }
    }
    n.lambda_id = in.field<std::size_t>(row, "lambda_id");
    if (n.lambda_id >= n_params) { in.fail("lambda_id out of range"); }
    n.objective = in.field<double>(row, "objective");
    n.x_star.resize(static_cast<Eigen::Index>(n_vars));
    for (std::size_t k = 0; k < n_vars; ++k) { n.x_star[static_cast<Eigen::Index>(k)] = in.field<double>(row, "x_star"); }
    in.end(row);
    t.nodes_.push_back(std::move(n));
  }
  ss = in.next("attempts section");
  in.keyword(ss, "attempts");
  const auto n_attempts = in.field<std::size_t>(ss, "attempt count");
  in.end(ss);
  for (std::size_t i = 0; i < n_attempts; ++i) {
    auto row = in.next("attempt row");
    const auto n = in.field<std::size_t>(row, "node_id");
    const auto p = in.field<std::size_t>(row, "lambda_id");
    in.end(row);
    if (n >= n_nodes || p >= n_params) { in.fail("attempt refers to a missing node or parameter"); }
    if (!t.attempts_.insert({n, p}).second) { in.fail("duplicate attempt"); }
  }
  return t;
}

}  // namespace pho
