#pragma once

#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relucert/lp.hpp"
#include "relucert/simplex.hpp"
#include "relucert/tighten.hpp"

namespace relucert {

enum class Phase : std::uint8_t { unfixed, active, inactive };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::active: return "active";
    case Phase::inactive: return "inactive";
    default: return "unfixed";
  }
}

struct AlreadyFixed : std::logic_error {
  AlreadyFixed() : std::logic_error("ReLU constraint is already fixed on this path") {}
};

struct SplitInfo {
  std::size_t relu_index = 0;
  Phase phase = Phase::unfixed;
};

template <typename S>
struct GroundUpdate {
  VarId var = 0;
  Side side = Side::upper;
  S value{};
};

/// One node of the proof tree: split metadata, the facts the split added,
/// lemmas discovered while solving, and either a contradiction (leaf) or
/// exactly two children.
template <typename S>
struct ProofNode {
  std::optional<SplitInfo> split;
  std::vector<Equation<S>> added_equations;
  std::vector<GroundUpdate<S>> ground_updates;
  std::vector<Lemma<S>> lemmas;
  std::optional<Contradiction<S>> contradiction;
  std::vector<std::unique_ptr<ProofNode<S>>> children;

  bool is_leaf() const { return children.empty(); }

  std::size_t count_leaves() const {
    if (is_leaf()) return 1;
    std::size_t n = 0;
    for (const auto& c : children) n += c->count_leaves();
    return n;
  }
};

template <typename S>
struct ProofTree {
  Query<S> query;
  std::size_t num_inputs = 0;
  std::unique_ptr<ProofNode<S>> root;
};

/// Everything the solver needs at one search node. Nodes are solved from a
/// fresh tableau; only bounds, Farkas explanations and ReLU phases are
/// inherited from the parent.
template <typename S>
struct NodeState {
  std::size_t num_query_vars = 0;
  std::vector<Equation<S>> equations;
  BoundProfile<S> bounds;  // query variables followed by slacks
  std::vector<ReluPair> relus;
  std::vector<Phase> phases;
  Tableau<S> initial;

  std::size_t rows() const { return initial.rows(); }
};

namespace detail {

template <typename S>
BoundProfile<S> copy_query_bounds(const BoundProfile<S>& full, std::size_t n_query) {
  BoundProfile<S> out;
  for (VarId v = 0; v < n_query; ++v) {
    out.add_var(full.ground(v, Side::lower), full.ground(v, Side::upper));
    if (!(full.dyn(v, Side::lower) == full.ground(v, Side::lower)))
      out.tighten_dyn(v, Side::lower, full.dyn(v, Side::lower).value(),
                      full.explanation(v, Side::lower));
    if (!(full.dyn(v, Side::upper) == full.ground(v, Side::upper)))
      out.tighten_dyn(v, Side::upper, full.dyn(v, Side::upper).value(),
                      full.explanation(v, Side::upper));
  }
  return out;
}

}  // namespace detail

template <typename S>
NodeState<S> root_state(const Query<S>& query) {
  NodeState<S> st;
  st.num_query_vars = query.num_vars;
  st.equations = query.equations;
  st.relus = query.relus;
  st.phases.assign(query.relus.size(), Phase::unfixed);
  for (VarId v = 0; v < query.num_vars; ++v) st.bounds.add_var(query.lower[v], query.upper[v]);
  st.initial = build_tableau(st.equations, st.num_query_vars, st.bounds);
  return st;
}

/// Fixes one ReLU's phase below `parent`. The child inherits every dynamic
/// bound and explanation; the bounds the split asserts become ground
/// bounds with zeroed Farkas vectors. The active phase appends the
/// equation f = b as a fresh row, which grows m by one (inherited vectors
/// extend with zeros implicitly).
template <typename S>
std::pair<NodeState<S>, ProofNode<S>> apply_split(const NodeState<S>& parent,
                                                  std::size_t relu_index, Phase phase) {
  if (parent.phases[relu_index] != Phase::unfixed) throw AlreadyFixed();
  assert(phase != Phase::unfixed);
  const ReluPair relu = parent.relus[relu_index];

  NodeState<S> child;
  child.num_query_vars = parent.num_query_vars;
  child.equations = parent.equations;
  child.relus = parent.relus;
  child.phases = parent.phases;
  child.phases[relu_index] = phase;
  child.bounds = detail::copy_query_bounds(parent.bounds, parent.num_query_vars);

  ProofNode<S> node;
  node.split = SplitInfo{relu_index, phase};
  const S zero(0);
  if (phase == Phase::active) {
    Equation<S> eq;  // f = b stored as b - f = 0
    eq.terms = {{relu.b, S(1)}, {relu.f, S(-1)}};
    eq.rhs = zero;
    child.equations.push_back(eq);
    node.added_equations.push_back(std::move(eq));
    node.ground_updates.push_back({relu.b, Side::lower, zero});
    child.bounds.reset_ground(relu.b, Side::lower, Bound<S>(zero));
  } else {
    node.ground_updates.push_back({relu.b, Side::upper, zero});
    node.ground_updates.push_back({relu.f, Side::upper, zero});
    node.ground_updates.push_back({relu.f, Side::lower, zero});
    child.bounds.reset_ground(relu.b, Side::upper, Bound<S>(zero));
    child.bounds.reset_ground(relu.f, Side::upper, Bound<S>(zero));
    child.bounds.reset_ground(relu.f, Side::lower, Bound<S>(zero));
  }
  child.initial = build_tableau(child.equations, child.num_query_vars, child.bounds);
  return {std::move(child), std::move(node)};
}

/// Lowest-indexed unfixed ReLU violated by the assignment, if any.
template <typename S>
std::optional<std::size_t> pick_split(const NodeState<S>& state, const std::vector<S>& alpha) {
  for (std::size_t k = 0; k < state.relus.size(); ++k) {
    if (state.phases[k] != Phase::unfixed) continue;
    const S& b = alpha[state.relus[k].b];
    S expected = b.sign() > 0 ? b : S(0);
    if (cmp_bounds(alpha[state.relus[k].f], expected) != 0) return k;
  }
  return std::nullopt;
}

/// One scripted tightening: row index in the node's equation list, the
/// variable to tighten and which of its bounds.
struct LeafScriptStep {
  std::size_t row = 0;
  VarId target = 0;
  Side side = Side::upper;
};

/// Pinned per-leaf schedule for reproducing a specific derivation: the
/// listed tightenings run in order (no pivoting), then the contradiction
/// is built from the named variable. Every step still goes through the
/// regular tightening machinery and must strictly tighten.
struct LeafScript {
  std::vector<LeafScriptStep> steps;
  VarId contradict = 0;
};

enum class VerifyStatus : std::uint8_t { sat, unsat, iteration_limit, certificate_failure };

template <typename S>
struct VerifyOptions {
  EngineConfig engine;
  bool inactive_first = true;
  // Pinned schedules for reproducible runs, keyed by node path ("I"/"A"
  // per split, inactive/active). A node listed in split_script splits that
  // ReLU eagerly instead of solving first.
  std::map<std::string, std::size_t> split_script;
  std::map<std::string, LeafScript> leaf_scripts;
  int jobs = 1;
  bool build_tree = true;
};

template <typename S>
struct VerifyResult {
  VerifyStatus status = VerifyStatus::sat;
  std::vector<S> witness;       // network inputs, when sat
  std::vector<S> assignment;    // full assignment, when sat
  std::optional<ProofTree<S>> proof;
  EngineStats stats;
  std::size_t nodes = 0;
};

namespace detail {

template <typename S>
struct NodeOutcome {
  VerifyStatus status = VerifyStatus::unsat;
  std::vector<S> alpha;
  EngineStats stats;
  std::size_t nodes = 1;
};

template <typename S>
NodeOutcome<S> solve_node(NodeState<S>& state, ProofNode<S>& node, const std::string& path,
                          std::size_t depth, const VerifyOptions<S>& opts);

template <typename S>
NodeOutcome<S> split_and_recurse(NodeState<S>& state, ProofNode<S>& node, std::size_t relu_index,
                                 const std::string& path, std::size_t depth,
                                 const VerifyOptions<S>& opts) {
  Phase first = opts.inactive_first ? Phase::inactive : Phase::active;
  Phase second = opts.inactive_first ? Phase::active : Phase::inactive;
  auto [st1, pn1] = apply_split(state, relu_index, first);
  auto [st2, pn2] = apply_split(state, relu_index, second);
  auto n1 = std::make_unique<ProofNode<S>>(std::move(pn1));
  auto n2 = std::make_unique<ProofNode<S>>(std::move(pn2));
  std::string path1 = path + (first == Phase::inactive ? 'I' : 'A');
  std::string path2 = path + (second == Phase::inactive ? 'I' : 'A');

  NodeOutcome<S> o1, o2;
  if (opts.jobs > 1 && depth < 4) {
    auto f2 = std::async(std::launch::async, [&] { return solve_node(st2, *n2, path2, depth + 1, opts); });
    o1 = solve_node(st1, *n1, path1, depth + 1, opts);
    o2 = f2.get();
  } else {
    o1 = solve_node(st1, *n1, path1, depth + 1, opts);
    if (o1.status == VerifyStatus::sat) {
      o1.nodes += 1;
      return o1;  // no need to explore the sibling
    }
    o2 = solve_node(st2, *n2, path2, depth + 1, opts);
  }

  NodeOutcome<S> out;
  out.stats.absorb(o1.stats);
  out.stats.absorb(o2.stats);
  out.nodes = 1 + o1.nodes + o2.nodes;
  for (auto* o : {&o1, &o2}) {
    if (o->status == VerifyStatus::sat) {
      out.status = VerifyStatus::sat;
      out.alpha = std::move(o->alpha);
      return out;
    }
  }
  if (o1.status != VerifyStatus::unsat || o2.status != VerifyStatus::unsat) {
    out.status = o1.status != VerifyStatus::unsat ? o1.status : o2.status;
    return out;
  }
  out.status = VerifyStatus::unsat;
  node.children.push_back(std::move(n1));
  node.children.push_back(std::move(n2));
  return out;
}

template <typename S>
NodeOutcome<S> run_leaf_script(NodeState<S>& state, ProofNode<S>& node, const LeafScript& script) {
  NodeOutcome<S> out;
  for (const LeafScriptStep& step : script.steps) {
    auto rec = tighten_from_row(state.initial, step.row, state.initial, state.bounds, step.target,
                                step.side, nullptr);
    if (!rec)
      throw std::runtime_error("leaf script step did not tighten (row " +
                               std::to_string(step.row) + ", x" + std::to_string(step.target) + ")");
  }
  if (state.bounds.ground_clash(script.contradict))
    node.contradiction = Contradiction<S>::symbol(script.contradict);
  else
    node.contradiction = build_contradiction(script.contradict, state.bounds, state.rows());
  out.status = VerifyStatus::unsat;
  return out;
}

template <typename S>
NodeOutcome<S> solve_node(NodeState<S>& state, ProofNode<S>& node, const std::string& path,
                          std::size_t depth, const VerifyOptions<S>& opts) {
  if (depth > state.relus.size() + 1)
    throw std::logic_error("split depth exceeds ReLU count");

  // eager splits pinned by the caller take precedence over solving
  if (auto it = opts.split_script.find(path); it != opts.split_script.end())
    return split_and_recurse(state, node, it->second, path, depth, opts);
  if (auto it = opts.leaf_scripts.find(path); it != opts.leaf_scripts.end())
    return run_leaf_script(state, node, it->second);

  NodeOutcome<S> out;
  Tableau<S> tableau = state.initial;
  std::vector<S> alpha(tableau.cols(), S(0));
  SimplexEngine<S> engine(tableau, state.initial, state.bounds, alpha, opts.engine, &state.relus,
                          opts.build_tree ? &node.lemmas : nullptr);
  auto [status, verdict] = engine.solve();
  out.stats = engine.stats();
  if (status == SolveStatus::iteration_limit) {
    out.status = VerifyStatus::iteration_limit;
    return out;
  }
  if (status == SolveStatus::certificate_failure) {
    out.status = VerifyStatus::certificate_failure;
    return out;
  }
  if (!verdict.sat) {
    node.contradiction = std::move(verdict.contradiction);
    out.status = VerifyStatus::unsat;
    return out;
  }
  if (auto relu_index = pick_split(state, verdict.alpha))
    return split_and_recurse(state, node, *relu_index, path, depth, opts);
  out.status = VerifyStatus::sat;
  out.alpha = std::move(verdict.alpha);
  return out;
}

}  // namespace detail

/// Depth-first case-splitting search. UNSAT yields a proof tree whose
/// leaves all carry contradictions; SAT yields a witness projected to the
/// network inputs.
template <typename S>
VerifyResult<S> verify(const Query<S>& query, std::size_t num_inputs,
                       const VerifyOptions<S>& opts = {}) {
  NodeState<S> root = root_state(query);
  auto root_node = std::make_unique<ProofNode<S>>();
  detail::NodeOutcome<S> o = detail::solve_node(root, *root_node, "", 0, opts);

  VerifyResult<S> result;
  result.status = o.status;
  result.stats = o.stats;
  result.nodes = o.nodes;
  if (o.status == VerifyStatus::sat) {
    result.assignment = o.alpha;
    result.witness.assign(o.alpha.begin(), o.alpha.begin() + num_inputs);
  } else if (o.status == VerifyStatus::unsat && opts.build_tree) {
    ProofTree<S> tree;
    tree.query = query;
    tree.num_inputs = num_inputs;
    tree.root = std::move(root_node);
    result.proof = std::move(tree);
  }
  return result;
}

}  // namespace relucert
