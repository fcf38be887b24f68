#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relucert/frontend.hpp"
#include "relucert/proof_io.hpp"
#include "relucert/search.hpp"
#include "relucert/simplex.hpp"
#include "relucert/tighten.hpp"

namespace relucert {

struct CheckIssue {
  std::string path;  // node path, "I"/"A" per split from the root
  std::string reason;
};

struct CheckReport {
  bool accepted = false;
  std::vector<CheckIssue> issues;
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::size_t lemmas = 0;
  std::uint64_t divisions = 0;  // exact divisions performed while checking; must stay 0

  std::vector<std::pair<std::string, std::string>> leaf_status;  // path -> "ok" or reason
};

namespace checker_detail {

struct Ctx {
  std::vector<Equation<Rational>> equations;
  std::vector<std::pair<Bound<Rational>, Bound<Rational>>> grounds;  // query vars
  std::vector<Phase> phases;
};

inline BoundProfile<Rational> make_profile(const Ctx& ctx) {
  BoundProfile<Rational> profile;
  for (const auto& [lo, hi] : ctx.grounds) profile.add_var(lo, hi);
  return profile;
}

/// Shape of each permitted ReLU rule: which side of which member of the
/// (b, f) pair it concludes about, and which bound is the antecedent.
struct RulePattern {
  bool conclusion_on_b;
  Side conclusion_side;
  bool antecedent_on_b;
  Side antecedent_side;
};

inline std::optional<RulePattern> rule_pattern(ReluRule rule) {
  switch (rule) {
    case ReluRule::lb_from_lf: return RulePattern{true, Side::lower, false, Side::lower};
    case ReluRule::lf_from_lb: return RulePattern{false, Side::lower, true, Side::lower};
    case ReluRule::ub_from_uf: return RulePattern{true, Side::upper, false, Side::upper};
    case ReluRule::uf_zero: return RulePattern{false, Side::upper, true, Side::upper};
    case ReluRule::uf_from_ub: return RulePattern{false, Side::upper, true, Side::upper};
  }
  return std::nullopt;
}

/// Bound the rule derives from the reconstructed antecedent, or an error.
/// Conclusions merely implied by the derived bound are acceptable: ground
/// bounds may have tightened after the lemma was emitted, which only makes
/// reconstructions tighter.
inline std::optional<std::string> check_lemma_semantics(ReluRule rule,
                                                        const Bound<Rational>& antecedent,
                                                        const Rational& conclusion) {
  const Bound<Rational> zero{Rational(0)};
  switch (rule) {
    case ReluRule::lb_from_lf:
    case ReluRule::lf_from_lb: {
      if (!antecedent.is_finite() || antecedent.value().sign() <= 0)
        return "rule premise needs a positive finite lower bound, reconstructed " +
               antecedent.str();
      if (cmp(Bound<Rational>(conclusion), antecedent) > 0)
        return "concluded lower bound " + conclusion.str() + " exceeds derived " + antecedent.str();
      return std::nullopt;
    }
    case ReluRule::ub_from_uf: {
      if (cmp(Bound<Rational>(conclusion), antecedent) < 0)
        return "concluded upper bound " + conclusion.str() + " is below derived " +
               antecedent.str();
      return std::nullopt;
    }
    case ReluRule::uf_zero: {
      if (cmp(antecedent, zero) > 0)
        return "rule premise needs a non-positive upper bound, reconstructed " + antecedent.str();
      if (conclusion.sign() < 0) return "concluded upper bound " + conclusion.str() + " is below 0";
      return std::nullopt;
    }
    case ReluRule::uf_from_ub: {
      // u'(f) <= max(u'(b), 0) holds for any phase of the constraint
      Bound<Rational> derived = cmp(antecedent, zero) > 0 ? antecedent : zero;
      if (cmp(Bound<Rational>(conclusion), derived) < 0)
        return "concluded upper bound " + conclusion.str() + " is below derived " + derived.str();
      return std::nullopt;
    }
  }
  return "unknown rule";
}

/// Validates one leaf contradiction against the accumulated LP. Uses only
/// addition, multiplication and comparison.
inline std::optional<std::string> leaf_failure(const Ctx& ctx,
                                               const Contradiction<Rational>& contradiction) {
  if (contradiction.kind == Contradiction<Rational>::Kind::var_symbol) {
    VarId v = contradiction.var;
    if (v >= ctx.grounds.size()) return "contradiction variable out of range";
    if (cmp(ctx.grounds[v].first, ctx.grounds[v].second) > 0) return std::nullopt;
    return "ground bounds of x" + std::to_string(v) + " do not contradict";
  }
  BoundProfile<Rational> profile = make_profile(ctx);
  Tableau<Rational> tableau = build_tableau(ctx.equations, ctx.grounds.size(), profile);
  if (contradiction.w.size() != tableau.rows())
    return "Farkas vector has length " + std::to_string(contradiction.w.size()) + ", node has " +
           std::to_string(tableau.rows()) + " equations";
  std::vector<Rational> row = tableau.combine(contradiction.w);
  Bound<Rational> upper = row_extreme(row, profile, Side::upper, /*use_ground=*/true);
  if (upper.is_pos_inf() || (upper.is_finite() && upper.value().sign() >= 0))
    return "combined row has non-negative upper bound " + upper.str();
  return std::nullopt;
}

}  // namespace checker_detail

/// Work item produced by the structural pass: everything needed to check
/// one leaf independently.
struct LeafCheckJob {
  std::string path;
  checker_detail::Ctx ctx;
  Contradiction<Rational> contradiction;
};

namespace checker_detail {

class StructuralPass {
 public:
  StructuralPass(const ProofFile& proof, CheckReport& report, std::vector<LeafCheckJob>& jobs)
      : proof_(proof), report_(report), jobs_(jobs) {}

  void run() {
    const Query<Rational>& q = proof_.tree.query;

    // the stored LP must be exactly what the network and property encode
    try {
      Query<Rational> expected = encode(proof_.network, proof_.property);
      if (!queries_match(expected, q)) {
        fail("", "stored query does not match the encoding of network and property");
        return;
      }
    } catch (const std::exception& e) {
      fail("", std::string("query cannot be re-encoded: ") + e.what());
      return;
    }
    if (!query_well_formed(q)) return;

    Ctx ctx;
    ctx.equations = q.equations;
    for (std::size_t v = 0; v < q.num_vars; ++v) ctx.grounds.emplace_back(q.lower[v], q.upper[v]);
    ctx.phases.assign(q.relus.size(), Phase::unfixed);
    visit(*proof_.tree.root, ctx, "", /*is_root=*/true);
  }

 private:
  void fail(const std::string& path, std::string reason) {
    report_.accepted = false;
    report_.issues.push_back({path, std::move(reason)});
  }

  bool queries_match(const Query<Rational>& a, const Query<Rational>& b) {
    if (a.num_vars != b.num_vars || a.equations.size() != b.equations.size() ||
        a.relus.size() != b.relus.size())
      return false;
    for (std::size_t i = 0; i < a.equations.size(); ++i)
      if (!same_equation(a.equations[i], b.equations[i])) return false;
    for (std::size_t v = 0; v < a.num_vars; ++v)
      if (!(a.lower[v] == b.lower[v]) || !(a.upper[v] == b.upper[v])) return false;
    for (std::size_t k = 0; k < a.relus.size(); ++k)
      if (a.relus[k].b != b.relus[k].b || a.relus[k].f != b.relus[k].f) return false;
    return true;
  }

  bool query_well_formed(const Query<Rational>& q) {
    for (const auto& eq : q.equations)
      for (const auto& [v, c] : eq.terms)
        if (v >= q.num_vars) {
          fail("", "equation references variable out of range");
          return false;
        }
    for (const auto& r : q.relus)
      if (r.b >= q.num_vars || r.f >= q.num_vars) {
        fail("", "ReLU pair out of range");
        return false;
      }
    return true;
  }

  /// Applies and validates the node's split records, lemma list and leaf
  /// or children structure. `ctx` arrives as the parent state and is
  /// specialized in place for this node.
  void visit(const ProofNode<Rational>& node, Ctx ctx, const std::string& path, bool is_root) {
    ++report_.nodes;
    const Query<Rational>& q = proof_.tree.query;

    if (is_root) {
      if (node.split || !node.added_equations.empty() || !node.ground_updates.empty()) {
        fail(path, "root node must not carry a split");
        return;
      }
    } else {
      if (!validate_split(node, ctx, path)) return;
    }

    // lemmas, in emission order, against the evolving ground bounds
    if (!node.lemmas.empty()) {
      BoundProfile<Rational> profile = make_profile(ctx);
      Tableau<Rational> tableau = build_tableau(ctx.equations, ctx.grounds.size(), profile);
      for (std::size_t i = 0; i < node.lemmas.size(); ++i) {
        ++report_.lemmas;
        if (!check_lemma(node.lemmas[i], profile, tableau, path, i)) return;
      }
      for (std::size_t v = 0; v < ctx.grounds.size(); ++v)
        ctx.grounds[v] = {profile.ground(static_cast<VarId>(v), Side::lower),
                          profile.ground(static_cast<VarId>(v), Side::upper)};
    }

    if (node.is_leaf()) {
      if (!node.contradiction) {
        fail(path, "leaf without contradiction");
        return;
      }
      ++report_.leaves;
      jobs_.push_back(LeafCheckJob{path, std::move(ctx), *node.contradiction});
      return;
    }

    if (node.children.size() != 2) {
      fail(path, "internal node must have exactly two children");
      return;
    }
    const auto &c0 = *node.children[0], &c1 = *node.children[1];
    if (!c0.split || !c1.split) {
      fail(path, "child of an internal node lacks split metadata");
      return;
    }
    if (c0.split->relu_index != c1.split->relu_index) {
      fail(path, "children split different constraints");
      return;
    }
    std::size_t k = c0.split->relu_index;
    if (k >= q.relus.size()) {
      fail(path, "split references a ReLU not present in the query");
      return;
    }
    if (ctx.phases[k] != Phase::unfixed) {
      fail(path, "ReLU split twice along one path");
      return;
    }
    bool phases_ok = (c0.split->phase == Phase::active && c1.split->phase == Phase::inactive) ||
                     (c0.split->phase == Phase::inactive && c1.split->phase == Phase::active);
    if (!phases_ok) {
      fail(path, "children do not cover the two linear phases of the constraint");
      return;
    }
    for (const auto& child : node.children)
      visit(*child, ctx, path + (child->split->phase == Phase::inactive ? 'I' : 'A'), false);
  }

  bool validate_split(const ProofNode<Rational>& node, Ctx& ctx, const std::string& path) {
    const Query<Rational>& q = proof_.tree.query;
    if (!node.split) {
      fail(path, "non-root node without split metadata");
      return false;
    }
    std::size_t k = node.split->relu_index;
    if (k >= q.relus.size()) {
      fail(path, "split references a ReLU not present in the query");
      return false;
    }
    const ReluPair relu = q.relus[k];
    const Rational zero(0);

    std::vector<GroundUpdate<Rational>> expect_updates;
    std::vector<Equation<Rational>> expect_equations;
    if (node.split->phase == Phase::active) {
      Equation<Rational> eq;
      eq.terms = {{relu.b, Rational(1)}, {relu.f, Rational(-1)}};
      eq.rhs = zero;
      expect_equations.push_back(std::move(eq));
      expect_updates.push_back({relu.b, Side::lower, zero});
    } else if (node.split->phase == Phase::inactive) {
      expect_updates.push_back({relu.b, Side::upper, zero});
      expect_updates.push_back({relu.f, Side::upper, zero});
      expect_updates.push_back({relu.f, Side::lower, zero});
    } else {
      fail(path, "split with unfixed phase");
      return false;
    }

    if (node.ground_updates.size() != expect_updates.size()) {
      fail(path, "split bound updates do not match the phase semantics");
      return false;
    }
    for (std::size_t i = 0; i < expect_updates.size(); ++i) {
      const auto &got = node.ground_updates[i], &want = expect_updates[i];
      if (got.var != want.var || got.side != want.side || !(got.value == want.value)) {
        fail(path, "split bound updates do not match the phase semantics");
        return false;
      }
    }
    if (node.added_equations.size() != expect_equations.size()) {
      fail(path, "split equations do not match the phase semantics");
      return false;
    }
    for (std::size_t i = 0; i < expect_equations.size(); ++i) {
      if (!same_equation(node.added_equations[i], expect_equations[i])) {
        fail(path, "split equations do not match the phase semantics");
        return false;
      }
    }

    // apply: ground bounds only ever tighten
    ctx.phases[k] = node.split->phase;
    for (const auto& eq : node.added_equations) ctx.equations.push_back(eq);
    for (const auto& u : node.ground_updates) {
      auto& [lo, hi] = ctx.grounds[u.var];
      if (u.side == Side::lower) {
        if (cmp(Bound<Rational>(u.value), lo) > 0) lo = Bound<Rational>(u.value);
      } else {
        if (cmp(Bound<Rational>(u.value), hi) < 0) hi = Bound<Rational>(u.value);
      }
    }
    return true;
  }

  bool check_lemma(const Lemma<Rational>& lemma, BoundProfile<Rational>& profile,
                   const Tableau<Rational>& tableau, const std::string& path, std::size_t index) {
    const Query<Rational>& q = proof_.tree.query;
    std::string where = "lemma " + std::to_string(index);
    auto pattern = rule_pattern(lemma.rule);
    if (!pattern) {
      fail(path, where + ": unknown rule");
      return false;
    }
    // the (conclusion, antecedent) variables must be the b/f pair of one
    // query constraint, arranged as the rule demands
    bool matched = false;
    for (const auto& relu : q.relus) {
      VarId conclusion = pattern->conclusion_on_b ? relu.b : relu.f;
      VarId antecedent = pattern->antecedent_on_b ? relu.b : relu.f;
      if (lemma.var == conclusion && lemma.antecedent_var == antecedent) {
        matched = true;
        break;
      }
    }
    if (!matched || lemma.side != pattern->conclusion_side ||
        lemma.antecedent_side != pattern->antecedent_side) {
      fail(path, where + ": variables or sides do not fit the rule");
      return false;
    }
    if (lemma.antecedent_explanation.size() != tableau.rows()) {
      fail(path, where + ": antecedent explanation length does not match the node");
      return false;
    }
    Bound<Rational> antecedent = reconstruct_bound(tableau, profile, lemma.antecedent_explanation,
                                                   lemma.antecedent_var, lemma.antecedent_side);
    if (auto err = check_lemma_semantics(lemma.rule, antecedent, lemma.bound)) {
      fail(path, where + ": " + *err);
      return false;
    }
    profile.reset_ground(lemma.var, lemma.side, Bound<Rational>(lemma.bound));
    return true;
  }

  const ProofFile& proof_;
  CheckReport& report_;
  std::vector<LeafCheckJob>& jobs_;
};

}  // namespace checker_detail

/// Validates a proof file: the query echo, every split, every lemma and
/// every leaf certificate. Leaves may be checked in parallel once the
/// sequential structural pass has computed their accumulated states. Runs
/// entirely in exact arithmetic and performs no division.
inline CheckReport check_proof(const ProofFile& proof, int jobs = 1) {
  CheckReport report;
  report.accepted = true;
  std::uint64_t divisions_before = division_count().load();

  std::vector<LeafCheckJob> leaf_jobs;
  checker_detail::StructuralPass pass(proof, report, leaf_jobs);
  pass.run();

  std::vector<std::optional<std::string>> results(leaf_jobs.size());
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      results[i] = checker_detail::leaf_failure(leaf_jobs[i].ctx, leaf_jobs[i].contradiction);
  };
  if (jobs > 1 && leaf_jobs.size() > 1) {
    std::size_t workers = std::min<std::size_t>(jobs, leaf_jobs.size());
    std::vector<std::future<void>> futures;
    std::size_t chunk = (leaf_jobs.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t begin = w * chunk, end = std::min(leaf_jobs.size(), begin + chunk);
      if (begin < end)
        futures.push_back(std::async(std::launch::async, run_range, begin, end));
    }
    for (auto& f : futures) f.get();
  } else {
    run_range(0, leaf_jobs.size());
  }

  for (std::size_t i = 0; i < leaf_jobs.size(); ++i) {
    if (results[i]) {
      report.accepted = false;
      report.issues.push_back({leaf_jobs[i].path, *results[i]});
      report.leaf_status.emplace_back(leaf_jobs[i].path, *results[i]);
    } else {
      report.leaf_status.emplace_back(leaf_jobs[i].path, "ok");
    }
  }

  report.divisions = division_count().load() - divisions_before;
  assert(report.divisions == 0 && "proof checking must not divide");
  return report;
}

// ---------------------------------------------------------------------------
// recovery

enum class RecoverKind { leaf_ok, fresh_proof, grafted, counterexample, inconclusive };

struct RecoverLeafResult {
  RecoverKind kind = RecoverKind::inconclusive;
  Contradiction<Rational> fresh;
  std::vector<Rational> assignment;
};

/// Re-solves a leaf's pure LP with the exact engine. UNSAT yields a fresh,
/// checked contradiction; SAT means the leaf's own claim was wrong.
inline RecoverLeafResult recover_leaf(const checker_detail::Ctx& ctx,
                                      EngineConfig cfg = {}) {
  RecoverLeafResult out;
  BoundProfile<Rational> profile = checker_detail::make_profile(ctx);
  Tableau<Rational> initial = build_tableau(ctx.equations, ctx.grounds.size(), profile);
  Tableau<Rational> tableau = initial;
  std::vector<Rational> alpha(tableau.cols(), Rational(0));
  SimplexEngine<Rational> engine(tableau, initial, profile, alpha, cfg);
  auto [status, verdict] = engine.solve();
  if (status != SolveStatus::verdict) return out;
  if (verdict.sat) {
    out.kind = RecoverKind::counterexample;
    out.assignment = std::move(verdict.alpha);
    return out;
  }
  Contradiction<Rational> fresh = std::move(verdict.contradiction);
  if (fresh.kind == Contradiction<Rational>::Kind::farkas)
    fresh.w = fv_materialize(fresh.w, initial.rows());
  if (checker_detail::leaf_failure(ctx, fresh)) return out;  // engine bug guard
  out.kind = RecoverKind::fresh_proof;
  out.fresh = std::move(fresh);
  return out;
}

struct RecoverReport {
  std::size_t leaves = 0;
  std::size_t failed = 0;
  std::size_t patched = 0;
  std::size_t grafted = 0;
  std::size_t inconclusive = 0;
  bool counterexample_found = false;
  std::vector<Rational> counterexample;  // witness inputs, if found
  bool final_accepted = false;
};

namespace checker_detail {

inline bool recover_node(ProofNode<Rational>& node, Ctx ctx, const ProofFile& proof,
                         EngineConfig cfg, RecoverReport& report) {
  // splits and lemmas were already validated by check_proof; re-apply them
  if (node.split) {
    std::size_t k = node.split->relu_index;
    ctx.phases[k] = node.split->phase;
    for (const auto& eq : node.added_equations) ctx.equations.push_back(eq);
    for (const auto& u : node.ground_updates) {
      auto& [lo, hi] = ctx.grounds[u.var];
      if (u.side == Side::lower) {
        if (cmp(Bound<Rational>(u.value), lo) > 0) lo = Bound<Rational>(u.value);
      } else {
        if (cmp(Bound<Rational>(u.value), hi) < 0) hi = Bound<Rational>(u.value);
      }
    }
  }
  if (!node.lemmas.empty()) {
    BoundProfile<Rational> profile = make_profile(ctx);
    for (const auto& lemma : node.lemmas)
      profile.reset_ground(lemma.var, lemma.side, Bound<Rational>(lemma.bound));
    for (std::size_t v = 0; v < ctx.grounds.size(); ++v)
      ctx.grounds[v] = {profile.ground(static_cast<VarId>(v), Side::lower),
                        profile.ground(static_cast<VarId>(v), Side::upper)};
  }

  if (!node.is_leaf()) {
    bool ok = true;
    for (auto& child : node.children)
      ok = recover_node(*child, ctx, proof, cfg, report) && ok;
    return ok;
  }

  ++report.leaves;
  if (!leaf_failure(ctx, *node.contradiction)) return true;  // already valid
  ++report.failed;

  RecoverLeafResult r = recover_leaf(ctx, cfg);
  if (r.kind == RecoverKind::fresh_proof) {
    node.contradiction = std::move(r.fresh);
    ++report.patched;
    return true;
  }
  if (r.kind == RecoverKind::counterexample) {
    // the pure LP of this leaf is satisfiable; decide the residual query,
    // splitting the still-unfixed constraints, and graft the result
    Query<Rational> residual;
    residual.num_vars = ctx.grounds.size();
    residual.names = proof.tree.query.names;
    residual.equations = ctx.equations;
    for (const auto& [lo, hi] : ctx.grounds) {
      residual.lower.push_back(lo);
      residual.upper.push_back(hi);
    }
    residual.relus = proof.tree.query.relus;
    VerifyOptions<Rational> opts;
    opts.engine = cfg;
    VerifyResult<Rational> vr = verify(residual, proof.tree.num_inputs, opts);
    if (vr.status == VerifyStatus::unsat) {
      ProofNode<Rational>& sub = *vr.proof->root;
      for (auto& lemma : sub.lemmas) node.lemmas.push_back(std::move(lemma));
      node.contradiction = std::move(sub.contradiction);
      node.children = std::move(sub.children);
      ++report.grafted;
      return true;
    }
    if (vr.status == VerifyStatus::sat) {
      report.counterexample_found = true;
      report.counterexample = vr.witness;
      return false;
    }
    ++report.inconclusive;
    return false;
  }
  ++report.inconclusive;
  return false;
}

}  // namespace checker_detail

/// Repairs a proof whose checker run rejected some leaves: each failed
/// leaf is re-solved exactly and patched with a fresh certificate, or
/// replaced by a freshly verified subtree when the leaf's pure LP turns
/// out satisfiable. A satisfiable residual query instead surfaces the
/// counterexample: the original UNSAT verdict was wrong.
inline RecoverReport recover_proof(ProofFile& proof, EngineConfig cfg = {}) {
  RecoverReport report;
  const Query<Rational>& q = proof.tree.query;
  checker_detail::Ctx ctx;
  ctx.equations = q.equations;
  for (std::size_t v = 0; v < q.num_vars; ++v) ctx.grounds.emplace_back(q.lower[v], q.upper[v]);
  ctx.phases.assign(q.relus.size(), Phase::unfixed);
  checker_detail::recover_node(*proof.tree.root, ctx, proof, cfg, report);
  report.final_accepted = check_proof(proof).accepted;
  return report;
}

}  // namespace relucert
