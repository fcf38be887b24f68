#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "relucert/lp.hpp"
#include "relucert/tighten.hpp"

namespace relucert {

struct NotContradictory : std::logic_error {
  NotContradictory() : std::logic_error("variable bounds do not contradict") {}
};

struct NoRuleApplicable : std::logic_error {
  NoRuleApplicable() : std::logic_error("no simplex rule applicable (engine bug)") {}
};

/// Why a node is unsatisfiable: either a variable whose ground bounds
/// clash outright, or a Farkas vector whose induced row has a negative
/// upper bound under ground bounds.
template <typename S>
struct Contradiction {
  enum class Kind { var_symbol, farkas };
  Kind kind = Kind::var_symbol;
  VarId var = 0;
  FarkasVec<S> w;

  static Contradiction symbol(VarId v) { return {Kind::var_symbol, v, {}}; }
  static Contradiction farkas_proof(VarId v, FarkasVec<S> w) {
    return {Kind::farkas, v, std::move(w)};
  }
};

template <typename S>
struct Verdict {
  bool sat = false;
  std::vector<S> alpha;             // satisfying assignment when sat
  Contradiction<S> contradiction;   // when unsat
};

enum class SolveStatus { verdict, iteration_limit, certificate_failure };

struct EngineConfig {
  std::uint64_t max_iters = 1'000'000;
  std::uint64_t tighten_budget = 2'000;
  bool track_proofs = true;
};

struct EngineStats {
  std::uint64_t iterations = 0;
  std::uint64_t pivots = 0;
  std::uint64_t updates = 0;
  std::uint64_t lemmas = 0;
  TightenStats tighten;

  void absorb(const EngineStats& o) {
    iterations += o.iterations;
    pivots += o.pivots;
    updates += o.updates;
    lemmas += o.lemmas;
    tighten.applied += o.tighten.applied;
    tighten.recon_exact += o.tighten.recon_exact;
    tighten.recon_tighter += o.tighten.recon_tighter;
    tighten.rejected_unexplainable += o.tighten.rejected_unexplainable;
  }
};

/// w = expl_upper(v) - expl_lower(v). When both explanations are zero the
/// clash lives in the ground bounds themselves and the variable's symbol
/// is the whole proof.
template <typename S>
Contradiction<S> build_contradiction(VarId v, const BoundProfile<S>& bounds, std::size_t m) {
  if (!bounds.dyn_clash(v)) throw NotContradictory();
  const FarkasVec<S>& up = bounds.explanation(v, Side::upper);
  const FarkasVec<S>& lo = bounds.explanation(v, Side::lower);
  if (fv_is_zero(up) && fv_is_zero(lo)) {
    assert(bounds.ground_clash(v));
    return Contradiction<S>::symbol(v);
  }
  FarkasVec<S> w = fv_materialize(up, m);
  fv_add_scaled(w, S(-1), lo, m);
  if (fv_is_zero(w)) {
    assert(bounds.ground_clash(v));
    return Contradiction<S>::symbol(v);
  }
  return Contradiction<S>::farkas_proof(v, std::move(w));
}

template <typename S>
struct StepResult {
  bool terminal = false;
  Verdict<S> verdict;
};

/// Drives the derivation rules of the bounded-variable simplex calculus to
/// a SAT/UNSAT verdict. Rule priority is Failure2 > Failure1 > Success >
/// Update > Pivot, with Bland's rule (lowest VarId) breaking ties for both
/// leaving and entering variables. Dynamic bound tightening runs on each
/// freshly pivoted row, and ReLU propagation after every bound change that
/// touches a constraint's b or f variable.
template <typename S>
class SimplexEngine {
 public:
  SimplexEngine(Tableau<S>& tableau, const Tableau<S>& initial, BoundProfile<S>& bounds,
                std::vector<S>& alpha, EngineConfig cfg = {},
                const std::vector<ReluPair>* relus = nullptr,
                std::vector<Lemma<S>>* lemma_sink = nullptr)
      : tab_(tableau),
        initial_(initial),
        bounds_(bounds),
        alpha_(alpha),
        cfg_(cfg),
        relus_(relus),
        lemma_sink_(lemma_sink) {}

  const EngineStats& stats() const { return stats_; }

  std::pair<SolveStatus, Verdict<S>> solve() {
    if (auto v = failure2()) return {SolveStatus::verdict, std::move(*v)};
    sweep_relus();
    for (std::uint64_t it = 0; it < cfg_.max_iters; ++it) {
      ++stats_.iterations;
      StepResult<S> r = step();
      if (cert_failed_) return {SolveStatus::certificate_failure, {}};
      if (r.terminal) return {SolveStatus::verdict, std::move(r.verdict)};
    }
    return {SolveStatus::iteration_limit, {}};
  }

  /// Applies exactly one derivation rule.
  StepResult<S> step() {
    if (auto v = failure2()) return {true, std::move(*v)};

    // one pass over basic variables: Failure1 beats any pivot
    std::optional<std::pair<std::size_t, bool>> pivot_pick;  // row, below_lower
    VarId pivot_var = 0;
    std::optional<std::pair<std::size_t, bool>> failure_pick;
    VarId failure_var = 0;
    bool any_violation = false;
    for (VarId v = 0; v < tab_.cols(); ++v) {
      std::size_t i = tab_.basic_row(v);
      if (i == Tableau<S>::npos) continue;
      bool below = cmp(alpha_[v], bounds_.dyn(v, Side::lower)) < 0;
      bool above = !below && cmp(alpha_[v], bounds_.dyn(v, Side::upper)) > 0;
      if (!below && !above) continue;
      any_violation = true;
      auto [plus, minus] = slack_sets(tab_, bounds_, alpha_, i);
      const auto& candidates = below ? plus : minus;
      if (candidates.empty()) {
        if (!failure_pick) {
          failure_pick = {i, below};
          failure_var = v;
        }
      } else if (!pivot_pick) {
        pivot_pick = {i, below};
        pivot_var = candidates.front();
      }
    }
    if (failure_pick) return {true, failure1(failure_pick->first, failure_pick->second)};

    // lowest violating non-basic variable, if any
    std::optional<VarId> update_pick;
    for (VarId v = 0; v < tab_.cols() && !update_pick; ++v) {
      if (tab_.is_basic(v)) continue;
      if (cmp(alpha_[v], bounds_.dyn(v, Side::lower)) < 0 ||
          cmp(alpha_[v], bounds_.dyn(v, Side::upper)) > 0)
        update_pick = v;
    }
    if (update_pick) any_violation = true;

    if (!any_violation) {
      Verdict<S> v;
      v.sat = true;
      v.alpha = alpha_;
      return {true, std::move(v)};
    }

    if (update_pick) {
      VarId j = *update_pick;
      const S& a = alpha_[j];
      S delta = cmp(a, bounds_.dyn(j, Side::lower)) < 0
                    ? bounds_.dyn(j, Side::lower).value() - a
                    : bounds_.dyn(j, Side::upper).value() - a;
      update_assignment(tab_, alpha_, j, delta);
      ++stats_.updates;
      return {false, {}};
    }

    if (!pivot_pick) throw NoRuleApplicable();
    tab_.pivot(pivot_pick->first, pivot_var);
    ++stats_.pivots;
    tighten_row(pivot_pick->first);
    return {false, {}};
  }

 private:
  /// A variable whose ground bounds clash outright is preferred: its
  /// symbol certificate stays valid no matter what the rest of the bound
  /// state looks like. Only then are purely dynamic clashes turned into
  /// Farkas proofs, at which point all ground bounds are consistent.
  std::optional<Verdict<S>> failure2() {
    for (VarId v = 0; v < tab_.cols(); ++v) {
      if (!bounds_.ground_clash(v)) continue;
      Verdict<S> out;
      out.sat = false;
      out.contradiction = Contradiction<S>::symbol(v);
      return out;
    }
    for (VarId v = 0; v < tab_.cols(); ++v) {
      if (!bounds_.dyn_clash(v)) continue;
      Verdict<S> out;
      out.sat = false;
      out.contradiction = cfg_.track_proofs
                              ? build_contradiction(v, bounds_, tab_.rows())
                              : Contradiction<S>::symbol(v);
      return out;
    }
    return std::nullopt;
  }

  /// The conflicting row can first deduce a tighter bound for its basic
  /// variable; the resulting dynamic clash then yields the Farkas proof.
  Verdict<S> failure1(std::size_t row, bool below_lower) {
    VarId v = tab_.basic(row);
    Side side = below_lower ? Side::upper : Side::lower;
    if (!cfg_.track_proofs) {
      apply_untracked_tighten(row, v, side);
      Verdict<S> out;
      out.sat = false;
      out.contradiction = Contradiction<S>::symbol(v);
      return out;
    }
    auto rec = tighten_from_row(tab_, row, initial_, bounds_, v, side, &stats_.tighten);
    if (!rec) rec = tighten_ground_only(row, v, side);
    if (!rec || !bounds_.dyn_clash(v)) {
      cert_failed_ = true;
      return {};
    }
    Verdict<S> out;
    out.sat = false;
    out.contradiction = build_contradiction(v, bounds_, tab_.rows());
    return out;
  }

  /// Derives the row bound purely from ground bounds with coef(e) as its
  /// whole explanation; such an explanation reconstructs its bound exactly
  /// by construction.
  std::optional<TightenRecord<S>> tighten_ground_only(std::size_t row, VarId target, Side side) {
    const std::vector<S>& raw = tab_.row(row);
    if (!usable_pivot(raw[target])) return std::nullopt;
    S scale = S(-1) / raw[target];
    std::size_t m = tab_.rows();
    Bound<S> candidate{S(0)};
    for (std::size_t j = 0; j < raw.size(); ++j) {
      if (j == target || raw[j].is_zero()) continue;
      S c = raw[j] * scale;
      bool take_upper = (c.sign() > 0) == (side == Side::upper);
      candidate.add_scaled(c,
                           bounds_.ground(static_cast<VarId>(j), take_upper ? Side::upper : Side::lower));
    }
    if (!candidate.is_finite()) return std::nullopt;
    int cv = cmp(candidate, bounds_.dyn(target, side));
    if (side == Side::upper ? cv >= 0 : cv <= 0) return std::nullopt;
    FarkasVec<S> expl(m, S(0));
    std::size_t tail = raw.size() - m;
    for (std::size_t i = 0; i < m; ++i) expl[i] = raw[tail + i] * scale;
    ++stats_.tighten.applied;
    ++stats_.tighten.recon_exact;
    TightenRecord<S> out{target, side, candidate.value(), expl};
    bounds_.tighten_dyn(target, side, candidate.value(), std::move(expl));
    return out;
  }

  void tighten_row(std::size_t row) {
    if (stats_.tighten.applied >= cfg_.tighten_budget) return;
    VarId v = tab_.basic(row);
    for (Side side : {Side::upper, Side::lower}) {
      bool changed;
      if (cfg_.track_proofs) {
        changed = tighten_from_row(tab_, row, initial_, bounds_, v, side, &stats_.tighten)
                      .has_value();
      } else {
        changed = apply_untracked_tighten(row, v, side);
      }
      if (changed) propagate_relus_for(v);
    }
  }

  /// Same interval propagation without Farkas bookkeeping; used to measure
  /// proof-production overhead.
  bool apply_untracked_tighten(std::size_t row, VarId target, Side side) {
    const std::vector<S>& raw = tab_.row(row);
    if (!usable_pivot(raw[target])) return false;
    S scale = S(-1) / raw[target];
    Bound<S> candidate{S(0)};
    for (std::size_t j = 0; j < raw.size(); ++j) {
      if (j == target || raw[j].is_zero()) continue;
      S c = raw[j] * scale;
      bool take_upper = (c.sign() > 0) == (side == Side::upper);
      candidate.add_scaled(c,
                           bounds_.dyn(static_cast<VarId>(j), take_upper ? Side::upper : Side::lower));
    }
    if (!candidate.is_finite()) return false;
    int cv = cmp(candidate, bounds_.dyn(target, side));
    if (side == Side::upper ? cv >= 0 : cv <= 0) return false;
    ++stats_.tighten.applied;
    bounds_.tighten_dyn(target, side, candidate.value(), {});
    return true;
  }

  void sweep_relus() {
    if (!relus_) return;
    for (const ReluPair& r : *relus_) run_propagation(r);
  }

  void propagate_relus_for(VarId v) {
    if (!relus_) return;
    for (const ReluPair& r : *relus_)
      if (r.b == v || r.f == v) run_propagation(r);
  }

  void run_propagation(const ReluPair& r) {
    auto lemmas = relu_propagate(r, bounds_, tab_.rows());
    stats_.lemmas += lemmas.size();
    if (lemma_sink_ && cfg_.track_proofs)
      for (auto& l : lemmas) lemma_sink_->push_back(std::move(l));
  }

  Tableau<S>& tab_;
  const Tableau<S>& initial_;
  BoundProfile<S>& bounds_;
  std::vector<S>& alpha_;
  EngineConfig cfg_;
  const std::vector<ReluPair>* relus_;
  std::vector<Lemma<S>>* lemma_sink_;
  EngineStats stats_;
  bool cert_failed_ = false;
};

}  // namespace relucert
