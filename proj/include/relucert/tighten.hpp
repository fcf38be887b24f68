#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "relucert/lp.hpp"

namespace relucert {

struct ExplanationMismatch : std::logic_error {
  using std::logic_error::logic_error;
};

/// ReLU tightening rules for f = ReLU(b). The checker ships the same table.
enum class ReluRule : std::uint8_t {
  lb_from_lf = 1,  // positive l'(f)      =>  l'(b) := l'(f)
  lf_from_lb = 2,  // positive l'(b)      =>  l'(f) := l'(b)
  ub_from_uf = 3,  // any u'(f)           =>  u'(b) := u'(f)
  uf_zero = 4,     // non-positive u'(b)  =>  u'(f) := 0
  uf_from_ub = 5,  // positive u'(b)      =>  u'(f) := u'(b)
};

/// A ReLU-derived ground-bound tightening, recorded with the rule that
/// justifies it and a snapshot of the antecedent's explanation.
template <typename S>
struct Lemma {
  VarId var = 0;
  Side side = Side::upper;
  S bound{};
  ReluRule rule = ReluRule::ub_from_uf;
  VarId antecedent_var = 0;
  Side antecedent_side = Side::upper;
  FarkasVec<S> antecedent_explanation;
};

template <typename S>
struct TightenRecord {
  VarId var = 0;
  Side side = Side::upper;
  S new_bound{};
  FarkasVec<S> explanation;
};

struct TightenStats {
  std::uint64_t applied = 0;
  std::uint64_t recon_exact = 0;
  std::uint64_t recon_tighter = 0;
  std::uint64_t rejected_unexplainable = 0;
};

/// Bound on `var` that the stored explanation re-derives from ground
/// bounds alone. With r = expl^T * A0, the row 0 = sum r_k x_k is read as
/// var = sum_{k != var} r_k x_k + (r_var + 1) var and bounded by interval
/// arithmetic; folding the +1 into r makes that a plain row extreme.
template <typename S>
Bound<S> reconstruct_bound(const Tableau<S>& initial, const BoundProfile<S>& bounds,
                           const FarkasVec<S>& expl, VarId var, Side side) {
  std::vector<S> r = initial.combine(expl);
  r[var] += S(1);
  return row_extreme(r, bounds, side, /*use_ground=*/true);
}

/// Re-derives the dynamic bound of (var, side) from its stored Farkas
/// vector and the ground bounds. Throws if the reconstruction comes out
/// looser than the stored bound; tighter is fine, since ground bounds only
/// ever tighten after a bound is recorded.
template <typename S>
Bound<S> verify_explanation(const Tableau<S>& initial, const BoundProfile<S>& bounds, VarId var,
                            Side side) {
  Bound<S> recon = reconstruct_bound(initial, bounds, bounds.explanation(var, side), var, side);
  const Bound<S>& stored = bounds.dyn(var, side);
  int c = cmp(recon, stored);
  if (side == Side::upper ? c > 0 : c < 0)
    throw ExplanationMismatch("explanation for " + std::string(side_name(side)) + " bound of x" +
                              std::to_string(var) + " reconstructs " + recon.str() +
                              " but the recorded bound is " + stored.str());
  return recon;
}

/// Interval propagation over one tableau row, aimed at `target`. On strict
/// improvement the dynamic bound is updated along with its Farkas vector
///   expl(target) := sum_{c_j > 0} c_j expl_u/l(x_j)
///                 + sum_{c_j < 0} c_j expl_l/u(x_j) + coef(e),
/// where e is the row rescaled so the target's coefficient is -1 and
/// coef(e) is its last m entries. A candidate whose explanation cannot
/// re-derive it from ground bounds is discarded rather than stored.
template <typename S>
std::optional<TightenRecord<S>> tighten_from_row(const Tableau<S>& current, std::size_t row_idx,
                                                 const Tableau<S>& initial,
                                                 BoundProfile<S>& bounds, VarId target, Side side,
                                                 TightenStats* stats = nullptr) {
  const std::vector<S>& raw = current.row(row_idx);
  if (!usable_pivot(raw[target])) return std::nullopt;
  const S scale = S(-1) / raw[target];

  std::size_t m = current.rows();
  Bound<S> candidate{S(0)};
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (j == target || raw[j].is_zero()) continue;
    S c = raw[j] * scale;
    bool take_upper = (c.sign() > 0) == (side == Side::upper);
    candidate.add_scaled(c, bounds.dyn(static_cast<VarId>(j), take_upper ? Side::upper : Side::lower));
  }
  if (!candidate.is_finite()) return std::nullopt;

  int c = cmp(candidate, bounds.dyn(target, side));
  if (side == Side::upper ? c >= 0 : c <= 0) return std::nullopt;

  FarkasVec<S> expl;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (j == target || raw[j].is_zero()) continue;
    S cj = raw[j] * scale;
    bool take_same = (cj.sign() > 0) == (side == Side::upper);
    fv_add_scaled(expl, cj, bounds.explanation(static_cast<VarId>(j), take_same ? side : opposite(side)), m);
  }
  // coef(e): the last m entries of the rescaled row
  if (expl.size() < m) expl.resize(m, S(0));
  std::size_t tail = raw.size() - m;
  for (std::size_t i = 0; i < m; ++i) expl[i] += raw[tail + i] * scale;

  Bound<S> recon = reconstruct_bound(initial, bounds, expl, target, side);
  int rc = cmp(recon, candidate);
  if (side == Side::upper ? rc > 0 : rc < 0) {
    if (stats) ++stats->rejected_unexplainable;
    return std::nullopt;
  }
  if (stats) {
    ++stats->applied;
    rc == 0 ? ++stats->recon_exact : ++stats->recon_tighter;
  }

  TightenRecord<S> rec{target, side, candidate.value(), expl};
  bounds.tighten_dyn(target, side, candidate.value(), std::move(expl));
  return rec;
}

/// Emits every applicable Appendix-style ReLU rule whose conclusion
/// strictly tightens the target's dynamic bound. Conclusions become ground
/// bounds of the current node with zeroed Farkas vectors; antecedent
/// explanations are snapshotted at emission time.
template <typename S>
std::vector<Lemma<S>> relu_propagate(const ReluPair& relu, BoundProfile<S>& bounds,
                                     std::size_t m) {
  std::vector<Lemma<S>> out;
  const S zero(0);
  auto emit = [&](VarId var, Side side, S value, ReluRule rule, VarId avar, Side aside) {
    Lemma<S> lemma{var,  side, value, rule, avar, aside,
                   fv_materialize(bounds.explanation(avar, aside), m)};
    bounds.reset_ground(var, side, Bound<S>(std::move(value)));
    out.push_back(std::move(lemma));
  };

  // (i) positive l'(f) propagates down to b
  {
    const Bound<S>& lf = bounds.dyn(relu.f, Side::lower);
    if (lf.is_finite() && cmp_bounds(lf.value(), zero) > 0 &&
        cmp(lf, bounds.dyn(relu.b, Side::lower)) > 0)
      emit(relu.b, Side::lower, lf.value(), ReluRule::lb_from_lf, relu.f, Side::lower);
  }
  // (ii) positive l'(b) propagates up to f
  {
    const Bound<S>& lb = bounds.dyn(relu.b, Side::lower);
    if (lb.is_finite() && cmp_bounds(lb.value(), zero) > 0 &&
        cmp(lb, bounds.dyn(relu.f, Side::lower)) > 0)
      emit(relu.f, Side::lower, lb.value(), ReluRule::lf_from_lb, relu.b, Side::lower);
  }
  // (iii) any u'(f) caps b
  {
    const Bound<S>& uf = bounds.dyn(relu.f, Side::upper);
    if (uf.is_finite() && cmp(uf, bounds.dyn(relu.b, Side::upper)) < 0)
      emit(relu.b, Side::upper, uf.value(), ReluRule::ub_from_uf, relu.f, Side::upper);
  }
  // (iv) non-positive u'(b) pins u'(f) to 0
  {
    const Bound<S>& ub = bounds.dyn(relu.b, Side::upper);
    if (ub.is_finite() && cmp_bounds(ub.value(), zero) <= 0 &&
        cmp(Bound<S>(zero), bounds.dyn(relu.f, Side::upper)) < 0)
      emit(relu.f, Side::upper, zero, ReluRule::uf_zero, relu.b, Side::upper);
  }
  // (v) positive u'(b) caps f
  {
    const Bound<S>& ub = bounds.dyn(relu.b, Side::upper);
    if (ub.is_finite() && cmp_bounds(ub.value(), zero) > 0 &&
        cmp(ub, bounds.dyn(relu.f, Side::upper)) < 0)
      emit(relu.f, Side::upper, ub.value(), ReluRule::uf_from_ub, relu.b, Side::upper);
  }
  return out;
}

}  // namespace relucert
